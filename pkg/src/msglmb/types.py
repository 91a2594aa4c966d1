"""Core vocabulary: labels, association maps, histories, measurement frames.

An object born at scan ``s`` as the ``i``-th birth of that scan carries the
label ``(s, i)`` for its whole life.  At every scan each label is mapped to a
vector of per-sensor indices: ``-1`` means the object does not exist, ``0``
means it exists but sensor ``v`` missed it, and ``i > 0`` means it generated
the ``i``-th measurement of sensor ``v``.  A label's vector is either all
``-1`` (dead) or all ``>= 0`` (alive); mixed vectors are rejected at
construction.

Histories collect one association map per scan and are the sampled object
throughout the package.  Their canonical serialization (sorted per-label
records of live-time vectors) doubles as the deduplication key and as the
on-disk JSON form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Label",
    "DEAD",
    "MultiSensorAssociation",
    "AssociationHistory",
    "MeasurementFrame",
    "GlmbComponent",
    "dead_vector",
    "is_live_vector",
]


class Label(NamedTuple):
    """Object identity: scan of birth plus an index separating same-scan births.

    Tuple ordering gives the total order (birth scan first, then index).
    """

    birth_time: int
    birth_index: int


DEAD = -1


def dead_vector(n_sensors: int) -> tuple[int, ...]:
    return (DEAD,) * n_sensors


def is_live_vector(vec: Sequence[int]) -> bool:
    """True if every entry is >= 0.  A valid vector is never mixed."""
    return all(v >= 0 for v in vec)


@dataclass(frozen=True)
class MultiSensorAssociation:
    """Association map of one scan: label -> per-sensor index vector.

    Only live labels are stored; any label not present maps implicitly to the
    all ``-1`` vector.  This keeps equality and hashing honest (storing an
    explicit dead entry would create two representations of the same map) and
    keeps per-scan memory proportional to the number of live objects.
    """

    n_sensors: int
    entries: tuple[tuple[Label, tuple[int, ...]], ...] = ()

    def __post_init__(self) -> None:
        seen: set[Label] = set()
        kept = []
        for label, vec in self.entries:
            vec = tuple(int(v) for v in vec)
            if len(vec) != self.n_sensors:
                raise ValueError(f"vector {vec} has wrong sensor count")
            if label in seen:
                raise ValueError(f"duplicate label {label}")
            seen.add(label)
            if all(v == DEAD for v in vec):
                continue
            if not is_live_vector(vec):
                raise ValueError(f"mixed vector {vec} for {label}: an object "
                                 "is either absent everywhere or present everywhere")
            kept.append((Label(*label), vec))
        kept.sort()
        object.__setattr__(self, "entries", tuple(kept))

    @classmethod
    def from_mapping(cls, n_sensors: int,
                     mapping: Mapping[Label, Sequence[int]]) -> "MultiSensorAssociation":
        return cls(n_sensors, tuple((l, tuple(v)) for l, v in mapping.items()))

    def get(self, label: Label) -> tuple[int, ...]:
        for l, vec in self.entries:
            if l == label:
                return vec
        return dead_vector(self.n_sensors)

    def live_labels(self) -> tuple[Label, ...]:
        return tuple(l for l, _ in self.entries)

    def is_positive_one_to_one(self) -> bool:
        """No two labels claim the same positive measurement index of a sensor."""
        for v in range(self.n_sensors):
            claimed: set[int] = set()
            for _, vec in self.entries:
                i = vec[v]
                if i > 0:
                    if i in claimed:
                        return False
                    claimed.add(i)
        return True

    def __iter__(self) -> Iterator[tuple[Label, tuple[int, ...]]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class AssociationHistory:
    """Association maps for scans 1..k (scan 0 is empty by convention)."""

    steps: tuple[MultiSensorAssociation, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def k(self) -> int:
        return len(self.steps)

    @property
    def n_sensors(self) -> int:
        return self.steps[0].n_sensors if self.steps else 0

    def step(self, j: int) -> MultiSensorAssociation:
        """Association map at scan j (1-based)."""
        return self.steps[j - 1]

    def all_labels(self) -> tuple[Label, ...]:
        labels: set[Label] = set()
        for s in self.steps:
            labels.update(s.live_labels())
        return tuple(sorted(labels))

    def label_span(self, label: Label) -> tuple[int, int] | None:
        """(first, last) live scan of the label, or None if never alive."""
        first = last = None
        for j, s in enumerate(self.steps, start=1):
            if is_live_vector(s.get(label)):
                if first is None:
                    first = j
                last = j
        if first is None:
            return None
        return first, last

    def is_valid(self, birth_counts: Mapping[int, int] | None = None) -> bool:
        """Check positive 1-1 at every scan plus temporal validity.

        Temporal validity: a label is alive exactly on the contiguous range
        starting at its birth scan (no early appearance, no resurrection).
        ``birth_counts`` optionally bounds the birth index per scan.
        """
        for s in self.steps:
            if not s.is_positive_one_to_one():
                return False
        for label in self.all_labels():
            span = self.label_span(label)
            assert span is not None
            first, last = span
            if first != label.birth_time:
                return False
            if label.birth_index < 1:
                return False
            for j in range(first, last + 1):
                if not is_live_vector(self.step(j).get(label)):
                    return False
            if birth_counts is not None:
                if label.birth_index > birth_counts.get(label.birth_time, 0):
                    return False
        return True

    def canonical_key(self) -> tuple:
        """Hashable exact identity, used for deduplication and tie-breaking.

        Sorted per-label records of (birth scan, birth index, live-time
        vectors); dead time steps are implied by the record's length, so two
        equal maps always produce the same key.
        """
        records = []
        for label in self.all_labels():
            first, last = self.label_span(label)  # type: ignore[misc]
            vecs = tuple(self.step(j).get(label) for j in range(first, last + 1))
            records.append((label.birth_time, label.birth_index, vecs))
        return (self.k, tuple(records))

    def canonical_records(self) -> list[dict]:
        """JSON-ready form: [{label: [s, i], assocs: [[v1..vV], ...]}, ...]."""
        out = []
        for s, i, vecs in self.canonical_key()[1]:
            out.append({"label": [s, i], "assocs": [list(v) for v in vecs]})
        return out

    def canonical_bytes(self) -> bytes:
        return json.dumps(
            {"k": self.k, "tracks": self.canonical_records()},
            separators=(",", ":"),
        ).encode()

    def extended(self, assoc: MultiSensorAssociation) -> "AssociationHistory":
        return AssociationHistory(self.steps + (assoc,))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MeasurementFrame:
    """The per-sensor measurement sets of one scan.

    ``sensors[v]`` is an (M_v, dim) array; indices are 1-based at the API
    boundary (index ``i`` refers to row ``i - 1``), matching the association
    convention where ``0`` is reserved for a missed detection.
    """

    sensors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sensors", tuple(_freeze(s) for s in self.sensors))
        dims = {s.shape[1] for s in self.sensors if s.size}
        if len(dims) > 1:
            raise ValueError(f"inconsistent measurement dimensions {dims}")

    @classmethod
    def from_lists(cls, per_sensor: Iterable[Iterable[Sequence[float]]],
                   dim: int = 3) -> "MeasurementFrame":
        arrays = []
        for sensor in per_sensor:
            rows = [np.asarray(z, dtype=float) for z in sensor]
            arrays.append(np.array(rows) if rows else np.empty((0, dim)))
        return cls(tuple(arrays))

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.sensors)

    def measurement(self, v: int, i: int) -> np.ndarray:
        """Measurement ``i`` (1-based) of sensor ``v`` (0-based)."""
        if i < 1 or i > self.sensors[v].shape[0]:
            raise IndexError(f"measurement {i} out of range for sensor {v}")
        return self.sensors[v][i - 1]


@dataclass(frozen=True)
class GlmbComponent:
    """One posterior term: a history, its log-weight, per-label trajectories.

    ``trajectories`` is keyed by exactly the labels that are ever alive in
    ``history``; the weight is exact for the history (computed, not
    estimated), so deduplicating components never needs weight merging.
    """

    history: AssociationHistory
    log_weight: float
    trajectories: Mapping[Label, object] = field(default_factory=dict)

    def sort_key(self) -> tuple:
        """Deterministic 'best first' ordering: weight desc, then canonical key."""
        return (-self.log_weight, self.history.canonical_key())

    @property
    def n_tracks(self) -> int:
        return len(self.history.all_labels())
