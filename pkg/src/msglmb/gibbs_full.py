"""Full Gibbs sweeps over all scans of a history.

Where the sequential sampler conditions only on the past, this chain revisits
every (scan, label) coordinate with the rest of the history held fixed, so a
label's conditional sees both its past prefix and its fixed future.  The
future enters twice: through the future-aware factor tables (the mass of the
remaining trajectory under each candidate), and through a hard consistency
mask, since an object that is absent at some scan must stay absent, a dead
draw is only permitted when the label is already absent at the next scan.

Labels outside a scan's eligible set (dead before the scan and not born at
it) are deterministically absent and are never visited.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .types import (
    AssociationHistory,
    GlmbComponent,
    Label,
    MultiSensorAssociation,
    is_live_vector,
)
from .gibbs_factor import SampleStats, _existence_prob, sample_coord
from .weights import WeightEngine

__all__ = ["future_mask", "full_gibbs"]


def future_mask(candidate: Sequence[int], next_assoc: Sequence[int]) -> int:
    """1 if the candidate vector is consistent with the next scan's vector.

    Live candidates are always consistent; the dead vector is consistent only
    when the label is dead at the next scan as well (no resurrection).
    """
    if is_live_vector(candidate):
        return 1
    return 1 if not is_live_vector(next_assoc) else 0


class _FullChain:
    """Mutable whole-history state: per-label scan arrays plus claim maps."""

    def __init__(self, engine: WeightEngine, component: GlmbComponent):
        ctx = engine.ctx
        self.engine = engine
        self.k = ctx.n_scans
        self.n_sensors = ctx.n_sensors
        hist = component.history
        if hist.k != self.k:
            raise ValueError(
                f"component covers {hist.k} scans, context has {self.k}")
        self.state: dict[Label, np.ndarray] = {}
        self.claims: dict[tuple[int, int], dict[int, Label]] = {
            (j, v): {} for j in range(1, self.k + 1) for v in range(self.n_sensors)
        }
        for label in hist.all_labels():
            start, end = hist.label_span(label)  # type: ignore[misc]
            arr = np.full((self.k, self.n_sensors), -1, dtype=np.int64)
            for j in range(start, end + 1):
                vec = hist.step(j).get(label)
                arr[j - 1] = vec
                for v, i in enumerate(vec):
                    if i > 0:
                        self.claims[(j, v)][i] = label
            self.state[label] = arr

    def _alive(self, label: Label, j: int) -> bool:
        if j < 1 or j > self.k:
            return False
        arr = self.state.get(label)
        return arr is not None and arr[j - 1, 0] >= 0

    def eligible(self, j: int) -> list[Label]:
        labels = set(self.engine.ctx.birth_labels(j))
        if j > 1:
            labels.update(l for l in self.state if self._alive(l, j - 1))
        return sorted(labels)

    def _own_prefix(self, label: Label, j: int) -> tuple[tuple[int, ...], ...]:
        if label.birth_time == j:
            return ()
        arr = self.state[label]
        return tuple(tuple(int(x) for x in arr[t - 1])
                     for t in range(label.birth_time, j))

    def _own_future(self, label: Label, j: int) -> tuple[tuple, bool]:
        """(live vectors from j+1 while alive, whether a death factor follows)."""
        arr = self.state.get(label)
        run: list[tuple[int, ...]] = []
        t = j + 1
        while arr is not None and t <= self.k and arr[t - 1, 0] >= 0:
            run.append(tuple(int(x) for x in arr[t - 1]))
            t += 1
        return tuple(run), t <= self.k

    def _release(self, label: Label, j: int) -> None:
        arr = self.state.get(label)
        if arr is None:
            return
        for v, i in enumerate(arr[j - 1]):
            if i > 0:
                del self.claims[(j, v)][int(i)]

    def _write(self, label: Label, j: int, vec: tuple[int, ...]) -> None:
        arr = self.state.get(label)
        if arr is None:
            arr = np.full((self.k, self.n_sensors), -1, dtype=np.int64)
            self.state[label] = arr
        arr[j - 1] = vec
        for v, i in enumerate(vec):
            if i > 0:
                assert i not in self.claims[(j, v)], "positive 1-1 violated"
                self.claims[(j, v)][i] = label

    def resample(self, label: Label, j: int, rng: np.random.Generator) -> None:
        self._release(label, j)
        prefix = self._own_prefix(label, j)
        future, dies = self._own_future(label, j)
        tables = [
            self.engine.full_table(label, j, v, prefix, future, dies)
            for v in range(self.n_sensors)
        ]
        claimed = [self.claims[(j, v)] for v in range(self.n_sensors)]
        alive_next = self._alive(label, j + 1)
        # The consistency mask zeroes the dead branch of a label that is
        # alive at the next scan; the flip then degenerates to "exists".
        p_plus = 1.0 if alive_next else _existence_prob(tables, claimed)
        if p_plus >= 1.0 or rng.random() < p_plus:
            vec = sample_coord(p_plus, tables, claimed, rng)
        else:
            vec = (-1,) * self.n_sensors
            assert not alive_next, "dead draw for a label alive at the next scan"
        self._write(label, j, vec)

    def history(self) -> AssociationHistory:
        steps = []
        for j in range(1, self.k + 1):
            entries = tuple(
                (label, tuple(int(x) for x in arr[j - 1]))
                for label, arr in self.state.items()
                if arr[j - 1, 0] >= 0
            )
            steps.append(MultiSensorAssociation(self.n_sensors, entries))
        return AssociationHistory(tuple(steps))


def full_gibbs(engine: WeightEngine, component: GlmbComponent, sweeps: int,
               rng: np.random.Generator,
               stats: SampleStats | None = None) -> list[GlmbComponent]:
    """Run ``sweeps`` full space-time sweeps from the given component.

    One component is emitted per sweep with its exact recomputed log-weight;
    nothing is deduplicated here.
    """
    chain = _FullChain(engine, component)
    out = []
    for _ in range(sweeps):
        coords = 0
        for j in range(1, chain.k + 1):
            for label in chain.eligible(j):
                chain.resample(label, j, rng)
                coords += 1
        out.append(engine.build_component(chain.history()))
        if stats is not None:
            stats.add(coordinates=coords, sweeps=1)
    return out
