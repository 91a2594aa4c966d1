"""Association weights: the per-label birth/survival/death/unborn factors.

Every quantity the samplers need reduces to one recursion per label: start
from the birth density, and for each live scan apply the survival (or birth)
probability, the motion prediction, and one detection factor per sensor.
The log of the accumulated normalizers is the label's association weight;
summing those over all labels (plus the complementary factors of labels that
died or were never born) gives a component's log-weight.

``WeightEngine`` memoizes that recursion by (label, association prefix), so
re-walking a history the samplers have already visited costs dictionary
lookups rather than Kalman passes.  Cached values are exact, never
approximate; dropping the cache changes nothing but speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gaussian import (
    GaussianDensity,
    MotionModel,
    SensorModel,
    TrajectoryPosterior,
    predict,
    psi_weight,
)
from .types import (
    AssociationHistory,
    GlmbComponent,
    Label,
    MeasurementFrame,
    dead_vector,
    is_live_vector,
)

__all__ = [
    "BirthComponent",
    "WeightContext",
    "WeightEngine",
    "update_trajectory",
    "theta_factor",
    "theta_full",
    "component_log_weight",
]

Prefix = tuple[tuple[int, ...], ...]


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else -math.inf


def _log1m(p: float) -> float:
    return math.log1p(-p) if p < 1.0 else -math.inf


@dataclass(frozen=True)
class BirthComponent:
    """One entry of the birth model: appearance probability and initial density."""

    prob: float
    density: GaussianDensity


@dataclass(frozen=True)
class WeightContext:
    """Everything the weight recursion reads: models, births, measurements.

    The same birth components are offered at every scan listed in
    ``birth_scans`` (all scans when None); the label ``(j, i)`` refers to
    ``births[i - 1]`` offered at scan ``j``.
    """

    motion: MotionModel
    sensors: tuple[SensorModel, ...]
    births: tuple[BirthComponent, ...]
    frames: tuple[MeasurementFrame, ...]
    birth_scans: frozenset[int] | None = None

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def n_scans(self) -> int:
        return len(self.frames)

    def frame(self, j: int) -> MeasurementFrame:
        return self.frames[j - 1]

    def births_allowed(self, j: int) -> bool:
        return self.birth_scans is None or j in self.birth_scans

    def birth_labels(self, j: int) -> tuple[Label, ...]:
        if not self.births_allowed(j):
            return ()
        return tuple(Label(j, i + 1) for i in range(len(self.births)))

    def birth_counts(self) -> dict[int, int]:
        return {
            j: len(self.births)
            for j in range(1, self.n_scans + 1)
            if self.births_allowed(j)
        }

    def birth_component(self, label: Label) -> BirthComponent:
        if not self.births_allowed(label.birth_time):
            raise ValueError(f"no births offered at scan {label.birth_time}")
        if not 1 <= label.birth_index <= len(self.births):
            raise ValueError(f"birth index of {label} outside the birth model")
        return self.births[label.birth_index - 1]

    def with_frames(self, frames: Sequence[MeasurementFrame]) -> "WeightContext":
        return WeightContext(self.motion, self.sensors, self.births,
                             tuple(frames), self.birth_scans)


def _live_step(g_prev: GaussianDensity | None, born: bool, label: Label,
               alpha: Sequence[int], ctx: WeightContext,
               j: int) -> tuple[GaussianDensity, float]:
    """One live scan of the recursion: (birth | survive+predict) then V detections."""
    if born:
        comp = ctx.birth_component(label)
        g = comp.density
        log_eta = _log(comp.prob)
    else:
        assert g_prev is not None
        log_eta = _log(ctx.motion.survival_prob(g_prev.mean, label))
        g = predict(g_prev, ctx.motion)
    frame = ctx.frame(j)
    for v, a in enumerate(alpha):
        g, lp = psi_weight(v, a, g, ctx.sensors[v], frame, label)
        log_eta += lp
    return g, log_eta


def update_trajectory(traj: TrajectoryPosterior | None, label: Label,
                      alpha: Sequence[int], ctx: WeightContext,
                      k: int) -> tuple[TrajectoryPosterior | None, float]:
    """Advance one label's trajectory posterior to scan ``k``.

    Four cases, selected by the association vector and the trajectory's span:
    birth (no trajectory yet, live vector at the label's birth scan),
    survival (trajectory through ``k - 1``, live vector), death (trajectory
    through ``k - 1``, dead vector: weight 1 - P_S, posterior untouched), and
    unborn (no trajectory, dead vector at the birth scan: weight 1 - r_B).
    A label already dead before ``k - 1`` is a no-op with log-weight 0.
    """
    alpha = tuple(int(a) for a in alpha)
    live = is_live_vector(alpha)
    if traj is None:
        if label.birth_time != k:
            raise ValueError(
                f"{label} has no trajectory and scan {k} is not its birth scan")
        if not live:
            return None, _log1m(ctx.birth_component(label).prob)
        g, log_eta = _live_step(None, True, label, alpha, ctx, k)
        return TrajectoryPosterior(label, k, k, (g,), log_eta), log_eta
    if traj.end == k - 1:
        last = traj.filtered[-1]
        if not live:
            return traj, _log1m(ctx.motion.survival_prob(last.mean, label))
        g, log_eta = _live_step(last, False, label, alpha, ctx, k)
        return (
            TrajectoryPosterior(label, traj.start, k, traj.filtered + (g,),
                                traj.log_norm + log_eta),
            log_eta,
        )
    if traj.end < k - 1:
        if live:
            raise ValueError(f"{label} died at scan {traj.end} and cannot return")
        return traj, 0.0
    raise ValueError(f"{label} is already updated through scan {traj.end}")


def component_log_weight(hist: AssociationHistory, ctx: WeightContext) -> float:
    """Exact log-weight of a history; -inf when the history is invalid.

    Walks every birth label in label order and chains ``update_trajectory``
    through its scans, which keeps this an independent reference for the
    engine's cached assembly.
    """
    if not hist.is_valid(ctx.birth_counts()):
        return -math.inf
    total = 0.0
    for j in range(1, hist.k + 1):
        for label in ctx.birth_labels(j):
            span = hist.label_span(label)
            subtotal = 0.0
            if span is None:
                _, le = update_trajectory(None, label, dead_vector(ctx.n_sensors),
                                          ctx, j)
                subtotal += le
            else:
                start, end = span
                traj: TrajectoryPosterior | None = None
                for t in range(start, end + 1):
                    traj, le = update_trajectory(traj, label, hist.step(t).get(label),
                                                 ctx, t)
                    subtotal += le
                if end < hist.k:
                    _, le = update_trajectory(traj, label, dead_vector(ctx.n_sensors),
                                              ctx, end + 1)
                    subtotal += le
            total += subtotal
    return total


class WeightEngine:
    """Memoized weight recursion shared by the samplers and drivers.

    Three caches, all keyed by a label's own association prefix (the tuple of
    its live-scan vectors): the filtered density plus accumulated log-weight
    at the end of the prefix, the single-sensor factor tables of the
    sequential sampler, and the future-aware tables of the full sampler.
    Entries are idempotent, so concurrent chains may share an engine.
    """

    def __init__(self, ctx: WeightContext, max_entries: int = 200_000):
        self.ctx = ctx
        self.max_entries = max_entries
        self._state: dict[tuple, tuple[GaussianDensity, float]] = {}
        self._predicted: dict[tuple, GaussianDensity] = {}
        self._factor: dict[tuple, np.ndarray] = {}
        self._full: dict[tuple, np.ndarray] = {}

    def _guard(self, cache: dict) -> None:
        if len(cache) > self.max_entries:
            cache.clear()

    # -- the per-label forward recursion ------------------------------------

    def prefix_state(self, label: Label,
                     prefix: Prefix) -> tuple[GaussianDensity, float]:
        """Filtered density and accumulated log-weight after the prefix.

        ``prefix`` holds the label's live vectors for scans ``s .. s+len-1``;
        the empty prefix returns the birth density with weight 0 (nothing has
        happened yet).
        """
        key = (label, prefix)
        hit = self._state.get(key)
        if hit is not None:
            return hit
        if not prefix:
            result = (self.ctx.birth_component(label).density, 0.0)
        else:
            g_prev, cum = self.prefix_state(label, prefix[:-1])
            j = label.birth_time + len(prefix) - 1
            born = len(prefix) == 1
            g, le = _live_step(None if born else g_prev, born, label,
                               prefix[-1], self.ctx, j)
            result = (g, cum + le)
        self._guard(self._state)
        self._state[key] = result
        return result

    def _predicted_density(self, label: Label, prefix: Prefix) -> GaussianDensity:
        key = (label, prefix)
        hit = self._predicted.get(key)
        if hit is None:
            g, _ = self.prefix_state(label, prefix)
            hit = predict(g, self.ctx.motion)
            self._guard(self._predicted)
            self._predicted[key] = hit
        return hit

    def _step_base(self, label: Label, prefix: Prefix) -> tuple[GaussianDensity, float, float]:
        """(density entering the scan, log live factor, log dead factor)."""
        if not prefix:
            comp = self.ctx.birth_component(label)
            return comp.density, _log(comp.prob), _log1m(comp.prob)
        g_prev, _ = self.prefix_state(label, prefix)
        p_s = self.ctx.motion.survival_prob(g_prev.mean, label)
        return self._predicted_density(label, prefix), _log(p_s), _log1m(p_s)

    # -- factor tables ------------------------------------------------------

    def factor_table(self, label: Label, j: int, v: int,
                     prefix: Prefix) -> np.ndarray:
        """Single-sensor log factors at scan ``j``: index 0 is the dead
        branch, index ``i + 1`` is association index ``i`` (0 = missed).

        Only sensor ``v``'s detection factor enters; that is what makes the
        per-sensor tables of one label independent of each other.
        """
        key = (label, j, v, prefix)
        hit = self._factor.get(key)
        if hit is not None:
            return hit
        if label.birth_time + len(prefix) != j:
            raise ValueError(f"prefix of length {len(prefix)} does not end at "
                             f"scan {j - 1} for {label}")
        g, log_live, log_dead = self._step_base(label, prefix)
        m_v = self.ctx.frame(j).counts[v]
        table = np.empty(m_v + 2)
        table[0] = log_dead
        for i in range(m_v + 1):
            _, lp = psi_weight(v, i, g, self.ctx.sensors[v],
                               self.ctx.frame(j), label)
            table[i + 1] = log_live + lp
        self._guard(self._factor)
        self._factor[key] = table
        return table

    def full_table(self, label: Label, j: int, v: int, prefix: Prefix,
                   future: Prefix, dies: bool) -> np.ndarray:
        """Future-aware log factors: the scan-``j`` factor of sensor ``v``
        times every later factor of the label under its fixed future.

        ``future`` holds the label's live vectors from scan ``j + 1`` on
        (empty when it is dead from ``j + 1``, or when ``j`` is the last
        scan); ``dies`` says whether a death factor applies after the run.
        At ``j`` only sensor ``v`` contributes; later scans apply all
        sensors, so the product over ``v`` of these tables squares nothing
        at scan ``j`` while sharing the future mass.
        """
        key = (label, j, v, prefix, future, dies)
        hit = self._full.get(key)
        if hit is not None:
            return hit
        ctx = self.ctx
        g0, log_live, log_dead = self._step_base(label, prefix)
        m_v = ctx.frame(j).counts[v]
        table = np.empty(m_v + 2)
        table[0] = log_dead
        for i in range(m_v + 1):
            g, lp = psi_weight(v, i, g0, ctx.sensors[v], ctx.frame(j), label)
            val = log_live + lp
            for step, vec in enumerate(future, start=1):
                t = j + step
                val += _log(ctx.motion.survival_prob(g.mean, label))
                g = predict(g, ctx.motion)
                for v2, a2 in enumerate(vec):
                    g, lp2 = psi_weight(v2, a2, g, ctx.sensors[v2],
                                        ctx.frame(t), label)
                    val += lp2
            if dies:
                val += _log1m(ctx.motion.survival_prob(g.mean, label))
            table[i + 1] = val
        self._guard(self._full)
        self._full[key] = table
        return table

    # -- component assembly -------------------------------------------------

    def label_prefix(self, hist: AssociationHistory, label: Label,
                     upto: int | None = None) -> Prefix:
        """The label's live vectors from its birth scan through ``upto``."""
        span = hist.label_span(label)
        if span is None:
            return ()
        start, end = span
        if upto is not None:
            end = min(end, upto)
        return tuple(hist.step(t).get(label) for t in range(start, end + 1))

    def history_log_weight(self, hist: AssociationHistory) -> float:
        """Cached equivalent of :func:`component_log_weight` for valid input."""
        ctx = self.ctx
        total = 0.0
        live = set(hist.all_labels())
        for j in range(1, hist.k + 1):
            for label in ctx.birth_labels(j):
                if label not in live:
                    total += _log1m(ctx.birth_component(label).prob)
                    continue
                prefix = self.label_prefix(hist, label)
                g, subtotal = self.prefix_state(label, prefix)
                if label.birth_time + len(prefix) - 1 < hist.k:
                    subtotal = subtotal + _log1m(
                        ctx.motion.survival_prob(g.mean, label))
                total += subtotal
        return total

    def trajectory(self, label: Label, prefix: Prefix) -> TrajectoryPosterior:
        filtered = tuple(self.prefix_state(label, prefix[:i + 1])[0]
                         for i in range(len(prefix)))
        _, cum = self.prefix_state(label, prefix)
        start = label.birth_time
        return TrajectoryPosterior(label, start, start + len(prefix) - 1,
                                   filtered, cum)

    def build_component(self, hist: AssociationHistory) -> GlmbComponent:
        trajectories = {
            label: self.trajectory(label, self.label_prefix(hist, label))
            for label in hist.all_labels()
        }
        return GlmbComponent(hist, self.history_log_weight(hist), trajectories)


def theta_factor(label: Label, v: int, alpha_v: int, prefix: Prefix,
                 ctx: WeightContext, j: int,
                 engine: WeightEngine | None = None) -> float:
    """Single-sensor log association factor for one candidate index."""
    engine = engine or WeightEngine(ctx)
    return float(engine.factor_table(label, j, v, prefix)[alpha_v + 1])


def theta_full(label: Label, v: int, alpha_v: int, prefix: Prefix,
               future: Prefix, dies: bool, ctx: WeightContext, j: int,
               engine: WeightEngine | None = None) -> float:
    """Future-aware log association factor for one candidate index."""
    engine = engine or WeightEngine(ctx)
    return float(engine.full_table(label, j, v, prefix, future, dies)[alpha_v + 1])
