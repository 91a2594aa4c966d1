"""Exhaustive enumeration of association histories on tiny instances.

Ground truth for the samplers and the weight engine: every valid history is
generated by brute force and weighted by a deliberately naive pass (explicit
matrix arithmetic, fresh Kalman recursion per history, no caching, scipy's
Gaussian log-pdf).  Slow on purpose; guarded against anything but toy sizes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from .errors import StateSpaceOverflow
from .types import AssociationHistory, Label, MultiSensorAssociation
from .weights import WeightContext

__all__ = ["enumerate_histories", "naive_log_weight"]


def _label_candidates(ctx: WeightContext, j: int) -> list[tuple[int, ...]]:
    counts = ctx.frame(j).counts
    live = [tuple(vec) for vec in itertools.product(
        *[range(m + 1) for m in counts])]
    return [(-1,) * ctx.n_sensors] + live


def _positive_one_to_one(vectors: tuple[tuple[int, ...], ...],
                         n_sensors: int) -> bool:
    for v in range(n_sensors):
        taken = set()
        for vec in vectors:
            i = vec[v]
            if i > 0:
                if i in taken:
                    return False
                taken.add(i)
    return True


def naive_log_weight(hist: AssociationHistory, ctx: WeightContext) -> float:
    """Log-weight of a history, recomputed from first principles."""
    total = 0.0
    motion, sensors = ctx.motion, ctx.sensors
    for j in range(1, hist.k + 1):
        for label in ctx.birth_labels(j):
            span = hist.label_span(label)
            birth = ctx.birth_component(label)
            if span is None:
                total += math.log1p(-birth.prob)
                continue
            start, end = span
            m = np.array(birth.density.mean, dtype=float)
            p = np.array(birth.density.cov, dtype=float)
            part = 0.0
            for t in range(start, end + 1):
                if t == start:
                    part += math.log(birth.prob)
                else:
                    part += math.log(motion.survival_prob(m, label))
                    m = motion.F @ m
                    p = motion.F @ p @ motion.F.T + motion.Q
                vec = hist.step(t).get(label)
                for v, a in enumerate(vec):
                    sensor = sensors[v]
                    p_d = sensor.detection_prob(m, label)
                    if a == 0:
                        part += math.log1p(-p_d)
                        continue
                    z = ctx.frame(t).measurement(v, a)
                    s = sensor.H @ p @ sensor.H.T + sensor.R
                    part += float(
                        multivariate_normal.logpdf(z, mean=sensor.H @ m, cov=s))
                    part += math.log(p_d) - math.log(sensor.clutter_intensity(z))
                    gain = p @ sensor.H.T @ np.linalg.inv(s)
                    m = m + gain @ (z - sensor.H @ m)
                    p = (np.eye(p.shape[0]) - gain @ sensor.H) @ p
            if end < hist.k:
                part += math.log1p(-motion.survival_prob(m, label))
            total += part
    return total


def enumerate_histories(ctx: WeightContext, max_states: int = 1_000_000,
                        normalize: bool = True) -> list[tuple[AssociationHistory, float]]:
    """Every valid history over the context's scans, with its log-weight.

    Weights are normalized to sum to one unless ``normalize`` is False.
    Raises :class:`StateSpaceOverflow` once the partial count passes
    ``max_states``.
    """
    n_sensors = ctx.n_sensors
    partial: list[tuple[MultiSensorAssociation, ...]] = [()]
    for j in range(1, ctx.n_scans + 1):
        candidates = _label_candidates(ctx, j)
        grown: list[tuple[MultiSensorAssociation, ...]] = []
        for steps in partial:
            prev_live: tuple[Label, ...] = ()
            if steps:
                prev_live = steps[-1].live_labels()
            eligible = sorted(set(ctx.birth_labels(j)) | set(prev_live))
            for assignment in itertools.product(candidates, repeat=len(eligible)):
                if not _positive_one_to_one(assignment, n_sensors):
                    continue
                assoc = MultiSensorAssociation(
                    n_sensors, tuple(zip(eligible, assignment)))
                grown.append(steps + (assoc,))
                if len(grown) > max_states:
                    raise StateSpaceOverflow(len(grown), max_states)
        partial = grown
    histories = [AssociationHistory(steps) for steps in partial]
    out = [(h, naive_log_weight(h, ctx)) for h in histories]
    out.sort(key=lambda item: item[0].canonical_key())
    if normalize and out:
        total = float(logsumexp([w for _, w in out]))
        out = [(h, w - total) for h, w in out]
    return out
