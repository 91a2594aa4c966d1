"""Top-level drivers: batch smoothing, recursive smoothing-while-filtering,
trajectory estimation, and posterior ensemble statistics.

The batch driver grows histories scan by scan with the sequential sampler,
then refines the best of them with full space-time sweeps.  The recursive
driver keeps a normalized posterior at every scan: each new scan extends the
retained components (that alone is the window-one filter), and optionally
re-runs full sweeps over the whole history so past estimates keep improving
as data arrives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import logsumexp

from .gaussian import smooth
from .gibbs_factor import (
    SampleStats,
    best_components,
    chain_rng,
    dedup_components,
    factor_gibbs,
    factor_sample_joint,
    normalize_components,
)
from .gibbs_full import full_gibbs
from .types import AssociationHistory, GlmbComponent, Label, MultiSensorAssociation
from .weights import WeightContext, WeightEngine

__all__ = [
    "TrackerParams",
    "GlmbPosterior",
    "TrackEstimate",
    "batch",
    "smoothing_while_filtering",
    "recursive_track",
    "estimate",
    "statistics",
]


@dataclass(frozen=True)
class TrackerParams:
    """Sampler budgets.

    init_components/init_sweeps drive the scan-by-scan initializer,
    refine_components selects how many of its results get full-sweep
    refinement of refine_sweeps each, keep is the posterior's component cap.
    The recursive driver divides extend_budget sweeps among a scan's
    components (proportional to weight, at least one each) and prunes to
    keep_intermediate between the extension and refinement stages.
    """

    init_components: int = 50
    init_sweeps: int = 20
    refine_components: int = 20
    refine_sweeps: int = 30
    keep: int = 50
    extend_budget: int = 200
    keep_intermediate: int = 50


def empty_component() -> GlmbComponent:
    return GlmbComponent(AssociationHistory(()), 0.0, {})


@dataclass(frozen=True)
class GlmbPosterior:
    """Normalized posterior: components sorted best-first, pairwise distinct."""

    components: tuple[GlmbComponent, ...]
    k: int
    context: WeightContext | None = None

    def __post_init__(self) -> None:
        keys = [c.history.canonical_key() for c in self.components]
        if len(set(keys)) != len(keys):
            raise ValueError("posterior components must have distinct histories")
        total = float(logsumexp([c.log_weight for c in self.components]))
        if abs(math.expm1(total)) > 1e-9:
            raise ValueError(f"weights sum to {math.exp(total)}, not 1")

    def weights(self) -> np.ndarray:
        return np.exp([c.log_weight for c in self.components])

    def to_json_dict(self) -> dict:
        comps = []
        for c in self.components:
            labels = []
            for label in c.history.all_labels():
                start, end = c.history.label_span(label)  # type: ignore[misc]
                labels.append({"label": [label.birth_time, label.birth_index],
                               "s": start, "t": end})
            comps.append({
                "log_weight": c.log_weight,
                "history": c.history.canonical_records(),
                "labels": labels,
            })
        return {"k": self.k, "components": comps}

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def from_json_dict(cls, data: dict) -> "GlmbPosterior":
        k = int(data["k"])
        n_sensors = 0
        for comp in data["components"]:
            for rec in comp["history"]:
                if rec["assocs"]:
                    n_sensors = len(rec["assocs"][0])
                    break
        comps = []
        for comp in data["components"]:
            per_scan: list[dict[Label, tuple[int, ...]]] = [dict() for _ in range(k)]
            for rec in comp["history"]:
                s, i = rec["label"]
                label = Label(int(s), int(i))
                for offset, vec in enumerate(rec["assocs"]):
                    per_scan[s - 1 + offset][label] = tuple(int(x) for x in vec)
            steps = tuple(
                MultiSensorAssociation.from_mapping(n_sensors, mapping)
                for mapping in per_scan
            )
            comps.append(GlmbComponent(AssociationHistory(steps),
                                       float(comp["log_weight"]), {}))
        return cls(tuple(comps), k)


def assemble_posterior(components: list[GlmbComponent], k: int,
                       engine: WeightEngine,
                       keep: int | None) -> GlmbPosterior:
    # Pools may mix normalized and raw weights; rebuilding from the engine
    # restores one exact scale before anything is truncated.
    unique = dedup_components(components)
    rebuilt = [engine.build_component(c.history) for c in unique]
    kept = best_components(rebuilt, keep)
    return GlmbPosterior(tuple(normalize_components(kept)), k, engine.ctx)


def _parallel(items: list, fn, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def batch(engine: WeightEngine, params: TrackerParams, seed: int,
          stats: SampleStats | None = None, threads: int = 1) -> GlmbPosterior:
    """Whole-sequence smoothing: initialize scan by scan, refine with full
    sweeps, keep the best distinct components."""
    ctx = engine.ctx
    init = factor_sample_joint(engine, params.init_components,
                               params.init_sweeps, seed, stats, threads)
    chosen = best_components(init, min(params.refine_components, len(init)))

    def refine(item: tuple[int, GlmbComponent]) -> list[GlmbComponent]:
        q, comp = item
        return full_gibbs(engine, comp, params.refine_sweeps,
                          chain_rng(seed, 0, q), stats)

    batches = _parallel(list(enumerate(chosen)), refine, threads)
    # The refined pool keeps its seeds: they are exact-weight components too,
    # and the best initial history should never be lost to sweep churn.
    pooled = list(chosen) + [c for b in batches for c in b]
    return assemble_posterior(pooled, ctx.n_scans, engine, params.keep)


def _sweep_allocation(weights: np.ndarray, budget: int) -> list[int]:
    """Proportional integer split with a floor of one and an exact total."""
    n = len(weights)
    budget = max(budget, n)
    raw = weights * (budget - n)
    alloc = [1 + int(math.floor(r)) for r in raw]
    remainder = budget - sum(alloc)
    order = sorted(range(n), key=lambda i: (-(raw[i] - math.floor(raw[i])), i))
    for i in order[:remainder]:
        alloc[i] += 1
    return alloc


def smoothing_while_filtering(engine: WeightEngine, prev: GlmbPosterior,
                              params: TrackerParams, seed: int,
                              stats: SampleStats | None = None,
                              threads: int = 1,
                              refine: bool = True) -> GlmbPosterior:
    """Advance the posterior by the newly arrived scan.

    Extension alone (refine=False) is the window-one filter; with
    refinement, full sweeps revisit the entire history under the new data.
    """
    ctx = engine.ctx
    k = ctx.n_scans
    if prev.k != k - 1:
        raise ValueError(f"posterior covers {prev.k} scans, expected {k - 1}")
    alloc = _sweep_allocation(prev.weights(), params.extend_budget)

    def extend(item: tuple[int, GlmbComponent]) -> list[GlmbComponent]:
        h, comp = item
        return factor_gibbs(engine, comp, alloc[h], chain_rng(seed, k, 1, h),
                            stats)

    batches = _parallel(list(enumerate(prev.components)), extend, threads)
    pooled = [c for b in batches for c in b]
    extended = best_components(dedup_components(pooled), params.keep_intermediate)
    if not refine:
        return assemble_posterior(extended, k, engine, params.keep)

    def refine_one(item: tuple[int, GlmbComponent]) -> list[GlmbComponent]:
        h, comp = item
        return full_gibbs(engine, comp, params.refine_sweeps,
                          chain_rng(seed, k, 2, h), stats)

    batches = _parallel(list(enumerate(extended)), refine_one, threads)
    pooled = list(extended) + [c for b in batches for c in b]
    return assemble_posterior(pooled, k, engine, params.keep)


def recursive_track(ctx: WeightContext, params: TrackerParams, seed: int,
                    stats: SampleStats | None = None, threads: int = 1,
                    refine: bool = True) -> list[GlmbPosterior]:
    """Run the recursive driver over all scans, returning every per-scan
    posterior (the last one is the full smoothing result)."""
    frames = ctx.frames
    engine = WeightEngine(ctx.with_frames(()))
    prev = GlmbPosterior((empty_component(),), 0, engine.ctx)
    out = []
    for k in range(1, len(frames) + 1):
        engine.ctx = ctx.with_frames(frames[:k])
        prev = smoothing_while_filtering(engine, prev, params, seed, stats,
                                         threads, refine)
        out.append(prev)
    return out


@dataclass(frozen=True)
class TrackEstimate:
    """Point-estimate of one trajectory: per-scan means over the live span."""

    label: Label
    start: int
    end: int
    means: np.ndarray
    covariances: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        if self.means.shape[0] != self.end - self.start + 1:
            raise ValueError("estimate length does not match span")

    def state_at(self, j: int) -> np.ndarray:
        return self.means[j - self.start]


def _cardinality_mode(card: dict[int, float]) -> int:
    return min(card, key=lambda n: (-card[n], n))


def estimate(post: GlmbPosterior, mode: str = "smoothed") -> list[TrackEstimate]:
    """Extract trajectories from the most probable trajectory count.

    Picks the mode of the trajectory-count distribution (ties go to the
    smaller count), then the heaviest component with that count, and reads
    its labels' means, backward-smoothed unless mode='filtered'.
    """
    if mode not in ("smoothed", "filtered"):
        raise ValueError(f"unknown estimate mode {mode!r}")
    card = statistics(post)["cardinality"]
    n_star = _cardinality_mode(card)
    candidates = [c for c in post.components if c.n_tracks == n_star]
    best = min(candidates, key=GlmbComponent.sort_key)
    if n_star == 0:
        return []
    if post.context is None:
        raise ValueError("posterior has no model context; estimates need one")
    out = []
    for label in best.history.all_labels():
        traj = best.trajectories[label]
        if mode == "smoothed":
            densities = smooth(traj, post.context.motion)
        else:
            densities = traj.filtered
        means = np.stack([g.mean for g in densities])
        covs = tuple(g.cov for g in densities)
        out.append(TrackEstimate(label, traj.start, traj.end, means, covs))
    return out


def statistics(post: GlmbPosterior) -> dict:
    """Posterior ensemble distributions.

    Returns the trajectory-count distribution, the per-scan birth and death
    count distributions, and the trajectory-length distribution.  The length
    distribution averages within-component length frequencies and excludes
    the zero-trajectory components (their length frequency is undefined),
    renormalizing over the rest; it is empty when no component has tracks.
    """
    card: dict[int, float] = {}
    births: dict[int, dict[int, float]] = {u: {} for u in range(1, post.k + 1)}
    deaths: dict[int, dict[int, float]] = {u: {} for u in range(1, post.k + 1)}
    length: dict[int, float] = {}
    nonempty_mass = 0.0
    for comp in post.components:
        p = math.exp(comp.log_weight)
        labels = comp.history.all_labels()
        card[len(labels)] = card.get(len(labels), 0.0) + p
        spans = {label: comp.history.label_span(label) for label in labels}
        for u in range(1, post.k + 1):
            nb = sum(1 for label in labels if label.birth_time == u)
            nd = sum(1 for label, span in spans.items() if span[1] == u)
            births[u][nb] = births[u].get(nb, 0.0) + p
            deaths[u][nd] = deaths[u].get(nd, 0.0) + p
        if labels:
            nonempty_mass += p
            share = p / len(labels)
            for span in spans.values():
                m = span[1] - span[0] + 1
                length[m] = length.get(m, 0.0) + share
    if nonempty_mass > 0.0:
        length = {m: v / nonempty_mass for m, v in length.items()}
    return {"cardinality": card, "births": births, "deaths": deaths,
            "length": length}
