"""Sequential (factor) Gibbs sampling of one scan's associations.

The chain state is the current scan's association map.  One sweep visits
every eligible label (the scan's birth labels plus the survivors of the
previous scan) and redraws its vector from the per-label conditional: first
an existence flip, then one categorical draw per sensor over the miss and
the measurements not claimed by any other label.  Every sweep's state is
emitted; deduplication and best-subset selection are the callers' business.

The scan-by-scan driver ``factor_sample_joint`` grows full histories by
running this chain once per retained component per scan, which is also the
recursive filter's extension step.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .types import AssociationHistory, GlmbComponent, Label, MultiSensorAssociation
from .weights import Prefix, WeightEngine

__all__ = [
    "SampleStats",
    "chain_rng",
    "beta_mask",
    "sample_coord",
    "factor_sample_coord",
    "factor_gibbs",
    "factor_sample_joint",
]


def chain_rng(master_seed: int, *path: int) -> np.random.Generator:
    """Deterministic per-chain stream: same (seed, path) -> same draws,
    independent of thread scheduling."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(master_seed) & (2**63 - 1), *path]))
    )


@dataclass
class SampleStats:
    """Sweep/coordinate counters, shared across chains (lock-guarded)."""

    coordinates: int = 0
    sweeps: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, coordinates: int = 0, sweeps: int = 0) -> None:
        with self._lock:
            self.coordinates += coordinates
            self.sweeps += sweeps


def beta_mask(v: int, candidate: int, others: set[int] | dict, m_v: int) -> int:
    """0 iff the candidate is a positive index already claimed by another label."""
    if candidate < -1 or candidate > m_v:
        raise ValueError(f"candidate {candidate} outside -1..{m_v}")
    return 0 if candidate > 0 and candidate in others else 1


def _masked_live(table: np.ndarray, claimed: dict[int, Label]) -> np.ndarray:
    """Log masses of the live candidates 0..M with claimed indices removed."""
    live = table[1:].copy()
    for i in claimed:
        live[i] = -np.inf
    return live


def sample_coord(p_plus: float, tables: list[np.ndarray],
                 claimed: list[dict[int, Label]],
                 rng: np.random.Generator) -> tuple[int, ...]:
    """Draw the live vector sensor by sensor, given existence was chosen.

    Each sensor's categorical is over {miss, unclaimed measurements} with the
    factor-table masses; the first sensor's masses additionally carry the
    existence probability, which normalization cancels.
    """
    out = []
    for v, table in enumerate(tables):
        live = _masked_live(table, claimed[v])
        peak = np.max(live)
        if peak == -np.inf:
            # Only possible when even the miss has no mass (P_D = 1 with all
            # measurements claimed); the miss is the only consistent fallback.
            out.append(0)
            continue
        masses = np.exp(live - peak)
        if v == 0:
            masses = masses * p_plus
        total = masses.sum()
        idx = int(np.searchsorted(np.cumsum(masses), rng.random() * total,
                                  side="right"))
        idx = min(idx, masses.size - 1)
        assert idx == 0 or idx not in claimed[v]
        out.append(idx)
    return tuple(out)


def _existence_prob(tables: list[np.ndarray],
                    claimed: list[dict[int, Label]]) -> float:
    """P(live) = prod(Upsilon_v) / (prod(theta_v(-1)) + prod(Upsilon_v)),
    with Upsilon the mask-respecting sum over live candidates."""
    log_dead = sum(float(t[0]) for t in tables)
    log_live = 0.0
    for v, t in enumerate(tables):
        log_live += float(logsumexp(_masked_live(t, claimed[v])))
    if log_live == -math.inf:
        return 0.0
    if log_dead == -math.inf:
        return 1.0
    return float(expit(log_live - log_dead))


def factor_sample_coord(engine: WeightEngine, j: int, label: Label,
                        prefix: Prefix, claimed: list[dict[int, Label]],
                        rng: np.random.Generator) -> tuple[int, ...]:
    """Redraw one label's vector at scan ``j`` from its factor conditional.

    ``claimed`` must not contain the label's own current claims.
    """
    tables = [engine.factor_table(label, j, v, prefix)
              for v in range(engine.ctx.n_sensors)]
    p_plus = _existence_prob(tables, claimed)
    if rng.random() < p_plus:
        return sample_coord(p_plus, tables, claimed, rng)
    return (-1,) * engine.ctx.n_sensors


class _ScanChain:
    """Mutable association state of one scan, with per-sensor claim maps."""

    def __init__(self, engine: WeightEngine, prefix: GlmbComponent, j: int):
        ctx = engine.ctx
        self.engine = engine
        self.j = j
        prev_live: tuple[Label, ...] = ()
        if prefix.history.k:
            prev_live = prefix.history.steps[-1].live_labels()
        self.eligible = sorted(set(ctx.birth_labels(j)) | set(prev_live))
        self.prefixes = {
            label: engine.label_prefix(prefix.history, label)
            for label in self.eligible
        }
        # All-miss initialization: every eligible label exists, nothing is
        # claimed, so the state is trivially valid.
        self.current: dict[Label, tuple[int, ...]] = {
            label: (0,) * ctx.n_sensors for label in self.eligible
        }
        self.claimed: list[dict[int, Label]] = [dict() for _ in range(ctx.n_sensors)]

    def resample(self, label: Label, rng: np.random.Generator) -> None:
        for v, i in enumerate(self.current[label]):
            if i > 0:
                del self.claimed[v][i]
        vec = factor_sample_coord(self.engine, self.j, label,
                                  self.prefixes[label], self.claimed, rng)
        for v, i in enumerate(vec):
            if i > 0:
                assert i not in self.claimed[v], "positive 1-1 violated"
                self.claimed[v][i] = label
        self.current[label] = vec

    def association(self) -> MultiSensorAssociation:
        return MultiSensorAssociation(
            self.engine.ctx.n_sensors,
            tuple((label, vec) for label, vec in self.current.items()),
        )


def factor_gibbs(engine: WeightEngine, prefix: GlmbComponent, sweeps: int,
                 rng: np.random.Generator,
                 stats: SampleStats | None = None) -> list[GlmbComponent]:
    """Extend one component by one scan with ``sweeps`` Gibbs iterations.

    Emits one component per sweep, duplicates included; each carries the
    exact log-weight of its extended history.
    """
    j = prefix.history.k + 1
    if j > engine.ctx.n_scans:
        raise ValueError(f"history already covers all {engine.ctx.n_scans} scans")
    chain = _ScanChain(engine, prefix, j)
    out = []
    for _ in range(sweeps):
        for label in chain.eligible:
            chain.resample(label, rng)
        hist = prefix.history.extended(chain.association())
        out.append(engine.build_component(hist))
        if stats is not None:
            stats.add(coordinates=len(chain.eligible), sweeps=1)
    return out


def dedup_components(components: list[GlmbComponent]) -> list[GlmbComponent]:
    """Drop repeated histories, keeping first occurrences (weights are exact,
    so duplicates carry identical weights and nothing needs merging)."""
    seen: dict[tuple, GlmbComponent] = {}
    for comp in components:
        key = comp.history.canonical_key()
        if key not in seen:
            seen[key] = comp
    return list(seen.values())


def best_components(components: list[GlmbComponent],
                    keep: int | None) -> list[GlmbComponent]:
    """Deterministic best-subset: weight descending, canonical key as the
    tie-break."""
    ranked = sorted(components, key=GlmbComponent.sort_key)
    return ranked if keep is None else ranked[:keep]


def normalize_components(components: list[GlmbComponent]) -> list[GlmbComponent]:
    if not components:
        return []
    total = logsumexp([c.log_weight for c in components])
    return [
        GlmbComponent(c.history, c.log_weight - float(total), c.trajectories)
        for c in components
    ]


def factor_sample_joint(engine: WeightEngine, max_components: int, sweeps: int,
                        seed: int, stats: SampleStats | None = None,
                        threads: int = 1) -> list[GlmbComponent]:
    """Scan-by-scan association sampling over the whole measurement sequence.

    Per scan, every retained component is extended by an independent chain;
    the pooled extensions are deduplicated and the ``max_components`` best by
    weight are kept.  Returned weights are normalized over the final set.
    """
    comps = [GlmbComponent(AssociationHistory(()), 0.0, {})]
    for j in range(1, engine.ctx.n_scans + 1):
        def extend(item: tuple[int, GlmbComponent]) -> list[GlmbComponent]:
            q, comp = item
            return factor_gibbs(engine, comp, sweeps, chain_rng(seed, j, q), stats)

        if threads > 1 and len(comps) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                batches = list(pool.map(extend, enumerate(comps)))
        else:
            batches = [extend(item) for item in enumerate(comps)]
        pooled = [comp for batch in batches for comp in batch]
        comps = best_components(dedup_components(pooled), max_components)
    return normalize_components(comps)
