"""Shared helpers and independent oracles for the test suite.

Everything here recomputes results through deliberately different code
paths (quadrature, dense joint Gaussians, brute-force enumeration) so the
library under test never checks itself against itself.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from msglmb.gaussian import GaussianDensity, MotionModel, SensorModel
from msglmb.types import MeasurementFrame
from msglmb.weights import BirthComponent, WeightContext


def quadrature_marginal(m: float, p: float, h: float, r: float,
                        z: float) -> float:
    """Marginal likelihood of one scalar measurement by numerical integration."""
    sd = math.sqrt(p)

    def integrand(x: float) -> float:
        return norm.pdf(z, loc=h * x, scale=math.sqrt(r)) * \
            norm.pdf(x, loc=m, scale=sd)

    lo, hi = m - 12.0 * sd, m + 12.0 * sd
    value, _ = quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200)
    return value


def joint_smoothed_marginals(prior: GaussianDensity, motion: MotionModel,
                             sensor: SensorModel,
                             observations: list[np.ndarray | None],
                             ) -> list[GaussianDensity]:
    """Per-step posterior marginals from one dense joint Gaussian.

    The state sequence (x_1, ..., x_T) is stacked into a single Gaussian,
    conditioned on every non-None observation at once, and marginalized.
    """
    d = prior.mean.shape[0]
    steps = len(observations)
    mean = np.zeros(steps * d)
    cov = np.zeros((steps * d, steps * d))
    mean[:d] = prior.mean
    cov[:d, :d] = prior.cov
    for t in range(1, steps):
        a, b = (t - 1) * d, t * d
        mean[b:b + d] = motion.F @ mean[a:a + d]
        prev_rows = cov[:b, a:a + d]
        cov[:b, b:b + d] = prev_rows @ motion.F.T
        cov[b:b + d, :b] = cov[:b, b:b + d].T
        cov[b:b + d, b:b + d] = motion.F @ cov[a:a + d, a:a + d] @ motion.F.T \
            + motion.Q
    for t, z in enumerate(observations):
        if z is None:
            continue
        b = t * d
        big_h = np.zeros((sensor.H.shape[0], steps * d))
        big_h[:, b:b + d] = sensor.H
        s = big_h @ cov @ big_h.T + sensor.R
        gain = cov @ big_h.T @ np.linalg.inv(s)
        mean = mean + gain @ (z - big_h @ mean)
        cov = cov - gain @ big_h @ cov
    out = []
    for t in range(steps):
        b = t * d
        block = cov[b:b + d, b:b + d]
        out.append(GaussianDensity(mean[b:b + d].copy(),
                                   0.5 * (block + block.T)))
    return out


def brute_force_ospa(x: list[np.ndarray], y: list[np.ndarray], cutoff: float,
                     order: float) -> float:
    """Cutoff metric by enumerating every injection of the smaller set."""
    n, m = len(x), len(y)
    if n == 0 and m == 0:
        return 0.0
    if n == 0 or m == 0:
        return cutoff
    if n > m:
        x, y, n, m = y, x, m, n
    xs = np.stack(x)
    ys = np.stack(y)
    dists = np.linalg.norm(xs[:, None, :] - ys[None, :, :], axis=2)
    dists = np.minimum(dists, cutoff) ** order
    injections = np.array(list(itertools.permutations(range(m), n)))
    matched = dists[np.arange(n)[None, :], injections].sum(axis=1)
    best = float(matched.min())
    return ((best + (cutoff ** order) * (m - n)) / m) ** (1.0 / order)


def scalar_context(frames_points: list[list[list[float]]],
                   p_survive: float = 0.6, p_detect: float = 0.5,
                   clutter: float = 0.01, birth_prob: float = 0.4,
                   birth_means: tuple[float, ...] = (0.0,),
                   birth_scans: tuple[int, ...] | None = None,
                   ) -> WeightContext:
    """One-dimensional single-sensor context, measurements given per scan."""
    motion = MotionModel.constant_velocity(1.0, 1.0, p_survive, axes=1)
    sensor = SensorModel.position_sensor([1.0], p_detect, clutter, axes=1)
    births = tuple(
        BirthComponent(birth_prob,
                       GaussianDensity(np.array([m, 0.0]), np.diag([4.0, 1.0])))
        for m in birth_means)
    frames = tuple(MeasurementFrame.from_lists([scan], dim=1)
                   for scan in frames_points)
    return WeightContext(motion, (sensor,), births, frames,
                         birth_scans=birth_scans)


def random_tiny_instance(seed: int) -> WeightContext:
    """Small randomized instance: K <= 3, V <= 2, <= 2 labels, <= 2
    measurements per sensor and scan, scalar positions."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 4))
    v = int(rng.integers(1, 3))
    n_births = int(rng.integers(1, 3))
    p_survive = float(rng.uniform(0.45, 0.65))
    p_detect = float(rng.uniform(0.35, 0.55))
    birth_prob = float(rng.uniform(0.3, 0.5))
    motion = MotionModel.constant_velocity(1.0, float(rng.uniform(0.5, 1.2)),
                                           p_survive, axes=1)
    sensors = tuple(
        SensorModel.position_sensor([float(rng.uniform(0.6, 1.4))], p_detect,
                                    0.02, axes=1)
        for _ in range(v))
    centers = [-3.0, 3.0][:n_births]
    births = tuple(
        BirthComponent(birth_prob,
                       GaussianDensity(np.array([c, 0.0]), np.diag([2.0, 0.4])))
        for c in centers)
    frames = []
    for _ in range(k):
        per_sensor = []
        for _ in range(v):
            count = int(rng.choice([0, 1, 1, 2]))
            points = []
            for _ in range(count):
                center = float(rng.choice(centers))
                points.append([center + float(rng.uniform(-2.0, 2.0))])
            per_sensor.append(points)
        frames.append(MeasurementFrame.from_lists(per_sensor, dim=1))
    return WeightContext(motion, sensors, births, tuple(frames),
                         birth_scans=(1,))
