"""Linear-Gaussian single-object machinery.

Everything the association machinery needs from a Kalman filter lives here:
prediction, measurement update with its log marginal likelihood, the
detection factor that folds detection probability and clutter intensity into
one log-weight, and a fixed-interval (RTS) smoother used when trajectory
estimates are extracted.

All likelihood bookkeeping is in the log domain; products of hundreds of
detection factors underflow in linear space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .types import Label, MeasurementFrame

__all__ = [
    "GaussianDensity",
    "MotionModel",
    "SensorModel",
    "TrajectoryPosterior",
    "predict",
    "update",
    "psi_weight",
    "smooth",
]

_LOG_2PI = np.log(2.0 * np.pi)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; one jitter retry, then a hard error.

    The retry adds 1e-9 * mean diagonal mass, enough to absorb roundoff on a
    well-conditioned model without masking genuinely broken covariances.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    d = cov.shape[0]
    jitter = 1e-9 * np.trace(cov) / d
    try:
        return np.linalg.cholesky(cov + jitter * np.eye(d))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"covariance not positive definite even after jitter {jitter:g}"
        ) from exc


@dataclass(frozen=True)
class GaussianDensity:
    """Mean and covariance of one object state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.ascontiguousarray(self.mean, dtype=float)
        cov = np.ascontiguousarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {cov.shape} does not match "
                             f"state dimension {mean.size}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class MotionModel:
    """Transition matrix, process noise, and the survival probability hook.

    ``survival_prob`` is a function of (state mean, label) so the interface
    stays honest about where a state-dependent model would plug in; the
    shipped models are constant, which is what makes the death weight
    1 - P_S exact.
    """

    F: np.ndarray
    Q: np.ndarray
    survival_prob: Callable[[np.ndarray, Label | None], float]

    @classmethod
    def constant_velocity(cls, dt: float, accel_std: float,
                          p_survive: float, axes: int = 3) -> "MotionModel":
        """Nearly-constant-velocity model, per-axis [position, velocity] blocks."""
        f_block = np.array([[1.0, dt], [0.0, 1.0]])
        q_block = accel_std ** 2 * np.array(
            [[dt ** 4 / 4.0, dt ** 3 / 2.0], [dt ** 3 / 2.0, dt ** 2]]
        )
        return cls(
            F=np.kron(np.eye(axes), f_block),
            Q=np.kron(np.eye(axes), q_block),
            survival_prob=lambda _x, _l, p=p_survive: p,
        )


@dataclass(frozen=True)
class SensorModel:
    """Observation model of one sensor plus detection/clutter hooks."""

    H: np.ndarray
    R: np.ndarray
    detection_prob: Callable[[np.ndarray, Label | None], float]
    clutter_intensity: Callable[[np.ndarray], float]

    @classmethod
    def position_sensor(cls, noise_std: Sequence[float], p_detect: float,
                        clutter_density: float, axes: int = 3) -> "SensorModel":
        """Position-only sensor with uniform clutter intensity."""
        h = np.kron(np.eye(axes), np.array([[1.0, 0.0]]))
        r = np.diag(np.square(np.asarray(noise_std, dtype=float)))
        return cls(
            H=h,
            R=r,
            detection_prob=lambda _x, _l, p=p_detect: p,
            clutter_intensity=lambda _z, kappa=clutter_density: kappa,
        )


@dataclass(frozen=True)
class TrajectoryPosterior:
    """Filtered Gaussian sequence of one label over its live scans.

    ``log_norm`` accumulates the log association weight of every live step
    (birth or survival factor times the per-sensor detection factors); the
    death factor, if any, belongs to the owning component's weight, not here.
    """

    label: Label
    start: int
    end: int
    filtered: tuple[GaussianDensity, ...]
    log_norm: float

    def __post_init__(self) -> None:
        if len(self.filtered) != self.end - self.start + 1:
            raise ValueError("filtered sequence length does not match span")

    def density_at(self, j: int) -> GaussianDensity:
        return self.filtered[j - self.start]


def predict(g: GaussianDensity, model: MotionModel) -> GaussianDensity:
    """One-step prediction; the covariance is re-symmetrized."""
    mean = model.F @ g.mean
    cov = _symmetrize(model.F @ g.cov @ model.F.T + model.Q)
    return GaussianDensity(mean, cov)


def log_mvn_pdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> float:
    chol = _cholesky_with_jitter(cov)
    diff = scipy.linalg.solve_triangular(chol, x - mean, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * (diff @ diff + log_det + x.size * _LOG_2PI))


def update(g: GaussianDensity, sensor: SensorModel,
           z: np.ndarray) -> tuple[GaussianDensity, float]:
    """Kalman measurement update.

    Returns the posterior density and the log marginal likelihood
    log N(z; H m, H P H' + R), the quantity the association weights consume.
    """
    z = np.asarray(z, dtype=float)
    h, r = sensor.H, sensor.R
    if z.size != h.shape[0]:
        raise ValueError(f"measurement dimension {z.size} does not match H")
    predicted = h @ g.mean
    innovation_cov = _symmetrize(h @ g.cov @ h.T + r)
    chol = _cholesky_with_jitter(innovation_cov)
    # Gain via two triangular solves instead of an explicit inverse.
    gain = scipy.linalg.cho_solve((chol, True), h @ g.cov).T
    mean = g.mean + gain @ (z - predicted)
    cov = _symmetrize(g.cov - gain @ innovation_cov @ gain.T)
    diff = scipy.linalg.solve_triangular(chol, z - predicted, lower=True)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    log_marginal = float(-0.5 * (diff @ diff + log_det + z.size * _LOG_2PI))
    return GaussianDensity(mean, cov), log_marginal


def psi_weight(v: int, i: int, g: GaussianDensity, sensor: SensorModel,
               frame: MeasurementFrame,
               label: Label | None = None) -> tuple[GaussianDensity, float]:
    """Detection factor of sensor ``v`` for association index ``i >= 0``.

    ``i = 0`` (missed): the density is unchanged and the factor is
    log(1 - P_D).  ``i > 0``: the density is Kalman-updated with measurement
    ``i`` and the factor is log(P_D) + log-marginal - log(clutter intensity).
    """
    if i < 0 or i > frame.counts[v]:
        raise IndexError(f"association index {i} out of range for sensor {v}")
    p_d = sensor.detection_prob(g.mean, label)
    if i == 0:
        if p_d >= 1.0:
            return g, -np.inf
        return g, float(np.log1p(-p_d))
    if p_d <= 0.0:
        return g, -np.inf
    z = frame.measurement(v, i)
    posterior, log_marginal = update(g, sensor, z)
    log_psi = float(np.log(p_d)) + log_marginal - float(np.log(sensor.clutter_intensity(z)))
    return posterior, log_psi


def smooth(traj: TrajectoryPosterior, model: MotionModel) -> tuple[GaussianDensity, ...]:
    """RTS backward pass over the filtered sequence.

    The last smoothed density equals the last filtered density; earlier
    marginals gain the future's information through the smoother gain.
    """
    n = len(traj.filtered)
    if n == 0:
        raise ValueError("cannot smooth an empty trajectory")
    out: list[GaussianDensity] = [traj.filtered[-1]]
    for idx in range(n - 2, -1, -1):
        g = traj.filtered[idx]
        pred_cov = _symmetrize(model.F @ g.cov @ model.F.T + model.Q)
        chol = _cholesky_with_jitter(pred_cov)
        gain = scipy.linalg.cho_solve((chol, True), model.F @ g.cov).T
        nxt = out[0]
        mean = g.mean + gain @ (nxt.mean - model.F @ g.mean)
        cov = _symmetrize(g.cov + gain @ (nxt.cov - pred_cov) @ gain.T)
        out.insert(0, GaussianDensity(mean, cov))
    return tuple(out)
