"""Scenario configuration, ground-truth generation, and file formats.

Scenarios are INI files.  ``[scenario]`` gives scan count, sensor count, seed
and the surveillance bounds; ``[motion]`` the kinematic parameters;
``[sensor.N]`` one section per sensor; ``[birth.N]`` one section per birth
component.  An optional ``[tracks]`` section scripts exact trajectories
(noiseless constant-velocity); without it, truth is drawn from the birth and
survival model.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .gaussian import GaussianDensity, MotionModel, SensorModel
from .smoother import TrackEstimate
from .types import Label, MeasurementFrame
from .weights import BirthComponent, WeightContext

__all__ = [
    "ScenarioConfig",
    "SensorConfig",
    "BirthConfig",
    "ScriptedTrack",
    "TruthTrack",
    "load_scenario",
    "generate_truth",
    "generate_measurements",
    "context_from_scenario",
    "write_truth",
    "read_truth",
    "write_measurements",
    "read_measurements",
    "write_estimates",
    "write_errors",
]

_FLOAT_FMT = "%.6f"


@dataclass(frozen=True)
class SensorConfig:
    detect_prob: float
    noise_std: np.ndarray
    clutter_rate: float


@dataclass(frozen=True)
class BirthConfig:
    prob: float
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class ScriptedTrack:
    birth_scan: int
    death_scan: int
    state: np.ndarray


@dataclass(frozen=True)
class ScenarioConfig:
    scans: int
    sensors: tuple[SensorConfig, ...]
    seed: int
    bounds: np.ndarray
    dt: float
    accel_std: float
    survival_prob: float
    births: tuple[BirthConfig, ...]
    tracks: tuple[ScriptedTrack, ...] | None = None

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @property
    def volume(self) -> float:
        spans = self.bounds[1::2] - self.bounds[0::2]
        return float(np.prod(spans))

    @classmethod
    def from_ini(cls, text: str) -> "ScenarioConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed scenario file: {exc}") from exc
        return _build_config(parser)


def _require(parser: configparser.ConfigParser, section: str, key: str) -> str:
    if not parser.has_section(section):
        raise ConfigError(f"missing section [{section}]")
    if not parser.has_option(section, key):
        raise ConfigError(f"missing key '{key}' in section [{section}]")
    return parser.get(section, key)


def _floats(raw: str, count: int, where: str) -> np.ndarray:
    parts = raw.split()
    if len(parts) != count:
        raise ConfigError(f"{where}: expected {count} numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _scalar(raw: str, where: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _numbered_sections(parser: configparser.ConfigParser,
                       prefix: str) -> list[str]:
    names = []
    for section in parser.sections():
        if section.startswith(prefix + "."):
            suffix = section[len(prefix) + 1:]
            if not suffix.isdigit():
                raise ConfigError(f"bad section name [{section}]")
            names.append(section)
    names.sort(key=lambda s: int(s.rsplit(".", 1)[1]))
    expected = [f"{prefix}.{n}" for n in range(1, len(names) + 1)]
    if names != expected:
        raise ConfigError(f"[{prefix}.N] sections must be numbered 1..N")
    return names


def _build_config(parser: configparser.ConfigParser) -> ScenarioConfig:
    scans = _int(_require(parser, "scenario", "scans"), "[scenario] scans")
    n_sensors = _int(_require(parser, "scenario", "sensors"),
                     "[scenario] sensors")
    seed = _int(_require(parser, "scenario", "seed"), "[scenario] seed")
    bounds = _floats(_require(parser, "scenario", "bounds"), 6,
                     "[scenario] bounds")
    if scans < 1 or n_sensors < 1:
        raise ConfigError("scans and sensors must both be at least 1")
    if np.any(bounds[1::2] <= bounds[0::2]):
        raise ConfigError("[scenario] bounds: each max must exceed its min")

    dt = _scalar(_require(parser, "motion", "dt"), "[motion] dt")
    accel_std = _scalar(_require(parser, "motion", "accel_std"),
                        "[motion] accel_std")
    survival = _scalar(_require(parser, "motion", "survival_prob"),
                       "[motion] survival_prob")
    if not 0.0 < survival < 1.0:
        raise ConfigError("[motion] survival_prob must lie in (0, 1)")

    sensor_sections = _numbered_sections(parser, "sensor")
    if len(sensor_sections) != n_sensors:
        raise ConfigError(
            f"[scenario] sensors = {n_sensors} but found "
            f"{len(sensor_sections)} [sensor.N] sections")
    volume = float(np.prod(bounds[1::2] - bounds[0::2]))
    sensors = []
    for section in sensor_sections:
        p_d = _scalar(_require(parser, section, "detect_prob"),
                      f"[{section}] detect_prob")
        if not 0.0 < p_d < 1.0:
            raise ConfigError(f"[{section}] detect_prob must lie in (0, 1)")
        noise = _floats(_require(parser, section, "noise_std"), 3,
                        f"[{section}] noise_std")
        if parser.has_option(section, "clutter_rate"):
            rate = _scalar(parser.get(section, "clutter_rate"),
                           f"[{section}] clutter_rate")
        elif parser.has_option(section, "clutter_intensity"):
            intensity = _scalar(parser.get(section, "clutter_intensity"),
                                f"[{section}] clutter_intensity")
            rate = intensity * volume
        else:
            raise ConfigError(
                f"[{section}] needs clutter_rate or clutter_intensity")
        if rate <= 0.0:
            raise ConfigError(f"[{section}] clutter rate must be positive")
        sensors.append(SensorConfig(p_d, noise, rate))

    birth_sections = _numbered_sections(parser, "birth")
    if not birth_sections:
        raise ConfigError("at least one [birth.N] section is required")
    births = []
    for section in birth_sections:
        prob = _scalar(_require(parser, section, "prob"), f"[{section}] prob")
        if not 0.0 < prob < 1.0:
            raise ConfigError(f"[{section}] prob must lie in (0, 1)")
        mean = _floats(_require(parser, section, "mean"), 6,
                       f"[{section}] mean")
        std = _floats(_require(parser, section, "std"), 6, f"[{section}] std")
        births.append(BirthConfig(prob, mean, std))

    tracks = None
    if parser.has_section("tracks"):
        entries = []
        for n, key in enumerate(parser.options("tracks"), start=1):
            if key != f"track.{n}":
                raise ConfigError("[tracks] keys must be track.1, track.2, ...")
            parts = parser.get("tracks", key).split()
            if len(parts) != 8:
                raise ConfigError(
                    f"[tracks] {key}: expected birth scan, death scan and six "
                    f"state numbers, got {len(parts)} fields")
            start = _int(parts[0], f"[tracks] {key} birth scan")
            if parts[1] == "end":
                end = scans
            else:
                end = _int(parts[1], f"[tracks] {key} death scan")
            state = _floats(" ".join(parts[2:]), 6, f"[tracks] {key} state")
            if not 1 <= start <= end <= scans:
                raise ConfigError(
                    f"[tracks] {key}: need 1 <= birth <= death <= {scans}")
            entries.append(ScriptedTrack(start, end, state))
        tracks = tuple(entries)

    return ScenarioConfig(scans=scans, sensors=tuple(sensors), seed=seed,
                          bounds=bounds, dt=dt, accel_std=accel_std,
                          survival_prob=survival, births=tuple(births),
                          tracks=tracks)


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return ScenarioConfig.from_ini(handle.read())


@dataclass(frozen=True)
class TruthTrack:
    """One true trajectory: states over its live scans, one row per scan."""

    label: Label
    start: int
    states: np.ndarray = field(repr=False)

    @property
    def end(self) -> int:
        return self.start + len(self.states) - 1

    def state_at(self, j: int) -> np.ndarray:
        if not self.start <= j <= self.end:
            raise KeyError(j)
        return self.states[j - self.start]


def _motion_model(cfg: ScenarioConfig) -> MotionModel:
    return MotionModel.constant_velocity(cfg.dt, cfg.accel_std,
                                         cfg.survival_prob)


def _in_bounds(state: np.ndarray, bounds: np.ndarray) -> bool:
    pos = state[0::2]
    return bool(np.all(pos >= bounds[0::2]) and np.all(pos <= bounds[1::2]))


def generate_truth(cfg: ScenarioConfig,
                   rng: np.random.Generator | None = None) -> list[TruthTrack]:
    """True trajectories, scripted if ``[tracks]`` is present, else sampled."""
    motion = _motion_model(cfg)
    if cfg.tracks is not None:
        out = []
        for n, script in enumerate(cfg.tracks, start=1):
            states = [np.array(script.state, dtype=float)]
            for _ in range(script.birth_scan, script.death_scan):
                states.append(motion.F @ states[-1])
            stacked = np.stack(states)
            for j, state in zip(range(script.birth_scan,
                                      script.death_scan + 1), stacked):
                if not _in_bounds(state, cfg.bounds):
                    raise ConfigError(
                        f"[tracks] track.{n} leaves the bounds at scan {j}")
            out.append(TruthTrack(Label(script.birth_scan, n), script.birth_scan,
                                  stacked))
        return out

    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    live: list[tuple[Label, list[np.ndarray]]] = []
    finished: list[TruthTrack] = []
    for j in range(1, cfg.scans + 1):
        survivors = []
        for label, states in live:
            if rng.random() < cfg.survival_prob:
                noise = rng.multivariate_normal(np.zeros(6), motion.Q)
                states.append(motion.F @ states[-1] + noise)
                survivors.append((label, states))
            else:
                finished.append(TruthTrack(label, label.birth_time,
                                           np.stack(states)))
        live = survivors
        for b, birth in enumerate(cfg.births, start=1):
            if rng.random() < birth.prob:
                state = rng.normal(birth.mean, birth.std)
                live.append((Label(j, b), [state]))
    for label, states in live:
        finished.append(TruthTrack(label, label.birth_time, np.stack(states)))
    finished.sort(key=lambda t: t.label)
    return finished


def generate_measurements(cfg: ScenarioConfig, tracks: list[TruthTrack],
                          rng: np.random.Generator | None = None,
                          ) -> list[MeasurementFrame]:
    """Detections plus uniform clutter for every scan and sensor."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed + 1)
    lower, upper = cfg.bounds[0::2], cfg.bounds[1::2]
    frames = []
    for j in range(1, cfg.scans + 1):
        per_sensor = []
        for sensor in cfg.sensors:
            points = []
            for track in tracks:
                if not track.start <= j <= track.end:
                    continue
                if rng.random() < sensor.detect_prob:
                    pos = track.state_at(j)[0::2]
                    points.append(rng.normal(pos, sensor.noise_std))
            n_clutter = rng.poisson(sensor.clutter_rate)
            for _ in range(n_clutter):
                points.append(rng.uniform(lower, upper))
            if points:
                stacked = np.stack(points)
                rng.shuffle(stacked, axis=0)
            else:
                stacked = np.zeros((0, 3))
            per_sensor.append(stacked)
        frames.append(MeasurementFrame.from_lists(per_sensor))
    return frames


def context_from_scenario(cfg: ScenarioConfig,
                          frames: list[MeasurementFrame]) -> WeightContext:
    """Weight context with the scenario's models and the given measurements."""
    if len(frames) > cfg.scans:
        raise ConfigError(
            f"{len(frames)} measurement scans but scenario declares {cfg.scans}")
    motion = _motion_model(cfg)
    sensors = []
    for sensor in cfg.sensors:
        density = sensor.clutter_rate / cfg.volume
        sensors.append(SensorModel.position_sensor(
            sensor.noise_std, sensor.detect_prob, density))
    births = []
    for birth in cfg.births:
        density = GaussianDensity(np.array(birth.mean, dtype=float),
                                  np.diag(np.square(birth.std)))
        births.append(BirthComponent(birth.prob, density))
    return WeightContext(motion, tuple(sensors), tuple(births), tuple(frames))


def write_truth(path: str, tracks: list[TruthTrack]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label_s", "label_i", "time",
                         "x", "y", "z", "vx", "vy", "vz"])
        for track in tracks:
            for j in range(track.start, track.end + 1):
                s = track.state_at(j)
                row = [track.label.birth_time, track.label.birth_index, j]
                row += [_FLOAT_FMT % s[i] for i in (0, 2, 4, 1, 3, 5)]
                writer.writerow(row)


def read_truth(path: str) -> list[TruthTrack]:
    grouped: dict[Label, dict[int, np.ndarray]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            label = Label(int(row["label_s"]), int(row["label_i"]))
            state = np.array([float(row[c])
                              for c in ("x", "vx", "y", "vy", "z", "vz")])
            grouped.setdefault(label, {})[int(row["time"])] = state
    tracks = []
    for label in sorted(grouped):
        times = sorted(grouped[label])
        if times != list(range(times[0], times[-1] + 1)):
            raise ConfigError(f"track {tuple(label)} has gaps in time")
        tracks.append(TruthTrack(label, times[0],
                                 np.stack([grouped[label][j] for j in times])))
    return tracks


def write_measurements(path: str, frames: list[MeasurementFrame]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time", "sensor", "idx", "x", "y", "z"])
        for j, frame in enumerate(frames, start=1):
            for v, block in enumerate(frame.sensors, start=1):
                for i, z in enumerate(block, start=1):
                    writer.writerow([j, v, i] + [_FLOAT_FMT % c for c in z])


def read_measurements(path: str, scans: int,
                      n_sensors: int) -> list[MeasurementFrame]:
    table: dict[tuple[int, int], dict[int, np.ndarray]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            j, v, i = int(row["time"]), int(row["sensor"]), int(row["idx"])
            if not 1 <= j <= scans or not 1 <= v <= n_sensors:
                raise ConfigError(
                    f"measurement at time {j}, sensor {v} is outside the "
                    f"scenario's {scans} scans and {n_sensors} sensors")
            z = np.array([float(row[c]) for c in ("x", "y", "z")])
            table.setdefault((j, v), {})[i] = z
    frames = []
    for j in range(1, scans + 1):
        per_sensor = []
        for v in range(1, n_sensors + 1):
            block = table.get((j, v), {})
            if sorted(block) != list(range(1, len(block) + 1)):
                raise ConfigError(
                    f"measurement indices at time {j}, sensor {v} must run "
                    f"1..{len(block)} without gaps")
            per_sensor.append([block[i] for i in sorted(block)])
        frames.append(MeasurementFrame.from_lists(per_sensor))
    return frames


def write_estimates(path: str, estimates: list[TrackEstimate],
                    run_id: int = 0) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run_id", "label_s", "label_i", "time",
                         "x", "y", "z", "vx", "vy", "vz"])
        for est in sorted(estimates, key=lambda e: e.label):
            for j in range(est.start, est.end + 1):
                s = est.state_at(j)
                row = [run_id, est.label.birth_time, est.label.birth_index, j]
                row += [_FLOAT_FMT % s[i] for i in (0, 2, 4, 1, 3, 5)]
                writer.writerow(row)


def write_errors(path: str, rows: list[tuple[int, float, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time", "ospa", "ospa2"])
        for j, ospa, ospa2 in rows:
            writer.writerow([j, _FLOAT_FMT % ospa, _FLOAT_FMT % ospa2])
