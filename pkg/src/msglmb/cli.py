"""Command-line interface: simulate, track, evaluate, stats."""

from __future__ import annotations

import csv
import functools
import json
import os
import sys

import click
import numpy as np

from .errors import ConfigError, NumericalError
from .gibbs_factor import SampleStats
from .metrics import OspaParams, ospa, ospa2
from .simulator import (ScenarioConfig, ScriptedTrack, context_from_scenario,
                        generate_measurements, generate_truth, load_scenario,
                        read_measurements, read_truth, write_errors,
                        write_estimates, write_measurements, write_truth)
from .smoother import (GlmbPosterior, TrackEstimate, TrackerParams, batch,
                       estimate, recursive_track, statistics)
from .types import Label
from .weights import WeightEngine

__all__ = ["main"]


def _mapped_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)
    return wrapper


def _load_overridden(config_path: str, seed: int | None, scans: int | None,
                     sensors: int | None) -> ScenarioConfig:
    cfg = load_scenario(config_path)
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if scans is not None:
        if scans < 1:
            raise ConfigError("--scans must be at least 1")
        updates["scans"] = scans
        if cfg.tracks is not None:
            updates["tracks"] = tuple(
                ScriptedTrack(t.birth_scan, min(t.death_scan, scans), t.state)
                for t in cfg.tracks if t.birth_scan <= scans)
    if sensors is not None:
        if not 1 <= sensors <= cfg.n_sensors:
            raise ConfigError(
                f"--sensors must lie in 1..{cfg.n_sensors} for this scenario")
        updates["sensors"] = cfg.sensors[:sensors]
    if updates:
        cfg = ScenarioConfig(**{**cfg.__dict__, **updates})
    return cfg


@click.group()
def main() -> None:
    """Multi-sensor multi-object tracking via sampled trajectory posteriors."""


_SEED = click.option("--seed", type=int, default=None,
                     help="Override the scenario seed.")
_SCANS = click.option("--scans", type=int, default=None,
                      help="Override the number of scans.")
_SENSORS = click.option("--sensors", type=int, default=None,
                        help="Use only the first N sensors.")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=False), help="Scenario INI file.")
@click.option("--output-dir", default=".", show_default=True,
              help="Directory for truth.csv and measurements.csv.")
@_SEED
@_SCANS
@_SENSORS
@_mapped_errors
def simulate(config_path: str, output_dir: str, seed: int | None,
             scans: int | None, sensors: int | None) -> None:
    """Generate ground truth and measurements from a scenario."""
    cfg = _load_overridden(config_path, seed, scans, sensors)
    os.makedirs(output_dir, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    tracks = generate_truth(cfg, rng)
    frames = generate_measurements(cfg, tracks, rng)
    truth_path = os.path.join(output_dir, "truth.csv")
    meas_path = os.path.join(output_dir, "measurements.csv")
    write_truth(truth_path, tracks)
    write_measurements(meas_path, frames)
    n_meas = sum(int(sum(f.counts)) for f in frames)
    click.echo(f"wrote {truth_path} ({len(tracks)} tracks)")
    click.echo(f"wrote {meas_path} ({n_meas} measurements)")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=False), help="Scenario INI file.")
@click.option("--measurements", "meas_path", required=True,
              type=click.Path(exists=False), help="Measurement CSV file.")
@click.option("--output", "out_path", required=True,
              help="Posterior JSON output path.")
@click.option("--estimates", "est_path", default=None,
              help="Optional track estimate CSV output path.")
@click.option("--mode", type=click.Choice(["batch", "recursive"]),
              default="batch", show_default=True,
              help="Whole-window smoothing or scan-by-scan processing.")
@click.option("--smooth/--no-smooth", "smoothed", default=True,
              show_default=True,
              help="Smoothed or filtered state estimates.")
@click.option("--refine/--no-refine", "refine", default=True,
              show_default=True,
              help="Recursive mode only: revisit past scans after extending.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for per-component sampling.")
@click.option("--components", type=int, default=50, show_default=True,
              help="Components retained while sampling new scans.")
@click.option("--sweeps", type=int, default=20, show_default=True,
              help="Sampler sweeps per component while extending.")
@click.option("--refine-components", type=int, default=20, show_default=True,
              help="Components given whole-history refinement sweeps.")
@click.option("--refine-sweeps", type=int, default=30, show_default=True,
              help="Whole-history refinement sweeps to split across components.")
@click.option("--keep", type=int, default=50, show_default=True,
              help="Components kept in the returned posterior.")
@click.option("--run-id", type=int, default=0, show_default=True,
              help="run_id column value in the estimate CSV.")
@_SEED
@_SCANS
@_SENSORS
@_mapped_errors
def track(config_path: str, meas_path: str, out_path: str,
          est_path: str | None, mode: str, smoothed: bool, refine: bool,
          threads: int, components: int, sweeps: int, refine_components: int,
          refine_sweeps: int, keep: int, run_id: int, seed: int | None,
          scans: int | None, sensors: int | None) -> None:
    """Estimate the multi-object posterior from recorded measurements."""
    cfg = _load_overridden(config_path, seed, scans, sensors)
    frames = read_measurements(meas_path, cfg.scans, cfg.n_sensors)
    ctx = context_from_scenario(cfg, frames)
    params = TrackerParams(init_components=components, init_sweeps=sweeps,
                           refine_components=refine_components,
                           refine_sweeps=refine_sweeps, keep=keep,
                           extend_budget=components * sweeps,
                           keep_intermediate=keep)
    stats = SampleStats()
    if mode == "batch":
        engine = WeightEngine(ctx)
        post = batch(engine, params, cfg.seed, stats=stats, threads=threads)
    else:
        posteriors = recursive_track(ctx, params, cfg.seed, stats=stats,
                                     threads=threads, refine=refine)
        post = posteriors[-1]
    with open(out_path, "w", encoding="utf-8") as handle:
        handle.write(post.dumps())
        handle.write("\n")
    click.echo(f"wrote {out_path} ({len(post.components)} components, "
               f"{stats.coordinates} coordinate draws)")
    if est_path is not None:
        ests = estimate(post, mode="smoothed" if smoothed else "filtered")
        write_estimates(est_path, ests, run_id=run_id)
        click.echo(f"wrote {est_path} ({len(ests)} tracks)")


def _positions_by_scan(tracks, scans: int) -> list[list[np.ndarray]]:
    per_scan: list[list[np.ndarray]] = [[] for _ in range(scans)]
    for track_ in tracks:
        for j in range(track_.start, min(track_.end, scans) + 1):
            per_scan[j - 1].append(track_.state_at(j)[0::2])
    return per_scan


def _position_tracks(tracks, scans: int) -> list[dict[int, np.ndarray]]:
    out = []
    for track_ in tracks:
        hi = min(track_.end, scans)
        if hi >= track_.start:
            out.append({j: track_.state_at(j)[0::2]
                        for j in range(track_.start, hi + 1)})
    return out


@main.command()
@click.option("--truth", "truth_path", required=True,
              type=click.Path(exists=False), help="Ground-truth CSV file.")
@click.option("--estimates", "est_path", required=True,
              type=click.Path(exists=False), help="Track estimate CSV file.")
@click.option("--output", "out_path", required=True,
              help="Per-scan error CSV output path.")
@click.option("--cutoff", type=float, default=100.0, show_default=True,
              help="Error saturation distance.")
@click.option("--order", type=float, default=1.0, show_default=True,
              help="Error norm order.")
@click.option("--window", type=int, default=10, show_default=True,
              help="Scans per trajectory-error window.")
@_mapped_errors
def evaluate(truth_path: str, est_path: str, out_path: str, cutoff: float,
             order: float, window: int) -> None:
    """Score estimates against ground truth, per scan and per window."""
    truth = read_truth(truth_path)
    ests = _read_estimate_tracks(est_path)
    scans = max([t.end for t in truth] + [e.end for e in ests], default=0)
    if scans == 0:
        raise ConfigError("no scans found in the truth or estimate files")
    params = OspaParams(cutoff=cutoff, order=order, window=window)
    truth_by_scan = _positions_by_scan(truth, scans)
    est_by_scan = _positions_by_scan(ests, scans)
    truth_tracks = _position_tracks(truth, scans)
    est_tracks = _position_tracks(ests, scans)
    rows = []
    for j in range(1, scans + 1):
        d1 = ospa(truth_by_scan[j - 1], est_by_scan[j - 1], params)
        d2 = ospa2(truth_tracks, est_tracks, params, at_scan=j)
        rows.append((j, d1, d2))
    write_errors(out_path, rows)
    mean1 = float(np.mean([r[1] for r in rows]))
    mean2 = float(np.mean([r[2] for r in rows]))
    click.echo(f"wrote {out_path} (mean ospa {mean1:.6f}, "
               f"mean ospa2 {mean2:.6f})")


def _read_estimate_tracks(path: str) -> list[TrackEstimate]:
    grouped: dict[Label, dict[int, np.ndarray]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            label = Label(int(row["label_s"]), int(row["label_i"]))
            state = np.array([float(row[c])
                              for c in ("x", "vx", "y", "vy", "z", "vz")])
            grouped.setdefault(label, {})[int(row["time"])] = state
    out = []
    for label in sorted(grouped):
        times = sorted(grouped[label])
        if times != list(range(times[0], times[-1] + 1)):
            raise ConfigError(f"estimate track {tuple(label)} has time gaps")
        means = np.stack([grouped[label][j] for j in times])
        out.append(TrackEstimate(label, times[0], times[-1], means))
    return out


@main.command()
@click.option("--posterior", "post_path", required=True,
              type=click.Path(exists=False), help="Posterior JSON file.")
@_mapped_errors
def stats(post_path: str) -> None:
    """Summarize a saved posterior: cardinality, births, deaths, lengths."""
    with open(post_path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad posterior file: {exc}") from exc
    post = GlmbPosterior.from_json_dict(payload)
    report = statistics(post)
    click.echo(f"scans: {post.k}")
    click.echo(f"components: {len(post.components)}")
    click.echo("cardinality:")
    for n, p in sorted(report["cardinality"].items()):
        click.echo(f"  {n}: {p:.9f}")
    for kind in ("births", "deaths"):
        click.echo(f"{kind} by scan:")
        for u in sorted(report[kind]):
            pairs = " ".join(f"{n}:{p:.9f}"
                             for n, p in sorted(report[kind][u].items()))
            click.echo(f"  scan {u}: {pairs}")
    click.echo("trajectory length:")
    for m, p in sorted(report["length"].items()):
        click.echo(f"  {m}: {p:.9f}")


if __name__ == "__main__":
    main()
