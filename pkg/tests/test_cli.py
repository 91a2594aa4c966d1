"""End-to-end command-line tests through click's runner, plus one smoke test
of the installed entry point."""

import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from msglmb.cli import main
from msglmb.smoother import GlmbPosterior


SCENARIO = """
[scenario]
scans = 4
sensors = 2
seed = 12
bounds = -60 60 -60 60 -60 60

[motion]
dt = 1.0
accel_std = 1.0
survival_prob = 0.9

[sensor.1]
detect_prob = 0.8
noise_std = 1 1 1
clutter_rate = 1.0

[sensor.2]
detect_prob = 0.7
noise_std = 1.5 1.5 1.5
clutter_rate = 0.5

[birth.1]
prob = 0.25
mean = 0 0 0 0 0 0
std = 15 2 15 2 15 2

[tracks]
track.1 = 1 end 5 2 -10 3 20 -4
"""

FAST = ["--components", "8", "--sweeps", "6", "--refine-components", "4",
        "--refine-sweeps", "8", "--keep", "10"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scene.cfg"
    path.write_text(SCENARIO)
    return str(path)


def _simulate(runner, scenario, outdir, extra=()):
    result = runner.invoke(main, ["simulate", "--config", scenario,
                                  "--output-dir", str(outdir), *extra])
    assert result.exit_code == 0, result.output
    return result


class TestRoundTrip:
    def test_full_pipeline(self, runner, scenario, tmp_path):
        _simulate(runner, scenario, tmp_path)
        assert (tmp_path / "truth.csv").exists()
        assert (tmp_path / "measurements.csv").exists()

        post_path = tmp_path / "posterior.json"
        est_path = tmp_path / "estimates.csv"
        result = runner.invoke(main, [
            "track", "--config", scenario,
            "--measurements", str(tmp_path / "measurements.csv"),
            "--output", str(post_path), "--estimates", str(est_path), *FAST])
        assert result.exit_code == 0, result.output
        post = GlmbPosterior.from_json_dict(json.loads(post_path.read_text()))
        assert post.k == 4
        assert post.components

        err_path = tmp_path / "errors.csv"
        result = runner.invoke(main, [
            "evaluate", "--truth", str(tmp_path / "truth.csv"),
            "--estimates", str(est_path), "--output", str(err_path),
            "--cutoff", "50", "--window", "3"])
        assert result.exit_code == 0, result.output
        lines = err_path.read_text().strip().splitlines()
        assert lines[0] == "time,ospa,ospa2"
        assert len(lines) == 5
        for line in lines[1:]:
            _, d1, d2 = line.split(",")
            assert 0.0 <= float(d1) <= 50.0
            assert 0.0 <= float(d2) <= 50.0

        result = runner.invoke(main, ["stats", "--posterior", str(post_path)])
        assert result.exit_code == 0, result.output
        assert "cardinality:" in result.output
        assert "scans: 4" in result.output

    def test_recursive_filter_mode(self, runner, scenario, tmp_path):
        _simulate(runner, scenario, tmp_path)
        post_path = tmp_path / "posterior.json"
        result = runner.invoke(main, [
            "track", "--config", scenario,
            "--measurements", str(tmp_path / "measurements.csv"),
            "--output", str(post_path), "--mode", "recursive", "--no-refine",
            "--no-smooth", *FAST])
        assert result.exit_code == 0, result.output
        post = GlmbPosterior.from_json_dict(json.loads(post_path.read_text()))
        assert post.k == 4


class TestDeterminism:
    def test_simulate_byte_identical(self, runner, scenario, tmp_path):
        for name in ("a", "b"):
            _simulate(runner, scenario, tmp_path / name, ["--seed", "77"])
        for fname in ("truth.csv", "measurements.csv"):
            assert (tmp_path / "a" / fname).read_bytes() == \
                (tmp_path / "b" / fname).read_bytes()

    def test_track_byte_identical(self, runner, scenario, tmp_path):
        _simulate(runner, scenario, tmp_path)
        outs = []
        for name in ("p1.json", "p2.json"):
            path = tmp_path / name
            result = runner.invoke(main, [
                "track", "--config", scenario,
                "--measurements", str(tmp_path / "measurements.csv"),
                "--output", str(path), "--seed", "5", *FAST])
            assert result.exit_code == 0, result.output
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_seed_changes_simulation(self, runner, scenario, tmp_path):
        _simulate(runner, scenario, tmp_path / "a", ["--seed", "1"])
        _simulate(runner, scenario, tmp_path / "b", ["--seed", "2"])
        assert (tmp_path / "a" / "measurements.csv").read_bytes() != \
            (tmp_path / "b" / "measurements.csv").read_bytes()


class TestOverrides:
    def test_scans_clamps_scripted_tracks(self, runner, scenario, tmp_path):
        _simulate(runner, scenario, tmp_path, ["--scans", "2"])
        lines = (tmp_path / "truth.csv").read_text().strip().splitlines()
        times = {int(line.split(",")[2]) for line in lines[1:]}
        assert times == {1, 2}

    def test_sensors_keeps_first_block(self, runner, scenario, tmp_path):
        _simulate(runner, scenario, tmp_path, ["--sensors", "1"])
        lines = (tmp_path / "measurements.csv").read_text().strip().splitlines()
        sensors = {int(line.split(",")[1]) for line in lines[1:]}
        assert sensors == {1}

    def test_sensor_override_out_of_range(self, runner, scenario, tmp_path):
        result = runner.invoke(main, ["simulate", "--config", scenario,
                                      "--output-dir", str(tmp_path),
                                      "--sensors", "3"])
        assert result.exit_code == 2
        assert "1..2" in result.output


class TestFailureModes:
    def test_malformed_scenario_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[scenario\nbroken")
        result = runner.invoke(main, ["simulate", "--config", str(bad),
                                      "--output-dir", str(tmp_path)])
        assert result.exit_code == 2
        assert "error:" in result.output

    def test_missing_config_exits_4(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", "--config",
                                      str(tmp_path / "none.cfg"),
                                      "--output-dir", str(tmp_path)])
        assert result.exit_code == 4

    def test_missing_measurements_exits_4(self, runner, scenario, tmp_path):
        result = runner.invoke(main, [
            "track", "--config", scenario,
            "--measurements", str(tmp_path / "none.csv"),
            "--output", str(tmp_path / "p.json")])
        assert result.exit_code == 4

    def test_empty_evaluation_exits_2(self, runner, tmp_path):
        truth = tmp_path / "truth.csv"
        est = tmp_path / "est.csv"
        truth.write_text("label_s,label_i,time,x,y,z,vx,vy,vz\n")
        est.write_text("run_id,label_s,label_i,time,x,y,z,vx,vy,vz\n")
        result = runner.invoke(main, ["evaluate", "--truth", str(truth),
                                      "--estimates", str(est),
                                      "--output", str(tmp_path / "e.csv")])
        assert result.exit_code == 2
        assert "no scans" in result.output

    def test_corrupt_posterior_exits_2(self, runner, tmp_path):
        path = tmp_path / "post.json"
        path.write_text("{ not json")
        result = runner.invoke(main, ["stats", "--posterior", str(path)])
        assert result.exit_code == 2

    def test_unknown_option_exits_2(self, runner):
        result = runner.invoke(main, ["simulate", "--nonsense"])
        assert result.exit_code == 2


def test_installed_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "msglmb.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("simulate", "track", "evaluate", "stats"):
        assert name in proc.stdout
