"""Scenario parsing and the command line front end."""
import copy
import csv
import json
from pathlib import Path

import pytest
import yaml

from preytaxis.cli import main
from preytaxis.config import ConfigError, parse_scenario
from preytaxis.selftest import run_selftest
from preytaxis.signal import TravelingWave

SCENARIOS = Path(__file__).resolve().parents[1] / "demos" / "scenarios"

BASE = {
    "scenario": "unit",
    "signal": {"family": "traveling-wave", "amplitude": 0.2, "direction": [1.0], "speed": 1.0},
    "kinetics": {"model": "arditi-ginzburg", "params": {"gamma": 2.0, "beta": 1.0, "r": 1.6}},
    "constants": {"chi": 5.0, "kappa": 1.0, "mu": 1.0, "delta": 0.25},
    "grids": {"fast": {"points": 16, "tau_points": 16}, "slow": {"length": 6.283185307179586, "points": 16}},
    "stages": ["homogenize", "equilibrate", "stability"],
    "stability": {"directions": [[1.0]], "alphas": [0.5, 1.0], "c_values": [0.0, 100.0]},
    "simulate": {"t_end": 0.1, "dt": 0.01, "initial": {"p": {"cos": 0.01}, "s": {"sin": 0.01}}},
}


def tree(**changes):
    t = copy.deepcopy(BASE)
    for path, value in changes.items():
        node = t
        keys = path.split("__")
        for k in keys[:-1]:
            node = node[k]
        if value is None:
            del node[keys[-1]]
        else:
            node[keys[-1]] = value
    return t


def write(tmp_path, t):
    p = tmp_path / "scenario.yaml"
    p.write_text(yaml.safe_dump(t))
    return p


class TestParse:
    def test_valid(self):
        sc = parse_scenario(tree())
        assert isinstance(sc.signal, TravelingWave)
        assert sc.deltas == (0.25,)
        assert sc.stage_plan(["stability"]) == ["homogenize", "equilibrate", "stability"]
        assert len(sc.config_hash()) == 64

    def test_hash_is_order_independent(self):
        t = tree()
        reordered = dict(reversed(list(t.items())))
        assert parse_scenario(t).config_hash() == parse_scenario(reordered).config_hash()

    @pytest.mark.parametrize("path, value, key", [
        ("constants__chi", None, "constants.chi"),
        ("constants__mu", "fast", "constants.mu"),
        ("signal__family", "square", "signal.family"),
        ("kinetics__model", "logistic", "kinetics"),
        ("grids__fast__points", 12.5, "grids.fast.points"),
        ("stages", ["homogenize", "dance"], "stages"),
        ("signal__direction", [1.0, 1.0], "signal.direction"),
    ])
    def test_errors_name_the_key(self, path, value, key):
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            parse_scenario(tree(**{path: value}))

    def test_cosine_product(self):
        t = tree(signal={"family": "cosine-product", "amplitude": 1.0, "modes": [1, 2]})
        sc = parse_scenario(t)
        assert sc.dim == 2


class TestCommands:
    def test_run_writes_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", str(write(tmp_path, tree())), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"] == 0
        assert manifest["stages"] == ["homogenize", "equilibrate", "stability"]
        assert {"coefficients.csv", "stability.csv", "thresholds.csv", "longwave.csv"} <= set(manifest["artifacts"])
        rows = list(csv.DictReader(open(out / "thresholds.csv")))
        assert all(float(r["c_star"]) > 0 for r in rows)

    def test_stage_flag(self, tmp_path):
        out = tmp_path / "out"
        cfg = str(write(tmp_path, tree()))
        assert main(["run", "--config", cfg, "--out", str(out), "--stage", "homogenize"]) == 0
        assert json.loads((out / "manifest.json").read_text())["stages"] == ["homogenize"]

    def test_simulate_slow(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate-slow", "--config", str(write(tmp_path, tree())), "--out", str(out)]) == 0
        rows = list(csv.DictReader(open(out / "slow_trajectory.csv")))
        assert len(rows) == 2 * 16
        assert {"t", "node", "x0", "p", "s"} <= set(rows[0])

    def test_outputs_deterministic(self, tmp_path):
        cfg = str(write(tmp_path, tree()))
        for name in ("a", "b"):
            assert main(["run", "--config", cfg, "--out", str(tmp_path / name)]) == 0
        for f in ("coefficients.csv", "stability.csv", "thresholds.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = write(tmp_path, tree(constants__kappa=None))
        assert main(["homogenize", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "constants.kappa" in capsys.readouterr().err

    def test_missing_stage_section(self, tmp_path, capsys):
        cfg = write(tmp_path, tree(stability=None))
        assert main(["stability", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "stability.directions" in capsys.readouterr().err

    def test_stage_failure_reports_module(self, tmp_path, capsys):
        t = tree(kinetics={"model": "holling2", "params": {"gamma": 2.0, "beta": 1.0, "alpha": 1.0}})
        out = tmp_path / "o"
        assert main(["equilibrate", "--config", str(write(tmp_path, t)), "--out", str(out)]) == 1
        err = capsys.readouterr().err
        assert "kinetics.find_equilibrium" in err
        assert json.loads((out / "manifest.json").read_text())["status"] == 1

    def test_requires_config(self, capsys):
        assert main(["homogenize"]) == 2

    def test_selftest_command(self, tmp_path):
        assert main(["selftest", "--seed", "3", "--out", str(tmp_path)]) == 0
        rows = list(csv.DictReader(open(tmp_path / "selftest.csv")))
        assert rows and all(r["passed"] == "1" for r in rows)

    @pytest.mark.parametrize("name", ["imposed_instability.yaml", "standing_cosine_2d.yaml"])
    def test_bundled_scenarios_parse(self, name):
        sc = parse_scenario(yaml.safe_load((SCENARIOS / name).read_text()))
        assert sc.stages


class TestSelftest:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_all_checks_pass(self, seed):
        checks = run_selftest(seed)
        assert len(checks) > 15
        assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]
