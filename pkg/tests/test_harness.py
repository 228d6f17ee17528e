from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from pfminimax.core import (
    ConfigurationError,
    DomainError,
    NumericalError,
    ParseError,
)
from pfminimax.harness.cli import main
from pfminimax.harness.commands import default_workers, exit_code_for, rate_grid
from pfminimax.harness.config import ExperimentConfig, parse_config_text
from pfminimax.metrics import estimate_rate
from pfminimax.problems import DL_DESK_SIZES, read_mmx

GAME_CFG = """\
# small seeded game
problem.family = matrix_game
problem.m = 6
problem.n = 5
mode = LMO-PO
schedule.preset = C-C
schedule.C = 0.1
budget.iterations = 200
metrics.cadence = 20
"""


@pytest.fixture
def game_cfg(tmp_path):
    path = tmp_path / "game.cfg"
    path.write_text(GAME_CFG, encoding="utf-8")
    return path


def _cli(*args):
    return main([str(a) for a in args])


class TestConfig:
    def test_parse(self):
        vals = parse_config_text("a = 1 # note\nb = [1, 2]\nc = LMO-PO\n\nd = {\"x\": 2.5}\n")
        assert vals == {"a": 1, "b": [1, 2], "c": "LMO-PO", "d": {"x": 2.5}}

    def test_bad_line(self):
        with pytest.raises(ConfigurationError, match="line 2"):
            parse_config_text("a = 1\nnonsense\n")

    def test_overrides_win(self, game_cfg):
        cfg = ExperimentConfig.from_sources(game_cfg, ["budget.iterations=7"], seed=3)
        assert cfg.budget.iterations == 7 and cfg.seed == 3

    def test_seed_always_present(self):
        assert ExperimentConfig.from_sources().seed == 0

    def test_budget_exclusive(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig({"budget.iterations": 5, "budget.seconds": 1.0}).budget
        with pytest.raises(ConfigurationError):
            ExperimentConfig({}).budget

    def test_rate_grid(self):
        assert rate_grid([30, 10, 10]) == [10, 30]
        assert rate_grid({"start": 10, "stop": 1000, "num": 3}) == [10, 100, 1000]
        with pytest.raises(ConfigurationError):
            rate_grid([])


class TestRun:
    def test_outputs(self, game_cfg, tmp_path):
        out = tmp_path / "run"
        assert _cli("run", "--config", game_cfg, "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["iterations"] == 200 and summary["seed"] == 0
        assert summary["config"]["schedule.preset"] == "C-C"
        assert summary["schedule"]["smoothing"]["C"] == 0.1
        assert summary["stationarity_final"] < summary["stationarity_initial"]
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header.startswith("iter,tau,beta,gamma,objective,gap_x,gap_y")
        assert (out / "timing.csv").exists()

    def test_zero_iterations(self, game_cfg, tmp_path):
        out = tmp_path / "z"
        assert _cli("run", "--config", game_cfg, "--set", "budget.iterations=0", "--out", out) == 0
        assert len((out / "trace.csv").read_text().splitlines()) == 2

    def test_deterministic_bytes(self, game_cfg, tmp_path):
        for name in ("a", "b"):
            assert _cli("run", "--config", game_cfg, "--seed", 4, "--out", tmp_path / name) == 0
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()

    def test_bad_config_exit_2(self, game_cfg, tmp_path, capsys):
        code = _cli("run", "--config", game_cfg, "--set", "problem.family=nope", "--out", tmp_path)
        assert code == 2 and "unknown problem.family" in capsys.readouterr().err
        assert _cli("run", "--config", game_cfg, "--set", "schedule.a=0.5", "--out", tmp_path) == 2
        assert _cli("run", "--config", tmp_path / "missing.cfg", "--out", tmp_path) == 4

    def test_unsupported_regime_exit_2(self, game_cfg, tmp_path, capsys):
        code = _cli("run", "--config", game_cfg, "--set", "mode=PO-LMO", "--set",
                    "schedule.preset=C-C+SCY", "--out", tmp_path)
        assert code == 2 and "valid pairs" in capsys.readouterr().err

    def test_other_families(self, tmp_path):
        for family, extra in [
            ("quadratic_saddle", ["schedule.preset=C-SC"]),
            ("robust_classification", ["schedule.experiment=true"]),
            ("dictionary_learning", ["schedule.experiment=true"]),
        ]:
            args = ["run", "--set", f"problem.family={family}", "--set", "mode=LMO-LMO",
                    "--set", "budget.iterations=20"]
            for e in extra:
                args += ["--set", e]
            assert _cli(*args, "--out", tmp_path / family) == 0, family

    def test_horizon_schedule(self, tmp_path):
        code = _cli("run", "--set", "problem.family=dictionary_learning", "--set",
                    "schedule.horizon=CG-RPGA", "--set", "schedule.K=50", "--set",
                    "budget.iterations=50", "--out", tmp_path)
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["mode"] == "LMO-PO"

    def test_time_budget(self, game_cfg, tmp_path):
        code = _cli("run", "--config", game_cfg, "--set", "budget.iterations=null", "--set",
                    "budget.seconds=0.2", "--out", tmp_path)
        assert code == 0
        assert json.loads((tmp_path / "summary.json").read_text())["iterations"] > 0

    def test_exit_code_mapping(self):
        assert exit_code_for(NumericalError("x", iteration=3)) == 3
        assert exit_code_for(ParseError("x", 1)) == 2
        assert exit_code_for(DomainError("x")) == 2
        assert exit_code_for(FileNotFoundError()) == 4

    def test_module_entry_point(self, game_cfg, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "pfminimax", "run", "--config", str(game_cfg), "--out",
             str(tmp_path)], capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "summary.json").exists()


class TestRate:
    def test_game_rate_passes(self, game_cfg, tmp_path, capsys):
        code = _cli("rate", "--config", game_cfg, "--set", "problem.m=10", "--set", "problem.n=10",
                    "--set", "schedule.C=1.0", "--set", "rate.metric=duality_gap",
                    "--set", 'rate.grid={"start": 100, "stop": 10000, "num": 20}',
                    "--set", "rate.expected=-0.3333333333333333", "--set", "rate.band=[-0.53, -0.18]",
                    "--out", tmp_path)
        report = json.loads((tmp_path / "rate.json").read_text())
        assert code == 0, report
        assert capsys.readouterr().out.startswith("PASS")
        assert len(report["points"]) >= 10

    def test_negative_control(self, tmp_path, capsys):
        series = tmp_path / "flat.csv"
        series.write_text("t,g\n" + "".join(f"{t},0.5\n" for t in range(1, 31)))
        code = _cli("rate", "--set", f"rate.series={series}", "--set", "rate.expected=-0.5",
                    "--out", tmp_path / "out")
        assert code == 1
        assert capsys.readouterr().out.startswith("FAIL slope=0.0000")

    def test_missing_metric(self, game_cfg, tmp_path):
        code = _cli("rate", "--config", game_cfg, "--set", "rate.metric=nonexistent",
                    "--set", "rate.grid=[10, 20]", "--set", "rate.expected=-1", "--out", tmp_path)
        assert code == 2


class TestSweep:
    def test_four_cells_two_workers(self, game_cfg, tmp_path):
        code = _cli("sweep", "--config", game_cfg, "--set",
                    'sweep.grid={"schedule.C": [0.1, 1.0], "mode": ["LMO-LMO", "LMO-PO"]}',
                    "--workers", 2, "--out", tmp_path)
        assert code == 0
        index = json.loads((tmp_path / "index.json").read_text())
        assert [c["dir"] for c in index["cells"]] == [f"cell_{i:03d}" for i in range(4)]
        assert all((tmp_path / c["dir"] / "trace.csv").exists() for c in index["cells"])
        assert index["failed"] == 0 and index["workers"] == 2

    def test_single_cell_matches_run(self, game_cfg, tmp_path):
        assert _cli("sweep", "--config", game_cfg, "--set", 'sweep.grid={"seed": [0]}',
                    "--workers", 1, "--out", tmp_path / "s") == 0
        assert _cli("run", "--config", game_cfg, "--out", tmp_path / "r") == 0
        assert ((tmp_path / "s" / "cell_000" / "trace.csv").read_bytes()
                == (tmp_path / "r" / "trace.csv").read_bytes())

    def test_failed_cell_recorded(self, game_cfg, tmp_path):
        code = _cli("sweep", "--config", game_cfg, "--set",
                    'sweep.grid={"mode": ["LMO-PO", "bogus"]}', "--workers", 1, "--out", tmp_path)
        assert code == 1
        cells = json.loads((tmp_path / "index.json").read_text())["cells"]
        assert [c["status"] for c in cells] == ["ok", "failed"]
        assert cells[1]["exit_code"] == 2 and "mode" in cells[1]["error"]

    def test_distinct_slopes_over_a(self, game_cfg, tmp_path):
        code = _cli("sweep", "--config", game_cfg, "--set", "schedule.preset=null",
                    "--set", "schedule.b=0.3333333333333333", "--set", "budget.iterations=3000",
                    "--set", "metrics.cadence=100",
                    "--set", 'sweep.grid={"schedule.a": [0.5, 0.75]}', "--workers", 2,
                    "--out", tmp_path)
        assert code == 0
        slopes = []
        for cell in ("cell_000", "cell_001"):
            d = np.genfromtxt(tmp_path / cell / "trace.csv", delimiter=",", names=True)
            slopes.append(estimate_rate(d["iter"][1:], d["avg_gap_x"][1:], min_t=300).slope)
        assert abs(slopes[0] - slopes[1]) > 0.1

    def test_env_workers(self, monkeypatch):
        monkeypatch.setenv("MMX_WORKERS", "3")
        assert default_workers() == 3
        monkeypatch.setenv("MMX_WORKERS", "x")
        with pytest.raises(ConfigurationError):
            default_workers()


class TestGenerate:
    def test_desk_files(self, tmp_path):
        assert _cli("generate", "--seed", 2, "--out", tmp_path / "a") == 0
        assert _cli("generate", "--seed", 2, "--out", tmp_path / "b") == 0
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["sizes"] == DL_DESK_SIZES and manifest["seed"] == 2
        m, n, q = DL_DESK_SIZES["m"], DL_DESK_SIZES["n"], DL_DESK_SIZES["q"]
        assert read_mmx(tmp_path / "a" / "A.mmx").shape == (m, n)
        assert read_mmx(tmp_path / "a" / "C_tilde.mmx").shape == (q, n)
        for name in ("A", "A_prime", "C_tilde", "D0_prime", "C0_prime"):
            f = f"{name}.mmx"
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_paper_sizes(self, tmp_path):
        sizes = {"m": 100, "n": 500, "p": 50, "l": 5, "q": 60, "n_prime": 103}
        args = ["generate", "--out", tmp_path]
        for k, v in sizes.items():
            args += ["--set", f"problem.{k}={v}"]
        assert _cli(*args) == 0
        assert read_mmx(tmp_path / "A_prime.mmx").shape == (100, 103)
        assert read_mmx(tmp_path / "D0_prime.mmx").shape == (100, 60)

    def test_generated_data_runs(self, tmp_path):
        assert _cli("generate", "--out", tmp_path / "data") == 0
        code = _cli("run", "--set", "problem.family=dictionary_learning", "--set",
                    f"problem.data_dir={tmp_path / 'data'}", "--set", "mode=LMO-LMO", "--set",
                    "schedule.preset=NC-C", "--set", "budget.iterations=10", "--out", tmp_path / "r")
        assert code == 0

    def test_io_error_exit_4(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert _cli("generate", "--out", blocker / "sub") == 4
