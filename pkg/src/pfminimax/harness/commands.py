"""Subcommand bodies. Each returns a process exit code.

Exit codes: 0 success, 1 rate check outside its band or a failed sweep
cell, 2 bad configuration or input data, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from ..core import (
    ArgumentError,
    CapabilityError,
    ConfigurationError,
    DomainError,
    NumericalError,
    ParseError,
    make_rng,
)
from ..metrics import estimate_rate
from ..problems import DL_DESK_SIZES, dl_generate, write_mmx
from ..solvers import run
from .config import DL_FILES, ExperimentConfig, build_problem, build_schedule

__all__ = [
    "EXIT_BAD_CONFIG",
    "EXIT_CHECK_FAILED",
    "EXIT_IO",
    "EXIT_NUMERICAL",
    "EXIT_OK",
    "cmd_generate",
    "cmd_rate",
    "cmd_run",
    "cmd_sweep",
    "default_workers",
    "exit_code_for",
    "rate_grid",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def exit_code_for(err: BaseException) -> int:
    if isinstance(err, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(err, (ConfigurationError, ArgumentError, DomainError, CapabilityError,
                        ParseError, KeyError, ValueError)):
        return EXIT_BAD_CONFIG
    if isinstance(err, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _run_trace(cfg: ExperimentConfig, extra_marks=()):
    problem = build_problem(cfg)
    mode, schedule = build_schedule(cfg, problem)
    marks = list(cfg.get("metrics.record_at", [])) + list(extra_marks)
    trace = run(
        problem, mode, schedule, cfg.budget, cfg.cadence,
        record_at=marks, sigma=cfg.get("metrics.sigma"), seed=cfg.seed,
        inner_iters=int(cfg.get("metrics.inner_iters", 50)),
        every_iteration=bool(cfg.get("metrics.every_iteration", True)),
    )
    return problem, mode, schedule, trace


def cmd_run(cfg: ExperimentConfig, out) -> int:
    """Write ``trace.csv``, ``timing.csv`` and ``summary.json`` into ``out``."""
    problem, mode, schedule, trace = _run_trace(cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    trace.write_csv(out / "trace.csv")
    trace.write_timing(out / "timing.csv")
    first, last = dict(zip(trace.columns, trace.rows[0])), trace.final()
    _write_json(out / "summary.json", {
        "iterations": trace.iterations,
        "mode": mode,
        "initial": first,
        "final": last,
        "stationarity_initial": first["gap_x"] + first["gap_y"],
        "stationarity_final": last["gap_x"] + last["gap_y"],
        "best_gap_x": trace.meta["best_gap_x"],
        "best_gap_y": trace.meta["best_gap_y"],
        "solver_seconds": trace.meta["solver_seconds"],
        "constants": problem.constants(),
        "problem": problem.metadata(),
        "schedule": schedule.describe(),
        "sigma": trace.meta["sigma"],
        "seed": cfg.seed,
        "config": cfg.echo(),
    })
    return EXIT_OK


def rate_grid(value) -> list[int]:
    """Grid from a list of iteration counts or ``{"start", "stop", "num"}`` (log-spaced)."""
    if isinstance(value, dict):
        pts = np.logspace(math.log10(value["start"]), math.log10(value["stop"]), int(value["num"]))
        grid = sorted(set(int(round(p)) for p in pts))
    elif isinstance(value, list) and value:
        grid = sorted(set(int(v) for v in value))
    else:
        raise ConfigurationError("rate.grid must be a nonempty list or a start/stop/num object")
    if grid[0] < 1:
        raise ConfigurationError("rate.grid values must be >= 1")
    return grid


def _read_series(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def _fit_band(t, g, cfg: ExperimentConfig) -> dict[str, Any]:
    expected = cfg.get("rate.expected")
    if expected is None:
        raise ConfigurationError("rate.expected is required")
    band = cfg.get("rate.band", [expected - 0.2, expected + 0.2])
    lo, hi = float(band[0]), float(band[1])
    t, g = np.asarray(t, dtype=np.float64), np.asarray(g, dtype=np.float64)
    tail = t >= t.max() / 10.0
    use = tail if tail.sum() >= 10 else np.ones_like(tail)
    fit = estimate_rate(t[use], g[use])
    return {"slope": fit.slope, "stderr": fit.stderr, "n_points": fit.n_points,
            "expected": float(expected), "band": [lo, hi], "passed": lo <= fit.slope <= hi}


def cmd_rate(cfg: ExperimentConfig, out) -> int:
    """Fit the log-log slope of ``rate.metric`` over ``rate.grid`` from one anytime run.

    ``rate.series`` (CSV with header, columns ``t,g``) skips the run and fits
    the given series instead.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    metric = str(cfg.get("rate.metric", "avg_gap_y"))
    if cfg.get("rate.series") is not None:
        t, g = _read_series(cfg.get("rate.series"))
        source = {"series": str(cfg.get("rate.series"))}
    else:
        grid = rate_grid(cfg.get("rate.grid"))
        cfg = cfg.with_overrides({"budget.iterations": grid[-1], "budget.seconds": None})
        _, mode, schedule, trace = _run_trace(cfg, extra_marks=grid)
        if metric not in trace.columns:
            raise CapabilityError(f"trace has no column {metric!r}; available: {trace.columns}")
        iters = trace.column("iter")
        values = trace.column(metric)
        pick = np.isin(iters, grid)
        t, g = iters[pick], values[pick]
        trace.write_csv(out / "trace.csv")
        source = {"mode": mode, "schedule": schedule.describe(), "grid": grid}
    report = {"metric": metric, **_fit_band(t, g, cfg), **source,
              "points": [[float(a), float(b)] for a, b in zip(t, g)], "seed": cfg.seed}
    _write_json(out / "rate.json", report)
    verdict = "PASS" if report["passed"] else "FAIL"
    print(f"{verdict} slope={report['slope']:.4f} expected={report['expected']:.4f} "
          f"band=[{report['band'][0]:.3f}, {report['band'][1]:.3f}]")
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def _sweep_cell(values: dict[str, Any], out: str) -> tuple[int, str | None]:
    try:
        return cmd_run(ExperimentConfig(values), out), None
    except Exception as err:  # recorded in the manifest
        return exit_code_for(err), "".join(traceback.format_exception_only(type(err), err)).strip()


def default_workers() -> int:
    env = os.environ.get("MMX_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigurationError(f"MMX_WORKERS must be an integer, got {env!r}") from None
    return max(1, min(4, os.cpu_count() or 1))


def cmd_sweep(cfg: ExperimentConfig, out, workers: int | None = None) -> int:
    """Run the Cartesian product of ``sweep.grid`` as independent ``run`` cells."""
    grid = cfg.get("sweep.grid")
    if not isinstance(grid, dict) or not grid or not all(
        isinstance(v, list) and v for v in grid.values()
    ):
        raise ConfigurationError("sweep.grid must map keys to nonempty lists")
    keys = sorted(grid)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    base = {k: v for k, v in cfg.values.items() if k != "sweep.grid"}
    jobs = []
    for i, overrides in enumerate(cells):
        jobs.append(({**base, **overrides}, str(out / f"cell_{i:03d}"), overrides))
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1:
        results = [_sweep_cell(values, path) for values, path, _ in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_cell, values, path) for values, path, _ in jobs]
            results = [f.result() for f in futures]
    manifest = []
    for (_, path, overrides), (code, error) in zip(jobs, results):
        manifest.append({"dir": Path(path).name, "overrides": overrides, "exit_code": code,
                         "status": "ok" if code == EXIT_OK else "failed", "error": error})
    failed = sum(1 for m in manifest if m["status"] != "ok")
    _write_json(out / "index.json", {"cells": manifest, "failed": failed, "workers": workers,
                                     "seed": cfg.seed, "base_config": base})
    return EXIT_OK if failed == 0 else EXIT_CHECK_FAILED


def cmd_generate(cfg: ExperimentConfig, out) -> int:
    """Write the five dictionary-learning matrices as ``MMX1`` files plus a manifest."""
    sizes = {}
    for key, default in DL_DESK_SIZES.items():
        value = cfg.get(f"problem.{key}", default)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigurationError(f"problem.{key} must be an integer, got {value!r}")
        sizes[key] = value
    data = dl_generate(**sizes, rng=make_rng(cfg.seed))
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in DL_FILES:
        mat = getattr(data, name)
        write_mmx(out / f"{name}.mmx", mat)
        files[name] = {"file": f"{name}.mmx", "shape": list(mat.shape)}
    _write_json(out / "manifest.json", {"format": "MMX1", "seed": cfg.seed, "sizes": sizes,
                                        "files": files})
    return EXIT_OK
