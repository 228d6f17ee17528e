"""Experiment configuration: flat ``dotted.key = value`` files.

Values are parsed as JSON when possible and kept as bare strings otherwise;
``#`` starts a comment. Later assignments win, and ``--set`` overrides from
the command line are applied last.

Recognized keys (defaults in parentheses):

``problem.family``
    ``matrix_game``, ``quadratic_saddle``, ``dictionary_learning`` or
    ``robust_classification``.
``problem.*``
    Family parameters; see :func:`build_problem`.
``mode``
    ``LMO-LMO``, ``LMO-PO`` or ``PO-LMO``.
``schedule.preset``
    Regime name such as ``NC-C``; ``schedule.C`` and ``schedule.A`` tune it.
``schedule.experiment``
    ``true`` for the application schedules.
``schedule.horizon``
    ``R-PDCG`` or ``CG-RPGA`` with horizon ``schedule.K``.
``schedule.a`` / ``b`` / ``C`` / ``A`` / ``form`` / ``scale`` / ``shift`` / ``s``
    Explicit schedule constants.
``budget.iterations`` or ``budget.seconds``
    Exactly one is required.
``metrics.cadence`` (10), ``metrics.sigma``, ``metrics.record_at``, ``metrics.inner_iters`` (50),
``metrics.every_iteration`` (true)
    Trace recording options.
``seed`` (0)
    Seed for synthetic data.
``rate.grid``, ``rate.metric`` (``avg_gap_y``), ``rate.expected``, ``rate.band``, ``rate.series``
    Rate checks.
``sweep.grid``
    Object mapping keys to lists of values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..core import ConfigurationError, PayoffProblem, make_rng
from ..problems import (
    DL_DESK_SIZES,
    DL_PAPER_PARAMS,
    RC_PAPER_PARAMS,
    dictionary_learning,
    dl_generate,
    matrix_game,
    random_matrix_game,
    random_quadratic_saddle,
    rc_generate,
    read_libsvm,
    read_mmx,
    robust_classification,
)
from ..solvers import (
    MODES,
    Budget,
    Schedule,
    experiment_schedule,
    horizon_schedule,
    resolve_schedule,
)

__all__ = [
    "DL_FILES",
    "ExperimentConfig",
    "build_problem",
    "build_schedule",
    "load_config",
    "parse_assignment",
    "parse_config_text",
]

DL_FILES = ("A", "A_prime", "C_tilde", "D0_prime", "C0_prime")
_EXPLICIT_KEYS = ("a", "b", "form", "scale", "shift", "s")


def _parse_value(raw: str) -> Any:
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_assignment(text: str, line: int | None = None) -> tuple[str, Any]:
    key, sep, value = text.partition("=")
    key = key.strip()
    if not sep or not key:
        where = f" (line {line})" if line is not None else ""
        raise ConfigurationError(f"expected 'key = value'{where}: {text.strip()!r}")
    return key, _parse_value(value)


def parse_config_text(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            key, value = parse_assignment(body, lineno)
            out[key] = value
    return out


def load_config(path) -> dict[str, Any]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


@dataclass
class ExperimentConfig:
    """Validated view of a flat key-value mapping."""

    values: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_sources(cls, path=None, overrides=(), seed=None) -> ExperimentConfig:
        values = load_config(path) if path else {}
        for item in overrides:
            key, value = parse_assignment(item)
            values[key] = value
        if seed is not None:
            values["seed"] = int(seed)
        values.setdefault("seed", 0)
        return cls(values)

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def with_overrides(self, overrides: dict[str, Any]) -> ExperimentConfig:
        return ExperimentConfig({**self.values, **overrides})

    @property
    def seed(self) -> int:
        try:
            return int(self.values["seed"])
        except (TypeError, ValueError):
            raise ConfigurationError(f"seed must be an integer, got {self.values['seed']!r}") from None

    @property
    def mode(self) -> str:
        mode = self.get("mode")
        if mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
        return mode

    @property
    def budget(self) -> Budget:
        it, sec = self.get("budget.iterations"), self.get("budget.seconds")
        if (it is None) == (sec is None):
            raise ConfigurationError("set exactly one of budget.iterations or budget.seconds")
        try:
            return Budget(iterations=None if it is None else int(it),
                          seconds=None if sec is None else float(sec))
        except ValueError as err:
            raise ConfigurationError(str(err)) from None

    @property
    def cadence(self) -> int:
        return int(self.get("metrics.cadence", 10))

    def echo(self) -> dict[str, Any]:
        return dict(sorted(self.values.items()))


def _num(cfg: ExperimentConfig, key: str, default):
    value = cfg.get(key, default)
    if value is None:
        raise ConfigurationError(f"missing required key {key}")
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigurationError(f"{key} must be a number, got {value!r}")
    return value


def build_problem(cfg: ExperimentConfig) -> PayoffProblem:
    """Instantiate the configured problem; synthetic data uses ``seed``."""
    family = cfg.get("problem.family")
    rng = make_rng(cfg.seed)
    if family == "matrix_game":
        if cfg.get("problem.matrix") is not None:
            return matrix_game(np.asarray(cfg.get("problem.matrix"), dtype=np.float64))
        return random_matrix_game(int(_num(cfg, "problem.m", 10)), int(_num(cfg, "problem.n", 10)), rng)
    if family == "quadratic_saddle":
        return random_quadratic_saddle(
            int(_num(cfg, "problem.dx", 5)), int(_num(cfg, "problem.dy", 5)),
            float(_num(cfg, "problem.mu_x", 1.0)), float(_num(cfg, "problem.mu_y", 1.0)),
            rng, radius=float(_num(cfg, "problem.radius", 2.0)),
        )
    if family == "dictionary_learning":
        data_dir = cfg.get("problem.data_dir")
        if data_dir is not None:
            mats = {name: read_mmx(Path(data_dir) / f"{name}.mmx") for name in DL_FILES}
        else:
            sizes = {k: int(_num(cfg, f"problem.{k}", v)) for k, v in DL_DESK_SIZES.items()}
            mats = dl_generate(**sizes, rng=rng)._asdict()
        return dictionary_learning(
            mats["A"], mats["A_prime"], mats["C_tilde"],
            delta=float(_num(cfg, "problem.delta", DL_PAPER_PARAMS["delta"])),
            r=float(_num(cfg, "problem.r", DL_PAPER_PARAMS["r"])),
            B=float(_num(cfg, "problem.B", DL_PAPER_PARAMS["B"])),
            D0_prime=mats["D0_prime"], C0_prime=mats["C0_prime"],
        )
    if family == "robust_classification":
        path = cfg.get("problem.data")
        if path is not None:
            samples = read_libsvm(path)
            source: Any = samples
            k = cfg.get("problem.k", samples.k)
        else:
            k = int(_num(cfg, "problem.k", 3))
            source = rc_generate(int(_num(cfg, "problem.n", 50)), int(_num(cfg, "problem.d", 20)), k, rng)
        return robust_classification(
            source, k=int(k),
            r=float(_num(cfg, "problem.r", RC_PAPER_PARAMS["r"])),
            lambda_prime=float(_num(cfg, "problem.lambda_prime", RC_PAPER_PARAMS["lambda_prime"])),
            dual_set=str(cfg.get("problem.dual_set", "simplex")),
            rho=float(_num(cfg, "problem.rho", 1.0)),
        )
    raise ConfigurationError(f"unknown problem.family {family!r}")


def build_schedule(cfg: ExperimentConfig, problem: PayoffProblem) -> tuple[str, Schedule]:
    """Resolve the schedule keys; returns ``(mode, schedule)``.

    A horizon schedule fixes its own mode; ``mode`` must agree if given.
    """
    chosen = [k for k in ("schedule.preset", "schedule.experiment", "schedule.horizon")
              if cfg.get(k) not in (None, False)]
    explicit = [k for k in _EXPLICIT_KEYS if cfg.get(f"schedule.{k}") is not None]
    if len(chosen) + bool(explicit) != 1:
        raise ConfigurationError(
            "choose exactly one of schedule.preset, schedule.experiment, schedule.horizon "
            "or explicit schedule constants"
        )
    if cfg.get("schedule.horizon") is not None:
        mode, sched = horizon_schedule(str(cfg.get("schedule.horizon")), problem,
                                       cfg.get("schedule.K"))
        if cfg.get("mode") not in (None, mode):
            raise ConfigurationError(f"{cfg.get('schedule.horizon')} runs in {mode} mode")
        return mode, sched
    mode = cfg.mode
    if cfg.get("schedule.experiment"):
        return mode, experiment_schedule(problem, mode)
    C = float(_num(cfg, "schedule.C", 0.0 if explicit else 1.0))
    A = float(_num(cfg, "schedule.A", 1.0))
    if cfg.get("schedule.preset") is not None:
        return mode, resolve_schedule(problem, mode, regime=str(cfg.get("schedule.preset")),
                                      C=C, A=A)
    return mode, resolve_schedule(
        problem, mode, a=float(_num(cfg, "schedule.a", None)), b=float(_num(cfg, "schedule.b", 0.0)),
        C=C, A=A, form=str(cfg.get("schedule.form", "power")),
        scale=float(_num(cfg, "schedule.scale", 1.0)), shift=float(_num(cfg, "schedule.shift", 1.0)),
        s=float(_num(cfg, "schedule.s", 0.2)),
    )
