"""Single-loop primal-dual methods and a budgeted run loop.

Three step bodies share the dual update rule:

* ``LMO-LMO``: Frank-Wolfe step in ``x``, adaptive Frank-Wolfe step in ``y``.
* ``LMO-PO``: Frank-Wolfe step in ``x``, projected gradient ascent in ``y``.
* ``PO-LMO``: projected gradient descent in ``x``, adaptive Frank-Wolfe in ``y``.

Every dual block reads the old pair ``(x_t, y_t)``. Schedules are anytime:
``tau_t`` and ``beta_t`` depend on ``t`` only, so a run truncated at ``t``
reproduces a shorter run exactly.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .core import (
    Array,
    ArgumentError,
    ConfigurationError,
    NumericalError,
    PayoffProblem,
    UnsupportedRegimeError,
)
from .metrics import (
    LEMMA_SLACK,
    duality_gap,
    gap_dual_y_approx,
    gap_lmo_x,
    gap_po_x,
    primal_gap,
)
from .smoothing import SmoothingState, StepSchedule, beta_at, regularized_value

__all__ = [
    "DEGENERATE_SQ_NORM",
    "HORIZON_SCHEDULES",
    "MODES",
    "REGIMES",
    "STEPS",
    "Budget",
    "IterateState",
    "KahanSum",
    "RegimePreset",
    "Schedule",
    "Trace",
    "dual_adaptive_step",
    "experiment_schedule",
    "horizon_schedule",
    "preset",
    "resolve_schedule",
    "run",
    "step_lmo_lmo",
    "step_lmo_po",
    "step_po_lmo",
    "valid_pairs",
]

MODES = ("LMO-LMO", "LMO-PO", "PO-LMO")
REGIMES = ("NC-C", "NC-SC", "NC-C+SCY", "NC-SC+SCY", "C-C", "C-SC", "C-C+SCY", "C-SC+SCY")

# ||u - y||^2 below this is treated as a zero-length dual direction.
DEGENERATE_SQ_NORM = 1e-24


class KahanSum:
    """Compensated running sum of equally shaped arrays."""

    __slots__ = ("total", "_comp")

    def __init__(self, first, comp=None):
        self.total = np.array(first, dtype=np.float64, copy=True)
        self._comp = np.zeros_like(self.total) if comp is None else comp

    def plus(self, value) -> KahanSum:
        """New sum with ``value`` added; ``self`` is left untouched."""
        yv = value - self._comp
        tv = self.total + yv
        out = KahanSum.__new__(KahanSum)
        out.total, out._comp = tv, (tv - self.total) - yv
        return out


@dataclass
class IterateState:
    """Current iterate plus running sums for the ergodic averages.

    Sums cover iterates ``0..t`` inclusive. ``tau``, ``beta`` and ``gamma``
    are the parameters of the step that produced this state.
    """

    x: Array
    y: Array
    t: int
    x_sum: KahanSum
    y_sum: KahanSum
    tau: float = math.nan
    beta: float = math.nan
    gamma: float = math.nan

    @classmethod
    def initial(cls, x0: Array, y0: Array) -> IterateState:
        return cls(x0.copy(), y0.copy(), 0, KahanSum(x0), KahanSum(y0))

    @property
    def x_bar(self) -> Array:
        return self.x_sum.total / (self.t + 1)

    @property
    def y_bar(self) -> Array:
        return self.y_sum.total / (self.t + 1)

    def advance(self, x: Array, y: Array, tau: float, beta: float, gamma: float) -> IterateState:
        return IterateState(x, y, self.t + 1, self.x_sum.plus(x), self.y_sum.plus(y),
                            tau, beta, gamma)


@dataclass(frozen=True)
class Schedule:
    """Resolved primal steps and dual smoothing for one run."""

    step: StepSchedule
    smoothing: SmoothingState
    label: str = "explicit"

    def describe(self) -> dict[str, Any]:
        return {"label": self.label, "step": self.step.describe(),
                "smoothing": self.smoothing.describe()}


def _dual_grad(problem, smoothing, y, t, gy):
    beta = beta_at(smoothing, t)
    if beta == 0.0:
        return gy, beta
    return gy - beta * (y - smoothing.y0), beta


def dual_adaptive_step(problem: PayoffProblem, smoothing: SmoothingState, x: Array, y: Array,
                       t: int, grad_y: Array | None = None) -> tuple[Array, Array, float]:
    """Frank-Wolfe ascent on ``L_beta(x, .)`` with the short-step rule.

    ``gamma = min(g^T (u - y) / ((Lyy + beta) ||u - y||^2), 1)`` maximizes the
    quadratic lower model, so the smoothed payoff never decreases.
    """
    gy = problem.grad_y(x, y) if grad_y is None else grad_y
    g, beta = _dual_grad(problem, smoothing, y, t, gy)
    if max(beta, problem.mu) <= 0.0:
        raise ConfigurationError("dual Frank-Wolfe step needs beta_t > 0 or mu > 0")
    u = problem.y_set.lmo(-g)
    d = u - y
    dd = float(d @ d)
    if dd < DEGENERATE_SQ_NORM:
        return y.copy(), u, 0.0
    num = float(g @ d)
    # exact LMO gives num >= 0; allow rounding only
    assert num >= -1e-12 * max(1.0, float(np.linalg.norm(g)) * math.sqrt(dd)), (
        f"negative dual ascent numerator {num:.3e}: LMO is not optimal"
    )
    curv = (problem.Lyy + beta) * dd
    if curv <= 0.0:
        gamma = 1.0 if num > 0.0 else 0.0
    else:
        gamma = min(max(num, 0.0) / curv, 1.0)
    return y + gamma * d, u, gamma


def _tau(schedule: Schedule, t: int, bounded: bool) -> float:
    tau = schedule.step.tau(t)
    if bounded and not 0.0 < tau <= 1.0:
        raise ConfigurationError(f"Frank-Wolfe step tau_{t} = {tau:.6g} outside (0, 1]")
    return tau


def step_lmo_lmo(problem: PayoffProblem, schedule: Schedule, state: IterateState,
                 grads: tuple[Array, Array] | None = None) -> IterateState:
    gx, gy = problem.grads(state.x, state.y) if grads is None else grads
    t = state.t
    tau = _tau(schedule, t, bounded=True)
    v = problem.x_set.lmo(gx)
    x_next = state.x + tau * (v - state.x)
    y_next, _, gamma = dual_adaptive_step(problem, schedule.smoothing, state.x, state.y, t, gy)
    return state.advance(x_next, y_next, tau, beta_at(schedule.smoothing, t), gamma)


def step_lmo_po(problem: PayoffProblem, schedule: Schedule, state: IterateState,
                grads: tuple[Array, Array] | None = None) -> IterateState:
    gx, gy = problem.grads(state.x, state.y) if grads is None else grads
    t = state.t
    tau = _tau(schedule, t, bounded=True)
    v = problem.x_set.lmo(gx)
    x_next = state.x + tau * (v - state.x)
    g, beta = _dual_grad(problem, schedule.smoothing, state.y, t, gy)
    curv = problem.Lyy + beta
    if curv <= 0.0:
        raise ConfigurationError(
            "projected dual step needs Lyy + beta_t > 0; beta_t = 0 requires a strongly concave regime"
        )
    gamma = 1.0 / curv
    y_next = problem.y_set.project(state.y + gamma * g)
    return state.advance(x_next, y_next, tau, beta, gamma)


def step_po_lmo(problem: PayoffProblem, schedule: Schedule, state: IterateState,
                grads: tuple[Array, Array] | None = None) -> IterateState:
    gx, gy = problem.grads(state.x, state.y) if grads is None else grads
    t = state.t
    tau = _tau(schedule, t, bounded=False)
    x_next = problem.x_set.project(state.x - tau * gx)
    y_next, _, gamma = dual_adaptive_step(problem, schedule.smoothing, state.x, state.y, t, gy)
    return state.advance(x_next, y_next, tau, beta_at(schedule.smoothing, t), gamma)


STEPS: dict[str, Callable[..., IterateState]] = {
    "LMO-LMO": step_lmo_lmo,
    "LMO-PO": step_lmo_po,
    "PO-LMO": step_po_lmo,
}


# (regime, mode) -> (a, b or None for beta_t = 0, po_lmo scale s or None)
_PRESET_TABLE: dict[tuple[str, str], tuple[float, float | None, float | None]] = {
    ("NC-C", "LMO-LMO"): (5 / 6, 1 / 6, None),
    ("NC-SC", "LMO-LMO"): (3 / 4, None, None),
    ("NC-C+SCY", "LMO-LMO"): (4 / 5, 1 / 5, None),
    ("NC-SC+SCY", "LMO-LMO"): (2 / 3, None, None),
    ("C-C", "LMO-LMO"): (1.0, 1 / 5, None),
    ("C-SC", "LMO-LMO"): (1.0, None, None),
    ("C-C+SCY", "LMO-LMO"): (1.0, 1 / 4, None),
    ("C-SC+SCY", "LMO-LMO"): (1.0, None, None),
    ("NC-C", "LMO-PO"): (3 / 4, 1 / 4, None),
    ("NC-SC", "LMO-PO"): (1 / 2, None, None),
    ("C-C", "LMO-PO"): (1.0, 1 / 3, None),
    ("C-SC", "LMO-PO"): (1.0, None, None),
    ("NC-C", "PO-LMO"): (2 / 3, 1 / 6, 1 / 5),
    ("NC-SC", "PO-LMO"): (1 / 2, None, 1 / 5),
    ("NC-C+SCY", "PO-LMO"): (3 / 5, 1 / 5, 3 / 4),
    ("NC-SC+SCY", "PO-LMO"): (1 / 3, None, 3 / 4),
    ("C-C", "PO-LMO"): (2 / 3, 1 / 3, 1 / 5),
    ("C-SC", "PO-LMO"): (1 / 2, None, 1 / 5),
    ("C-SC+SCY", "PO-LMO"): (1 / 3, None, 3 / 4),
}


def valid_pairs() -> list[tuple[str, str]]:
    return sorted(_PRESET_TABLE)


@dataclass(frozen=True)
class RegimePreset:
    """Theoretical schedule for one (regime, mode) pair.

    ``b is None`` means ``beta_t = 0`` (``C = 0``), which needs ``mu > 0``.
    PO-LMO presets use the ``po_lmo`` step form with scale ``s`` and measure
    the projected gap with ``sigma = tau_0``.
    """

    regime: str
    mode: str
    a: float
    b: float | None
    C: float = 1.0
    A: float = 1.0
    s: float | None = None

    @property
    def beta_zero(self) -> bool:
        return self.b is None

    @property
    def form(self) -> str:
        return "po_lmo" if self.mode == "PO-LMO" else "power"

    def resolve(self, problem: PayoffProblem, y0: Array | None = None) -> Schedule:
        if "SCY" in self.regime and problem.y_set.strong_convexity_alpha <= 0:
            raise ConfigurationError(f"regime {self.regime} needs a strongly convex dual set")
        if y0 is None:
            y0 = problem.initial_point()[1]
        C = 0.0 if self.beta_zero else self.C
        b = 0.0 if self.beta_zero else self.b
        if C == 0.0 and problem.mu <= 0.0:
            raise ConfigurationError(
                f"regime {self.regime} sets beta_t = 0, which needs mu > 0 (problem has mu = 0)"
            )
        smoothing = SmoothingState(y0=y0, C=C, b=b, mu=problem.mu)
        if self.form == "po_lmo":
            step = StepSchedule.po_lmo(problem, self.a, b, C, A=self.A, s=self.s)
        else:
            step = StepSchedule(a=self.a)
        return Schedule(step, smoothing, f"{self.regime}/{self.mode}")

    def describe(self) -> dict[str, Any]:
        return {"regime": self.regime, "mode": self.mode, "a": self.a, "b": self.b,
                "C": 0.0 if self.beta_zero else self.C, "A": self.A, "s": self.s,
                "form": self.form}


def preset(regime: str, mode: str, C: float = 1.0, A: float = 1.0) -> RegimePreset:
    key = (regime, mode)
    if key not in _PRESET_TABLE:
        pairs = ", ".join(f"{r}/{m}" for r, m in valid_pairs())
        raise UnsupportedRegimeError(f"no schedule for {regime}/{mode}; valid pairs: {pairs}")
    if not C > 0 or not A > 0:
        raise ArgumentError("C and A must be positive")
    a, b, s = _PRESET_TABLE[key]
    return RegimePreset(regime, mode, a, b, C, A, s)


# (method, family) -> (mode, tau scale, tau exponent of K, beta scale, beta exponent, default K)
HORIZON_SCHEDULES: dict[tuple[str, str], tuple[str, float, float, float, float, int]] = {
    ("R-PDCG", "dictionary_learning"): ("LMO-LMO", 1.0, 5 / 6, 1e-2, 1 / 6, 1000),
    ("CG-RPGA", "dictionary_learning"): ("LMO-PO", 1.0, 3 / 4, 1e-2, 1 / 4, 1000),
    ("R-PDCG", "robust_classification"): ("LMO-LMO", 10.0, 3 / 4, 0.0, 0.0, 10_000),
    ("CG-RPGA", "robust_classification"): ("LMO-PO", 10.0, 1 / 2, 0.0, 0.0, 10_000),
}


def horizon_schedule(method: str, problem: PayoffProblem, K: int | None = None,
                     y0: Array | None = None) -> tuple[str, Schedule]:
    """Constant-step schedules tuned to a horizon ``K``; returns ``(mode, schedule)``.

    These reuse the LMO-LMO and LMO-PO bodies with ``tau`` and ``beta`` frozen.
    """
    key = (method, problem.name)
    if key not in HORIZON_SCHEDULES:
        raise UnsupportedRegimeError(f"no horizon schedule for {method} on {problem.name}")
    mode, ts, te, bs, be, k_default = HORIZON_SCHEDULES[key]
    K = k_default if K is None else int(K)
    if K < 1:
        raise ArgumentError("horizon K must be >= 1")
    if y0 is None:
        y0 = problem.initial_point()[1]
    step = StepSchedule(a=0.0, scale=ts * K ** (-te))
    smoothing = SmoothingState(y0=y0, C=bs * K ** (-be), b=0.0, mu=problem.mu)
    return mode, Schedule(step, smoothing, f"{method}(K={K})")


def experiment_schedule(problem: PayoffProblem, mode: str, y0: Array | None = None) -> Schedule:
    """Hand-tuned schedules used for the two application experiments."""
    if y0 is None:
        y0 = problem.initial_point()[1]
    if problem.name == "dictionary_learning":
        table = {
            "LMO-LMO": (StepSchedule(a=4 / 5, scale=2 ** (4 / 5), shift=10), 1 / 5),
            "LMO-PO": (StepSchedule(a=3 / 4, scale=2 ** (3 / 4), shift=10), 1 / 4),
            "PO-LMO": (StepSchedule(a=3 / 5, scale=100.0, shift=10), 1 / 5),
        }
        step, b = table[mode]
        smoothing = SmoothingState(y0=y0, C=1e-2, b=b, mu=problem.mu, shift=10)
    elif problem.name == "robust_classification":
        if mode == "PO-LMO":
            step = StepSchedule(a=1 / 2, scale=1e3)
        else:
            step = StepSchedule(a=1.0, scale=2.0, shift=10)
        smoothing = SmoothingState(y0=y0, mu=problem.mu)
    else:
        raise UnsupportedRegimeError(f"no experiment schedule for {problem.name}")
    return Schedule(step, smoothing, f"experiment/{problem.name}/{mode}")


@dataclass(frozen=True)
class Budget:
    """Either an iteration count or a wall-clock limit on solver time."""

    iterations: int | None = None
    seconds: float | None = None

    def __post_init__(self):
        if (self.iterations is None) == (self.seconds is None):
            raise ArgumentError("budget needs exactly one of iterations or seconds")
        if self.iterations is not None and (int(self.iterations) != self.iterations
                                            or self.iterations < 0):
            raise ArgumentError("iteration budget must be a nonnegative integer")
        if self.seconds is not None and not self.seconds > 0:
            raise ArgumentError("time budget must be positive")

    def describe(self) -> dict[str, Any]:
        return {"iterations": self.iterations, "seconds": self.seconds}


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


@dataclass
class Trace:
    """Recorded rows of one run plus the final iterates and averages.

    Row ``t`` describes the pair ``(x_t, y_t)``: ``tau``/``beta`` are the
    schedule values at ``t`` and ``gamma`` is the dual step that produced
    ``y_t`` (blank at ``t = 0``). Averages run over iterates ``0..t``.
    """

    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    wall_ms: list[float] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)
    x_final: Array | None = None
    y_final: Array | None = None
    x_bar: Array | None = None
    y_bar: Array | None = None
    avg_gap_lmo_x: float = math.nan
    avg_gap_y: float = math.nan

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([math.nan if r[j] is None else r[j] for r in self.rows], dtype=np.float64)

    @property
    def iterations(self) -> int:
        return int(self.rows[-1][0]) if self.rows else 0

    def final(self) -> dict[str, Any]:
        return dict(zip(self.columns, self.rows[-1]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    def write_timing(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "wall_ms"])
            for r, ms in zip(self.rows, self.wall_ms):
                w.writerow([r[0], format(ms, ".3f")])


def _check_finite(t: int, what: str, *arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError(f"non-finite {what}", iteration=t)


def run(
    problem: PayoffProblem,
    mode: str,
    schedule: Schedule | RegimePreset,
    budget: Budget,
    metric_cadence: int = 10,
    *,
    record_at: Sequence[int] = (),
    sigma: float | None = None,
    x0: Array | None = None,
    y0: Array | None = None,
    seed: int | None = None,
    check_ascent: bool = False,
    check_feasibility: bool = False,
    inner_iters: int = 50,
    every_iteration: bool = True,
) -> Trace:
    """Run ``mode`` on ``problem`` and record a :class:`Trace`.

    Gaps are evaluated at every iterate so the averaged columns cover all of
    ``0..t``. When the problem has no exact dual best response, ``gap_y`` is a
    certified estimate computed on recorded rows only, and its averages cover
    those rows. With ``every_iteration=False`` all gaps are evaluated on
    recorded rows only, which is much cheaper; the averages then cover
    recorded rows and the ergodic duality gap bound is not asserted. ``sigma`` for the projected gap
    defaults to ``tau_0``.
    Only solver time counts toward a wall-clock budget.
    """
    if mode not in STEPS:
        raise ConfigurationError(f"unknown mode {mode!r}; expected one of {MODES}")
    if metric_cadence < 1:
        raise ArgumentError("metric cadence must be >= 1")
    init_x, init_y = problem.initial_point()
    x_start = init_x if x0 is None else np.asarray(x0, dtype=np.float64)
    y_start = init_y if y0 is None else np.asarray(y0, dtype=np.float64)
    if isinstance(schedule, RegimePreset):
        if schedule.mode != mode:
            raise ConfigurationError(f"preset is for {schedule.mode}, run mode is {mode}")
        schedule = schedule.resolve(problem, y_start)
    step_fn = STEPS[mode]
    sigma = schedule.step.tau(0) if sigma is None else float(sigma)
    if mode == "LMO-PO" and problem.Lyy + beta_at(schedule.smoothing, 0) <= 0:
        raise ConfigurationError("LMO-PO needs Lyy + beta_t > 0")

    exact_y = problem.has("best_response_y")
    with_dgap = problem.is_convex_in_x and exact_y and problem.has("best_response_x")
    with_pgap = exact_y and problem.has("optimal_value")
    columns = ["iter", "tau", "beta", "gamma", "objective", "gap_x", "gap_y"]
    if not exact_y:
        columns.append("gap_y_cert")
    columns += ["avg_gap_x", "avg_gap_y"]
    if with_pgap:
        columns.append("primal_gap")
    if with_dgap:
        columns.append("duality_gap")
    trace = Trace(columns)
    trace.meta = {
        "problem": problem.metadata(),
        "mode": mode,
        "schedule": schedule.describe(),
        "sigma": sigma,
        "budget": budget.describe(),
        "metric_cadence": metric_cadence,
        "seed": seed,
        "gap_x_kind": "po" if mode == "PO-LMO" else "lmo",
        "gap_y_kind": "exact" if exact_y else "certified_estimate",
        "gaps_every_iteration": every_iteration,
    }

    marks = set(int(t) for t in record_at)
    T = budget.iterations
    state = IterateState.initial(x_start, y_start)
    sums = {"lmo": 0.0, "po": 0.0, "y": 0.0}
    comps = {"lmo": 0.0, "po": 0.0, "y": 0.0}
    n_x = n_y = 0
    best = {"gap_x": math.inf, "gap_y": math.inf}
    min_ascent = math.inf
    solver_s = 0.0
    t0_wall = time.perf_counter()

    def kahan(key, v):
        yv = v - comps[key]
        tv = sums[key] + yv
        comps[key] = (tv - sums[key]) - yv
        sums[key] = tv

    while True:
        t = state.t
        x, y = state.x, state.y
        if check_feasibility and not (problem.x_set.contains(x) and problem.y_set.contains(y)):
            raise NumericalError("iterate left the feasible set", iteration=t)
        gx, gy = problem.grads(x, y)
        obj = problem.value(x, y)
        _check_finite(t, "gradient", gx, gy)
        _check_finite(t, "objective", obj)

        if T is not None:
            final = t >= T
        else:
            final = solver_s >= budget.seconds
        record = final or t % metric_cadence == 0 or t in marks

        if every_iteration or record:
            n_x += 1
            g_lmo = gap_lmo_x(problem, x, y, gx)
            kahan("lmo", g_lmo)
            g_po = None
            if mode == "PO-LMO":
                g_po = gap_po_x(problem, x, y, sigma, gx)
                kahan("po", g_po)
            gap_x = g_po if mode == "PO-LMO" else g_lmo
            best["gap_x"] = min(best["gap_x"], gap_x)
        cert = g_y = None
        if exact_y and (every_iteration or record):
            g_y = problem.value(x, problem.best_response_y(x)) - obj
        elif record:
            g_y, cert = gap_dual_y_approx(problem, x, y, inner_iters)
        if g_y is not None:
            kahan("y", g_y)
            n_y += 1
            best["gap_y"] = min(best["gap_y"], g_y)

        if record:
            avg_x = (sums["po"] if mode == "PO-LMO" else sums["lmo"]) / n_x
            avg_y = sums["y"] / n_y
            row = [t, schedule.step.tau(t), beta_at(schedule.smoothing, t), state.gamma,
                   obj, gap_x, g_y]
            if not exact_y:
                row.append(cert)
            row += [avg_x, avg_y]
            if with_pgap:
                row.append(primal_gap(problem, state.x_bar))
            if with_dgap:
                dg = duality_gap(problem, state.x_bar, state.y_bar)
                bound = sums["lmo"] / n_x + sums["y"] / n_y
                if every_iteration and dg > bound + LEMMA_SLACK:
                    raise AssertionError(
                        f"iteration {t}: ergodic duality gap {dg:.6g} exceeds bound {bound:.6g}"
                    )
                row.append(dg)
            trace.rows.append(row)
            trace.wall_ms.append(1e3 * (time.perf_counter() - t0_wall))
        if final:
            break

        tic = time.perf_counter()
        try:
            new_state = step_fn(problem, schedule, state, (gx, gy))
        except NumericalError as err:
            raise NumericalError(str(err), iteration=t) from err
        solver_s += time.perf_counter() - tic
        _check_finite(t, "iterate", new_state.x, new_state.y)
        if check_ascent:
            before = regularized_value(problem, schedule.smoothing, x, y, t)
            after = regularized_value(problem, schedule.smoothing, x, new_state.y, t)
            min_ascent = min(min_ascent, after - before)
        state = new_state

    trace.x_final, trace.y_final = state.x, state.y
    trace.x_bar, trace.y_bar = state.x_bar, state.y_bar
    trace.avg_gap_lmo_x = sums["lmo"] / n_x
    trace.avg_gap_y = sums["y"] / n_y
    trace.meta["iterations"] = state.t
    trace.meta["best_gap_x"] = best["gap_x"]
    trace.meta["best_gap_y"] = best["gap_y"] if math.isfinite(best["gap_y"]) else None
    trace.meta["solver_seconds"] = solver_s
    if check_ascent:
        trace.meta["min_ascent_margin"] = min_ascent if state.t > 0 else None
    return trace


def resolve_schedule(problem: PayoffProblem, mode: str, *, regime: str | None = None,
                     a: float | None = None, b: float = 0.0, C: float = 0.0, A: float = 1.0,
                     form: str = "power", scale: float = 1.0, shift: float = 1.0,
                     s: float = 0.2, y0: Array | None = None) -> Schedule:
    """Build a schedule from a regime name or explicit constants (not both)."""
    if (regime is None) == (a is None):
        raise ConfigurationError("give exactly one of a regime preset or an explicit exponent a")
    if regime is not None:
        return preset(regime, mode, C=C if C > 0 else 1.0, A=A).resolve(problem, y0)
    if y0 is None:
        y0 = problem.initial_point()[1]
    if C == 0.0 and problem.mu <= 0.0 and mode in MODES:
        raise ConfigurationError("C = 0 gives beta_t = 0, which needs mu > 0")
    smoothing = SmoothingState(y0=y0, C=C, b=b, mu=problem.mu, shift=shift)
    if form == "po_lmo":
        step = StepSchedule.po_lmo(problem, a, b, C, A=A, s=s)
    else:
        step = StepSchedule(a=a, scale=scale, shift=shift)
    return Schedule(step, smoothing)

