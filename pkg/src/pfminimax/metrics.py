"""Stationarity gaps, duality gaps, the smoothing discrepancy, and rate fits.

Gap measures at a pair ``(x, y)``:

* ``gap_lmo_x``: Frank-Wolfe gap ``max_v grad_x^T (x - v)``.
* ``gap_po_x``: projected-gradient residual ``||(PO(x - sigma grad_x) - x) / sigma||``.
* ``gap_dual_y``: dual suboptimality ``max_u L(x, u) - L(x, y)``.

Duality gaps ``max_u L(x, u) - min_v L(v, y)`` are only meaningful for
convex-concave problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Array, CapabilityError, DomainError, PayoffProblem
from .oracles import simplex_project
from .smoothing import SmoothingState, beta_at, regularized_value

__all__ = [
    "GAP_FLOOR",
    "LEMMA_SLACK",
    "GapReport",
    "RateFit",
    "best_response_simplex_chi2",
    "discrepancy_h",
    "duality_gap",
    "duality_gap_ergodic",
    "estimate_rate",
    "gap_dual_y",
    "gap_dual_y_approx",
    "gap_lmo_x",
    "gap_po_x",
    "gap_report",
    "lemma1_sides",
    "primal_gap",
]

# Gaps may dip this far below zero from rounding.
GAP_FLOOR = -1e-10
# Slack on the ergodic duality-gap bound.
LEMMA_SLACK = 1e-8


def gap_lmo_x(problem: PayoffProblem, x: Array, y: Array, grad: Array | None = None) -> float:
    g = problem.grad_x(x, y) if grad is None else grad
    v = problem.x_set.lmo(g)
    return float(g @ x - g @ v)


def gap_po_x(problem: PayoffProblem, x: Array, y: Array, sigma: float,
             grad: Array | None = None) -> float:
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    g = problem.grad_x(x, y) if grad is None else grad
    p = problem.x_set.project(x - sigma * g)
    return float(np.linalg.norm(p - x)) / sigma


def gap_dual_y(problem: PayoffProblem, x: Array, y: Array) -> float:
    """Exact dual gap; raises :class:`CapabilityError` without a best-response oracle."""
    y_star = problem.best_response_y(x)
    return problem.value(x, y_star) - problem.value(x, y)


def gap_dual_y_approx(problem: PayoffProblem, x: Array, y: Array,
                      inner_iters: int = 100) -> tuple[float, float]:
    """Certified dual gap from an inner Frank-Wolfe ascent on ``L(x, .)``.

    Returns ``(estimate, certificate)`` with the true gap in
    ``[estimate, estimate + certificate]``. Concavity gives
    ``max L(x, .) <= L(x, y_k) + fw_k`` at every inner iterate, so the
    smallest such bound is a valid upper end.
    """
    if inner_iters < 1:
        raise DomainError("inner_iters must be >= 1")
    Y = problem.y_set
    base = problem.value(x, y)
    yk = y.copy()
    best_low = base
    best_up = np.inf
    for k in range(inner_iters + 1):
        val = problem.value(x, yk)
        g = problem.grad_y(x, yk)
        u = Y.lmo(-g)
        d = u - yk
        fw = max(float(g @ d), 0.0)
        best_low = max(best_low, val)
        best_up = min(best_up, val + fw)
        if k == inner_iters or fw == 0.0:
            break
        dd = float(d @ d)
        gamma = 1.0 if problem.Lyy <= 0 else min(fw / (problem.Lyy * dd), 1.0)
        yk = yk + gamma * d
    return best_low - base, max(best_up - best_low, 0.0)


def best_response_simplex_chi2(loss, lambda_prime: float, n: int) -> Array:
    """Maximizer over the simplex of ``l^T y / n - lambda'/(2n^2) ||n y - 1||^2``.

    Completing the square gives the projection of ``1/n + l/(n lambda')``.
    """
    if not lambda_prime > 0:
        raise DomainError("lambda_prime must be positive")
    loss = np.asarray(loss, dtype=np.float64).reshape(-1)
    return simplex_project(n, 1.0 / n + loss / (n * lambda_prime))


def discrepancy_h(problem: PayoffProblem, smoothing: SmoothingState, x: Array, y: Array,
                  t: int) -> float:
    """``L_beta(x, y*_beta(x)) - L_beta(x, y)`` at the step-``t`` smoothing level."""
    beta = beta_at(smoothing, t)
    y_star = problem.best_response_y_smoothed(x, beta, smoothing.y0)
    return regularized_value(problem, smoothing, x, y_star, t) - regularized_value(
        problem, smoothing, x, y, t
    )


def _require_convex(problem: PayoffProblem) -> None:
    if not problem.is_convex_in_x:
        raise CapabilityError(f"{problem.name} is not convex in x; duality gap undefined")


def duality_gap(problem: PayoffProblem, x: Array, y: Array) -> float:
    """``max_u L(x, u) - min_v L(v, y)`` via both exact best responses."""
    _require_convex(problem)
    return problem.value(x, problem.best_response_y(x)) - problem.value(
        problem.best_response_x(y), y
    )


def duality_gap_ergodic(problem: PayoffProblem, trace, bound: float | None = None) -> float:
    """Duality gap at the ergodic averages of ``trace``, checked against its bound.

    The gap at the averaged pair cannot exceed the average of
    ``gap_lmo_x + gap_dual_y`` over the same iterates. ``trace`` needs
    ``x_bar``, ``y_bar``, ``avg_gap_lmo_x`` and ``avg_gap_y`` attributes;
    an explicit ``bound`` overrides the last two. Traces whose gaps were
    sampled on recorded rows only carry no valid bound.
    """
    if bound is None and not trace.meta.get("gaps_every_iteration", True):
        raise CapabilityError("trace gaps were not averaged over every iterate")
    gap = duality_gap(problem, trace.x_bar, trace.y_bar)
    if bound is None:
        bound = trace.avg_gap_lmo_x + trace.avg_gap_y
    if gap > bound + LEMMA_SLACK:
        raise AssertionError(
            f"ergodic duality gap {gap:.6g} exceeds averaged-gap bound {bound:.6g}"
        )
    return gap


def primal_gap(problem: PayoffProblem, x: Array) -> float:
    """``max_u L(x, u) - min_x max_u L``; needs a stored optimal value."""
    return problem.value(x, problem.best_response_y(x)) - problem.optimal_value()


def lemma1_sides(problem: PayoffProblem, x: Array, y: Array, sigma: float) -> dict[str, float]:
    """Both sides of the two-way bound between the LMO and projected gaps.

    The bounds are ``lmo <= (sigma ||grad|| + D_X) po`` and
    ``po <= sqrt(lmo / sigma)``.
    """
    g = problem.grad_x(x, y)
    lmo_gap = gap_lmo_x(problem, x, y, g)
    po_gap = gap_po_x(problem, x, y, sigma, g)
    return {
        "gap_lmo": lmo_gap,
        "gap_po": po_gap,
        "lmo_upper": (sigma * float(np.linalg.norm(g)) + problem.x_set.diameter) * po_gap,
        "po_upper": float(np.sqrt(max(lmo_gap, 0.0) / sigma)),
    }


@dataclass(frozen=True)
class GapReport:
    gap_x_lmo: float
    gap_x_po: float
    gap_y: float
    sigma: float
    gap_y_cert: float | None = None
    duality_gap: float | None = None
    primal_opt_gap: float | None = None
    h_t: float | None = None


def gap_report(problem: PayoffProblem, x: Array, y: Array, sigma: float,
               smoothing: SmoothingState | None = None, t: int = 0,
               inner_iters: int = 100) -> GapReport:
    """Every gap the problem's oracles support at ``(x, y)``."""
    g = problem.grad_x(x, y)
    cert = None
    if problem.has("best_response_y"):
        gy = gap_dual_y(problem, x, y)
    else:
        gy, cert = gap_dual_y_approx(problem, x, y, inner_iters)
    dgap = pgap = h = None
    if problem.is_convex_in_x and problem.has("best_response_x") and problem.has("best_response_y"):
        dgap = duality_gap(problem, x, y)
    if problem.has("optimal_value") and problem.has("best_response_y"):
        pgap = primal_gap(problem, x)
    if smoothing is not None and problem.has("best_response_y_smoothed"):
        h = discrepancy_h(problem, smoothing, x, y, t)
    return GapReport(
        gap_x_lmo=gap_lmo_x(problem, x, y, g),
        gap_x_po=gap_po_x(problem, x, y, sigma, g),
        gap_y=gy, sigma=sigma, gap_y_cert=cert,
        duality_gap=dgap, primal_opt_gap=pgap, h_t=h,
    )


@dataclass(frozen=True)
class RateFit:
    slope: float
    stderr: float
    n_points: int


def estimate_rate(t, g, window: int | None = None, min_t: float | None = None) -> RateFit:
    """Least-squares slope of ``log g`` against ``log t``.

    ``window`` keeps the trailing number of points; ``min_t`` keeps points
    with ``t >= min_t``. At least 10 points must remain. ``stderr`` is the
    residual standard error of the fit.
    """
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    if t.size != g.size:
        raise DomainError("t and g differ in length")
    if min_t is not None:
        keep = t >= min_t
        t, g = t[keep], g[keep]
    if window is not None:
        t, g = t[-window:], g[-window:]
    if t.size < 10:
        raise DomainError(f"need at least 10 points, got {t.size}")
    if np.any(t <= 0) or np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise DomainError("rate fit needs positive t and positive finite g")
    lt, lg = np.log(t), np.log(g)
    design = np.column_stack([lt, np.ones_like(lt)])
    coef, *_ = np.linalg.lstsq(design, lg, rcond=None)
    resid = lg - design @ coef
    stderr = float(np.sqrt(resid @ resid / (t.size - 2)))
    return RateFit(float(coef[0]), stderr, int(t.size))
