"""Dual dynamic smoothing: the regularized payoff and the step schedules.

The regularized payoff subtracts a shrinking quadratic around a reference
dual point ``y0``::

    L_beta(x, y) = L(x, y) - beta/2 * ||y - y0||^2,   beta_t = C (t + shift)^(-b)

Primal step sizes ``tau_t`` come either from a power law or from the
projected-primal form used by the PO-LMO method.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .core import Array, ArgumentError, DomainError, PayoffProblem

__all__ = [
    "SmoothingState",
    "StepSchedule",
    "beta_at",
    "regularized_grad_y",
    "regularized_value",
    "smoothed_lipschitz",
    "tau_at",
]


@dataclass(frozen=True)
class SmoothingState:
    """Parameters of ``beta_t = C (t + shift)^(-b)`` and the reference point ``y0``.

    ``shift`` defaults to 1; the experiment schedules use a larger offset.
    """

    y0: Array
    C: float = 0.0
    b: float = 0.0
    mu: float = 0.0
    shift: float = 1.0

    def __post_init__(self):
        if self.C < 0:
            raise ArgumentError("smoothing scale C must be nonnegative")
        if not 0.0 <= self.b <= 1.0:
            raise ArgumentError("smoothing exponent b must lie in [0, 1]")
        if self.shift < 1.0:
            raise ArgumentError("schedule shift must be >= 1")
        object.__setattr__(self, "y0", np.asarray(self.y0, dtype=np.float64).reshape(-1))

    def beta(self, t: int) -> float:
        return beta_at(self, t)

    def describe(self) -> dict[str, Any]:
        return {"C": self.C, "b": self.b, "mu": self.mu, "shift": self.shift}


def beta_at(state: SmoothingState, t: int) -> float:
    if t < 0:
        raise ArgumentError("iteration index must be >= 0")
    if state.C == 0.0:
        return 0.0
    return state.C * (t + state.shift) ** (-state.b)


@dataclass(frozen=True)
class StepSchedule:
    """Primal step sizes.

    ``form="power"``: ``tau_t = scale * (t + shift)^(-a)``.

    ``form="po_lmo"``: ``tau_t = s / (A (t+1)^a + 5 Lxx/2 + 13 Lyx^2 (t+1)^b / (2C))``.
    With ``C = 0`` the last term becomes ``13 Lyx^2 / (2 mu)``, which keeps the
    denominator bounded away from zero when the payoff is strongly concave.
    """

    a: float
    form: str = "power"
    scale: float = 1.0
    shift: float = 1.0
    s: float = 0.2
    A: float = 1.0
    Lxx: float = 0.0
    Lyx: float = 0.0
    C: float = 0.0
    b: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if self.form not in ("power", "po_lmo"):
            raise ArgumentError(f"unknown step form {self.form!r}")
        if self.a < 0 or self.a > 1:
            raise ArgumentError("step exponent a must lie in [0, 1]")
        if self.form == "power":
            if not self.scale > 0:
                raise ArgumentError("step scale must be positive")
            if self.shift < 1.0:
                raise ArgumentError("schedule shift must be >= 1")
        else:
            if not self.A > 0 or not self.s > 0:
                raise ArgumentError("po_lmo form needs A > 0 and s > 0")
            if self.C == 0.0 and self.mu <= 0.0:
                raise ArgumentError("po_lmo form needs C > 0 or mu > 0")

    @classmethod
    def po_lmo(
        cls,
        problem: PayoffProblem,
        a: float,
        b: float,
        C: float,
        A: float = 1.0,
        s: float = 0.2,
    ) -> StepSchedule:
        return cls(
            a=a, form="po_lmo", s=s, A=A, Lxx=problem.Lxx, Lyx=problem.Lyx,
            C=C, b=b, mu=problem.mu,
        )

    def tau(self, t: int) -> float:
        return tau_at(self, t)

    def describe(self) -> dict[str, Any]:
        out = asdict(self)
        if self.form == "power":
            for key in ("s", "A", "Lxx", "Lyx", "C", "b", "mu"):
                out.pop(key)
        return out


def tau_at(schedule: StepSchedule, t: int) -> float:
    if t < 0:
        raise ArgumentError("iteration index must be >= 0")
    if schedule.form == "power":
        return schedule.scale * (t + schedule.shift) ** (-schedule.a)
    k = t + 1.0
    if schedule.C > 0:
        coupling = 13.0 * schedule.Lyx**2 * k**schedule.b / (2.0 * schedule.C)
    else:
        coupling = 13.0 * schedule.Lyx**2 / (2.0 * schedule.mu)
    return schedule.s / (schedule.A * k**schedule.a + 2.5 * schedule.Lxx + coupling)


def regularized_value(problem: PayoffProblem, smoothing: SmoothingState, x, y, t: int) -> float:
    beta = beta_at(smoothing, t)
    val = problem.value(x, y)
    if beta == 0.0:
        return val
    diff = y - smoothing.y0
    return val - 0.5 * beta * float(diff @ diff)


def regularized_grad_y(problem: PayoffProblem, smoothing: SmoothingState, x, y, t: int) -> Array:
    beta = beta_at(smoothing, t)
    g = problem.grad_y(x, y)
    if beta == 0.0:
        return g
    return g - beta * (y - smoothing.y0)


def smoothed_lipschitz(problem: PayoffProblem, beta: float) -> float:
    """Gradient Lipschitz constant of the smoothed primal function."""
    denom = beta + problem.mu
    if denom <= 0:
        raise DomainError("beta + mu must be positive")
    return problem.Lxx + problem.Lyx**2 / denom
