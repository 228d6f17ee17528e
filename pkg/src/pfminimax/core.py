"""Abstract feasible sets, payoff problems, and shared error types.

Points are flat ``float64`` arrays. Matrix-valued and product-space points
are stored row-major; the owning set carries the shape needed to view them.
Inner products and norms on matrix blocks are Frobenius throughout.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "MEMBERSHIP_TOL",
    "Array",
    "ArgumentError",
    "CapabilityError",
    "ConfigurationError",
    "DomainError",
    "FeasibleSet",
    "NumericalError",
    "ParseError",
    "PayoffProblem",
    "UnsupportedRegimeError",
    "as_point",
    "lmo",
    "make_rng",
    "project",
]

Array = NDArray[np.float64]

# Absolute tolerance on constraint residuals for every feasibility check.
MEMBERSHIP_TOL = 1e-9


class ArgumentError(ValueError):
    """Malformed input: wrong shape, non-finite coordinates, bad sizes."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Solver or experiment configuration that cannot run."""


class UnsupportedRegimeError(ConfigurationError):
    """A (regime, mode) pair without a published schedule."""


class CapabilityError(NotImplementedError):
    """The problem does not expose an oracle the caller needs."""


class ParseError(ValueError):
    """Malformed data file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(ArithmeticError):
    """Non-finite values or a failed factorization.

    ``iteration`` is set when the failure happened inside a solver loop.
    """

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def as_point(values: Any, dim: int, name: str = "point") -> Array:
    """Flatten ``values`` to a float64 vector of length ``dim``, validating it."""
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size != dim:
        raise ArgumentError(f"{name} has {arr.size} coordinates, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} has non-finite coordinates")
    return arr


class FeasibleSet(ABC):
    """Compact convex set with closed-form linear minimization and projection.

    Subclasses set ``dim``, ``shape``, ``diameter`` and ``strong_convexity_alpha``
    (0 when the set is not strongly convex) and implement ``_lmo``,
    ``_project`` and ``residual``.
    """

    kind: str = "set"
    dim: int
    shape: tuple[int, ...]
    diameter: float
    strong_convexity_alpha: float = 0.0

    def lmo(self, direction: Any) -> Array:
        """Return a minimizer of ``<direction, v>`` over the set.

        Ties resolve to the lexicographically smallest canonical candidate.
        """
        d = as_point(direction, self.dim, "direction")
        return self._lmo(d)

    def project(self, point: Any) -> Array:
        """Euclidean projection of ``point`` onto the set."""
        u = as_point(point, self.dim, "point")
        return self._project(u)

    def contains(self, point: Any, tol: float = MEMBERSHIP_TOL) -> bool:
        u = np.asarray(point, dtype=np.float64).reshape(-1)
        if u.size != self.dim or not np.all(np.isfinite(u)):
            return False
        return self.residual(u) <= tol

    @abstractmethod
    def residual(self, u: Array) -> float:
        """Largest constraint violation at ``u`` (0 when feasible)."""

    @abstractmethod
    def _lmo(self, d: Array) -> Array: ...

    @abstractmethod
    def _project(self, u: Array) -> Array: ...

    def sample(self, rng: np.random.Generator, n: int = 1) -> Array:
        """Random feasible points, one per row; covers interior and boundary."""
        pts = np.empty((n, self.dim))
        for i in range(n):
            g = rng.standard_normal(self.dim) * rng.uniform(0.1, 3.0)
            p = self._project(g)
            if rng.random() < 0.5:
                # pull toward an LMO vertex to reach the boundary too
                v = self._lmo(rng.standard_normal(self.dim))
                p = p + rng.random() * (v - p)
            pts[i] = p
        return pts

    def vertices(self) -> Array | None:
        """Extreme points for small polytopes, else ``None``."""
        return None

    def describe(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "shape": list(self.shape),
            "diameter": self.diameter,
            "strong_convexity_alpha": self.strong_convexity_alpha,
        }


def lmo(feasible_set: FeasibleSet, direction: Any) -> Array:
    return feasible_set.lmo(direction)


def project(feasible_set: FeasibleSet, point: Any) -> Array:
    return feasible_set.project(point)


class PayoffProblem(ABC):
    """Smooth payoff ``L(x, y)`` minimized over ``x_set`` and maximized over ``y_set``.

    Smoothness constants follow the block Lipschitz model

        ||grad_x L(x,y) - grad_x L(x',y')|| <= Lxx ||x-x'|| + Lyx ||y-y'||
        ||grad_y L(x,y) - grad_y L(x',y')|| <= Lyx ||x-x'|| + Lyy ||y-y'||

    and ``mu`` is the strong-concavity modulus of ``L(x, .)``. Constants are
    supplied by the concrete problem; nothing here estimates them.

    Optional oracles (best responses, known optimum) raise
    :class:`CapabilityError` unless a subclass provides them.
    """

    name: str = "problem"
    x_set: FeasibleSet
    y_set: FeasibleSet
    Lxx: float
    Lyx: float
    Lyy: float
    mu: float = 0.0
    is_convex_in_x: bool = False

    @abstractmethod
    def value(self, x: Array, y: Array) -> float: ...

    @abstractmethod
    def grad_x(self, x: Array, y: Array) -> Array: ...

    @abstractmethod
    def grad_y(self, x: Array, y: Array) -> Array: ...

    def grads(self, x: Array, y: Array) -> tuple[Array, Array]:
        """Both partial gradients; override when they share work."""
        return self.grad_x(x, y), self.grad_y(x, y)

    def best_response_y(self, x: Array) -> Array:
        """Exact maximizer of ``L(x, .)`` over ``y_set``."""
        raise CapabilityError(
            f"{self.name} has no exact dual best response; "
            "use metrics.gap_dual_y_approx for a certified estimate"
        )

    def best_response_y_smoothed(self, x: Array, beta: float, y0: Array) -> Array:
        """Exact maximizer of ``L(x, y) - beta/2 ||y - y0||^2`` over ``y_set``."""
        raise CapabilityError(f"{self.name} has no smoothed dual best response")

    def best_response_x(self, y: Array) -> Array:
        """Exact minimizer of ``L(., y)`` over ``x_set`` (convex problems only)."""
        raise CapabilityError(f"{self.name} has no primal best response")

    def optimal_value(self) -> float:
        """``min_x max_y L``; only for problems with a stored optimum fixture."""
        raise CapabilityError(f"{self.name} has no known optimal value")

    def has(self, oracle: str) -> bool:
        """Whether the optional oracle ``oracle`` is implemented."""
        method = getattr(type(self), oracle, None)
        return method is not None and method is not getattr(PayoffProblem, oracle)

    def initial_point(self) -> tuple[Array, Array]:
        """Deterministic feasible starting pair."""
        return self.x_set.lmo(np.zeros(self.x_set.dim)), self.y_set.lmo(
            np.zeros(self.y_set.dim)
        )

    def constants(self) -> dict[str, float]:
        return {"Lxx": self.Lxx, "Lyx": self.Lyx, "Lyy": self.Lyy, "mu": self.mu}

    def metadata(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "convex_in_x": self.is_convex_in_x,
            **self.constants(),
            "x_set": self.x_set.describe(),
            "y_set": self.y_set.describe(),
        }
