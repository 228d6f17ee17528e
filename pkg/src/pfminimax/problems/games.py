"""Synthetic convex-concave test problems with known solutions."""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.optimize import linprog

from ..core import Array, ArgumentError, NumericalError, PayoffProblem
from ..oracles import L2Ball, Simplex, simplex_lmo, simplex_project

__all__ = [
    "MatrixGame",
    "QuadraticSaddle",
    "matrix_game",
    "quadratic_saddle",
    "random_matrix_game",
    "random_quadratic_saddle",
]


class MatrixGame(PayoffProblem):
    """Bilinear game ``L(x, y) = x^T A y`` over two simplices."""

    name = "matrix_game"
    is_convex_in_x = True

    def __init__(self, A):
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2 or A.size == 0:
            raise ArgumentError("payoff matrix must be a nonempty 2-D array")
        if not np.all(np.isfinite(A)):
            raise ArgumentError("payoff matrix has non-finite entries")
        self.A = A
        self.x_set = Simplex(A.shape[0])
        self.y_set = Simplex(A.shape[1])
        self.Lxx = 0.0
        self.Lyy = 0.0
        self.mu = 0.0
        self.Lyx = float(np.linalg.norm(A, 2))

    def value(self, x, y):
        return float(x @ self.A @ y)

    def grad_x(self, x, y):
        return self.A @ y

    def grad_y(self, x, y):
        return self.A.T @ x

    def best_response_y(self, x):
        return simplex_lmo(self.y_set.dim, -(self.A.T @ x))

    def best_response_y_smoothed(self, x, beta, y0):
        if beta <= 0:
            return self.best_response_y(x)
        return simplex_project(self.y_set.dim, y0 + (self.A.T @ x) / beta)

    def best_response_x(self, y):
        return simplex_lmo(self.x_set.dim, self.A @ y)

    @cached_property
    def _solution(self) -> tuple[float, Array, Array]:
        # min_x max_j (A^T x)_j as an LP in (x, v); the dual multipliers of the
        # inequality rows are an optimal y.
        m, n = self.A.shape
        c = np.zeros(m + 1)
        c[-1] = 1.0
        A_ub = np.hstack([self.A.T, -np.ones((n, 1))])
        A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
        res = linprog(
            c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=[1.0],
            bounds=[(0, None)] * m + [(None, None)], method="highs",
        )
        if res.status != 0:
            raise NumericalError(f"game LP failed: {res.message}")
        x = np.maximum(res.x[:m], 0.0)
        x /= x.sum()
        y = np.maximum(-res.ineqlin.marginals, 0.0)
        y = y / y.sum() if y.sum() > 0 else np.full(n, 1.0 / n)
        return float(res.fun), x, y

    def optimal_value(self):
        return self._solution[0]

    def saddle_point(self) -> tuple[Array, Array]:
        _, x, y = self._solution
        return x, y

    def initial_point(self):
        return simplex_lmo(self.x_set.dim, np.zeros(self.x_set.dim)), simplex_lmo(
            self.y_set.dim, np.zeros(self.y_set.dim)
        )


def matrix_game(A) -> MatrixGame:
    return MatrixGame(A)


def random_matrix_game(m: int, n: int, rng: np.random.Generator) -> MatrixGame:
    """Game with i.i.d. uniform[0, 1] payoffs."""
    if m < 1 or n < 1:
        raise ArgumentError("game dimensions must be >= 1")
    return MatrixGame(rng.uniform(0.0, 1.0, size=(m, n)))


class QuadraticSaddle(PayoffProblem):
    """``L(x,y) = mu_x/2 ||x - x_hat||^2 + x^T B y - mu_y/2 ||y - y_hat||^2`` over balls.

    The saddle point solves the first-order linear system and must lie strictly
    inside both balls; construction fails otherwise.
    """

    name = "quadratic_saddle"
    is_convex_in_x = True

    def __init__(self, mu_x, mu_y, B, x_hat, y_hat, radius_x, radius_y):
        B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        dx, dy = B.shape
        self.B = B
        self.mu_x = float(mu_x)
        self.mu_y = float(mu_y)
        if self.mu_x < 0 or self.mu_y < 0:
            raise ArgumentError("curvatures must be nonnegative")
        self.x_hat = np.asarray(x_hat, dtype=np.float64).reshape(-1)
        self.y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
        if self.x_hat.size != dx or self.y_hat.size != dy:
            raise ArgumentError("x_hat/y_hat sizes do not match B")
        self.x_set = L2Ball(np.zeros(dx), radius_x)
        self.y_set = L2Ball(np.zeros(dy), radius_y)
        self.Lxx = self.mu_x
        self.Lyy = self.mu_y
        self.mu = self.mu_y
        self.Lyx = float(np.linalg.norm(B, 2)) if B.any() else 0.0

        K = np.block([[self.mu_x * np.eye(dx), B], [B.T, -self.mu_y * np.eye(dy)]])
        rhs = np.concatenate([self.mu_x * self.x_hat, -self.mu_y * self.y_hat])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        if np.linalg.norm(K @ sol - rhs) > 1e-10 * max(1.0, np.linalg.norm(rhs)):
            raise ArgumentError("first-order system has no solution; saddle point undefined")
        self.x_star, self.y_star = sol[:dx], sol[dx:]
        if (np.linalg.norm(self.x_star) >= self.x_set.radius
                or np.linalg.norm(self.y_star) >= self.y_set.radius):
            raise ArgumentError(
                "saddle point is not interior to the balls; increase radius_x/radius_y"
            )

    def value(self, x, y):
        dxh = x - self.x_hat
        dyh = y - self.y_hat
        return float(0.5 * self.mu_x * dxh @ dxh + x @ self.B @ y - 0.5 * self.mu_y * dyh @ dyh)

    def grad_x(self, x, y):
        return self.mu_x * (x - self.x_hat) + self.B @ y

    def grad_y(self, x, y):
        return self.B.T @ x - self.mu_y * (y - self.y_hat)

    def best_response_y(self, x):
        if self.mu_y > 0:
            return self.y_set.project(self.y_hat + (self.B.T @ x) / self.mu_y)
        return self.y_set.lmo(-(self.B.T @ x))

    def best_response_y_smoothed(self, x, beta, y0):
        curv = self.mu_y + beta
        if curv <= 0:
            return self.best_response_y(x)
        return self.y_set.project((self.mu_y * self.y_hat + beta * y0 + self.B.T @ x) / curv)

    def best_response_x(self, y):
        if self.mu_x > 0:
            return self.x_set.project(self.x_hat - (self.B @ y) / self.mu_x)
        return self.x_set.lmo(self.B @ y)

    def optimal_value(self):
        return self.value(self.x_star, self.y_star)

    def saddle_point(self) -> tuple[Array, Array]:
        return self.x_star.copy(), self.y_star.copy()

    def initial_point(self):
        dx, dy = self.B.shape
        x0 = self.x_set.lmo(np.ones(dx))
        y0 = self.y_set.lmo(np.ones(dy))
        return x0, y0


def quadratic_saddle(mu_x, mu_y, B, x_hat, y_hat, radii) -> QuadraticSaddle:
    rx, ry = radii
    return QuadraticSaddle(mu_x, mu_y, B, x_hat, y_hat, rx, ry)


def random_quadratic_saddle(
    dx: int, dy: int, mu_x: float, mu_y: float, rng: np.random.Generator, radius: float = 2.0
) -> QuadraticSaddle:
    """Random coupling with anchors scaled so the saddle sits inside radius-``radius`` balls."""
    B = rng.standard_normal((dx, dy)) / np.sqrt(max(dx, dy))
    x_hat = rng.standard_normal(dx)
    y_hat = rng.standard_normal(dy)
    x_hat *= 0.3 * radius / max(np.linalg.norm(x_hat), 1e-12)
    y_hat *= 0.3 * radius / max(np.linalg.norm(y_hat), 1e-12)
    return QuadraticSaddle(mu_x, mu_y, B, x_hat, y_hat, radius, radius)
