"""Continual dictionary learning as a nonconvex-concave minimax problem.

Given an old dataset ``A = D C`` and a new dataset ``A'``, find a dictionary
``D'`` (``m x q``, unit-norm columns) and codes ``C'`` (``q x n'``, nuclear norm
at most ``r``) fitting ``A'`` while the Lagrangian term keeps the old-data
reconstruction error ``1/(2n) ||A - D' C~||_F^2`` within ``delta``::

    L((C', D'), y) = 1/(2n') ||A' - D'C'||_F^2 + y (1/(2n) ||A - D'C~||_F^2 - delta)

with ``y`` restricted to ``[0, B]``. The primal point is stored as
``concat(vec(C'), vec(D'))``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..core import Array, ArgumentError, PayoffProblem
from ..oracles import ColumnBallProduct, Interval, NuclearBall, Product

__all__ = [
    "DL_DESK_SIZES",
    "DL_PAPER_PARAMS",
    "DL_PAPER_SIZES",
    "DLData",
    "DictionaryLearning",
    "dictionary_learning",
    "dl_generate",
    "lipschitz_dl",
]

DL_PAPER_SIZES = {"m": 100, "n": 500, "p": 50, "l": 5, "q": 60, "n_prime": 103}
DL_DESK_SIZES = {"m": 20, "n": 50, "p": 10, "l": 3, "q": 12, "n_prime": 20}
DL_PAPER_PARAMS = {"delta": 1e-4, "r": 5.0, "B": 1.0}


class DLData(NamedTuple):
    A: Array
    A_prime: Array
    C_tilde: Array
    D0_prime: Array
    C0_prime: Array


def _normalize_columns(M: Array) -> Array:
    return M / np.linalg.norm(M, axis=0, keepdims=True)


def dl_generate(m: int, n: int, p: int, l: int, q: int, n_prime: int,  # noqa: E741
                rng: np.random.Generator) -> DLData:
    """Synthetic old/new datasets and the starting dictionary.

    Draw order is fixed (D, U, V, A', D0') so a seed pins every matrix.
    """
    if min(m, n, p, l, q, n_prime) < 1:
        raise ArgumentError("all sizes must be >= 1")
    if p > q:
        raise ArgumentError(f"old dictionary size p={p} exceeds new size q={q}")
    D = _normalize_columns(rng.standard_normal((m, p)))
    U = rng.standard_normal((p, l))
    V = rng.standard_normal((n, l))
    C = U @ V.T / (np.linalg.norm(U, 2) * np.linalg.norm(V, 2))
    A = D @ C
    C_tilde = np.vstack([C, np.zeros((q - p, n))])
    A_prime = rng.standard_normal((m, n_prime))
    D0_prime = _normalize_columns(rng.uniform(0.0, 0.1, size=(m, q)))
    C0_prime = np.zeros((q, n_prime))
    return DLData(A, A_prime, C_tilde, D0_prime, C0_prime)


def lipschitz_dl(A, A_prime, C_tilde, r, q, B, n, n_prime) -> tuple[float, float, float]:
    """Closed-form ``(Lxx, Lyx, Lyy)`` for the dictionary-learning payoff."""
    c2 = float(np.linalg.norm(C_tilde, 2))
    a_f = float(np.linalg.norm(A))
    ap_f = float(np.linalg.norm(A_prime))
    sq = np.sqrt(q)
    lead = ap_f + 2.0 * r * sq
    Lxx = max(
        np.sqrt(2.0 * lead**2 / n_prime**2 + 3.0 * (r**2 / n_prime + B * c2**2 / n) ** 2),
        np.sqrt(2.0 * q**2 + 3.0 * lead**2) / n_prime,
    )
    Lyx = np.sqrt(3.0) * (a_f + sq * c2) * c2 / n
    return float(Lxx), float(Lyx), 0.0


class DictionaryLearning(PayoffProblem):
    name = "dictionary_learning"
    is_convex_in_x = False

    def __init__(self, A, A_prime, C_tilde, delta: float, r: float, B: float,
                 D0_prime=None, C0_prime=None):
        A = np.asarray(A, dtype=np.float64)
        A_prime = np.asarray(A_prime, dtype=np.float64)
        C_tilde = np.asarray(C_tilde, dtype=np.float64)
        if A.ndim != 2 or A_prime.ndim != 2 or C_tilde.ndim != 2:
            raise ArgumentError("A, A_prime and C_tilde must be matrices")
        m, n = A.shape
        q = C_tilde.shape[0]
        if A_prime.shape[0] != m or C_tilde.shape[1] != n:
            raise ArgumentError(
                f"inconsistent shapes: A {A.shape}, A_prime {A_prime.shape}, C_tilde {C_tilde.shape}"
            )
        if not delta > 0:
            raise ArgumentError("fidelity tolerance delta must be positive")
        if not r > 0 or not B > 0:
            raise ArgumentError("radius r and dual bound B must be positive")
        if not np.any(C_tilde):
            raise ArgumentError("C_tilde = 0 gives a zero coupling constant")
        self.A, self.A_prime, self.C_tilde = A, A_prime, C_tilde
        self.m, self.n, self.q, self.n_prime = m, n, q, A_prime.shape[1]
        self.delta, self.r, self.B = float(delta), float(r), float(B)

        self.c_block = NuclearBall(q, self.n_prime, r)
        self.d_block = ColumnBallProduct(m, q, 1.0)
        self.x_set = Product([self.c_block, self.d_block])
        self.y_set = Interval(0.0, self.B)
        self.Lxx, self.Lyx, self.Lyy = lipschitz_dl(
            A, A_prime, C_tilde, r, q, B, n, self.n_prime
        )
        self.mu = 0.0
        self._D0 = None if D0_prime is None else np.asarray(D0_prime, dtype=np.float64)
        self._C0 = None if C0_prime is None else np.asarray(C0_prime, dtype=np.float64)

    def unpack(self, x: Array) -> tuple[Array, Array]:
        """``(C', D')`` views of a primal point."""
        k = self.c_block.dim
        return x[:k].reshape(self.q, self.n_prime), x[k:].reshape(self.m, self.q)

    def pack(self, C_prime: Array, D_prime: Array) -> Array:
        return np.concatenate([np.ravel(C_prime), np.ravel(D_prime)])

    def _residuals(self, x):
        C, D = self.unpack(x)
        return C, D, self.A_prime - D @ C, self.A - D @ self.C_tilde

    def constraint_slope(self, x) -> float:
        """``1/(2n) ||A - D'C~||^2 - delta``, the payoff's slope in ``y``."""
        _, D = self.unpack(x)
        E = self.A - D @ self.C_tilde
        return float(np.vdot(E, E)) / (2.0 * self.n) - self.delta

    def value(self, x, y):
        _, _, R, E = self._residuals(x)
        slope = float(np.vdot(E, E)) / (2.0 * self.n) - self.delta
        return float(np.vdot(R, R)) / (2.0 * self.n_prime) + float(y[0]) * slope

    def grads(self, x, y):
        C, D, R, E = self._residuals(x)
        yv = float(y[0])
        gC = -(D.T @ R) / self.n_prime
        gD = -(R @ C.T) / self.n_prime - (yv / self.n) * (E @ self.C_tilde.T)
        gy = np.array([float(np.vdot(E, E)) / (2.0 * self.n) - self.delta])
        return self.pack(gC, gD), gy

    def grad_x(self, x, y):
        return self.grads(x, y)[0]

    def grad_y(self, x, y):
        return np.array([self.constraint_slope(x)])

    def best_response_y(self, x):
        return np.array([self.B if self.constraint_slope(x) > 0 else 0.0])

    def best_response_y_smoothed(self, x, beta, y0):
        if beta <= 0:
            return self.best_response_y(x)
        return np.clip(np.asarray(y0, dtype=np.float64) + self.constraint_slope(x) / beta,
                       0.0, self.B)

    def initial_point(self):
        C0 = np.zeros((self.q, self.n_prime)) if self._C0 is None else self._C0
        if self._D0 is None:
            D0 = self.d_block.lmo(-np.ones(self.d_block.dim)).reshape(self.m, self.q)
        else:
            D0 = self._D0
        return self.pack(C0, D0), np.zeros(1)

    def metadata(self):
        return {
            **super().metadata(),
            "sizes": {"m": self.m, "n": self.n, "q": self.q, "n_prime": self.n_prime},
            "delta": self.delta, "r": self.r, "B": self.B,
        }


def dictionary_learning(A, A_prime, C_tilde, delta=DL_PAPER_PARAMS["delta"],
                        r=DL_PAPER_PARAMS["r"], B=DL_PAPER_PARAMS["B"],
                        D0_prime=None, C0_prime=None) -> DictionaryLearning:
    return DictionaryLearning(A, A_prime, C_tilde, delta, r, B, D0_prime, C0_prime)
