"""Distributionally robust multiclass logistic regression.

For samples ``(a_i, b_i)`` with ``b_i`` in ``1..k`` and predictor ``Theta``
(``k x d``), each loss is ``log(1 + exp(s_i))`` with

    s_i = <Theta, A_i> = sum_j (Theta a_i)_j - k (Theta a_i)_{b_i}

where row ``j`` of ``A_i`` is ``a_i`` for ``j != b_i`` and ``-(k-1) a_i`` for
``j = b_i``. Sample weights ``y`` trade loss against a Pearson chi-square
penalty around the uniform distribution::

    L(Theta, y) = 1/n sum_i y_i loss_i - lambda'/(2 n^2) ||n y - 1||^2

The penalty is ``-lambda'/2 ||y - 1/n||^2``, so ``L`` is ``lambda'``-strongly
concave in ``y``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..core import Array, ArgumentError, PayoffProblem
from ..metrics import best_response_simplex_chi2
from ..oracles import L2Ball, NuclearBall, Simplex

__all__ = [
    "RC_PAPER_PARAMS",
    "RobustClassification",
    "lipschitz_rc",
    "rc_generate",
    "robust_classification",
]

RC_PAPER_PARAMS = {"r": 10.0, "lambda_prime": 10.0}


def _row_norms_sq(features) -> Array:
    if sp.issparse(features):
        return np.asarray(features.multiply(features).sum(axis=1)).reshape(-1)
    return np.einsum("ij,ij->i", features, features)


def lipschitz_rc(features, k: int, lambda_prime: float, n: int) -> tuple[float, float, float, float]:
    """``(L_ThetaTheta, L_yTheta, L_yy, mu)`` with the loss constants scaled by ``1/n``."""
    norms = _row_norms_sq(features)
    L_tt = k * (k - 1) / 4.0 * float(norms.max()) / n
    L_yt = float(np.sqrt(k * (k - 1) / 2.0 * norms.sum())) / n
    return L_tt, L_yt, float(np.sqrt(2.0) * lambda_prime), float(lambda_prime)


def _log1pexp(s: Array) -> Array:
    return np.logaddexp(0.0, s)


def _sigmoid(s: Array) -> Array:
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class RobustClassification(PayoffProblem):
    name = "robust_classification"
    is_convex_in_x = True

    def __init__(self, features, labels, k: int, r: float, lambda_prime: float,
                 dual_set: str = "simplex", rho: float = 1.0):
        if sp.issparse(features):
            features = sp.csr_matrix(features, dtype=np.float64)
        else:
            features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        n, d = features.shape
        if n == 0:
            raise ArgumentError("empty dataset")
        labels = np.asarray(labels).reshape(-1)
        if labels.size != n:
            raise ArgumentError(f"{labels.size} labels for {n} samples")
        if k < 2:
            raise ArgumentError("need at least two classes")
        if labels.min() < 1 or labels.max() > k:
            raise ArgumentError(f"labels must lie in 1..{k}")
        if not lambda_prime > 0:
            raise ArgumentError("lambda_prime must be positive")
        self.features = features
        self.labels = labels.astype(np.int64)
        self.n, self.d, self.k = n, d, int(k)
        self.r = float(r)
        self.lambda_prime = float(lambda_prime)
        self._onehot = np.zeros((n, self.k))
        self._onehot[np.arange(n), self.labels - 1] = 1.0

        self.x_set = NuclearBall(self.k, d, r)
        if dual_set == "simplex":
            self.y_set = Simplex(n)
        elif dual_set == "ball":
            # {||n y - 1|| <= rho}
            self.y_set = L2Ball(np.full(n, 1.0 / n), rho / n)
        else:
            raise ArgumentError(f"unknown dual set {dual_set!r}")
        self.dual_set = dual_set
        self.Lxx, self.Lyx, self.Lyy, self.mu = lipschitz_rc(features, self.k, lambda_prime, n)

    def scores(self, x: Array) -> Array:
        Theta = x.reshape(self.k, self.d)
        Z = np.asarray(self.features @ Theta.T)
        return Z.sum(axis=1) - self.k * Z[np.arange(self.n), self.labels - 1]

    def losses(self, x: Array) -> Array:
        return _log1pexp(self.scores(x))

    def value(self, x, y):
        diff = y - 1.0 / self.n
        return float(y @ self.losses(x)) / self.n - 0.5 * self.lambda_prime * float(diff @ diff)

    def _grad_theta(self, s: Array, y: Array) -> Array:
        w = y * _sigmoid(s) / self.n
        common = np.asarray(self.features.T @ w).reshape(-1)
        own = np.asarray(self.features.T @ (self._onehot * w[:, None])).T
        return (common[None, :] - self.k * own).reshape(-1)

    def grads(self, x, y):
        s = self.scores(x)
        gy = _log1pexp(s) / self.n - self.lambda_prime * (y - 1.0 / self.n)
        return self._grad_theta(s, y), gy

    def grad_x(self, x, y):
        return self._grad_theta(self.scores(x), y)

    def grad_y(self, x, y):
        return self.losses(x) / self.n - self.lambda_prime * (y - 1.0 / self.n)

    def best_response_y(self, x):
        if self.dual_set == "simplex":
            return best_response_simplex_chi2(self.losses(x), self.lambda_prime, self.n)
        return self.best_response_y_smoothed(x, 0.0, self.y_set.center)

    def best_response_y_smoothed(self, x, beta, y0):
        lam = self.lambda_prime
        center = (lam / self.n + beta * np.asarray(y0) + self.losses(x) / self.n) / (lam + beta)
        return self.y_set.project(center)

    def initial_point(self):
        return np.zeros(self.x_set.dim), np.full(self.n, 1.0 / self.n)

    def metadata(self):
        return {
            **super().metadata(),
            "n": self.n, "d": self.d, "k": self.k, "r": self.r,
            "lambda_prime": self.lambda_prime,
            "lambda": self.lambda_prime / (2.0 * self.n**2),
            "dual_set": self.dual_set,
        }


def robust_classification(samples, k: int | None = None, r: float = RC_PAPER_PARAMS["r"],
                          lambda_prime: float = RC_PAPER_PARAMS["lambda_prime"],
                          dual_set: str = "simplex", rho: float = 1.0) -> RobustClassification:
    """Build the problem from ``samples`` (``features``/``labels`` attributes or a pair)."""
    if hasattr(samples, "features"):
        features, labels = samples.features, samples.labels
    else:
        features, labels = samples
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ArgumentError("empty dataset")
    if k is None:
        k = int(labels.max())
    return RobustClassification(features, labels, k, r, lambda_prime, dual_set, rho)


def rc_generate(n: int, d: int, k: int, rng: np.random.Generator, noise: float = 0.5):
    """Synthetic linearly separable-with-noise data: ``(features, labels)``.

    Features are Gaussian scaled by ``1/sqrt(d)``; labels are the argmax of a
    random linear score plus Gaussian noise, mapped to ``1..k``.
    """
    if min(n, d) < 1 or k < 2:
        raise ArgumentError("need n, d >= 1 and k >= 2")
    F = rng.standard_normal((n, d)) / np.sqrt(d)
    W = rng.standard_normal((k, d))
    scores = F @ W.T + noise * rng.standard_normal((n, k))
    return F, np.argmax(scores, axis=1) + 1
