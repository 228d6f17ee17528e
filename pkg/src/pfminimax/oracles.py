"""Concrete feasible sets with closed-form LMO and Euclidean projection.

Each set family has a pair of module-level functions (``*_lmo``,
``*_project``) operating on raw arrays, wrapped by a :class:`FeasibleSet`
subclass that owns shape checking and metadata.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence

import numpy as np

from .core import Array, ArgumentError, FeasibleSet, NumericalError

__all__ = [
    "Box",
    "ColumnBallProduct",
    "Interval",
    "L2Ball",
    "NuclearBall",
    "Product",
    "Simplex",
    "box_lmo",
    "box_project",
    "l1_nonneg_project",
    "l2ball_lmo",
    "l2ball_project",
    "nuclear_lmo",
    "nuclear_project",
    "product_lmo",
    "product_project",
    "simplex_lmo",
    "simplex_project",
    "top_singular_triple",
]

# Above this larger matrix dimension the top singular triple comes from
# power iteration instead of a full SVD.
SVD_SIZE_THRESHOLD = 64
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000
POWER_SEED = 0


# ---------------------------------------------------------------- simplex


def simplex_lmo(dim: int, d: Array) -> Array:
    if dim < 1:
        raise ArgumentError("simplex dimension must be >= 1")
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    out = np.zeros(dim)
    out[int(np.argmin(d))] = 1.0
    return out


def simplex_project(dim: int, u: Array, radius: float = 1.0) -> Array:
    """Projection onto ``{v >= 0, sum(v) = radius}`` by sort and threshold."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.size != dim:
        raise ArgumentError(f"point has {u.size} coordinates, expected {dim}")
    s = np.sort(u)[::-1]
    css = np.cumsum(s) - radius
    k = np.arange(1, dim + 1)
    active = s - css / k > 0
    rho = int(k[active][-1])
    theta = css[rho - 1] / rho
    return np.maximum(u - theta, 0.0)


def l1_nonneg_project(u: Array, radius: float) -> Array:
    """Projection onto ``{v >= 0, sum(v) <= radius}``."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    clipped = np.maximum(u, 0.0)
    if clipped.sum() <= radius:
        return clipped
    return simplex_project(u.size, u, radius)


class Simplex(FeasibleSet):
    """Unit simplex ``{v >= 0, sum(v) = 1}``."""

    kind = "simplex"

    def __init__(self, dim: int):
        if dim < 1:
            raise ArgumentError("simplex dimension must be >= 1")
        self.dim = int(dim)
        self.shape = (self.dim,)
        self.diameter = float(np.sqrt(2.0)) if dim > 1 else 0.0
        self.strong_convexity_alpha = 0.0

    def _lmo(self, d):
        return simplex_lmo(self.dim, d)

    def _project(self, u):
        return simplex_project(self.dim, u)

    def residual(self, u):
        return float(max(abs(u.sum() - 1.0), -u.min(), 0.0))

    def vertices(self):
        return np.eye(self.dim)

    def sample(self, rng, n=1):
        pts = rng.dirichlet(np.full(self.dim, rng.choice([0.2, 1.0, 5.0])), size=n)
        return pts


# ---------------------------------------------------------------- box


def box_lmo(lo: Array, hi: Array, d: Array) -> Array:
    return np.where(np.asarray(d) < 0, hi, lo).astype(np.float64)


def box_project(lo: Array, hi: Array, u: Array) -> Array:
    return np.clip(u, lo, hi)


class Box(FeasibleSet):
    """Axis-aligned box ``{lo <= v <= hi}``."""

    kind = "box"

    def __init__(self, lo, hi, strong_convexity_alpha: float = 0.0):
        lo = np.atleast_1d(np.asarray(lo, dtype=np.float64)).reshape(-1)
        hi = np.atleast_1d(np.asarray(hi, dtype=np.float64)).reshape(-1)
        if lo.shape != hi.shape:
            raise ArgumentError("lo and hi must have the same length")
        if np.any(lo > hi):
            raise ArgumentError("box requires lo <= hi componentwise")
        self.lo, self.hi = lo, hi
        self.dim = lo.size
        self.shape = (self.dim,)
        self.diameter = float(np.linalg.norm(hi - lo))
        self.strong_convexity_alpha = float(strong_convexity_alpha)

    def _lmo(self, d):
        return box_lmo(self.lo, self.hi, d)

    def _project(self, u):
        return box_project(self.lo, self.hi, u)

    def residual(self, u):
        return float(max(np.max(self.lo - u), np.max(u - self.hi), 0.0))

    def vertices(self):
        if self.dim > 12:
            return None
        corners = itertools.product(*zip(self.lo, self.hi))
        return np.unique(np.array(list(corners), dtype=np.float64), axis=0)

    def describe(self):
        return {**super().describe(), "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Interval(Box):
    """Interval ``[lo, hi]``.

    The strong-convexity modulus defaults to ``1/(hi - lo)``, the value the
    dictionary-learning setup quotes for ``[0, B]``; the largest valid modulus
    for an interval is ``2/(hi - lo)``, so pass ``strong_convexity_alpha`` to
    override.
    """

    kind = "interval"

    def __init__(self, lo: float, hi: float, strong_convexity_alpha: float | None = None):
        if not hi > lo:
            raise ArgumentError("interval requires lo < hi")
        if strong_convexity_alpha is None:
            strong_convexity_alpha = 1.0 / (hi - lo)
        super().__init__([lo], [hi], strong_convexity_alpha)


# ---------------------------------------------------------------- l2 ball


def l2ball_lmo(center: Array, radius: float, d: Array) -> Array:
    nrm = float(np.linalg.norm(d))
    if nrm == 0.0:
        return np.array(center, dtype=np.float64, copy=True)
    return center - radius * (d / nrm)


def l2ball_project(center: Array, radius: float, u: Array) -> Array:
    diff = u - center
    nrm = float(np.linalg.norm(diff))
    if nrm <= radius:
        return np.array(u, dtype=np.float64, copy=True)
    return center + diff * (radius / nrm)


class L2Ball(FeasibleSet):
    """Euclidean ball; strongly convex with modulus ``1/radius``."""

    kind = "l2ball"

    def __init__(self, center, radius: float):
        center = np.atleast_1d(np.asarray(center, dtype=np.float64)).reshape(-1)
        if not radius > 0:
            raise ArgumentError("ball radius must be positive")
        self.center = center
        self.radius = float(radius)
        self.dim = center.size
        self.shape = (self.dim,)
        self.diameter = 2.0 * self.radius
        self.strong_convexity_alpha = 1.0 / self.radius

    def _lmo(self, d):
        return l2ball_lmo(self.center, self.radius, d)

    def _project(self, u):
        return l2ball_project(self.center, self.radius, u)

    def residual(self, u):
        return max(float(np.linalg.norm(u - self.center)) - self.radius, 0.0)

    def describe(self):
        return {**super().describe(), "radius": self.radius}


# ---------------------------------------------------------------- nuclear ball


def _svd(M: Array, full: bool = False):
    try:
        return np.linalg.svd(M, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(M)))
        try:
            cond = float(np.linalg.cond(M)) if finite else float("nan")
        except np.linalg.LinAlgError:
            cond = float("inf")
        raise NumericalError(
            f"SVD failed on {M.shape[0]}x{M.shape[1]} matrix "
            f"(finite={finite}, fro={np.linalg.norm(M) if finite else 'nan'}, "
            f"cond={cond:.3e}): {exc}"
        ) from exc


def _fix_sign(u: Array, v: Array) -> tuple[Array, Array]:
    # deterministic orientation: largest-magnitude entry of u is positive
    if u[int(np.argmax(np.abs(u)))] < 0:
        return -u, -v
    return u, v


def top_singular_triple(G: Array) -> tuple[Array, float, Array]:
    """Leading ``(u, sigma, v)`` of ``G``.

    Full SVD for small matrices; power iteration on the smaller Gram matrix
    above :data:`SVD_SIZE_THRESHOLD`, falling back to SVD if it stalls.
    """
    rows, cols = G.shape
    if max(rows, cols) <= SVD_SIZE_THRESHOLD:
        U, s, Vt = _svd(G)
        u, v = _fix_sign(U[:, 0], Vt[0])
        return u, float(s[0]), v

    wide = rows <= cols
    K = G @ G.T if wide else G.T @ G
    rng = np.random.default_rng(POWER_SEED)
    w = rng.standard_normal(K.shape[0])
    w /= np.linalg.norm(w)
    converged = False
    for _ in range(POWER_MAX_ITER):
        z = K @ w
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return np.eye(rows)[0], 0.0, np.eye(cols)[0]
        z /= nz
        if z @ w < 0:
            z = -z
        if np.linalg.norm(z - w) < POWER_TOL:
            w = z
            converged = True
            break
        w = z
    if not converged:
        U, s, Vt = _svd(G)
        u, v = _fix_sign(U[:, 0], Vt[0])
        return u, float(s[0]), v
    if wide:
        u = w
        gv = G.T @ u
        sigma = float(np.linalg.norm(gv))
        v = gv / sigma if sigma > 0 else np.eye(cols)[0]
    else:
        v = w
        gu = G @ v
        sigma = float(np.linalg.norm(gu))
        u = gu / sigma if sigma > 0 else np.eye(rows)[0]
    u, v = _fix_sign(u, v)
    return u, sigma, v


def nuclear_lmo(rows: int, cols: int, radius: float, G: Array) -> Array:
    """``-radius * u1 v1^T`` for the top singular pair of ``G`` (flattened)."""
    G = np.asarray(G, dtype=np.float64).reshape(rows, cols)
    if not np.any(G):
        out = np.zeros((rows, cols))
        out[0, 0] = -radius
        return out.reshape(-1)
    u, sigma, v = top_singular_triple(G)
    if sigma == 0.0:
        out = np.zeros((rows, cols))
        out[0, 0] = -radius
        return out.reshape(-1)
    return (-radius * np.outer(u, v)).reshape(-1)


def nuclear_project(rows: int, cols: int, radius: float, M: Array) -> Array:
    M = np.asarray(M, dtype=np.float64).reshape(rows, cols)
    U, s, Vt = _svd(M)
    if s.sum() <= radius:
        return M.reshape(-1).copy()
    s_proj = l1_nonneg_project(s, radius)
    return ((U * s_proj) @ Vt).reshape(-1)


class NuclearBall(FeasibleSet):
    """``{M in R^{rows x cols} : ||M||_* <= radius}``, stored row-major."""

    kind = "nuclear_ball"

    def __init__(self, rows: int, cols: int, radius: float):
        if rows < 1 or cols < 1:
            raise ArgumentError("matrix dimensions must be >= 1")
        if not radius > 0:
            raise ArgumentError("nuclear radius must be positive")
        self.rows, self.cols, self.radius = int(rows), int(cols), float(radius)
        self.dim = self.rows * self.cols
        self.shape = (self.rows, self.cols)
        self.diameter = 2.0 * self.radius
        self.strong_convexity_alpha = 0.0

    def _lmo(self, d):
        return nuclear_lmo(self.rows, self.cols, self.radius, d)

    def _project(self, u):
        return nuclear_project(self.rows, self.cols, self.radius, u)

    def residual(self, u):
        s = np.linalg.svd(u.reshape(self.shape), compute_uv=False)
        return max(float(s.sum()) - self.radius, 0.0)

    def describe(self):
        return {**super().describe(), "radius": self.radius}


# ---------------------------------------------------------------- column balls


class ColumnBallProduct(FeasibleSet):
    """Matrices whose every column lies in the centered ball of ``radius``."""

    kind = "column_balls"

    def __init__(self, rows: int, cols: int, radius: float = 1.0):
        if rows < 1 or cols < 1:
            raise ArgumentError("matrix dimensions must be >= 1")
        if not radius > 0:
            raise ArgumentError("column radius must be positive")
        self.rows, self.cols, self.radius = int(rows), int(cols), float(radius)
        self.dim = self.rows * self.cols
        self.shape = (self.rows, self.cols)
        self.diameter = 2.0 * self.radius * np.sqrt(self.cols)
        self.strong_convexity_alpha = 0.0

    def _lmo(self, d):
        D = d.reshape(self.shape)
        norms = np.linalg.norm(D, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        out = np.where(norms > 0, -self.radius * D / safe, 0.0)
        return out.reshape(-1)

    def _project(self, u):
        U = u.reshape(self.shape)
        norms = np.linalg.norm(U, axis=0)
        scale = np.where(norms > self.radius, self.radius / np.maximum(norms, 1e-300), 1.0)
        return (U * scale).reshape(-1)

    def residual(self, u):
        norms = np.linalg.norm(u.reshape(self.shape), axis=0)
        return max(float(norms.max()) - self.radius, 0.0)

    def describe(self):
        return {**super().describe(), "radius": self.radius}


# ---------------------------------------------------------------- products


def _split(blocks: Sequence[FeasibleSet], d: Array) -> list[Array]:
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    total = sum(b.dim for b in blocks)
    if d.size != total:
        raise ArgumentError(f"block structure mismatch: {d.size} coordinates, expected {total}")
    return np.split(d, np.cumsum([b.dim for b in blocks])[:-1])


def product_lmo(blocks: Sequence[FeasibleSet], d: Array) -> Array:
    return np.concatenate([b.lmo(part) for b, part in zip(blocks, _split(blocks, d))])


def product_project(blocks: Sequence[FeasibleSet], u: Array) -> Array:
    return np.concatenate([b.project(part) for b, part in zip(blocks, _split(blocks, u))])


class Product(FeasibleSet):
    """Cartesian product of blocks, concatenated in order."""

    kind = "product"

    def __init__(self, blocks: Sequence[FeasibleSet]):
        if not blocks:
            raise ArgumentError("product needs at least one block")
        self.blocks = list(blocks)
        self.dim = sum(b.dim for b in self.blocks)
        self.shape = (self.dim,)
        self.offsets = np.concatenate([[0], np.cumsum([b.dim for b in self.blocks])])
        self.diameter = float(np.sqrt(sum(b.diameter**2 for b in self.blocks)))
        self.strong_convexity_alpha = 0.0

    def split(self, u: Array) -> list[Array]:
        return _split(self.blocks, u)

    def _lmo(self, d):
        return product_lmo(self.blocks, d)

    def _project(self, u):
        return product_project(self.blocks, u)

    def residual(self, u):
        return max(b.residual(part) for b, part in zip(self.blocks, self.split(u)))

    def sample(self, rng, n=1):
        return np.hstack([b.sample(rng, n) for b in self.blocks])

    def vertices(self):
        per_block = [b.vertices() for b in self.blocks]
        if any(v is None for v in per_block):
            return None
        count = int(np.prod([len(v) for v in per_block]))
        if count > 4096:
            return None
        return np.array([np.concatenate(c) for c in itertools.product(*per_block)])

    def describe(self):
        return {**super().describe(), "blocks": [b.describe() for b in self.blocks]}
