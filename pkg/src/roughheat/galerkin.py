"""Hat-function Galerkin projection with implicit Euler time stepping.

Unknowns are the nodal coefficients ``u^j``, ``j = -N+1..N-1``, of
``sum_j u^j Phi_j`` on ``[-L, L]`` with ``L = N h``.  Array position ``p``
holds node ``j = p - N + 1``.  One implicit Euler step reads

    (A + dt B) u_next = A u_prev + int_{slab} <f_s, Phi> ds

with ``A`` the mass and ``B`` the stiffness matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigError, CovarianceError, GridError, PivotError
from .fractional_field import SheetSample
from .noise_grid import FineGrid, PiecewiseConstantField, delta_b_table

__all__ = [
    "TridiagonalMatrix",
    "HatBasis",
    "SchemeState",
    "mass_matrix",
    "stiffness_matrix",
    "scheme_matrices",
    "thomas_solve",
    "load_vector",
    "galerkin_step",
    "run_galerkin",
    "run_specialized_scheme",
    "run_specialized_batch",
    "run_synchronized_scheme",
    "reconstruct",
    "cholesky_factor",
]


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Tridiagonal matrix stored by diagonals.

    ``upper`` defaults to ``lower`` (symmetric case).
    """

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray | None = None

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        lower = np.asarray(self.lower, dtype=float)
        upper = lower if self.upper is None else np.asarray(self.upper, dtype=float)
        if diag.ndim != 1 or lower.shape != (diag.size - 1,) or upper.shape != lower.shape:
            raise ConfigError("inconsistent tridiagonal band lengths")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def constant(cls, size: int, diag: float, off: float) -> "TridiagonalMatrix":
        return cls(np.full(size, float(diag)), np.full(size - 1, float(off)))

    @property
    def size(self) -> int:
        return self.diag.size

    @property
    def symmetric(self) -> bool:
        return self.upper is self.lower or np.array_equal(self.upper, self.lower)

    def __add__(self, other: "TridiagonalMatrix") -> "TridiagonalMatrix":
        return TridiagonalMatrix(self.diag + other.diag, self.lower + other.lower,
                                 self.upper + other.upper)

    def __mul__(self, c: float) -> "TridiagonalMatrix":
        return TridiagonalMatrix(c * self.diag, c * self.lower, c * self.upper)

    __rmul__ = __mul__

    def matvec(self, v) -> np.ndarray:
        """Product with a vector, or with each column of a 2-D array."""
        v = np.asarray(v, dtype=float)
        shape = (-1,) + (1,) * (v.ndim - 1)
        out = self.diag.reshape(shape) * v
        out[1:] += self.lower.reshape(shape) * v[:-1]
        out[:-1] += self.upper.reshape(shape) * v[1:]
        return out

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def banded(self) -> np.ndarray:
        """LAPACK ``(1, 1)`` band storage."""
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.upper
        ab[1] = self.diag
        ab[2, :-1] = self.lower
        return ab

    def solve(self, rhs) -> np.ndarray:
        """Solve through LAPACK's banded solver."""
        return linalg.solve_banded((1, 1), self.banded(), rhs, check_finite=False)


def thomas_solve(a: TridiagonalMatrix, rhs) -> np.ndarray:
    """Thomas algorithm for ``a @ v = rhs``; ``rhs`` may carry extra columns.

    No pivoting: intended for diagonally dominant or SPD matrices, for which
    the elimination is stable.
    """
    d = np.array(rhs, dtype=float)
    if d.shape[0] != a.size:
        raise GridError(f"right-hand side of length {d.shape[0]} for a {a.size}x{a.size} matrix")
    n = a.size
    b, lo, up = a.diag, a.lower, a.upper
    scale = np.max(np.abs(b)) if n else 0.0
    tiny = 1e-14 * scale
    c = np.empty(max(n - 1, 0))
    piv = b[0]
    if abs(piv) <= tiny:
        raise PivotError("zero pivot in row 0")
    if n > 1:
        c[0] = up[0] / piv
    d[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - lo[i - 1] * c[i - 1]
        if abs(piv) <= tiny:
            raise PivotError(f"zero pivot in row {i}")
        if i < n - 1:
            c[i] = up[i] / piv
        d[i] = (d[i] - lo[i - 1] * d[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        d[i] -= c[i] * d[i + 1]
    return d


@dataclass(frozen=True)
class HatBasis:
    """Hat functions of mesh ``h`` centred at ``j h``, ``|j| <= n_half - 1``."""

    h: float
    n_half: int

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("mesh size must be positive")
        if int(self.n_half) != self.n_half or self.n_half < 1:
            raise ConfigError("n_half must be a positive integer")

    @classmethod
    def from_grid(cls, grid: FineGrid) -> "HatBasis":
        return cls(grid.h, grid.n_half)

    @property
    def big_l(self) -> float:
        return self.n_half * self.h

    @property
    def size(self) -> int:
        return 2 * self.n_half - 1

    def node_indices(self) -> np.ndarray:
        return np.arange(-self.n_half + 1, self.n_half)

    def nodes(self) -> np.ndarray:
        return self.node_indices() * self.h

    def phi(self, j: int, x):
        """Hat function ``Phi_j`` evaluated at ``x``."""
        return np.maximum(0.0, 1.0 - np.abs(np.asarray(x, dtype=float) / self.h - j))

    def primitive(self, x) -> np.ndarray:
        """``int_{-inf}^x Phi_j`` for every basis function (rows) and every ``x`` (columns)."""
        u = np.asarray(x, dtype=float)[None, :] / self.h - self.node_indices()[:, None]
        p = np.where(u <= 0.0, 0.5 * np.square(np.clip(u + 1.0, 0.0, None)),
                     1.0 - 0.5 * np.square(np.clip(1.0 - u, 0.0, None)))
        return self.h * p


def mass_matrix(basis: HatBasis) -> TridiagonalMatrix:
    """Gram matrix of the hats: ``2h/3`` on the diagonal, ``h/6`` beside it."""
    return TridiagonalMatrix.constant(basis.size, 2.0 * basis.h / 3.0, basis.h / 6.0)


def stiffness_matrix(basis: HatBasis) -> TridiagonalMatrix:
    """Gram matrix of the hat gradients: ``2/h`` and ``-1/h``."""
    return TridiagonalMatrix.constant(basis.size, 2.0 / basis.h, -1.0 / basis.h)


def scheme_matrices(size: int) -> tuple[TridiagonalMatrix, TridiagonalMatrix]:
    """The matrices ``(A1, A2) = (tridiag(4, -5/4), tridiag(1, 1/4))`` of the fine scheme."""
    return (TridiagonalMatrix.constant(size, 4.0, -1.25),
            TridiagonalMatrix.constant(size, 1.0, 0.25))


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(order):
    if order not in _GAUSS_CACHE:
        _GAUSS_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GAUSS_CACHE[order]


def load_vector(f, basis: HatBasis, t0: float, t1: float, order: int = 5) -> np.ndarray:
    """Components ``int_{t0}^{t1} <f_s, Phi_j> ds``.

    A :class:`PiecewiseConstantField` is integrated exactly from the overlap
    of its cells with the slab and the hats.  Any other ``f`` is a vectorized
    callable ``f(t, x)`` integrated with an ``order``-point Gauss-Legendre rule
    in time and on every mesh element in space.
    """
    if not t1 > t0:
        raise ConfigError("load slab needs t0 < t1")
    if isinstance(f, PiecewiseConstantField):
        return _exact_load(f, basis, t0, t1)
    g, w = _gauss(order)
    ts = 0.5 * (t1 - t0) * (g + 1.0) + t0
    wt = 0.5 * (t1 - t0) * w
    h = basis.h
    left = np.arange(-basis.n_half, basis.n_half) * h       # element [left, left + h]
    xs = left[:, None] + 0.5 * h * (g + 1.0)[None, :]
    wx = 0.5 * h * w
    vals = np.asarray(f(ts[:, None, None], xs[None, :, :]), dtype=float)
    vals = np.broadcast_to(vals, (ts.size,) + xs.shape)
    fx = np.tensordot(wt, vals, axes=(0, 0))               # (elements, order)
    rising = (g + 1.0) / 2.0                                # hat of the right node on the element
    to_right = (fx * rising * wx).sum(axis=1)               # contribution to node left/h + 1
    to_left = (fx * (1.0 - rising) * wx).sum(axis=1)        # contribution to node left/h
    return to_right[:-1] + to_left[1:]


def _exact_load(field, basis, t0, t1):
    te = field.t_edges
    time_overlap = np.clip(np.minimum(te[1:], t1) - np.maximum(te[:-1], t0), 0.0, None)
    prim = basis.primitive(field.x_edges)
    space_overlap = np.diff(prim, axis=1)                   # (basis, x cells)
    return space_overlap @ (field.values.T @ time_overlap)


def galerkin_step(mass: TridiagonalMatrix, stiffness: TridiagonalMatrix, dt: float,
                  prev, load, solver=thomas_solve) -> np.ndarray:
    """One implicit Euler step: solve ``(mass + dt stiffness) next = mass prev + load``."""
    if not dt > 0:
        raise ConfigError("time step must be positive")
    return solver(mass + dt * stiffness, mass.matvec(prev) + np.asarray(load, dtype=float))


def run_galerkin(f, basis: HatBasis, m: int, order: int = 5, solver=thomas_solve,
                 stiffness: TridiagonalMatrix | None = None) -> np.ndarray:
    """Galerkin + implicit Euler solution with zero initial data on ``t_i = i / 2^m``.

    Returns the coefficient array of shape ``(2^m + 1, basis.size)``.
    ``stiffness`` replaces the assembled stiffness matrix (fault injection).
    """
    dt = 2.0**-m
    mass = mass_matrix(basis)
    stiff = stiffness_matrix(basis) if stiffness is None else stiffness
    system = mass + dt * stiff
    out = np.zeros((2**m + 1, basis.size))
    for i in range(2**m):
        load = load_vector(f, basis, i * dt, (i + 1) * dt, order=order)
        out[i + 1] = solver(system, mass.matvec(out[i]) + load)
    return out


@dataclass(frozen=True)
class SchemeState:
    """Saved rows of the scheme coefficients.

    ``coeffs[r]`` holds the coefficients at fine time ``t_{time_indices[r]}``.
    A trailing axis, when present, indexes independent sheets.
    """

    grid: FineGrid
    time_indices: np.ndarray
    coeffs: np.ndarray
    experimental: bool = False

    @property
    def times(self) -> np.ndarray:
        return self.time_indices * self.grid.dt

    @property
    def basis(self) -> HatBasis:
        return HatBasis.from_grid(self.grid)

    def at(self, i: int) -> np.ndarray:
        """Coefficients at fine time index ``i`` (must be a saved row)."""
        pos = np.searchsorted(self.time_indices, i)
        if pos >= self.time_indices.size or self.time_indices[pos] != i:
            raise GridError(f"time index {i} was not saved")
        return self.coeffs[pos]


def _save_plan(steps, stride, save_indices):
    if save_indices is None:
        if stride < 1:
            raise ConfigError("stride must be >= 1")
        idx = np.arange(0, steps + 1, stride)
        if idx[-1] != steps:
            idx = np.append(idx, steps)
    else:
        idx = np.unique(np.asarray(save_indices, dtype=int))
        if idx.size and (idx[0] < 0 or idx[-1] > steps):
            raise GridError("save index outside the time grid")
    return idx


def run_specialized_batch(increments, n: int, stride: int = 1, save_indices=None) -> SchemeState:
    """Fine scheme for a stack of sheets.

    ``increments`` has shape ``(2^n, 2^(2n+1))`` or ``(2^n, 2^(2n+1), S)``; the
    returned coefficients carry the same trailing axis.  Iterates
    ``A1 phi_{i+1} = A2 phi_i + 3 / 2^(2n+1) * deltaB_i``.
    """
    grid = FineGrid(n)
    table = delta_b_table(increments, n, grid) * (3.0 / 2.0 ** (2 * n + 1))
    a1, a2 = scheme_matrices(grid.size)
    chol = linalg.cholesky_banded(np.vstack([np.r_[0.0, a1.upper], a1.diag]), lower=False)
    save = _save_plan(grid.steps, stride, save_indices)
    want = np.zeros(grid.steps + 1, dtype=bool)
    want[save] = True
    phi = np.zeros(table.shape[1:])
    out = np.empty((save.size,) + phi.shape)
    r = 0
    if want[0]:
        out[r] = phi
        r += 1
    ratio = grid.time_ratio
    for i in range(grid.steps):
        rhs = a2.matvec(phi) + table[i // ratio]
        phi = linalg.cho_solve_banded((chol, False), rhs, check_finite=False)
        if want[i + 1]:
            out[r] = phi
            r += 1
    return SchemeState(grid, save, out)


def run_specialized_scheme(sheet: SheetSample, grid: FineGrid | None = None, stride: int = 1,
                           save_indices=None) -> SchemeState:
    """Run the fine scheme driven by ``sheet``; zero initial condition."""
    if grid is not None and grid != FineGrid(sheet.n):
        raise GridError("the specialized scheme runs on the default fine grid of the sheet level")
    return run_specialized_batch(sheet.increments, sheet.n, stride, save_indices)


def run_synchronized_scheme(sheet: SheetSample, stride: int = 1, save_indices=None) -> SchemeState:
    """Galerkin scheme on the coarse noise grid itself (EXPERIMENTAL, no convergence theory)."""
    from .noise_grid import discretized_noise

    grid = FineGrid.synchronized(sheet.n)
    coeffs = run_galerkin(discretized_noise(sheet), HatBasis.from_grid(grid), grid.time_level)
    save = _save_plan(grid.steps, stride, save_indices)
    return SchemeState(grid, save, coeffs[save], experimental=True)


def reconstruct(coeffs, basis: HatBasis, x):
    """Evaluate ``sum_j coeffs[j] Phi_j(x)``; vanishes outside ``(-L, L)``.

    ``coeffs`` may be 1-D or carry leading axes (one evaluation per row).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.asarray(x, dtype=float)
    u = x / basis.h
    k = np.floor(u)
    theta = u - k
    ext = np.zeros(coeffs.shape[:-1] + (basis.size + 2,))
    ext[..., 1:-1] = coeffs
    # ext position p holds node p - n_half
    p = (k + basis.n_half).astype(int)
    inside = (p >= 0) & (p < basis.size + 1)
    p = np.clip(p, 0, basis.size)
    out = np.where(inside, ext[..., p] * (1.0 - theta) + ext[..., p + 1] * theta, 0.0)
    return float(out) if out.ndim == 0 else out


def cholesky_factor(a: TridiagonalMatrix) -> np.ndarray:
    """Lower bidiagonal ``E`` with ``E.T @ E = a`` (elimination from the last row)."""
    if not a.symmetric:
        raise CovarianceError("matrix is not symmetric")
    n = a.size
    d = np.empty(n)
    e = np.empty(n - 1)
    piv = a.diag[-1]
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            e[i] = a.lower[i] / d[i + 1]
            piv = a.diag[i] - e[i] ** 2
        if not piv > 0:
            raise CovarianceError("matrix is not positive definite")
        d[i] = np.sqrt(piv)
    return np.diag(d) + np.diag(e, -1)
