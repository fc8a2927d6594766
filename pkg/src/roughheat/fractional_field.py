"""Spectrally truncated fractional sheet on the coarse dyadic grid.

The sheet ``B^{kappa,n}`` keeps the frequencies ``|xi| <= 2^(2 kappa n)`` in
time and ``|eta| <= 2^(kappa n)`` in space.  Its covariance factorizes as
``C0(s, t) * C1(x, y)``, so a sample on a tensor grid is ``D0 @ W @ D1`` with
``D0 = sqrt(C0)``, ``D1 = sqrt(C1)`` and ``W`` a matrix of i.i.d. N(0, 1)
entries.

Grid storage: ``values[i, j + 2**(2n)]`` holds ``B(t_i, x_j)`` with
``t_i = i / 2**n`` (``i = 0..2**n``) and ``x_j = j / 2**n``
(``j = -2**(2n)..2**(2n)``).
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from .errors import ConfigError, CovarianceError, GridError

__all__ = [
    "HurstPair",
    "SheetConfig",
    "SheetSample",
    "normalization_constant",
    "cov_time",
    "cov_space",
    "covariance_matrix",
    "psd_sqrt",
    "sheet_factors",
    "sample_sheet",
    "rect_increment",
    "make_rng",
]


@dataclass(frozen=True)
class HurstPair:
    """Hurst indexes ``(h0, h1)`` of the sheet in time and space."""

    h0: float
    h1: float

    def __post_init__(self):
        for name in ("h0", "h1"):
            h = getattr(self, name)
            if not 0.0 < h < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {h!r}")

    @property
    def rough_regime(self) -> bool:
        return 2.0 * self.h0 + self.h1 < 1.0

    @property
    def alpha0(self) -> float:
        """Regularity threshold ``1 - (2 h0 + h1)``; errors are measured in H^-alpha, alpha > alpha0."""
        return 1.0 - (2.0 * self.h0 + self.h1)


@dataclass(frozen=True)
class SheetConfig:
    """Everything that determines a sampled sheet, seed included.

    ``kappa = math.inf`` selects the raw (untruncated) fractional sheet, whose
    covariance is the exact tensor product of fBm covariances.
    """

    hurst: HurstPair
    kappa: float
    n: int
    m0: int = 10000
    m1: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"level n must be an integer >= 1, got {self.n!r}")
        if self.m0 < 1 or self.m1 < 1:
            raise ConfigError("quadrature resolutions m0, m1 must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    @property
    def raw(self) -> bool:
        return math.isinf(self.kappa)

    @property
    def time_cutoff(self) -> float:
        return 2.0 ** (2.0 * self.kappa * self.n)

    @property
    def space_cutoff(self) -> float:
        return 2.0 ** (self.kappa * self.n)

    def times(self) -> np.ndarray:
        return np.arange(2**self.n + 1) / 2.0**self.n

    def points(self) -> np.ndarray:
        half = 2 ** (2 * self.n)
        return np.arange(-half, half + 1) / 2.0**self.n

    def with_seed(self, seed: int) -> "SheetConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SheetSample:
    """Values of a sheet on the coarse grid plus the config that produced them."""

    n: int
    values: np.ndarray
    config: SheetConfig | None = None
    times: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        shape = (2**self.n + 1, 2 ** (2 * self.n + 1) + 1)
        if values.shape != shape:
            raise GridError(f"level {self.n} sheet needs shape {shape}, got {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", np.arange(shape[0]) / 2.0**self.n)
        object.__setattr__(self, "points", (np.arange(shape[1]) - 2 ** (2 * self.n)) / 2.0**self.n)

    @classmethod
    def from_function(cls, n: int, fn) -> "SheetSample":
        """Tabulate ``fn(t, x)`` (vectorized) on the level-``n`` coarse grid."""
        t = np.arange(2**n + 1) / 2.0**n
        x = np.arange(-(2 ** (2 * n)), 2 ** (2 * n) + 1) / 2.0**n
        return cls(n, np.broadcast_to(fn(t[:, None], x[None, :]), (t.size, x.size)).copy())

    @property
    def offset(self) -> int:
        """Array column of ``x = 0``."""
        return 2 ** (2 * self.n)

    @property
    def increments(self) -> np.ndarray:
        """All rectangular increments, shape ``(2**n, 2**(2n+1))``; column ``j + offset`` is cell ``[x_j, x_{j+1})``."""
        return np.diff(np.diff(self.values, axis=0), axis=1)

    def __add__(self, other: "SheetSample") -> "SheetSample":
        if other.n != self.n:
            raise GridError("cannot add sheets of different levels")
        return SheetSample(self.n, self.values + other.values)


def normalization_constant(h: float, method: str = "closed") -> float:
    """Constant ``c_H`` making the harmonizable integral a unit-scale fBm.

    ``c_H = (1/2) * (int_0^inf (1 - cos xi) / xi^(2h+1) dxi)^(-1/2)``.  The
    integral equals ``pi / (2 Gamma(1 + 2h) sin(pi h))``; ``method="quad"``
    evaluates it numerically instead.
    """
    if not 0.0 < h < 1.0:
        raise ConfigError(f"Hurst index must lie in (0, 1), got {h!r}")
    if method == "closed":
        integral = math.pi / (2.0 * math.gamma(1.0 + 2.0 * h) * math.sin(math.pi * h))
    elif method == "quad":
        integral = _normalization_integral(h)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return 0.5 / math.sqrt(integral)


def _normalization_integral(h, epsabs=1e-14):
    p = 2.0 * h + 1.0
    # 1 - cos(xi) loses digits for small xi; 2 sin^2(xi/2) does not
    head, _ = integrate.quad(lambda u: 2.0 * math.sin(0.5 * u) ** 2 / u**p, 0.0, 1.0,
                             epsabs=epsabs, epsrel=1e-13, limit=200)
    with warnings.catch_warnings():
        # QAWF flags slow cycle convergence for p near 1; the tail is still accurate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        cos_tail, _ = integrate.quad(lambda u: u**-p, 1.0, np.inf, weight="cos", wvar=1.0,
                                     epsabs=epsabs)
    return head + 1.0 / (p - 1.0) - cos_tail


@functools.lru_cache(maxsize=None)
def _c_squared(h):
    return normalization_constant(h) ** 2


def _cosine_sums(values, h, cutoff, m):
    """Midpoint sums ``(1/m) sum_k cos(cutoff xi_k v) / xi_k^(2h+1)`` for each ``v``."""
    xi = (np.arange(1, m + 1) - 0.5) / m
    weight = xi ** -(2.0 * h + 1.0) / m
    values = np.asarray(values, dtype=float)
    out = np.empty(values.shape)
    flat = values.ravel()
    res = out.reshape(-1)
    chunk = max(1, 2_000_000 // m)
    for start in range(0, flat.size, chunk):
        block = flat[start:start + chunk]
        res[start:start + chunk] = np.cos(cutoff * np.outer(block, xi)) @ weight
    return out


def _truncated_kernel(a, b, h, cutoff, m):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    d = np.abs(b - a)
    keys, inverse = np.unique(np.concatenate([np.abs(a).ravel(), np.abs(b).ravel(), d.ravel(), [0.0]]),
                              return_inverse=True)
    sums = _cosine_sums(keys, h, cutoff, m)[inverse]
    k = a.size
    sa, sb, sd, s0 = sums[:k], sums[k:2 * k], sums[2 * k:3 * k], sums[-1]
    # sa + sb is evaluated symmetrically so that kernel(a, b) == kernel(b, a) bitwise
    val = (sd + s0) - (sa + sb)
    return (2.0 * _c_squared(h) * cutoff ** (-2.0 * h) * val).reshape(a.shape)


def _fbm_kernel(a, b, h):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 0.5 * ((np.abs(a) ** (2 * h) + np.abs(b) ** (2 * h)) - np.abs(a - b) ** (2 * h))


def cov_time(s, t, config: SheetConfig):
    """Time factor ``C0(s, t)`` of the truncated sheet covariance (broadcasts over arrays)."""
    if config.raw:
        out = _fbm_kernel(s, t, config.hurst.h0)
    else:
        out = _truncated_kernel(s, t, config.hurst.h0, config.time_cutoff, config.m0)
    return float(out) if np.ndim(out) == 0 else out


def cov_space(x, y, config: SheetConfig):
    """Space factor ``C1(x, y)``; same Riemann rule as :func:`cov_time` with ``(h1, 2^(kappa n), m1)``."""
    if config.raw:
        out = _fbm_kernel(x, y, config.hurst.h1)
    else:
        out = _truncated_kernel(x, y, config.hurst.h1, config.space_cutoff, config.m1)
    return float(out) if np.ndim(out) == 0 else out


def covariance_matrix(nodes, kind: str, config: SheetConfig) -> np.ndarray:
    """Covariance matrix of the sheet factor ``kind`` ("time" or "space") on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    fn = {"time": cov_time, "space": cov_space}[kind]
    return np.asarray(fn(nodes[:, None], nodes[None, :], config))


def psd_sqrt(a) -> np.ndarray:
    """Symmetric square root of a positive semidefinite matrix.

    Eigenvalues down to ``-1e-10 * max|lambda|`` are treated as quadrature
    noise and clamped to zero; anything more negative raises
    :class:`CovarianceError`.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise CovarianceError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise CovarianceError("matrix contains NaN or infinite entries")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > 1e-12 * scale:
        raise CovarianceError("matrix is not symmetric")
    if scale == 0.0:
        return np.zeros_like(a)
    lam, vec = np.linalg.eigh(0.5 * (a + a.T))
    tol = 1e-10 * np.max(np.abs(lam))
    if lam[0] < -tol:
        raise CovarianceError(f"eigenvalue {lam[0]:.3e} below clamp threshold {-tol:.3e}")
    root = (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T
    return 0.5 * (root + root.T)


@functools.lru_cache(maxsize=32)
def _factors(hurst, kappa, n, m0, m1):
    config = SheetConfig(hurst, kappa, n, m0, m1)
    # the t = 0 row and x = 0 column of the sheet vanish identically, so only
    # the remaining nodes are sampled
    times = config.times()[1:]
    points = config.points()
    points = points[points != 0.0]
    d0 = psd_sqrt(covariance_matrix(times, "time", config))
    d1 = psd_sqrt(covariance_matrix(points, "space", config))
    d0.setflags(write=False)
    d1.setflags(write=False)
    return d0, d1


def sheet_factors(config: SheetConfig) -> tuple[np.ndarray, np.ndarray]:
    """Square roots ``(D0, D1)`` of the covariance matrices on the nonzero grid nodes (cached)."""
    return _factors(config.hurst, config.kappa, config.n, config.m0, config.m1)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator; extra ``stream`` ids derive independent substreams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def sample_sheet(config: SheetConfig) -> SheetSample:
    """Draw ``B^{kappa,n}`` on the coarse grid; a pure function of ``config``."""
    d0, d1 = sheet_factors(config)
    w = make_rng(config.seed).standard_normal((d0.shape[0], d1.shape[0]))
    inner = d0 @ w @ d1
    n = config.n
    values = np.zeros((2**n + 1, 2 ** (2 * n + 1) + 1))
    mid = 2 ** (2 * n)
    values[1:, :mid] = inner[:, :mid]
    values[1:, mid + 1:] = inner[:, mid:]
    return SheetSample(n, values, config)


def rect_increment(sheet: SheetSample, i: int, j: int) -> float:
    """Rectangular increment of ``sheet`` over the coarse cell ``[t_i, t_{i+1}) x [x_j, x_{j+1})``.

    ``j`` is the signed space index (``x_j = j / 2**n``).
    """
    n = sheet.n
    if not 0 <= i <= 2**n - 1:
        raise GridError(f"time cell {i} outside 0..{2**n - 1}")
    if not -(2 ** (2 * n)) <= j <= 2 ** (2 * n) - 1:
        raise GridError(f"space cell {j} outside {-(2 ** (2 * n))}..{2 ** (2 * n) - 1}")
    v = sheet.values
    c = j + sheet.offset
    return float(v[i + 1, c + 1] - v[i + 1, c] - v[i, c + 1] + v[i, c])
