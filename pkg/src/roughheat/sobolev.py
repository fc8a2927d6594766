"""Windowed negative-order Sobolev norms and convergence-rate fits.

The norm of a sampled function ``g`` is

    ||g||_{H^-alpha}^2 = (1 / 2 pi) int (1 + lambda^2)^(-alpha) |g_hat(lambda)|^2 d lambda,

approximated by the DFT of the samples zero-padded to ``[-P, P]``.  With
``alpha = 0`` this is the rectangle-rule L2 norm of the samples, which is the
trapezoid norm whenever the end samples vanish (as they do for ``rho * f``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridError
from .fractional_field import HurstPair
from .galerkin import SchemeState, reconstruct

__all__ = [
    "CutoffFunction",
    "ErrorReport",
    "cutoff_eval",
    "window_grid",
    "h_neg_alpha_norm",
    "scheme_error",
    "fit_rate",
]


def _smooth_step(u):
    # exp(-1/v) glued into a C-infinity transition: 1 at u <= 0, 0 at u >= 1
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        a = np.where(u < 1.0, np.exp(-1.0 / np.where(u < 1.0, 1.0 - u, 1.0)), 0.0)
        b = np.where(u > 0.0, np.exp(-1.0 / np.where(u > 0.0, u, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffFunction:
    """Bump equal to 1 on ``[-R/2, R/2]`` and 0 outside ``[-R, R]``.

    On the band ``R/2 < |x| < R`` it is ``S(2|x|/R - 1)`` with the standard
    smooth step ``S(u) = f(1-u) / (f(1-u) + f(u))``, ``f(v) = exp(-1/v)``.
    """

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("cutoff radius must be positive")

    def __call__(self, x):
        return cutoff_eval(self, x)


def cutoff_eval(rho: CutoffFunction, x):
    u = 2.0 * np.abs(np.asarray(x, dtype=float)) / rho.radius - 1.0
    out = _smooth_step(u)
    return float(out) if out.ndim == 0 else out


def window_grid(radius: float = 1.0, spacing: float = 1.0 / 16) -> np.ndarray:
    """Uniform grid on ``[-radius, radius]``; ``2 radius / spacing`` must be an integer."""
    cells = 2.0 * radius / spacing
    if abs(cells - round(cells)) > 1e-9 * cells:
        raise GridError("window radius is not a multiple of the spacing")
    return np.linspace(-radius, radius, int(round(cells)) + 1)


def _spacing(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise GridError("need a 1-D grid with at least two points")
    d = np.diff(x)
    if np.max(np.abs(d - d[0])) > 1e-9 * abs(d[0]) or d[0] <= 0:
        raise GridError("sample grid is not uniform and increasing")
    return float(d[0])


def h_neg_alpha_norm(x, g, alpha: float, pad: float | None = None):
    """``H^-alpha`` norm of samples ``g`` taken on the uniform grid ``x``.

    The samples are zero-extended to ``[-pad, pad]`` (default ``2 max|x|``;
    ``pad`` must be at least that).  ``g`` may carry leading axes, one norm
    per row.
    """
    if alpha < 0:
        raise ConfigError("alpha must be >= 0")
    delta = _spacing(x)
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.shape[-1] != x.size:
        raise GridError(f"{g.shape[-1]} samples for a grid of {x.size} points")
    radius = max(abs(x[0]), abs(x[-1]))
    pad = 2.0 * radius if pad is None else float(pad)
    if pad < 2.0 * radius * (1 - 1e-12):
        raise GridError(f"padding {pad} is smaller than twice the window radius {radius}")
    start = (x[0] + pad) / delta
    if abs(start - round(start)) > 1e-6:
        raise GridError("sample grid is not aligned with the padded grid")
    size = int(round(2.0 * pad / delta))
    buf = np.zeros(g.shape[:-1] + (size,))
    s = int(round(start))
    buf[..., s:s + x.size] = g
    spec = np.fft.rfft(buf, axis=-1)
    lam = 2.0 * np.pi * np.fft.rfftfreq(size, delta)
    weight = (1.0 + lam**2) ** (-alpha)
    # one-sided spectrum: interior frequencies stand for +/- lambda
    mult = np.full(lam.size, 2.0)
    mult[0] = 1.0
    if size % 2 == 0:
        mult[-1] = 1.0
    power = np.sum(mult * weight * np.abs(spec) ** 2, axis=-1)
    out = np.sqrt(delta / size * power)
    return float(out) if out.ndim == 0 else out


def scheme_error(state: SchemeState, x, reference, rho: CutoffFunction, alpha: float,
                 t_index: int, pad: float | None = None, hurst: HurstPair | None = None):
    """``||rho (scheme(t_i) - reference)||_{H^-alpha}`` on the window grid ``x``.

    For a batched state (trailing sheet axis) ``reference`` has shape
    ``(S, len(x))`` and one error per sheet is returned.
    """
    if hurst is not None and hurst.rough_regime and not alpha > hurst.alpha0:
        raise ConfigError(f"alpha must exceed {hurst.alpha0:.6g} in the rough regime")
    row = state.at(t_index)
    if row.ndim == 2:
        row = row.T
    recon = reconstruct(row, state.basis, x)
    reference = np.asarray(reference, dtype=float)
    if reference.shape != np.shape(recon):
        raise GridError(f"reference of shape {reference.shape} does not match {np.shape(recon)}")
    return h_neg_alpha_norm(x, rho(x) * (recon - reference), alpha, pad)


@dataclass(frozen=True)
class ErrorReport:
    """Errors per level with the fitted decay ``error ~ C 2^(-rate n)``."""

    alpha: float
    levels: tuple[int, ...]
    errors: tuple[float, ...]
    fitted_rate: float | None = None
    residual: float | None = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("levels must be strictly increasing")
        if any(not e >= 0 for e in self.errors):
            raise ConfigError("errors must be nonnegative")


def fit_rate(levels, errors, alpha: float = float("nan")) -> ErrorReport:
    """Least-squares fit of ``log2(error)`` against ``n``; the rate is minus the slope."""
    levels = [int(v) for v in levels]
    errors = [float(e) for e in errors]
    if len(levels) < 2 or len(levels) != len(errors):
        raise ConfigError("need at least two levels with one error each")
    y = np.log2(errors)
    slope, intercept = np.polyfit(np.asarray(levels, dtype=float), y, 1)
    resid = y - (slope * np.asarray(levels) + intercept)
    return ErrorReport(alpha, tuple(levels), tuple(errors), float(-slope),
                       float(np.sqrt(np.mean(resid**2))))
