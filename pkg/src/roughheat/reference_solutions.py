"""Independent evaluations of the mild solution and of its spectral covariance.

The mild solution of the heat equation driven by the step-function noise is

    u(t, x) = sum_{k,l} 2^(2n) box_{k,l} B
              * int_{t_k ^ t}^{t_{k+1} ^ t} ds int_{x_l}^{x_{l+1}} G_{t-s}(x - y) dy,

``G`` being the heat kernel ``exp(-x^2 / 4t) / sqrt(4 pi t)``.  The space
integral is an ``erf`` difference; the time integral is computed adaptively,
with extra break points accumulating at ``s = t`` where the kernel
concentrates.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, special

from .errors import ConfigError
from .fractional_field import SheetConfig, SheetSample, normalization_constant

__all__ = ["gamma", "heat_space_integral", "mild_solution", "solution_covariance"]


def gamma(t, xi, r):
    """Transfer function ``int_0^t e^{i xi (t-s)} e^{-s r^2} ds`` in closed form."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(r, dtype=float) ** 2 + 1j * np.asarray(xi, dtype=float)
    tiny = np.abs(z) < 1e-12
    safe = np.where(tiny, 1.0, z)
    ratio = np.where(tiny, t, -np.expm1(-t * safe) / safe)
    out = np.exp(1j * np.asarray(xi, dtype=float) * t) * ratio
    return complex(out) if out.ndim == 0 else out


def heat_space_integral(tau, x, a, b):
    """``int_a^b G_tau(x - y) dy`` for ``tau > 0``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ConfigError("heat kernel needs tau > 0")
    w = np.sqrt(4.0 * tau)
    x = np.asarray(x, dtype=float)
    out = 0.5 * (special.erf((x - a) / w) - special.erf((x - b) / w))
    return float(out) if out.ndim == 0 else out


def _edge_weights(increments, n):
    # sum_l c_l [E(x_l) - E(x_{l+1})] == sum_e (c_e - c_{e-1}) E(x_e)
    c = 4.0**n * increments
    return np.diff(np.pad(c, [(0, 0), (1, 1)]), axis=1)


def _break_points(t, coarse, depth=30):
    pts = [c for c in coarse if 0.0 < c < t]
    gap = t - (pts[-1] if pts else 0.0)
    pts += [t - gap * 2.0**-k for k in range(1, depth)]
    return sorted(set(p for p in pts if 0.0 < p < t))


def mild_solution(sheet: SheetSample, t: float, x, rtol: float = 1e-8):
    """Mild solution driven by the discretized noise of ``sheet`` at time ``t``.

    ``x`` may be a scalar or an array; the whole vector is integrated at once
    with error control in the max norm.
    """
    if not 0.0 < t <= 1.0:
        raise ConfigError(f"time must lie in (0, 1], got {t!r}")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = sheet.n
    weights = _edge_weights(sheet.increments, n)
    edges = sheet.points
    coarse = sheet.times
    active = np.nonzero(np.any(weights != 0.0, axis=0))[0]
    if active.size == 0:
        return 0.0 if scalar else np.zeros_like(x)
    weights = weights[:, active]
    diff = x[:, None] - edges[None, active]
    last = 2**n - 1

    def integrand(s):
        k = min(int(s * 2**n), last)
        w = np.sqrt(4.0 * max(t - s, 1e-300))
        return 0.5 * (special.erf(diff / w) @ weights[k])

    scale = np.abs(weights).sum() * t
    value, _ = integrate.quad_vec(integrand, 0.0, t, epsrel=rtol, epsabs=1e-14 * scale,
                                  norm="max", points=_break_points(t, coarse), limit=4000)
    return float(value[0]) if scalar else value


def solution_covariance(s: float, t: float, x: float, y: float, config: SheetConfig,
                        n_xi: int = 400, n_eta: int = 400) -> float:
    """``E[u_s(x) conj(u_t(y))]`` for the solution driven by the smooth truncated noise.

    Tensor midpoint rule over the cutoff rectangle
    ``|xi| <= 2^(2 kappa n)``, ``|eta| <= 2^(kappa n)``; returns the real part.
    """
    if config.raw:
        raise ConfigError("the spectral covariance needs a finite cutoff")
    h0, h1 = config.hurst.h0, config.hurst.h1
    k0, k1 = config.time_cutoff, config.space_cutoff
    xi = ((np.arange(n_xi) + 0.5) / n_xi * 2.0 - 1.0) * k0
    eta = (np.arange(n_eta) + 0.5) / n_eta * k1          # integrand is even in eta
    dxi, deta = 2.0 * k0 / n_xi, k1 / n_eta
    X, E = np.meshgrid(xi, eta, indexing="ij")
    g = gamma(s, X, E) * np.conj(gamma(t, X, E))
    weight = np.abs(X) ** (1.0 - 2.0 * h0) * E ** (1.0 - 2.0 * h1)
    c2 = (normalization_constant(h0) * normalization_constant(h1)) ** 2
    total = np.sum(g * weight * np.cos(E * (x - y))) * dxi * deta * 2.0
    return float(c2 * total.real)
