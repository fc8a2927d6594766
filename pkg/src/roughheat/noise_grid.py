"""Fine scheme grid, coarse-to-fine index maps and the discretized noise.

The scheme runs on ``t_i = i / 2^(4n)`` and ``x_j = j / 2^(2n)`` with
``|j| <= N - 1``, ``N = 2^(3n+1)``, while the noise lives on the coarse cells
``[k/2^n, (k+1)/2^n) x [l/2^n, (l+1)/2^n)``.  Inside a coarse cell the noise
equals ``2^(2n)`` times the rectangular increment of the sheet; it vanishes
for ``x`` outside ``[-2^n, 2^n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridError
from .fractional_field import SheetSample

__all__ = [
    "FineGrid",
    "PiecewiseConstantField",
    "coarse_time_index",
    "coarse_space_index",
    "delta_b",
    "delta_b_table",
    "noise_eval",
    "discretized_noise",
    "bilinear_sheet_eval",
]


@dataclass(frozen=True)
class FineGrid:
    """Scheme grid attached to noise level ``n``.

    ``time_level`` and ``space_level`` are the dyadic exponents of the time
    step and mesh (``4n`` and ``2n`` by default); ``half_width`` is ``L``, the
    half length of the Galerkin domain (``2^(n+1)`` by default).
    """

    n: int
    time_level: int | None = None
    space_level: int | None = None
    half_width: int | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"level n must be an integer >= 1, got {self.n!r}")
        defaults = {"time_level": 4 * self.n, "space_level": 2 * self.n,
                    "half_width": 2 ** (self.n + 1)}
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        if self.time_level < self.n or self.space_level < self.n:
            raise ConfigError("scheme grid must refine the coarse noise grid")

    @classmethod
    def synchronized(cls, n: int) -> "FineGrid":
        """Noise and scheme on the common grid ``(i / 2^n, j / 2^n)``."""
        return cls(n, time_level=n, space_level=n)

    @property
    def steps(self) -> int:
        return 2**self.time_level

    @property
    def dt(self) -> float:
        return 2.0**-self.time_level

    @property
    def h(self) -> float:
        return 2.0**-self.space_level

    @property
    def n_half(self) -> int:
        """``N`` with ``L = N h``; unknowns are indexed by ``j = -N+1..N-1``."""
        return self.half_width * 2**self.space_level

    @property
    def size(self) -> int:
        return 2 * self.n_half - 1

    @property
    def time_ratio(self) -> int:
        return 2 ** (self.time_level - self.n)

    @property
    def space_ratio(self) -> int:
        return 2 ** (self.space_level - self.n)

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def node_indices(self) -> np.ndarray:
        return np.arange(-self.n_half + 1, self.n_half)

    def nodes(self) -> np.ndarray:
        return self.node_indices() * self.h


def _as_grid(grid, n):
    if grid is None:
        return FineGrid(n)
    if grid.n != n:
        raise GridError(f"grid level {grid.n} does not match n = {n}")
    return grid


def coarse_time_index(i: int, n: int, grid: FineGrid | None = None) -> int:
    """Coarse time cell containing the fine time ``t_i``.

    The final node ``t = 1`` is assigned to the last cell ``2^n - 1``.
    """
    grid = _as_grid(grid, n)
    if not 0 <= i <= grid.steps:
        raise GridError(f"fine time index {i} outside 0..{grid.steps}")
    return min(i // grid.time_ratio, 2**n - 1)


def coarse_space_index(j: int, n: int, grid: FineGrid | None = None) -> int:
    """Coarse space cell containing ``x_j`` (floor toward minus infinity)."""
    grid = _as_grid(grid, n)
    if not -grid.n_half + 1 <= j <= grid.n_half - 1:
        raise GridError(f"fine space index {j} outside {-grid.n_half + 1}..{grid.n_half - 1}")
    return j // grid.space_ratio


def _padded_cell(increments, n, cells):
    # column 0 and the last column are zero, so indices that fall off the
    # sheet support read a vanishing increment
    width = increments.shape[1]
    pad = [(0, 0), (1, 1)] + [(0, 0)] * (increments.ndim - 2)
    padded = np.pad(increments, pad)
    idx = np.clip(np.asarray(cells) + 2 ** (2 * n), -1, width) + 1
    return padded[:, idx]


def delta_b_table(increments, n: int, grid: FineGrid | None = None) -> np.ndarray:
    """Load increments ``delta B`` for every coarse time cell and every fine node.

    ``increments`` has shape ``(2^n, 2^(2n+1), ...)`` (trailing axes are carried
    along, e.g. a batch of sheets).  The result has shape
    ``(2^n, 2N - 1, ...)``; row ``k`` serves every fine step with coarse time
    index ``k``.  Cells outside the sheet support contribute zero.
    """
    grid = _as_grid(grid, n)
    increments = np.asarray(increments, dtype=float)
    if increments.shape[:2] != (2**n, 2 ** (2 * n + 1)):
        raise GridError(f"increments of shape {increments.shape} do not match level {n}")
    j = grid.node_indices()
    cells = j // grid.space_ratio
    right = _padded_cell(increments, n, cells)
    left = _padded_cell(increments, n, cells - 1)
    on_node = (j % grid.space_ratio == 0).reshape((1, -1) + (1,) * (increments.ndim - 2))
    return np.where(on_node, 0.5 * left + 0.5 * right, right)


def delta_b(sheet: SheetSample, i: int, j: int, grid: FineGrid | None = None) -> float:
    """Load increment of the scheme at fine step ``i`` and fine node ``j``."""
    grid = _as_grid(grid, sheet.n)
    k = coarse_time_index(i, sheet.n, grid)
    cell = coarse_space_index(j, sheet.n, grid)
    inc = sheet.increments[k]
    half = 2 ** (2 * sheet.n)

    def box(c):
        return inc[c + half] if -half <= c < half else 0.0

    if j % grid.space_ratio == 0:
        return float(0.5 * box(cell - 1) + 0.5 * box(cell))
    return float(box(cell))


@dataclass(frozen=True)
class PiecewiseConstantField:
    """Function equal to ``values[k, l]`` on ``[t_edges[k], t_edges[k+1]) x [x_edges[l], x_edges[l+1])``, zero elsewhere."""

    t_edges: np.ndarray
    x_edges: np.ndarray
    values: np.ndarray

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.t_edges, t, side="right") - 1
        l = np.searchsorted(self.x_edges, x, side="right") - 1
        inside = (k >= 0) & (k < self.values.shape[0]) & (l >= 0) & (l < self.values.shape[1])
        out = np.where(inside, self.values[np.clip(k, 0, self.values.shape[0] - 1),
                                           np.clip(l, 0, self.values.shape[1] - 1)], 0.0)
        return float(out) if out.ndim == 0 else out


def discretized_noise(sheet: SheetSample) -> PiecewiseConstantField:
    """The step-function noise ``2^(2n) * box_{k,l} B`` on the coarse cells."""
    n = sheet.n
    return PiecewiseConstantField(sheet.times, sheet.points, 4.0**n * sheet.increments)


def noise_eval(sheet: SheetSample, t, x):
    """Evaluate the discretized noise at ``(t, x)``, ``t`` in ``[0, 1)``."""
    return discretized_noise(sheet)(t, x)


def bilinear_sheet_eval(sheet: SheetSample, t, x):
    """Bilinear interpolant of the sheet between coarse nodes.

    Its mixed derivative is the discretized noise.  Points on the upper grid
    boundary are handled by the last cell.
    """
    n = sheet.n
    scale = 2.0**n
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    k = np.clip(np.floor(t * scale).astype(int), 0, 2**n - 1)
    half = 2 ** (2 * n)
    c = np.clip(np.floor(x * scale).astype(int) + half, 0, 2 * half - 1)
    v = sheet.values
    a = scale * (t - k / scale)
    b = scale * (x - (c - half) / scale)
    # weight form: reproduces stored values exactly at every node
    out = ((1 - a) * (1 - b) * v[k, c] + a * (1 - b) * v[k + 1, c]
           + (1 - a) * b * v[k, c + 1] + a * b * v[k + 1, c + 1])
    return float(out) if out.ndim == 0 else out
