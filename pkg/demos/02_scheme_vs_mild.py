"""The fine Galerkin scheme against the exact mild solution of the discretized noise.

Run with ``python demos/02_scheme_vs_mild.py [outdir]``.
"""

# %% setup
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from roughheat import (FineGrid, HatBasis, HurstPair, SheetConfig, discretized_noise, mild_solution,
                       reconstruct, run_galerkin, run_specialized_scheme, sample_sheet, svg)

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(parents=True, exist_ok=True)
hurst = HurstPair(0.25, 0.25)

# %% one path at n = 2
sheet = sample_sheet(SheetConfig(hurst, kappa=0.05, n=2, seed=7))
grid = FineGrid(2)
state = run_specialized_scheme(sheet, stride=16)
print("saved rows", state.coeffs.shape, "fine steps", grid.steps, "h =", grid.h)
x = np.linspace(-grid.half_width, grid.half_width, 513)
field = np.array([reconstruct(row, state.basis, x) for row in state.coeffs])
svg.heatmap(out / "scheme_n2.svg", x, state.times, field, title="scheme output, n = 2", meta="seed 7")

# %% the fast recursion is the generic mass + dt stiffness iteration with the piecewise-constant load
generic = run_galerkin(discretized_noise(sheet), HatBasis.from_grid(grid), 4 * 2)
fast = run_specialized_scheme(sheet).coeffs
print(f"specialized vs generic: max |diff| = {np.max(np.abs(fast - generic)):.2e}")

# %% the mild solution solves the same equation with the same noise exactly
xw = np.linspace(-1, 1, 65)
for t_index in (grid.steps // 4, grid.steps // 2, grid.steps):
    t = t_index * grid.dt
    u = reconstruct(fast[t_index], state.basis, xw)
    ref = mild_solution(sheet, t, xw)
    gap = np.sqrt(trapezoid((u - ref) ** 2, xw))
    print(f"t = {t:.2f}: L2 gap on [-1, 1] = {gap:.3e}, |u| = {np.sqrt(trapezoid(ref**2, xw)):.3e}")
