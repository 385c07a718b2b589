"""Maximal functions of sampled data, step by step."""

# %% a sampled function is a grid plus node values; between nodes it is linear
import numpy as np

from oscilab.maximal import MaximalOptions, maximal_detail, maximal_function
from oscilab.sampled import SampledFunction, make_grid

grid = make_grid(-1.0, 1.0, 201)
bump = SampledFunction(grid, np.where(np.abs(grid.nodes) <= 0.1, 1.0, 0.0))
print(len(bump), "nodes on", grid.hull)

# %% the uncentered maximal function takes the best average over intervals containing x
Mf = maximal_function(bump)
for x in (0.0, 0.3, 0.9):
    i = int(np.argmin(np.abs(grid.nodes - x)))
    print(f"M f({grid.nodes[i]:+.2f}) = {Mf.values[i]:.4f}")

# far from the bump the best interval stretches back to it, so M f decays like 1/distance
far = grid.nodes > 0.2
print("decay check, (x - 0.1) * M f(x):", np.round((grid.nodes[far] - 0.1)[::20] * Mf.values[far][::20], 3))

# %% which interval wins at each node
vals, a, b = maximal_detail(bump)
i = int(np.argmin(np.abs(grid.nodes - 0.5)))
print(f"at x = 0.5 the winning interval is [{a[i]:.3f}, {b[i]:.3f}]")

# %% power means and truncation only ever shrink the value
r_half = maximal_function(bump, MaximalOptions(r=0.5)).values
short = maximal_function(bump, MaximalOptions(delta_trunc=0.25)).values
print("r = 1/2 below r = 1 everywhere:", bool(np.all(r_half <= Mf.values + 1e-15)))
print("intervals capped at 0.25 below the full operator:", bool(np.all(short <= Mf.values + 1e-15)))

# %% the brute path is the reference for the fast one
brute = maximal_function(bump, MaximalOptions(algorithm="brute")).values
print("max |fast - brute| =", float(np.max(np.abs(Mf.values - brute))))
