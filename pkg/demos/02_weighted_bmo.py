"""Mean oscillation and the weighted local bmo search."""

# %%
import numpy as np

from oscilab.oscillation import Interval, mean_oscillation, weighted_bmo_norm
from oscilab.sampled import SampledFunction, make_grid
from oscilab.weights import LogWeight, phi, phi_star

# %% the iterated-log weights; depth 0 is the constant weight
for k in range(3):
    w = LogWeight(k)
    print(f"k={k}: usable below x = {w.x_safe:.3g}; phi_star(1e-4) = {phi_star(w, 1e-4):.4f}, "
          f"phi(1e-4) = {phi(w, 1e-4):.4f}")

# %% the log singularity is the standard example of an unbounded function of bounded oscillation
grid = make_grid(-1.0, 1.0, 2048)
log_abs = SampledFunction(grid, np.log(np.abs(grid.nodes)))
print("mean oscillation on [-1, 1]:", round(mean_oscillation(log_abs, Interval(-1.0, 1.0)), 4))

rep = weighted_bmo_norm(log_abs, LogWeight(0), delta=0.3, density=8)
print(f"unweighted: sup part {rep.sup_part:.4f} on [{rep.argmax_interval.a:.4g}, {rep.argmax_interval.b:.4g}]")

# %% refining the grid toward the singularity leaves the sup part essentially unchanged
for n in (512, 1024, 4096):
    g = make_grid(-1.0, 1.0, n)
    f = SampledFunction(g, np.log(np.abs(g.nodes)))
    print(n, "nodes:", round(weighted_bmo_norm(f, LogWeight(0), 0.3, 8).sup_part, 6))

# %% a depth-1 weight divides each oscillation by phi of the interval length
rep1 = weighted_bmo_norm(log_abs, LogWeight(1), delta=0.05, density=8)
print(f"k=1: sup part {rep1.sup_part:.4f}, l1 part {rep1.l1_part:.4f}")
print("a few per-scale maxima:", [(round(ell, 5), round(v, 4)) for ell, v in rep1.per_scale[:4]])
