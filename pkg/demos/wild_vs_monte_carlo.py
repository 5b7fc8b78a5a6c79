"""
Two solvers for one equation
============================

The truncated Wild sum evaluates the characteristic function of the solution
on a frequency grid.  The same function is the characteristic function of
the random sum V_t, which is sampled directly.  Here both are computed for
the wealth exchange kernel started from the point mass at 1.
"""

from kinetic_clt import CfGrid, PointMass, cf_sup_distance, run_ensemble, wealth, wild_solve
from kinetic_clt.metrics import empirical_cf_grid

kern = wealth(0.25, 0.5)
phi0 = CfGrid.from_law(PointMass(1.0), 40.0, 4096)
phi = wild_solve(phi0, kern, 2.0, target_remainder=1e-4)
print("Wild terms", phi.meta["terms"], "remainder bound", phi.meta["remainder"])

ens = run_ensemble(kern, PointMass(1.0), 2.0, 200_000, seed=3)
mc = empirical_cf_grid(ens, 40.0, 4096)
print("sup |wild - mc| =", cf_sup_distance(phi, mc), " largest MC standard error", mc.meta["max_stderr"])
