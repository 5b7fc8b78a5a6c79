"""
Densities converge in L^1 and L^2
=================================

For the Kac kernel and a smooth two-bump initial density the Wild solver
gives the characteristic function on a grid; an FFT turns it into a density
that approaches the normal density of variance 3/2.
"""

import numpy as np

from kinetic_clt import CfGrid, GaussianMixture, density_from_cf, kac, lp_density_distance, wild_solve

law = GaussianMixture([[0.5, -1.0, 0.5], [0.5, 1.0, 0.5]])
phi0 = CfGrid.from_law(law, 20.0, 1024)
f_inf = density_from_cf(CfGrid.from_callable(lambda x: np.exp(-0.75 * x**2), 20.0, 1024))

for t in (0.0, 1.0, 2.0, 4.0, 8.0):
    f = density_from_cf(wild_solve(phi0, kac(), t, target_remainder=1e-10))
    print(f"t = {t:3.1f}  L1 {lp_density_distance(f, f_inf, 1):.5f}  L2 {lp_density_distance(f, f_inf, 2):.5f}")
