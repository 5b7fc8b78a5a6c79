"""
A stable limit with exact power tails
=====================================

The inelastic Kac kernel with p = 3 conserves E|V|^(1/2).  Starting from a
two-sided Pareto law with P(|X| > x) = 2 x^(-1/2), the solution converges
to the symmetric 1/2-stable law with scale k = sqrt(2 pi).
"""

import numpy as np

from kinetic_clt import TwoSidedPareto, constants_from_tails, empirical_cf, inelastic_kac, run_ensemble

kern = inelastic_kac(3.0)
law = TwoSidedPareto(0.5, 1.0, 1.0)
params = constants_from_tails(0.5, 1.0, 1.0)
print("alpha =", kern.alpha, " k =", params.k, " sqrt(2 pi) =", np.sqrt(2 * np.pi))

for t in (1.0, 4.0, 10.0):
    ens = run_ensemble(kern, law, t, 100_000, seed=2, pool_size=50_000 if t > 6 else None)
    xi = np.array([0.25, 0.5, 1.0, 2.0])
    phi, _ = empirical_cf(ens, xi)
    print(f"t = {t:4.1f}  |phi - exp(-k|xi|^1/2)| =", np.round(np.abs(phi - np.exp(-params.k * xi**0.5)), 4))
