"""
Wasserstein distance to the limit
=================================

For the wealth kernel the solution started at 1 converges to M_inf, the
limit of the martingale sum of the weights.  W_2(V_t, M_inf) is bounded by
a multiple of exp(-t |S(2)| / 2) = exp(-t / 16).  The measured distances lie
below that bound and in fact decay considerably faster.
"""

import numpy as np

from kinetic_clt import PointMass, fit_decay, limit_mixture, run_ensemble, wasserstein_empirical, wealth
from kinetic_clt.metrics import noise_floor, theory_slope

kern = wealth(0.25, 0.5)
vinf = limit_mixture(kern, PointMass(1.0), n_proxy=2000, N=50_000, seed=4).m_samples
print("noise floor", noise_floor(vinf, 2.0))

ts = np.arange(0.0, 4.01, 0.5)
ds = np.array([wasserstein_empirical(run_ensemble(kern, PointMass(1.0), t, 50_000, seed=10 + i), vinf, 2.0)
               for i, t in enumerate(ts)])
bound = np.sqrt(2) * ds[0] * np.exp(theory_slope(kern, 2.0) * ts)
for t, d, b in zip(ts, ds, bound):
    print(f"t = {t:3.1f}  W_2 = {d:.4f}  bound {b:.4f}")
fit = fit_decay(ts, ds, theory=theory_slope(kern, 2.0))
print(f"fitted slope {fit.slope:.3f} (r^2 {fit.r_squared:.3f}), slope of the bound {fit.theory_slope:.4f}")
