"""
Random weight trees and their moments
=====================================

A McKean tree starts from a single leaf of weight 1.  At every step a leaf
is picked uniformly and replaced by two children carrying the weight times
L and times R.  The sums M_n^(s) of the s-th powers have closed-form means.
"""

import numpy as np

from kinetic_clt import RandomStream, expected_m, grow_weights, m_stat, wealth
from kinetic_clt.mckean import sample_m_stats

kern = wealth(0.25, 0.5)
print("kernel", kern.name, "alpha =", kern.alpha)

# one small tree, in leaf order
w = grow_weights(kern, 6, RandomStream(seed=1))
print("six leaves:", np.round(w.beta, 4), " M^(1) =", m_stat(w, 1.0))

# the mean of M_n^(s) against the running-product formula
for s in (1.0, 2.0, 3.0):
    m, _ = sample_m_stats(kern, [s], 20, 100_000, seed=2)
    est, se = m[:, 0].mean(), m[:, 0].std(ddof=1) / np.sqrt(len(m))
    print(f"s = {s:g}: mean M_20 = {est:.4f} +- {se:.4f}, formula {expected_m(kern, s, 20):.4f}")

# the largest weight shrinks as the tree grows
for n in (10, 100, 1000):
    _, bmax = sample_m_stats(kern, [1.0], n, 10_000, seed=3)
    print(f"n = {n:5d}: median largest weight {np.median(bmax):.4f}")
