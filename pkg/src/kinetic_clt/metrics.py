"""Distances between laws and decay-rate fits."""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit, prange

from .errors import DegenerateFit, GridMismatch
from .kernel import s_moment

FLOOR = 1e-6


def _values(x):
    return np.asarray(getattr(x, "values", x), dtype=float)


def wasserstein_empirical(a, b, gamma, seed=0):
    """(mean |a_(i) - b_(i)|^gamma)^(1/max(gamma, 1)) over the sorted pairing.

    For gamma <= 1 the cost is not rooted.  If the sample counts differ the
    larger set is subsampled without replacement using ``seed``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if gamma > 2:
        raise ValueError("gamma > 2 is not supported")
    x, y = _values(a), _values(b)
    if len(x) != len(y):
        rng = np.random.default_rng(seed)
        if len(x) > len(y):
            x = rng.choice(x, len(y), replace=False)
        else:
            y = rng.choice(y, len(x), replace=False)
    cost = np.mean(np.abs(np.sort(x) - np.sort(y)) ** gamma)
    return float(cost ** (1.0 / max(gamma, 1.0)))


def noise_floor(a, gamma, seed=0):
    """W_gamma between the two halves of one sample set (a same-law baseline)."""
    x = _values(a)
    perm = np.random.default_rng(seed).permutation(len(x))
    h = len(x) // 2
    return wasserstein_empirical(x[perm[:h]], x[perm[h:2 * h]], gamma)


def cf_sup_distance(a, b):
    """max_k |a(xi_k) - b(xi_k)| for two CfGrids on the same grid."""
    if not a.same_grid(b):
        raise GridMismatch(f"grids differ: ({a.xi_max}, {a.m}) vs ({b.xi_max}, {b.m})")
    return float(np.max(np.abs(a.values - b.values)))


def theory_slope(kernel, gamma):
    """-B |S(gamma)| with B = 1 for gamma <= 1 and B = 1/gamma otherwise."""
    B = 1.0 if gamma <= 1 else 1.0 / gamma
    return -B * abs(s_moment(kernel, gamma))


@dataclass
class DecayFit:
    times: np.ndarray
    distances: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    theory_slope: float = None
    window: tuple = None
    used: np.ndarray = field(default=None, repr=False)

    def to_json(self):
        d = {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
             "theory_slope": self.theory_slope, "window": list(self.window) if self.window else None,
             "times": np.asarray(self.times).tolist(), "distances": np.asarray(self.distances).tolist()}
        return json.dumps(d, indent=2)


def fit_decay(times, distances, theory=None, floor=FLOOR):
    """Least-squares line through (t, log d) over the points with d > floor."""
    t = np.asarray(times, dtype=float)
    d = np.asarray(distances, dtype=float)
    if t.shape != d.shape:
        raise ValueError("times and distances differ in length")
    use = np.isfinite(d) & (d > floor)
    if np.count_nonzero(use) < 4:
        raise DegenerateFit(f"only {np.count_nonzero(use)} usable points; need 4")
    tu, y = t[use], np.log(d[use])
    slope, intercept = np.polyfit(tu, y, 1)
    resid = y - (slope * tu + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(t, d, float(slope), float(intercept), r2, theory, (float(tu.min()), float(tu.max())), use)


@njit(parallel=True, cache=True)
def _ecf_points(x, xi):
    n = xi.shape[0]
    out = np.empty(n, np.complex128)
    N = x.shape[0]
    for k in prange(n):
        sr = 0.0
        si = 0.0
        w = xi[k]
        for j in range(N):
            sr += math.cos(w * x[j])
            si += math.sin(w * x[j])
        out[k] = complex(sr / N, si / N)
    return out


@njit(cache=True)
def _ecf_uniform(x, h, n):
    # E exp(i k h X) for k = 0..n-1 by complex recurrence, re-anchored every 64 steps
    out = np.zeros(n, np.complex128)
    for j in range(x.shape[0]):
        step = complex(math.cos(h * x[j]), math.sin(h * x[j]))
        z = complex(1.0, 0.0)
        for k in range(n):
            if k % 64 == 0:
                z = complex(math.cos(k * h * x[j]), math.sin(k * h * x[j]))
            out[k] += z
            z *= step
    return out / x.shape[0]


def empirical_cf(values, xi):
    """Sample mean of exp(i xi X) and its standard error sqrt((1 - |phi|^2) / (N - 1))."""
    x = _values(values)
    xi = np.asarray(xi, dtype=float)
    flat = xi.ravel()
    N = len(x)
    if flat.size > 64:
        h = flat[1] - flat[0]
        if h > 0 and np.allclose(np.diff(flat), h, rtol=0, atol=1e-12 * max(1.0, abs(flat).max())):
            k0 = flat[0] / h
            if abs(k0 - round(k0)) < 1e-9:
                k0 = int(round(k0))
                kmax = max(abs(k0), abs(k0 + flat.size - 1))
                half = _ecf_uniform(x, h, kmax + 1)
                ks = k0 + np.arange(flat.size)
                vals = np.where(ks >= 0, half[np.abs(ks)], np.conj(half[np.abs(ks)]))
                se = np.sqrt(np.maximum(1.0 - np.abs(vals) ** 2, 0.0) / max(N - 1, 1))
                return vals.reshape(xi.shape), se.reshape(xi.shape)
    vals = _ecf_points(x, flat)
    se = np.sqrt(np.maximum(1.0 - np.abs(vals) ** 2, 0.0) / max(N - 1, 1))
    return vals.reshape(xi.shape), se.reshape(xi.shape)


def empirical_cf_grid(values, xi_max, m):
    """Empirical CF on a CfGrid, with the pointwise standard errors in ``meta``."""
    from .wild import CfGrid, grid_points

    vals, se = empirical_cf(values, grid_points(xi_max, m))
    return CfGrid(xi_max, m, vals, meta={"source": "empirical", "N": len(_values(values)),
                                          "max_stderr": float(se.max()), "stderr": se})
