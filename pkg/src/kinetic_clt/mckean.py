"""Random weight arrays of McKean trees and their moment statistics."""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._trees import draw_nu, grow_ordered, grow_unordered, max_of, power_sum
from .errors import InvalidS
from .kernel import s_moment
from .rng import TAG_REPLICATE, as_stream, seed_into

NU_MAX = 1_000_000


@dataclass(frozen=True, eq=False)
class WeightArray:
    """One realisation of (beta_{1,n}, ..., beta_{n,n}) in leaf order."""

    beta: np.ndarray

    @property
    def n(self):
        return len(self.beta)

    def to_rows(self):
        """CSV rows (n, j, beta) with 1-based leaf index."""
        n = self.n
        return [(n, j + 1, float(b)) for j, b in enumerate(self.beta)]


def grow_weights(kernel, n, rng=None):
    """Grow the tree to ``n`` leaves by repeatedly splitting a uniform leaf."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_stream(rng)
    kind, table, p = kernel.numba_args()
    return WeightArray(grow_ordered(kind, table, p, int(n), rng.state))


def m_stat(w, s):
    """M_n^(s) = sum_j beta_j^s, with 0^0 = 0."""
    b = np.asarray(w.beta if isinstance(w, WeightArray) else w, dtype=float)
    pos = b > 0
    return float(np.sum(b[pos] ** s))


def beta_max(w):
    b = w.beta if isinstance(w, WeightArray) else w
    return float(np.max(b))


def expected_m(kernel, s, n):
    """E[M_n^(s)] = prod_{i<n} (1 + S(s)/i)."""
    S = s_moment(kernel, s)
    if S <= -1.0:
        raise InvalidS(f"S({s}) = {S} <= -1")
    if n < 1:
        raise ValueError("n must be >= 1")
    out = 1.0
    for i in range(1, int(n)):
        out *= 1.0 + S / i
    return out


def expected_m_time(kernel, s, t):
    """E[M_{nu_t}^(s)] = exp(t S(s))."""
    S = s_moment(kernel, s)
    if S <= -1.0:
        raise InvalidS(f"S({s}) = {S} <= -1")
    if t < 0:
        raise ValueError("t must be >= 0")
    return math.exp(t * S)


@njit(cache=True)
def _stats_fixed_n(kind, table, p, n, svals, N, seed, tag, offset):
    ns = svals.shape[0]
    out = np.empty((N, ns + 1))
    buf = np.empty(n)
    state = np.empty(4, np.uint64)
    for r in range(N):
        seed_into(state, seed, tag, offset + r)
        size = grow_unordered(kind, table, p, n, state, buf)
        for k in range(ns):
            out[r, k] = power_sum(buf, size, svals[k])
        out[r, ns] = max_of(buf, size)
    return out


@njit(cache=True)
def _stats_time(kind, table, p, t, svals, N, seed, nu_max):
    ns = svals.shape[0]
    out = np.empty((N, ns + 1))
    cap = 1024
    buf = np.empty(cap)
    state = np.empty(4, np.uint64)
    ntrunc = 0
    for r in range(N):
        seed_into(state, seed, 0, r)
        n, trunc = draw_nu(t, state, nu_max)
        if trunc:
            ntrunc += 1
        if n > cap:
            while cap < n:
                cap *= 2
            buf = np.empty(cap)
        size = grow_unordered(kind, table, p, n, state, buf)
        for k in range(ns):
            out[r, k] = power_sum(buf, size, svals[k])
        out[r, ns] = max_of(buf, size)
    return out, ntrunc


def sample_m_stats(kernel, s, n, N, seed=0):
    """N independent values of M_n^(s) for each s in ``s``, and beta_(n).

    Returns ``(m, bmax)`` with ``m`` of shape (N, len(s)).  Uses O(n)
    unordered growth per array; replicate ``i`` is keyed by ``(seed, i)``.
    """
    svals = np.atleast_1d(np.asarray(s, dtype=float))
    kind, table, p = kernel.numba_args()
    out = _stats_fixed_n(kind, table, p, int(n), svals, int(N), int(seed), TAG_REPLICATE, 0)
    return out[:, :-1], out[:, -1]


def sample_m_time(kernel, s, t, N, seed=0, nu_max=NU_MAX):
    """N independent values of M_{nu_t}^(s); returns ``(m, bmax, n_truncated)``."""
    svals = np.atleast_1d(np.asarray(s, dtype=float))
    kind, table, p = kernel.numba_args()
    out, ntrunc = _stats_time(kind, table, p, float(t), svals, int(N), int(seed), int(nu_max))
    return out[:, :-1], out[:, -1], int(ntrunc)
