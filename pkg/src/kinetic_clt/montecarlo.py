"""Monte Carlo sampling of V_t = sum_j beta_{j, nu_t} X_j.

Each replicate draws nu_t, grows a McKean weight array with nu_t leaves and
attaches i.i.d. initial values to the leaves.  Replicate ``i`` of an
ensemble with seed ``s`` consumes ``RandomStream(s, i)``, so ensembles are
reproducible and can be generated in any order or in parallel.

Large times are expensive: the mean leaf count is e^t.  ``run_ensemble``
therefore offers split-time pooling.  The law of V_t equals that of
``sum_j beta_j(t1) V^(j)(t2)`` with t1 + t2 = t and independent copies
V^(j), because the subtrees hanging off the leaves at time t1 evolve
independently.  A pool of i.i.d. V(t2) draws is generated once, and each
top tree picks *distinct* pool members, so every output value has exactly
the law of V_t.  Different outputs share pool members and are therefore
correlated; the metadata records this.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from ._trees import draw_nu, grow_unordered
from .errors import AlphaMismatch
from .initlaw import weighted_draws
from .mckean import NU_MAX
from .rng import TAG_POOL, TAG_REPLICATE, TAG_TOP, as_stream, random_sign, randbelow, seed_into

_CHUNK = 2048


@dataclass(eq=False)
class Ensemble:
    """Samples of V_t (or V_t*) with the metadata needed to regenerate them."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def N(self):
        return len(self.values)

    def mean(self):
        return float(np.mean(self.values))

    def stderr(self):
        """Standard error of the mean (i.i.d. formula)."""
        return float(np.std(self.values, ddof=1) / math.sqrt(self.N))

    def moment(self, p):
        """(E|V|^p estimate, standard error); integer p keeps the sign."""
        v = self.values**p if float(p).is_integer() else np.abs(self.values) ** p
        return float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(len(v)))

    def cf(self, xi):
        from .metrics import empirical_cf

        return empirical_cf(self.values, xi)

    def to_csv(self, path):
        """Write one value per row plus a ``.json`` sidecar holding ``meta``."""
        with open(path, "w", newline="") as fh:
            fh.write("value\r\n")
            fh.writelines(f"{v:.17g}\r\n" for v in self.values)
        with open(str(path) + ".json", "w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True, default=str)

    @classmethod
    def from_csv(cls, path):
        values = np.loadtxt(path, skiprows=1, delimiter=",", ndmin=1)
        meta = {}
        if os.path.exists(str(path) + ".json"):
            with open(str(path) + ".json") as fh:
                meta = json.load(fh)
        return cls(values, meta)


# ------------------------------------------------------------ kernels

@njit(inline="always")
def _vt_core(kind, table, p, lkind, lparams, t, state, buf, nu_max):
    n, trunc = draw_nu(t, state, nu_max)
    if n > buf.shape[0]:
        cap = buf.shape[0]
        while cap < n:
            cap *= 2
        buf = np.empty(cap)
    size = grow_unordered(kind, table, p, n, state, buf)
    return weighted_draws(lkind, lparams, buf, size, state), trunc, size, buf


@njit(cache=True)
def _nu_one(t, state, nu_max):
    n, trunc = draw_nu(t, state, nu_max)
    return n


@njit(parallel=True, cache=True)
def _ensemble_direct(kind, table, p, lkind, lparams, t, N, seed, tag, nu_max):
    out = np.empty(N)
    trunc = np.zeros(N, np.bool_)
    nchunks = (N + _CHUNK - 1) // _CHUNK
    for c in prange(nchunks):
        state = np.empty(4, np.uint64)
        buf = np.empty(1024)
        stop = min(N, (c + 1) * _CHUNK)
        for r in range(c * _CHUNK, stop):
            seed_into(state, seed, tag, r)
            v, tr, size, buf = _vt_core(kind, table, p, lkind, lparams, t, state, buf, nu_max)
            out[r] = v
            trunc[r] = tr
    return out, trunc


@njit(cache=True)
def _ensemble_with_weights(kind, table, p, lkind, lparams, t, start, stop, seed, nu_max):
    # sequential; returns values, all leaf weights and per-replicate offsets
    n = stop - start
    out = np.empty(n)
    trunc = np.zeros(n, np.bool_)
    offsets = np.zeros(n + 1, np.int64)
    store = np.empty(4096)
    used = 0
    state = np.empty(4, np.uint64)
    buf = np.empty(1024)
    for k in range(n):
        seed_into(state, seed, TAG_REPLICATE, start + k)
        v, tr, size, buf = _vt_core(kind, table, p, lkind, lparams, t, state, buf, nu_max)
        out[k] = v
        trunc[k] = tr
        if used + size > store.shape[0]:
            cap = store.shape[0]
            while cap < used + size:
                cap *= 2
            bigger = np.empty(cap)
            bigger[:used] = store[:used]
            store = bigger
        store[used:used + size] = buf[:size]
        used += size
        offsets[k + 1] = used
    return out, trunc, store[:used].copy(), offsets


@njit(parallel=True, cache=True)
def _ensemble_pooled(kind, table, p, t_top, N, seed, pool, flip, nu_max):
    P = pool.shape[0]
    out = np.empty(N)
    trunc = np.zeros(N, np.bool_)
    nchunks = (N + _CHUNK - 1) // _CHUNK
    for c in prange(nchunks):
        state = np.empty(4, np.uint64)
        buf = np.empty(1024)
        stamp = np.full(P, -1, np.int64)
        stop = min(N, (c + 1) * _CHUNK)
        for r in range(c * _CHUNK, stop):
            seed_into(state, seed, TAG_TOP, r)
            n, tr = draw_nu(t_top, state, nu_max)
            if n > buf.shape[0]:
                cap = buf.shape[0]
                while cap < n:
                    cap *= 2
                buf = np.empty(cap)
            size = grow_unordered(kind, table, p, n, state, buf)
            acc = 0.0
            for j in range(size):
                idx = randbelow(state, P)
                while stamp[idx] == r:
                    idx = randbelow(state, P)
                stamp[idx] = r
                y = pool[idx]
                if flip:
                    y *= random_sign(state)
                acc += buf[j] * y
            out[r] = acc
            trunc[r] = tr
    return out, trunc


# ------------------------------------------------------------ public API

def _args(kernel, law):
    kind, table, p = kernel.numba_args()
    lkind, lparams = law.numba_args()
    return kind, table, p, lkind, lparams


def sample_nu(t, rng=None, nu_max=NU_MAX):
    """One draw of nu_t (geometric with success probability e^-t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    rng = as_stream(rng)
    return int(_nu_one(float(t), rng.state, int(nu_max)))


def sample_vt(kernel, law, t, rng=None, nu_max=NU_MAX):
    """One draw of V_t."""
    if t < 0:
        raise ValueError("t must be >= 0")
    rng = as_stream(rng)
    v, _, _, _ = _vt_core(*_args(kernel, law), float(t), rng.state, np.empty(1024), int(nu_max))
    return float(v)


def centering_terms(w, law):
    """q_j = int sin(beta_j x) dF0(x), i.e. the imaginary part of phi0(beta_j)."""
    beta = np.asarray(getattr(w, "beta", w), dtype=float)
    return np.imag(law.cf(beta))


def _check_alpha_one(kernel):
    if abs(kernel.alpha - 1.0) > 1e-9:
        raise AlphaMismatch(f"centering needs alpha = 1, kernel {kernel.name} has alpha = {kernel.alpha:.12g}")


def sample_vt_star(kernel, law, t, rng=None, nu_max=NU_MAX):
    """One draw of V_t minus the centering sum over the same weight array."""
    _check_alpha_one(kernel)
    if t < 0:
        raise ValueError("t must be >= 0")
    rng = as_stream(rng)
    v, _, size, buf = _vt_core(*_args(kernel, law), float(t), rng.state, np.empty(1024), int(nu_max))
    return float(v - np.sum(centering_terms(buf[:size], law)))


def _centered_values(kernel, law, t, N, seed, nu_max, batch_leaves=4_000_000):
    args = _args(kernel, law)
    mean_leaves = math.exp(min(t, 30.0))
    step = max(1, int(batch_leaves / mean_leaves))
    values = np.empty(N)
    trunc = np.zeros(N, bool)
    for start in range(0, N, step):
        stop = min(N, start + step)
        v, tr, w, off = _ensemble_with_weights(*args, float(t), start, stop, int(seed), int(nu_max))
        q = centering_terms(w, law)
        sums = np.add.reduceat(q, off[:-1]) if len(q) else np.zeros(stop - start)
        values[start:stop] = v - sums
        trunc[start:stop] = tr
    return values, trunc


def default_split(t, N, pool_size):
    """Split time balancing pool cost P e^t2 against top-tree cost N e^(t - t2)."""
    s = 0.5 * (t + math.log(N / pool_size))
    return min(max(s, 0.0), t)


def run_ensemble(kernel, law, t, N, seed=0, centered=False, pool_size=None, split_time=None,
                 threads=None, nu_max=NU_MAX, **extra_meta):
    """N draws of V_t (``centered=True``: V_t*) as an :class:`Ensemble`.

    ``pool_size`` switches on split-time pooling (see module docstring).
    ``threads`` caps the numba worker count; the output does not depend on it.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    N, seed, t = int(N), int(seed), float(t)
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    meta = {"kernel": kernel.name, "law": law.name, "t": t, "N": N, "seed": seed,
            "centered": bool(centered), "nu_max": int(nu_max), "pool": None}
    if centered:
        _check_alpha_one(kernel)
        if pool_size is not None:
            raise ValueError("pooling cannot carry the centering sums; use pool_size=None")
        values, trunc = _centered_values(kernel, law, t, N, seed, nu_max)
    elif pool_size is None:
        values, trunc = _ensemble_direct(*_args(kernel, law), t, N, seed, TAG_REPLICATE, int(nu_max))
    else:
        P = int(pool_size)
        s = default_split(t, N, P) if split_time is None else float(split_time)
        if not 0 <= s <= t:
            raise ValueError("split_time must lie in [0, t]")
        pool, ptr = _ensemble_direct(*_args(kernel, law), s, P, seed, TAG_POOL, int(nu_max))
        kind, table, p, _, _ = _args(kernel, law)
        flip = bool(law.symmetric)
        values, trunc = _ensemble_pooled(kind, table, p, t - s, N, seed, pool, flip, min(int(nu_max), P))
        meta["pool"] = {"size": P, "split_time": s, "sign_symmetrized": flip,
                        "pool_truncated": int(np.count_nonzero(ptr))}
    ntr = int(np.count_nonzero(trunc))
    meta["truncated_tail"] = ntr > 0
    meta["n_truncated"] = ntr
    meta.update(extra_meta)
    return Ensemble(values, meta)
