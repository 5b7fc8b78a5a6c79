"""Spectral solver for the kinetic equation through the Wild sum.

Characteristic functions live on the symmetric grid
``xi_k = -xi_max + k * dxi`` (k = 0..m-1, ``dxi = 2 xi_max / m``), which
is the natural input of a centred FFT.  Internally only the half line
xi >= 0 is computed; negative frequencies follow from Hermitian symmetry,
which therefore holds exactly.

Off-grid values are obtained by cubic Hermite interpolation of the real
and imaginary parts with fourth-order finite-difference slopes.  Kernels
with a factor larger than one (the wealth kernel has L = 5/4) need values
beyond the grid.  The recursion is then run on a padded half grid with the
same spacing and cropped at the end; past the padded edge values are
continued from the edge with the decay rate seen over the last tenth of
the grid, and the number of such evaluations is recorded in ``meta``.

Densities use f(v) = (1/2pi) int exp(-i xi v) phi(xi) dxi on the dual grid
``v_j = (j - m/2) dv`` with ``dv = 2 pi / (m dxi)``.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridMismatch, GridTooSmall, PoorDecay
from .kernel import quadrature_nodes

DENSITY_CONVENTION = "f(v) = (1/2pi) int exp(-i xi v) phi(xi) dxi; v_j = (j - m/2) dv; dv = 2 pi / (m dxi)"
_EDGE_DECAY_WARN = 0.05
_CUSP_CELLS = 24


def _check_m(m):
    m = int(m)
    if m < 8 or m & (m - 1):
        raise ConfigError(f"grid size must be a power of two >= 8, got {m}")
    return m


@dataclass(eq=False)
class CfGrid:
    """Characteristic function sampled on a uniform symmetric grid.

    ``exact`` optionally holds a vectorised callable giving the function at
    arbitrary frequencies; interpolation is bypassed when it is present.
    """

    xi_max: float
    m: int
    values: np.ndarray
    exact: object = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.m = _check_m(self.m)
        self.xi_max = float(self.xi_max)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.m,):
            raise GridMismatch(f"expected {self.m} values, got shape {self.values.shape}")

    @classmethod
    def from_callable(cls, f, xi_max, m, keep_exact=True, **meta):
        m = _check_m(m)
        xi = grid_points(xi_max, m)
        return cls(xi_max, m, np.asarray(f(xi), dtype=complex), f if keep_exact else None, dict(meta))

    @classmethod
    def from_law(cls, law, xi_max, m):
        """CF of ``law``; power-tailed laws get ``meta['cusp']`` = tail exponent.

        The cusp exponent switches interpolation near xi = 0 to the variable
        |xi|^alpha, in which 1 - c |xi|^alpha + ... is smooth.
        """
        meta = {"source": f"law:{law.name}"}
        if law.tail_alpha is not None:
            meta["cusp"] = float(law.tail_alpha)
        return cls.from_callable(law.cf, xi_max, m, **meta)

    @property
    def dxi(self):
        return 2.0 * self.xi_max / self.m

    @property
    def xi(self):
        return grid_points(self.xi_max, self.m)

    def half(self):
        """Values at xi = k dxi for k = 0..m/2 (the last point is xi_max)."""
        h = self.m // 2
        out = np.empty(h + 1, dtype=complex)
        out[:h] = self.values[h:]
        out[h] = np.conj(self.values[0])
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.exact is not None:
            return np.asarray(self.exact(x), dtype=complex)
        return _HalfGrid(self.half(), self.dxi).eval_signed(x)

    def same_grid(self, other):
        return self.m == other.m and abs(self.xi_max - other.xi_max) <= 1e-12 * self.xi_max

    def check(self, tol=1e-9):
        """Report the CfGrid invariants: value at 0, Hermitian defect, sup modulus."""
        v = self.values
        h = self.m // 2
        herm = float(np.max(np.abs(v[1:][::-1] - np.conj(v[1:])))) if self.m > 1 else 0.0
        return {"value_at_zero": complex(v[h]), "hermitian_defect": herm,
                "max_modulus": float(np.max(np.abs(v))),
                "ok": abs(v[h] - 1) <= max(1e-12, self.meta.get("remainder", 0.0))
                and herm <= tol and np.max(np.abs(v)) <= 1 + tol}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("xi,re,im\r\n")
            for x, z in zip(self.xi, self.values):
                fh.write(f"{x:.17g},{z.real:.17g},{z.imag:.17g}\r\n")
        with open(str(path) + ".json", "w") as fh:
            json.dump({"xi_max": self.xi_max, "m": self.m, **self.meta}, fh, indent=2, sort_keys=True, default=str)

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, skiprows=1, delimiter=",", ndmin=2)
        xi = data[:, 0]
        m = len(xi)
        return cls(-xi[0], m, data[:, 1] + 1j * data[:, 2])


def grid_points(xi_max, m):
    return -float(xi_max) + np.arange(int(m)) * (2.0 * float(xi_max) / int(m))


class _HalfGrid:
    """Samples on x_k = k h, k = 0..M, with Hermitian continuation to x < 0."""

    def __init__(self, values, h, exact=None, cusp=None):
        self.v = np.asarray(values, dtype=complex)
        self.h = float(h)
        self.exact = exact
        self.cusp = cusp
        self.M = len(self.v) - 1
        self.n_extrapolated = 0
        v = self.v
        M = self.M
        ext = np.concatenate([np.conj(v[2:0:-1]), v])  # ext[k + 2] = v[k], k >= -2
        d = np.empty(M + 1, dtype=complex)
        k = np.arange(0, M - 1)
        d[: M - 1] = (ext[k] - 8 * ext[k + 1] + 8 * ext[k + 3] - ext[k + 4]) / 12.0
        d[M - 1] = (3 * v[M] + 10 * v[M - 1] - 18 * v[M - 2] + 6 * v[M - 3] - v[M - 4]) / 12.0
        d[M] = (25 * v[M] - 48 * v[M - 1] + 36 * v[M - 2] - 16 * v[M - 3] + 3 * v[M - 4]) / 12.0
        self.d = d
        # continuation past the edge: log-linear fit of |v| over the last tenth, never growing
        lo = max(M - max(M // 10, 4), 0)
        mag = np.abs(v[lo:])
        if np.all(mag > 1e-300):
            slope = np.polyfit(np.arange(lo, M + 1) * self.h, np.log(mag), 1)[0]
        else:
            slope = -np.inf
        self.rate = max(-slope, 0.0) if np.isfinite(slope) else np.inf
        self.edge = v[M]

    @property
    def x_max(self):
        return self.M * self.h

    def eval(self, x):
        """Values at x >= 0."""
        if self.exact is not None:
            return np.asarray(self.exact(x), dtype=complex)
        x = np.asarray(x, dtype=float)
        s = x / self.h
        out = np.empty(x.shape, dtype=complex)
        inside = s <= self.M
        si = s[inside]
        i = np.minimum(si.astype(np.int64), self.M - 1)
        t = si - i
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        out[inside] = h00 * self.v[i] + h10 * self.d[i] + h01 * self.v[i + 1] + h11 * self.d[i + 1]
        if self.cusp is not None:
            near = s < _CUSP_CELLS
            if np.any(near):
                out[near] = self._eval_cusp(x[near])
        if not np.all(inside):
            over = ~inside
            self.n_extrapolated += int(np.count_nonzero(over))
            dx = x[over] - self.x_max
            with np.errstate(invalid="ignore"):
                damp = np.exp(-self.rate * dx) if np.isfinite(self.rate) else np.zeros_like(dx)
            out[over] = self.edge * damp
        return out

    def _eval_cusp(self, x):
        # phi(x) = 1 - c x^a + ... is smooth in u = x^a, so interpolate there
        a = self.cusp
        i = np.clip(np.floor(x / self.h).astype(np.int64) - 1, 0, _CUSP_CELLS - 2)
        u = x**a
        nodes = (np.arange(_CUSP_CELLS + 2) * self.h) ** a
        out = np.zeros(x.shape, dtype=complex)
        for j in range(4):
            lj = np.ones(x.shape)
            for k in range(4):
                if k != j:
                    lj *= (u - nodes[i + k]) / (nodes[i + j] - nodes[i + k])
            out += lj * self.v[i + j]
        return out

    def eval_signed(self, x):
        x = np.asarray(x, dtype=float)
        out = self.eval(np.abs(x))
        neg = x < 0
        out[neg] = np.conj(out[neg])
        return out


def _full_from_half(half, m):
    h = m // 2
    vals = np.empty(m, dtype=complex)
    vals[h:] = half[:h]
    vals[0] = np.conj(half[h])
    vals[1:h] = np.conj(half[h - 1:0:-1])
    return vals


def _as_half(grid, pad_to=None):
    """_HalfGrid for ``grid``, padded to ``pad_to`` points where exact values allow."""
    cusp = grid.meta.get("cusp")
    if pad_to is not None and grid.exact is not None:
        x = np.arange(pad_to + 1) * grid.dxi
        return _HalfGrid(np.asarray(grid.exact(x), dtype=complex), grid.dxi, grid.exact, cusp)
    return _HalfGrid(grid.half(), grid.dxi, grid.exact, cusp)


def _check_coverage(kernel, grids):
    """Extrapolating a function that has not decayed at the edge is refused."""
    if kernel.max_factor() <= 1.0:
        return
    for g in grids:
        if g.exact is None:
            edge = max(abs(g.values[0]), abs(g.values[1]))
            if edge > _EDGE_DECAY_WARN:
                raise GridTooSmall(f"kernel {kernel.name} has factor {kernel.max_factor():g} > 1 and the grid "
                                   f"function is {edge:.3g} at xi_max; enlarge xi_max or supply exact values")


def gain_apply(a, b, kernel, order=64):
    """Pointwise E[a(L xi) b(R xi)] on the grid shared by ``a`` and ``b``."""
    if not a.same_grid(b):
        raise GridMismatch("gain_apply needs both functions on one grid")
    _check_coverage(kernel, (a, b))
    lk, rk, wk = quadrature_nodes(kernel, order)
    ha, hb = _as_half(a), _as_half(b)
    x = np.arange(a.m // 2 + 1) * a.dxi
    acc = np.zeros(len(x), dtype=complex)
    for l, r, w in zip(lk, rk, wk):
        acc += w * ha.eval(l * x) * hb.eval(r * x)
    meta = {"op": "gain", "kernel": kernel.name, "extrapolated_evaluations": ha.n_extrapolated + hb.n_extrapolated}
    return CfGrid(a.xi_max, a.m, _full_from_half(acc, a.m), meta=meta)


def default_pad(kernel):
    """Padding factor of the internal grid for expanding kernels."""
    return 1 if kernel.max_factor() <= 1.0 else 8


def _wild_half(q0, kernel, N, order):
    """q_0..q_N on the half grid of ``q0`` (a _HalfGrid)."""
    lk, rk, wk = quadrature_nodes(kernel, order)
    K = len(wk)
    x = np.arange(q0.M + 1) * q0.h
    argL = np.outer(lk, x)
    argR = np.outer(rk, x)
    QL = np.empty((N + 1, K, q0.M + 1), dtype=complex)
    QR = np.empty_like(QL)
    terms = [q0.v.copy()]
    n_extra = 0

    def push(j, hg):
        nonlocal n_extra
        QL[j] = hg.eval(argL)
        QR[j] = hg.eval(argR)
        n_extra += hg.n_extrapolated

    push(0, q0)
    for n in range(1, N + 1):
        qn = np.einsum("k,jkx,jkx->x", wk, QL[:n], QR[n - 1::-1]) / n
        terms.append(qn)
        if n < N:
            push(n, _HalfGrid(qn, q0.h, cusp=q0.cusp))
    return terms, n_extra


def terms_needed(t, target_remainder):
    """Smallest N with (1 - e^-t)^(N+1) <= target_remainder."""
    if t <= 0:
        return 0
    q = -math.expm1(-t)
    return max(0, math.ceil(math.log(target_remainder) / math.log(q)) - 1)


def remainder_bound(t, N):
    """(1 - e^-t)^(N+1), the total Wild weight of the omitted terms."""
    return (-math.expm1(-t)) ** (N + 1) if t > 0 else 0.0


def wild_terms(phi0, kernel, N, pad=None, order=64):
    """q_0, ..., q_N of the Wild recursion as CfGrids on the grid of ``phi0``."""
    if N < 0:
        raise ValueError("N must be >= 0")
    pad = default_pad(kernel) if pad is None else int(pad)
    if pad == 1:
        _check_coverage(kernel, (phi0,))
    h = phi0.m // 2
    q0 = _as_half(phi0, pad_to=h * pad if pad > 1 else None)
    if pad > 1 and phi0.exact is None:
        raise GridTooSmall("padding needs exact initial values (phi0.exact)")
    halves, n_extra = _wild_half(q0, kernel, int(N), order)
    out = []
    for n, v in enumerate(halves):
        meta = {"term": n, "kernel": kernel.name, "pad": pad, "extrapolated_evaluations": n_extra}
        if q0.cusp is not None:
            meta["cusp"] = q0.cusp
        out.append(CfGrid(phi0.xi_max, phi0.m, _full_from_half(v[: h + 1], phi0.m),
                          exact=phi0.exact if n == 0 else None, meta=meta))
    return out


def _wild_weights(t, N):
    e = math.exp(-t)
    q = -math.expm1(-t)
    return np.array([e * q**n for n in range(N + 1)])


def wild_evaluate(terms, t):
    """Truncated Wild sum at time t; ``meta['remainder']`` bounds the omitted part."""
    if t < 0:
        raise ValueError("t must be >= 0")
    N = len(terms) - 1
    w = _wild_weights(t, N)
    vals = np.tensordot(w, np.stack([g.values for g in terms]), axes=1)
    g0 = terms[0]
    meta = {"t": float(t), "terms": N, "remainder": remainder_bound(t, N)}
    if "cusp" in g0.meta:
        meta["cusp"] = g0.meta["cusp"]
    return CfGrid(g0.xi_max, g0.m, vals, meta=meta)


def wild_solve(phi0, kernel, t, target_remainder=1e-4, pad=None, order=64, step=1.0, max_terms=120):
    """phi(t) from phi0; long times restart the Wild sum every ``step``.

    A single sum needs about e^t |log eps| terms, so for t beyond ``step``
    the solution is advanced as phi(t) = P_h ... P_h phi0 with the semigroup
    property.  A stage of length h is Lipschitz in sup norm with constant
    E nu_h = e^h, so an error carried into a stage can grow by that factor;
    the reported remainder propagates the per-stage bounds accordingly.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    pad = default_pad(kernel) if pad is None else int(pad)
    h = phi0.m // 2
    if pad > 1 and phi0.exact is None:
        raise GridTooSmall("padding needs exact initial values (phi0.exact)")
    if pad == 1:
        _check_coverage(kernel, (phi0,))
    cur = _as_half(phi0, pad_to=h * pad if pad > 1 else None)
    if t == 0:
        stages = [0.0]
    else:
        n_st = 1 if terms_needed(t, target_remainder) <= max_terms else math.ceil(t / step)
        stages = [t / n_st] * n_st
    eps = target_remainder / sum(math.exp(j * stages[0]) for j in range(len(stages)))
    total_rem = 0.0
    total_terms = 0
    n_extra = 0
    for dt in stages:
        N = min(terms_needed(dt, eps), max_terms)
        halves, ne = _wild_half(cur, kernel, N, order)
        n_extra += ne
        w = _wild_weights(dt, N)
        v = np.tensordot(w, np.stack(halves), axes=1)
        total_rem = total_rem * math.exp(dt) + remainder_bound(dt, N)
        total_terms += N
        cur = _HalfGrid(v, cur.h, cusp=cur.cusp)
    meta = {"t": float(t), "kernel": kernel.name, "stages": len(stages), "terms": total_terms,
            "remainder": total_rem, "pad": pad, "extrapolated_evaluations": n_extra}
    if cur.cusp is not None:
        meta["cusp"] = cur.cusp
    return CfGrid(phi0.xi_max, phi0.m, _full_from_half(cur.v[: h + 1], phi0.m), meta=meta)


@dataclass(eq=False)
class Density:
    """Density samples on the grid dual to a CfGrid."""

    v: np.ndarray
    f: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dv(self):
        return float(self.v[1] - self.v[0])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("v,f\r\n")
            for x, y in zip(self.v, self.f):
                fh.write(f"{x:.17g},{y:.17g}\r\n")
        with open(str(path) + ".json", "w") as fh:
            json.dump({"convention": DENSITY_CONVENTION, **self.meta}, fh, indent=2, sort_keys=True, default=str)


def density_from_cf(grid):
    """Inverse Fourier transform of ``grid`` sampled on the dual grid."""
    edge = max(abs(grid.values[0]), abs(grid.values[1]), abs(grid.values[-1]))
    if edge > _EDGE_DECAY_WARN:
        warnings.warn(f"|phi| = {edge:.3g} at the grid edge; the density will be aliased", PoorDecay, stacklevel=2)
    m = grid.m
    dxi = grid.dxi
    vals = grid.values.copy()
    # xi = -xi_max pairs with itself; the trapezoid rule over [-X, X] keeps its real part
    vals[0] = vals[0].real
    f = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(vals))) * dxi / (2 * np.pi)
    scale = max(float(np.max(np.abs(f.real))), 1e-300)
    if np.max(np.abs(f.imag)) > 1e-6 * max(scale, 1.0):
        raise ValueError("density has a non-negligible imaginary part; the CF is not Hermitian")
    dv = 2 * np.pi / (m * dxi)
    v = (np.arange(m) - m // 2) * dv
    return Density(v, f.real.copy(), {"xi_max": grid.xi_max, "m": m, "edge_modulus": edge})


def lp_density_distance(f, g, p=2, dv=None):
    """Trapezoidal L^p distance between two densities on one grid."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if isinstance(f, Density) and isinstance(g, Density):
        if len(f.v) != len(g.v) or not np.allclose(f.v, g.v, rtol=0, atol=1e-12 * max(1.0, abs(f.v[0]))):
            raise GridMismatch("densities live on different grids")
        dv, fa, ga = f.dv, f.f, g.f
    else:
        fa = np.asarray(getattr(f, "f", f), dtype=float)
        ga = np.asarray(getattr(g, "f", g), dtype=float)
        if dv is None:
            dv = f.dv if isinstance(f, Density) else g.dv
    diff = np.abs(fa - ga) ** p
    val = np.trapezoid(diff, dx=dv)
    return float(val ** (1.0 / p))
