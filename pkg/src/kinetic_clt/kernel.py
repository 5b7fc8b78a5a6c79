"""Collision kernels: the law of the non-negative pair (L, R).

Two families are supported.  ``Discrete`` kernels list atoms ``(l, r, p)``
of the joint law directly, so any dependence between L and R is allowed.
``TrigKac`` kernels use ``L = |sin T|^(1+p)``, ``R = |cos T|^(1+p)`` with T
uniform, which covers the Kac model (p = 0) and its inelastic variants.
"""

import math
import re
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import gammaln

from .errors import ConfigError, NoRoot
from .rng import as_stream, uniform

DISCRETE = 0
TRIG_KAC = 1

_SCAN = np.round(np.arange(1, 201) * 0.01, 10)
_BISECT_ITERS = 80


@dataclass(frozen=True, eq=False)
class CollisionKernel:
    """Immutable description of (L, R).

    Use :meth:`discrete`, :meth:`trig_kac` or :func:`kernel_from_spec`
    rather than the raw constructor.
    """

    kind: int
    atoms: np.ndarray = field(repr=False)  # (k, 3) columns l, r, p
    p: float = 0.0
    name: str = ""
    _alpha: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def discrete(cls, atoms, name=None):
        a = np.array(atoms, dtype=float)
        if a.ndim != 2 or a.shape[1] != 3 or len(a) == 0:
            raise ConfigError("discrete kernel needs rows (l, r, p)")
        if np.any(a[:, :2] < 0) or not np.all(np.isfinite(a)):
            raise ConfigError("kernel atoms must be finite and non-negative")
        if np.any(a[:, 2] < 1e-15):
            raise ConfigError("atom probabilities must be >= 1e-15")
        total = a[:, 2].sum()
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"atom probabilities sum to {total!r}, not 1")
        a[:, 2] /= total
        a.setflags(write=False)
        if name is None:
            name = "discrete(" + ",".join(f"[{l:g},{r:g},{q:g}]" for l, r, q in a) + ")"
        return cls(DISCRETE, a, 0.0, name)

    @classmethod
    def trig_kac(cls, p=0.0, name=None):
        p = float(p)
        if not p > -1.0:
            raise ConfigError("TrigKac exponent needs 1 + p > 0")
        if name is None:
            name = "kac" if p == 0 else f"inelastic_kac({p:g})"
        empty = np.zeros((0, 3))
        empty.setflags(write=False)
        return cls(TRIG_KAC, empty, p, name)

    @property
    def alpha(self):
        if not self._alpha:
            self._alpha.append(find_alpha(self))
        return self._alpha[0]

    def is_conservative(self, alpha=None, tol=1e-12):
        """True if L^alpha + R^alpha = 1 almost surely."""
        a = self.alpha if alpha is None else alpha
        if self.kind == TRIG_KAC:
            return abs((1.0 + self.p) * a - 2.0) <= tol
        l, r = self.atoms[:, 0], self.atoms[:, 1]
        return bool(np.all(np.abs(_pow0(l, a) + _pow0(r, a) - 1.0) <= tol))

    def power(self, s):
        """The kernel of (L^s, R^s)."""
        if self.kind == TRIG_KAC:
            return CollisionKernel.trig_kac((1.0 + self.p) * s - 1.0, name=f"({self.name})^{s:g}")
        a = np.array(self.atoms)
        a[:, 0] = _pow0(a[:, 0], s)
        a[:, 1] = _pow0(a[:, 1], s)
        return CollisionKernel.discrete(a, name=f"({self.name})^{s:g}")

    def numba_args(self):
        """(kind, table, p) with table columns l, r, cumulative p."""
        if self.kind == TRIG_KAC:
            return TRIG_KAC, np.zeros((1, 3)), self.p
        t = np.array(self.atoms)
        t[:, 2] = np.cumsum(t[:, 2])
        t[-1, 2] = 1.0
        return DISCRETE, t, 0.0

    def max_factor(self):
        if self.kind == TRIG_KAC:
            return 1.0
        return float(self.atoms[:, :2].max())

    def __str__(self):
        return self.name


def _pow0(x, s):
    """x**s with the convention 0**s = 0 for every s >= 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, np.power(np.where(x > 0, x, 1.0), s), 0.0)


def _abs_sin_moment(q):
    """E|sin T|^q for T uniform, = Gamma((q+1)/2) / (sqrt(pi) Gamma(q/2+1))."""
    return math.exp(gammaln((q + 1.0) / 2.0) - gammaln(q / 2.0 + 1.0)) / math.sqrt(math.pi)


def s_moment(kernel, s):
    """S(s) = E[L^s + R^s] - 1 with 0^0 = 0."""
    s = float(s)
    if s < 0:
        raise ValueError("s must be non-negative")
    if kernel.kind == TRIG_KAC:
        if s == 0.0:
            return 1.0
        return 2.0 * _abs_sin_moment((1.0 + kernel.p) * s) - 1.0
    a = kernel.atoms
    return float(np.sum(a[:, 2] * (_pow0(a[:, 0], s) + _pow0(a[:, 1], s))) - 1.0)


def find_alpha(kernel):
    """Root of S on its decreasing branch inside (0, 2]."""
    vals = [s_moment(kernel, s) for s in _SCAN]
    for i in range(len(_SCAN) - 1):
        lo, hi = vals[i], vals[i + 1]
        if lo > 0.0 and hi <= 0.0:
            if hi == 0.0:
                return float(_SCAN[i + 1])
            a, b = float(_SCAN[i]), float(_SCAN[i + 1])
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (a + b)
                if s_moment(kernel, mid) > 0.0:
                    a = mid
                else:
                    b = mid
            root = 0.5 * (a + b)
            if abs(s_moment(kernel, root)) > 1e-10:
                root = b
            return root
    if vals[0] == 0.0:
        return float(_SCAN[0])
    raise NoRoot(f"S(s) for kernel {kernel.name} does not change sign on (0, 2]")


@njit(inline="always")
def draw_discrete(table, state):
    u = uniform(state)
    k = table.shape[0]
    for i in range(k - 1):
        if u < table[i, 2]:
            return table[i, 0], table[i, 1]
    return table[k - 1, 0], table[k - 1, 1]


@njit(inline="always")
def draw_trig(state):
    th = uniform(state) * (0.5 * np.pi)
    return np.sin(th), np.cos(th)


@njit(inline="always")
def draw_trig_pow(e, state):
    th = uniform(state) * (0.5 * np.pi)
    return np.sin(th) ** e, np.cos(th) ** e


@njit(cache=True)
def draw_lr(kind, table, p, state):
    # hot loops call the three specialised draws directly; mixing them in
    # one branchy function lets the compiler evaluate sin/cos speculatively
    if kind == TRIG_KAC:
        if p == 0.0:
            return draw_trig(state)
        return draw_trig_pow(1.0 + p, state)
    return draw_discrete(table, state)


def sample_lr(kernel, rng=None):
    """One draw of (L, R)."""
    rng = as_stream(rng)
    kind, table, p = kernel.numba_args()
    l, r = draw_lr(kind, table, p, rng.state)
    return float(l), float(r)


def check_h1(kernel, r):
    """Whether L^r + R^r >= 1 holds almost surely."""
    if not r > 0:
        raise ValueError("r must be positive")
    if kernel.kind == DISCRETE:
        a = kernel.atoms
        return bool(np.all(_pow0(a[:, 0], r) + _pow0(a[:, 1], r) >= 1.0 - 1e-12))
    q = (1.0 + kernel.p) * r
    th = np.linspace(0.0, 0.5 * np.pi, 20001)
    vals = np.abs(np.sin(th)) ** q + np.abs(np.cos(th)) ** q
    worst = min(float(vals.min()), 2.0 ** (1.0 - q / 2.0))
    return worst >= 1.0 - 1e-9


def quadrature_nodes(kernel, order=64):
    """Nodes (l_k, r_k) and weights w_k with E[f(L, R)] ~ sum w_k f(l_k, r_k).

    Exact for discrete kernels; Gauss-Legendre in T on [0, pi/2] otherwise.
    """
    if kernel.kind == DISCRETE:
        a = kernel.atoms
        return a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy()
    x, w = np.polynomial.legendre.leggauss(order)
    th = 0.25 * np.pi * (x + 1.0)
    e = 1.0 + kernel.p
    return np.sin(th) ** e, np.cos(th) ** e, 0.5 * w


# ---------------------------------------------------------------- presets

def kac():
    return CollisionKernel.trig_kac(0.0, name="kac")


def inelastic_kac(p):
    return CollisionKernel.trig_kac(p, name=f"inelastic_kac({p:g})")


def inelastic_maxwell():
    h = 0.5
    return CollisionKernel.discrete([[h, h, 0.5], [math.sqrt(5.0) / 2.0, h, 0.5]], name="inelastic_maxwell")


def wealth(p, r):
    if not (0 < p < 1 and 0 < r):
        raise ConfigError("wealth(p, r) needs 0 < p < 1 and r > 0")
    if 1 - p - r < 0:
        raise ConfigError("wealth(p, r) needs 1 - p - r >= 0")
    return CollisionKernel.discrete([[1 - p + r, p, 0.5], [1 - p - r, p, 0.5]], name=f"wealth({p:g},{r:g})")


KERNEL_PRESETS = ("kac", "inelastic_kac(p)", "inelastic_maxwell", "wealth(p,r)", "discrete([[l,r,p],...])")

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$", re.S)


def _floats(arg, n, name):
    try:
        vals = [float(v) for v in arg.split(",")] if arg and arg.strip() else []
    except ValueError as exc:
        raise ConfigError(f"bad arguments for {name}: {arg!r}") from exc
    if len(vals) != n:
        raise ConfigError(f"{name} takes {n} argument(s), got {len(vals)}")
    return vals


def kernel_from_spec(spec):
    """Parse a kernel name such as ``"wealth(0.25,0.5)"``."""
    if isinstance(spec, CollisionKernel):
        return spec
    m = _CALL.match(str(spec))
    if not m:
        raise ConfigError(f"cannot parse kernel {spec!r}; valid presets: {', '.join(KERNEL_PRESETS)}")
    head, arg = m.group(1), m.group(2)
    if head == "kac" and not arg:
        return kac()
    if head == "inelastic_kac":
        return inelastic_kac(*_floats(arg, 1, head))
    if head == "inelastic_maxwell" and not arg:
        return inelastic_maxwell()
    if head == "wealth":
        return wealth(*_floats(arg, 2, head))
    if head == "discrete":
        import json

        try:
            rows = json.loads(arg)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad atom list {arg!r}") from exc
        return CollisionKernel.discrete(rows)
    raise ConfigError(f"unknown kernel {spec!r}; valid presets: {', '.join(KERNEL_PRESETS)}")
