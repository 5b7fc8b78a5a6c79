"""Initial laws F0 and the stable-law machinery they are attracted to."""

import json
import math
import re
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gamma as gamma_fn
from scipy.special import ndtr, sici

from .errors import ConfigError
from .rng import TAG_REPLICATE, as_stream, normal, random_sign, seed_into, uniform, uniform_pos

POINT = 0
RADEMACHER = 1
GAUSSIAN = 2
PARETO = 3
GMIX = 4


# ------------------------------------------------------------ stable laws

@dataclass(frozen=True)
class StableParams:
    """Parameters of a centred stable law.

    For ``alpha < 2`` the law has characteristic function
    ``exp(-k |xi|^alpha (1 - i eta tan(pi alpha/2) sign xi))`` (with the
    logarithmic correction at ``alpha = 1``); for ``alpha = 2`` it is the
    centred Gaussian of variance ``sigma2``.
    """

    alpha: float
    k: float = 0.0
    eta: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        if abs(self.eta) > 1 + 1e-12:
            raise ValueError("|eta| must be <= 1")
        if self.k < 0 or self.sigma2 < 0:
            raise ValueError("k and sigma2 must be non-negative")

    @property
    def degenerate(self):
        return (self.sigma2 if self.alpha == 2 else self.k) == 0


def stable_cf(params, xi, scale=1.0):
    """Characteristic function of the stable law, scale multiplying k (or sigma2)."""
    xi = np.asarray(xi, dtype=float)
    a = params.alpha
    ax = np.abs(xi)
    sg = np.sign(xi)
    if a == 2:
        return np.exp(-0.5 * params.sigma2 * scale * xi**2) + 0j
    k = params.k * scale
    if a == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.where(ax > 0, np.log(np.where(ax > 0, ax, 1.0)), 0.0)
        expo = -k * ax * (1.0 + 2j * params.eta / np.pi * lg * sg)
    else:
        expo = -k * ax**a * (1.0 - 1j * params.eta * math.tan(math.pi * a / 2) * sg)
    return np.exp(expo)


def constants_from_tails(alpha, c_plus, c_minus):
    """Stable (k, eta) for a law with tail constants c+ and c-."""
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if c_plus < 0 or c_minus < 0:
        raise ValueError("tail constants must be non-negative")
    c = c_plus + c_minus
    k = c * math.pi / (2.0 * math.gamma(alpha) * math.sin(math.pi * alpha / 2.0))
    eta = 0.0 if c == 0 else (c_plus - c_minus) / c
    return StableParams(alpha, k, eta)


@njit(cache=True)
def _draw_stable(alpha, k, eta, sigma2, state):
    # Chambers-Mallows-Stuck in the form given by Weron (1996).  With
    # sigma = k^(1/alpha) and beta = eta its output has characteristic
    # function exp(-k|xi|^a (1 - i eta tan(pi a/2) sign xi)); at alpha = 1,
    # sigma = k gives exp(-k|xi| (1 + 2i eta/pi sign(xi) log|xi|)).
    if alpha == 2.0:
        return np.sqrt(sigma2) * normal(state)
    if k == 0.0:
        return 0.0
    v = np.pi * (uniform(state) - 0.5)
    w = -np.log(uniform_pos(state))
    if alpha == 1.0:
        h = 0.5 * np.pi + eta * v
        x = (2.0 / np.pi) * (h * np.tan(v) - eta * np.log(0.5 * np.pi * w * np.cos(v) / h))
        return k * x + (2.0 / np.pi) * eta * k * np.log(k)
    t = eta * np.tan(0.5 * np.pi * alpha)
    b = np.arctan(t) / alpha
    s = (1.0 + t * t) ** (0.5 / alpha)
    x = (s * np.sin(alpha * (v + b)) / np.cos(v) ** (1.0 / alpha)
         * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha))
    return k ** (1.0 / alpha) * x


@njit(cache=True)
def _draw_stable_many(alpha, k, eta, sigma2, n, seed):
    out = np.empty(n)
    state = np.empty(4, np.uint64)
    for i in range(n):
        seed_into(state, seed, 0, i)
        out[i] = _draw_stable(alpha, k, eta, sigma2, state)
    return out


def sample_stable(params, rng=None, size=None):
    """Draw from the stable law; ``size`` draws an i.i.d. array."""
    if size is not None:
        rng = as_stream(rng)
        return _draw_stable_many(params.alpha, params.k, params.eta, params.sigma2, int(size), rng.seed)
    rng = as_stream(rng)
    return float(_draw_stable(params.alpha, params.k, params.eta, params.sigma2, rng.state))


# --------------------------------------------------- Pareto characteristic

def _pareto_std_cf(a, alpha):
    """E exp(i a Y) for P(Y > y) = y^-alpha, y >= 1, evaluated for a >= 0.

    alpha = 1 uses sine/cosine integrals.  Otherwise a power series (small
    a) and a continued fraction for the incomplete Gamma function (large a)
    are combined; both are checked against mpmath in the test suite.
    """
    a = np.asarray(a, dtype=float)
    out = np.ones(a.shape, dtype=complex)
    pos = a > 0
    x = a[pos]
    if x.size == 0:
        return out
    if alpha == 1.0:
        si, ci = sici(x)
        out[pos] = (np.cos(x) - x * (0.5 * np.pi - si)) + 1j * (np.sin(x) - x * ci)
        return out
    small = x <= 4.0
    res = np.empty(x.shape, dtype=complex)
    if np.any(small):
        res[small] = _pareto_series(x[small], alpha)
    if np.any(~small):
        res[~small] = _pareto_cfrac(x[~small], alpha)
    out[pos] = res
    return out


def _pareto_series(x, alpha):
    lead = alpha * gamma_fn(-alpha) * np.exp(-0.5j * np.pi * alpha) * x**alpha
    term = np.ones(x.shape, dtype=complex)
    acc = np.zeros(x.shape, dtype=complex)
    for k in range(1, 80):
        term = term * (1j * x) / k
        acc += term / (k - alpha)
        if np.max(np.abs(term)) < 1e-18:
            break
    return 1.0 + lead - alpha * acc


def _pareto_cfrac(x, alpha):
    # modified Lentz evaluation of Gamma(s, z) e^z z^-s with s = -alpha, z = -i x
    s = -alpha
    z = -1j * x
    tiny = 1e-300
    b = z + 1.0 - s
    c = np.full(x.shape, 1.0 / tiny, dtype=complex)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 2000):
        an = -i * (i - s)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.max(np.abs(delta - 1.0)) < 1e-16:
            break
    return alpha * np.exp(1j * x) * h


# -------------------------------------------------------------- laws

class InitialLaw:
    """Base class; subclasses fill in the closed forms."""

    kind = -1
    name = ""
    m0 = None
    sigma2 = None
    c_plus = 0.0
    c_minus = 0.0
    symmetric = False

    def cdf(self, x):
        raise NotImplementedError

    def cf(self, xi):
        raise NotImplementedError

    def numba_args(self):
        raise NotImplementedError

    @property
    def tail_alpha(self):
        return None

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class PointMass(InitialLaw):
    kind = POINT

    def __init__(self, m0):
        self.m0 = float(m0)
        self.sigma2 = 0.0
        self.symmetric = self.m0 == 0.0
        self.name = f"point({self.m0:g})"

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.m0, 1.0, 0.0)

    def cf(self, xi):
        return np.exp(1j * self.m0 * np.asarray(xi, dtype=float))

    def numba_args(self):
        return POINT, np.array([self.m0])


class Rademacher(InitialLaw):
    """Plus or minus ``a`` with probability one half each."""

    kind = RADEMACHER
    symmetric = True

    def __init__(self, a=1.0):
        self.a = float(a)
        self.m0 = 0.0
        self.sigma2 = self.a**2
        self.name = f"rademacher({self.a:g})"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (x >= -self.a) + 0.5 * (x >= self.a)

    def cf(self, xi):
        return np.cos(self.a * np.asarray(xi, dtype=float)) + 0j

    def numba_args(self):
        return RADEMACHER, np.array([self.a])


class Gaussian(InitialLaw):
    kind = GAUSSIAN

    def __init__(self, mean=0.0, var=1.0):
        if var <= 0:
            raise ConfigError("gaussian variance must be positive")
        self.mean = float(mean)
        self.var = float(var)
        self.m0 = self.mean
        self.sigma2 = self.var
        self.symmetric = self.mean == 0.0
        self.name = f"gaussian({self.mean:g},{self.var:g})"

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mean) / math.sqrt(self.var))

    def cf(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.exp(1j * self.mean * xi - 0.5 * self.var * xi**2)

    def numba_args(self):
        return GAUSSIAN, np.array([self.mean, math.sqrt(self.var)])


class GaussianMixture(InitialLaw):
    """Finite mixture of normals; smooth, with finite Linnik-Fisher functional."""

    kind = GMIX

    def __init__(self, components):
        comp = np.array(components, dtype=float)
        if comp.ndim != 2 or comp.shape[1] != 3 or len(comp) == 0:
            raise ConfigError("gmix needs rows (weight, mean, var)")
        if np.any(comp[:, 0] <= 0) or np.any(comp[:, 2] <= 0):
            raise ConfigError("gmix weights and variances must be positive")
        if abs(comp[:, 0].sum() - 1) > 1e-9:
            raise ConfigError("gmix weights must sum to 1")
        comp[:, 0] /= comp[:, 0].sum()
        self.components = comp
        w, mu, var = comp.T
        self.m0 = float(w @ mu)
        self.sigma2 = float(w @ (var + mu**2)) - self.m0**2
        mirrored = {(round(a, 12), round(-b, 12), round(c, 12)) for a, b, c in comp}
        self.symmetric = mirrored == {(round(a, 12), round(b, 12), round(c, 12)) for a, b, c in comp}
        self.name = "gmix(" + json.dumps([[float(v) for v in row] for row in comp]) + ")"

    def cdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        w, mu, var = self.components.T
        return np.sum(w * ndtr((x - mu) / np.sqrt(var)), axis=-1)

    def cf(self, xi):
        xi = np.asarray(xi, dtype=float)[..., None]
        w, mu, var = self.components.T
        return np.sum(w * np.exp(1j * mu * xi - 0.5 * var * xi**2), axis=-1)

    def numba_args(self):
        w, mu, var = self.components.T
        k = len(w)
        params = np.empty(1 + 3 * k)
        params[0] = k
        cw = np.cumsum(w)
        cw[-1] = 1.0
        params[1::3] = cw
        params[2::3] = mu
        params[3::3] = np.sqrt(var)
        return GMIX, params


class TwoSidedPareto(InitialLaw):
    """Exact power tails ``P(X > x) = c+ x^-alpha`` and ``P(X < -x) = c- x^-alpha``.

    All mass sits on ``|x| >= x_min = (c+ + c-)^(1/alpha)``.  With
    ``centered=True`` and ``alpha > 1`` the law is shifted by its mean.
    """

    kind = PARETO

    def __init__(self, alpha, c_plus=1.0, c_minus=1.0, centered=False):
        if not 0 < alpha < 2:
            raise ConfigError("pareto2 needs 0 < alpha < 2")
        if c_plus < 0 or c_minus < 0 or c_plus + c_minus <= 0:
            raise ConfigError("pareto2 needs c+, c- >= 0 with c+ + c- > 0")
        self.alpha = float(alpha)
        self.c_plus = float(c_plus)
        self.c_minus = float(c_minus)
        self.centered = bool(centered)
        c = self.c_plus + self.c_minus
        self.x_min = c ** (1.0 / self.alpha)
        self.p_right = self.c_plus / c
        raw_mean = None
        if self.alpha > 1:
            raw_mean = self.alpha * (self.c_plus - self.c_minus) * self.x_min ** (1 - self.alpha) / (self.alpha - 1)
        self.shift = -raw_mean if (self.centered and raw_mean is not None) else 0.0
        self.m0 = None if raw_mean is None else raw_mean + self.shift
        self.sigma2 = None
        self.symmetric = self.c_plus == self.c_minus and self.shift == 0.0
        flag = "true" if self.centered else "false"
        self.name = f"pareto2({self.alpha:g},{self.c_plus:g},{self.c_minus:g},{flag})"

    @property
    def tail_alpha(self):
        return self.alpha

    def stable_params(self):
        return constants_from_tails(self.alpha, self.c_plus, self.c_minus)

    def cdf(self, x):
        y = np.asarray(x, dtype=float) - self.shift
        a, xm = self.alpha, self.x_min
        with np.errstate(divide="ignore"):
            left = self.c_minus * np.abs(y) ** (-a)
            right = 1.0 - self.c_plus * np.abs(y) ** (-a)
        mid = self.c_minus / (self.c_plus + self.c_minus)
        return np.where(y <= -xm, left, np.where(y >= xm, right, mid))

    def cf(self, xi):
        xi = np.asarray(xi, dtype=float)
        g = _pareto_std_cf(np.abs(xi) * self.x_min, self.alpha)
        pos = self.p_right * g + (1.0 - self.p_right) * np.conj(g)
        val = np.where(xi >= 0, pos, np.conj(pos))
        return val * np.exp(1j * self.shift * xi)

    def numba_args(self):
        return PARETO, np.array([self.alpha, self.x_min, self.p_right, self.shift])


@njit(inline="always")
def _draw_pareto(params, state):
    side = 1.0 if uniform(state) < params[2] else -1.0
    return side * params[1] * uniform_pos(state) ** (-1.0 / params[0]) + params[3]


@njit(inline="always")
def _draw_gmix(params, state):
    k = int(params[0])
    u = uniform(state)
    j = k - 1
    for i in range(k - 1):
        if u < params[1 + 3 * i]:
            j = i
            break
    return params[2 + 3 * j] + params[3 + 3 * j] * normal(state)


@njit(cache=True)
def draw_x(kind, params, state):
    if kind == POINT:
        return params[0]
    if kind == RADEMACHER:
        return params[0] * random_sign(state)
    if kind == GAUSSIAN:
        return params[0] + params[1] * normal(state)
    if kind == PARETO:
        return _draw_pareto(params, state)
    return _draw_gmix(params, state)


@njit(inline="always")
def weighted_draws(kind, params, w, size, state):
    """sum_j w[j] X_j with X_j i.i.d.; same stream use as ``draw_x`` per leaf."""
    acc = 0.0
    if kind == POINT:
        for j in range(size):
            acc += w[j]
        return acc * params[0]
    if kind == RADEMACHER:
        for j in range(size):
            acc += w[j] * random_sign(state)
        return acc * params[0]
    if kind == GAUSSIAN:
        for j in range(size):
            acc += w[j] * (params[0] + params[1] * normal(state))
        return acc
    if kind == PARETO:
        expo = 1.0 / params[0]
        if expo == 1.0 or expo == 2.0:
            # alpha = 1 or 1/2: integer powers, no pow() in the loop
            two = expo == 2.0
            for j in range(size):
                side = 1.0 if uniform(state) < params[2] else -1.0
                u = uniform_pos(state)
                acc += w[j] * (side * params[1] / (u * u if two else u) + params[3])
            return acc
        for j in range(size):
            acc += w[j] * _draw_pareto(params, state)
        return acc
    for j in range(size):
        acc += w[j] * _draw_gmix(params, state)
    return acc


@njit(cache=True)
def _draw_many(kind, params, n, seed):
    out = np.empty(n)
    state = np.empty(4, np.uint64)
    for i in range(n):
        seed_into(state, seed, TAG_REPLICATE, i)
        out[i] = draw_x(kind, params, state)
    return out


def law_cdf(law, x):
    return law.cdf(x)


def law_cf(law, xi):
    return law.cf(xi)


def law_sample(law, rng=None, size=None):
    """One draw (or ``size`` i.i.d. draws keyed by ``rng.seed``)."""
    kind, params = law.numba_args()
    rng = as_stream(rng)
    if size is not None:
        return _draw_many(kind, params, int(size), rng.seed)
    return float(draw_x(kind, params, rng.state))


# ------------------------------------------------------------- parsing

LAW_PRESETS = ("point(m0)", "rademacher(a)", "gaussian(mean,var)", "pareto2(alpha,cplus,cminus,centered)",
               "gmix([[w,mean,var],...])")

_CALL = re.compile(r"^\s*([a-z0-9_]+)\s*\((.*)\)\s*$", re.S)


def law_from_spec(spec):
    """Parse a law name such as ``"pareto2(0.5,1,1,false)"``."""
    if isinstance(spec, InitialLaw):
        return spec
    m = _CALL.match(str(spec))
    if not m:
        raise ConfigError(f"cannot parse law {spec!r}; valid laws: {', '.join(LAW_PRESETS)}")
    head, arg = m.group(1), m.group(2).strip()
    try:
        if head == "gmix":
            return GaussianMixture(json.loads(arg))
        parts = [p.strip() for p in arg.split(",")] if arg else []
        if head == "point" and len(parts) == 1:
            return PointMass(float(parts[0]))
        if head == "rademacher" and len(parts) <= 1:
            return Rademacher(float(parts[0]) if parts else 1.0)
        if head == "gaussian" and len(parts) == 2:
            return Gaussian(float(parts[0]), float(parts[1]))
        if head == "pareto2" and len(parts) in (3, 4):
            centered = len(parts) == 4 and parts[3].lower() in ("true", "1", "yes")
            return TwoSidedPareto(float(parts[0]), float(parts[1]), float(parts[2]), centered)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad arguments in law {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown law {spec!r}; valid laws: {', '.join(LAW_PRESETS)}")
