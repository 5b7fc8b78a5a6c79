"""Limit objects: the mixing variable M_inf and the limit characteristic functions.

Every limit law treated here is a scale mixture: its characteristic function
is ``E[exp(M c(xi))]`` where ``M`` is the martingale limit of
``sum_j beta_j^alpha`` and ``c`` is the log-characteristic exponent of a
fixed law (a stable exponent, ``-sigma2 xi^2 / 2`` or ``i m0 xi``).  M_inf is
represented by samples of M_n at a large ``n_proxy``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .initlaw import StableParams
from .kernel import s_moment
from .mckean import sample_m_stats
from .wild import CfGrid, gain_apply

S_TOL = 1e-10

BRANCH_STABLE = "stable mixture"              # alpha in (0,1) u (1,2)
BRANCH_MEAN = "mean times M"                  # alpha = 1, finite mean
BRANCH_CENTRED = "centred 1-stable mixture"   # alpha = 1, infinite mean, centred V*
BRANCH_GAUSS = "gaussian mixture"             # alpha = 2


@dataclass(eq=False)
class LimitMixture:
    """Law of the large-time limit as a mixture over samples of M_inf."""

    alpha: float
    stable: StableParams = None
    m_samples: np.ndarray = field(default=None, repr=False)
    n_proxy: int = 2000
    kernel: str = ""
    m0: float = None
    branch: str = BRANCH_STABLE
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.m_samples = np.asarray(self.m_samples, dtype=float)
        if np.any(self.m_samples < 0):
            raise ValueError("M samples must be non-negative")

    def exponent(self, xi):
        """c(xi) with limit CF E[exp(M c(xi))]."""
        xi = np.asarray(xi, dtype=float)
        if self.branch == BRANCH_MEAN:
            return 1j * self.m0 * xi
        p = self.stable
        ax = np.abs(xi)
        sg = np.sign(xi)
        if p.alpha == 2:
            return -0.5 * p.sigma2 * xi**2 + 0j
        if p.alpha == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                lg = np.where(ax > 0, np.log(np.where(ax > 0, ax, 1.0)), 0.0)
            return -p.k * ax * (1.0 + 2j * p.eta / np.pi * lg * sg)
        return -p.k * ax**p.alpha * (1.0 - 1j * p.eta * math.tan(math.pi * p.alpha / 2) * sg)

    def mean_m(self):
        m = self.m_samples
        return float(m.mean()), float(m.std(ddof=1) / math.sqrt(len(m)))

    def cf_grid(self, xi_max, m):
        """The limit CF on a grid, keeping the exact mixture as evaluator."""
        return CfGrid.from_callable(lambda x: limit_cf(self, x), xi_max, m, branch=self.branch,
                                    n_proxy=self.n_proxy, n_mix=len(self.m_samples))


@njit(parallel=True, cache=True)
def _mix_mean(msamp, c):
    n = c.shape[0]
    out = np.empty(n, np.complex128)
    N = msamp.shape[0]
    for k in prange(n):
        cr = c[k].real
        ci = c[k].imag
        sr = 0.0
        si = 0.0
        for j in range(N):
            m = msamp[j]
            e = math.exp(m * cr)
            sr += e * math.cos(m * ci)
            si += e * math.sin(m * ci)
        out[k] = complex(sr / N, si / N)
    return out


def _require_root(kernel, alpha):
    S = s_moment(kernel, alpha)
    if abs(S) > 1e-8:
        raise ValueError(f"S({alpha}) = {S:.3g} for kernel {kernel.name}; alpha must be a root of S")


def sample_m_infty(kernel, alpha, n_proxy=2000, N=10_000, seed=0):
    """N independent values of M_{n_proxy}^(alpha) standing in for M_inf."""
    _require_root(kernel, alpha)
    if n_proxy < 100:
        raise ValueError("n_proxy must be >= 100")
    m, _ = sample_m_stats(kernel, [alpha], int(n_proxy), int(N), seed)
    return m[:, 0].copy()


def limit_cf(mix, xi):
    """Mixture characteristic function averaged over ``mix.m_samples``."""
    xi = np.asarray(xi, dtype=float)
    c = np.atleast_1d(np.asarray(mix.exponent(xi), dtype=complex)).ravel()
    out = _mix_mean(mix.m_samples, c)
    return out.reshape(xi.shape) if xi.ndim else complex(out[0])


def limit_mixture(kernel, law, n_proxy=2000, N=10_000, seed=0):
    """Build the LimitMixture of ``law`` under ``kernel`` for the matching limit branch."""
    alpha = kernel.alpha
    m = sample_m_infty(kernel, alpha, n_proxy, N, seed)
    common = dict(m_samples=m, n_proxy=int(n_proxy), kernel=kernel.name, meta={"law": law.name, "seed": seed})
    tail = law.tail_alpha
    if abs(alpha - 2.0) <= 1e-9:
        if law.m0 is None or law.sigma2 is None or abs(law.m0) > 1e-12:
            raise ValueError("the alpha = 2 limit needs a centred law with finite variance")
        return LimitMixture(2.0, StableParams(2.0, sigma2=law.sigma2 + law.m0**2), branch=BRANCH_GAUSS, **common)
    if abs(alpha - 1.0) <= 1e-9:
        if law.m0 is not None and (tail is None or tail > 1):
            return LimitMixture(1.0, None, m0=law.m0, branch=BRANCH_MEAN, **common)
        if tail is not None and abs(tail - 1.0) <= 1e-12:
            return LimitMixture(1.0, law.stable_params(), branch=BRANCH_CENTRED, **common)
        raise ValueError(f"no limit branch covers law {law.name} at alpha = 1")
    if tail is not None and abs(tail - alpha) <= 1e-9:
        params = law.stable_params()
    elif tail is None or tail > alpha:
        params = StableParams(alpha, 0.0, 0.0)  # c+ = c- = 0: the limit is 0
    else:
        raise ValueError(f"law {law.name} is not in the normal domain of attraction of an {alpha:g}-stable law")
    if alpha > 1 and law.m0 is not None and abs(law.m0) > 1e-12:
        raise ValueError("for alpha > 1 the initial law must be centred")
    return LimitMixture(alpha, params, branch=BRANCH_STABLE, **common)


def fixpoint_residual(psi, kernel, alpha):
    """sup over the grid of |psi - E[psi(L^alpha xi) psi(R^alpha xi)]|."""
    k = kernel if alpha == 1 else kernel.power(alpha)
    out = gain_apply(psi, psi, k)
    return float(np.max(np.abs(out.values - psi.values)))


def moment_finite(kernel, alpha, p, of="m", infinite_mean=False):
    """Classify a moment of the limit as 'finite', 'infinite' or 'boundary'.

    ``of="m"`` asks about E[M_inf^(p/alpha)], finite iff S(p) < 0.
    ``of="v"`` asks about E|V_inf|^p with the rule of the matching limit branch;
    ``infinite_mean`` selects the centred alpha = 1 case.
    """
    if not p > 0:
        raise ValueError("p must be positive")

    def by_s():
        S = s_moment(kernel, p)
        if abs(S) <= S_TOL:
            return "boundary"
        return "finite" if S < 0 else "infinite"

    if of == "m":
        return by_s()
    if of != "v":
        raise ValueError("of must be 'm' or 'v'")
    if abs(alpha - 1) <= 1e-12 and not infinite_mean:
        return "finite" if p <= 1 else by_s()
    if abs(alpha - 2) <= 1e-12:
        return "finite" if p <= 2 else by_s()
    return "finite" if p < alpha else "infinite"


def second_moment_bound(kernel, alpha):
    """E[(M_inf^(alpha))^2] = 2 E[(LR)^alpha] / |S(2 alpha)| when S(2 alpha) < 0."""
    S2 = s_moment(kernel, 2 * alpha)
    if S2 >= 0:
        return math.inf
    if kernel.atoms.size:
        a = kernel.atoms
        lr = float(np.sum(a[:, 2] * (a[:, 0] * a[:, 1]) ** alpha))
    else:
        from .kernel import quadrature_nodes

        l, r, w = quadrature_nodes(kernel, 128)
        lr = float(np.sum(w * (l * r) ** alpha))
    return 2.0 * lr / abs(S2)


def moment_trend(kernel, alpha, p, n_values=(500, 1000, 2000), N=100_000, batches=50, seed=0):
    """Medians of batch means of (M_n^(alpha))^(p/alpha) across ``n_values``.

    Replicate ``i`` uses the same random stream for every n, so the values
    at successive n lie on one martingale path and the trend is not masked
    by independent noise.
    """
    q = p / alpha
    meds, means = [], []
    for n in n_values:
        m, _ = sample_m_stats(kernel, [alpha], int(n), int(N), seed)
        v = m[:, 0] ** q
        bm = v[: (len(v) // batches) * batches].reshape(batches, -1).mean(axis=1)
        meds.append(float(np.median(bm)))
        means.append(float(v.mean()))
    d = np.diff(meds)
    return {"n": list(n_values), "order": q, "medians": meds, "means": means,
            "strictly_increasing": bool(np.all(d > 0)), "class": moment_finite(kernel, alpha, p)}
