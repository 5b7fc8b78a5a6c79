import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from kinetic_clt import kernel as K
from kinetic_clt.initlaw import Gaussian, PointMass, Rademacher, StableParams, TwoSidedPareto, stable_cf
from kinetic_clt.limit import (BRANCH_CENTRED, BRANCH_GAUSS, BRANCH_MEAN, BRANCH_STABLE, LimitMixture, fixpoint_residual,
                               limit_cf, limit_mixture, moment_finite, moment_trend, sample_m_infty,
                               second_moment_bound)
from kinetic_clt.wild import CfGrid

WEALTH = K.wealth(0.25, 0.5)


def test_conservation_kernel_m_is_one():
    m = sample_m_infty(K.inelastic_kac(3.0), 0.5, n_proxy=500, N=2000, seed=1)
    assert np.max(np.abs(m - 1)) <= 1e-10


def test_wealth_m_mean_one():
    m = sample_m_infty(WEALTH, 1.0, n_proxy=2000, N=10_000, seed=2)
    assert np.all(m >= 0)
    assert abs(m.mean() - 1) <= 4 * m.std(ddof=1) / math.sqrt(len(m))


def test_increasing_branch_root_gives_degenerate_limit():
    # S(s) = 0.1^s + 0.5 * 1.2^s - 1 is convex with roots on both branches; at the
    # larger root S < 0 just below it and M_n collapses to 0
    kern = K.CollisionKernel.discrete([[0.1, 0.1, 0.5], [1.2, 0.0, 0.5]])
    hi = optimize.brentq(lambda s: K.s_moment(kern, s), 2.0, 8.0, xtol=1e-14)
    assert K.s_moment(kern, hi - 0.5) < 0
    meds = [np.median(sample_m_infty(kern, hi, n_proxy=n, N=2000, seed=3)) for n in (100, 1000, 10_000)]
    assert meds[0] > meds[1] > meds[2] and meds[2] < 0.05


def test_sample_m_infty_preconditions():
    with pytest.raises(ValueError):
        sample_m_infty(WEALTH, 2.0)
    with pytest.raises(ValueError):
        sample_m_infty(WEALTH, 1.0, n_proxy=50)


def test_limit_cf_at_zero_and_conservation():
    mix = limit_mixture(K.inelastic_kac(3.0), TwoSidedPareto(0.5, 1.0, 1.0), n_proxy=200, N=500, seed=4)
    assert mix.branch == BRANCH_STABLE
    assert limit_cf(mix, 0.0) == 1
    xi = np.linspace(-5, 5, 41)
    assert np.allclose(limit_cf(mix, xi), stable_cf(mix.stable, xi), atol=1e-12)
    assert mix.stable.k == pytest.approx(math.sqrt(2 * math.pi))


def test_limit_cf_alpha_one_point_mass():
    m0 = 1.5
    mix = limit_mixture(WEALTH, PointMass(m0), n_proxy=500, N=2000, seed=5)
    assert mix.branch == BRANCH_MEAN
    xi = np.array([-2.0, 0.3, 1.0, 4.0])
    ref = np.exp(1j * np.outer(xi, m0 * mix.m_samples)).mean(axis=1)
    assert np.allclose(limit_cf(mix, xi), ref, atol=1e-12)


def test_limit_branches():
    assert limit_mixture(K.inelastic_maxwell(), Rademacher(1.0), 200, 100).branch == BRANCH_GAUSS
    assert limit_mixture(WEALTH, TwoSidedPareto(1.0, 2.0, 1.0), 200, 100).branch == BRANCH_CENTRED
    assert limit_mixture(K.inelastic_kac(3.0), Gaussian(0.0, 1.0), 200, 100).stable.k == 0.0
    with pytest.raises(ValueError):
        limit_mixture(K.inelastic_maxwell(), PointMass(1.0), 200, 100)
    with pytest.raises(ValueError):
        limit_mixture(K.inelastic_kac(1.0 / 3.0), TwoSidedPareto(1.2, 1.0, 1.0), 200, 100)


def test_gaussian_branch_second_derivative():
    mix = limit_mixture(K.inelastic_maxwell(), Rademacher(1.0), n_proxy=500, N=5000, seed=6)
    h = 1e-3
    d2 = (limit_cf(mix, h) - 2 * limit_cf(mix, 0.0) + limit_cf(mix, -h)).real / h**2
    assert -d2 == pytest.approx(mix.stable.sigma2 * mix.m_samples.mean(), rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-50, 50))
def test_limit_cf_invariants(xi):
    mix = _WEALTH_CENTRED
    z = limit_cf(mix, xi)
    assert abs(z) <= 1 + 1e-12
    assert limit_cf(mix, -xi) == pytest.approx(np.conj(z), abs=1e-12)


_WEALTH_CENTRED = limit_mixture(WEALTH, TwoSidedPareto(1.0, 2.0, 1.0), n_proxy=200, N=500, seed=7)


def test_fixpoint_conservation_kernel_point_masses():
    kac = K.kac()
    for m0 in (1.0, 2.0):
        psi = CfGrid.from_law(PointMass(m0), 10.0, 256)
        assert fixpoint_residual(psi, kac, 2.0) <= 1e-12


def test_fixpoint_wealth_residual_small():
    mix = limit_mixture(WEALTH, PointMass(1.0), n_proxy=2000, N=20_000, seed=8)
    psi = CfGrid.from_callable(lambda x: np.exp(1j * np.outer(np.atleast_1d(x), mix.m_samples)).mean(axis=1)
                               .reshape(np.shape(x)), 20.0, 256)
    assert fixpoint_residual(psi, WEALTH, 1.0) <= 0.05


def test_moment_finite_examples():
    assert moment_finite(WEALTH, 1.0, 3) in ("boundary", "infinite")
    assert moment_finite(WEALTH, 1.0, 3) == "boundary"
    assert moment_finite(WEALTH, 1.0, 2) == "finite"
    assert moment_finite(K.inelastic_maxwell(), 2.0, 6) in ("boundary", "infinite")
    assert moment_finite(WEALTH, 1.0, 4) == "infinite"


def test_moment_finite_v_rules():
    assert moment_finite(K.inelastic_kac(3.0), 0.5, 0.4, of="v") == "finite"
    assert moment_finite(K.inelastic_kac(3.0), 0.5, 0.6, of="v") == "infinite"
    assert moment_finite(WEALTH, 1.0, 2, of="v") == "finite"
    assert moment_finite(K.inelastic_maxwell(), 2.0, 4, of="v") == "finite"
    with pytest.raises(ValueError):
        moment_finite(WEALTH, 1.0, 0)


def test_second_moment_bound_closed_form():
    # wealth: E[LR] = (5/16 + 1/16) / 2 = 3/16, S(2) = -1/8, so 2 (3/16) / (1/8) = 3
    assert second_moment_bound(WEALTH, 1.0) == pytest.approx(3.0, abs=1e-12)
    # inelastic Maxwell: E[(LR)^2] = (1/16 + 5/16) / 2 = 3/16 and S(4) = -1/8
    assert second_moment_bound(K.inelastic_maxwell(), 2.0) == pytest.approx(3.0, abs=1e-12)
    assert second_moment_bound(WEALTH, 1.5) == math.inf


def test_second_moment_from_fixed_point_equation():
    # M = L M' + R M'' in law with E M = 1 gives E M^2 (1 - E[L^2 + R^2]) = 2 E[LR]
    from fractions import Fraction as F

    atoms = [(F(5, 4), F(1, 4)), (F(1, 4), F(1, 4))]
    el2r2 = sum(l * l + r * r for l, r in atoms) / 2
    elr = sum(l * r for l, r in atoms) / 2
    assert float(2 * elr / (1 - el2r2)) == pytest.approx(second_moment_bound(WEALTH, 1.0), abs=1e-12)


def test_moment_trend_shapes():
    out = moment_trend(WEALTH, 1.0, 3.0, n_values=(100, 200, 400), N=20_000, batches=20, seed=10)
    assert out["order"] == 3.0 and len(out["medians"]) == 3 and out["class"] == "boundary"


def test_limit_mixture_rejects_negative_samples():
    with pytest.raises(ValueError):
        LimitMixture(1.0, m_samples=np.array([1.0, -0.1]))
