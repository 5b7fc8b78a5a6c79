import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinetic_clt import kernel as K
from kinetic_clt.errors import ConfigError, GridMismatch, GridTooSmall, PoorDecay
from kinetic_clt.initlaw import GaussianMixture, PointMass, Rademacher, TwoSidedPareto
from kinetic_clt.wild import (CfGrid, Density, density_from_cf, gain_apply, grid_points, lp_density_distance,
                              remainder_bound, terms_needed, wild_evaluate, wild_solve, wild_terms)

WEALTH = K.wealth(0.25, 0.5)


def test_grid_layout():
    g = CfGrid.from_callable(lambda x: np.exp(-x**2), 4.0, 16)
    assert g.xi[0] == -4.0 and g.dxi == 0.5 and g.xi[8] == 0.0
    assert np.allclose(g.half(), np.exp(-(np.arange(9) * 0.5) ** 2))
    with pytest.raises(ConfigError):
        CfGrid.from_callable(lambda x: x, 4.0, 12)


def test_gain_of_constant_one():
    one = CfGrid.from_callable(lambda x: np.ones_like(x, dtype=complex), 10.0, 256)
    for kern in (K.kac(), WEALTH, K.inelastic_maxwell()):
        assert np.allclose(gain_apply(one, one, kern).values, 1.0, atol=1e-14)


def test_gain_wealth_point_mass():
    phi = CfGrid.from_law(PointMass(1.0), 20.0, 512)
    out = gain_apply(phi, phi, WEALTH)
    xi = phi.xi
    ref = 0.5 * np.exp(1.5j * xi) + 0.5 * np.exp(0.5j * xi)
    assert np.max(np.abs(out.values - ref)) <= 1e-13


def test_gain_interpolated_against_exact():
    # drop the exact evaluator so that the gain operator interpolates
    f = lambda x: np.exp(-0.5 * x**2 + 0.3j * x)
    g = CfGrid.from_callable(f, 20.0, 1024, keep_exact=False)
    ref = gain_apply(CfGrid.from_callable(f, 20.0, 1024), CfGrid.from_callable(f, 20.0, 1024), K.kac())
    assert np.max(np.abs(gain_apply(g, g, K.kac()).values - ref.values)) <= 1e-6


def test_gain_grid_mismatch():
    a = CfGrid.from_law(Rademacher(1.0), 10.0, 64)
    b = CfGrid.from_law(Rademacher(1.0), 10.0, 128)
    with pytest.raises(GridMismatch):
        gain_apply(a, b, K.kac())


def test_gain_grid_too_small():
    a = CfGrid.from_callable(np.cos, 10.0, 64, keep_exact=False)
    with pytest.raises(GridTooSmall):
        gain_apply(a, a, WEALTH)


def test_wild_terms_zero():
    phi0 = CfGrid.from_law(Rademacher(1.0), 10.0, 256)
    terms = wild_terms(phi0, K.kac(), 0)
    assert len(terms) == 1 and np.array_equal(terms[0].values, phi0.values)


def test_first_wild_term_is_gain():
    phi0 = CfGrid.from_law(GaussianMixture([[0.5, -1.0, 0.5], [0.5, 1.0, 0.5]]), 20.0, 512)
    q1 = wild_terms(phi0, K.kac(), 1)[1]
    assert np.max(np.abs(q1.values - gain_apply(phi0, phi0, K.kac()).values)) <= 1e-12


def test_wild_terms_are_characteristic_functions():
    phi0 = CfGrid.from_law(Rademacher(1.0), 20.0, 512)
    for q in wild_terms(phi0, K.kac(), 30):
        c = q.check()
        assert abs(c["value_at_zero"] - 1) <= 1e-12
        assert c["max_modulus"] <= 1 + 1e-9
        assert c["hermitian_defect"] <= 1e-12


def test_wild_evaluate_at_zero_and_remainder():
    phi0 = CfGrid.from_law(Rademacher(1.0), 20.0, 256)
    terms = wild_terms(phi0, K.kac(), 10)
    g = wild_evaluate(terms, 0.0)
    assert np.array_equal(g.values, phi0.values) and g.meta["remainder"] == 0.0
    assert remainder_bound(2.0, 40) == pytest.approx((1 - math.exp(-2)) ** 41, rel=1e-14)
    assert remainder_bound(2.0, 40) == pytest.approx(2.6e-3, abs=5e-5)
    assert wild_evaluate(terms, 2.0).meta["remainder"] == remainder_bound(2.0, 10)


def test_terms_needed_meets_target():
    for t in (0.1, 1.0, 2.0, 3.0):
        N = terms_needed(t, 1e-4)
        assert remainder_bound(t, N) <= 1e-4 < remainder_bound(t, N - 1)


def test_wild_sum_convexity():
    phi0 = CfGrid.from_law(GaussianMixture([[0.3, -1.0, 0.2], [0.7, 0.4, 0.5]]), 20.0, 256)
    terms = wild_terms(phi0, K.kac(), 20)
    bound = np.max([np.abs(q.values) for q in terms], axis=0)
    for t in (0.3, 1.0, 2.5):
        assert np.all(np.abs(wild_evaluate(terms, t).values) <= bound + 1e-12)


def test_wild_energy_conservation_maxwell():
    # -phi''(0) = E V_t^2 = 1 for all t with the inelastic Maxwell kernel and a Rademacher law
    phi0 = CfGrid.from_law(Rademacher(1.0), 10.0, 4096)
    h = phi0.dxi
    mid = phi0.m // 2
    for t in (0.5, 1.0, 2.0):
        v = wild_solve(phi0, K.inelastic_maxwell(), t, target_remainder=1e-10).values
        d2 = (v[mid + 1] - 2 * v[mid] + v[mid - 1]).real / h**2
        assert -d2 == pytest.approx(1.0, abs=1e-4)


def test_wild_solve_restarts_match_single_sum():
    phi0 = CfGrid.from_law(GaussianMixture([[0.5, -1.0, 0.5], [0.5, 1.0, 0.5]]), 20.0, 512)
    a = wild_solve(phi0, K.kac(), 2.0, target_remainder=1e-7)
    b = wild_solve(phi0, K.kac(), 2.0, target_remainder=1e-7, max_terms=30, step=0.5)
    assert b.meta["stages"] == 4 and a.meta["stages"] == 1
    assert a.meta["remainder"] <= 1e-7 and b.meta["remainder"] <= 1e-7
    # the rest is interpolation error at each restart
    assert np.max(np.abs(a.values - b.values)) <= 1e-6
    c = wild_solve(phi0, K.kac(), 2.0, target_remainder=1e-7, max_terms=10, step=0.5)
    assert np.max(np.abs(a.values - c.values)) <= c.meta["remainder"] + 1e-6


def test_wild_kac_gaussian_fixed_point():
    g = CfGrid.from_callable(lambda x: np.exp(-0.5 * x**2), 20.0, 512)
    out = wild_solve(g, K.kac(), 1.0, target_remainder=1e-10)
    assert np.max(np.abs(out.values - g.values)) <= 1e-6  # interpolation error at dxi = 5/64


def test_refinement_convergence_cusp_law():
    law = TwoSidedPareto(0.5, 1.0, 1.0)
    kern = K.inelastic_kac(3.0)
    coarse = wild_solve(CfGrid.from_law(law, 20.0, 512), kern, 1.0, target_remainder=1e-6)
    fine = wild_solve(CfGrid.from_law(law, 20.0, 1024), kern, 1.0, target_remainder=1e-6)
    assert np.max(np.abs(coarse.values - fine.values[::2])) <= 5e-3


def test_gaussian_density_inversion():
    g = CfGrid.from_callable(lambda x: np.exp(-0.5 * x**2), 40.0, 4096)
    d = density_from_cf(g)
    ref = np.exp(-0.5 * d.v**2) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(d.f - ref)) <= 1e-6
    assert d.dv == pytest.approx(2 * math.pi / (4096 * g.dxi))


def test_poor_decay_warning():
    g = CfGrid.from_law(Rademacher(1.0), 20.0, 256)
    with pytest.warns(PoorDecay):
        density_from_cf(g)


def test_kac_rademacher_limit_density_is_normal():
    from kinetic_clt.limit import limit_mixture

    mix = limit_mixture(K.kac(), Rademacher(1.0), n_proxy=200, N=1000, seed=1)
    assert np.allclose(mix.m_samples, 1.0, atol=1e-10)
    d = density_from_cf(mix.cf_grid(40.0, 4096))
    assert np.max(np.abs(d.f - np.exp(-0.5 * d.v**2) / math.sqrt(2 * math.pi))) <= 1e-6


def test_lp_distance_examples():
    v = np.linspace(-10, 10, 2001)
    dv = v[1] - v[0]
    f = np.where(np.abs(v) < 1, 0.5, 0.0)
    assert lp_density_distance(Density(v, f), Density(v, f), 1) == 0.0
    g = np.where(np.abs(v - 2) < 1, 0.5, 0.0)
    assert lp_density_distance(f, g, 1, dv=dv) == pytest.approx(2.0, abs=2 * dv)
    assert lp_density_distance(f, g, 2, dv=dv) == pytest.approx(1.0, abs=2 * dv)


def test_cfgrid_csv_roundtrip(tmp_path):
    g = CfGrid.from_law(TwoSidedPareto(0.5, 1.0, 1.0), 10.0, 64)
    g.to_csv(tmp_path / "phi.csv")
    back = CfGrid.from_csv(tmp_path / "phi.csv")
    assert back.same_grid(g) and np.array_equal(back.values, g.values)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 2.0), st.floats(0.05, 0.95), st.floats(-2, 2), st.floats(0.1, 2.0))
def test_gain_preserves_cf_invariants(m1, v1, w, m2, v2):
    law = GaussianMixture([[w, m1, v1], [1 - w, m2, v2]])
    g = CfGrid.from_law(law, 30.0, 256)
    out = gain_apply(g, g, K.kac())
    c = out.check()
    assert c["ok"], c


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.floats(1.0, 50.0))
def test_grid_points_symmetric(k, X):
    m = 2**k
    x = grid_points(X, m)
    assert x[m // 2] == 0.0 and np.allclose(x[1:], -x[1:][::-1])
