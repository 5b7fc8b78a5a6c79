import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from kinetic_clt import kernel as K
from kinetic_clt.errors import AlphaMismatch
from kinetic_clt.initlaw import Gaussian, PointMass, Rademacher, TwoSidedPareto
from kinetic_clt.mckean import WeightArray
from kinetic_clt.metrics import empirical_cf
from kinetic_clt.montecarlo import (Ensemble, centering_terms, default_split, run_ensemble, sample_nu, sample_vt,
                                    sample_vt_star)
from kinetic_clt.rng import RandomStream

WEALTH = K.wealth(0.25, 0.5)


def test_nu_at_time_zero():
    rng = RandomStream(1)
    assert all(sample_nu(0.0, rng) == 1 for _ in range(1000))


def test_nu_mean_at_two():
    rng = RandomStream(2)
    x = np.array([sample_nu(2.0, rng) for _ in range(1_000_000)], dtype=float)
    assert abs(x.mean() - math.e**2) <= 5 * x.std(ddof=1) / math.sqrt(len(x))


def test_nu_one_probability():
    rng = RandomStream(3)
    hit = np.array([sample_nu(1.0, rng) == 1 for _ in range(1_000_000)], dtype=float)
    p = math.exp(-1)
    assert abs(hit.mean() - p) <= 5 * math.sqrt(p * (1 - p) / len(hit))


def test_nu_geometric_pmf():
    rng = RandomStream(4)
    t = 0.7
    x = np.array([sample_nu(t, rng) for _ in range(200_000)])
    q = -math.expm1(-t)
    for n in (1, 2, 3, 5):
        p = math.exp(-t) * q ** (n - 1)
        assert abs(np.mean(x == n) - p) <= 5 * math.sqrt(p * (1 - p) / len(x))


def test_vt_at_time_zero_is_initial_draw():
    for i in range(50):
        assert sample_vt(WEALTH, PointMass(2.5), 0.0, RandomStream(0, i)) == 2.5
        assert abs(sample_vt(K.kac(), Rademacher(1.0), 0.0, RandomStream(0, i))) == 1.0


def test_wealth_mean_at_three():
    e = run_ensemble(WEALTH, PointMass(1.0), 3.0, 100_000, seed=31)
    est, se = e.moment(1)
    assert abs(est - 1) <= 4 * se


def test_maxwell_energy_at_three():
    e = run_ensemble(K.inelastic_maxwell(), Rademacher(1.0), 3.0, 100_000, seed=32)
    est, se = e.moment(2)
    assert abs(est - 1) <= 4 * se


def test_centering_terms_examples():
    assert centering_terms(np.array([0.0]), TwoSidedPareto(1.0, 2.0, 1.0))[0] == 0.0
    beta = np.array([0.1, 0.7, 1.3, 4.0])
    assert np.all(centering_terms(beta, Rademacher(2.0)) == 0)
    assert np.all(centering_terms(beta, Gaussian(0.0, 3.0)) == 0)
    assert np.allclose(centering_terms(WeightArray(beta), PointMass(1.7)), np.sin(beta * 1.7), atol=1e-15)


def _q_reference(beta, law):
    # slow reference: QAWF on each ray of the Pareto density
    a, xm = law.alpha, law.x_min
    dens = lambda x: a * x ** (-a - 1)
    s = integrate.quad(dens, xm, np.inf, weight="sin", wvar=beta, epsabs=1e-13)[0]
    return (law.c_plus - law.c_minus) * s


@pytest.mark.parametrize("beta", [1e-4, 0.01, 0.3, 1.0, 2.5, 17.0])
@pytest.mark.parametrize("law", [TwoSidedPareto(1.0, 2.0, 1.0), TwoSidedPareto(1.0, 1.0, 0.0),
                                 TwoSidedPareto(0.6, 0.5, 1.5)], ids=lambda l: l.name)
def test_centering_terms_pareto_against_quadrature(beta, law):
    assert centering_terms(np.array([beta]), law)[0] == pytest.approx(_q_reference(beta, law), abs=1e-9)


def test_vt_star_requires_alpha_one():
    with pytest.raises(AlphaMismatch):
        sample_vt_star(K.kac(), Rademacher(1.0), 1.0, RandomStream(0))
    with pytest.raises(AlphaMismatch):
        run_ensemble(K.inelastic_maxwell(), Rademacher(1.0), 1.0, 10, centered=True)


def test_vt_star_single_leaf():
    m0 = 1.3
    assert sample_vt_star(WEALTH, PointMass(m0), 0.0, RandomStream(5)) == pytest.approx(m0 - math.sin(m0), abs=1e-15)


def test_vt_star_symmetric_law_equals_vt():
    for i in range(30):
        a = sample_vt(WEALTH, Rademacher(1.0), 2.0, RandomStream(6, i))
        b = sample_vt_star(WEALTH, Rademacher(1.0), 2.0, RandomStream(6, i))
        assert a == b


def test_centered_ensemble_matches_single_draws():
    law = TwoSidedPareto(1.0, 2.0, 1.0)
    e = run_ensemble(WEALTH, law, 1.5, 40, seed=8, centered=True)
    ref = [sample_vt_star(WEALTH, law, 1.5, RandomStream(8, i)) for i in range(40)]
    assert np.allclose(e.values, ref, rtol=1e-12, atol=1e-12)


def test_ensemble_n1_matches_sample_vt():
    e = run_ensemble(WEALTH, TwoSidedPareto(1.0, 2.0, 1.0), 2.0, 1, seed=17)
    assert e.values[0] == sample_vt(WEALTH, TwoSidedPareto(1.0, 2.0, 1.0), 2.0, RandomStream(17, 0))


def test_ensemble_replicates_are_keyed_by_index():
    e = run_ensemble(K.kac(), Rademacher(1.0), 2.0, 5000, seed=19)
    for i in (0, 1, 2047, 2048, 4999):
        assert e.values[i] == sample_vt(K.kac(), Rademacher(1.0), 2.0, RandomStream(19, i))


def test_ensemble_deterministic_and_thread_independent():
    a = run_ensemble(WEALTH, PointMass(1.0), 2.0, 10_000, seed=4)
    b = run_ensemble(WEALTH, PointMass(1.0), 2.0, 10_000, seed=4, threads=1)
    assert np.array_equal(a.values, b.values) and a.meta == b.meta
    c = run_ensemble(K.kac(), Rademacher(1.0), 6.0, 5000, seed=4, pool_size=2000)
    d = run_ensemble(K.kac(), Rademacher(1.0), 6.0, 5000, seed=4, pool_size=2000, threads=1)
    assert np.array_equal(c.values, d.values)


def test_stderr_scaling():
    se = [run_ensemble(WEALTH, PointMass(1.0), 2.0, n, seed=21).stderr() for n in (100_000, 200_000, 400_000)]
    assert se[0] / se[1] == pytest.approx(math.sqrt(2), rel=0.2)
    assert se[0] / se[2] == pytest.approx(2.0, rel=0.2)


def test_time_zero_ensemble_cf():
    law = TwoSidedPareto(0.5, 1.0, 1.0)
    e = run_ensemble(K.kac(), law, 0.0, 200_000, seed=22)
    xi = np.array([0.5, 1.0, 2.0])
    v, se = empirical_cf(e, xi)
    assert np.all(np.abs(v - law.cf(xi)) <= 5 * math.sqrt(2) * se)


def test_pooled_matches_direct_in_law():
    kern, law, t = K.kac(), Rademacher(1.0), 5.0
    a = run_ensemble(kern, law, t, 100_000, seed=23)
    b = run_ensemble(kern, law, t, 100_000, seed=24, pool_size=20_000)
    assert b.meta["pool"]["size"] == 20_000
    xi = np.array([0.5, 1.0, 2.0, 3.0])
    va, sa = empirical_cf(a, xi)
    vb, sb = empirical_cf(b, xi)
    assert np.all(np.abs(va - vb) <= 5 * np.sqrt(sa**2 + sb**2) * math.sqrt(2))
    # energy is conserved exactly by the Kac kernel with a Rademacher law
    assert abs(b.moment(2)[0] - 1) <= 5 * b.moment(2)[1]


def test_pooled_mean_conservation():
    e = run_ensemble(WEALTH, PointMass(1.0), 6.0, 100_000, seed=25, pool_size=20_000)
    est, se = e.moment(1)
    assert abs(est - 1) <= 5 * se


def test_pool_rejects_centering():
    with pytest.raises(ValueError):
        run_ensemble(WEALTH, TwoSidedPareto(1.0, 2.0, 1.0), 2.0, 100, centered=True, pool_size=50)


def test_truncation_flag():
    e = run_ensemble(WEALTH, PointMass(1.0), 3.0, 2000, seed=1, nu_max=5)
    assert e.meta["truncated_tail"] and e.meta["n_truncated"] > 0
    assert not run_ensemble(WEALTH, PointMass(1.0), 1.0, 2000, seed=1).meta["truncated_tail"]


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_ensemble(WEALTH, PointMass(1.0), 1.0, 0)
    with pytest.raises(ValueError):
        run_ensemble(WEALTH, PointMass(1.0), -1.0, 10)


def test_ensemble_csv_roundtrip(tmp_path):
    e = run_ensemble(WEALTH, TwoSidedPareto(1.0, 2.0, 1.0), 1.0, 500, seed=3)
    path = tmp_path / "wealth_1_3.csv"
    e.to_csv(path)
    raw = path.read_bytes()
    assert raw.startswith(b"value\r\n") and raw.count(b"\r\n") == 501
    back = Ensemble.from_csv(path)
    assert np.array_equal(back.values, e.values)
    assert back.meta["seed"] == 3 and back.meta["kernel"] == WEALTH.name


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 10.0), st.integers(1, 10**9), st.integers(1, 10**6))
def test_default_split_in_range(t, N, P):
    s = default_split(t, N, P)
    assert 0 <= s <= t


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**40), st.floats(0.0, 3.0))
def test_kac_rademacher_energy_exact_per_draw(seed, t):
    # sum of beta^2 is 1 for every Kac tree, but V_t itself is not bounded; check |V_t| <= sum beta <= sqrt(nu)
    v = sample_vt(K.kac(), Rademacher(1.0), t, RandomStream(seed))
    n = sample_nu(t, RandomStream(seed))
    assert abs(v) <= math.sqrt(n) + 1e-9
