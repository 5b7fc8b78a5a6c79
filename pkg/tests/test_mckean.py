import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinetic_clt import kernel as K
from kinetic_clt.errors import InvalidS
from kinetic_clt.mckean import (WeightArray, beta_max, expected_m, expected_m_time, grow_weights, m_stat,
                                sample_m_stats, sample_m_time)
from kinetic_clt.rng import RandomStream

WEALTH = K.wealth(0.25, 0.5)
PRESETS = [K.kac(), K.inelastic_kac(3.0), K.inelastic_maxwell(), WEALTH]


def test_grow_one_leaf():
    assert list(grow_weights(WEALTH, 1, RandomStream(0)).beta) == [1.0]


def test_grow_two_leaves_is_first_pair():
    for kern in (WEALTH, K.kac()):
        for i in range(20):
            w = grow_weights(kern, 2, RandomStream(4, i))
            rng = RandomStream(4, i)
            rng.random()  # the leaf index draw, a no-op choice when there is one leaf
            assert tuple(w.beta) == K.sample_lr(kern, rng)


def test_kac_conservation_fifty_leaves():
    w = grow_weights(K.kac(), 50, RandomStream(2))
    assert abs(np.sum(w.beta**2) - 1) <= 5e-11


@pytest.mark.parametrize("kern", PRESETS, ids=lambda k: k.name)
def test_count_order_and_determinism(kern):
    a = grow_weights(kern, 37, RandomStream(8, 5))
    b = grow_weights(kern, 37, RandomStream(8, 5))
    assert a.n == 37 and np.array_equal(a.beta, b.beta)
    assert np.all(a.beta >= 0)


def test_ordered_growth_splices_in_place():
    # the leftmost leaf is a product of left factors only, the rightmost of right factors only
    kern = K.CollisionKernel.discrete([[0.5, 0.25, 1.0]])
    w = grow_weights(kern, 6, RandomStream(1))
    logs = np.log(w.beta)
    first, last = logs[0] / math.log(0.5), logs[-1] / math.log(0.25)
    assert first == pytest.approx(round(first)) and last == pytest.approx(round(last))
    assert first >= 1 and last >= 1


@pytest.mark.parametrize("kern", [K.kac(), K.inelastic_kac(1.0), K.inelastic_kac(3.0)], ids=lambda k: k.name)
def test_conservation_every_array(kern):
    a = kern.alpha
    for i in range(20):
        w = grow_weights(kern, 200, RandomStream(3, i))
        assert abs(m_stat(w, a) - 1) <= 200 * 1e-12


def test_m_stat_examples():
    assert m_stat(WeightArray(np.array([1.0])), 2.7) == 1.0
    assert m_stat(WeightArray(np.array([0.3, 0.6])), 1.5) == pytest.approx(0.3**1.5 + 0.6**1.5)
    assert m_stat(WeightArray(np.array([0.0, 0.5])), 0.0) == 1.0


def test_beta_max_examples():
    assert beta_max(WeightArray(np.array([1.0]))) == 1.0
    assert beta_max(WeightArray(np.array([0.3, 0.6]))) == 0.6


def test_wealth_martingale_mean_at_ten():
    vals = np.array([m_stat(grow_weights(WEALTH, 10, RandomStream(6, i)), 1.0) for i in range(100_000)])
    assert abs(vals.mean() - 1) <= 4 * vals.std(ddof=1) / math.sqrt(len(vals))


def test_expected_m_examples():
    for kern in PRESETS:
        for s in (1.0, 2.0, 3.0):
            assert expected_m(kern, s, 2) == pytest.approx(K.s_moment(kern, s) + 1, abs=1e-14)
    assert expected_m(WEALTH, 1.0, 50) == pytest.approx(1.0, abs=1e-14)
    assert expected_m(WEALTH, 2.0, 5) == pytest.approx((7 / 8) * (15 / 16) * (23 / 24) * (31 / 32), abs=1e-15)
    assert expected_m(WEALTH, 2.0, 5) == pytest.approx(0.761566, abs=1e-6)


@pytest.mark.parametrize("n", [2, 7, 100, 5000])
@pytest.mark.parametrize("s", [0.5, 2.0, 3.0, 6.0])
def test_expected_m_against_gamma_ratio(n, s):
    S = K.s_moment(K.inelastic_maxwell(), s)
    ref = mpmath.gamma(n + S) / (mpmath.gamma(n) * mpmath.gamma(S + 1))
    assert expected_m(K.inelastic_maxwell(), s, n) == pytest.approx(float(ref), rel=1e-11)


def test_expected_m_invalid_s():
    kern = K.CollisionKernel.discrete([[0.0, 0.0, 1.0]])
    with pytest.raises(InvalidS):
        expected_m(kern, 1.0, 3)


def test_expected_m_time_examples():
    assert expected_m_time(WEALTH, 2.0, 0.0) == 1.0
    assert expected_m_time(WEALTH, 1.0, 7.0) == pytest.approx(1.0, abs=1e-12)
    assert expected_m_time(WEALTH, 2.0, 2.0) == pytest.approx(math.exp(-0.25), abs=1e-12)
    assert expected_m_time(WEALTH, 2.0, 2.0) == pytest.approx(0.778801, abs=1e-6)


def test_beta_max_median_decreases():
    meds = []
    for n in (10, 100, 1000):
        _, bmax = sample_m_stats(WEALTH, [1.0], n, 10_000, seed=12)
        meds.append(np.median(bmax))
    assert meds[0] > meds[1] > meds[2]


@pytest.mark.parametrize("kern", [K.inelastic_maxwell(), WEALTH, K.inelastic_kac(3.0)], ids=lambda k: k.name)
def test_unbiasedness(kern):
    for n in (2, 5, 10, 20):
        svals = [s for s in (1.0, 2.0, 3.0) if K.s_moment(kern, s) > -1]
        m, _ = sample_m_stats(kern, svals, n, 100_000, seed=100 + n)
        for j, s in enumerate(svals):
            se = m[:, j].std(ddof=1) / math.sqrt(len(m))
            assert abs(m[:, j].mean() - expected_m(kern, s, n)) <= 4 * se + 1e-12


def test_unordered_statistics_match_ordered_growth():
    # both samplers draw from the same law of the multiset of weights
    a = np.array([m_stat(grow_weights(WEALTH, 12, RandomStream(1, i)), 2.0) for i in range(50_000)])
    b, _ = sample_m_stats(WEALTH, [2.0], 12, 50_000, seed=2)
    se = math.sqrt(a.var(ddof=1) / len(a) + b[:, 0].var(ddof=1) / len(b))
    assert abs(a.mean() - b[:, 0].mean()) <= 4 * se


def test_sample_m_time_exponential_law():
    m, _, ntr = sample_m_time(WEALTH, [2.0], 1.5, 100_000, seed=3)
    se = m[:, 0].std(ddof=1) / math.sqrt(len(m))
    assert ntr == 0
    assert abs(m[:, 0].mean() - math.exp(-1.5 / 8)) <= 4 * se


def test_sample_m_stats_reproducible():
    a, ba = sample_m_stats(WEALTH, [1.0, 2.0], 30, 1000, seed=9)
    b, bb = sample_m_stats(WEALTH, [1.0, 2.0], 30, 1000, seed=9)
    assert np.array_equal(a, b) and np.array_equal(ba, bb)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**32), st.floats(0.0, 3.0))
def test_trig_conservation_property(n, seed, p):
    kern = K.inelastic_kac(p)
    w = grow_weights(kern, n, RandomStream(seed))
    assert w.n == n
    assert abs(m_stat(w, 2 / (1 + p)) - 1) <= max(n, 1) * 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 400), st.floats(-0.99, 2.0))
def test_expected_m_product_positive(n, S):
    # the running product stays positive whenever S > -1
    prod = 1.0
    for i in range(1, n):
        prod *= 1 + S / i
    assert prod > 0
