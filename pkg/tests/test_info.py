import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from datamarket import (InvalidParams, MarketParams, NoiseProfile, SubstitutesViolated,
                        gammas_from_vectors, info_from_ratios, info_table, marginal_info,
                        revealed_info, revealed_info_pair, revealed_info_symmetric)
from datamarket.info import info_ratio, platform_service_info, sigma_from_ratio

from oracles import exact_info


def market(gamma):
    return MarketParams(2.0, 1.0, tuple(gamma), (0.0,) * len(gamma))


def test_single_platform_value():
    p = market([0.8])
    assert revealed_info(p, NoiseProfile((0.0,)), [0]) == pytest.approx(0.32, abs=1e-15)
    assert float(exact_info([0.8], [0.0], [0])) == pytest.approx(0.32, abs=1e-15)


def test_empty_set_reveals_nothing():
    p = market([0.3, 0.9])
    assert revealed_info(p, NoiseProfile((0.5, 1.0)), []) == 0.0


def test_two_platform_value_matches_exact_oracle():
    p = market([0.8, 0.7])
    direct = revealed_info(p, NoiseProfile((0.0, 0.0)), [0, 1])
    exact = exact_info([0.8, 0.7], [0.0, 0.0], [0, 1])
    assert exact == pytest.approx(1.6328 / 3.6864, abs=1e-15)
    assert direct == pytest.approx(float(exact), abs=1e-14)
    assert direct == pytest.approx(0.4429253472222222, abs=1e-12)


def test_pair_closed_form():
    assert revealed_info_pair(1, 1, 1, 1) == pytest.approx(0.5, abs=1e-15)
    assert revealed_info_pair(0.8, 0.7, 0, 0) == pytest.approx(0.4429253472222222, abs=1e-12)
    assert revealed_info_pair(0.6, 0.9, 1.5, math.inf) == pytest.approx(0.36 / 4.25, abs=1e-15)
    assert revealed_info_pair(0.6, 0.9, math.inf, math.inf) == 0.0
    with pytest.raises(InvalidParams):
        revealed_info_pair(1.2, 0.5, 0, 0)
    with pytest.raises(InvalidParams):
        revealed_info_pair(0.5, 0.5, -1, 0)


def test_symmetric_closed_form():
    assert revealed_info_symmetric(3, 0.2) == pytest.approx(0.6 / 1.4, abs=1e-15)
    assert revealed_info_symmetric(1, 0.3) == pytest.approx(0.3)
    assert revealed_info_symmetric(3, 1 / 6, 1 / 6) == pytest.approx(0.375, abs=1e-15)
    assert revealed_info_symmetric(3, 1 / 6) == pytest.approx(0.375, abs=1e-15)
    with pytest.raises(InvalidParams):
        revealed_info_symmetric(3, 1.5)


def test_symmetric_closed_form_with_deviant_matches_exact_oracle():
    # gamma = 1 and ratio 1/3 needs sigma^2 = 1; ratio 0.1 needs sigma^2 = 8
    pair = exact_info([1, 1], [1, 8], [0, 1])
    assert pair == Fraction(11, 29)
    assert revealed_info_symmetric(2, 1 / 3, 0.1) == pytest.approx(11 / 29, abs=1e-15)
    triple = exact_info([1, 1, 1], [1, 1, 8], [0, 1, 2])
    assert triple == Fraction(10, 19)
    assert revealed_info_symmetric(3, 1 / 3, 0.1) == pytest.approx(10 / 19, abs=1e-15)


def test_marginal_info_examples():
    p = market([1.0, 1.0])
    assert marginal_info(p, NoiseProfile((1.0, 1.0)), [1], 0) == pytest.approx(1 / 6, abs=1e-14)
    assert marginal_info(p, NoiseProfile((math.inf, 1.0)), [], 0) == 0.0
    q = market([0.8, 0.7])
    assert marginal_info(q, NoiseProfile((0.0, 0.0)), [1], 0) == pytest.approx(0.1979253472222222, abs=1e-12)
    with pytest.raises(IndexError):
        marginal_info(p, NoiseProfile((1.0, 1.0)), [0], 0)
    with pytest.raises(IndexError):
        marginal_info(p, NoiseProfile((1.0, 1.0)), [], 5)


def test_service_info_constant():
    assert platform_service_info() == 0.5
    assert 3 * platform_service_info() == 1.5


def test_zero_correlation_platform_adds_nothing():
    p = market([0.0, 0.9])
    noise = NoiseProfile((0.0, 0.3))
    assert marginal_info(p, noise, [1], 0) == pytest.approx(0.0, abs=1e-15)


def test_noise_profile_length_checked():
    with pytest.raises(InvalidParams):
        revealed_info(market([0.5, 0.5]), NoiseProfile((0.0,)), [0])


def test_ratio_round_trip():
    s = sigma_from_ratio(0.9, 0.1)
    assert info_ratio(0.9, s) == pytest.approx(0.1, abs=1e-15)
    assert sigma_from_ratio(0.9, 0.0) == math.inf


def test_gammas_from_vectors():
    y = np.array([1.0, 0.0, 0.0])
    assert gammas_from_vectors([y], y)[0] == pytest.approx(1.0)
    x = [[0, 1, 0], [0, 0, 1]]
    assert np.allclose(gammas_from_vectors(x, y), [0.0, 0.0])


def test_complement_vectors_rejected():
    y = np.array([1.0, 0.0])
    x1 = np.array([0.0, 1.0])
    g2 = 0.5
    x2 = g2 * y + (1 - g2) * x1
    with pytest.raises(SubstitutesViolated) as err:
        gammas_from_vectors([x1, x2], y)
    assert err.value.pair == (0, 1)
    assert err.value.inner_product == pytest.approx(1 - g2)


def test_non_unit_vectors_rejected():
    with pytest.raises(InvalidParams):
        gammas_from_vectors([[2.0, 0.0]], [1.0, 0.0])


def test_info_table_matches_single_solves():
    rng = np.random.default_rng(3)
    g = rng.uniform(0, 1, 4)
    s = rng.uniform(0, 2, 4)
    s[2] = math.inf
    p = market(g)
    table = info_table(g, s, range(4))
    for mask in range(16):
        members = [j for j in range(4) if mask >> j & 1]
        assert table[mask] == pytest.approx(revealed_info(p, NoiseProfile(tuple(s)), members), abs=1e-14)


def test_info_table_batches_rows():
    g = np.array([0.9, 0.4, 0.7])
    rows = np.array([[0.0, 1.0, 2.0], [3.0, math.inf, 0.5]])
    batched = info_table(g, rows, [0, 2])
    for r in range(2):
        assert np.allclose(batched[r], info_table(g, rows[r], [0, 2]), atol=1e-15)


unit = st.floats(0.0, 1.0)
noise = st.one_of(st.floats(0.0, 5.0), st.just(math.inf))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(unit, noise), min_size=1, max_size=6))
def test_general_solver_matches_rank_one_shortcut(pairs):
    g = np.array([p[0] for p in pairs])
    s = np.array([p[1] for p in pairs])
    direct = info_table(g, s, range(len(g)))[-1]
    shortcut = info_from_ratios(info_ratio(a, b) for a, b in pairs)
    assert direct == pytest.approx(shortcut, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(unit, noise), min_size=2, max_size=6))
def test_bounded_and_subadditive(pairs):
    g = np.array([p[0] for p in pairs])
    s = np.array([p[1] for p in pairs])
    table = info_table(g, s, range(len(g)))
    assert table.min() >= -1e-12 and table.max() <= 1.0 + 1e-12
    singles = sum(table[1 << j] for j in range(len(g)))
    assert table[-1] <= singles + 1e-9


def test_info_can_exceed_largest_squared_correlation():
    # many moderately informative signals together beat the best single correlation
    g = np.full(16, 0.5)
    total = info_table(g, np.zeros(16), range(16))[-1]
    assert total > 0.25
    assert total == pytest.approx(info_from_ratios([0.125] * 16), abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(unit, st.floats(0.0, 4.0)), min_size=2, max_size=5),
       st.data())
def test_marginal_falls_with_own_noise_and_rises_with_rival_noise(pairs, data):
    g = np.array([p[0] for p in pairs])
    s = np.array([p[1] for p in pairs])
    K = len(g)
    i = data.draw(st.integers(0, K - 1))
    j = data.draw(st.integers(0, K - 1).filter(lambda v: v != i))
    bump = data.draw(st.floats(0.01, 3.0))
    others = [k for k in range(K) if k != i]

    def marg(sig):
        t = info_table(g, sig, range(K))
        base = sum(1 << k for k in others)
        return t[base | (1 << i)] - t[base]

    own, rival = s.copy(), s.copy()
    own[i] += bump
    rival[j] += bump
    assert marg(own) <= marg(s) + 1e-9
    assert marg(rival) >= marg(s) - 1e-9
