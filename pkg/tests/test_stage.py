import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from datamarket import (LOG1P, InvalidParams, MarketParams, NoiseProfile, SearchLimitExceeded,
                        SolverSettings, UtilityShape, check_privacy_assumption, equilibrium_prices,
                        play, region_of, stage_utilities, user_best_response, welfare)
from datamarket.stage import lattice_max_rows, pair_assumption_thresholds, user_utility_table

from oracles import exact_info


def test_single_platform_price():
    p = MarketParams(2.0, 0.5, (1.0,), (0.4,))
    assert equilibrium_prices(p, NoiseProfile((0.0,)), (1,), (1,)) == pytest.approx((0.25,))


def test_pair_prices_match_marginal_values():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0))
    prices = equilibrium_prices(p, NoiseProfile((1.0, 1.0)), (1, 1), (1, 1))
    marginal = float(exact_info([1, 1], [1, 1], [0, 1]) - exact_info([1, 1], [1, 1], [1]))
    assert prices == pytest.approx((3 * marginal, 3 * marginal), abs=1e-14)
    assert prices == pytest.approx((0.5, 0.5), abs=1e-14)


def test_no_sale_means_zero_price():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0))
    assert equilibrium_prices(p, NoiseProfile((1.0, 1.0)), (1, 0), (1, 1)) == (pytest.approx(1.0), 0.0)
    assert equilibrium_prices(p, NoiseProfile((1.0, 1.0)), (1, 1), (0, 1))[0] == 0.0


def test_boundary_utilities():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0))
    out = play(p, NoiseProfile((1.0, 1.0)), (1, 1), (1, 1))
    assert out.u_user == pytest.approx(0.0, abs=1e-15)
    assert out.info_to_buyer == pytest.approx(0.5, abs=1e-15)
    assert out.u_platforms == pytest.approx((0.4, 0.0), abs=1e-14)
    assert out.u_buyer == pytest.approx(0.5, abs=1e-14)


def test_empty_market():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0))
    out = play(p, NoiseProfile((1.0, 1.0)), (0, 0), (1, 1))
    assert (out.u_user, out.u_platforms, out.u_buyer) == (0.0, (0.0, 0.0), 0.0)
    assert welfare(out) == 0.0


def test_single_platform_boundary_payoff():
    p = MarketParams(2.0, 1.0, (1.0,), (0.4,))
    out = play(p, NoiseProfile((math.sqrt(2),)), (1,), (1,))
    assert out.u_platforms[0] == pytest.approx(0.35, abs=1e-14)
    assert out.u_user == pytest.approx(0.0, abs=1e-15)
    assert out.u_buyer == pytest.approx(0.0, abs=1e-15)


def test_stage_utilities_normalizes_inputs():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0))
    noise = NoiseProfile((1.0, 1.0))
    out = stage_utilities(p, noise, (1, 0), (1, 1), (0.5, 0.5), (1, 1))
    assert out.sharing == (1, 0) and out.buyer == (1, 0)
    assert out.u_platforms[1] == 0.0
    with pytest.raises(InvalidParams):
        stage_utilities(p, noise, (1, 2), (1, 1), (0, 0), (1, 1))


def test_best_response_prefers_more_sharing_on_ties():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0))
    assert user_best_response(p, NoiseProfile((1.0, 1.0)), (1, 1)) == (1, 1)


def test_best_response_with_no_privacy_cost():
    p = MarketParams(2.0, 3.0, (0.5, 0.9, 0.3), (0.6, 1.0, 0.2))
    assert user_best_response(p, NoiseProfile.silent(3), (1, 0, 1)) == (1, 0, 1)


def test_best_response_at_zero_noise_shares_nothing():
    p = MarketParams(3.0, 1.0, (0.8, 0.7), (0.6, 1.0))
    zero = NoiseProfile((0.0, 0.0))
    assert 1 - 3 * float(exact_info([0.8, 0.7], [0, 0], [0, 1])) < 0
    assert region_of(p, zero, (1, 1)) == (0, 0)


def test_region_flips_across_single_platform_boundary():
    # at sigma_1^2 = 10 the user shares with both for large sigma_2 and drops
    # platform 2 once its noise falls below the indifference point
    p = MarketParams(2.5, 1.0, (0.8, 0.7), (0.6, 1.0))
    s1 = math.sqrt(10.0)
    lo, hi = 0.0, 10.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if region_of(p, NoiseProfile((s1, math.sqrt(mid))), (1, 1)) == (1, 1):
            hi = mid
        else:
            lo = mid
    assert region_of(p, NoiseProfile((s1, math.sqrt(hi + 1e-6))), (1, 1)) == (1, 1)
    assert region_of(p, NoiseProfile((s1, math.sqrt(max(lo - 1e-6, 0.0)))), (1, 1)) == (1, 0)


def test_search_limit():
    p = MarketParams(2.0, 1.0, (0.5,) * 4, (0.1,) * 4)
    with pytest.raises(SearchLimitExceeded):
        user_best_response(p, NoiseProfile.silent(4), (1, 1, 1, 1), SolverSettings(search_limit=3))
    assert user_best_response(p, NoiseProfile.silent(4), (1, 1, 1, 0), SolverSettings(search_limit=3)) == (1, 1, 1, 0)


def test_privacy_assumption_pair():
    for alpha, holds in ((3.0, True), (2.0, False)):
        check = check_privacy_assumption(MarketParams(alpha, 1.0, (0.8, 0.7), (0.6, 1.0)))
        assert bool(check) is holds
        assert check.closed_form_threshold == pytest.approx((4 - 0.3136) / (2 * (0.64 + 0.49 - 0.3136)))
        assert check.closed_form_threshold == pytest.approx(3.6864 / 1.6328, abs=1e-12)
        assert check.closed_form_agrees
    failing = check_privacy_assumption(MarketParams(2.0, 1.0, (0.8, 0.7), (0.6, 1.0)))
    assert failing.violating_entry is not None
    assert check_privacy_assumption(MarketParams(1.6, 1.0, (1.0, 1.0), (0.6, 1.0)))
    assert check_privacy_assumption(MarketParams(1e6, 1.0, (0.3, 0.2, 0.9), (0.6, 1.0, 0.1)))


def test_pair_threshold_includes_single_platform_sharing():
    both, full = pair_assumption_thresholds(0.9, 0.3)
    assert both == pytest.approx(3.9271 / 1.6542, abs=1e-12)
    assert full == pytest.approx(1 / 0.09, abs=1e-12)
    # between the two thresholds the weak platform alone is still worth sharing with
    between = check_privacy_assumption(MarketParams(5.0, 1.0, (0.9, 0.3), (0.6, 1.0)))
    assert not between
    assert between.violating_entry == (0, 1)
    assert between.closed_form_agrees
    assert check_privacy_assumption(MarketParams(12.0, 1.0, (0.9, 0.3), (0.6, 1.0)))


def test_welfare_counts_payments_once():
    p = MarketParams(4.0, 6.0, (1.0, 1.0, 1.0), (0.3, 0.75, 1.0))
    noise = NoiseProfile((2.0, 2.0, 2.0))
    out = play(p, noise, (1, 1, 1), (1, 1, 1))
    assert out.welfare == pytest.approx(3 * (0.5 + 6 / 8) - 2.05, abs=1e-12)
    assert out.welfare == pytest.approx(1.70, abs=1e-12)


def test_identity_shape_is_bit_identical():
    base = MarketParams(2.0, 3.0, (0.9, 0.6), (0.6, 1.0))
    explicit = base.with_(h_user=UtilityShape("identity"), h_buyer=UtilityShape("identity"))
    noise = NoiseProfile((0.7, 1.3))
    assert play(base, noise, (1, 1), (1, 1)) == play(explicit, noise, (1, 1), (1, 1))


def test_log_shape_changes_prices():
    p = MarketParams(2.0, 3.0, (1.0, 1.0), (0.6, 1.0), LOG1P, LOG1P)
    prices = equilibrium_prices(p, NoiseProfile((1.0, 1.0)), (1, 1), (1, 1))
    expected = 3 * (math.log1p(0.5) - math.log1p(1 / 3)) / math.log(2)
    assert prices == pytest.approx((expected, expected), abs=1e-14)


def test_lattice_max_prefers_join_of_ties():
    u = np.array([[0.0, -1.0, -1.0, 0.0], [0.0, 0.2, 0.2, 0.0]])
    # the second row is not supermodular, so the join is not optimal and the
    # first of the largest tied subsets is kept
    assert lattice_max_rows(u, 1e-9).tolist() == [3, 1]


def test_shape_validation():
    with pytest.raises(InvalidParams):
        UtilityShape("table", (0.0, 0.5, 1.0), (0.0, 0.2, 1.0))  # convex
    with pytest.raises(InvalidParams):
        UtilityShape("table", (0.0, 1.0), (0.1, 1.0))
    with pytest.raises(InvalidParams):
        UtilityShape("cubic")
    shape = UtilityShape("table", (0.0, 0.5, 1.0), (0.0, 0.7, 1.0))
    assert UtilityShape.from_dict(shape.to_dict()) == shape
    assert shape.inverse(shape(0.3)) == pytest.approx(0.3)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_buyer_accepts_every_offer(K, seed):
    rng = np.random.default_rng(seed)
    shape = LOG1P if seed % 2 else UtilityShape()
    p = MarketParams(2.0, float(rng.uniform(0, 10)), tuple(rng.uniform(0, 1, K)),
                     (0.5,) * K, shape, shape)
    noise = NoiseProfile(tuple(rng.uniform(0, 3, K)))
    a = tuple(int(v) for v in rng.integers(0, 2, K))
    prices = equilibrium_prices(p, noise, (1,) * K, a)
    best = stage_utilities(p, noise, (1,) * K, a, prices, a).u_buyer
    for b in itertools.product((0, 1), repeat=K):
        assert stage_utilities(p, noise, (1,) * K, a, prices, b).u_buyer <= best + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_argmax_set_is_a_lattice(K, seed):
    rng = np.random.default_rng(seed)
    g = tuple(rng.uniform(0.1, 1, K))
    noise = NoiseProfile(tuple(rng.uniform(0, 3, K)))
    p = MarketParams(1.0, 1.0, g, (0.5,) * K)
    full = user_utility_table(p, noise, range(K))
    # choose alpha so that sharing everything ties with sharing nothing
    info_all = (0.5 * K - full[-1]) / 1.0
    p = p.with_(alpha=0.5 * K / info_all)
    u = user_utility_table(p, noise, range(K))
    tied = np.flatnonzero(u >= u.max() - 1e-9)
    for x in tied:
        for y in tied:
            assert u[x | y] >= u.max() - 2e-9
            assert u[x & y] >= u.max() - 2e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_labels_follow_platform_permutations(K, seed):
    rng = np.random.default_rng(seed)
    p = MarketParams(float(rng.uniform(0.5, 4)), 1.0, tuple(rng.uniform(0, 1, K)), (0.5,) * K)
    noise = NoiseProfile(tuple(rng.uniform(0, 3, K)))
    e = tuple(int(v) for v in rng.integers(0, 2, K))
    perm = rng.permutation(K)
    pp = p.with_(gamma=tuple(p.gamma[k] for k in perm), cost=tuple(p.cost[k] for k in perm))
    label = user_best_response(p, noise, e)
    plabel = user_best_response(pp, NoiseProfile(tuple(noise.sigma[k] for k in perm)), tuple(e[k] for k in perm))
    assert plabel == tuple(label[k] for k in perm)
