"""Seeded randomized checks of the structural properties the solver relies on."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import Status, candidate_profile, candidate_ratio, solve, symmetric_alpha_threshold
from .equilibrium import alpha_bar
from .info import info_from_ratios, info_ratio, info_table, revealed_info_pair, revealed_info_symmetric, sigma_from_ratio
from .params import IDENTITY, LOG1P, MarketParams, NoiseProfile, UtilityShape
from .stage import check_privacy_assumption, lattice_max_rows, play, user_best_response

TOL = 1e-9
EXACT_TOL = 1e-12
MAX_K = 6

CHECKS = (
    "monotone_in_set",
    "monotone_in_noise",
    "submodular_in_actions",
    "submodular_in_noise",
    "shape_composition",
    "closed_form_agreement",
    "buyer_rationality",
    "lattice_closure",
    "payment_identity",
    "permutation_invariance",
    "border_identity",
    "zero_user_utility",
)


@dataclass
class Counterexample:
    check: str
    trial: int
    K: int
    size: int
    detail: dict

    def key(self):
        return (self.K, self.size, self.trial)


@dataclass
class PropertyReport:
    seed: int
    trials: int
    checked: dict = field(default_factory=lambda: {c: 0 for c in CHECKS})
    failures: dict = field(default_factory=lambda: {c: [] for c in CHECKS})

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())

    def minimal(self, check: str) -> Counterexample | None:
        found = self.failures[check]
        return min(found, key=Counterexample.key) if found else None

    def lines(self) -> list:
        out = []
        for c in CHECKS:
            n, bad = self.checked[c], len(self.failures[c])
            out.append(f"{'PASS' if bad == 0 else 'FAIL'} {c}: {n} checked, {bad} failed")
            if bad:
                out.append(f"  minimal counterexample: {self.minimal(c).detail}")
        return out

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "passed": self.passed,
            "checks": {c: {"checked": self.checked[c], "failed": len(self.failures[c]),
                           "counterexample": None if not self.failures[c] else self.minimal(c).detail}
                       for c in CHECKS},
        }


def _random_shape(rng) -> UtilityShape:
    pick = rng.integers(3)
    if pick == 0:
        return IDENTITY
    if pick == 1:
        return LOG1P
    k = int(rng.integers(2, 6))
    xs = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, k - 1)), [1.0]])
    slopes = np.sort(rng.uniform(0.2, 2.0, k))[::-1]
    ys = np.concatenate([[0.0], np.cumsum(slopes * np.diff(xs))])
    ys /= ys[-1]
    return UtilityShape("table", tuple(xs), tuple(ys))


def _random_sigma(rng, K) -> np.ndarray:
    s = rng.uniform(0.0, 3.0, K)
    s[rng.random(K) < 0.15] = 0.0
    s[rng.random(K) < 0.05] = math.inf
    return s


def _random_gamma(rng, K) -> np.ndarray:
    g = rng.uniform(0.05, 1.0, K)
    g[rng.random(K) < 0.1] = 1.0
    return g


def _bits(mask):
    return [j for j in range(mask.bit_length()) if mask >> j & 1]


class _Trial:
    def __init__(self, report, trial, K, gamma, sigma, sabotage):
        self.report, self.trial, self.K = report, trial, K
        self.gamma, self.sigma, self.sabotage = gamma, sigma, sabotage
        self.base = {"gamma": gamma.tolist(), "sigma": sigma.tolist()}

    def record(self, check, ok, size=0, **detail):
        self.report.checked[check] += 1
        if not ok:
            self.report.failures[check].append(
                Counterexample(check, self.trial, self.K, size, {**self.base, **detail}))


def _check_set_and_noise(t: _Trial, rng, shape):
    K, g, s = t.K, t.gamma, t.sigma
    i = int(rng.integers(K))
    j = int(rng.integers(K))
    bump_i, bump_j = s.copy(), s.copy()
    bump_i[i] = s[i] + rng.uniform(0.01, 2.0) if rng.random() < 0.9 else math.inf
    bump_j[j] = s[j] + rng.uniform(0.01, 2.0)
    tables = info_table(g, np.vstack([s, bump_i, bump_j]), range(K))
    table = tables[0]
    full = (1 << K) - 1
    masks = np.arange(1 << K)

    worst = None
    for k in range(K):
        lo = masks[(masks >> k & 1) == 0]
        gap = table[lo | (1 << k)] - table[lo]
        r = int(np.argmin(gap))
        if worst is None or gap[r] < worst[0]:
            worst = (gap[r], int(lo[r]), k)
    t.record("monotone_in_set", worst[0] >= -TOL, bin(worst[1]).count("1"),
             subset=_bits(worst[1]), added=worst[2], change=float(worst[0]))

    drop = tables[1] - table
    r = int(np.argmax(drop))
    t.record("monotone_in_noise", drop[r] <= TOL, bin(r).count("1"),
             subset=_bits(r), platform=i, raised_to=float(bump_i[i]), change=float(drop[r]))

    for name, H in (("submodular_in_actions", IDENTITY), ("shape_composition", shape)) if K > 1 else ():
        v = np.asarray(H(table), dtype=float)
        worst = None
        for k in range(K):
            for m in range(K):
                if m == k:
                    continue
                lo = masks[((masks >> k & 1) == 0) & ((masks >> m & 1) == 0)]
                small = v[lo | (1 << k)] - v[lo]
                large = v[lo | (1 << k) | (1 << m)] - v[lo | (1 << m)]
                gap = (large - small) if t.sabotage and name == "submodular_in_actions" else (small - large)
                r = int(np.argmin(gap))
                if worst is None or gap[r] < worst[0]:
                    worst = (gap[r], int(lo[r]), k, m)
        gap, lo, k, m = worst
        t.record(name, gap >= -TOL, bin(lo).count("1"), subset=_bits(lo), platform=k,
                 extra=m, shape=H.to_dict(), violation=float(-gap))

    # marginal of i falls with its own noise and rises with a rival's noise
    lo = masks[(masks >> i & 1) == 0]
    own = (tables[1][lo | (1 << i)] - tables[1][lo]) - (table[lo | (1 << i)] - table[lo])
    r = int(np.argmax(own))
    ok = own[r] <= TOL
    if K > 1 and j != i:
        lo_j = masks[((masks >> i & 1) == 0) & ((masks >> j & 1) == 1)]
        rival = (tables[2][lo_j | (1 << i)] - tables[2][lo_j]) - (table[lo_j | (1 << i)] - table[lo_j])
        ok = ok and rival.min() >= -TOL
    t.record("submodular_in_noise", ok, bin(int(lo[r])).count("1"), platform=i, rival=j,
             own_change=float(own[r]))
    return table, full


def _check_closed_forms(t: _Trial, rng, table):
    K, g, s = t.K, t.gamma, t.sigma
    errs = {}
    if K >= 2:
        a, b = sorted(rng.choice(K, 2, replace=False).tolist())
        errs["pair"] = abs(revealed_info_pair(g[a], g[b], s[a], s[b]) - table[(1 << a) | (1 << b)])
    ratios = [info_ratio(gi, si) for gi, si in zip(g, s)]
    errs["ratios"] = abs(info_from_ratios(ratios) - table[-1])
    # symmetric profile with one deviant platform
    t_max = min(gi * gi for gi in g) / 2.0
    ts = rng.uniform(0.01, 1.0) * t_max
    sym = np.array([sigma_from_ratio(gi, ts) for gi in g])
    dev = int(rng.integers(K))
    sym[dev] = sigma_from_ratio(g[dev], rng.uniform(0.01, 1.0) * g[dev] ** 2 / 2.0)
    actual = [info_ratio(gi, si) for gi, si in zip(g, sym)]
    base = actual[(dev + 1) % K] if K > 1 else actual[0]
    direct = info_table(g, sym, range(K))[-1]
    errs["symmetric"] = abs(revealed_info_symmetric(K, base, actual[dev]) - direct)
    worst = max(errs, key=errs.get)
    t.record("closed_form_agreement", errs[worst] <= EXACT_TOL, K, form=worst, error=float(errs[worst]),
             symmetric_sigma=sym.tolist())


def _check_buyer(t: _Trial, rng, table, shape):
    K = t.K
    beta = rng.uniform(0.0, 10.0)
    A = int(rng.integers(1, 1 << K))
    v = beta * np.asarray(shape(table), dtype=float)
    members = _bits(A)
    prices = {i: v[A] - v[A & ~(1 << i)] for i in members}
    accept_all = v[A] - sum(prices.values())
    best, best_b = -math.inf, 0
    sub = A
    while True:
        u = v[sub] - sum(prices[i] for i in _bits(sub))
        if u > best:
            best, best_b = u, sub
        if sub == 0:
            break
        sub = (sub - 1) & A
    t.record("buyer_rationality", best <= accept_all + TOL, len(members), offered=members,
             better=_bits(best_b), beta=beta, gain=float(best - accept_all), shape=shape.to_dict())


def _check_lattice(t: _Trial, rng, table, shape):
    K = t.K
    counts = np.array([bin(m).count("1") for m in range(1 << K)])
    Hu = np.asarray(shape(table), dtype=float)
    if rng.random() < 0.5 and Hu[-1] > 0:
        alpha = 0.5 * K / Hu[-1]
    else:
        alpha = rng.uniform(0.2, 8.0)
    u = 0.5 * counts - alpha * Hu
    best = u.max()
    tied = np.flatnonzero(u >= best - TOL)
    ok, pair = True, None
    for x in tied:
        for y in tied:
            if u[x | y] < best - 2 * TOL or u[x & y] < best - 2 * TOL:
                ok, pair = False, (int(x), int(y))
                break
        if not ok:
            break
    join = int(lattice_max_rows(u[None, :], TOL)[0])
    ok = ok and u[join] >= best - 2 * TOL
    t.record("lattice_closure", ok, K, alpha=alpha, shape=shape.to_dict(),
             pair=None if pair is None else [_bits(pair[0]), _bits(pair[1])])


def _check_stage(t: _Trial, rng, shape):
    K = t.K
    params = MarketParams(rng.uniform(0.5, 6.0), rng.uniform(0.0, 10.0), tuple(t.gamma),
                          tuple(rng.uniform(0.0, 1.2, K)), shape, shape)
    noise = NoiseProfile(tuple(t.sigma))
    e = tuple(int(x) for x in rng.integers(0, 2, K))
    a = tuple(x * y for x, y in zip(e, rng.integers(0, 2, K)))
    out = play(params, noise, e, a)
    paid = sum(out.prices)
    platforms = sum(out.u_platforms) - sum(0.5 * a[i] - params.cost[i] for i in range(K) if e[i])
    buyer = params.beta * float(shape(out.info_to_buyer)) - out.u_buyer
    ok = abs(platforms - paid) <= TOL and abs(buyer - paid) <= TOL
    t.record("payment_identity", ok, sum(a), entry=list(e), sharing=list(a),
             platform_side=platforms, buyer_side=buyer)

    perm = rng.permutation(K)
    pp = params.with_(gamma=tuple(params.gamma[k] for k in perm), cost=tuple(params.cost[k] for k in perm))
    pn = NoiseProfile(tuple(noise.sigma[k] for k in perm))
    pe = tuple(e[k] for k in perm)
    label = user_best_response(params, noise, e)
    plabel = user_best_response(pp, pn, pe)
    t.record("permutation_invariance", plabel == tuple(label[k] for k in perm), sum(e),
             entry=list(e), permutation=perm.tolist(), label=list(label), permuted=list(plabel))


def _check_border(t: _Trial, rng):
    K = t.K
    alpha = rng.uniform((K + 1) / 2.0 + 0.01, 10.0)
    params = MarketParams(alpha, 1.0, tuple(t.gamma), (0.0,) * K)
    n = int(rng.integers(1, K + 1))
    if not math.isfinite(candidate_ratio(params, n)) or 1 + 2 * alpha - n <= 2 / min(t.gamma[:n]) ** 2:
        return
    noise = candidate_profile(params, range(n))
    leaked = info_table(t.gamma, noise.array, range(n))[-1]
    t.record("border_identity", abs(leaked - n / (2 * alpha)) <= TOL, n, alpha=alpha,
             info=float(leaked), target=n / (2 * alpha))


def _check_equilibrium(report, trial, rng):
    K = int(rng.integers(1, 4))
    gamma = tuple(rng.uniform(0.6, 1.0, K))
    floor = max(alpha_bar(K), symmetric_alpha_threshold(K), 1.0 / min(gamma) ** 2)
    params = MarketParams(floor + rng.uniform(0.1, 3.0), rng.uniform(0.0, 12.0), gamma,
                          tuple(rng.uniform(0.0, 1.2, K)))
    if not check_privacy_assumption(params):
        return
    res = solve(params)
    if res.status is not Status.VERIFIED or not res.entrants:
        return
    t = _Trial(report, trial, K, np.asarray(gamma), res.noise.array, False)
    t.record("zero_user_utility", abs(res.outcome.u_user) <= TOL, len(res.entrants),
             alpha=params.alpha, beta=params.beta, cost=list(params.cost), u_user=res.outcome.u_user)


def property_suite(seed: int = 42, trials: int = 10_000, max_K: int = MAX_K,
                   sabotage: bool = False, equilibrium_every: int = 200) -> PropertyReport:
    """Run every randomized invariant check; deterministic for a given seed.

    ``sabotage`` flips the sign of the set-submodularity check so that the
    suite's ability to detect a broken property can itself be tested.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= max_K <= MAX_K:
        raise ValueError(f"max_K must lie in [1, {MAX_K}] for exhaustive checks")
    rng = np.random.default_rng(seed)
    report = PropertyReport(seed, trials)
    for trial in range(trials):
        K = int(rng.integers(1, max_K + 1))
        t = _Trial(report, trial, K, _random_gamma(rng, K), _random_sigma(rng, K), sabotage)
        shape = _random_shape(rng)
        table, _ = _check_set_and_noise(t, rng, shape)
        _check_closed_forms(t, rng, table)
        _check_buyer(t, rng, table, shape)
        _check_lattice(t, rng, table, shape)
        if trial % 10 == 0:
            _check_stage(t, rng, shape)
            _check_border(t, rng)
        if equilibrium_every and trial % equilibrium_every == 0:
            _check_equilibrium(report, trial, rng)
    return report
