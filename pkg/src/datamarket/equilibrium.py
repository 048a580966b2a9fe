"""Equilibrium candidates, entry and privacy thresholds, and deviation checks.

Equilibria sit on the boundary where the user is indifferent between
sharing with every entrant and sharing with nobody.  The analytic
candidate gives every entrant the same ratio ``t = gamma**2 / (2 + sigma**2)``;
:func:`verify_equilibrium` then searches every unilateral deviation
(noise changes, exit and entry) and records the best gain in a certificate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import AssumptionViolated, InfeasibleCandidate, InvalidParams, SearchLimitExceeded
from .info import (SERVICE_INFO, _solve_info, info_ratio, info_table, revealed_info,
                   revealed_info_symmetric, sigma_from_ratio)
from .params import DEFAULT_SETTINGS, MarketParams, NoiseProfile, SolverSettings
from .stage import (StageOutcome, _popcounts, check_privacy_assumption, lattice_max_rows, play,
                    user_best_response)


class Status(str, Enum):
    VERIFIED = "Verified"
    CANDIDATE_ONLY = "CandidateOnly"
    NO_EQUILIBRIUM = "NoEquilibriumFound"


class NoiseDeviation(NamedTuple):
    platform: int
    target: int
    gain: float
    ratio: float
    source: str


class EntryDeviation(NamedTuple):
    platform: int
    kind: str
    gain: float


@dataclass
class VerificationCertificate:
    """Outcome of every deviation check run against one strategy profile."""

    user_br_ok: bool
    boundary_ok: bool
    noise_deviations: list = field(default_factory=list)
    entry_deviations: list = field(default_factory=list)
    tol: float = DEFAULT_SETTINGS.tol
    complete: bool = True

    @property
    def max_gain(self) -> float:
        gains = [d.gain for d in self.noise_deviations] + [d.gain for d in self.entry_deviations]
        return max(gains, default=-math.inf)

    @property
    def verified(self) -> bool:
        return self.user_br_ok and self.boundary_ok and self.max_gain <= self.tol

    def failures(self) -> list:
        out = [d for d in self.noise_deviations if d.gain > self.tol]
        out += [d for d in self.entry_deviations if d.gain > self.tol]
        return out

    def summary(self) -> dict:
        worst = max(self.noise_deviations + self.entry_deviations,
                    key=lambda d: d.gain, default=None)
        return {
            "verified": self.verified,
            "user_br_ok": self.user_br_ok,
            "boundary_ok": self.boundary_ok,
            "max_gain": self.max_gain,
            "worst": None if worst is None else worst._asdict(),
            "checks": len(self.noise_deviations) + len(self.entry_deviations),
            "tol": self.tol,
        }


@dataclass
class Thresholds:
    alpha_bar: float
    beta_bar: float
    beta_under: float
    beta_entry: tuple
    low_cost_count: int
    lower_bounds: tuple
    beta_bar_refined: float | None = None
    one_entrant_interval: tuple | None = None
    alpha_symmetric: float | None = None

    def to_dict(self) -> dict:
        return {
            "alpha_bar": self.alpha_bar,
            "alpha_symmetric": self.alpha_symmetric,
            "beta_bar": self.beta_bar,
            "beta_under": self.beta_under,
            "beta_entry": list(self.beta_entry),
            "low_cost_count": self.low_cost_count,
            "lower_bounds": list(self.lower_bounds),
            "beta_bar_refined": self.beta_bar_refined,
            "one_entrant_interval": None if self.one_entrant_interval is None
            else list(self.one_entrant_interval),
        }


@dataclass
class EntrySequence:
    """Platforms in cost order with the beta at which each one starts to enter."""

    order: tuple
    thresholds: tuple
    lower_bounds: tuple
    low_cost_count: int

    def per_platform(self) -> tuple:
        out = [0.0] * len(self.order)
        for rank, i in enumerate(self.order):
            out[i] = self.thresholds[rank]
        return tuple(out)

    def entrant_count(self, beta: float) -> int:
        return sum(1 for b in self.thresholds if beta >= b)


@dataclass
class EquilibriumResult:
    noise: NoiseProfile
    outcome: StageOutcome
    certificate: VerificationCertificate
    status: Status
    thresholds: Thresholds | None = None
    notes: list = field(default_factory=list)

    @property
    def entry(self) -> tuple:
        return self.outcome.entry

    @property
    def entrants(self) -> tuple:
        return tuple(i for i, v in enumerate(self.outcome.entry) if v)

    @property
    def sharing(self) -> tuple:
        return self.outcome.sharing

    @property
    def prices(self) -> tuple:
        return self.outcome.prices

    @property
    def buyer(self) -> tuple:
        return self.outcome.buyer

    @property
    def welfare(self) -> float:
        return self.outcome.welfare


# ---------------------------------------------------------------------------
# Candidates

def candidate_ratio(params: MarketParams, n: int) -> float:
    """Common ratio that makes the user indifferent between sharing with all n and none.

    Returns ``inf`` when no ratio in [0, 1] achieves indifference.
    """
    if n == 0:
        return 0.0
    if params.h_user.is_identity:
        d = 1.0 + 2.0 * params.alpha - n
        return 1.0 / d if d > 0 else math.inf
    target = n / (2.0 * params.alpha)
    if target >= float(params.h_user(1.0)):
        return math.inf
    level = float(params.h_user.inverse(target))
    return level / (n - (n - 1) * level)


def candidate_profile(params: MarketParams, entrants: Iterable[int]) -> NoiseProfile:
    """Symmetric-ratio boundary profile for the given entrants; others get infinite noise."""
    entrants = sorted(set(entrants))
    n = len(entrants)
    sigma = [math.inf] * params.K
    t = candidate_ratio(params, n)
    linear = params.h_user.is_identity
    for i in entrants:
        g2 = params.gamma[i] ** 2
        if linear:
            var = g2 * (1.0 + 2.0 * params.alpha - n) - 2.0
        else:
            var = g2 / t - 2.0 if math.isfinite(t) and t > 0 else -2.0
        if var < 0:
            if var > -1e-12:
                var = 0.0
            else:
                raise InfeasibleCandidate(i, var)
        sigma[i] = math.sqrt(var)
    return NoiseProfile(tuple(sigma))


def boundary_profile(params: MarketParams, entrants: Iterable[int],
                     floors: Sequence[float] | None = None) -> NoiseProfile:
    """Boundary profile respecting per-platform noise floors.

    Entrants share a common ratio t, except that no platform may go below
    its floor.  t is the largest ratio at which the user still weakly
    prefers sharing with every entrant over every proper subset; without
    binding floors the best proper subset is the empty one.  If even the
    floors leave that preference strict, every entrant sits at its floor.
    """
    entrants = sorted(set(entrants))
    K = params.K
    floors = tuple(floors) if floors is not None else (0.0,) * K
    if not entrants:
        return NoiseProfile.silent(K)
    try:
        cand = candidate_profile(params, entrants)
        if all(cand.sigma[i] >= floors[i] for i in entrants):
            return cand
    except InfeasibleCandidate:
        pass
    g = params.gamma_array
    caps = {i: info_ratio(params.gamma[i], floors[i]) for i in entrants}
    counts = _popcounts(len(entrants))

    def profile(t):
        s = np.full(K, math.inf)
        for i in entrants:
            s[i] = floors[i] if caps[i] <= t else sigma_from_ratio(params.gamma[i], t)
        return s

    def surplus(t):
        u = SERVICE_INFO * counts - params.alpha * params.h_user(info_table(g, profile(t), entrants))
        return float(u[-1] - u[:-1].max())

    tmax = max(caps.values())
    if tmax <= 0 or surplus(tmax) >= 0:
        return NoiseProfile(tuple(profile(tmax if tmax > 0 else 0.0)))
    t = brentq(surplus, 0.0, tmax, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return NoiseProfile(tuple(profile(t)))


# ---------------------------------------------------------------------------
# Thresholds

def deviation_ratio(alpha: float) -> float:
    """Two-platform ratio a deviator can reach while the user drops the other platform."""
    return 1.0 - 1.0 / (4 * alpha) - math.sqrt(16 * alpha * alpha - 16 * alpha + 1) / (4 * alpha)


def _pair_alpha_condition(alpha: float) -> float:
    return deviation_ratio(alpha) + 1.0 / (2 * alpha - 1) - 1.0 / alpha


def _bisect(f, lo, hi, tol=1e-13):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def alpha_bar(params_or_K) -> float:
    """Privacy weight above which the symmetric candidate resists noise deviations."""
    K = params_or_K.K if isinstance(params_or_K, MarketParams) else int(params_or_K)
    if K < 1:
        raise InvalidParams(f"K must be >= 1, got {K}", "K")
    if K == 1:
        return 0.0
    if K == 2:
        return _bisect(_pair_alpha_condition, 1.0, 10.0)
    return (K + 1) ** 2 / 8.0


def _switch_ratio(alpha: float, n: int, i: int, t: float, h_user=None) -> float:
    """Largest deviator ratio at which the user weakly prefers keeping i of n platforms."""
    if i == n:
        return t
    if t <= 0 or t >= 1:
        return 0.0
    if h_user is None or h_user.is_identity:
        v = t / (1.0 - t)
        disc = (n - i) ** 2 * v * v + 8.0 * alpha * v
        A = 0.5 * (-(n + i - 2) * v + math.sqrt(disc))
        return max(1.0 - 1.0 / A, 0.0) if A > 1.0 else 0.0

    def prefers_subset(tp):
        full = revealed_info_symmetric(n, t, tp)
        part = revealed_info_symmetric(i, t, tp) if i > 1 else tp
        return alpha * (float(h_user(full)) - float(h_user(part))) - 0.5 * (n - i)

    grid = np.linspace(t, 0.0, 401)
    vals = [prefers_subset(x) for x in grid]
    for k in range(len(grid) - 1):
        if vals[k] < 0 <= vals[k + 1]:
            return brentq(prefers_subset, grid[k + 1], grid[k], xtol=1e-15)
        if vals[k] >= 0:
            return float(grid[k])
    return 0.0


def symmetric_deviation_margin(alpha: float, n: int) -> float:
    """Largest gain, per unit of beta, from a noise deviation at the n-entrant candidate.

    Linear utilities only.  For each target count i the deviator raises its
    noise until the user keeps i platforms; the payoff is evaluated at the
    switch point.  The candidate resists noise deviations iff this is <= 0.
    """
    t = 1.0 / (1.0 + 2.0 * alpha - n)
    held = (2 * alpha - n) / (2 * alpha * (2 * alpha - 1))
    worst = -math.inf
    for i in range(1, n):
        tb = _switch_ratio(alpha, n, i, t)
        if tb <= 0:
            continue
        rest = revealed_info_symmetric(i - 1, t) if i > 1 else 0.0
        worst = max(worst, revealed_info_symmetric(i, t, tb) - rest - held)
    return worst


def symmetric_alpha_threshold(K: int) -> float:
    """Smallest alpha at which the K-entrant symmetric candidate resists noise deviations.

    Found by bisection on :func:`symmetric_deviation_margin`, starting from
    the smallest alpha for which zero-noise candidates exist.
    """
    if K < 2:
        return 0.0
    lo, hi = (K + 1) / 2.0, max((K + 1) ** 2 / 8.0, K + 1.0)
    while symmetric_deviation_margin(hi, K) > 0:
        hi *= 2
    if symmetric_deviation_margin(lo, K) <= 0:
        return lo
    return _bisect(lambda a: symmetric_deviation_margin(a, K), lo, hi, tol=1e-12)


def deviation_noise_bound(params: MarketParams, entrants: Iterable[int], deviator: int,
                          target: int) -> float:
    """Largest ratio t' for which raising the deviator's noise makes the user keep ``target`` platforms."""
    entrants = sorted(set(entrants))
    n = len(entrants)
    if deviator not in entrants:
        raise InvalidParams(f"platform {deviator} is not an entrant", "deviator")
    if not 1 <= target <= n:
        raise InvalidParams(f"target must lie in [1, {n}], got {target}", "target")
    t = candidate_ratio(params, n)
    if not math.isfinite(t):
        raise InfeasibleCandidate(deviator, -math.inf)
    return _switch_ratio(params.alpha, n, target, t, params.h_user)


def _entry_marginal(params: MarketParams, n: int) -> float:
    """Buyer-side marginal value of one entrant at the n-entrant symmetric candidate."""
    a = params.alpha
    if params.linear:
        return (2 * a - n) / (2 * a * (2 * a - 1)) if 2 * a > n else 0.0
    t = candidate_ratio(params, n)
    if not math.isfinite(t) or t <= 0:
        return 0.0
    full = revealed_info_symmetric(n, t)
    rest = revealed_info_symmetric(n - 1, t) if n > 1 else 0.0
    Hb = params.h_buyer
    return float(Hb(full)) - float(Hb(rest))


def _sharing_marginal_sup(params: MarketParams) -> float:
    """Largest buyer-side marginal a platform can have while the user still shares with it."""
    if params.linear:
        return 1.0 / (2.0 * params.alpha)
    Hu, Hb, a = params.h_user, params.h_buyer, params.alpha
    xs = np.linspace(0.0, 1.0, 20001)[1:]
    hx = Hu(xs)
    lower = np.where(hx > 1.0 / (2 * a), Hu.inverse(np.maximum(hx - 1.0 / (2 * a), 0.0)), 0.0)
    return float(np.max(Hb(xs) - Hb(lower)))


def _entry_thresholds(params: MarketParams) -> EntrySequence:
    K = params.K
    order = tuple(sorted(range(K), key=lambda i: (params.cost[i], i)))
    low = sum(1 for c in params.cost if c <= 0.5)
    sup = _sharing_marginal_sup(params)
    thresholds = []
    for rank, i in enumerate(order):
        c = params.cost[i]
        if c <= 0.5:
            thresholds.append(0.0)
            continue
        group_end = max(r for r, j in enumerate(order) if params.cost[j] == c) + 1
        m = _entry_marginal(params, group_end)
        thresholds.append((c - 0.5) / m if m > 0 else math.inf)
    lower = tuple((params.cost[i] - 0.5) / sup for i in range(K))
    return EntrySequence(order, tuple(thresholds), lower, low)


def entry_threshold_sequence(params: MarketParams) -> EntrySequence:
    """Beta thresholds at which high-cost platforms enter one by one, in cost order."""
    if 2 * params.alpha <= params.K:
        raise InvalidParams(
            f"2*alpha = {2 * params.alpha} must exceed K = {params.K}", "alpha")
    return _entry_thresholds(params)


def _refine_beta_bar(params: MarketParams, settings: SolverSettings) -> float:
    """Local search along the boundary near the symmetric candidate for larger entry thresholds."""
    K = params.K
    t = candidate_ratio(params, K)
    if K < 2 or not math.isfinite(t):
        return -math.inf
    level = K / (2 * params.alpha)
    level = level if params.h_user.is_identity else float(params.h_user.inverse(level))
    s_target = level / (1.0 - level)
    caps = [g * g / 2.0 for g in params.gamma]
    best = -math.inf
    Hb = params.h_buyer
    for i in params.high_cost():
        for k in range(-10, 11):
            ti = t + k * settings.refine_step
            if not 0 < ti <= caps[i]:
                continue
            rest = (s_target - ti / (1 - ti)) / (K - 1)
            if rest <= 0:
                continue
            to = rest / (1 + rest)
            if any(to > caps[j] for j in range(K) if j != i):
                continue
            sigma = [sigma_from_ratio(params.gamma[j], ti if j == i else to) for j in range(K)]
            noise = NoiseProfile(tuple(sigma))
            if user_best_response(params, noise, (1,) * K, settings) != (1,) * K:
                continue
            full = revealed_info(params, noise, range(K))
            others = revealed_info(params, noise, [j for j in range(K) if j != i])
            m = float(Hb(full)) - float(Hb(others))
            if m > 0:
                best = max(best, (params.cost[i] - 0.5) / m)
    return best


def beta_thresholds(params: MarketParams, settings: SolverSettings = DEFAULT_SETTINGS) -> Thresholds:
    """Entry thresholds on beta: all platforms enter above beta_bar, only low-cost ones below beta_under."""
    check = check_privacy_assumption(params, settings)
    if not check:
        raise AssumptionViolated(
            f"zero noise does not deter sharing for entry profile {check.violating_entry}",
            check.violating_entry)
    K, a = params.K, params.alpha
    seq = _entry_thresholds(params)
    high = params.high_cost()
    if not high:
        beta_bar, beta_under = 0.0, math.inf
    else:
        cmax = max(params.cost[i] for i in high)
        cmin = min(params.cost[i] for i in high)
        if K == 2 and params.linear:
            beta_bar = (2 + 1 / (a - 1)) * a * (cmax - 0.5) if a > 1 else math.inf
        else:
            margins = [_entry_marginal(params, n) for n in range(1, K + 1)]
            beta_bar = max((cmax - 0.5) / m if m > 0 else math.inf for m in margins)
        beta_under = (cmin - 0.5) / _sharing_marginal_sup(params)
    refined = max(beta_bar, _refine_beta_bar(params, settings)) if high else beta_bar
    interval = None
    if K == 2:
        lo, hi = sorted(range(2), key=lambda i: (params.cost[i], i))
        interval = (seq.lower_bounds[lo], seq.lower_bounds[hi])
    return Thresholds(
        alpha_bar=alpha_bar(K), beta_bar=beta_bar, beta_under=beta_under,
        beta_entry=seq.per_platform(), low_cost_count=seq.low_cost_count,
        lower_bounds=seq.lower_bounds, beta_bar_refined=refined,
        one_entrant_interval=interval,
        alpha_symmetric=symmetric_alpha_threshold(K) if params.linear else None,
    )


# ---------------------------------------------------------------------------
# Verification

class _Probe:
    """Payoff of platform j as a function of its own noise ratio, everyone else fixed."""

    def __init__(self, params, sigma, entry, j, floor, settings):
        self.params = params
        self.members = sorted(set(i for i in range(params.K) if entry[i]) | {j})
        self.pos = self.members.index(j)
        self.sigma = np.array(sigma, dtype=float)
        self.j = j
        self.floor = floor
        self.cap = info_ratio(params.gamma[j], floor)
        self.counts = _popcounts(len(self.members))
        self.tie = settings.tie_tol

    def sigma_for(self, t):
        if t <= 0:
            return math.inf
        if t >= self.cap:
            return self.floor
        return sigma_from_ratio(self.params.gamma[self.j], t)

    def batch(self, ts):
        p = self.params
        S = np.tile(self.sigma, (len(ts), 1))
        S[:, self.j] = [self.sigma_for(t) for t in ts]
        info = info_table(p.gamma_array, S, self.members)
        u = SERVICE_INFO * self.counts - p.alpha * p.h_user(info)
        masks = lattice_max_rows(u, self.tie)
        shared = (masks >> self.pos) & 1
        rows = np.arange(len(ts))
        Hb = p.h_buyer
        gain = Hb(info[rows, masks]) - Hb(info[rows, masks & ~(1 << self.pos)])
        payoff = SERVICE_INFO * shared + p.beta * gain * shared - p.cost[self.j]
        return list(zip(payoff.tolist(), masks.tolist()))

    def __call__(self, t):
        return self.batch([t])[0]


def _scan(probe, ts):
    """Evaluate the probe on a grid and at every switch of the user's response.

    Returns the best payoff per sharing count.  Switch points are located by
    bisection so that the payoff on either side of a discontinuity is seen.
    """
    vals = probe.batch(ts)
    best = {}

    def record(t, v):
        payoff, mask = v
        c = bin(mask).count("1")
        if c not in best or payoff > best[c][0]:
            best[c] = (payoff, t)

    for t, v in zip(ts, vals):
        record(t, v)
    for k in range(len(ts) - 1):
        if vals[k][1] == vals[k + 1][1]:
            continue
        lo, hi, vlo, vhi = ts[k], ts[k + 1], vals[k], vals[k + 1]
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            vm = probe(mid)
            if vm[1] == vlo[1]:
                lo, vlo = mid, vm
            else:
                hi, vhi = mid, vm
        record(lo, vlo)
        record(hi, vhi)
    return best


def _ratio_grid(start, stop, points, min_ratio):
    half = max(points // 2, 2)
    lin = np.linspace(start, stop, half)
    if stop > 0 and start > 0:
        geo = np.geomspace(start, max(stop, min_ratio), points - half)
        lin = np.concatenate([lin, geo])
    return sorted(set(float(x) for x in lin), reverse=start > stop)


def verify_equilibrium(params: MarketParams, noise: NoiseProfile, e,
                       settings: SolverSettings = DEFAULT_SETTINGS,
                       floors: Sequence[float] | None = None,
                       fail_fast: bool = False) -> VerificationCertificate:
    """Check a strategy profile against every unilateral deviation.

    The checks are: the user shares with every entrant; the profile is on
    the user's indifference boundary (or every entrant is already at its
    noise floor); no entrant gains by raising or lowering its noise; no
    entrant gains by leaving and no outsider gains by entering with its
    best noise level.
    """
    K = params.K
    e = tuple(int(v) for v in e)
    floors = tuple(floors) if floors is not None else (0.0,) * K
    entrants = [i for i in range(K) if e[i]]
    sigma = [noise.sigma[i] if e[i] else math.inf for i in range(K)]
    noise = NoiseProfile(tuple(sigma))
    a = user_best_response(params, noise, e, settings)
    outcome = play(params, noise, e, a)
    pinned = [noise.sigma[i] <= floors[i] * (1 + 1e-12) + 1e-12 for i in entrants]
    boundary = abs(outcome.u_user) <= settings.tol or all(pinned)
    if not boundary and any(pinned):
        # a pinned platform gives the user a positive outside option
        counts = _popcounts(len(entrants))
        u = SERVICE_INFO * counts - params.alpha * params.h_user(
            info_table(params.gamma_array, np.array(sigma), entrants))
        boundary = abs(float(u[-1] - u[:-1].max())) <= settings.tol
    cert = VerificationCertificate(
        user_br_ok=a == e,
        boundary_ok=boundary,
        tol=settings.tol,
    )
    def done():
        return fail_fast and not cert.verified

    if done():
        cert.complete = False
        return cert

    # Cheap checks first so that fail-fast callers stop early.
    for j in entrants:
        cert.entry_deviations.append(EntryDeviation(j, "exit", -outcome.u_platforms[j]))
    for j in range(K):
        if e[j]:
            continue
        if math.isinf(floors[j]) or params.gamma[j] == 0.0:
            gain = SERVICE_INFO - params.cost[j]
        else:
            probe = _Probe(params, sigma, e, j, floors[j], settings)
            grid = _ratio_grid(probe.cap, settings.min_ratio, settings.sweep_points, settings.min_ratio)
            grid.append(0.0)
            gain = max(v[0] for v in _scan(probe, grid).values())
        cert.entry_deviations.append(EntryDeviation(j, "enter", gain))
        if done():
            cert.complete = False
            return cert
    if done():
        cert.complete = False
        return cert

    ratios = [info_ratio(params.gamma[i], noise.sigma[i]) for i in entrants]
    symmetric = len(entrants) >= 2 and max(ratios) - min(ratios) <= 1e-9 * max(max(ratios), 1e-300)
    n = len(entrants)
    Hb = params.h_buyer
    for j in entrants:
        if params.gamma[j] == 0.0:
            continue
        base = outcome.u_platforms[j]
        probe = _Probe(params, sigma, e, j, floors[j], settings)
        tj = info_ratio(params.gamma[j], noise.sigma[j])
        if symmetric and math.isfinite(noise.sigma[j]):
            for i in range(1, n):
                tb = _switch_ratio(params.alpha, n, i, tj, params.h_user)
                if not 0 < tb < tj:
                    continue
                payoff, mask = probe(tb * (1 - 1e-7))
                if bin(mask).count("1") != i or not (mask >> probe.pos) & 1:
                    continue
                rest = revealed_info_symmetric(i - 1, tj) if i > 1 else 0.0
                limit = SERVICE_INFO - params.cost[j] + params.beta * (
                    float(Hb(revealed_info_symmetric(i, tj, tb))) - float(Hb(rest)))
                cert.noise_deviations.append(NoiseDeviation(j, i, limit - base, tb, "bound"))
        if tj > 0:
            up = _ratio_grid(tj, settings.min_ratio, settings.sweep_points, settings.min_ratio)
            up.append(0.0)
            for count, (payoff, t) in sorted(_scan(probe, up).items()):
                cert.noise_deviations.append(NoiseDeviation(j, count, payoff - base, t, "sweep"))
        if probe.cap > tj:
            down = _ratio_grid(tj, probe.cap, 50, settings.min_ratio)
            for count, (payoff, t) in sorted(_scan(probe, down).items()):
                cert.noise_deviations.append(NoiseDeviation(j, count, payoff - base, t, "lower"))
        if done():
            cert.complete = False
            return cert
    return cert


# ---------------------------------------------------------------------------
# Top-level solve

def _result(params, noise, e, settings, floors=None, thresholds=None, fail_fast=False):
    cert = verify_equilibrium(params, noise, e, settings, floors, fail_fast)
    e = tuple(int(v) for v in e)
    sigma = tuple(noise.sigma[i] if e[i] else math.inf for i in range(params.K))
    noise = NoiseProfile(sigma)
    outcome = play(params, noise, e, e)
    status = Status.VERIFIED if cert.verified else Status.NO_EQUILIBRIUM
    return EquilibriumResult(noise, outcome, cert, status, thresholds)


def _solve_single(params: MarketParams, settings: SolverSettings, floors=None) -> EquilibriumResult:
    g, a = params.gamma[0], params.alpha
    floor = 0.0 if floors is None else floors[0]
    if math.isinf(floor) or g == 0.0:
        sigma = floor
    elif params.h_user.is_identity:
        sigma = 0.0 if a * g * g <= 1 else math.sqrt(2 * (a * g * g - 1))
    else:
        level = 1.0 / (2 * a)
        if SERVICE_INFO - a * float(params.h_user(g * g / 2)) >= -settings.tie_tol:
            sigma = 0.0
        else:
            sigma = sigma_from_ratio(g, float(params.h_user.inverse(level)))
    sigma = max(sigma, floor)
    noise = NoiseProfile((sigma,))
    enters = play(params, noise, (1,), (1,)).u_platforms[0] >= -settings.tie_tol
    e = (1,) if enters else (0,)
    res = _result(params, noise, e, settings, floors)
    res.notes.append("single-platform closed form")
    return res


def _fallback_sets(params: MarketParams, order: Sequence[int], n: int, tried) -> list:
    K = params.K
    sets = []
    for d in range(1, K + 1):
        for m in (n - d, n + d):
            if 0 <= m <= K:
                sets.append(tuple(sorted(order[:m])))
    if K <= 6:
        rest = [tuple(c) for r in range(K + 1) for c in itertools.combinations(range(K), r)]
        rest.sort(key=lambda s: (abs(len(s) - n), len(s), s))
        sets.extend(rest)
    out = []
    for s in sets:
        if s not in tried and s not in out:
            out.append(s)
    return out


def solve(params: MarketParams, settings: SolverSettings = DEFAULT_SETTINGS) -> EquilibriumResult:
    """Find an equilibrium, preferring the analytic candidate for the beta bracket."""
    if params.K == 1:
        return _solve_single(params, settings)
    try:
        thresholds = beta_thresholds(params, settings)
    except (AssumptionViolated, SearchLimitExceeded):
        thresholds = None
    seq = _entry_thresholds(params)
    n = seq.entrant_count(params.beta)
    while n > 0 and not math.isfinite(candidate_ratio(params, n)):
        n -= 1
    primary = tuple(sorted(seq.order[:n]))
    e = tuple(1 if i in primary else 0 for i in range(params.K))
    noise = boundary_profile(params, primary)
    if n > settings.search_limit:
        outcome = play(params, noise, e, e)
        cert = VerificationCertificate(user_br_ok=False, boundary_ok=abs(outcome.u_user) <= settings.tol,
                                       tol=settings.tol, complete=False)
        return EquilibriumResult(noise, outcome, cert, Status.CANDIDATE_ONLY, thresholds,
                                 ["too many entrants for exhaustive verification"])
    res = _result(params, noise, e, settings, thresholds=thresholds)
    if thresholds is None:
        res.notes.append("zero noise does not deter sharing; closed-form thresholds do not apply")
    if res.status == Status.VERIFIED:
        return res
    for s in _fallback_sets(params, seq.order, n, {primary}):
        cand_e = tuple(1 if i in s else 0 for i in range(params.K))
        cand = boundary_profile(params, s)
        quick = verify_equilibrium(params, cand, cand_e, settings, fail_fast=True)
        if quick.verified:
            found = _result(params, cand, cand_e, settings, thresholds=thresholds)
            found.notes.append(f"bracket candidate {list(primary)} failed; found entrant set {list(s)}")
            return found
    res.notes.append("no boundary candidate over any entrant set passed verification")
    return res
