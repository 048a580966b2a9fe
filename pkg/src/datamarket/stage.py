"""The last three stages of the game: user sharing, pricing and buyer acceptance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SearchLimitExceeded
from .info import SERVICE_INFO, _solve_info, info_table
from .params import DEFAULT_SETTINGS, MarketParams, NoiseProfile, SolverSettings, as_binary


@dataclass(frozen=True)
class StageOutcome:
    """Strategies played after entry and noise are fixed, with everyone's payoff."""

    entry: tuple
    sharing: tuple
    prices: tuple
    buyer: tuple
    u_user: float
    u_platforms: tuple
    u_buyer: float
    info_to_buyer: float

    @property
    def welfare(self) -> float:
        return welfare(self)


def _normalize(params, e, a, b=None):
    K = params.K
    e = as_binary(e, K, "entry")
    a = tuple(x * y for x, y in zip(as_binary(a, K, "sharing"), e))
    if b is None:
        return e, a
    b = tuple(x * y for x, y in zip(as_binary(b, K, "buyer"), a))
    return e, a, b


def equilibrium_prices(params: MarketParams, noise: NoiseProfile, e, a) -> tuple:
    """Each seller charges beta times the buyer's marginal value of its signal."""
    e, a = _normalize(params, e, a)
    g, s = params.gamma_array, noise.array
    active = [i for i in range(params.K) if a[i]]
    H = params.h_buyer
    full = float(H(_solve_info(g, s, active)))
    prices = [0.0] * params.K
    for i in active:
        rest = [j for j in active if j != i]
        prices[i] = max(params.beta * (full - float(H(_solve_info(g, s, rest)))), 0.0)
    return tuple(prices)


def stage_utilities(params: MarketParams, noise: NoiseProfile, e, a, p, b) -> StageOutcome:
    """Payoffs of the user, every platform and the buyer."""
    e, a, b = _normalize(params, e, a, b)
    p = tuple(float(x) for x in p)
    g, s = params.gamma_array, noise.array
    shared = [i for i in range(params.K) if a[i]]
    bought = [i for i in range(params.K) if b[i]]
    leaked = _solve_info(g, s, bought)
    payments = [b[i] * p[i] for i in range(params.K)]
    u_user = SERVICE_INFO * len(shared) - params.alpha * params.h_user(leaked)
    u_platforms = tuple(
        (SERVICE_INFO * a[i] + payments[i] - params.cost[i]) if e[i] else 0.0
        for i in range(params.K)
    )
    u_buyer = params.beta * params.h_buyer(leaked) - sum(payments)
    return StageOutcome(
        entry=e, sharing=a, prices=tuple(x if a[i] else 0.0 for i, x in enumerate(p)),
        buyer=b, u_user=float(u_user), u_platforms=tuple(float(u) for u in u_platforms),
        u_buyer=float(u_buyer), info_to_buyer=float(leaked),
    )


def play(params: MarketParams, noise: NoiseProfile, e, a) -> StageOutcome:
    """Stage outcome when the buyer faces equilibrium prices and buys every offer."""
    p = equilibrium_prices(params, noise, e, a)
    return stage_utilities(params, noise, e, a, p, a)


def welfare(outcome: StageOutcome, params: MarketParams | None = None) -> float:
    """Sum of all utilities; payments cancel."""
    return outcome.u_user + sum(outcome.u_platforms) + outcome.u_buyer


def _popcounts(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(max(n, 1))) & 1).sum(axis=1)


def user_utility_table(params: MarketParams, noise: NoiseProfile, members: Sequence[int]) -> np.ndarray:
    """User utility for every subset of ``members`` (indexed by bitmask)."""
    info = info_table(params.gamma_array, noise.array, members)
    return SERVICE_INFO * _popcounts(len(members)) - params.alpha * params.h_user(info)


def lattice_max_rows(u: np.ndarray, tie_tol: float) -> np.ndarray:
    """Join of the near-optimal subsets in each row of a utility table.

    A supermodular objective keeps the join of near-maximisers within twice
    the tie tolerance of the maximum; rows where rounding breaks this fall
    back to the largest near-optimal subset.
    """
    u = np.atleast_2d(u)
    best = u.max(axis=1)
    tied = u >= (best - tie_tol)[:, None]
    masks = np.arange(u.shape[1])
    join = np.bitwise_or.reduce(np.where(tied, masks, 0), axis=1)
    ok = u[np.arange(len(u)), join] >= best - 2 * tie_tol
    for r in np.flatnonzero(~ok):
        cand = np.flatnonzero(tied[r])
        counts = [bin(int(m)).count("1") for m in cand]
        join[r] = cand[int(np.argmax(counts))]
    return join


def _lattice_max(u: np.ndarray, tie_tol: float) -> int:
    return int(lattice_max_rows(u, tie_tol)[0])


def user_best_response(params: MarketParams, noise: NoiseProfile, e,
                       settings: SolverSettings = DEFAULT_SETTINGS) -> tuple:
    """Lattice-maximal optimal sharing profile given entry ``e``."""
    e = as_binary(e, params.K, "entry")
    members = [i for i in range(params.K) if e[i]]
    if len(members) > settings.search_limit:
        raise SearchLimitExceeded(
            f"{len(members)} entrants exceed the exhaustive search limit {settings.search_limit}")
    u = user_utility_table(params, noise, members)
    mask = _lattice_max(u, settings.tie_tol)
    a = [0] * params.K
    for j, i in enumerate(members):
        if mask >> j & 1:
            a[i] = 1
    return tuple(a)


region_of = user_best_response


@dataclass
class PrivacyCheck:
    """Whether zero noise makes the user share with nobody, for every entry profile."""

    holds: bool
    violating_entry: tuple | None = None
    best_sharing_utility: float = -math.inf
    closed_form_threshold: float | None = None
    pair_threshold: float | None = None
    closed_form_agrees: bool | None = None
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.holds


def pair_assumption_thresholds(g1: float, g2: float) -> tuple[float, float]:
    """Thresholds on alpha for two platforms at zero noise.

    Returns the both-share threshold and the full threshold that also rules
    out sharing with a single platform.
    """
    q1, q2 = g1 * g1, g2 * g2
    denom = 2.0 * (q1 + q2 - q1 * q2)
    both = math.inf if denom == 0 else (4.0 - q1 * q2) / denom
    singles = [math.inf if q == 0 else 1.0 / q for q in (q1, q2)]
    return both, max([both] + singles)


def check_privacy_assumption(params: MarketParams,
                             settings: SolverSettings = DEFAULT_SETTINGS) -> PrivacyCheck:
    """Check that zero noise on every entrant leaves the user sharing nothing.

    For any entry profile e the best response is empty exactly when every
    nonempty subset of e gives the user strictly negative utility, so one
    table over all platforms covers every e at once.
    """
    K = params.K
    if K > settings.search_limit:
        raise SearchLimitExceeded(f"K={K} exceeds the exhaustive search limit")
    zero = NoiseProfile((0.0,) * K)
    u = user_utility_table(params, zero, range(K))
    u[0] = -math.inf
    worst = int(np.argmax(u))
    best = float(u[worst])
    holds = best < -settings.tie_tol
    check = PrivacyCheck(holds=holds, best_sharing_utility=best)
    if not holds:
        check.violating_entry = tuple((worst >> i) & 1 for i in range(K))
    if K == 2:
        both, full = pair_assumption_thresholds(*params.gamma)
        check.closed_form_threshold = both
        check.pair_threshold = full
        if params.h_user.is_identity:
            check.closed_form_agrees = holds == (params.alpha > full)
        if full > both:
            check.notes.append("single-platform sharing binds before the both-share threshold")
    return check
