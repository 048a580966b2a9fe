"""Minimum-privacy mandates: solving the regulated game and comparing policies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .equilibrium import (EquilibriumResult, Status, _fallback_sets, _result, _solve_single,
                          beta_thresholds, boundary_profile, solve, verify_equilibrium)
from .errors import AssumptionViolated, DegenerateMandate, InvalidParams
from .info import SERVICE_INFO, _solve_info
from .params import DEFAULT_SETTINGS, MarketParams, SolverSettings
from .stage import play


class PolicyKind(str, Enum):
    NONE = "none"
    UNIFORM = "uniform"
    BAN_ALL = "ban_all"
    NONUNIFORM = "nonuniform"


def _parse_bound(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise InvalidParams(f"noise floor {v!r} is not a number", "lower_bounds") from None
    if math.isnan(v) or v < 0:
        raise InvalidParams(f"noise floor {v} must be >= 0 or inf", "lower_bounds")
    return v


@dataclass(frozen=True)
class RegulationPolicy:
    """Per-platform lower bounds on noise; an infinite bound bans data sales."""

    kind: PolicyKind
    lower_bounds: tuple

    def __post_init__(self):
        kind = PolicyKind(self.kind)
        bounds = tuple(_parse_bound(v) for v in self.lower_bounds)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lower_bounds", bounds)
        finite = {b for b in bounds if math.isfinite(b)}
        if kind is PolicyKind.NONE and any(b != 0 for b in bounds):
            raise InvalidParams("policy 'none' must have zero bounds", "lower_bounds")
        if kind is PolicyKind.UNIFORM and (len(finite) != 1 or len(bounds) != sum(
                1 for b in bounds if math.isfinite(b))):
            raise InvalidParams("uniform policy needs one finite bound for every platform",
                                "lower_bounds")
        if kind is PolicyKind.BAN_ALL and any(math.isfinite(b) for b in bounds):
            raise InvalidParams("ban_all policy needs infinite bounds", "lower_bounds")

    @classmethod
    def none(cls, K: int) -> "RegulationPolicy":
        return cls(PolicyKind.NONE, (0.0,) * K)

    @classmethod
    def uniform(cls, K: int, sigma_bar: float) -> "RegulationPolicy":
        return cls(PolicyKind.UNIFORM, (float(sigma_bar),) * K)

    @classmethod
    def ban_all(cls, K: int) -> "RegulationPolicy":
        return cls(PolicyKind.BAN_ALL, (math.inf,) * K)

    @classmethod
    def nonuniform(cls, bounds: Sequence[float]) -> "RegulationPolicy":
        return cls(PolicyKind.NONUNIFORM, tuple(bounds))

    @property
    def K(self) -> int:
        return len(self.lower_bounds)

    def to_dict(self) -> dict:
        if self.kind is PolicyKind.UNIFORM:
            return {"kind": "uniform", "sigma_bar": self.lower_bounds[0]}
        if self.kind is PolicyKind.NONUNIFORM:
            return {"kind": "nonuniform",
                    "lower_bounds": ["inf" if math.isinf(b) else b for b in self.lower_bounds]}
        return {"kind": self.kind.value}

    @classmethod
    def from_dict(cls, data: dict, K: int) -> "RegulationPolicy":
        if not isinstance(data, dict):
            raise InvalidParams("policy must be an object", "policy")
        allowed = {"kind", "sigma_bar", "lower_bounds"}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidParams(f"unknown policy fields {sorted(unknown)}", sorted(unknown)[0])
        try:
            kind = PolicyKind(data.get("kind"))
        except ValueError:
            raise InvalidParams(f"unknown policy kind {data.get('kind')!r}", "kind") from None
        if kind is PolicyKind.UNIFORM:
            if "sigma_bar" not in data:
                raise InvalidParams("uniform policy needs sigma_bar", "sigma_bar")
            return cls.uniform(K, _parse_bound(data["sigma_bar"]))
        if kind is PolicyKind.NONUNIFORM:
            bounds = data.get("lower_bounds")
            if not isinstance(bounds, list) or len(bounds) != K:
                raise InvalidParams(f"lower_bounds must list {K} values", "lower_bounds")
            return cls.nonuniform(bounds)
        extra = {"sigma_bar", "lower_bounds"} & set(data)
        if extra:
            raise InvalidParams(f"policy {kind.value!r} takes no {sorted(extra)[0]}", sorted(extra)[0])
        return cls.ban_all(K) if kind is PolicyKind.BAN_ALL else cls.none(K)


def solve_with_policy(params: MarketParams, policy: RegulationPolicy,
                      settings: SolverSettings = DEFAULT_SETTINGS,
                      unregulated: EquilibriumResult | None = None) -> EquilibriumResult:
    """Equilibrium of the game with noise constrained to sigma_i >= lower_bounds[i].

    The unregulated equilibrium is returned unchanged when it already meets
    the bounds.  Otherwise binding platforms sit at their floor, the others
    keep a common ratio on the user's indifference boundary, and platforms
    that cannot cover their cost drop out, most expensive first.
    """
    if policy.K != params.K:
        raise InvalidParams(f"policy has {policy.K} bounds for {params.K} platforms", "policy")
    if policy.kind is PolicyKind.NONE or all(b == 0 for b in policy.lower_bounds):
        return solve(params, settings)
    floors = policy.lower_bounds
    base = unregulated if unregulated is not None else solve(params, settings)
    if base.status is Status.VERIFIED and all(base.noise.sigma[i] >= floors[i] for i in base.entrants):
        return replace(base, notes=base.notes + ["unregulated equilibrium already satisfies the mandate"])
    if params.K == 1:
        res = _solve_single(params, settings, floors)
        res.notes.append(f"policy {policy.kind.value}")
        return res

    order = sorted(range(params.K), key=lambda i: (params.cost[i], i))
    entrants = list(order)
    while True:
        noise = boundary_profile(params, entrants, floors)
        e = tuple(1 if i in entrants else 0 for i in range(params.K))
        out = play(params, noise, e, e)
        losers = [i for i in entrants if out.u_platforms[i] < -settings.tie_tol]
        if not losers:
            break
        entrants.remove(max(losers, key=lambda i: (params.cost[i], i)))
    res = _result(params, noise, e, settings, floors)
    res.notes.append(f"policy {policy.kind.value}")
    if res.status is Status.VERIFIED:
        return res
    primary = tuple(sorted(entrants))
    for s in _fallback_sets(params, order, len(primary), {primary}):
        cand_e = tuple(1 if i in s else 0 for i in range(params.K))
        cand = boundary_profile(params, s, floors)
        if verify_equilibrium(params, cand, cand_e, settings, floors, fail_fast=True).verified:
            found = _result(params, cand, cand_e, settings, floors)
            found.notes += [f"policy {policy.kind.value}", f"found entrant set {list(s)}"]
            return found
    res.notes.append("no boundary candidate under the mandate passed verification")
    return res


def _uniform_info(params: MarketParams, sigma_bar: float, members) -> float:
    s = np.full(params.K, sigma_bar, dtype=float)
    return _solve_info(params.gamma_array, s, list(members))


def mandate_entry_threshold(params: MarketParams, sigma_bar: float,
                            settings: SolverSettings = DEFAULT_SETTINGS,
                            members: Sequence[int] | None = None) -> float:
    """Smallest beta at which every high-cost platform covers its cost under a uniform mandate.

    ``members`` restricts the platforms that sell data (all by default); the
    result is floored at the unregulated all-entry threshold.
    """
    if not math.isfinite(sigma_bar) or sigma_bar < 0:
        raise InvalidParams(f"sigma_bar must be finite and >= 0, got {sigma_bar}", "sigma_bar")
    members = list(range(params.K)) if members is None else sorted(members)
    Hb = params.h_buyer
    full = float(Hb(_uniform_info(params, sigma_bar, members)))
    need = 0.0
    for i in members:
        c = params.cost[i]
        if c <= 0.5:
            continue
        m = full - float(Hb(_uniform_info(params, sigma_bar, [j for j in members if j != i])))
        if m <= 0 or (c - 0.5) / m > settings.mandate_cap:
            raise DegenerateMandate(
                f"marginal information {m:.3g} at sigma_bar={sigma_bar:.6g} is too small "
                f"for platform {i} to cover its cost")
        need = max(need, (c - 0.5) / m)
    return max(beta_thresholds(params, settings).beta_bar, need)


@dataclass
class PolicyOutcome:
    name: str
    policy: RegulationPolicy
    result: EquilibriumResult
    sigma_bar: float | None = None

    @property
    def u_user(self) -> float:
        return self.result.outcome.u_user

    @property
    def welfare(self) -> float:
        return self.result.welfare


@dataclass
class PolicyComparison:
    outcomes: list
    winner: str
    predicted: str | None = None
    certificate: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def ordering(self) -> list:
        ranked = sorted(enumerate(self.outcomes), key=lambda p: (-p[1].u_user, p[0]))
        return [o.name for _, o in ranked]

    def get(self, name: str) -> PolicyOutcome:
        for o in self.outcomes:
            if o.name == name:
                return o
        raise KeyError(name)

    def rows(self) -> list:
        return [(o.name, o.policy.kind.value, o.sigma_bar, o.result.status.value,
                 len(o.result.entrants), o.u_user, o.welfare) for o in self.outcomes]


def default_sigma_grid() -> list:
    """Noise floors whose variances are 32 log-spaced points in [1e-2, 1e4]."""
    return [float(np.sqrt(v)) for v in np.logspace(-2, 4, 32)]


def _winner(outcomes) -> str:
    best = max(range(len(outcomes)), key=lambda k: (outcomes[k].u_user, -k))
    return outcomes[best].name


def _uniform_beats_ban(params, sigma_bar, low):
    loss = params.alpha * float(params.h_user(_uniform_info(params, sigma_bar, range(params.K))))
    return SERVICE_INFO * params.K - loss > SERVICE_INFO * low


def compare_ban_vs_uniform(params: MarketParams, sigma_grid: Sequence[float] | None = None,
                           settings: SolverSettings = DEFAULT_SETTINGS) -> PolicyComparison:
    """User utility under a full ban versus each uniform mandate on the grid."""
    grid = default_sigma_grid() if sigma_grid is None else [float(s) for s in sigma_grid]
    K = params.K
    base = solve(params, settings)
    outcomes = [PolicyOutcome("ban_all", RegulationPolicy.ban_all(K),
                              solve_with_policy(params, RegulationPolicy.ban_all(K), settings, base))]
    for sb in grid:
        pol = RegulationPolicy.uniform(K, sb)
        outcomes.append(PolicyOutcome(f"uniform:{sb!r}", pol,
                                      solve_with_policy(params, pol, settings, base), sb))
    comp = PolicyComparison(outcomes, _winner(outcomes))
    low = len(params.low_cost())
    if low == K:
        comp.predicted = "ban_all"
        return comp
    try:
        th = beta_thresholds(params, settings)
    except AssumptionViolated:
        comp.notes.append("zero noise does not deter sharing; no prediction")
        return comp
    if params.beta <= th.beta_under:
        comp.predicted = "ban_all"
        return comp
    for sb in grid:
        if not _uniform_beats_ban(params, sb, low):
            continue
        try:
            if params.beta >= mandate_entry_threshold(params, sb, settings):
                comp.predicted = "uniform"
                break
        except DegenerateMandate:
            continue
    return comp


def _nonuniform_policy(params: MarketParams, sigma_bar: float) -> RegulationPolicy:
    return RegulationPolicy.nonuniform(
        [math.inf if c <= 0.5 else sigma_bar for c in params.cost])


def optimal_nonuniform(params: MarketParams, sigma_grid: Sequence[float] | None = None,
                       settings: SolverSettings = DEFAULT_SETTINGS) -> PolicyComparison:
    """Ban low-cost platforms from selling and put a common floor on high-cost ones.

    Compares that policy with the full ban and every uniform mandate on the
    grid, and records whether the chain nonuniform >= uniform >= ban holds
    at the best floor together with the beta needed for full entry.
    """
    grid = default_sigma_grid() if sigma_grid is None else [float(s) for s in sigma_grid]
    K = params.K
    high = params.high_cost()
    base = solve(params, settings)
    ban = PolicyOutcome("ban_all", RegulationPolicy.ban_all(K),
                        solve_with_policy(params, RegulationPolicy.ban_all(K), settings, base))
    if not high:
        comp = PolicyComparison([ban], "ban_all", "ban_all")
        comp.notes.append("no high-cost platform: a full ban is optimal")
        return comp
    outcomes = [ban]
    for sb in grid:
        pol = RegulationPolicy.uniform(K, sb)
        outcomes.append(PolicyOutcome(f"uniform:{sb!r}", pol,
                                      solve_with_policy(params, pol, settings, base), sb))
        pol = _nonuniform_policy(params, sb)
        outcomes.append(PolicyOutcome(f"nonuniform:{sb!r}", pol,
                                      solve_with_policy(params, pol, settings, base), sb))
    comp = PolicyComparison(outcomes, _winner(outcomes), "nonuniform")
    if len(high) == K:
        comp.notes.append("every platform is high-cost: nonuniform coincides with uniform")
    best_uniform = max((o for o in outcomes if o.name.startswith("uniform")), key=lambda o: o.u_user)
    best_non = max((o for o in outcomes if o.name.startswith("nonuniform")), key=lambda o: o.u_user)
    sb = best_non.sigma_bar
    try:
        beta_hat = max(mandate_entry_threshold(params, sb, settings),
                       mandate_entry_threshold(params, sb, settings, members=high))
    except (DegenerateMandate, AssumptionViolated) as exc:
        beta_hat = math.inf
        comp.notes.append(str(exc))
    tol = settings.tol
    comp.certificate = {
        "sigma_bar": sb,
        "beta_hat": beta_hat,
        "in_regime": params.beta >= beta_hat,
        "nonuniform_ge_uniform": best_non.u_user >= best_uniform.u_user - tol,
        "uniform_ge_ban": best_uniform.u_user >= ban.u_user - tol,
        "all_high_enter": all(best_non.result.entry[i] for i in high),
    }
    return comp
