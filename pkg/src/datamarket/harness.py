"""Scenario runs, region grids and beta sweeps, with structured and tabular output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import EquilibriumResult, Status, _entry_thresholds, beta_thresholds, solve
from .errors import AssumptionViolated, InvalidParams, SearchLimitExceeded, UnsupportedK
from .info import SERVICE_INFO, info_table
from .params import MarketParams, NoiseProfile
from .regulation import solve_with_policy
from .scenario import Scenario, decode_float
from .stage import lattice_max_rows, stage_utilities

EXIT_CODES = {Status.VERIFIED: 0, Status.CANDIDATE_ONLY: 2, Status.NO_EQUILIBRIUM: 3}
EXIT_VALIDATION = 4
EXIT_PROPERTY_FAILURE = 1


def fmt(v) -> str:
    """Seventeen significant digits, enough to round-trip a double."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def solve_scenario(scenario: Scenario) -> EquilibriumResult:
    if scenario.policy is None:
        return solve(scenario.params, scenario.settings)
    return solve_with_policy(scenario.params, scenario.policy, scenario.settings)


def build_report(scenario: Scenario, result: EquilibriumResult) -> dict:
    """Everything needed to audit one solve: strategies, payoffs, thresholds and certificate."""
    out = result.outcome
    thresholds = result.thresholds
    if thresholds is None and scenario.params.K >= 2:
        try:
            thresholds = beta_thresholds(scenario.params, scenario.settings)
        except (AssumptionViolated, SearchLimitExceeded):
            thresholds = None
    return {
        "scenario": scenario.to_dict(),
        "status": result.status.value,
        "entrants": list(result.entrants),
        "strategy": {
            "entry": list(out.entry),
            "sigma": list(result.noise.sigma),
            "sharing": list(out.sharing),
            "prices": list(out.prices),
            "buyer": list(out.buyer),
        },
        "noise_variance": list(result.noise.variance),
        "utilities": {
            "user": out.u_user,
            "platforms": list(out.u_platforms),
            "buyer": out.u_buyer,
        },
        "welfare": out.welfare,
        "info_to_buyer": out.info_to_buyer,
        "thresholds": None if thresholds is None else thresholds.to_dict(),
        "certificate": result.certificate.summary(),
        "notes": list(result.notes),
    }


def run_scenario(path) -> tuple[dict, EquilibriumResult]:
    from .scenario import load

    scenario = load(path)
    result = solve_scenario(scenario)
    return build_report(scenario, result), result


def recompute_report(report: dict) -> dict:
    """Rebuild utilities from a report's strategy tuple alone."""
    scenario = Scenario.from_dict(report["scenario"])
    s = report["strategy"]
    noise = NoiseProfile(tuple(decode_float(v) for v in s["sigma"]))
    out = stage_utilities(scenario.params, noise, s["entry"], s["sharing"],
                          [decode_float(v) for v in s["prices"]], s["buyer"])
    return {"user": out.u_user, "platforms": list(out.u_platforms), "buyer": out.u_buyer,
            "welfare": out.welfare}


# ---------------------------------------------------------------------------
# Region grid

def parse_range(text: str, name: str) -> tuple[float, float, int]:
    """Parse ``lo:hi:n``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParams(f"{name} must look like lo:hi:n, got {text!r}", name)
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidParams(f"{name} must look like lo:hi:n, got {text!r}", name) from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise InvalidParams(f"{name} needs finite lo <= hi", name)
    return lo, hi, n


@dataclass(frozen=True)
class RegionGridSpec:
    """Grid over noise variances of two platforms, with a fixed entry profile."""

    sigma1_sq: tuple = (0.0, 10.0, 101)
    sigma2_sq: tuple = (0.0, 10.0, 101)
    entry: tuple = (1, 1)

    def __post_init__(self):
        for name in ("sigma1_sq", "sigma2_sq"):
            lo, hi, n = getattr(self, name)
            if int(n) < 2:
                raise InvalidParams(f"{name} resolution must be >= 2", name)
            if lo < 0 or hi < lo or not math.isfinite(hi):
                raise InvalidParams(f"{name} range must be finite, nonnegative and ordered", name)
        if len(self.entry) != 2 or any(v not in (0, 1) for v in self.entry):
            raise InvalidParams("entry must be a 0/1 pair", "entry")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.sigma1_sq[0], self.sigma1_sq[1], int(self.sigma1_sq[2])),
                np.linspace(self.sigma2_sq[0], self.sigma2_sq[1], int(self.sigma2_sq[2])))

    def refined(self, factor: int = 2) -> "RegionGridSpec":
        """Same ranges with (n - 1) * factor + 1 points, so the old points are kept."""
        r = lambda ax: (ax[0], ax[1], (int(ax[2]) - 1) * factor + 1)
        return RegionGridSpec(r(self.sigma1_sq), r(self.sigma2_sq), self.entry)


@dataclass
class RegionGrid:
    spec: RegionGridSpec
    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray  # shape (len(x), len(y)), entries are sharing bitmasks

    def label(self, i: int, j: int) -> str:
        m = int(self.labels[i, j])
        return f"{m & 1}{m >> 1 & 1}"

    def rows(self):
        for i, a in enumerate(self.x):
            for j, b in enumerate(self.y):
                yield (float(a), float(b), self.label(i, j))

    def present(self) -> set:
        return {f"{m & 1}{m >> 1 & 1}" for m in np.unique(self.labels)}

    def to_csv(self) -> str:
        return write_csv(("sigma1_sq", "sigma2_sq", "label"), self.rows())


def region_grid(params: MarketParams, spec: RegionGridSpec = RegionGridSpec(),
                tie_tol: float = 1e-9) -> RegionGrid:
    """Label every grid point with the user's lattice-maximal sharing profile."""
    if params.K != 2:
        raise UnsupportedK(f"region grids need exactly two platforms, got K={params.K}")
    x, y = spec.axes()
    X, Y = np.meshgrid(x, y, indexing="ij")
    sigma = np.sqrt(np.column_stack([X.ravel(), Y.ravel()]))
    members = [i for i in range(2) if spec.entry[i]]
    info = info_table(params.gamma_array, sigma, members)
    counts = np.array([bin(m).count("1") for m in range(1 << len(members))])
    u = SERVICE_INFO * counts - params.alpha * params.h_user(info)
    local = lattice_max_rows(u, tie_tol)
    labels = np.zeros_like(local)
    for j, i in enumerate(members):
        labels |= ((local >> j) & 1) << i
    return RegionGrid(spec, x, y, labels.reshape(X.shape))


# ---------------------------------------------------------------------------
# Beta sweep

SWEEP_HEADER = ("beta", "status", "entrants", "entrant_count", "analytic_count",
                "u_user", "u_buyer", "welfare", "sigma_sq")


@dataclass
class SweepRow:
    beta: float
    status: str
    entrants: tuple
    analytic_count: int
    u_user: float
    u_buyer: float
    welfare: float
    sigma_sq: tuple

    def as_tuple(self):
        return (self.beta, self.status, ";".join(str(i) for i in self.entrants),
                len(self.entrants), self.analytic_count, self.u_user, self.u_buyer,
                self.welfare, ";".join(fmt(v) for v in self.sigma_sq))


@dataclass
class BetaSweep:
    rows: list
    thresholds: tuple
    order: tuple
    notes: list = field(default_factory=list)

    def to_csv(self) -> str:
        return write_csv(SWEEP_HEADER, (r.as_tuple() for r in self.rows))

    def annotations(self) -> list:
        return [f"platform {i}: enters from beta = {fmt(b)}"
                for i, b in zip(self.order, self.thresholds)]

    def transitions(self, verified_only: bool = True) -> list:
        """(beta, count) at each change of the entrant count along the sweep."""
        out, last = [], None
        for r in self.rows:
            if verified_only and r.status != Status.VERIFIED.value:
                continue
            n = len(r.entrants)
            if n != last:
                out.append((r.beta, n))
                last = n
        return out


def beta_sweep(scenario: Scenario, lo: float, hi: float, steps: int) -> BetaSweep:
    """Solve at ``steps`` evenly spaced values of beta in [lo, hi]."""
    if steps < 2:
        raise InvalidParams("steps must be >= 2", "steps")
    if lo < 0 or hi < lo:
        raise InvalidParams("beta range must satisfy 0 <= lo <= hi", "beta")
    base = scenario.params
    seq = _entry_thresholds(base)
    rows = []
    for beta in np.linspace(lo, hi, steps):
        sc = Scenario(base.with_(beta=float(beta)), scenario.policy, scenario.settings)
        res = solve_scenario(sc)
        rows.append(SweepRow(float(beta), res.status.value, res.entrants,
                             seq.entrant_count(float(beta)), res.outcome.u_user,
                             res.outcome.u_buyer, res.welfare, res.noise.variance))
    return BetaSweep(rows, seq.thresholds, seq.order)
