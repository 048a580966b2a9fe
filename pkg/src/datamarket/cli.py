"""Command-line front end.

Subcommands::

    datamarket solve SCENARIO [--out REPORT.json]
    datamarket region-grid SCENARIO --sigma1 lo:hi:n --sigma2 lo:hi:n [--out CSV] [--figure PNG]
    datamarket beta-sweep SCENARIO --beta lo:hi:n [--out CSV] [--figure PNG]
    datamarket regulate SCENARIO (--policy FILE | --compare | --nonuniform) [--out JSON]
    datamarket properties --seed S --trials N [--sabotage] [--out JSON]

Exit codes: 0 success or Verified, 1 property failure, 2 CandidateOnly,
3 NoEquilibriumFound, 4 validation or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DataMarketError, InvalidParams
from .harness import (EXIT_CODES, EXIT_PROPERTY_FAILURE, EXIT_VALIDATION, RegionGridSpec,
                      beta_sweep, build_report, fmt, parse_range, region_grid, solve_scenario,
                      write_csv)
from .regulation import RegulationPolicy, compare_ban_vs_uniform, optimal_nonuniform, solve_with_policy
from .scenario import Scenario, dumps, load


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _figure_path(args) -> Path | None:
    if args.figure:
        return Path(args.figure)
    if args.out:
        return Path(args.out).with_suffix(".png")
    return None


def cmd_solve(args) -> int:
    scenario = load(args.scenario)
    result = solve_scenario(scenario)
    _emit(dumps(build_report(scenario, result)), args.out)
    return EXIT_CODES[result.status]


def cmd_region_grid(args) -> int:
    scenario = load(args.scenario)
    entry = tuple(int(v) for v in args.entry.split(","))
    spec = RegionGridSpec(parse_range(args.sigma1, "sigma1"), parse_range(args.sigma2, "sigma2"), entry)
    grid = region_grid(scenario.params, spec, scenario.settings.tie_tol)
    _emit(grid.to_csv(), args.out)
    fig = _figure_path(args)
    if fig is not None:
        from .plots import plot_region_grid

        plot_region_grid(grid, fig, f"alpha = {fmt(scenario.params.alpha)}")
    return 0


def cmd_beta_sweep(args) -> int:
    scenario = load(args.scenario)
    lo, hi, n = parse_range(args.beta, "beta")
    sweep = beta_sweep(scenario, lo, hi, n)
    for line in sweep.annotations():
        print(line, file=sys.stderr)
    _emit(sweep.to_csv(), args.out)
    fig = _figure_path(args)
    if fig is not None:
        from .plots import plot_beta_sweep

        plot_beta_sweep(sweep, fig, f"alpha = {fmt(scenario.params.alpha)}")
    return 0


def _comparison_doc(comp) -> dict:
    return {
        "winner": comp.winner,
        "predicted": comp.predicted,
        "ordering": comp.ordering(),
        "certificate": comp.certificate,
        "notes": comp.notes,
        "policies": [
            {"name": o.name, "policy": o.policy.to_dict(), "status": o.result.status.value,
             "entrants": list(o.result.entrants), "u_user": o.u_user, "welfare": o.welfare}
            for o in comp.outcomes
        ],
    }


def cmd_regulate(args) -> int:
    scenario = load(args.scenario)
    params = scenario.params
    if args.policy:
        try:
            raw = json.loads(Path(args.policy).read_text())
        except OSError as exc:
            raise InvalidParams(f"cannot read policy file: {exc.strerror}", "policy") from None
        except json.JSONDecodeError as exc:
            raise InvalidParams(f"{args.policy}:{exc.lineno}: invalid JSON: {exc.msg}", "policy") from None
        policy = RegulationPolicy.from_dict(raw, params.K)
        result = solve_with_policy(params, policy, scenario.settings)
        sc = Scenario(params, policy, scenario.settings)
        _emit(dumps(build_report(sc, result)), args.out)
        return EXIT_CODES[result.status]
    grid = None
    if args.grid:
        grid = [float(v) for v in args.grid.split(",")]
    if args.nonuniform:
        comp = optimal_nonuniform(params, grid, scenario.settings)
    else:
        comp = compare_ban_vs_uniform(params, grid, scenario.settings)
    _emit(dumps(_comparison_doc(comp)), args.out)
    return 0


def cmd_properties(args) -> int:
    from .properties import property_suite

    report = property_suite(args.seed, args.trials, sabotage=args.sabotage)
    for line in report.lines():
        print(line)
    if args.out:
        Path(args.out).write_text(dumps(report.to_dict()))
    return 0 if report.passed else EXIT_PROPERTY_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datamarket", description="Data-market equilibrium solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario and print a JSON report")
    p.add_argument("scenario")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("region-grid", help="label a grid of noise variances by the user's best response")
    p.add_argument("scenario")
    p.add_argument("--sigma1", default="0:10:101", help="variance range lo:hi:n for platform 1")
    p.add_argument("--sigma2", default="0:10:101", help="variance range lo:hi:n for platform 2")
    p.add_argument("--entry", default="1,1", help="entry profile, e.g. 1,1")
    p.add_argument("--out", help="CSV path; a PNG with the same stem is written next to it")
    p.add_argument("--figure", help="explicit PNG path")
    p.set_defaults(func=cmd_region_grid)

    p = sub.add_parser("beta-sweep", help="solve along a range of buyer valuations")
    p.add_argument("scenario")
    p.add_argument("--beta", required=True, help="lo:hi:n")
    p.add_argument("--out", help="CSV path; a PNG with the same stem is written next to it")
    p.add_argument("--figure", help="explicit PNG path")
    p.set_defaults(func=cmd_beta_sweep)

    p = sub.add_parser("regulate", help="solve under a privacy mandate or compare mandates")
    p.add_argument("scenario")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--policy", help="JSON policy file")
    mode.add_argument("--compare", action="store_true", help="full ban against uniform mandates")
    mode.add_argument("--nonuniform", action="store_true", help="also try banning low-cost platforms")
    p.add_argument("--grid", help="comma-separated noise floors (standard deviations)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_regulate)

    p = sub.add_parser("properties", help="run the randomized invariant suite")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--sabotage", action="store_true", help="flip one check to confirm it can fail")
    p.add_argument("--out")
    p.set_defaults(func=cmd_properties)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParams, DataMarketError, ValueError) as exc:
        field = getattr(exc, "field", None)
        suffix = f" [field: {field}]" if field else ""
        print(f"error: {exc}{suffix}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
