"""Equilibrium solver for a data market with one user, competing platforms and a data buyer."""

from types import ModuleType as _ModuleType

from .equilibrium import (EntrySequence, EquilibriumResult, Status, Thresholds,
                          VerificationCertificate, alpha_bar, beta_thresholds, boundary_profile,
                          candidate_profile, candidate_ratio, deviation_noise_bound,
                          deviation_ratio, entry_threshold_sequence, solve,
                          symmetric_alpha_threshold, verify_equilibrium)
from .errors import (AssumptionViolated, DataMarketError, DegenerateMandate, InfeasibleCandidate,
                     InvalidParams, ScenarioError, SearchLimitExceeded, SubstitutesViolated,
                     UnsupportedK)
from .harness import (BetaSweep, RegionGrid, RegionGridSpec, beta_sweep, build_report,
                      recompute_report, region_grid, run_scenario)
from .info import (gammas_from_vectors, info_from_ratios, info_table, marginal_info,
                   revealed_info, revealed_info_pair, revealed_info_symmetric)
from .params import (DEFAULT_SETTINGS, IDENTITY, LOG1P, MarketParams, NoiseProfile,
                     SolverSettings, UtilityShape)
from .properties import property_suite
from .regulation import (PolicyComparison, PolicyKind, RegulationPolicy, compare_ban_vs_uniform,
                         mandate_entry_threshold, optimal_nonuniform, solve_with_policy)
from .scenario import Scenario
from .stage import (StageOutcome, check_privacy_assumption, equilibrium_prices, play,
                    region_of, stage_utilities, user_best_response, welfare)

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, _ModuleType)]
