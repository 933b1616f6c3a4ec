"""Exact school-choice mechanisms under lower and upper distributional quotas."""

from .audit import (AuditReport, check_envy_free, check_ordinal_efficiency, check_pareto,
                    check_rsd_symmetry, check_strategyproof, check_weak_sp, sd_dominates)
from .core import (Instance, QuotaConstraint, Student, StudentAssignment, TypeAssignment,
                   ViolationReport, adjusted_quotas, check_feasible, compute_opt, type_profile)
from .errors import (ApproxFeasibilityViolated, ContractError, FlowInfeasible, InfeasibleInstance,
                     InvariantViolation, NotLaminar, QuotamechError, SearchTooLarge, StructuralError)
from .fileio import load_fixture, parse_instance, write_instance
from .flows import build_laminar_network, integral_opt_laminar, is_laminar, max_flow_lb
from .generate import gen_instance
from .gps import GpsResult, run_gps
from .lottery import Lottery, RoundingPolytope, build_polytope, certify_approx_feasible, decompose
from .ratlp import LpProblem, solve
from .sdm import SdmResult, run_sdm

__version__ = "0.1.0"

__all__ = [
    "ApproxFeasibilityViolated", "AuditReport", "ContractError", "FlowInfeasible", "GpsResult",
    "InfeasibleInstance", "Instance", "InvariantViolation", "Lottery", "LpProblem", "NotLaminar",
    "QuotaConstraint", "QuotamechError", "RoundingPolytope", "SdmResult", "SearchTooLarge",
    "StructuralError", "Student", "StudentAssignment", "TypeAssignment", "ViolationReport",
    "adjusted_quotas", "build_laminar_network", "build_polytope", "certify_approx_feasible",
    "check_envy_free", "check_feasible", "check_ordinal_efficiency", "check_pareto",
    "check_rsd_symmetry", "check_strategyproof", "check_weak_sp", "compute_opt", "decompose",
    "gen_instance", "integral_opt_laminar", "is_laminar", "load_fixture", "max_flow_lb",
    "parse_instance", "run_gps", "run_sdm", "sd_dominates", "solve", "type_profile",
    "write_instance",
]
