"""The single-letter (rate, distortion, leakage) region and its solvers."""

from .blahut import RDSweep, rd_curve, rd_sweep
from .checks import ConvexityReport, InclusionReport, convexity_certificate, inclusion_check
from .leakage import (LeakageResult, Membership, RateResult, TradeoffPoint, membership,
                      min_leakage, min_leakage_case, min_rate_under_cap, rate_at_min_leakage)
from .oracle import BudgetError, GridTable, OracleResult, grid_oracle
from .params import InfeasibleError, SolverError, SolverParams

__all__ = [
    "RDSweep", "rd_curve", "rd_sweep",
    "ConvexityReport", "InclusionReport", "convexity_certificate", "inclusion_check",
    "LeakageResult", "Membership", "RateResult", "TradeoffPoint", "membership",
    "min_leakage", "min_leakage_case", "min_rate_under_cap", "rate_at_min_leakage",
    "BudgetError", "GridTable", "OracleResult", "grid_oracle",
    "InfeasibleError", "SolverError", "SolverParams",
]
