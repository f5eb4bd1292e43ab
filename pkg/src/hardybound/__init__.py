"""Certified two-sided bounds on discrete fractional (s, p)-Hardy constants.

Lower bounds come from positive supersolution witnesses through the discrete
Picone inequality; upper bounds are Hardy quotients of trial functions.
"""

from importlib.metadata import PackageNotFoundError, version

from .certificates import (
    Certificate,
    HardyBracket,
    RayleighBound,
    SupersolutionReport,
    certify_lower_bound,
    default_trials,
    no_nonzero_constant_check,
    picone_audit,
    upper_bound_rayleigh,
    verify_weak_supersolution,
)
from .config import RunConfig, parse_config
from .driver import BisectConfig, RefinementTable, bracket_hardy_constant, refinement_study
from .errors import (
    ConfigError,
    ContractError,
    DomainError,
    HardyBoundError,
    OutputError,
    ParameterError,
)
from .geometry import (
    DomainSpec,
    GeometryReport,
    distance_power_integral,
    distance_to_boundary,
    geometry_report,
    inradius,
    volume,
)
from .nonlocal_core import (
    Grid,
    GridFunction,
    KernelParams,
    build_grid,
    exterior_tail_weight,
    frac_p_laplacian_action,
    gagliardo_seminorm_p,
    hardy_denominator,
    hardy_quotient,
    j_p,
    pairing,
)
from .report import ResultRecord, emit_results, read_witness, write_witness
from .solver import (
    SolveResult,
    SolverConfig,
    StepRule,
    coercivity_constants,
    energy_F_lambda,
    energy_gradient,
    minimize_F_lambda,
)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "BisectConfig", "Certificate", "ConfigError", "ContractError", "DomainError", "DomainSpec",
    "GeometryReport", "Grid", "GridFunction", "HardyBoundError", "HardyBracket", "KernelParams",
    "OutputError", "ParameterError", "RayleighBound", "RefinementTable", "ResultRecord", "RunConfig",
    "SolveResult", "SolverConfig", "StepRule", "SupersolutionReport",
    "build_grid", "bracket_hardy_constant", "certify_lower_bound", "coercivity_constants",
    "default_trials", "distance_power_integral", "distance_to_boundary", "emit_results",
    "energy_F_lambda", "energy_gradient", "exterior_tail_weight", "frac_p_laplacian_action",
    "gagliardo_seminorm_p", "geometry_report", "hardy_denominator", "hardy_quotient", "inradius",
    "j_p", "minimize_F_lambda", "no_nonzero_constant_check", "pairing", "parse_config",
    "picone_audit", "read_witness", "refinement_study", "upper_bound_rayleigh",
    "verify_weak_supersolution", "volume", "write_witness",
]
