"""Lower-bound certificates from positive supersolutions, Rayleigh upper bounds.

If ``u > 0`` on every node and ``a = (-Delta_p)^s u`` is its discrete action,
then for every ``eta >= 0`` the discrete Picone inequality gives

    sum_i w_i a_i eta_i^p / u_i^(p-1) <= [eta]^p,

so ``lam_lo = min_i d_i^sp a_i / u_i^(p-1)`` satisfies
``lam_lo sum_i w_i eta_i^p / d_i^sp <= [eta]^p``: a certified lower bound for
the discrete Hardy constant.  Any grid function with nonzero weighted norm
gives an upper bound through its quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import nonlocal_core as nc
from .errors import ContractError, ParameterError
from .geometry import DomainSpec, distance_power_integral, inradius
from .nonlocal_core import Grid, GridFunction, KernelParams

__all__ = [
    "Certificate",
    "SupersolutionReport",
    "RayleighBound",
    "HardyBracket",
    "ConstantCheck",
    "certify_lower_bound",
    "verify_weak_supersolution",
    "picone_audit",
    "upper_bound_rayleigh",
    "default_trials",
    "no_nonzero_constant_check",
]

# relative tolerance used when a certificate re-verifies itself
SELF_CHECK_TOL = 1e-12


@dataclass(frozen=True)
class SupersolutionReport:
    """Per-node residuals ``w_i a_i - lam w_i J_p(u_i) / d_i^sp``.

    ``scale`` is the largest magnitude of either term and sets the roundoff
    level against which ``minimum`` should be judged.
    """

    lam: float
    residuals: np.ndarray
    minimum: float
    worst_node: int
    scale: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.minimum >= -self.tol


@dataclass(frozen=True)
class Certificate:
    lambda_lo: float
    witness: GridFunction
    worst_node: int
    supersolution_residual: float
    picone_violation: float
    clamped: bool = False
    raw_ratio: float = math.nan
    pairing_scale: float = 0.0


@dataclass(frozen=True)
class RayleighBound:
    value: float
    index: int
    trial: GridFunction


@dataclass
class HardyBracket:
    """Certified ``lambda_lo`` and Rayleigh ``lambda_hi`` for one grid."""

    lambda_lo: float
    lambda_hi: float
    params: KernelParams
    domain: DomainSpec
    n: int
    h: float
    certificate: Certificate
    upper_witness: GridFunction
    status: str = "converged"
    provenance: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        return self.lambda_hi - self.lambda_lo

    @property
    def midpoint(self) -> float:
        return (self.lambda_lo + self.lambda_hi) / 2

    @property
    def rel_gap(self) -> float:
        return self.gap / self.lambda_hi

    def to_dict(self) -> dict:
        return {
            "lambda_lo": self.lambda_lo,
            "lambda_hi": self.lambda_hi,
            "gap": self.gap,
            "n": self.n,
            "h": self.h,
            "s": self.params.s,
            "p": self.params.p,
            "domain": self.domain.to_dict(),
            "residuals": {
                "supersolution": self.certificate.supersolution_residual,
                "picone": self.certificate.picone_violation,
            },
            "worst_node": self.certificate.worst_node,
        }


def _require_positive(u: GridFunction) -> None:
    if not np.all(u.values > 0):
        raise ParameterError("the witness must be strictly positive on every node")


def verify_weak_supersolution(
    u: GridFunction, lam: float, params: KernelParams, tol: float | None = None
) -> SupersolutionReport:
    """Test ``u`` against every nonnegative basis bump ``e_i``.

    Nonnegative grid functions are nonnegative combinations of the bumps, so
    the minimum residual being ``>= -tol`` certifies the weak inequality on
    the whole discrete test cone.  ``tol`` defaults to ``1e-12`` times the
    pairing scale.
    """
    _require_positive(u)
    g = u.grid
    paired = g.weights * nc.frac_p_laplacian_action(u, params).values
    weighted = lam * g.hardy_weight * nc.j_p(params, u.values)
    residuals = paired - weighted
    scale = float(max(np.max(np.abs(paired)), np.max(np.abs(weighted))))
    if tol is None:
        tol = SELF_CHECK_TOL * scale
    worst = int(np.argmin(residuals))
    return SupersolutionReport(lam, residuals, float(residuals[worst]), worst, scale, tol)


def picone_audit(u: GridFunction, eta: GridFunction, params: KernelParams) -> float:
    """Largest value of
    ``J_p(u_i - u_j) (eta_i^p / u_i^(p-1) - eta_j^p / u_j^(p-1)) - |eta_i - eta_j|^p``
    over all node pairs; the discrete Picone inequality says it is ``<= 0``."""
    _require_positive(u)
    if not np.all(eta.values >= 0):
        raise ParameterError("the Picone test function must be nonnegative")
    if eta.grid is not u.grid:
        raise ContractError("u and eta live on different grids")
    p = params.p
    uv, ev = u.values, eta.values
    ratio = ev**p / uv ** (p - 1)
    lhs = nc.j_p(params, uv[:, None] - uv[None, :]) * (ratio[:, None] - ratio[None, :])
    rhs = np.abs(ev[:, None] - ev[None, :]) ** p
    return float(np.max(lhs - rhs))


def _picone_probes(u: GridFunction) -> list[GridFunction]:
    rng = np.random.default_rng(0)
    g = u.grid
    probes = [u, g.ones()]
    probes += [g.function(rng.random(len(g))) for _ in range(4)]
    return probes


def certify_lower_bound(u: GridFunction, params: KernelParams) -> Certificate:
    """Certified lower bound ``min_i d_i^sp a_i / u_i^(p-1)`` from a positive witness.

    A negative minimum is clamped to 0 (every positive function certifies
    ``lam = 0``) and flagged.
    """
    _require_positive(u)
    g = u.grid
    a = nc.frac_p_laplacian_action(u, params).values
    ratios = g.dist**params.sp * a / u.values ** (params.p - 1)
    worst = int(np.argmin(ratios))
    raw = float(ratios[worst])
    lam = max(raw, 0.0)
    report = verify_weak_supersolution(u, lam, params)
    violation = max(picone_audit(u, eta, params) for eta in _picone_probes(u))
    return Certificate(
        lambda_lo=lam,
        witness=u,
        worst_node=worst,
        supersolution_residual=report.minimum,
        picone_violation=violation,
        clamped=raw < 0,
        raw_ratio=raw,
        pairing_scale=report.scale,
    )


def upper_bound_rayleigh(trials: Sequence[GridFunction], params: KernelParams) -> RayleighBound:
    """Smallest Hardy quotient over ``trials``."""
    if not trials:
        raise ParameterError("upper_bound_rayleigh needs at least one trial function")
    values = [nc.hardy_quotient(u, params) for u in trials]
    k = int(np.argmin(values))
    return RayleighBound(values[k], k, trials[k])


def default_trials(grid: Grid, n_powers: int = 16, n_hats: int = 3) -> list[GridFunction]:
    """Distance powers ``d^beta`` on a log-spaced sweep of ``beta`` and hat
    functions centred at the deepest node."""
    trials = [grid.function(grid.dist**beta) for beta in np.logspace(-2, 1, n_powers)]
    center = grid.nodes[int(np.argmax(grid.dist))]
    r = np.sqrt(np.sum((grid.nodes - center) ** 2, axis=1))
    for width in inradius(grid.domain) * 2.0 ** -np.arange(n_hats):
        trials.append(grid.function(np.maximum(0.0, 1.0 - r / width)))
    return trials


@dataclass(frozen=True)
class ConstantCheck:
    """Whether ``d^-sp`` is integrable, i.e. whether nonzero constants have
    finite weighted norm on the domain."""

    N: int
    sp: float
    diverged: bool
    value: float

    @property
    def constants_excluded(self) -> bool:
        return self.diverged


def no_nonzero_constant_check(domain: DomainSpec, params: KernelParams) -> ConstantCheck:
    result = distance_power_integral(domain, params.sp)
    return ConstantCheck(domain.dimension, params.sp, result.diverged, result.value)
