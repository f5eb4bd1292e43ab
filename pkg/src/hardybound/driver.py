"""Bisection on lambda: solve for a supersolution, certify it, tighten the bracket.

A probe at ``lam`` minimizes the penalized energy.  If the minimizer exists
it is a positive supersolution at (almost exactly) ``lam``; its certificate
raises the lower bound and its quotient may lower the upper bound.  If the
energy is unbounded below the solver returns an iterate with quotient below
``lam``, which lowers the upper bound.  Reported bounds are only ever
certificate values and Rayleigh quotients, never probe values themselves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nonlocal_core as nc
from .certificates import (
    HardyBracket,
    certify_lower_bound,
    default_trials,
    upper_bound_rayleigh,
    verify_weak_supersolution,
)
from .errors import ParameterError
from .geometry import DomainSpec
from .nonlocal_core import Grid, KernelParams, build_grid
from .solver import DIVERGED, SolverConfig, default_ball, minimize_F_lambda

__all__ = ["BisectConfig", "ProbeRecord", "RefinementTable", "bracket_hardy_constant", "refinement_study"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BisectConfig:
    """``lambda_max=None`` starts from the best distance-power Rayleigh bound;
    ``solver=None`` uses :class:`SolverConfig` defaults with the default ball."""

    lambda_min: float = 0.0
    lambda_max: float | None = None
    max_bisections: int = 40
    rel_gap_target: float = 1e-3
    solver: SolverConfig | None = None
    refinement_levels: tuple[int, ...] = (64,)
    max_stalls: int = 2

    def __post_init__(self) -> None:
        if self.lambda_min < 0:
            raise ParameterError("lambda_min must be nonnegative")
        if self.lambda_max is not None and not self.lambda_min < self.lambda_max:
            raise ParameterError("lambda_max must exceed lambda_min")
        if not self.rel_gap_target > 0:
            raise ParameterError("rel_gap_target must be positive")
        if self.max_bisections < 0:
            raise ParameterError("max_bisections must be nonnegative")
        levels = tuple(int(n) for n in self.refinement_levels)
        if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ParameterError("refinement_levels must be nonempty and increasing")
        object.__setattr__(self, "refinement_levels", levels)


@dataclass(frozen=True)
class ProbeRecord:
    lam: float
    status: str
    energy: float
    iterations: int
    grad_residual: float
    certified: float | None
    quotient: float | None
    lambda_lo: float
    lambda_hi: float


@dataclass
class RefinementTable:
    brackets: list[HardyBracket]
    midpoint_differences: list[float] = field(default_factory=list)

    @property
    def midpoints(self) -> list[float]:
        return [b.midpoint for b in self.brackets]


def _solver_template(domain: DomainSpec, cfg: BisectConfig) -> SolverConfig:
    if cfg.solver is not None:
        return cfg.solver
    center, radius = default_ball(domain)
    return SolverConfig(0.0, center, radius, max_iters=1500)


def bracket_hardy_constant(
    domain: DomainSpec,
    params: KernelParams,
    cfg: BisectConfig,
    n: int | None = None,
    grid: Grid | None = None,
) -> HardyBracket:
    """Two-sided bounds on the discrete Hardy constant of ``domain``.

    The grid has ``n`` cells (default: the first refinement level) unless an
    explicit ``grid`` is passed.
    """
    if grid is None:
        grid = build_grid(domain, params, n if n is not None else cfg.refinement_levels[0])
    template = _solver_template(domain, cfg)

    upper = upper_bound_rayleigh(default_trials(grid), params)
    lambda_hi, upper_witness = upper.value, upper.trial
    search_hi = cfg.lambda_max if cfg.lambda_max is not None else lambda_hi
    if cfg.lambda_max is None and not cfg.lambda_min < search_hi:
        raise ParameterError(
            f"lambda_min={cfg.lambda_min} is not below the Rayleigh bound {search_hi}"
        )

    # every positive constant certifies a (small) positive level
    best = certify_lower_bound(grid.ones(), params)
    lambda_lo = best.lambda_lo
    search_lo = cfg.lambda_min
    probes: list[ProbeRecord] = []
    status = "max_bisections"
    stalls = 0
    decisive = 0

    for _ in range(cfg.max_bisections):
        if lambda_hi - lambda_lo <= cfg.rel_gap_target * lambda_hi:
            status = "converged"
            break
        lo, hi = max(search_lo, lambda_lo), min(search_hi, lambda_hi)
        if not lo < hi:
            status = "exhausted"
            break
        lam = (lo + hi) / 2
        res = minimize_F_lambda(params, template.with_lambda(lam), grid)
        u = res.minimizer if res.status == DIVERGED else abs(res.minimizer)
        certified = quotient = None
        improved = False
        if nc.hardy_denominator(u, params) > 0:
            quotient = nc.hardy_quotient(u, params)
            if quotient < lambda_hi:
                lambda_hi, upper_witness, improved = quotient, u, True
        if res.status == DIVERGED:
            search_hi = lam
            decisive += 1
        elif np.all(u.values > 0):
            cert = certify_lower_bound(u, params)
            certified = cert.lambda_lo
            if verify_weak_supersolution(u, cert.lambda_lo, params).passed and certified > lambda_lo:
                best, lambda_lo, improved = cert, certified, True
            if res.converged:
                search_lo = lam
                decisive += 1
        probes.append(
            ProbeRecord(lam, res.status, res.energy, res.iterations, res.grad_residual,
                        certified, quotient, lambda_lo, lambda_hi)
        )
        if not res.converged and res.status != DIVERGED:
            # a stall shrinks neither search bound; give up after repeated
            # stalls that also failed to improve the reported bounds
            log.info("probe at lambda=%g stalled (%s, residual %.3g)", lam, res.status, res.grad_residual)
            stalls = 0 if improved else stalls + 1
            if stalls >= cfg.max_stalls:
                status = "stalled"
                break
    else:
        if lambda_hi - lambda_lo <= cfg.rel_gap_target * lambda_hi:
            status = "converged"

    if status != "converged" and probes and not decisive:
        status = "inconclusive"
    return HardyBracket(
        lambda_lo=lambda_lo,
        lambda_hi=lambda_hi,
        params=params,
        domain=domain,
        n=grid.n,
        h=grid.spacing,
        certificate=best,
        upper_witness=upper_witness,
        status=status,
        provenance=probes,
    )


def refinement_study(domain: DomainSpec, params: KernelParams, cfg: BisectConfig) -> RefinementTable:
    """One bracket per grid size in ``cfg.refinement_levels`` with successive
    midpoint differences as a self-convergence diagnostic."""
    brackets = [bracket_hardy_constant(domain, params, cfg, n=n) for n in cfg.refinement_levels]
    mids = [b.midpoint for b in brackets]
    diffs = [abs(b - a) for a, b in zip(mids, mids[1:])]
    return RefinementTable(brackets, diffs)
