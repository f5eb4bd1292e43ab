"""Minimization of the penalized Hardy energy

    F(u) = [u]^p / p - (lam / p) int |u|^p d^-sp - int_B u

over grid functions, where ``B`` is a ball compactly inside ``Omega``.  For
``lam`` below the discrete Hardy constant ``F`` is coercive and its minimizer
is a positive solution of ``(-Delta_p)^s u = lam u^(p-1) d^-sp + 1_B``, hence a
supersolution at level ``lam``.  Above the constant ``F`` is unbounded below,
which the solver detects and reports as ``diverged``.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import nonlocal_core as nc
from .errors import ConfigError, ParameterError
from .geometry import DomainSpec, inradius
from .nonlocal_core import Grid, GridFunction, KernelParams

__all__ = [
    "StepRule",
    "SolverConfig",
    "SolveResult",
    "default_ball",
    "check_ball",
    "ball_mask",
    "energy_F_lambda",
    "energy_gradient",
    "coercivity_constants",
    "minimize_F_lambda",
]

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max_iters"
DIVERGED = "diverged"

# approximate Wolfe conditions, used only once Armijo is swamped by roundoff
_ROUNDOFF = 1e-12
_WOLFE_SIGMA = 0.9
_WOLFE_DELTA = 0.1


@dataclass(frozen=True)
class StepRule:
    """Armijo backtracking parameters."""

    initial: float = 1.0
    shrink: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 60

    def __post_init__(self) -> None:
        if not self.initial > 0:
            raise ConfigError("step_rule.initial must be positive")
        if not 0 < self.shrink < 1:
            raise ConfigError("step_rule.shrink must lie in (0,1)")
        if not 0 < self.armijo < 1:
            raise ConfigError("step_rule.armijo must lie in (0,1)")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one minimization.

    ``grad_tol`` bounds ``max_i |g_i| / w_i``.  ``memory`` is the number of
    L-BFGS correction pairs (0 gives plain steepest descent).  Divergence is
    declared when an iterate has Hardy quotient below ``lam`` (exact
    unboundedness witness), when its seminorm exceeds ``seminorm_ceiling``
    times that of the initial iterate, or, if ``hardy_reference`` is given,
    when the energy drops below the coercivity floor computed from it.
    """

    lam: float
    ball_center: tuple[float, ...]
    ball_radius: float
    max_iters: int = 5000
    grad_tol: float = 1e-10
    step_rule: StepRule = field(default_factory=StepRule)
    memory: int = 12
    seminorm_ceiling: float = 1e30
    hardy_reference: float | None = None

    def __post_init__(self) -> None:
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ConfigError("lambda must be a finite nonnegative number")
        if not self.ball_radius > 0:
            raise ConfigError("ball_radius must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if not self.grad_tol > 0:
            raise ConfigError("grad_tol must be positive")
        if self.memory < 0:
            raise ConfigError("memory must be nonnegative")
        object.__setattr__(self, "ball_center", tuple(float(c) for c in np.atleast_1d(self.ball_center)))

    def with_lambda(self, lam: float) -> "SolverConfig":
        return SolverConfig(
            lam, self.ball_center, self.ball_radius, self.max_iters, self.grad_tol,
            self.step_rule, self.memory, self.seminorm_ceiling, self.hardy_reference,
        )


@dataclass
class SolveResult:
    minimizer: GridFunction
    energy: float
    grad_residual: float
    iterations: int
    status: str
    energy_history: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def default_ball(domain: DomainSpec) -> tuple[tuple[float, ...], float]:
    """Ball concentric with the deepest piece, radius half the inradius."""
    r = inradius(domain)
    if domain.dimension == 1:
        a, b = max(domain.pieces, key=lambda ab: ab[1] - ab[0])
        return ((a + b) / 2,), r / 2
    (a1, b1), (a2, b2) = domain.pieces
    return ((a1 + b1) / 2, (a2 + b2) / 2), r / 2


def check_ball(domain: DomainSpec, center: tuple[float, ...], radius: float) -> None:
    if len(center) != domain.dimension:
        raise ConfigError("ball_center has the wrong dimension")
    if domain.dimension == 1:
        c = center[0]
        ok = any(a < c - radius and c + radius < b for a, b in domain.pieces)
    else:
        (a1, b1), (a2, b2) = domain.pieces
        x, y = center
        ok = a1 < x - radius and x + radius < b1 and a2 < y - radius and y + radius < b2
    if not ok:
        raise ConfigError("the ball must be compactly contained in the domain")


def ball_mask(grid: Grid, cfg: SolverConfig) -> np.ndarray:
    check_ball(grid.domain, cfg.ball_center, cfg.ball_radius)
    offset = grid.nodes - np.asarray(cfg.ball_center)
    mask = np.sqrt(np.sum(offset**2, axis=1)) < cfg.ball_radius
    if not mask.any():
        raise ConfigError("the ball contains no grid node; refine the grid or enlarge the ball")
    return mask


def energy_F_lambda(u: GridFunction, params: KernelParams, cfg: SolverConfig) -> float:
    mask = ball_mask(u.grid, cfg)
    p = params.p
    seminorm = nc.gagliardo_seminorm_p(u, params)
    weighted = nc.hardy_denominator(u, params)
    source = float(np.sum(u.grid.weights[mask] * u.values[mask]))
    return seminorm / p - cfg.lam / p * weighted - source


def energy_gradient(u: GridFunction, params: KernelParams, cfg: SolverConfig) -> GridFunction:
    """Euclidean gradient of :func:`energy_F_lambda` with respect to the node values:
    ``g_i = w_i (a_i - lam J_p(u_i) / d_i^sp - 1_B(x_i))``."""
    mask = ball_mask(u.grid, cfg)
    g = u.grid
    a = nc.frac_p_laplacian_action(u, params).values
    weighted = a - cfg.lam * nc.j_p(params, u.values) / g.dist**params.sp - mask
    return g.function(g.weights * weighted)


def coercivity_constants(
    grid: Grid, cfg: SolverConfig, hardy_constant: float
) -> tuple[float, float]:
    """``(c1, 1/C1)`` with ``F(u) >= c1 [u]^p - 1/C1`` whenever ``lam < hardy_constant``.

    Young's inequality bounds the source term by
    ``eps/p int_B |u|^p d^-sp + (p-1)/p eps^(-1/(p-1)) int_B d^(sp/(p-1))``
    and the choice ``eps = (h - lam)/2`` gives the constants.
    """
    lam, h = cfg.lam, hardy_constant
    if not 0 <= lam < h:
        raise ParameterError("coercivity constants need 0 <= lambda < hardy_constant")
    p, sp = grid.params.p, grid.params.sp
    mask = ball_mask(grid, cfg)
    eps = (h - lam) / 2
    c1 = (1 - lam / h) / (2 * p)
    inv_c1 = (p - 1) / p * eps ** (-1 / (p - 1)) * float(
        np.sum(grid.weights[mask] * grid.dist[mask] ** (sp / (p - 1)))
    )
    return c1, inv_c1


class _Energy:
    """Fused evaluation of F and its weighted gradient ``g / w`` on raw arrays."""

    def __init__(self, grid: Grid, cfg: SolverConfig, mask: np.ndarray):
        self.grid = grid
        self.p = grid.params.p
        self.lam = cfg.lam
        self.mask = mask.astype(float)
        self.dweight = grid.dist ** (-grid.params.sp)

    def parts(self, v: np.ndarray) -> tuple[float, float, float]:
        """``(F, seminorm, weighted norm)``."""
        g, p = self.grid, self.p
        diff = np.abs(v[:, None] - v[None, :])
        seminorm = float(np.sum(g.kernel * diff**p) + 2.0 * np.sum(g.tail_mass * np.abs(v) ** p))
        weighted = float(np.sum(g.hardy_weight * np.abs(v) ** p))
        source = float(np.sum(g.weights * self.mask * v))
        return seminorm / p - self.lam / p * weighted - source, seminorm, weighted

    def weighted_gradient(self, v: np.ndarray) -> np.ndarray:
        g, p = self.grid, self.p
        flux = np.sum(g.kernel * nc.j_p(p, v[:, None] - v[None, :]), axis=1)
        action = 2.0 * (flux + g.tail_mass * nc.j_p(p, v)) / g.weights
        return action - self.lam * nc.j_p(p, v) * self.dweight - self.mask


def _lbfgs_direction(G, pairs, w, amplitude):
    """Two-loop recursion in the ``w``-weighted inner product."""
    if not pairs:
        return -amplitude * G
    q = G.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.sum(w * s * q)
        alphas.append(a)
        q -= a * y
    s, y, rho = pairs[-1]
    q *= np.sum(w * s * y) / np.sum(w * y * y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.sum(w * y * q)
        q += (a - b) * s
    return -q


def minimize_F_lambda(
    params: KernelParams,
    cfg: SolverConfig,
    grid: Grid,
    initial: np.ndarray | None = None,
) -> SolveResult:
    """Minimize the penalized Hardy energy by backtracking descent.

    Search directions come from limited-memory BFGS in the cell-weighted
    inner product (steepest descent when ``cfg.memory == 0`` or whenever the
    quasi-Newton direction fails to descend); step lengths from Armijo
    backtracking.  The default start is the ball indicator scaled by the
    natural amplitude ``max_B d^(sp/(p-1))``, which makes the iteration
    equivariant under dilations of the domain.  On convergence the absolute
    value of the iterate is returned, which never increases the energy.
    """
    if grid.params != params:
        raise ParameterError("grid was built for different kernel parameters")
    mask = ball_mask(grid, cfg)
    problem = _Energy(grid, cfg, mask)
    w = grid.weights
    p, sp = params.p, params.sp
    amplitude = float(np.max(grid.dist[mask])) ** (sp / (p - 1))
    v = amplitude * mask.astype(float) if initial is None else np.array(initial, dtype=float)

    energy, seminorm0, _ = problem.parts(v)
    G = problem.weighted_gradient(v)
    floor = None
    if cfg.hardy_reference is not None and cfg.lam < cfg.hardy_reference:
        floor = -coercivity_constants(grid, cfg, cfg.hardy_reference)[1] - 1.0
    rule = cfg.step_rule
    pairs: deque = deque(maxlen=max(cfg.memory, 1))
    history = [energy]
    warnings: list[str] = []
    status = MAX_ITERS
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if float(np.max(np.abs(G))) <= cfg.grad_tol:
            status = CONVERGED
            it -= 1
            break
        d = _lbfgs_direction(G, list(pairs) if cfg.memory else [], w, amplitude)
        slope = float(np.sum(w * G * d))
        if not slope < 0:
            pairs.clear()
            d = -amplitude * G
            slope = float(np.sum(w * G * d))
        step = rule.initial
        for _ in range(rule.max_backtracks):
            trial = v + step * d
            new_energy, seminorm, weighted = problem.parts(trial)
            G_new = None
            if new_energy <= energy + rule.armijo * step * slope:
                break
            if new_energy <= energy + _ROUNDOFF * abs(energy):
                # energy differences are below roundoff: approximate Wolfe test
                G_new = problem.weighted_gradient(trial)
                trial_slope = float(np.sum(w * G_new * d))
                if _WOLFE_SIGMA * slope <= trial_slope <= (2 * _WOLFE_DELTA - 1) * slope:
                    break
            step *= rule.shrink
        else:
            warnings.append(f"line search stalled at iteration {it}")
            break
        if G_new is None:
            G_new = problem.weighted_gradient(trial)
        s, y = trial - v, G_new - G
        sy = float(np.sum(w * s * y))
        if cfg.memory and sy > 1e-14 * math.sqrt(float(np.sum(w * s * s) * np.sum(w * y * y))):
            pairs.append((s, y, 1.0 / sy))
        v, G, energy = trial, G_new, new_energy
        history.append(energy)

        if weighted > 0 and seminorm < cfg.lam * weighted:
            status = DIVERGED
            break
        if seminorm > cfg.seminorm_ceiling * seminorm0:
            status = DIVERGED
            warnings.append("seminorm ceiling exceeded")
            break
        if floor is not None and energy < floor:
            status = DIVERGED
            warnings.append("energy fell below the coercivity floor")
            break

    if status == CONVERGED:
        v = np.abs(v)
        energy = problem.parts(v)[0]
        G = problem.weighted_gradient(v)
        if float(np.max(np.abs(G))) > cfg.grad_tol:
            warnings.append("stationarity lost after taking the absolute value")
        if energy > 0:
            warnings.append("converged energy is positive")
        if not np.all(v > 0):
            warnings.append(f"minimizer vanishes at {int(np.sum(v <= 0))} node(s)")
    for msg in warnings:
        log.warning("lambda=%g: %s", cfg.lam, msg)
    return SolveResult(
        minimizer=grid.function(v),
        energy=energy,
        grad_residual=float(np.max(np.abs(G))),
        iterations=it,
        status=status,
        energy_history=history,
        warnings=warnings,
    )
