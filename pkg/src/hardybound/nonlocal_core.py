"""Discrete Gagliardo energy, Hardy weight and fractional p-Laplacian on a cell grid.

Grid functions live on cell midpoints of ``Omega`` and are extended by zero
outside.  With ``K_ij = w_i w_j |x_i - x_j|^-(N+sp)`` (``K_ii = 0``) and the
exterior kernel mass ``rho_i`` the discrete seminorm is

    [u]^p = sum_{i != j} K_ij |u_i - u_j|^p + 2 sum_i w_i rho_i |u_i|^p,

the second sum accounting for both orderings of the pairs ``Omega x Omega^c``.
All reductions go through ``numpy.sum`` over fixed-shape arrays, which uses
pairwise summation in a fixed order, so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special

from .errors import ContractError, DomainError, ParameterError
from .geometry import DomainSpec, distance_array

__all__ = [
    "KernelParams",
    "Grid",
    "GridFunction",
    "build_grid",
    "j_p",
    "exterior_tail_weight",
    "gagliardo_seminorm_p",
    "hardy_denominator",
    "hardy_quotient",
    "frac_p_laplacian_action",
    "pairing",
    "tail_norm",
    "x_norm",
    "embedding_ratio",
]


@dataclass(frozen=True)
class KernelParams:
    s: float
    p: float
    N: int = 1

    def __post_init__(self) -> None:
        if not 0 < self.s < 1:
            raise ParameterError("s must lie in (0,1)")
        if not 1 < self.p < math.inf:
            raise ParameterError("p must lie in (1,inf)")
        if self.N not in (1, 2):
            raise ParameterError("N must be 1 or 2")

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def kernel_exponent(self) -> float:
        return self.N + self.s * self.p


def j_p(params: KernelParams | float, t):
    """``|t|^(p-2) t``, continuous at 0 for every ``p > 1``.

    ``params`` may be a :class:`KernelParams` or the exponent ``p`` itself.
    """
    p = params.p if isinstance(params, KernelParams) else float(params)
    t = np.asarray(t, dtype=float)
    if p == 2:
        return t * 1.0
    return np.sign(t) * np.abs(t) ** (p - 1)


def _tail_weights_1d(domain: DomainSpec, sp: float, x: np.ndarray) -> np.ndarray:
    # complement of the interval union: (-inf, a_1], [b_1, a_2], ..., [b_k, inf)
    pieces = domain.pieces
    total = np.zeros_like(x)
    total += (x - pieces[0][0]) ** (-sp) / sp
    total += (pieces[-1][1] - x) ** (-sp) / sp
    for (_, b), (a, _) in zip(pieces, pieces[1:]):
        if a == b:
            continue
        left = x < b
        near = np.where(left, b - x, x - a)
        far = np.where(left, a - x, x - b)
        total += (near ** (-sp) - far ** (-sp)) / sp
    return total


def _cos_power_integral(phi: np.ndarray, a: float) -> np.ndarray:
    """``int_0^phi cos(t)^a dt`` for ``|phi| <= pi/2`` via the incomplete beta function."""
    b = (a + 1) / 2
    full = 0.5 * special.beta(0.5, b)
    return np.sign(phi) * full * special.betainc(0.5, b, np.sin(phi) ** 2)


def _tail_weights_2d(domain: DomainSpec, sp: float, pts: np.ndarray) -> np.ndarray:
    # In polar coordinates around x the radial integral from the exit distance
    # r(theta) to infinity is r^-sp / sp.  On the angular sector that exits
    # through one side at perpendicular distance delta, r = delta / cos(phi),
    # leaving delta^-sp / sp * int cos^sp over that sector.
    (a1, b1), (a2, b2) = domain.pieces
    x, y = pts[:, 0], pts[:, 1]
    sides = [
        (y - a2, x - a1, b1 - x),
        (b2 - y, b1 - x, x - a1),
        (x - a1, b2 - y, y - a2),
        (b1 - x, y - a2, b2 - y),
    ]
    total = np.zeros(len(pts))
    for delta, left, right in sides:
        span = _cos_power_integral(np.arctan(right / delta), sp) + _cos_power_integral(
            np.arctan(left / delta), sp
        )
        total += delta ** (-sp) / sp * span
    return total


def _tail_weights(domain: DomainSpec, sp: float, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, domain.dimension)
    if domain.dimension == 1:
        return _tail_weights_1d(domain, sp, points[:, 0])
    return _tail_weights_2d(domain, sp, points)


def exterior_tail_weight(domain: DomainSpec, params: KernelParams, x) -> float:
    """``rho(x)``, the integral of ``|x-y|^-(N+sp)`` over the complement of ``domain``."""
    if params.N != domain.dimension:
        raise ContractError("kernel dimension does not match the domain")
    if not domain.contains(x):
        raise DomainError(f"point {x} is not in the domain")
    return float(_tail_weights(domain, params.sp, np.atleast_1d(np.asarray(x, float)))[0])


@dataclass(eq=False)
class Grid:
    """Midpoint quadrature of ``Omega`` for a fixed kernel.

    ``nodes`` has shape ``(m, N)``.  ``spacing`` is the largest cell side and
    ``n`` the resolution requested from :func:`build_grid`.
    """

    domain: DomainSpec
    params: KernelParams
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    dist: np.ndarray
    tail_weight: np.ndarray
    spacing: float

    def __len__(self) -> int:
        return len(self.weights)

    @cached_property
    def kernel(self) -> np.ndarray:
        """Dense ``w_i w_j |x_i - x_j|^-(N+sp)`` with zero diagonal."""
        diff = self.nodes[:, None, :] - self.nodes[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(r, 1.0)
        k = np.outer(self.weights, self.weights) * r ** (-self.params.kernel_exponent)
        np.fill_diagonal(k, 0.0)
        return k

    @cached_property
    def tail_mass(self) -> np.ndarray:
        return self.weights * self.tail_weight

    @cached_property
    def hardy_weight(self) -> np.ndarray:
        """``w_i / d_i^sp``."""
        return self.weights / self.dist**self.params.sp

    def function(self, values) -> "GridFunction":
        return GridFunction(np.asarray(values, dtype=float), self)

    def ones(self) -> "GridFunction":
        return self.function(np.ones(len(self)))

    def evaluate(self, f) -> "GridFunction":
        """Sample ``f`` (called with the ``(m, N)`` node array) on the nodes."""
        return self.function(f(self.nodes))


def _cells_1d(domain: DomainSpec, n: int) -> tuple[np.ndarray, np.ndarray, float]:
    lengths = [b - a for a, b in domain.pieces]
    target = sum(lengths) / n
    nodes, weights, spacing = [], [], 0.0
    for (a, b), length in zip(domain.pieces, lengths):
        m = max(1, round(length / target))
        h = length / m
        nodes.append(a + (np.arange(m) + 0.5) * h)
        weights.append(np.full(m, h))
        spacing = max(spacing, h)
    return np.concatenate(nodes)[:, None], np.concatenate(weights), spacing


def _cells_2d(domain: DomainSpec, n: int) -> tuple[np.ndarray, np.ndarray, float]:
    # n cells along the longer side
    (a1, b1), (a2, b2) = domain.pieces
    longest = max(b1 - a1, b2 - a2)
    m1 = max(1, round(n * (b1 - a1) / longest))
    m2 = max(1, round(n * (b2 - a2) / longest))
    h1, h2 = (b1 - a1) / m1, (b2 - a2) / m2
    xs = a1 + (np.arange(m1) + 0.5) * h1
    ys = a2 + (np.arange(m2) + 0.5) * h2
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    return nodes, np.full(len(nodes), h1 * h2), max(h1, h2)


def build_grid(domain: DomainSpec, params: KernelParams, n: int) -> Grid:
    """Uniform midpoint grid: ``n`` cells in total for interval unions (split
    by length), ``n`` cells along the longer side of a rectangle."""
    if params.N != domain.dimension:
        raise ContractError("kernel dimension does not match the domain")
    if n < 1:
        raise ParameterError("grid size n must be positive")
    if domain.dimension == 1:
        nodes, weights, spacing = _cells_1d(domain, n)
    else:
        nodes, weights, spacing = _cells_2d(domain, n)
    dist = distance_array(domain, nodes)
    tails = _tail_weights(domain, params.sp, nodes)
    if not (np.all(dist > 0) and np.all(tails > 0)):
        raise DomainError("grid construction produced a node on the boundary")
    return Grid(domain, params, n, nodes, weights, dist, tails, spacing)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values on a :class:`Grid`, zero outside ``Omega``."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.grid),):
            raise ContractError(
                f"expected {len(self.grid)} node values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ContractError("grid function has non-finite values")
        object.__setattr__(self, "values", values)

    def _lift(self, other) -> np.ndarray:
        if isinstance(other, GridFunction):
            if other.grid is not self.grid:
                raise ContractError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.values + self._lift(other), self.grid)

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.values - self._lift(other), self.grid)

    def __mul__(self, c):
        return GridFunction(self.values * self._lift(c), self.grid)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(-self.values, self.grid)

    def __abs__(self):
        return GridFunction(np.abs(self.values), self.grid)


def _check(u: GridFunction, params: KernelParams) -> Grid:
    if u.grid.params != params:
        raise ContractError(
            f"grid was built for {u.grid.params}, evaluation requested with {params}"
        )
    return u.grid


def gagliardo_seminorm_p(u: GridFunction, params: KernelParams) -> float:
    """Discrete ``[u]^p`` over ``R^N x R^N`` (not its p-th root)."""
    g = _check(u, params)
    v = u.values
    diff = np.abs(v[:, None] - v[None, :])
    interior = np.sum(g.kernel * diff**params.p)
    exterior = 2.0 * np.sum(g.tail_mass * np.abs(v) ** params.p)
    return float(interior + exterior)


def hardy_denominator(u: GridFunction, params: KernelParams) -> float:
    g = _check(u, params)
    return float(np.sum(g.hardy_weight * np.abs(u.values) ** params.p))


def hardy_quotient(u: GridFunction, params: KernelParams) -> float:
    """Rayleigh-type quotient ``[u]^p / int |u|^p d^-sp``; an upper bound for the
    discrete Hardy constant."""
    den = hardy_denominator(u, params)
    if not den > 0:
        raise ContractError("hardy quotient of a function with zero weighted norm")
    return gagliardo_seminorm_p(u, params) / den


def frac_p_laplacian_action(u: GridFunction, params: KernelParams) -> GridFunction:
    """Node values ``a_i`` with ``sum_i w_i a_i v_i`` equal to the discrete
    weak-form pairing of ``u`` against ``v``.

    ``a_i = 2 sum_{j != i} w_j J_p(u_i - u_j) |x_i - x_j|^-(N+sp) + 2 rho_i J_p(u_i)``.
    """
    g = _check(u, params)
    v = u.values
    jd = j_p(params, v[:, None] - v[None, :])
    flux = np.sum(g.kernel * jd, axis=1) + g.tail_mass * j_p(params, v)
    return GridFunction(2.0 * flux / g.weights, g)


def pairing(u: GridFunction, v: GridFunction, params: KernelParams) -> float:
    """``sum_i w_i a(u)_i v_i``: the left side of the weak supersolution inequality."""
    a = frac_p_laplacian_action(u, params)
    return float(np.sum(u.grid.weights * a.values * u._lift(v)))


def tail_norm(u: GridFunction, params: KernelParams, beta: float) -> float:
    """``sum_i w_i |u_i|^beta / (1 + |x_i|)^(N+sp)``."""
    if not beta > 0:
        raise ParameterError("beta must be positive")
    g = _check(u, params)
    radius = np.sqrt(np.sum(g.nodes**2, axis=1))
    return float(np.sum(g.weights * np.abs(u.values) ** beta / (1 + radius) ** params.kernel_exponent))


def x_norm(u: GridFunction, params: KernelParams) -> float:
    """Seminorm plus weighted Lebesgue norm, each taken to the power ``1/p``."""
    p = params.p
    return gagliardo_seminorm_p(u, params) ** (1 / p) + hardy_denominator(u, params) ** (1 / p)


def embedding_ratio(u: GridFunction, params: KernelParams) -> float:
    """``tail_norm(u, p)^(1/p) / x_norm(u)``.

    The weighted tail norm is controlled by the X-norm with a domain-dependent
    constant that is not known explicitly; the maximum of this ratio over a
    refinement family is an empirical estimate of it.
    """
    norm = x_norm(u, params)
    if not norm > 0:
        raise ContractError("embedding ratio of the zero function")
    return tail_norm(u, params, params.p) ** (1 / params.p) / norm
