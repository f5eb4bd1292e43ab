"""Bounded open sets with piecewise flat boundary and their distance geometry.

Two families are supported: finite unions of disjoint open intervals on the
line, and a single open axis-aligned rectangle in the plane.  For both the
distance to the boundary is an exact min of affine functions, and the level
sets ``{d = t}`` have a measure that is piecewise linear in ``t``.  The latter
turns every integral of a function of ``d`` into a one dimensional integral
(co-area formula), which is what :func:`distance_power_integral` evaluates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "DomainSpec",
    "GeometryReport",
    "DistanceIntegral",
    "unit_ball_volume",
    "distance_to_boundary",
    "distance_array",
    "inradius",
    "volume",
    "level_set_measure",
    "distance_power_integral",
    "geometry_report",
]

# Gauss-Legendre rule used on every dyadic shell; the integrand t^-alpha * m(t)
# is analytic on a shell [t, 2t], so 20 nodes reach double precision.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)

# A shell ratio this close to 1 means the boundary layer does not decay.
_RATIO_FLOOR = 1.0 - 1e-12


@dataclass(frozen=True)
class DomainSpec:
    """Symbolic description of an open set.

    ``pieces`` holds sorted, disjoint intervals ``(a, b)`` when ``dimension``
    is 1 and the two side intervals ``((a1, b1), (a2, b2))`` of one rectangle
    when ``dimension`` is 2.  Touching intervals (``b_i == a_{i+1}``) are
    allowed; the shared endpoint is then a boundary point.
    """

    dimension: int
    pieces: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.dimension}")
        pieces = tuple((float(a), float(b)) for a, b in self.pieces)
        if not pieces:
            raise DomainError("domain has no pieces")
        for a, b in pieces:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise DomainError(
                    "unbounded domains (e.g. half-spaces) are not supported: "
                    f"piece ({a}, {b}) is not finite"
                )
            if not a < b:
                raise DomainError(f"piece ({a}, {b}) has non-positive extent")
        if self.dimension == 1:
            pieces = tuple(sorted(pieces))
            for (a0, b0), (a1, b1) in zip(pieces, pieces[1:]):
                if a1 < b0:
                    raise DomainError(f"intervals ({a0}, {b0}) and ({a1}, {b1}) overlap")
        elif len(pieces) != 2:
            raise DomainError("a 2D domain is one rectangle given by two side intervals")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def intervals(cls, pieces: Sequence[Sequence[float]]) -> "DomainSpec":
        return cls(1, tuple(tuple(p) for p in pieces))

    @classmethod
    def rectangle(cls, sides: Sequence[Sequence[float]]) -> "DomainSpec":
        return cls(2, tuple(tuple(p) for p in sides))

    def dilate(self, t: float) -> "DomainSpec":
        """Return ``t * Omega``."""
        if not t > 0:
            raise ParameterError("dilation factor must be positive")
        return DomainSpec(self.dimension, tuple((t * a, t * b) for a, b in self.pieces))

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            return False
        if self.dimension == 1:
            return any(a < x[0] < b for a, b in self.pieces)
        (a1, b1), (a2, b2) = self.pieces
        return a1 < x[0] < b1 and a2 < x[1] < b2

    def to_dict(self) -> dict:
        key = "intervals" if self.dimension == 1 else "rectangle"
        return {key: [list(p) for p in self.pieces]}


@dataclass(frozen=True)
class DistanceIntegral:
    """Outcome of :func:`distance_power_integral`.

    ``shells`` are the contributions of the dyadic boundary layers
    ``{r 2^-(j+1) < d < r 2^-j}``; ``value`` is ``inf`` when ``diverged``.
    """

    value: float
    diverged: bool
    shells: tuple[float, ...]


@dataclass(frozen=True)
class GeometryReport:
    inradius: float
    volume: float
    alpha: float
    integral_d_neg_alpha: float
    bound_inradius: float
    bound_volume: float
    omega_N: float

    def to_dict(self) -> dict:
        return {
            "inradius": self.inradius,
            "volume": self.volume,
            "alpha": self.alpha,
            "integral_d_neg_alpha": self.integral_d_neg_alpha,
            "bound_inradius": self.bound_inradius,
            "bound_volume": self.bound_volume,
            "omega_N": self.omega_N,
        }


def unit_ball_volume(N: int) -> float:
    return {1: 2.0, 2: math.pi}.get(N) or math.pi ** (N / 2) / math.gamma(N / 2 + 1)


def distance_to_boundary(domain: DomainSpec, x) -> float:
    """Exact distance from ``x`` to the boundary of ``domain``."""
    if not domain.contains(x):
        raise DomainError(f"point {x} is not in the domain")
    return float(distance_array(domain, np.atleast_1d(np.asarray(x, float))[None, :])[0])


def distance_array(domain: DomainSpec, points: np.ndarray) -> np.ndarray:
    """Vectorized boundary distance for an ``(m, N)`` array of interior points.

    Membership is not re-checked; grid builders guarantee it.
    """
    points = np.asarray(points, dtype=float).reshape(-1, domain.dimension)
    if domain.dimension == 1:
        x = points[:, 0]
        out = np.full(x.shape, np.nan)
        for a, b in domain.pieces:
            inside = (x > a) & (x < b)
            out[inside] = np.minimum(x[inside] - a, b - x[inside])
        return out
    (a1, b1), (a2, b2) = domain.pieces
    x, y = points[:, 0], points[:, 1]
    return np.minimum(np.minimum(x - a1, b1 - x), np.minimum(y - a2, b2 - y))


def inradius(domain: DomainSpec) -> float:
    if domain.dimension == 1:
        return max(b - a for a, b in domain.pieces) / 2
    return min(b - a for a, b in domain.pieces) / 2


def volume(domain: DomainSpec) -> float:
    if domain.dimension == 1:
        return sum(b - a for a, b in domain.pieces)
    (a1, b1), (a2, b2) = domain.pieces
    return (b1 - a1) * (b2 - a2)


def level_set_measure(domain: DomainSpec, t: float | np.ndarray) -> np.ndarray:
    """(N-1)-dimensional measure of ``{x in Omega : d(x) = t}``."""
    t = np.asarray(t, dtype=float)
    if domain.dimension == 1:
        half = np.array([(b - a) / 2 for a, b in domain.pieces])
        return 2.0 * np.sum(t[..., None] < half, axis=-1)
    (a1, b1), (a2, b2) = domain.pieces
    lx, ly = b1 - a1, b2 - a2
    r = min(lx, ly) / 2
    return np.where(t < r, 2 * (lx + ly) - 8 * t, 0.0)


def _kinks(domain: DomainSpec) -> list[float]:
    """Values of ``t`` where the level-set measure is not affine."""
    if domain.dimension == 1:
        return sorted({(b - a) / 2 for a, b in domain.pieces})
    return [inradius(domain)]


def _near_boundary_coefficients(domain: DomainSpec) -> tuple[float, float]:
    """``(c0, c1)`` with ``m(t) = c0 + c1 t`` for ``t`` below every kink."""
    if domain.dimension == 1:
        return 2.0 * len(domain.pieces), 0.0
    (a1, b1), (a2, b2) = domain.pieces
    return 2.0 * ((b1 - a1) + (b2 - a2)), -8.0


def _gl_integral(f, lo: float, hi: float) -> float:
    mid, half = (hi + lo) / 2, (hi - lo) / 2
    return float(half * np.sum(_GL_WEIGHTS * f(mid + half * _GL_NODES)))


def distance_power_integral(
    domain: DomainSpec, alpha: float, refinement: int = 40
) -> DistanceIntegral:
    """Integral of ``d^-alpha`` over ``domain``, or a divergence flag.

    The co-area formula reduces the integral to ``int_0^r t^-alpha m(t) dt``
    with ``m`` the level-set measure.  The range is split into dyadic shells
    towards the boundary (``refinement`` of them below the smallest kink of
    ``m``), each integrated by Gauss-Legendre; the remaining layer next to the
    boundary, where ``m`` is affine, is added in closed form.  The integral is
    declared divergent when the last three shell contributions fail to
    decay, i.e. each successive ratio is at least 1.
    """
    if refinement < 1:
        raise ParameterError("refinement must be a positive integer")
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    r = inradius(domain)
    kink_min = _kinks(domain)[0]
    depth = refinement + max(0, math.ceil(math.log2(r / kink_min))) + 3

    # shell breakpoints r, r/2, ..., merged with kinks so m is affine on each piece
    edges = sorted({r * 2.0**-j for j in range(depth + 1)} | set(_kinks(domain)), reverse=True)

    def integrand(t):
        return t ** (-alpha) * level_set_measure(domain, t)

    shells = []
    for j in range(depth):
        hi, lo = r * 2.0**-j, r * 2.0 ** -(j + 1)
        cuts = [e for e in edges if lo <= e <= hi]
        shells.append(sum(_gl_integral(integrand, b, a) for a, b in zip(cuts, cuts[1:])))

    ratios = [s1 / s0 for s0, s1 in zip(shells[-4:], shells[-3:])]
    if all(q >= _RATIO_FLOOR for q in ratios):
        return DistanceIntegral(math.inf, True, tuple(shells))

    eps = r * 2.0**-depth
    c0, c1 = _near_boundary_coefficients(domain)
    if alpha >= 1:
        # only reachable when c0 == 0, which no supported domain has
        return DistanceIntegral(math.inf, True, tuple(shells))
    tail = c0 * eps ** (1 - alpha) / (1 - alpha) + c1 * eps ** (2 - alpha) / (2 - alpha)
    total = math.fsum(shells) + tail
    return DistanceIntegral(total, False, tuple(shells))


def _exp_or_inf(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def geometry_report(domain: DomainSpec, alpha: float, refinement: int = 40) -> GeometryReport:
    """Inradius and volume together with the two upper bounds they obey
    when ``d^-alpha`` is integrable."""
    N = domain.dimension
    if not 0 < alpha < N:
        raise ParameterError(
            f"alpha must lie in (0, N) = (0, {N}); the integral of d^-alpha diverges otherwise"
        )
    omega = unit_ball_volume(N)
    integral = distance_power_integral(domain, alpha, refinement).value
    if math.isfinite(integral):
        # exponents blow up as alpha -> N, so work with logarithms
        log_c = alpha * math.log(2.0) - math.log(omega)
        log_i = math.log(integral)
        bound_r = _exp_or_inf((log_c + log_i) / (N - alpha))
        bound_v = _exp_or_inf((alpha * log_c + N * log_i) / (N - alpha))
    else:
        bound_r = bound_v = math.inf
    return GeometryReport(
        inradius=inradius(domain),
        volume=volume(domain),
        alpha=alpha,
        integral_d_neg_alpha=integral,
        bound_inradius=bound_r,
        bound_volume=bound_v,
        omega_N=omega,
    )
