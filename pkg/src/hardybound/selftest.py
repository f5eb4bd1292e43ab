"""Fixed-seed property suites run by ``hardybound selftest``.

Each suite returns a :class:`SuiteResult`; an exception inside a suite counts
as a failure.  The pairing suite recomputes exterior tails by adaptive
quadrature directly from the domain so it does not share code with the
assembled operator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg

from . import nonlocal_core as nc
from .certificates import certify_lower_bound, default_trials, picone_audit, upper_bound_rayleigh
from .driver import BisectConfig, bracket_hardy_constant
from .geometry import DomainSpec, distance_power_integral, geometry_report
from .nonlocal_core import KernelParams, build_grid
from .solver import DIVERGED, SolverConfig, default_ball, energy_F_lambda, energy_gradient, minimize_F_lambda

__all__ = ["SuiteResult", "SUITES", "run_selftest", "brute_force_pairing", "quadrature_tail", "dense_eigenvalue"]

P_VALUES = (1.5, 2.0, 3.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name:<20} {self.detail} ({self.seconds:.2f}s)"


def random_intervals(rng: np.random.Generator, max_pieces: int = 4) -> DomainSpec:
    k = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(-5.0, 5.0, 2 * k))
    # drop degenerate pieces that a pair of near-equal cuts would create
    pieces = [(a, b) for a, b in zip(cuts[::2], cuts[1::2]) if b - a > 1e-3]
    return DomainSpec.intervals(pieces or [(0.0, 1.0)])


def quadrature_tail(domain: DomainSpec, sp: float, x: np.ndarray) -> float:
    """Integral of ``|x-y|^-(N+sp)`` over the complement of ``domain`` by adaptive quadrature."""
    if domain.dimension == 1:
        x0 = float(x[0])
        ends = [domain.pieces[0][0]] + [e for a, b in zip(domain.pieces, domain.pieces[1:]) for e in (a[1], b[0])]
        ends.append(domain.pieces[-1][1])
        f = lambda y: abs(x0 - y) ** (-(1 + sp))
        total = scipy.integrate.quad(f, -np.inf, ends[0], epsabs=0, epsrel=1e-13)[0]
        total += scipy.integrate.quad(f, ends[-1], np.inf, epsabs=0, epsrel=1e-13)[0]
        for a, b in zip(ends[1:-1:2], ends[2:-1:2]):
            if b > a:
                total += scipy.integrate.quad(f, a, b, epsabs=0, epsrel=1e-13)[0]
        return total
    # polar coordinates: int_0^2pi int_{R(theta)}^inf r^-(1+sp) dr dtheta
    (a1, b1), (a2, b2) = domain.pieces
    px, py = float(x[0]), float(x[1])

    def exit_radius(theta):
        c, s = math.cos(theta), math.sin(theta)
        rx = (b1 - px) / c if c > 0 else (a1 - px) / c if c < 0 else math.inf
        ry = (b2 - py) / s if s > 0 else (a2 - py) / s if s < 0 else math.inf
        return min(rx, ry)

    corners = sorted(math.atan2(cy - py, cx - px) % (2 * math.pi) for cx in (a1, b1) for cy in (a2, b2))
    edges = [0.0] + corners + [2 * math.pi]
    total = 0.0
    for lo, hi in zip(edges, edges[1:]):
        if hi > lo:
            total += scipy.integrate.quad(lambda t: exit_radius(t) ** (-sp) / sp, lo, hi,
                                          epsabs=0, epsrel=1e-13)[0]
    return total


def brute_force_pairing(u, v, params: KernelParams, tails=None) -> float:
    """Exhaustive double sum for the zero-extended weak form, tails by quadrature."""
    g = u.grid
    p = params.p
    m = len(g)
    if tails is None:
        tails = [quadrature_tail(g.domain, params.sp, g.nodes[i]) for i in range(m)]
    total = 0.0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            r = math.dist(g.nodes[i], g.nodes[j])
            t = u.values[i] - u.values[j]
            jt = math.copysign(abs(t) ** (p - 1), t)
            total += g.weights[i] * g.weights[j] * jt * (v.values[i] - v.values[j]) / r ** (params.N + params.sp)
        ui = u.values[i]
        total += 2 * g.weights[i] * tails[i] * math.copysign(abs(ui) ** (p - 1), ui) * v.values[i]
    return total


def dense_eigenvalue(grid) -> float:
    """Smallest generalized eigenvalue of the p = 2 form pair."""
    K = grid.kernel
    A = 2.0 * (np.diag(K.sum(axis=1) + grid.tail_mass) - K)
    M = np.diag(grid.hardy_weight)
    return float(scipy.linalg.eigh(A, M, eigvals_only=True, subset_by_index=[0, 0])[0])


def _picone(rng) -> tuple[bool, str]:
    worst = -math.inf
    domain = DomainSpec.intervals([[0, 1]])
    for p in P_VALUES:
        params = KernelParams(0.5, p)
        g = build_grid(domain, params, 12)
        for _ in range(200):
            u = g.function(rng.uniform(0.05, 2.0, len(g)))
            eta = g.function(rng.uniform(0.0, 2.0, len(g)) * (rng.random(len(g)) < 0.8))
            worst = max(worst, picone_audit(u, eta, params))
    return worst <= 1e-12, f"max violation {worst:.3g} over 600 pairs"


def _gradient(rng) -> tuple[bool, str]:
    domain = DomainSpec.intervals([[0, 1]])
    center, radius = default_ball(domain)
    worst = 0.0
    for p in P_VALUES:
        params = KernelParams(0.5, p)
        g = build_grid(domain, params, 16)
        cfg = SolverConfig(rng.uniform(0, 2), center, radius)
        for _ in range(4):
            u = g.function(rng.normal(size=len(g)))
            grad = energy_gradient(u, params, cfg).values
            eps = 1e-5
            fd = np.empty(len(g))
            for i in range(len(g)):
                e = np.zeros(len(g))
                e[i] = eps
                fd[i] = (energy_F_lambda(u + e, params, cfg) - energy_F_lambda(u - e, params, cfg)) / (2 * eps)
            worst = max(worst, float(np.max(np.abs(grad - fd)) / np.max(np.abs(grad))))
    return worst <= 1e-6, f"max relative FD error {worst:.3g}"


def _pairing(rng) -> tuple[bool, str]:
    worst = 0.0
    cases = [
        (DomainSpec.intervals([[0, 1], [1.5, 2.5]]), 8),
        (DomainSpec.rectangle([[0, 1], [0, 2]]), 4),
    ]
    for domain, n in cases:
        for p in P_VALUES:
            params = KernelParams(0.4, p, domain.dimension)
            g = build_grid(domain, params, n)
            tails = [quadrature_tail(domain, params.sp, x) for x in g.nodes]
            u = g.function(rng.normal(size=len(g)))
            v = g.function(rng.normal(size=len(g)))
            ref = brute_force_pairing(u, v, params, tails)
            worst = max(worst, abs(nc.pairing(u, v, params) - ref) / abs(ref))
    return worst <= 1e-12, f"max relative mismatch {worst:.3g}"


def _sandwich(rng) -> tuple[bool, str]:
    domain = DomainSpec.intervals([[0, 1]])
    notes, ok = [], True
    for p in P_VALUES:
        params = KernelParams(0.5, p)
        g = build_grid(domain, params, 16)
        b = bracket_hardy_constant(domain, params, BisectConfig(), grid=g)
        ok &= b.lambda_lo <= b.lambda_hi
        # any positive function's quotient is an upper bound too
        for _ in range(20):
            ok &= b.lambda_lo <= nc.hardy_quotient(g.function(rng.random(len(g))), params)
        if p == 2.0:
            lam = dense_eigenvalue(g)
            ok &= b.lambda_lo <= lam * (1 + 1e-12) and lam <= b.lambda_hi * (1 + 1e-12)
        notes.append(f"p={p:g}:[{b.lambda_lo:.5g},{b.lambda_hi:.5g}]")
    return bool(ok), " ".join(notes)


def _scaling(rng) -> tuple[bool, str]:
    worst = 0.0
    for domain in (DomainSpec.intervals([[0, 1], [1.25, 2]]), DomainSpec.rectangle([[0, 1], [0, 0.5]])):
        for p in P_VALUES:
            params = KernelParams(0.5, p, domain.dimension)
            g = build_grid(domain, params, 10)
            vals = rng.uniform(0.1, 1.0, len(g))
            base = (
                nc.hardy_quotient(g.function(vals), params),
                certify_lower_bound(g.function(vals), params).raw_ratio,
                upper_bound_rayleigh(default_trials(g), params).value,
            )
            for t in (0.5, 3.0):
                gt = build_grid(domain.dilate(t), params, 10)
                scaled = (
                    nc.hardy_quotient(gt.function(vals), params),
                    certify_lower_bound(gt.function(vals), params).raw_ratio,
                    upper_bound_rayleigh(default_trials(gt), params).value,
                )
                worst = max(worst, max(abs(a - b) / abs(a) for a, b in zip(base, scaled)))
    return worst <= 1e-12, f"max relative change {worst:.3g}"


def _geometry(rng) -> tuple[bool, str]:
    failures = 0
    for _ in range(100):
        domain = random_intervals(rng)
        rep = geometry_report(domain, float(rng.uniform(0.01, 0.99)))
        failures += not (rep.inradius <= rep.bound_inradius * (1 + 1e-6))
        failures += not (rep.volume <= rep.bound_volume * (1 + 1e-6))
    rect = geometry_report(DomainSpec.rectangle([[0, 1], [0, 2]]), 0.5)
    failures += not (rect.inradius <= rect.bound_inradius and rect.volume <= rect.bound_volume)
    return failures == 0, f"{failures} violated inequalities in 101 domains"


def _divergence(rng) -> tuple[bool, str]:
    missed = 0
    for _ in range(20):
        domain = random_intervals(rng)
        missed += not distance_power_integral(domain, float(rng.uniform(1.0, 2.0))).diverged
    missed += not distance_power_integral(DomainSpec.rectangle([[0, 1], [0, 1]]), 1.5).diverged
    domain = DomainSpec.intervals([[0, 1]])
    params = KernelParams(0.5, 2.0)
    g = build_grid(domain, params, 16)
    lam = dense_eigenvalue(g)
    center, radius = default_ball(domain)
    solver_div = minimize_F_lambda(params, SolverConfig(2 * lam, center, radius), g).status == DIVERGED
    ok = missed == 0 and solver_div
    return ok, f"{missed} missed integral divergences; solver at 2x eigenvalue diverged={solver_div}"


SUITES: dict[str, Callable] = {
    "picone": _picone,
    "gradient": _gradient,
    "pairing-consistency": _pairing,
    "sandwich": _sandwich,
    "scaling-invariance": _scaling,
    "geometry-bounds": _geometry,
    "divergence": _divergence,
}


def run_selftest(seed: int = 0, names=None, echo: Callable[[str], None] | None = print) -> list[SuiteResult]:
    results = []
    for k, (name, suite) in enumerate(SUITES.items()):
        if names is not None and name not in names:
            continue
        rng = np.random.default_rng([seed, k])
        start = time.perf_counter()
        try:
            passed, detail = suite(rng)
        except Exception as exc:  # a crashing suite is a failing suite
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        res = SuiteResult(name, bool(passed), detail, time.perf_counter() - start)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
