import numpy as np
import pytest

from hardybound import ConfigError, DomainSpec, KernelParams, ParameterError, build_grid
from hardybound import nonlocal_core as nc
from hardybound.solver import (
    CONVERGED,
    DIVERGED,
    SolverConfig,
    StepRule,
    ball_mask,
    coercivity_constants,
    default_ball,
    energy_F_lambda,
    energy_gradient,
    minimize_F_lambda,
)
from oracles import Assembly1D

UNIT = DomainSpec.intervals([[0, 1]])


def _setup(p=2.0, n=32, s=0.5, domain=UNIT):
    params = KernelParams(s, p, domain.dimension)
    grid = build_grid(domain, params, n)
    center, radius = default_ball(domain)
    return params, grid, center, radius


def test_default_ball():
    assert default_ball(DomainSpec.intervals([[0, 1], [2, 4]])) == ((3.0,), 0.5)
    assert default_ball(DomainSpec.rectangle([[0, 1], [0, 2]])) == ((0.5, 1.0), 0.25)


def test_ball_validation():
    params, grid, _, _ = _setup()
    with pytest.raises(ConfigError):
        ball_mask(grid, SolverConfig(0.0, (0.9,), 0.2))
    with pytest.raises(ConfigError):
        ball_mask(grid, SolverConfig(0.0, (0.5, 0.5), 0.1))
    with pytest.raises(ConfigError):
        ball_mask(build_grid(UNIT, params, 2), SolverConfig(0.0, (0.5,), 0.1))


@pytest.mark.parametrize(
    "kwargs",
    [dict(lam=-1.0), dict(ball_radius=0.0), dict(max_iters=0), dict(grad_tol=0.0), dict(memory=-1)],
)
def test_solver_config_validation(kwargs):
    base = dict(lam=0.0, ball_center=(0.5,), ball_radius=0.25)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        SolverConfig(**base)


@pytest.mark.parametrize("kwargs", [dict(initial=0), dict(shrink=1.0), dict(armijo=0)])
def test_step_rule_validation(kwargs):
    with pytest.raises(ConfigError):
        StepRule(**kwargs)


def test_lambda_zero_matches_direct_solve():
    params, grid, center, radius = _setup()
    asm = Assembly1D([[0, 1]], 0.5, 2.0, 32)
    mask = np.abs(asm.x - 0.5) < 0.25
    direct = np.linalg.solve(asm.stiffness(), asm.w * mask)
    res = minimize_F_lambda(params, SolverConfig(0.0, center, radius), grid)
    assert res.status == CONVERGED
    np.testing.assert_allclose(res.minimizer.values, direct, rtol=1e-9)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_gradient_matches_finite_differences(p):
    params, grid, center, radius = _setup(p=p, n=12)
    cfg = SolverConfig(0.7, center, radius)
    u = grid.function(np.random.default_rng(1).normal(size=len(grid)))
    g = energy_gradient(u, params, cfg).values
    eps = 1e-5
    fd = np.array([
        (energy_F_lambda(u + eps * e, params, cfg) - energy_F_lambda(u - eps * e, params, cfg)) / (2 * eps)
        for e in np.eye(len(grid))
    ])
    assert np.max(np.abs(g - fd)) <= 1e-6 * np.max(np.abs(g))


def test_coercivity_bound_holds():
    params, grid, center, radius = _setup(n=24)
    lam_star = Assembly1D([[0, 1]], 0.5, 2.0, 24).eigenpair()[0]
    cfg = SolverConfig(0.5 * lam_star, center, radius)
    c1, inv_c1 = coercivity_constants(grid, cfg, lam_star)
    rng = np.random.default_rng(7)
    for _ in range(50):
        u = grid.function(rng.normal(size=len(grid)) * rng.uniform(0.01, 10))
        S = nc.gagliardo_seminorm_p(u, params)
        assert energy_F_lambda(u, params, cfg) >= c1 * S - inv_c1 - 1e-12 * S
    with pytest.raises(ParameterError):
        coercivity_constants(grid, cfg.with_lambda(lam_star), lam_star)


def test_coercive_and_divergent_regimes():
    params, grid, center, radius = _setup()
    lam_star = Assembly1D([[0, 1]], 0.5, 2.0, 32).eigenpair()[0]
    ok = minimize_F_lambda(params, SolverConfig(0.5 * lam_star, center, radius), grid)
    assert ok.converged and np.all(ok.minimizer.values > 0)
    assert ok.energy < 0
    bad = minimize_F_lambda(params, SolverConfig(2 * lam_star, center, radius), grid)
    assert bad.status == DIVERGED
    # the divergence witness has quotient below lambda
    assert nc.hardy_quotient(bad.minimizer, params) < 2 * lam_star


def test_hardy_reference_floor_detects_divergence():
    params, grid, center, radius = _setup(n=16)
    lam_star = Assembly1D([[0, 1]], 0.5, 2.0, 16).eigenpair()[0]
    cfg = SolverConfig(1.5 * lam_star, center, radius, hardy_reference=lam_star)
    assert minimize_F_lambda(params, cfg, grid).status == DIVERGED


@pytest.mark.parametrize("p", [3.0, 1.5])
def test_nonquadratic_energy_decreases(p):
    params, grid, center, radius = _setup(p=p, n=16)
    res = minimize_F_lambda(params, SolverConfig(0.5, center, radius, max_iters=400), grid)
    assert res.status != DIVERGED
    hist = np.array(res.energy_history)
    assert np.all(np.diff(hist) <= 1e-12 * np.abs(hist[:-1]))
    assert res.grad_residual < 1e-5


def test_solver_is_deterministic():
    params, grid, center, radius = _setup(p=3.0, n=20)
    cfg = SolverConfig(0.8, center, radius)
    a = minimize_F_lambda(params, cfg, grid)
    b = minimize_F_lambda(params, cfg, build_grid(UNIT, params, 20))
    np.testing.assert_array_equal(a.minimizer.values, b.minimizer.values)
    assert a.energy_history == b.energy_history


def test_params_mismatch():
    params, grid, center, radius = _setup()
    with pytest.raises(ParameterError):
        minimize_F_lambda(KernelParams(0.4, 2.0), SolverConfig(0.0, center, radius), grid)


def test_two_dimensional_solve():
    params, grid, center, radius = _setup(n=8, domain=DomainSpec.rectangle([[0, 1], [0, 1]]))
    res = minimize_F_lambda(params, SolverConfig(0.3, center, radius), grid)
    assert res.converged and np.all(res.minimizer.values > 0)


def test_energy_examples():
    params, grid, center, radius = _setup(n=8)
    cfg = SolverConfig(0.0, center, radius)
    zero = grid.function(np.zeros(len(grid)))
    assert energy_F_lambda(zero, params, cfg) == 0.0
    mask = ball_mask(grid, cfg)
    np.testing.assert_array_equal(energy_gradient(zero, params, cfg).values, -grid.weights * mask)
    i = int(np.flatnonzero(mask)[0])
    e = np.zeros(len(grid))
    e[i] = 1.0
    asm = Assembly1D([[0, 1]], 0.5, 2.0, 8)
    assert energy_F_lambda(grid.function(e), params, cfg) == pytest.approx(asm.seminorm(e) / 2 - asm.w[i], rel=1e-14)


def test_energy_decreases_in_lambda(rng):
    params, grid, center, radius = _setup(p=3.0, n=10)
    u = grid.function(rng.normal(size=len(grid)))
    energies = [energy_F_lambda(u, params, SolverConfig(lam, center, radius)) for lam in (0, 0.5, 1, 2)]
    assert all(b < a for a, b in zip(energies, energies[1:]))


def test_gradient_superposition_p2(rng):
    params, grid, center, radius = _setup(n=12)
    cfg = SolverConfig(0.0, center, radius)
    u, v = grid.function(rng.normal(size=len(grid))), grid.function(rng.normal(size=len(grid)))
    g0 = energy_gradient(grid.function(np.zeros(len(grid))), params, cfg).values
    lhs = energy_gradient(u + v, params, cfg).values - g0
    rhs = (energy_gradient(u, params, cfg).values - g0) + (energy_gradient(v, params, cfg).values - g0)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_absolute_value_never_increases_energy(p, rng):
    params, grid, center, radius = _setup(p=p, n=12)
    cfg = SolverConfig(0.5, center, radius)
    for _ in range(200):
        u = grid.function(rng.normal(size=len(grid)))
        assert energy_F_lambda(abs(u), params, cfg) <= energy_F_lambda(u, params, cfg) + 1e-13


@pytest.mark.parametrize("center,radius", [((0.3,), 0.1), ((0.7,), 0.2), ((0.5,), 0.45)])
def test_ball_placement_changes_witness_not_validity(center, radius):
    # every admissible ball yields a certified supersolution below the eigenvalue
    from hardybound.certificates import certify_lower_bound, verify_weak_supersolution

    params, grid, _, _ = _setup(n=32)
    lam_star = Assembly1D([[0, 1]], 0.5, 2.0, 32).eigenpair()[0]
    res = minimize_F_lambda(params, SolverConfig(0.9 * lam_star, center, radius), grid)
    assert res.converged
    cert = certify_lower_bound(res.minimizer, params)
    assert 0.9 * lam_star * (1 - 1e-6) <= cert.lambda_lo <= lam_star
    assert verify_weak_supersolution(res.minimizer, cert.lambda_lo, params).passed
