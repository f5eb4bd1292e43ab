import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardybound import DomainError, DomainSpec, ParameterError
from hardybound.geometry import (
    distance_array,
    distance_power_integral,
    distance_to_boundary,
    geometry_report,
    inradius,
    level_set_measure,
    unit_ball_volume,
    volume,
)
from oracles import intervals_distance_integral, rectangle_distance_integral


@st.composite
def interval_unions(draw):
    k = draw(st.integers(1, 4))
    cuts = sorted(draw(st.lists(st.floats(-10, 10), min_size=2 * k, max_size=2 * k, unique=True)))
    pieces = [(a, b) for a, b in zip(cuts[::2], cuts[1::2]) if b - a > 1e-3]
    return DomainSpec.intervals(pieces or [(0.0, 1.0)])


def test_unbounded_domain_rejected():
    with pytest.raises(DomainError, match="half-spaces"):
        DomainSpec.intervals([[0, math.inf]])


@pytest.mark.parametrize(
    "pieces",
    [[[1, 0]], [[0, 2], [1, 3]], []],
)
def test_invalid_intervals(pieces):
    with pytest.raises(DomainError):
        DomainSpec.intervals(pieces)


def test_rectangle_needs_two_sides():
    with pytest.raises(DomainError):
        DomainSpec(2, ((0, 1), (0, 1), (0, 1)))


def test_touching_intervals_are_sorted_and_allowed():
    d = DomainSpec.intervals([[1, 2], [0, 1]])
    assert d.pieces == ((0.0, 1.0), (1.0, 2.0))
    assert not d.contains(1.0)
    assert distance_to_boundary(d, 0.9) == pytest.approx(0.1)


def test_distance_values():
    d = DomainSpec.intervals([[0, 1], [2, 4]])
    assert distance_to_boundary(d, 0.25) == 0.25
    assert distance_to_boundary(d, 3.5) == 0.5
    r = DomainSpec.rectangle([[0, 1], [0, 2]])
    assert distance_to_boundary(r, (0.5, 1.0)) == 0.5
    assert distance_to_boundary(r, (0.9, 1.95)) == pytest.approx(0.05)


def test_distance_outside_raises():
    with pytest.raises(DomainError):
        distance_to_boundary(DomainSpec.intervals([[0, 1], [2, 4]]), 1.5)


def test_inradius_volume():
    d = DomainSpec.intervals([[0, 1], [2, 4]])
    assert inradius(d) == 1.0 and volume(d) == 3.0
    r = DomainSpec.rectangle([[0, 1], [0, 2]])
    assert inradius(r) == 0.5 and volume(r) == 2.0


def test_unit_ball_volume():
    assert unit_ball_volume(1) == 2.0
    assert unit_ball_volume(2) == math.pi


def test_level_set_measure_rectangle():
    r = DomainSpec.rectangle([[0, 1], [0, 2]])
    assert level_set_measure(r, 0.1) == pytest.approx(6 - 0.8)


def test_dilate():
    d = DomainSpec.intervals([[0, 1], [2, 4]]).dilate(3)
    assert d.pieces == ((0.0, 3.0), (6.0, 12.0))
    with pytest.raises(ParameterError):
        d.dilate(0)


def test_integral_unit_interval_closed_form():
    # 2 * int_0^1/2 t^-1/2 dt = 2 sqrt 2
    res = distance_power_integral(DomainSpec.intervals([[0, 1]]), 0.5)
    assert not res.diverged
    assert res.value == pytest.approx(2 * math.sqrt(2), rel=1e-10)


def test_integral_rectangle_closed_form():
    r = DomainSpec.rectangle([[0, 1], [0, 2]])
    for alpha in (0.2, 0.5, 0.9):
        assert distance_power_integral(r, alpha).value == pytest.approx(
            rectangle_distance_integral(1, 2, alpha), rel=1e-10
        )


@pytest.mark.parametrize("alpha", [1.0, 1.3, 2.5])
def test_integral_diverges_1d(alpha):
    res = distance_power_integral(DomainSpec.intervals([[0, 1], [2, 3]]), alpha)
    assert res.diverged and res.value == math.inf


@pytest.mark.parametrize("alpha", [1.0, 1.5, 1.8])
def test_integral_diverges_square(alpha):
    # flat edges make d^-alpha non-integrable for every alpha >= 1
    assert distance_power_integral(DomainSpec.rectangle([[0, 1], [0, 1]]), alpha).diverged


def test_integral_parameter_errors():
    d = DomainSpec.intervals([[0, 1]])
    with pytest.raises(ParameterError):
        distance_power_integral(d, 0.0)
    with pytest.raises(ParameterError):
        distance_power_integral(d, 0.5, refinement=0)
    with pytest.raises(ParameterError):
        geometry_report(d, 1.0)


def test_geometry_report_example():
    rep = geometry_report(DomainSpec.intervals([[0, 2]]), 0.5)
    assert rep.integral_d_neg_alpha == pytest.approx(4.0, rel=1e-10)
    assert rep.inradius <= rep.bound_inradius and rep.volume <= rep.bound_volume
    # (2^alpha / omega_1 * 4)^(1/(1-alpha)) = (sqrt 2 / 2 * 4)^2
    assert rep.bound_inradius == pytest.approx(8.0, rel=1e-10)


def test_geometry_report_square_infinite_bounds():
    rep = geometry_report(DomainSpec.rectangle([[0, 1], [0, 1]]), 1.5)
    assert rep.bound_inradius == math.inf and rep.bound_volume == math.inf


@settings(max_examples=60, deadline=None)
@given(interval_unions(), st.floats(0.01, 0.99))
def test_integral_matches_closed_form(domain, alpha):
    res = distance_power_integral(domain, alpha)
    assert res.value == pytest.approx(intervals_distance_integral(domain.pieces, alpha), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(interval_unions(), st.floats(0.01, 0.99))
def test_geometry_inequalities(domain, alpha):
    rep = geometry_report(domain, alpha)
    assert rep.inradius <= rep.bound_inradius * (1 + 1e-9)
    assert rep.volume <= rep.bound_volume * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(interval_unions(), st.floats(0.1, 10))
def test_distance_scales(domain, t):
    g = np.linspace(0, 1, 7)[1:-1]
    a, b = domain.pieces[0]
    pts = (a + (b - a) * g)[:, None]
    np.testing.assert_allclose(
        distance_array(domain.dilate(t), t * pts), t * distance_array(domain, pts), rtol=1e-12
    )


def test_bounds_near_alpha_equal_n_do_not_overflow():
    rep = geometry_report(DomainSpec.intervals([[0, 9.5]]), 0.9995)
    assert rep.bound_inradius == math.inf and rep.inradius <= rep.bound_inradius
