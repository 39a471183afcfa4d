import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from varlex import (
    GridDomain,
    GridFunction,
    IndicatorSet,
    ball_indicator,
    box_indicator,
    integrate,
    symmetric_difference_measure,
)


def test_integrate_constants_and_affine():
    d = GridDomain.interval(0, 1, 4096)
    assert integrate(GridFunction.constant(d, 1.0)) == pytest.approx(1.0, abs=1e-14)
    assert integrate(GridFunction.zeros(d)) == 0.0
    assert integrate(GridFunction.from_callable(d, lambda x: x)) == pytest.approx(0.5, abs=1e-9)


def test_domain_geometry():
    d = GridDomain.box((0, -1), (2, 1), (4, 8))
    assert d.dim == 2 and d.shape == (4, 8) and d.size == 32
    np.testing.assert_allclose(d.spacing, [0.5, 0.25])
    assert d.cell_volume == pytest.approx(0.125)
    assert d.measure == pytest.approx(4.0)
    assert d.centers[0].tolist() == [0.25, -0.875]
    assert d.centers[1].tolist() == [0.25, -0.625]  # row-major


def test_domain_rejects_bad_input():
    with pytest.raises(ValueError):
        GridDomain.interval(1, 0, 8)
    with pytest.raises(ValueError):
        GridDomain.interval(0, 1, 0)


def test_locate_and_zero_extension():
    d = GridDomain.interval(0, 1, 10)
    f = GridFunction.from_callable(d, lambda x: x)
    assert d.locate(np.array([[0.05], [0.99], [1.5], [-0.1]])).tolist() == [0, 9, -1, -1]
    assert f(np.array([[0.05], [2.0]])).tolist() == [0.05, 0.0]


def test_ball_measure_1d():
    d = GridDomain.interval(0, 1, 1000)
    b = ball_indicator(0.5, 0.1, d)
    assert abs(b.measure - 0.2) <= d.max_spacing


def test_ball_measure_2d_against_area_formula():
    d = GridDomain.box((0, 0), (1, 1), (512, 512))
    b = ball_indicator((0.5, 0.5), 0.25, d)
    # boundary cells: perimeter times cell diagonal bounds the count error
    assert abs(b.measure - math.pi * 0.25**2) <= 2 * math.pi * 0.25 * math.sqrt(2) / 512


def test_ball_outside_domain_is_empty():
    d = GridDomain.interval(0, 1, 100)
    b = ball_indicator(3.0, 0.5, d)
    assert b.is_empty() and b.measure == 0.0


def test_ball_rejects_nonpositive_radius():
    d = GridDomain.interval(0, 1, 10)
    with pytest.raises(ValueError):
        ball_indicator(0.5, 0.0, d)


def test_symmetric_difference_trivial_cases():
    d = GridDomain.interval(0, 1, 400)
    a = box_indicator(0.0, 0.25, d)
    b = box_indicator(0.5, 0.9, d)
    assert symmetric_difference_measure(a, a) == 0.0
    assert symmetric_difference_measure(a, b) == pytest.approx(a.measure + b.measure)


@given(u=st.floats(0.0, 0.1), x=st.floats(0.3, 0.7))
def test_shifted_ball_difference_is_twice_shift(u, x):
    d = GridDomain.interval(0, 1, 2000)
    h = 0.1
    a, b = ball_indicator(x, h, d), ball_indicator(x + u, h, d)
    assert abs(symmetric_difference_measure(a, b) - 2 * u) <= 2 * d.max_spacing + 1e-12


masks = st.lists(st.booleans(), min_size=16, max_size=16)


@given(m1=masks, m2=masks)
def test_set_algebra_identities(m1, m2):
    d = GridDomain.interval(0, 1, 16)
    A, B = IndicatorSet(d, m1), IndicatorSet(d, m2)
    assert (A | B).measure == pytest.approx(A.measure + B.measure - (A & B).measure)
    assert symmetric_difference_measure(A, B) == pytest.approx(((A - B) | (B - A)).measure)
    assert (A ^ B).count == (A - B).count + (B - A).count


@given(c=st.floats(-5, 5, allow_nan=False), n=st.integers(1, 64))
def test_integral_is_linear(c, n):
    d = GridDomain.interval(-1, 2, n)
    f = GridFunction.from_callable(d, np.sin)
    assert integrate(f * c + 1.0) == pytest.approx(c * integrate(f) + 3.0, abs=1e-10)


def test_samples_are_read_only():
    d = GridDomain.interval(0, 1, 4)
    f = GridFunction.constant(d, 1.0)
    with pytest.raises(ValueError):
        f.samples[0] = 2.0
