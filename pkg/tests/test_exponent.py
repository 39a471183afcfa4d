import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from varlex import ExponentField, GridDomain, decay_check, dual_exponent, log_holder_check, parse_exponent
from varlex.exponent import conjugate


def test_self_dual_two():
    d = GridDomain.interval(0, 1, 32)
    q = dual_exponent(ExponentField.constant(d, 2.0))
    np.testing.assert_allclose(q.samples, 2.0)


def test_conjugate_of_one_is_infinite():
    d = GridDomain.interval(0, 1, 10)
    p = ExponentField.from_callable(d, lambda x: np.where(x < 0.5, 1.0, 3.0))
    q = dual_exponent(p)
    assert q.infinite[:5].all() and not q.infinite[5:].any()
    assert math.isinf(q.q_plus) and q.q_minus == pytest.approx(1.5)


def test_affine_dual_spot_values():
    d = GridDomain.interval(0, 1, 1000)
    q = dual_exponent(ExponentField.from_callable(d, lambda x: 2 + x))
    for x in (0.0, 0.5, 1.0):
        i = min(int(x * 1000), 999)
        xc = d.centers[i, 0]
        assert q.samples[i] == pytest.approx((2 + xc) / (1 + xc))
    assert q.q_minus == pytest.approx(1.5, abs=1e-3)


@given(st.floats(1.0 + 1e-6, 50.0))
def test_conjugate_is_involution(p):
    q = conjugate(np.array([p]))
    assert 1 / p + 1 / q[0] == pytest.approx(1.0)
    assert conjugate(q)[0] == pytest.approx(p, rel=1e-9)


def test_exponent_range_validation():
    d = GridDomain.interval(0, 1, 4)
    with pytest.raises(ValueError):
        ExponentField.constant(d, 0.5)
    with pytest.raises(ValueError):
        ExponentField.constant(d, math.inf)


def test_log_holder_constant_exponent_is_zero():
    d = GridDomain.interval(0, 1, 64)
    assert log_holder_check(ExponentField.constant(d, 2.5)).constant == 0.0


def test_log_holder_affine_matches_one_over_e():
    d = GridDomain.interval(0, 1, 1024)
    r = log_holder_check(ExponentField.from_callable(d, lambda x: 2 + x))
    # max of t * (-ln t) on (0, 1/2] is 1/e at t = 1/e
    assert r.exhaustive
    assert r.constant == pytest.approx(1 / math.e, abs=1e-5)
    assert r.distance == pytest.approx(1 / math.e, abs=2e-3)


def test_log_holder_jump_grows_under_refinement():
    values = []
    for cells in (64, 256, 1024):
        d = GridDomain.interval(0, 1, cells)
        p = ExponentField.from_callable(d, lambda x: np.where(x < 0.5, 2.0, 3.0))
        r = log_holder_check(p)
        values.append(r.constant)
        assert r.constant == pytest.approx(-math.log(1 / cells), rel=1e-9)
    assert values[0] < values[1] < values[2]


def test_log_holder_subsampled_mode_is_seeded():
    d = GridDomain.box((0, 0), (1, 1), (40, 40))
    p = ExponentField.from_callable(d, lambda x, y: 2 + 0.5 * np.sin(2 * np.pi * x) * y)
    a = log_holder_check(p, max_pairs=5000, seed=3)
    b = log_holder_check(p, max_pairs=5000, seed=3)
    assert not a.exhaustive and a == b
    assert a.constant <= log_holder_check(p).constant + 1e-12


def test_decay_values():
    d = GridDomain.interval(0, 1, 4096)
    assert decay_check(ExponentField.constant(d, 2.0), 2.0) == 0.0
    c = decay_check(ExponentField.from_callable(d, lambda x: 2 + x), 2.0)
    assert c == pytest.approx(math.log(3), abs=1e-3)
    p = ExponentField.from_callable(d, lambda x: 1 + 2 * x)
    assert decay_check(p, 2.0) <= math.log(3) + 1e-12


def test_parse_exponent_presets():
    d = GridDomain.interval(0, 1, 100)
    assert parse_exponent("const:3", d).p_minus == 3.0
    p = parse_exponent("affine:1.5,1", d)
    assert p.p_minus == pytest.approx(1.505) and p.p_plus == pytest.approx(2.495)
    s = parse_exponent("sin:2,0.5,1", d)
    assert s.p_plus <= 2.5 and s.p_minus >= 1.5
    for bad in ("cubic:1", "const:", "affine:1", "const:0.5"):
        with pytest.raises(ValueError):
            parse_exponent(bad, d)
