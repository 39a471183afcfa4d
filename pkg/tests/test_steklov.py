import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from varlex import (
    ExponentField,
    GridDomain,
    GridFunction,
    ball_indicator,
    box_indicator,
    luxemburg_norm,
    make_family,
    measured_theta,
    mollifier_bound_check,
    mollify,
    radial_majorant,
    steklov_apply,
    steklov_matrix,
    theta_bound,
    uniform_bound_check,
    unit_ball_volume,
)
from varlex.families import FunctionFamily as Family
from varlex.steklov import (
    ball_kernel,
    ball_integral,
    equicontinuity_modulus,
    kernel_from_profile,
    lipschitz_bound,
    measured_ball_difference,
    parse_kernel,
    steklov_stencil,
    theta_exact,
    theta_grid_slack,
    triangle_kernel,
)
from varlex.norms import holder_constant


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        unit_ball_volume(3)


def test_unit_ball_volume_vs_grid_count():
    for d, cells in ((GridDomain.interval(-1.5, 1.5, 3001), None), (GridDomain.box((-1.5, -1.5), (1.5, 1.5), (600, 600)), None)):
        m = ball_indicator(np.zeros(d.dim), 1.0, d).measure
        assert m == pytest.approx(unit_ball_volume(d.dim), abs=2 * d.dim * math.pi * d.max_spacing)


class TestSteklovApply:
    def test_constant_interior_and_edge(self):
        d = GridDomain.interval(0, 1, 1000)
        fh = steklov_apply(GridFunction.constant(d, 1.0), 0.1)
        x = d.centers[:, 0]
        interior = (x >= 0.1) & (x <= 0.9)
        # continuum weights miss at most one boundary cell of the ball
        slack = d.max_spacing / 0.2
        np.testing.assert_allclose(fh.samples[interior], 1.0, atol=slack)
        assert fh.samples[0] == pytest.approx(0.5, abs=slack)

    def test_discrete_normalization_preserves_constants(self):
        d = GridDomain.interval(0, 1, 1000)
        fh = steklov_apply(GridFunction.constant(d, 1.0), 0.1, normalization="discrete")
        x = d.centers[:, 0]
        np.testing.assert_allclose(fh.samples[(x > 0.1) & (x < 0.9)], 1.0, rtol=1e-14)

    def test_affine_is_reproduced(self):
        d = GridDomain.interval(0, 1, 2000)
        f = GridFunction.from_callable(d, lambda x: x)
        x = d.centers[:, 0]
        mask = (x >= 0.05) & (x <= 0.95)
        exact = steklov_apply(f, 0.05, normalization="discrete")
        np.testing.assert_allclose(exact.samples[mask], x[mask], atol=1e-12)
        fh = steklov_apply(f, 0.05)
        assert np.all(np.abs(fh.samples[mask] - x[mask]) <= x[mask] * d.max_spacing / 0.1 + 1e-12)

    def test_step_l1_deviation_closed_form(self):
        # f = chi_[0,1/2], h = 0.1: edge loss h/4 at x = 0 plus two ramp triangles h/4 each at 1/2
        h = 0.1
        exact = 3 * h / 4
        fine = GridDomain.interval(0, 1, 2**16)
        x = fine.centers[:, 0]
        # independent oracle: exact average of the step over (x-h, x+h) clipped to [0, 1]
        overlap = np.clip(np.minimum(x + h, 0.5) - np.maximum(x - h, 0.0), 0, None)
        oracle = np.mean(np.abs(overlap / (2 * h) - (x < 0.5)))
        assert oracle == pytest.approx(exact, abs=1e-6)
        d = GridDomain.interval(0, 1, 4096)
        f = box_indicator(0, 0.5, d).indicator()
        p1 = ExponentField.constant(d, 1.0)
        got = luxemburg_norm(steklov_apply(f, h) - f, p1).value
        assert got == pytest.approx(oracle, abs=1e-4)

    def test_under_resolved_guard(self):
        d = GridDomain.interval(0, 1, 100)
        with pytest.raises(ValueError, match="spacing"):
            steklov_apply(GridFunction.constant(d, 1.0), 0.015)
        steklov_apply(GridFunction.constant(d, 1.0), 0.015, allow_under_resolved=True)

    def test_two_dimensional_constant(self):
        d = GridDomain.box((0, 0), (1, 1), (64, 64))
        fh = steklov_apply(GridFunction.constant(d, 1.0), 0.1, normalization="discrete")
        g = fh.as_grid()
        assert g[32, 32] == pytest.approx(1.0)
        assert g[0, 0] < 0.5

    @given(seed=st.integers(0, 1000), h=st.floats(0.02, 0.3))
    def test_averaging_is_sup_contraction(self, seed, h):
        d = GridDomain.interval(0, 1, 200)
        f = GridFunction(d, np.random.default_rng(seed).normal(size=200))
        for norm in ("continuum", "discrete"):
            assert steklov_apply(f, h, normalization=norm).sup() <= f.sup() * (1 + 1e-12)

    @given(seed=st.integers(0, 1000), a=st.floats(-3, 3), b=st.floats(-3, 3))
    def test_linear_and_positive(self, seed, a, b):
        d = GridDomain.box((0, 0), (1, 1), (20, 20))
        rng = np.random.default_rng(seed)
        f, g = (GridFunction(d, rng.normal(size=d.size)) for _ in range(2))
        lhs = steklov_apply(f * a + g * b, 0.15).samples
        rhs = a * steklov_apply(f, 0.15).samples + b * steklov_apply(g, 0.15).samples
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        assert np.all(steklov_apply(abs(f), 0.15).samples >= 0)

    def test_convergence_rate_for_smooth_function(self):
        d = GridDomain.interval(0, 1, 4096)
        p = ExponentField.from_callable(d, lambda x: 2 + np.sin(2 * np.pi * x) / 2)
        f = GridFunction.from_callable(d, lambda x: np.sin(np.pi * x) ** 3)
        errs = [luxemburg_norm(steklov_apply(f, 2.0**-k, normalization="discrete") - f, p).value
                for k in range(2, 8)]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 10 * errs[0] * 2.0**-5

    def test_ball_integral_scaling(self):
        d = GridDomain.interval(0, 1, 500)
        f = GridFunction.from_callable(d, np.exp)
        np.testing.assert_allclose(ball_integral(f, 0.1).samples, 0.2 * steklov_apply(f, 0.1).samples)


class TestMatrix:
    def test_small_assembly(self):
        d = GridDomain.interval(0, 1, 8)
        U = steklov_matrix(d, 0.3)
        rs = U.row_sums()
        # continuum weights: a ball of length 0.6 holds 5 cells of width 1/8
        assert np.all(U.matrix >= 0)
        assert np.all(rs <= 1 + (1 / 8) / 0.6)
        assert rs[4] == pytest.approx(1.0, abs=(1 / 8) / 0.6)
        D = steklov_matrix(d, 0.3, normalization="discrete").row_sums()
        assert np.all(D <= 1 + 1e-15) and D[3] == pytest.approx(1.0)
        assert not U.under_resolved

    def test_ones_reproduce_apply(self):
        d = GridDomain.box((0, 0), (1, 1), (12, 12))
        U = steklov_matrix(d, 0.25)
        one = GridFunction.constant(d, 1.0)
        np.testing.assert_allclose(U @ one.samples, steklov_apply(one, 0.25).samples, rtol=1e-14)

    def test_under_resolved_is_flagged(self):
        d = GridDomain.interval(0, 1, 20)
        U = steklov_matrix(d, 0.04, allow_under_resolved=True)
        assert U.under_resolved
        np.testing.assert_allclose(U.matrix, np.eye(20) * d.cell_volume / 0.08)

    def test_dense_guard(self):
        with pytest.raises(ValueError, match="dense"):
            steklov_matrix(GridDomain.interval(0, 1, 5000), 0.1)

    @given(seed=st.integers(0, 1000))
    def test_matrix_matches_matrix_free(self, seed):
        d = GridDomain.box((0, 0), (1, 2), (10, 14))
        f = np.random.default_rng(seed).normal(size=d.size)
        U = steklov_matrix(d, 0.31, normalization="discrete")
        got = steklov_apply(GridFunction(d, f), 0.31, normalization="discrete").samples
        np.testing.assert_allclose(U @ f, got, atol=1e-13)


class TestMollify:
    def test_ball_kernel_equals_steklov(self):
        d = GridDomain.interval(0, 1, 512)
        f = GridFunction.from_callable(d, lambda x: np.sin(5 * x))
        np.testing.assert_allclose(mollify(f, ball_kernel(1), 0.07).samples,
                                   steklov_apply(f, 0.07).samples, rtol=1e-13, atol=1e-15)

    def test_mass_one_on_interior(self):
        d = GridDomain.interval(0, 1, 2000)
        g = mollify(GridFunction.constant(d, 1.0), triangle_kernel(1), 0.1)
        x = d.centers[:, 0]
        np.testing.assert_allclose(g.samples[(x > 0.1) & (x < 0.9)], 1.0, atol=1e-5)

    def test_triangle_convergence_is_monotone(self):
        d = GridDomain.interval(0, 1, 4096)
        p = ExponentField.from_callable(d, lambda x: 2 + np.sin(2 * np.pi * x) / 2)
        f = GridFunction.from_callable(d, lambda x: np.sin(np.pi * x) ** 2)
        errs = [luxemburg_norm(mollify(f, triangle_kernel(1), t) - f, p).value for t in (0.1, 0.05, 0.025)]
        assert errs[0] > errs[1] > errs[2]

    def test_parse_kernel(self):
        assert parse_kernel("ball", 2).name == "ball"
        assert parse_kernel("gauss-truncated:2", 1).mass == pytest.approx(1.0)
        for bad in ("cube", "gauss-truncated:x", "gauss-truncated:-1"):
            with pytest.raises(ValueError):
                parse_kernel(bad, 1)

    def test_kernel_mass_is_validated(self):
        from varlex.steklov import ApproximateIdentity
        with pytest.raises(ValueError, match="mass"):
            ApproximateIdentity("bad", 1, lambda r: np.ones_like(r), 1.0)
        assert triangle_kernel(2).mass == pytest.approx(1.0)


class TestMajorant:
    def test_ball(self):
        phi = ball_kernel(1)
        maj, total = radial_majorant(phi)
        np.testing.assert_allclose(maj, np.abs(phi.samples))
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_triangle(self):
        phi = triangle_kernel(1)
        maj, total = radial_majorant(phi)
        np.testing.assert_allclose(maj, phi.samples)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_ring_is_flattened(self):
        phi = kernel_from_profile("ring", 1, lambda r: np.exp(-50 * (r - 0.5) ** 2), 1.0)
        maj, _ = radial_majorant(phi)
        r = np.abs(phi.reference_grid.centers[:, 0])
        # brute force sup over radius bins
        brute = np.array([phi.samples[r >= ri].max() for ri in r])
        np.testing.assert_allclose(maj, brute)
        peak = phi.samples.max()
        np.testing.assert_allclose(maj[r <= 0.5], peak)


class TestMollifierBound:
    def test_l2_contraction(self):
        d = GridDomain.interval(0, 1, 1024)
        fam = make_family("random-smooth:10", d, seed=3)
        r = mollifier_bound_check(fam, ball_kernel(1), (0.2, 0.1, 0.05), ExponentField.constant(d, 2.0))
        assert r.c_est <= 1 + 1e-6

    def test_zero_member_rejected(self):
        d = GridDomain.interval(0, 1, 64)
        fam = Family((GridFunction.zeros(d),))
        with pytest.raises(ValueError):
            mollifier_bound_check(fam, ball_kernel(1), (0.2,), ExponentField.constant(d, 2.0))

    def test_variable_exponent_stable_under_refinement(self):
        estimates = []
        for cells in (512, 1024, 2048):
            d = GridDomain.interval(0, 1, cells)
            p = ExponentField.from_callable(d, lambda x: 2 + np.sin(2 * np.pi * x) / 2)
            fam = make_family("random-smooth:20", d, seed=5)
            r = mollifier_bound_check(fam, triangle_kernel(1), (0.2, 0.1, 0.05), p)
            assert r.finite
            estimates.append(r.c_est)
        assert abs(estimates[1] - estimates[0]) <= 0.1 * estimates[0]
        assert abs(estimates[2] - estimates[1]) <= 0.1 * estimates[1]


class TestUniformBound:
    def test_indicator_of_domain(self):
        d = GridDomain.interval(0, 1, 1000)
        p = ExponentField.constant(d, 2.0)
        r = uniform_bound_check(Family((GridFunction.constant(d, 1.0),)), 0.1, p)
        assert r.lhs[0] <= 0.2 + 1e-12
        assert r.rhs == pytest.approx(r.k * math.sqrt(0.2)) and r.k == 1.0
        assert r.holds

    def test_zero(self):
        d = GridDomain.interval(0, 1, 100)
        r = uniform_bound_check(Family((GridFunction.zeros(d),)), 0.1, ExponentField.constant(d, 3.0))
        assert r.lhs[0] == 0 and r.holds

    def test_random_family(self):
        d = GridDomain.interval(0, 1, 1024)
        p = ExponentField.from_callable(d, lambda x: 1.5 + x)
        fam = make_family("random-smooth:20", d, seed=2)
        for h in (0.4, 0.2, 0.1):
            assert uniform_bound_check(fam, h, p).violations == 0

    def test_ball_too_large(self):
        d = GridDomain.interval(0, 1, 100)
        with pytest.raises(ValueError):
            uniform_bound_check(Family((GridFunction.zeros(d),)), 0.6, ExponentField.constant(d, 2.0))


class TestTheta:
    def test_one_dimensional_exact(self):
        assert theta_exact(0.02, 0.1, 1) == pytest.approx(0.08)
        assert theta_bound(0.02, 0.1, 1) == pytest.approx(0.08)
        d = GridDomain.interval(0, 1, 4000)
        assert measured_theta(0.5, 0.02, 0.1, d) == pytest.approx(0.08, abs=2 * d.max_spacing)

    def test_zero_shift(self):
        d = GridDomain.interval(0, 1, 100)
        assert theta_bound(0.0, 0.1, 1) == 0.0
        assert measured_theta(0.5, 0.0, 0.1, d) == 0.0

    def test_two_dimensional_full_shift(self):
        h = 0.1
        assert theta_exact(h, h, 2) == pytest.approx(4 * math.pi * h**2)
        assert theta_bound((h, 0), h, 2) == pytest.approx(8 * math.pi * h**2)

    def test_shift_larger_than_radius(self):
        with pytest.raises(ValueError):
            theta_bound(0.2, 0.1, 1)

    def test_random_two_dimensional(self):
        d = GridDomain.box((0, 0), (1, 1), (200, 200))
        rng = np.random.default_rng(4)
        for _ in range(20):
            h = rng.uniform(0.05, 0.2)
            x = rng.uniform(0.25, 0.75, size=2)
            u = rng.normal(size=2)
            u *= rng.uniform(0, h) / np.linalg.norm(u)
            ul = float(np.linalg.norm(u))
            meas = measured_theta(x, u, h, d)
            assert meas <= theta_bound(u, h, 2) + theta_grid_slack(ul, h, d)
            assert measured_ball_difference(x, u, h, d) <= meas + 1e-12


class TestEquicontinuity:
    def test_constant(self):
        d = GridDomain.interval(0, 1, 200)
        assert equicontinuity_modulus([GridFunction.constant(d, 3.0)], 0.1).c_lip == 0.0

    def test_step_double_average(self):
        d = GridDomain.interval(0, 1, 2000)
        p = ExponentField.constant(d, 2.0)
        h = 0.1
        f = box_indicator(0, 0.5, d).indicator()
        fhh = steklov_apply(steklov_apply(f, h), h)
        est = equicontinuity_modulus([fhh], h)
        fam = Family((f,))
        bound = lipschitz_bound(fam.norm_bound(p), holder_constant(p), 2.0, h, 1)
        assert est.c_lip <= bound
        # the double average of a step has slope at most 1/(2h)
        assert est.c_lip <= 1 / (2 * h) + 1e-6

    def test_random_family(self):
        d = GridDomain.interval(0, 1, 512)
        p = ExponentField.from_callable(d, lambda x: 2 + x)
        fam = make_family("random-smooth:10", d, seed=9)
        h = 0.1
        st_ = steklov_stencil(d, h)
        fhh = [st_.apply(st_.apply(f)) for f in fam]
        from varlex import dual_exponent
        bound = lipschitz_bound(fam.norm_bound(p), holder_constant(p), dual_exponent(p).q_minus, h, 1)
        assert equicontinuity_modulus(fhh, h).c_lip <= bound
