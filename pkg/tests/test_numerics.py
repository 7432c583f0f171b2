import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tswave.errors import (DerivativeBreakdown, NonConvergence, ZeroOnContour)
from tswave.numerics import (
    Circle, Ray, RootTrace, Segment, backward_exp_integral, boundary_slope,
    cumulative_trapezoid, diff_matrix, forward_exp_integral, graded_grid,
    newton_root, quad_segment, tail_trapezoid, trap_weights, winding_number,
)


class TestQuadSegment:
    def test_constant(self):
        assert quad_segment(lambda t: np.ones_like(t), Segment(0.0, 1.0)) == pytest.approx(1.0)

    def test_exponential_ray(self):
        val = quad_segment(lambda t: np.exp(-t), Ray(0.0, 1.0))
        assert val == pytest.approx(1.0, rel=1e-11)

    def test_near_singular_vs_composite_oracle(self):
        # the integrand of the critical layer: 1/(U_s - c_hat) on [0, 1]
        chat = 0.1 + 0.01j

        def f(t):
            return 1.0 / (1.0 - np.exp(-t) - chat)

        val = quad_segment(f, Segment(0.0, 1.0), rel_tol=1e-11)
        # fixed fine composite midpoint oracle at 10x the resolution the
        # adaptive rule needed (~1e5 panels is far beyond that)
        t = (np.arange(100000) + 0.5) / 100000
        oracle = np.sum(f(t)) / 100000
        assert abs(val - oracle) <= 5e-9 * abs(oracle)
        # magnitude bound: |result| <= C (1 + |log Im chat|)
        assert abs(val) <= 4.0 * (1.0 + abs(math.log(chat.imag)))

    def test_rel_tol_validation(self):
        with pytest.raises(ValueError):
            quad_segment(lambda t: t, Segment(0.0, 1.0), rel_tol=1e-2)
        with pytest.raises(ValueError):
            quad_segment(lambda t: t, Segment(0.0, 1.0), rel_tol=1e-15)

    def test_budget_exhaustion(self):
        with pytest.raises(NonConvergence):
            # genuine endpoint singularity on the path
            quad_segment(lambda t: 1.0 / t, Segment(0.0, 1.0), rel_tol=1e-10,
                         max_intervals=64)

    @given(st.floats(0.05, 0.95), st.integers(1, 6))
    @settings(max_examples=25, deadline=None)
    def test_additive_under_splitting(self, frac, k):
        def f(t):
            return np.exp(1j * k * t) * (1.0 + t**2)

        whole = quad_segment(f, Segment(0.0, 2.0), rel_tol=1e-10)
        left = quad_segment(f, Segment(0.0, 2.0 * frac), rel_tol=1e-10)
        right = quad_segment(f, Segment(2.0 * frac, 2.0), rel_tol=1e-10)
        assert abs(left + right - whole) <= 2e-9 * abs(whole)


class TestWinding:
    def test_simple_zero(self):
        assert winding_number(lambda c: c - (0.3 + 0.2j), Circle(0.3 + 0.2j, 1.0)) == 1

    def test_constant(self):
        assert winding_number(lambda c: 5.0 * np.ones_like(c), Circle(0.0, 2.0)) == 0

    def test_double_zero(self):
        a = 0.1 - 0.4j
        assert winding_number(lambda c: (c - a) ** 2, Circle(0.0, 1.0)) == 2

    @pytest.mark.parametrize("samples", [16, 32, 64, 128])
    def test_refinement_invariance(self, samples):
        a = 0.1 - 0.4j
        assert winding_number(lambda c: (c - a) ** 2, Circle(0.0, 1.0),
                              init_samples=samples) == 2
        assert winding_number(lambda c: c - a, Circle(a, 0.5),
                              init_samples=samples) == 1

    def test_zero_on_contour(self):
        with pytest.raises(ZeroOnContour):
            winding_number(lambda c: c - 1.0, Circle(0.0, 1.0), init_samples=16)

    def test_min_samples(self):
        with pytest.raises(ValueError):
            winding_number(lambda c: c, Circle(0.0, 1.0), init_samples=8)


class TestNewton:
    def test_affine_one_step(self):
        root, trace = newton_root(lambda c: c - (1.0 + 1.0j), 0.0)
        assert root == pytest.approx(1.0 + 1.0j)
        assert trace.converged and trace.final_residual <= 1e-12

    def test_sqrt2(self):
        root, trace = newton_root(lambda c: c * c - 2.0, 1.0)
        assert root == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert trace.residuals[-1] <= 1e-12

    def test_trace_residual_contract(self):
        root, trace = newton_root(lambda c: (c - 0.5j) * (c + 2.0), 0.2 + 0.3j,
                                  tol=1e-13)
        assert trace.converged
        assert abs((root - 0.5j) * (root + 2.0)) <= 1e-13

    def test_derivative_breakdown(self):
        with pytest.raises(DerivativeBreakdown):
            newton_root(lambda c: 1.0 + 0.0 * c, 0.0)

    def test_nonconvergence_budget(self):
        with pytest.raises(NonConvergence):
            newton_root(lambda c: c * c - 2.0, 1.0, tol=1e-300, max_iter=2)


class TestGridsAndCalculus:
    def test_graded_grid_shape(self):
        g = graded_grid(200, 40.0, cluster_scale=0.05)
        assert g[0] == 0.0 and g[-1] == pytest.approx(40.0)
        assert np.all(np.diff(g) > 0.0)
        assert g[1] - g[0] == pytest.approx(0.05 / 6.0, rel=0.2)

    def test_trap_weights_total(self):
        g = graded_grid(150, 10.0, cluster_scale=1.0)
        assert trap_weights(g).sum() == pytest.approx(10.0)

    def test_diff_matrices_converge(self):
        errs = []
        for n in (200, 400):
            g = graded_grid(n, 6.0, cluster_scale=0.5)
            f = np.sin(g)
            errs.append((np.max(np.abs(diff_matrix(g, 1) @ f - np.cos(g))[1:-1]),
                         np.max(np.abs(diff_matrix(g, 2) @ f + np.sin(g))[1:-1])))
        assert errs[0][0] / errs[1][0] > 3.0
        assert errs[0][1] / errs[1][1] > 3.0

    def test_boundary_slope(self):
        g = graded_grid(400, 5.0, cluster_scale=0.05)
        f = np.exp(-2.0 * g) * np.cos(g)
        assert boundary_slope(g, f) == pytest.approx(-2.0, abs=2e-4)

    def test_cumulative_and_tail(self):
        g = np.linspace(0.0, 30.0, 4000)
        f = np.exp(-g)
        cum = cumulative_trapezoid(f, g)
        assert cum[-1] == pytest.approx(1.0, rel=1e-5)
        tail = tail_trapezoid(f, g, tail_rate=1.0)
        assert np.allclose(tail, np.exp(-g), rtol=1e-4)

    @pytest.mark.parametrize("xi", [0.7 + 0.4j, 2.0 - 1.0j])
    def test_exp_integrals_against_closed_form(self, xi):
        g = graded_grid(1500, 25.0, cluster_scale=0.5)
        vals = np.exp(-2.0 * g)
        back = backward_exp_integral(vals, g, xi, tail_rate=2.0)
        assert np.max(np.abs(back - np.exp(-2.0 * g) / (xi + 2.0))) < 2e-4
        fwd = forward_exp_integral(vals, g, xi)
        exact = (np.exp(-2.0 * g) - np.exp(-xi * g)) / (xi - 2.0)
        assert np.max(np.abs(fwd - exact)) < 2e-4
        # the piecewise-linear kernel integration is second order
        g2 = graded_grid(3000, 25.0, cluster_scale=0.5)
        back2 = backward_exp_integral(np.exp(-2.0 * g2), g2, xi, tail_rate=2.0)
        err2 = np.max(np.abs(back2 - np.exp(-2.0 * g2) / (xi + 2.0)))
        assert np.max(np.abs(back - np.exp(-2.0 * g) / (xi + 2.0))) / err2 > 3.0


def test_segment_and_circle_validation():
    with pytest.raises(ValueError):
        Segment(1.0, 1.0)
    with pytest.raises(ValueError):
        Circle(0.0, 0.0)
    ray = Ray(0.0, 3.0 + 4.0j)
    assert abs(ray.direction) == pytest.approx(1.0)
    assert RootTrace().final_residual == math.inf
