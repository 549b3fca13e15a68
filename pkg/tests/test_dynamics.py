import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import bracketsim as bs
from bracketsim.dynamics import spatial_jacobian, time_partial
from bracketsim.errors import DimensionError, InputError

from conftest import A, B, K, constant_field, poly_field


@pytest.fixture(scope="module")
def sympy_pair():
    """Symbolic oracle for the example fields on x > 0 (channel 1 = coslog)."""
    import sympy as sp

    x = sp.Symbol("x", positive=True)
    amp = B * sp.sqrt(K)
    f1 = amp * x * sp.cos(sp.log(x**2 / 2))
    f2 = amp * x * sp.sin(sp.log(x**2 / 2))
    d1, d2 = sp.diff(f1, x), sp.diff(f2, x)
    return {
        "f1": sp.lambdify(x, f1), "f2": sp.lambdify(x, f2),
        "d1": sp.lambdify(x, d1), "d2": sp.lambdify(x, d2),
        "lie_f2_f1": sp.lambdify(x, d1 * f2),  # derivative of f1 along f2
        "bracket": sp.lambdify(x, sp.simplify(d2 * f1 - d1 * f2)),
    }


class TestEvaluate:
    def test_linear(self):
        f = bs.linear_field([[2.0]])
        assert bs.evaluate_field(f, 0.0, [0.7]) == pytest.approx([1.4])

    def test_dimension_mismatch(self):
        f = bs.linear_field([[2.0]])
        with pytest.raises(DimensionError):
            bs.evaluate_field(f, 0.0, [1.0, 2.0])

    def test_example_fields_vanish_at_origin(self, example):
        for ch in example.channels:
            assert bs.evaluate_field(ch.field, 1.3, [0.0]) == pytest.approx([0.0], abs=0.0)

    def test_sinlog_value_frozen(self):
        # b sqrt(k) sin(log(1/2)) at x=1, from a high-precision side computation
        f = bs.sinlog_field(B, K)
        assert bs.evaluate_field(f, 0.0, [1.0])[0] == pytest.approx(
            1.3554415541909475, abs=1e-13
        )

    def test_sinlog_even(self):
        f = bs.sinlog_field(B, K)
        for xv in (0.3, 1.7, 4.2):
            assert bs.evaluate_field(f, 0.0, [xv]) == pytest.approx(
                bs.evaluate_field(f, 0.0, [-xv])
            )


class TestJacobian:
    def test_fd_matches_analytic(self, example):
        for ch in example.channels:
            stripped = bs.VectorField(dim=1, value=ch.field.value, fd_step=1e-6)
            for xv in (0.4, 1.0, -2.3):
                J_fd = spatial_jacobian(stripped, 0.0, [xv])
                J_an = spatial_jacobian(ch.field, 0.0, [xv])
                assert abs(J_fd[0, 0] - J_an[0, 0]) <= 1e-8 * (1.0 + abs(J_an[0, 0]))

    def test_kink_flagged_at_origin(self):
        stripped = bs.VectorField(dim=1, value=bs.sinlog_field(B, K).value, fd_step=1e-6)
        _, flagged = spatial_jacobian(stripped, 0.0, [0.0], detect_kink=True)
        assert flagged
        _, flagged = spatial_jacobian(stripped, 0.0, [1.0], detect_kink=True)
        assert not flagged

    def test_time_partial_zero_for_autonomous(self, example):
        assert time_partial(example.drift, 0.7, [2.0]) == pytest.approx([0.0])

    def test_time_partial_fd(self):
        f = bs.VectorField(dim=1, value=lambda t, x: np.array([t * t * x[0]]))
        assert time_partial(f, 2.0, [3.0])[0] == pytest.approx(12.0, rel=1e-7)


class TestLieCalculus:
    def test_identity_field_along_constant(self):
        g = bs.linear_field([[1.0]])
        c = constant_field([0.37])
        assert bs.lie_derivative(g, c, 0.0, [5.0]) == pytest.approx([0.37])

    def test_lie_derivative_vs_sympy(self, example, sympy_pair):
        f1, f2 = example.channels[0].field, example.channels[1].field
        for xv in (0.5, 1.0, 2.5):
            got = bs.lie_derivative(f1, f2, 0.0, [xv])[0]
            assert got == pytest.approx(sympy_pair["lie_f2_f1"](xv), rel=1e-10)

    def test_lie_vanishes_at_origin(self, example):
        f1, f2 = example.channels[0].field, example.channels[1].field
        assert bs.lie_derivative(f1, f2, 0.0, [0.0]) == pytest.approx([0.0], abs=1e-12)

    def test_bracket_vs_sympy(self, example, sympy_pair):
        f1, f2 = example.channels[0].field, example.channels[1].field
        for xv in (0.5, 1.0, 3.0):
            got = bs.lie_bracket(f1, f2, 0.0, [xv])[0]
            assert got == pytest.approx(sympy_pair["bracket"](xv), rel=1e-10)
            assert got == pytest.approx(2.0 * B * B * K * xv, rel=1e-10)

    def test_bracket_of_field_with_itself(self, example):
        f1 = example.channels[0].field
        assert bs.lie_bracket(f1, f1, 0.0, [1.3]) == pytest.approx([0.0], abs=1e-12)

    def test_bracket_of_constants(self):
        c1, c2 = constant_field([1.0]), constant_field([-2.0])
        assert bs.lie_bracket(c1, c2, 0.0, [0.4]) == pytest.approx([0.0], abs=1e-9)

    @given(
        c_f=st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=4),
        c_g=st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=4),
        xv=st.floats(-3.0, 3.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_antisymmetry(self, c_f, c_g, xv):
        f, g = poly_field(c_f), poly_field(c_g)
        x = np.array([xv])
        fg = bs.lie_bracket(f, g, 0.0, x)
        gf = bs.lie_bracket(g, f, 0.0, x)
        assert np.linalg.norm(fg + gf) <= 1e-9 * (1.0 + abs(xv))

    @given(
        c_f=st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=3),
        c_g=st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=3),
        c_h=st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=3),
        xv=st.floats(-2.0, 2.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_bilinearity(self, c_f, c_g, c_h, xv):
        f, g, h = poly_field(c_f), poly_field(c_g), poly_field(c_h)
        gh = bs.VectorField(
            dim=1, value=lambda t, x: g.value(t, x) + h.value(t, x), label="g+h"
        )
        x = np.array([xv])
        lhs = bs.lie_bracket(f, gh, 0.0, x)
        rhs = bs.lie_bracket(f, g, 0.0, x) + bs.lie_bracket(f, h, 0.0, x)
        assert np.linalg.norm(lhs - rhs) <= 1e-6 * (1.0 + np.linalg.norm(rhs))


class TestLipschitzEstimate:
    def test_linear_exact(self):
        f = bs.linear_field([[2.0]])
        got = bs.estimate_lipschitz(f, ([-3.0], [4.0]), t_samples=3, x_samples=40, seed=1)
        assert got == pytest.approx(2.0, abs=1e-9)

    def test_constant_zero(self):
        got = bs.estimate_lipschitz(constant_field([1.0]), ([-1.0], [1.0]), seed=2)
        assert got == 0.0

    def test_example_below_analytic_constant(self, table):
        f = bs.sinlog_field(B, K)
        got = bs.estimate_lipschitz(f, ([-5.0], [5.0]), t_samples=4, x_samples=120, seed=3)
        assert got <= table.L1 + 1e-6
        assert got >= 0.5 * table.L1  # sampling actually sees the steep slopes

    def test_degenerate_box(self):
        with pytest.raises(InputError):
            bs.estimate_lipschitz(bs.linear_field([[1.0]]), ([0.0], [0.0]))


class TestVanishing:
    def test_example_passes(self, example):
        rep = bs.check_vanishing_at_origin(example, t_samples=[0.0, 0.9], tol=1e-9)
        assert rep.passed
        assert rep.max_residual <= 1e-12

    def test_shifted_field_fails(self):
        bad = bs.DitheredSystem(
            dim=1,
            drift=bs.linear_field([[1.0]]),
            channels=(
                bs.Channel(
                    field=bs.VectorField(dim=1, value=lambda t, x: x + 1.0),
                    power=0.5,
                    dither=bs.sine(),
                ),
            ),
        )
        rep = bs.check_vanishing_at_origin(bad, t_samples=[0.0], tol=1e-9)
        assert not rep.passed
        residuals = {name: res for name, _, res in rep.rows}
        assert residuals["f_1"] == pytest.approx(1.0)

    def test_zero_system_all_zero(self):
        zero = bs.DitheredSystem(
            dim=1,
            drift=constant_field([0.0]),
            channels=(bs.Channel(field=constant_field([0.0]), power=0.5, dither=bs.sine()),),
        )
        rep = bs.check_vanishing_at_origin(zero, t_samples=[0.0, 1.0], tol=1e-12)
        assert rep.passed
        assert rep.max_residual == 0.0
