import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import bracketsim as bs
from bracketsim.errors import AssumptionViolationError, InputError

TWO_PI = 2.0 * math.pi


def brute_gamma(u_i, u_j, p_i, p_j, omega, panels=1_000_000):
    """Independent oracle: raw trapezoid of the double integral over one period."""
    T = TWO_PI / omega
    th = np.linspace(0.0, T, panels + 1)
    ui = np.asarray(u_i.value(omega * th), dtype=float)
    uj = np.asarray(u_j.value(omega * th), dtype=float)
    dt = th[1] - th[0]
    inner = np.concatenate([[0.0], np.cumsum((ui[1:] + ui[:-1]) * 0.5 * dt)])
    return omega ** (p_i + p_j) / T * np.trapezoid(uj * inner, th)


class TestAssumptionChecks:
    def test_sine_passes(self):
        chk = bs.check_dither_assumptions(bs.sine(), grid=4096)
        assert chk.passed
        assert chk.mean_residual <= 1e-12

    def test_constant_fails_zero_mean(self):
        one = bs.custom(lambda s: np.ones_like(np.asarray(s, dtype=float)), "one")
        chk = bs.check_dither_assumptions(one)
        assert not chk.zero_mean_ok
        assert chk.mean_residual == pytest.approx(TWO_PI, rel=1e-12)
        assert chk.bound_ok and chk.periodic_ok

    def test_overscaled_fails_bound(self):
        big = bs.custom(lambda s: 1.5 * np.sin(s), "1.5sin")
        chk = bs.check_dither_assumptions(big)
        assert not chk.bound_ok
        assert chk.max_abs == pytest.approx(1.5, abs=1e-6)

    def test_aperiodic_fails(self):
        drift = bs.custom(lambda s: np.sin(0.9 * s), "offbeat")
        assert not bs.check_dither_assumptions(drift).periodic_ok

    def test_square_passes(self):
        assert bs.check_dither_assumptions(bs.square()).passed

    def test_grid_too_small(self):
        with pytest.raises(InputError):
            bs.check_dither_assumptions(bs.sine(), grid=8)


class TestBigV:
    def test_full_period_is_zero(self):
        assert bs.big_v(bs.sine(), 0.5, 37.0, 0.0, TWO_PI / 37.0) == pytest.approx(0.0, abs=1e-14)

    def test_half_period_closed_form(self):
        # int_0^{pi/200} sqrt(200) sin(200 t) dt = 2 / sqrt(200)
        got = bs.big_v(bs.sine(), 0.5, 200.0, 0.0, math.pi / 200.0)
        assert got == pytest.approx(0.1414213562373095, abs=1e-14)

    def test_square_piecewise_exact(self):
        # square dither: V over [0, pi/omega] is the triangle peak omega^{p-1} * pi
        omega = 50.0
        got = bs.big_v(bs.square(), 0.5, omega, 0.0, math.pi / omega)
        assert got == pytest.approx(omega**-0.5 * math.pi, rel=1e-12)

    @given(
        omega=st.floats(1.0, 500.0),
        p=st.floats(0.1, 0.9),
        t_s=st.floats(-2.0, 2.0),
        width=st.floats(0.0, 0.5),
    )
    @settings(max_examples=200, deadline=None)
    def test_magnitude_bound(self, omega, p, t_s, width):
        val = bs.big_v(bs.sine(), p, omega, t_s, t_s + width)
        assert abs(val) <= omega**p * width + 1e-12


class TestBigV2:
    def test_empty_interval(self):
        assert bs.big_v2(bs.sine(), bs.sine(), 0.5, 0.5, 10.0, 1.0, 1.0) == 0.0

    def test_full_period_closed_form(self):
        # outer cos, inner sin over one full period: -pi / omega
        got = bs.big_v2(bs.cosine(), bs.sine(), 0.5, 0.5, 200.0, 0.0, TWO_PI / 200.0)
        assert got == pytest.approx(-math.pi / 200.0, rel=1e-12)

    @given(
        omega=st.floats(1.0, 300.0),
        t_s=st.floats(-1.0, 1.0),
        frac=st.floats(0.0, 1.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_magnitude_bound(self, omega, t_s, frac):
        width = frac * TWO_PI / omega
        val = bs.big_v2(bs.sine(), bs.cosine(), 0.5, 0.5, omega, t_s, t_s + width)
        assert abs(val) <= 0.5 * omega * width**2 + 1e-12


class TestGamma:
    @pytest.mark.parametrize("omega", [1.0, 200.0])
    def test_sin_cos_is_minus_half(self, omega):
        got = bs.gamma(bs.sine(), bs.cosine(), 0.5, 0.5, omega)
        assert got == pytest.approx(-0.5, abs=1e-6)
        assert got == pytest.approx(brute_gamma(bs.sine(), bs.cosine(), 0.5, 0.5, omega), abs=1e-6)

    def test_cos_sin_is_plus_half(self):
        assert bs.gamma(bs.cosine(), bs.sine(), 0.5, 0.5, 7.0) == pytest.approx(0.5, abs=1e-6)

    def test_sin_sin_is_zero(self):
        assert bs.gamma(bs.sine(), bs.sine(), 0.5, 0.5, 3.0) == pytest.approx(0.0, abs=1e-10)

    def test_omega_independent_when_powers_sum_to_one(self):
        vals = [bs.gamma(bs.sine(), bs.cosine(), 0.25, 0.75, w) for w in (1.0, 10.0, 200.0)]
        assert max(vals) - min(vals) <= 1e-9

    def test_matches_brute_oracle_for_square_pair(self):
        u_i, u_j = bs.square(), bs.square(phase=math.pi / 2)
        got = bs.gamma(u_i, u_j, 0.5, 0.5, 1.0)
        assert got == pytest.approx(brute_gamma(u_i, u_j, 0.5, 0.5, 1.0, panels=2_000_000), abs=1e-5)

    @given(
        p_i=st.floats(0.2, 0.8),
        p_j=st.floats(0.2, 0.8),
        omega=st.floats(1.0, 100.0),
        phase=st.floats(0.0, TWO_PI),
    )
    @settings(max_examples=100, deadline=None)
    def test_generic_magnitude_bound(self, p_i, p_j, omega, phase):
        # |gamma| <= pi * omega^(p_i + p_j - 1) for unit-bounded dithers
        val = bs.gamma(bs.sine(phase), bs.cosine(), p_i, p_j, omega)
        assert abs(val) <= math.pi * omega ** (p_i + p_j - 1.0) + 1e-9


class TestGammaLimit:
    def test_power_sum_one(self):
        assert bs.gamma_limit(bs.sine(), bs.cosine(), 0.5, 0.5) == pytest.approx(-0.5, abs=1e-6)

    def test_power_sum_below_one(self):
        assert bs.gamma_limit(bs.sine(), bs.cosine(), 0.4, 0.4) == 0.0

    def test_power_sum_above_one_orthogonal_harmonics(self):
        second = bs.custom(lambda s: np.sin(2.0 * np.asarray(s, dtype=float)), "sin2")
        assert bs.gamma_limit(second, bs.cosine(), 0.6, 0.6) == 0.0

    def test_power_sum_above_one_violation(self):
        with pytest.raises(AssumptionViolationError):
            bs.gamma_limit(bs.sine(), bs.cosine(), 0.6, 0.6)

    def test_vanishing_bracket_certificate(self):
        assert bs.gamma_limit(bs.sine(), bs.cosine(), 0.6, 0.6, vanishing_bracket=True) == 0.0
