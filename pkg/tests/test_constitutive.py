import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import bisect

import oracles
from surfactant_richards.constitutive import (
    ConstitutiveDomainError,
    VanGenuchtenParams,
    conductivity_of_state,
    d_K_d_theta,
    d_scaling_factor_d_c,
    d_theta_d_c,
    d_theta_d_psi,
    hydraulic_conductivity,
    reaction,
    reaction_linearized,
    scaling_factor,
    water_content,
)

P = VanGenuchtenParams()

# 40-digit mpmath evaluations of the closed forms
GOLDEN_SCALING_C1 = 2.878154135789120440347540750546702607528
GOLDEN_SCALING_C4 = 14.62278926051712846133201914884046897004
GOLDEN_MAX_CONCENTRATION = 5.591523122415909568211648088755488890497
GOLDEN_THETA_M1_C0 = 0.2803807902748868194958619924533434913954
GOLDEN_K_M1_C0 = 0.006135613246043172577851672930916543278354
GOLDEN_THETA_M2_C1 = 0.01906452407309353594030977015989559429008
GOLDEN_K_M2_C1 = 0.00002575783307879125917896709151122335879794


class TestParams:
    def test_defaults(self):
        assert (P.theta_r, P.theta_s, P.n, P.alpha, P.K_s) == (0.0026, 0.42, 2.9, 0.95, 0.12)
        assert (P.a, P.b, P.D) == (0.044, 0.4745, 6.0e-4)
        assert P.m == pytest.approx(1.9 / 2.9)

    @pytest.mark.parametrize("kw", [
        dict(theta_r=0.5), dict(theta_s=1.5), dict(n=1.0), dict(alpha=0.0), dict(K_s=-1.0),
        dict(a=0.0), dict(b=-0.1), dict(D=0.0), dict(log_base=1.0), dict(scaling_cap=100.0),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            VanGenuchtenParams(**kw)

    def test_metadata_carried(self):
        assert P.zeta == 2.4901 and P.sigma0 == 73.0

    def test_max_concentration(self):
        assert P.max_concentration == pytest.approx(GOLDEN_MAX_CONCENTRATION, rel=1e-13)


class TestScaling:
    def test_zero_concentration(self):
        assert scaling_factor(0.0, P) == 1.0

    def test_golden_base10(self):
        assert scaling_factor(1.0, P) == pytest.approx(GOLDEN_SCALING_C1, rel=1e-13)
        assert scaling_factor(4.0, P) == pytest.approx(GOLDEN_SCALING_C4, rel=1e-13)

    def test_natural_log_invalid_at_unit_concentration(self):
        pe = VanGenuchtenParams(log_base=math.e)
        assert 1.0 - 0.4745 * math.log(1.0 / 0.044 + 1.0) < 0.0
        with pytest.raises(ConstitutiveDomainError):
            scaling_factor(1.0, pe)

    def test_no_coupling(self):
        assert scaling_factor(5.0, VanGenuchtenParams(b=0.0)) == 1.0

    def test_negative_rejected(self):
        with pytest.raises(ConstitutiveDomainError):
            scaling_factor(-1e-3, P)

    def test_beyond_validity_rejected(self):
        with pytest.raises(ConstitutiveDomainError):
            scaling_factor(GOLDEN_MAX_CONCENTRATION * 1.001, P)

    def test_cap(self):
        pc = VanGenuchtenParams(scaling_cap=4.0)
        assert scaling_factor(10.0, pc) == pytest.approx(GOLDEN_SCALING_C4, rel=1e-13)
        assert d_scaling_factor_d_c(10.0, pc) == 0.0

    @given(st.floats(0.0, 5.5))
    def test_at_least_one(self, c):
        assert scaling_factor(c, P) >= 1.0

    def test_derivative_fd(self, rng):
        for c in rng.uniform(0.0, 5.0, 20):
            fd = oracles.central_difference(lambda x: scaling_factor(x, P), c, 1e-6)
            assert d_scaling_factor_d_c(c, P) == pytest.approx(fd, rel=1e-6)


class TestWaterContent:
    def test_saturated(self):
        assert water_content(0.5, 3.0, P) == 0.42

    def test_dry_limit(self):
        assert water_content(-1e8, 0.0, P) == pytest.approx(P.theta_r, abs=1e-12)

    def test_golden(self):
        assert water_content(-1.0, 0.0, P) == pytest.approx(GOLDEN_THETA_M1_C0, rel=1e-13)
        assert water_content(-2.0, 1.0, P) == pytest.approx(GOLDEN_THETA_M2_C1, rel=1e-12)

    def test_matches_scalar_oracle(self, rng):
        for psi, c in zip(rng.uniform(-5, 1, 50), rng.uniform(0, 5, 50)):
            assert water_content(psi, c, P) == pytest.approx(oracles.theta(psi, c), rel=1e-12)

    def test_continuity_at_zero(self):
        gaps = [abs(water_content(-e, 1.0, P) - P.theta_s) for e in (1e-1, 1e-3, 1e-6)]
        assert gaps[0] > gaps[1] >= gaps[2] and gaps[2] < 1e-12

    def test_array_broadcast(self):
        out = water_content(np.array([-1.0, 0.5]), 1.0, P)
        assert out.shape == (2,) and out[1] == 0.42

    @given(st.floats(-50.0, 0.0), st.floats(-50.0, 0.0), st.floats(0.0, 5.5))
    def test_monotone_in_psi(self, p1, p2, c):
        lo, hi = min(p1, p2), max(p1, p2)
        assert water_content(lo, c, P) <= water_content(hi, c, P) + 1e-15

    @given(st.floats(-100.0, 10.0), st.floats(0.0, 5.5))
    def test_bounds(self, psi, c):
        t = water_content(psi, c, P)
        assert P.theta_r - 1e-15 <= t <= P.theta_s + 1e-15
        K = conductivity_of_state(psi, c, P)
        assert 0.0 <= K <= P.K_s

    @given(st.floats(-20.0, 1.0), st.floats(0.0, 100.0), st.floats(0.0, 100.0))
    def test_decoupled_when_b_zero(self, psi, c1, c2):
        p0 = VanGenuchtenParams(b=0.0)
        assert water_content(psi, c1, p0) == water_content(psi, c2, p0)


class TestConductivity:
    def test_saturated_flag(self):
        assert hydraulic_conductivity(0.3, P, saturated=True) == 0.12

    def test_full_water_content(self):
        assert hydraulic_conductivity(1.0, P) == pytest.approx(P.K_s, rel=1e-15)

    def test_golden(self):
        t = water_content(-1.0, 0.0, P)
        assert hydraulic_conductivity(t, P) == pytest.approx(GOLDEN_K_M1_C0, rel=1e-12)
        assert conductivity_of_state(-2.0, 1.0, P) == pytest.approx(GOLDEN_K_M2_C1, rel=1e-11)

    def test_domain(self):
        with pytest.raises(ConstitutiveDomainError):
            hydraulic_conductivity(1.2, P)
        with pytest.raises(ConstitutiveDomainError):
            hydraulic_conductivity(-0.1, P)


class TestDerivatives:
    def test_saturated_branch_zero(self):
        assert d_theta_d_psi(0.3, 1.0, P) == 0.0
        assert d_theta_d_c(0.3, 1.0, P) == 0.0
        assert d_K_d_theta(0.3, P, saturated=True) == 0.0

    def test_b_zero_kills_c_derivative(self, rng):
        p0 = VanGenuchtenParams(b=0.0)
        assert np.all(d_theta_d_c(rng.uniform(-5, 0, 20), rng.uniform(0, 5, 20), p0) == 0.0)

    def test_at_minus_one(self):
        h = 1e-6
        fd_psi = oracles.central_difference(lambda x: oracles.theta(x, 0.5), -1.0, h)
        fd_c = oracles.central_difference(lambda x: oracles.theta(-1.0, x), 0.5, h)
        assert d_theta_d_psi(-1.0, 0.5, P) == pytest.approx(fd_psi, rel=1e-6)
        assert d_theta_d_c(-1.0, 0.5, P) == pytest.approx(fd_c, rel=1e-6)

    def test_fd_random_sample(self, rng):
        """100 random points of the valid unsaturated domain."""
        m = P.m
        Kfun = lambda t: P.K_s * math.sqrt(t) * (1 - (1 - t ** (1 / m)) ** m)  # noqa: E731
        for psi, c in zip(rng.uniform(-4.0, -0.05, 100), rng.uniform(0.0, 4.5, 100)):
            h_psi = 1e-6 * max(1.0, abs(psi))
            fd = oracles.central_difference(lambda x: oracles.theta(x, c), psi, h_psi)
            assert d_theta_d_psi(psi, c, P) == pytest.approx(fd, rel=1e-6, abs=1e-13)
            fd = oracles.central_difference(lambda x: oracles.theta(psi, x), c, 1e-7)
            assert d_theta_d_c(psi, c, P) == pytest.approx(fd, rel=1e-6, abs=1e-13)
            t = oracles.theta(psi, c)
            fd = oracles.central_difference(Kfun, t, 1e-6 * t)
            assert d_K_d_theta(t, P) == pytest.approx(fd, rel=1e-6)

    @given(st.floats(-30.0, 0.0), st.floats(0.0, 5.5))
    def test_psi_derivative_nonnegative(self, psi, c):
        assert d_theta_d_psi(psi, c, P) >= 0.0


class TestReaction:
    def test_values(self):
        assert reaction(0.0) == 0.0
        assert reaction(1.0) == 0.5

    def test_linearized_exact_at_fixed_point(self, rng):
        for c in rng.uniform(0, 5, 10):
            slope, off = reaction_linearized(c)
            assert slope * c + off == pytest.approx(reaction(c), rel=1e-15)

    def test_printed_variant(self):
        slope, off = reaction_linearized(2.0, "printed")
        assert slope * 3.0 + off == pytest.approx((1 + 3.0) / 2.0)
        with pytest.raises(ZeroDivisionError):
            reaction_linearized(0.0, "printed")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            reaction_linearized(1.0, "bogus")

    @pytest.mark.parametrize("s", [0.05, 0.5, 2.0, 7.0])
    def test_fixed_point_iteration_matches_bisection(self, s):
        # c = R(c) + s, linearized R(c_next) ~ c_next / (1 + c_prev)
        root = bisect(lambda c: c - reaction(c) - s, 1e-12, 100.0, xtol=1e-15)
        c = 1.0
        for _ in range(200):
            slope, off = reaction_linearized(c)
            c = (off + s) / (1.0 - slope)
        assert c == pytest.approx(root, rel=1e-10)

    @pytest.mark.parametrize("tau,r", [(0.1, 0.3), (1.0, 2.0)])
    def test_implicit_step_iteration_matches_bisection(self, tau, r):
        # c + tau R(c) = r, the pointwise shape of a backward-Euler step
        root = bisect(lambda c: c + tau * reaction(c) - r, 0.0, r, xtol=1e-15)
        c = r
        for _ in range(100):
            slope, off = reaction_linearized(c)
            c = (r - tau * off) / (1.0 + tau * slope)
        assert c == pytest.approx(root, rel=1e-12)
