"""Condition evaluators: worked values, monotonicity, scaling invariance."""

import math

import numpy as np
import pytest

from adanudge.conditions import (
    FlowScales,
    chi_condition_2d,
    chi_condition_3d,
    h_condition,
    re_scalings,
    refined_h_condition,
)

C3D = 2048.0 / 19683.0


class TestHCondition:
    def test_direct_substitution(self):
        ok, slack = h_condition(1.0, 1.0, 0.1, 10.0)
        assert ok and slack == pytest.approx(0.8)

    def test_boundary(self):
        ok, slack = h_condition(1.0, 1.0, 0.1, 50.0)
        assert ok and slack == pytest.approx(0.0, abs=1e-15)

    def test_max_admissible_chi_for_fourier_observer(self):
        # K = 15 on the unit torus: H = 1/(32 pi); nu = 0.01
        h = 1.0 / (32 * math.pi)
        chi_admissible = 0.01 / (2 * h * h)
        assert chi_admissible == pytest.approx(50.53, abs=0.01)
        ok, _ = h_condition(0.01, 1.0, h, chi_admissible * 0.999)
        assert ok
        ok, _ = h_condition(0.01, 1.0, h, chi_admissible * 1.001)
        assert not ok


class TestChiCondition2d:
    def test_direct_substitution(self):
        ok, slack = chi_condition_2d(3.0, 0.5, 1.0, 1.0)
        assert ok and slack == pytest.approx(1.0)

    def test_boundary(self):
        avg, nu, chi0 = 1.7, 0.23, 0.9
        chi = chi0 + avg / (2 * nu)
        ok, slack = chi_condition_2d(chi, nu, avg, chi0)
        assert ok and slack == pytest.approx(0.0, abs=1e-12)

    def test_alternative_coefficient_exposed(self):
        # The derivation's 2/nu form is selectable.
        _, published = chi_condition_2d(10.0, 0.5, 1.0, 1.0)
        _, derived = chi_condition_2d(10.0, 0.5, 1.0, 1.0, coefficient=2.0)
        assert published == pytest.approx(8.0)
        assert derived == pytest.approx(5.0)


class TestChiCondition3d:
    def test_zero_gradient(self):
        ok, slack = chi_condition_3d(1.0, 1.0, 0.0, 1.0)
        assert ok and slack == pytest.approx(1.0)

    def test_cancellation(self):
        ok, slack = chi_condition_3d(1.0, 1.0, 19683.0 / 2048.0, 1.0)
        assert not ok and slack == pytest.approx(-1.0)

    def test_random_recomputation(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            chi, nu, avg, chi0 = rng.uniform(0.1, 10, size=4)
            _, slack = chi_condition_3d(chi, nu, avg, chi0)
            expect = 2.0 * (chi - C3D * nu ** -3 * avg) - chi0
            assert slack == pytest.approx(expect, abs=1e-14 * max(1, abs(expect)))


class TestRefinedHCondition:
    def test_degenerate_factor_at_h_equal_lambda(self):
        ok, slack = refined_h_condition(5.0, 1.0, 1.0, 0.3, 0.3, 1.0)
        assert not ok and slack == pytest.approx(-2.0 * C3D)

    def test_h_to_zero_reduces_to_3d_condition_with_zero_floor(self):
        chi, nu, avg = 3.0, 0.7, 2.0
        _, refined = refined_h_condition(chi, nu, 1.0, 0.0, 0.5, avg)
        _, bare = chi_condition_3d(chi, nu, avg, chi0=0.0)
        assert refined == pytest.approx(bare, rel=1e-14)

    def test_random_recomputation(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            chi, nu, c1, h, lam, avg = rng.uniform(0.1, 3, size=6)
            _, slack = refined_h_condition(chi, nu, c1, h, lam, avg)
            expect = 2.0 * (chi * (1 - (c1 * h / lam) ** 2) - C3D * nu ** -3 * avg)
            assert slack == pytest.approx(expect, abs=1e-14 * max(1, abs(expect)))

    def test_rejects_degenerate_length_scale(self):
        with pytest.raises(ValueError):
            refined_h_condition(1.0, 1.0, 1.0, 0.1, 0.0, 1.0)


class TestReScalings:
    def test_2d_worked_example(self):
        # Re = 100 with L kf = 1 and Tstar = 1
        scales = FlowScales(L=1.0, U=100.0, nu=1.0, kf=1.0)
        assert scales.tstar == pytest.approx(0.01)
        rec = re_scalings(FlowScales(L=1.0, U=1.0, nu=0.01, kf=1.0), dim=2)
        assert rec["re"] == pytest.approx(100.0)
        assert rec["chi_tstar_min"] == pytest.approx(2.0e3)
        assert rec["h_over_l_max"] == pytest.approx(10 ** -2.5)
        assert rec["h_over_l_max"] == pytest.approx(3.162e-3, rel=1e-3)

    def test_3d_chi_lower_bound(self):
        rec = re_scalings(FlowScales(L=1.0, U=1.0, nu=0.1), dim=3)
        assert rec["re"] == pytest.approx(10.0)
        assert rec["chi_tstar_min"] == pytest.approx(1.0e4)
        assert rec["h_over_l_max"] == pytest.approx(1.0e-3)

    def test_2d_requires_kf(self):
        with pytest.raises(ValueError, match="kf"):
            re_scalings(FlowScales(L=1.0, U=1.0, nu=0.01), dim=2)

    def test_bad_dim(self):
        with pytest.raises(ValueError, match="dim"):
            re_scalings(FlowScales(L=1.0, U=1.0, nu=0.01, kf=1.0), dim=4)

    def test_invariance_under_rescaling_at_fixed_re(self):
        base = FlowScales(L=1.0, U=1.0, nu=0.01, kf=3.0)
        ref2 = re_scalings(base, dim=2)
        ref3 = re_scalings(base, dim=3)
        for a, b in [(2.0, 3.0), (0.5, 4.0)]:
            scaled = FlowScales(L=a * base.L, U=b * base.U, nu=a * b * base.nu, kf=base.kf / a)
            got2 = re_scalings(scaled, dim=2)
            got3 = re_scalings(scaled, dim=3)
            assert got2["chi_tstar_min"] == pytest.approx(ref2["chi_tstar_min"], rel=1e-12)
            assert got2["h_over_l_max"] == pytest.approx(ref2["h_over_l_max"], rel=1e-12)
            assert got3["chi_tstar_min"] == pytest.approx(ref3["chi_tstar_min"], rel=1e-12)


class TestMonotonicity:
    def test_h_slack_decreasing_in_chi_and_h(self):
        eps = 1e-6
        for chi in (1.0, 10.0, 100.0):
            _, s0 = h_condition(1.0, 1.0, 0.05, chi)
            _, s1 = h_condition(1.0, 1.0, 0.05, chi + eps)
            assert s1 < s0
        for h in (0.01, 0.1, 0.3):
            _, s0 = h_condition(1.0, 1.0, h, 10.0)
            _, s1 = h_condition(1.0, 1.0, h + eps, 10.0)
            assert s1 < s0

    def test_chi_slacks_increasing_in_chi(self):
        eps = 1e-6
        _, a0 = chi_condition_2d(5.0, 0.5, 1.0, 1.0)
        _, a1 = chi_condition_2d(5.0 + eps, 0.5, 1.0, 1.0)
        assert a1 > a0
        _, b0 = chi_condition_3d(5.0, 0.5, 1.0, 1.0)
        _, b1 = chi_condition_3d(5.0 + eps, 0.5, 1.0, 1.0)
        assert b1 > b0


class TestFlowScales:
    def test_re_identity(self):
        s = FlowScales(L=2.0, U=3.0, nu=0.5)
        assert s.re == pytest.approx(12.0)
        assert s.tstar == pytest.approx(2.0 / 3.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            FlowScales(L=0.0, U=1.0, nu=1.0)
        with pytest.raises(ValueError):
            FlowScales(L=1.0, U=1.0, nu=1.0, kf=-1.0)
