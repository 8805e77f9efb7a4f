from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastplap import exact
from fastplap.estimates import checks as ck
from fastplap.estimates import structural as sf
from fastplap.estimates.core import BoundCheck, ConstantLedger, HypothesisError, MissingDataError, read_csv, write_csv
from fastplap.grid import Trajectory, build_radial_grid
from fastplap.inequalities import build_test_function
from fastplap.params import ProblemParams
from fastplap.solver import SolverConfig, solve_large

ps = st.floats(1.05, 1.95)
ns = st.integers(1, 5)
lams = st.floats(0.1, 10.0)


class TestStructuralForms:
    def test_empty_data_leaves_envelope(self):
        prm = ProblemParams(1.6, 3)
        assert sf.structural_smoothing_bound(prm, 1.0, 2.0, 0.0, 0.3) == pytest.approx((0.3 / 2.0**1.6) ** 2.5)

    def test_theta_two_example(self):
        prm = ProblemParams(1.5, 3)
        first, second = sf.smoothing_terms(prm, 2.0, 1.7, 5.0, 0.4)
        assert first == pytest.approx(0.4**-2 * 5.0)
        assert second == pytest.approx((0.4 / 1.7**1.5) ** 2)

    def test_zone_five_rejected(self):
        with pytest.raises(HypothesisError, match="zone V"):
            sf.structural_smoothing_bound(ProblemParams(1.2, 3), 1.0, 1.0, 1.0, 1.0)

    @given(ps, ns, st.floats(1.0, 6.0))
    def test_gate_matches_admissibility(self, p, n, r):
        prm = ProblemParams(p, n)
        try:
            sf.smoothing_gate(prm, r)
            gated = False
        except HypothesisError:
            gated = True
        assert gated == (not prm.smoothing_admissible(r))

    @settings(max_examples=60)
    @given(ps, ns, lams, st.floats(0.1, 10.0), st.floats(0.01, 10.0), st.floats(0.01, 10.0), st.floats(0.0, 4.0))
    def test_smoothing_form_covariant(self, p, n, lam, R0, M, t, dr):
        prm = ProblemParams(p, n)
        r = max(1.0, prm.r_c_raw + 0.25) + dr
        s = prm.scaling_exponent
        base = sf.structural_smoothing_bound(prm, r, R0, M, t)
        scaled = sf.structural_smoothing_bound(prm, r, R0 / lam, lam ** (n * (r - 1)) * M, t / lam**s)
        assert scaled == pytest.approx(lam**n * base, rel=1e-9)

    @given(ps, ns, lams, st.floats(0.1, 10.0), st.floats(0.01, 10.0))
    def test_critical_time_covariant(self, p, n, lam, R, M):
        prm = ProblemParams(p, n)
        a = sf.critical_time(prm, R, M)
        b = sf.critical_time(prm, R / lam, M)
        assert b == pytest.approx(a * lam ** -prm.scaling_exponent, rel=1e-10)

    def test_critical_time_examples(self):
        prm = ProblemParams(1.5, 3)
        assert sf.critical_time(prm, 1.0, 2.0) / sf.critical_time(prm, 1.0, 1.0) == pytest.approx(2**0.5)
        assert sf.critical_time(prm, 7.0, 1.0) == pytest.approx(sf.critical_time(prm, 0.3, 1.0))

    @given(ps, ns, st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.1, 5))
    def test_ratio_factor_is_one_for_r_one(self, p, n, R, l1, lr):
        assert sf.harnack_ratio_factor(ProblemParams(p, n), 1.0, R, l1, lr) == 1.0

    def test_harnack_gate(self):
        sf.harnack_gate(ProblemParams(1.6, 3), 1.0)
        with pytest.raises(HypothesisError):
            sf.harnack_gate(ProblemParams(1.3, 3), 1.0)
        with pytest.raises(HypothesisError):
            prm = ProblemParams(1.3, 3)
            sf.harnack_gate(prm, prm.r_c_raw)

    def test_l1_upper_bound_refused_below_pc(self):
        with pytest.raises(HypothesisError, match="impossible for p < p_c"):
            sf.extinction_bound_window(ProblemParams(1.2, 3), 1.0, 3.0, {1: 1.0}, upper="l1")

    def test_window_good_range(self):
        w = sf.extinction_bound_window(ProblemParams(1.6, 3), 1.0, 3.0, {1: 1.0})
        # R (R0 - 2R)^{p-1} (M/|B_R0|)^{2-p} and R0^{p-n(2-p)} M^{2-p}
        assert w.T_low == pytest.approx((1 / (4 / 3 * math.pi * 27)) ** 0.4, rel=1e-12)
        assert w.T_high == pytest.approx(3**0.4, rel=1e-12)
        assert w.lower_form == "flux" and w.upper_form == "l1"

    def test_window_lower_vanishes_with_mass(self):
        w = sf.extinction_bound_window(ProblemParams(1.6, 3), 1.0, 3.0, {1: 1e-30})
        assert w.T_low < 1e-10

    @settings(max_examples=40)
    @given(st.floats(1.05, 1.45), lams, st.floats(0.1, 5.0))
    def test_subcritical_upper_bound_scales_like_extinction(self, p, lam, norm):
        prm = ProblemParams(p, 3)
        r = prm.r_c_raw + 1.0
        # ||u_lam(0)||_{L^r(B_{R0/lam})} = lam^{n(r-1)/r} ||u0||_r
        a = sf.extinction_bound_window(prm, 1.0, 3.0, {1: 1.0, r: norm}, upper="lr").T_high
        b = sf.extinction_bound_window(prm, 1 / lam, 3 / lam, {1: 1.0, r: lam ** (3 * (r - 1) / r) * norm}, upper="lr").T_high
        assert b == pytest.approx(a * lam ** -prm.scaling_exponent, rel=1e-9)

    def test_gradient_blowup_exponent(self):
        assert sf.gradient_blowup_exponent(ProblemParams(1.5, 1)) == pytest.approx((2 - 4.5) / 1.5)


class TestBoundCheck:
    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6), st.floats(1.0, 1e3))
    def test_verdict_monotone_in_constant(self, emp, c, factor):
        before = BoundCheck("x", 1.5, 3, 1, 1, emp, ck._margin(emp, c))
        after = BoundCheck("x", 1.5, 3, 1, 1, emp, ck._margin(emp, c * factor))
        assert not (before.passed and not after.passed)

    def test_infinite_constant_fails(self):
        assert not BoundCheck("x", 1.5, 3, 1, 1, math.inf, 0.0).passed

    def test_csv_roundtrip_and_determinism(self):
        rows = [BoundCheck("a", 1.6, 3, 0.1, 0.2, 0.5, 0.0, r=1.0), BoundCheck("b", 1.3, 2, 1.0, 1.0, 2.0, -0.5)]
        text = write_csv(rows)
        assert text == write_csv(rows)
        back = read_csv(text)
        assert [r["name"] for r in back] == ["a", "b"]
        assert [r["verdict"] for r in back] == ["pass", "fail"]

    def test_ledger_extremal_and_spread(self):
        led = ConstantLedger()
        e = led.record("harnack", [2.0, 3.0, 2.5], family="lam")
        assert e.value == 3.0 and e.spread == pytest.approx(1.5)
        assert led.get("harnack") == 3.0 and "harnack" in led


class TestChecksOnGoodRange:
    def test_smoothing(self, mdp16):
        c = ck.check_smoothing(mdp16, 1.0, 1.0, 2.0)
        assert c.passed and 0 < c.empirical_constant < math.inf
        assert c.empirical_constant == pytest.approx(0.00572, rel=1e-2)

    def test_positivity(self, mdp16):
        c = ck.check_positivity(mdp16, 1.0)
        assert c.passed and c.context["positive"]
        t_half = 0.5 * c.context["t_star"]
        inner = mdp16.grid.radii <= 1.0
        assert np.min(mdp16.at_time(t_half)[inner]) > 0

    def test_aronson_caffarelli(self, mdp16, mdp16_coarse):
        fine = ck.check_aronson_caffarelli(mdp16, 1.0)
        coarse = ck.check_aronson_caffarelli(mdp16_coarse, 1.0)
        for key in ("C1", "C2"):
            assert fine.context[key] == pytest.approx(coarse.context[key], rel=0.2)

    def test_harnack_backward_close_to_forward(self, mdp16):
        T = mdp16.extinction.T
        fw = ck.check_harnack(mdp16, 1.0, 0.1 * T, 0.02 * T, "forward")
        bw = ck.check_harnack(mdp16, 1.0, 0.1 * T, 0.02 * T, "backward")
        assert fw.passed and bw.passed
        assert 0.5 <= bw.empirical_constant / fw.empirical_constant <= 2.0

    def test_harnack_modes_validated(self, mdp16):
        with pytest.raises(ValueError):
            ck.check_harnack(mdp16, 1.0, 0.0, 0.1, "elliptic")
        with pytest.raises(ValueError):
            ck.check_harnack(mdp16, 1.0, 0.0, 0.0, "sideways")

    def test_benilan_crandall(self, mdp16, mdp13):
        assert ck.check_benilan_crandall(mdp16).passed
        assert ck.check_benilan_crandall(mdp13).passed

    def test_aleksandrov_strict_mid_life(self, mdp16):
        c = ck.check_aleksandrov(mdp16, 1.0)
        assert c.passed and c.margin > 0

    def test_flux(self, mdp16):
        c = ck.check_flux(mdp16, 1.0)
        assert c.passed and c.context["relative_error"] < 0.02

    def test_flux_from_extinction_is_trivial(self, mdp16):
        k = int(np.searchsorted(mdp16.times, mdp16.extinction.T))
        lhs, rhs = ck.flux_identity_sides(mdp16, build_test_function(1.0, 2.0, 4.0, 3), k)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_energy_and_budget(self, mdp16):
        c = ck.check_energy_inequality(mdp16, build_test_function(1.0, 2.0, 4.0, 3))
        assert c.passed and c.context["budget_ok"]
        assert c.context["ut2_total"] == pytest.approx(4.36, rel=0.02)

    def test_energy_needs_regularized_run(self, mdp16):
        bare = Trajectory(mdp16.times, mdp16.values, mdp16.grid, mdp16.params, mdp16.extinction, {})
        with pytest.raises(ValueError):
            ck.check_energy_inequality(bare, build_test_function(1.0, 2.0, 4.0, 3))

    def test_mass_lower_recovers_extinction_bound(self, mdp16):
        c = ck.check_mass_lower(mdp16, 1.0, 2.0)
        assert c.passed and c.context["fet_ok"]
        assert c.context["T_low"] <= c.context["T_hat"]

    def test_lr_stability_trivial_at_equal_times(self, mdp16):
        one = Trajectory(mdp16.times[:1], mdp16.values[:1], mdp16.grid, mdp16.params)
        c = ck.check_lr_stability(one, 1.0, 1.0, 2.0, constant=5.0)
        assert c.passed and c.margin >= 0

    def test_subcritical_checks(self, mdp13):
        assert ck.check_positivity(mdp13, 1.0).passed
        assert ck.check_aleksandrov(mdp13, 1.0).passed
        with pytest.raises(HypothesisError):
            ck.check_smoothing(mdp13, 1.0, 1.0, 2.0)
        assert ck.check_smoothing(mdp13, 2.0, 1.0, 2.0).passed


def _scaled_constants(traj, lam):
    tr = exact.rescale(traj, lam)
    T = tr.extinction.T
    R = 1.0 / lam
    return {
        "smoothing": ck.check_smoothing(tr, 1.0, R, 2 * R).empirical_constant,
        "positivity": ck.check_positivity(tr, R).empirical_constant,
        "aronson_caffarelli": ck.check_aronson_caffarelli(tr, R).empirical_constant,
        "harnack_forward": ck.check_harnack(tr, R, 0.0, 0.02 * T, "forward").empirical_constant,
        "harnack_elliptic": ck.check_harnack(tr, R, 0.0, 0.0, "elliptic").empirical_constant,
        "mass_lower": ck.check_mass_lower(tr, R, 2 * R).empirical_constant,
    }


@pytest.fixture(scope="module")
def base(mdp16):
    return _scaled_constants(mdp16, 1.0)


class TestScaleCovariance:
    @settings(max_examples=8, deadline=None)
    @given(st.floats(0.25, 8.0))
    def test_constants_invariant_under_rescaling(self, mdp16, base, lam):
        for name, value in _scaled_constants(mdp16, lam).items():
            assert value == pytest.approx(base[name], rel=1e-6), name

    def test_rescale_preserves_extinction_law(self, mdp13):
        tr = exact.rescale(mdp13, 4.0)
        assert tr.extinction.T / mdp13.extinction.T == pytest.approx(4**0.8, rel=1e-12)


class TestDegenerateCases:
    def _zero(self, N=60):
        g = build_radial_grid(3, 3.0, N)
        return Trajectory(np.linspace(0, 1, 5), np.zeros((5, N)), g, ProblemParams(1.6, 3), meta={"eps": 1e-8})

    def test_zero_solution_smoothing(self):
        c = ck.check_smoothing(self._zero(), 1.0, 1.0, 2.0)
        assert c.lhs == 0 and c.passed

    def test_zero_solution_benilan_crandall(self):
        assert ck.check_benilan_crandall(self._zero()).passed

    def test_constant_energy_terms_vanish(self):
        g = build_radial_grid(3, 3.0, 60)
        tr = Trajectory(np.linspace(0, 1, 4), np.full((4, 60), 2.0), g, ProblemParams(1.6, 3), meta={"eps": 1e-8})
        c = ck.check_energy_inequality(tr, build_test_function(1.0, 2.0, 4.0, 3))
        assert c.margin == 0 and c.passed

    def test_positivity_needs_extinction(self):
        with pytest.raises(MissingDataError):
            ck.check_positivity(self._zero(), 1.0)


class TestClosedFormChecks:
    def test_benilan_crandall_sharp_on_large_solution(self):
        sol = exact.separate_variable_large(ProblemParams(1.5, 1), 1.0)
        tr = exact.replay(sol, build_radial_grid(1, 0.5, 101), np.geomspace(0.01, 1.0, 30))
        w = tr.values * tr.times[:, None] ** -2.0
        np.testing.assert_allclose(w, np.broadcast_to(w[0], w.shape), rtol=1e-12)
        assert ck.check_benilan_crandall(tr, tol=1e-6).passed

    def test_benilan_crandall_strict_on_extinction_profile(self):
        prm = ProblemParams(1.6, 3)
        sol = exact.extinction_profile(prm, 1.0, 1.0)
        tr = exact.replay(sol, build_radial_grid(3, 0.9, 101), np.linspace(0.05, 0.95, 20))
        c = ck.check_benilan_crandall(tr, tol=0.0)
        assert c.passed and c.context["worst_relative_increase"] < 0

    def test_elliptic_ratio_on_large_solution(self):
        sol = exact.separate_variable_large(ProblemParams(1.5, 1), 1.0)
        tr = exact.replay(sol, build_radial_grid(1, 0.5, 101), np.geomspace(0.01, 0.1, 5))
        c = ck.check_elliptic_ratio(tr, 0.5)
        assert c.context["inf_over_centre"] == pytest.approx(1.0)
        assert c.context["sup_over_centre"] == pytest.approx(8.0)

    def test_large_run_gradient_finite_and_envelope(self):
        levels = solve_large(None, ProblemParams(1.5, 1), 1.0, (10, 100), SolverConfig(grid_points=201))
        top = levels[-1]
        g = ck.check_gradient_bound(top, 0.5, 0.75)
        assert g.context["finite"] and math.isfinite(g.empirical_constant)
        env = ck.check_large_envelope(top, 1.0)
        assert math.isfinite(env.context["C1"]) and math.isfinite(env.context["C2"])

    def test_lr_stability_barenblatt(self):
        prm = ProblemParams(1.6, 3)
        sol = exact.barenblatt(prm, 1.0)
        tr = exact.replay(sol, build_radial_grid(3, 2.0, 401), np.geomspace(0.05, 1.0, 15))
        c = ck.check_lr_stability(tr, 1.0, 1.0, 2.0)
        assert c.passed and math.isfinite(c.empirical_constant)
