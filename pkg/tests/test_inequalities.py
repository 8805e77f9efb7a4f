from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fastplap.inequalities import (
    RadialProfile,
    SpaceTimeProfile,
    build_test_function,
    colinear_ratio,
    cp_constant,
    cp_inequality,
    cp_sides,
    cp_sides_direct,
    cp_suite,
    estimate_sobolev_constant,
    iterative_sobolev_check,
    moser_exponents,
    random_space_time_profiles,
    sobolev_quotient,
    sobolev_trial_family,
    talenti_constant,
    verify_test_function,
)
from fastplap.rng import SplitMix64

vec3 = arrays(np.float64, 3, elements=st.floats(-1e3, 1e3, allow_nan=False))


class TestCp:
    def test_constant(self):
        assert cp_constant(1.2) == pytest.approx(0.4)
        assert cp_constant(1.5) == 1.0
        assert cp_constant(2.0) == 2.0
        with pytest.raises(ValueError):
            cp_constant(1.0)

    def test_p_two_is_equality(self):
        a, b = np.array([1.0, 2.0]), np.array([-0.5, 3.0])
        lhs, rhs, ok = cp_inequality(a, b, 2.0)
        assert ok and lhs == pytest.approx(rhs, rel=1e-14)

    def test_equal_vectors(self):
        lhs, rhs, ok = cp_inequality(np.ones(3), np.ones(3), 1.4)
        assert ok and lhs == 0 and rhs == 0

    def test_one_vector_zero(self):
        lhs, rhs, ok = cp_inequality(np.array([0.0, 2.0]), np.zeros(2), 1.5)
        assert ok and lhs == pytest.approx(2**1.5)

    def test_colinear_example(self):
        lhs, rhs, ok = cp_inequality(np.array([2.0, 0.0]), np.array([1.0, 0.0]), 1.5)
        # lhs = 2^{1/2} - 1, rhs = 1/(2^{1/2} + 1)
        assert lhs == pytest.approx(math.sqrt(2) - 1, rel=1e-14)
        assert rhs == pytest.approx(1 / (math.sqrt(2) + 1), rel=1e-14)
        assert ok

    @pytest.mark.parametrize("p", [1.1, 1.3])
    def test_near_optimal_below_three_halves(self, p):
        # the ratio tends to 2(p-1) as the colinear pair merges
        assert colinear_ratio(p, 1 + 1e-3) == pytest.approx(2 * (p - 1), abs=1e-3)
        assert colinear_ratio(p, 1 + 1e-6) == pytest.approx(2 * (p - 1), abs=1e-5)

    @settings(max_examples=300, deadline=None)
    @given(vec3, vec3, st.floats(1.01, 2.0))
    def test_holds_for_random_pairs(self, a, b, p):
        assert cp_inequality(a, b, p)[2]

    @settings(max_examples=200, deadline=None)
    @given(vec3, vec3, st.floats(1.01, 1.99))
    def test_stable_and_direct_forms_agree(self, a, b, p):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        assume(na > 1e-3 and nb > 1e-3 and np.linalg.norm(a - b) > 1e-2 * max(na, nb))
        l1, r1 = cp_sides(a, b, p)
        l2, r2 = cp_sides_direct(a, b, p)
        assert float(l1) == pytest.approx(float(l2), rel=1e-8)
        assert float(r1) == pytest.approx(float(r2), rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(vec3, vec3, st.floats(1.05, 1.95), st.floats(1e-3, 1e3))
    def test_homogeneous_of_degree_p(self, a, b, p, s):
        assume(np.linalg.norm(a) > 1e-6 and np.linalg.norm(b) > 1e-6)
        l1, r1 = cp_sides(a, b, p)
        l2, r2 = cp_sides(s * a, s * b, p)
        assert float(l2) == pytest.approx(s**p * float(l1), rel=1e-8, abs=1e-300)
        assert float(r2) == pytest.approx(s**p * float(r1), rel=1e-10, abs=1e-300)

    def test_suite_clean(self):
        res = cp_suite(seed=3, draws=50_000)
        assert res.violations == 0 and res.draws == 50_000

    def test_suite_catches_inflated_constant(self):
        assert cp_suite(seed=3, draws=50_000, c_override=2.0).violations > 0

    def test_suite_deterministic(self):
        assert cp_suite(seed=9, draws=20_000).worst_relative == cp_suite(seed=9, draws=20_000).worst_relative


class TestMoser:
    def test_first_step(self):
        lad = moser_exponents(2.0, 2, 1.5, 10)
        assert lad.recurrence[1] == pytest.approx(3.0)
        assert lad.fixed_point == pytest.approx(2 / 3)
        assert lad.growth_limit == pytest.approx(0.75)

    def test_fixed_point_is_constant(self):
        lad = moser_exponents(2 / 3, 2, 1.5, 50)
        np.testing.assert_allclose(lad.recurrence, 2 / 3, rtol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.05, 20.0), st.integers(1, 6), st.floats(1.05, 1.95))
    def test_closed_form_and_monotonicity(self, r0, n, p):
        lad = moser_exponents(r0, n, p, 60)
        assert lad.max_relative_gap < 1e-10 or abs(r0 - lad.fixed_point) < 1e-6
        gap = r0 - lad.fixed_point
        assume(abs(gap) > 1e-6)
        assert lad.increasing == (gap > 0)

    @pytest.mark.parametrize("r0,n,p", [(2.0, 2, 1.5), (1.0, 3, 1.6), (3.0, 5, 1.2), (1.5, 1, 1.7)])
    def test_limits(self, r0, n, p):
        lad = moser_exponents(r0, n, p, 200)
        assert lad.growth_ratios()[-1] == pytest.approx(lad.growth_limit, rel=1e-6)
        assert lad.sum_ratios()[-1] == pytest.approx(lad.sum_limit, rel=1e-6)

    def test_rejects(self):
        with pytest.raises(ValueError):
            moser_exponents(0.0, 2, 1.5, 5)
        with pytest.raises(ValueError):
            moser_exponents(1.0, 2, 2.0, 5)


class TestTestFunction:
    def test_gradient_scaling(self):
        tf = build_test_function(1.0, 2.0, 2.0)
        chk = verify_test_function(tf, alpha=1.5)
        assert chk.passed and chk.context["shape_ok"]
        assert chk.context["spread"] - 1 < 0.15

    def test_laplacian_scaling(self):
        chk = verify_test_function(build_test_function(1.0, 2.0, 3.5, n=2), beta=1.5)
        assert chk.passed

    def test_gamma_too_small_for_beta(self):
        with pytest.raises(ValueError):
            verify_test_function(build_test_function(1.0, 2.0, 2.0), beta=1.5)

    def test_flat_on_inner_ball(self):
        tf = build_test_function(0.5, 1.5, 2.0)
        r = np.linspace(0, 0.5, 101)
        assert np.all(tf.grad(r) == 0) and np.all(tf.phi(r) == 1)

    @pytest.mark.parametrize("R,R0,g", [(1.0, 1.0, 2.0), (-1.0, 1.0, 2.0), (1.0, 2.0, 0.5)])
    def test_rejects(self, R, R0, g):
        with pytest.raises(ValueError):
            build_test_function(R, R0, g)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.1, 5.0), st.floats(0.05, 5.0), st.floats(1.0, 6.0), st.integers(1, 4))
    def test_shape_invariants(self, R, w, g, n):
        tf = build_test_function(R, R + w, g, n)
        r = np.linspace(0, 1.5 * (R + w), 301)
        ph = tf.phi(r)
        assert np.all((ph >= 0) & (ph <= 1))
        assert np.all(ph[r <= R] == 1) and np.all(ph[r >= R + w] == 0)
        assert np.all(np.diff(ph) <= 1e-15)


def _scaled(prof: RadialProfile, R: float) -> RadialProfile:
    return RadialProfile(prof.name, lambda r: prof.f(np.asarray(r) / R), lambda r: prof.df(np.asarray(r) / R) / R)


class TestSobolev:
    def test_talenti_at_least_trial_family(self):
        S, quots = estimate_sobolev_constant(3, 1.5)
        assert S >= talenti_constant(3, 1.5)
        assert S == max([talenti_constant(3, 1.5), *quots.values()])

    def test_talenti_p2_n3(self):
        # Aubin-Talenti at p = 2: (n(n-2) pi)^{-1/2} (Gamma(n)/Gamma(n/2))^{1/n}
        expected = (3 * math.pi) ** -0.5 * (math.gamma(3) / math.gamma(1.5)) ** (1 / 3)
        assert talenti_constant(3, 2.0) == pytest.approx(expected, rel=1e-12)

    def test_quotient_of_constant(self):
        fam = sobolev_trial_family(3, 1.5)
        const = fam[0]
        vol = 4 * math.pi / 3
        assert sobolev_quotient(const, 3, 1.5) == pytest.approx(vol ** (1 / 3 - 1 / 1.5), rel=1e-8)

    def test_zero_profile(self):
        zero = RadialProfile("zero", lambda r: np.zeros_like(np.asarray(r, float)), lambda r: np.zeros_like(np.asarray(r, float)))
        chk = iterative_sobolev_check(SpaceTimeProfile(zero, lambda t: np.ones_like(t)), 2, 1.5, 1.5, S_p=1.0)
        assert chk.passed and chk.lhs == 0

    def test_random_profiles_pass(self):
        profs = random_space_time_profiles(SplitMix64(0), 12, 1.0)
        chk = iterative_sobolev_check(profs, 2, 1.5, 1.5)
        assert chk.passed and 0 < chk.empirical_constant < 1

    def test_rejects_sigma_out_of_range(self):
        profs = random_space_time_profiles(SplitMix64(0), 1, 1.0)
        with pytest.raises(ValueError):
            iterative_sobolev_check(profs, 3, 1.5, 2.5, S_p=1.0)

    @settings(max_examples=8, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.3, 4.0))
    def test_radius_scaling_invariance(self, seed, R):
        pr = random_space_time_profiles(SplitMix64(seed), 1, 1.0)[0]
        moved = SpaceTimeProfile(_scaled(pr.radial, R), pr.amplitude)
        a = iterative_sobolev_check(pr, 3, 1.4, 1.3, R=1.0, S_p=1.0)
        b = iterative_sobolev_check(moved, 3, 1.4, 1.3, R=R, S_p=1.0)
        assert b.empirical_constant == pytest.approx(a.empirical_constant, rel=1e-9)
