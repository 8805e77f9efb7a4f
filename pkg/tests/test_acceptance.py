"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line; the lines are printed together in
the terminal summary (see ``conftest.py``).  Tolerances are the stated ones.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from fastplap import exact
from fastplap.estimates import checks as ck
from fastplap.estimates.core import HypothesisError
from fastplap.grid import build_radial_grid
from fastplap.harness import build_spec, parse_text, validate
from fastplap.inequalities import build_test_function, cp_inequality, cp_suite, moser_exponents
from fastplap.params import ProblemParams
from fastplap.solver import SolverConfig, mdp_spec, run_mdp

from conftest import ACCEPTANCE_LINES, mdp_run


def verdict(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def observed_orders(hs, errs):
    return [math.log(a / b) / math.log(ha / hb) for a, b, ha, hb in zip(errs, errs[1:], hs, hs[1:])]


@pytest.fixture(scope="module")
def lambda_family_16():
    return {lam: mdp_run(1.6, R=1.0 / lam) for lam in (1, 2, 4, 8)}


def test_criterion_01_cp_inequality():
    t0 = time.perf_counter()
    res = cp_suite(seed=0, draws=1_000_000)
    e1 = np.array([1.0, 0.0])
    lhs, rhs, _ = cp_inequality(2 * e1, e1, 1.5)
    seconds = time.perf_counter() - t0
    exact_gap = max(abs(lhs - (math.sqrt(2) - 1)), abs(rhs - (math.sqrt(2) - 1)))
    ok = res.violations == 0 and res.draws == 1_000_000 and exact_gap <= 1e-12 and seconds < 10
    verdict(1, ok, f"{res.draws} draws, {res.violations} violations, worst rel {res.worst_relative:.2e}; "
                   f"colinear gap {exact_gap:.1e}; {seconds:.2f}s")


def test_criterion_02_closed_form_residuals():
    t0 = time.perf_counter()
    nodes = (200, 400, 800, 1600)
    large = exact.separate_variable_large(ProblemParams(1.5, 1), 1.0)
    baren = exact.barenblatt(ProblemParams(1.6, 2), 1.0)
    g_l = [build_radial_grid(1, 0.5, N) for N in nodes]
    g_b = [build_radial_grid(2, 2.0, N) for N in nodes]
    r_l = [exact.residual(large, g, 0.05, relative=True) for g in g_l]
    r_b = [exact.residual(baren, g, 0.5, r_min=0.4, relative=True) for g in g_b]
    o_l = observed_orders([g.h for g in g_l], r_l)
    o_b = observed_orders([g.h for g in g_b], r_b)
    seconds = time.perf_counter() - t0
    ok = (
        large.constants["k_p"] == pytest.approx(3.0, rel=1e-13)
        and all(b < a for a, b in zip(r_l, r_l[1:])) and all(b < a for a, b in zip(r_b, r_b[1:]))
        and min(o_l + o_b) > 1.8 and r_l[-1] < 1e-4 and r_b[-1] < 1e-4 and seconds < 60
    )
    verdict(2, ok, f"large orders {[round(o, 3) for o in o_l]} final {r_l[-1]:.2e}; "
                   f"Barenblatt orders {[round(o, 3) for o in o_b]} final {r_b[-1]:.2e}; {seconds:.1f}s")


def test_criterion_03_extinction_scaling():
    t0 = time.perf_counter()
    lams = np.array([1.0, 2.0, 4.0, 8.0])
    T = np.array([mdp_run(1.3, R=1.0 / lam, N=800).extinction.T for lam in lams])
    slope = float(np.polyfit(np.log(lams), np.log(T), 1)[0])
    seconds = time.perf_counter() - t0
    ok = abs(slope - 0.8) <= 0.08 and seconds < 300
    verdict(3, ok, f"slope {slope:.6f} (target 0.8 +/- 10%), T_m {np.round(T, 6).tolist()}; {seconds:.1f}s")


def test_criterion_04_good_range_window():
    prm = ProblemParams(1.6, 3)
    masses = np.geomspace(0.1, 10.0, 10)
    radii = np.geomspace(0.5, 2.0, 10)[[0, 5, 2, 7, 4, 9, 1, 6, 3, 8]]
    kinds = ["bump", "indicator"] * 5
    ratios = []
    for M, R, kind in zip(masses, radii, kinds):
        tr = run_mdp(mdp_spec(prm, float(R), 3.0 * float(R), kind, float(M)), SolverConfig(grid_points=400))
        ratios.append(tr.extinction.T / (R ** (prm.p - prm.n * (2 - prm.p)) * M ** (2 - prm.p)))
    band = max(ratios) / min(ratios)
    verdict(4, band <= 10, f"10 runs, mass x100, R x4: T_m/(R^0.4 M^0.4) in [{min(ratios):.4f}, {max(ratios):.4f}], "
                           f"max/min {band:.3f}")


def test_criterion_05_benilan_crandall(mdp16, mdp13):
    rows = [ck.check_benilan_crandall(tr) for tr in (mdp16, mdp13)]
    sol = exact.separate_variable_large(ProblemParams(1.5, 1), 1.0)
    tr = exact.replay(sol, build_radial_grid(1, 0.5, 401), np.geomspace(0.01, 0.1, 21))
    w = tr.values * tr.times[:, None] ** (-1.0 / (2 - 1.5))
    spread = float(np.max(np.abs(w - w[0]) / np.max(np.abs(w[0]))))
    replay_row = ck.check_benilan_crandall(tr)
    ok = all(r.passed for r in rows) and spread < 1e-6 and replay_row.margin >= -1e-6
    verdict(5, ok, f"MDP margins {[f'{r.margin:.2e}' for r in rows]} (tol {rows[0].tolerance:.1e}); "
                   f"replay constancy {spread:.1e}")


def test_criterion_06_aleksandrov_and_flux(mdp16, mdp13):
    alek = [ck.check_aleksandrov(tr, 1.0) for tr in (mdp16, mdp13)]
    spec = mdp_spec(ProblemParams(1.6, 3), 1.0, 3.0, "bump", 1.0)
    base = SolverConfig(grid_points=401)
    errs = []
    for lvl in (0, 1, 2):
        tr = run_mdp(spec, base.refined(lvl))
        errs.append(ck.check_flux(tr, 1.0).context["relative_error"])
        alek.append(ck.check_aleksandrov(tr, 1.0))
    factors = [a / b for a, b in zip(errs, errs[1:])]
    ok = all(a.passed for a in alek) and errs[1] < 0.02 and min(factors) >= 2.0
    verdict(6, ok, f"Aleksandrov {sum(a.passed for a in alek)}/{len(alek)} runs; flux error at 401/801/1601 nodes "
                   f"{[f'{e:.2e}' for e in errs]}, reduction factors {[round(f, 2) for f in factors]}")


def test_criterion_07_energy():
    spec = mdp_spec(ProblemParams(1.6, 3), 1.0, 3.0, "bump", 1.0)
    tf = build_test_function(1.0, 2.0, 4.0, 3)
    base = SolverConfig(grid_points=401)
    rows = [ck.check_energy_inequality(run_mdp(spec, base.refined(lvl)), tf) for lvl in (0, 1)]
    defects = [max(0.0, -r.margin) for r in rows]
    fine = rows[-1]
    ok = (
        all(r.margin >= -1e-3 for r in rows) and defects[1] <= defects[0]
        and math.isfinite(fine.context["ut2_total"]) and fine.context["budget_ok"]
    )
    verdict(7, ok, f"margins {[f'{r.margin:.2e}' for r in rows]} (>= -1e-3, defect nonincreasing); "
                   f"int int u_t^2 phi = {fine.context['ut2_total']:.4g} <= budget {fine.context['budget']:.4g}")


def test_criterion_08_scale_invariance(lambda_family_16):
    smooth, harn = [], []
    for lam, tr in lambda_family_16.items():
        R = 1.0 / lam
        T = tr.extinction.T
        smooth.append(ck.check_smoothing(tr, 1.0, R, 2 * R).empirical_constant)
        harn.append(ck.check_harnack(tr, R, 0.0, 0.02 * T, "forward", r=1.0).empirical_constant)
    s_spread, h_spread = max(smooth) / min(smooth), max(harn) / min(harn)
    ok = s_spread - 1 <= 0.15 and h_spread - 1 <= 0.15 and all(np.isfinite(smooth + harn))
    verdict(8, ok, f"smoothing constants {[f'{c:.5g}' for c in smooth]} spread {s_spread - 1:.1e}; "
                   f"Harnack constants {[f'{c:.5g}' for c in harn]} spread {h_spread - 1:.1e}")


def test_criterion_09_moser():
    worst_gap, worst_lim = 0.0, 0.0
    for r0, n, p in ((2.0, 2, 1.5), (1.0, 3, 1.6), (3.0, 3, 1.2), (1.5, 4, 1.7)):
        lad = moser_exponents(r0, n, p, 200)
        worst_gap = max(worst_gap, lad.max_relative_gap)
        worst_lim = max(
            worst_lim,
            abs(lad.growth_ratios()[-1] / lad.growth_limit - 1),
            abs(lad.sum_ratios()[-1] / lad.sum_limit - 1),
        )
    fixed = moser_exponents(1.0, 3, 1.5, 200)  # q (2 - p) = 2 * 0.5
    exact_fixed = bool(np.all(fixed.recurrence == fixed.fixed_point))
    ok = worst_gap <= 1e-12 and worst_lim <= 1e-6 and exact_fixed
    verdict(9, ok, f"recurrence vs closed form {worst_gap:.1e} through k=200; limits within {worst_lim:.1e}; "
                   f"fixed point exact: {exact_fixed}")


def test_criterion_10_gating():
    base = parse_text("problem = mdp\nn = 3\nR = 1.0\nR_domain = 3.0\ninitial = bump mass=1.0\n")
    messages = []
    for extra in ({"p": 1.2, "checks": ("extinction_upper_l1",)}, {"p": 1.2, "r": 1.0, "checks": ("smoothing",)}):
        try:
            validate(build_spec({**base, **extra}))
            messages.append("")
        except HypothesisError as exc:
            messages.append(str(exc))
    ok = "impossible" in messages[0] and "counterexample" in messages[0] and "zone V" in messages[1]
    verdict(10, ok, "L1 upper bound at p=1.2 rejected: " + ("yes" if messages[0] else "no")
                    + "; smoothing in zone V rejected: " + ("yes" if messages[1] else "no"))
