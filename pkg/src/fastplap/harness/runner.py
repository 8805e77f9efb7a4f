"""Experiment pipeline: solve, check, sweep, self-test and report files."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import exact
from ..estimates import checks as ck
from ..estimates import structural as st
from ..estimates.core import BoundCheck, ConstantLedger, HypothesisError, MissingDataError, read_csv, write_csv
from ..grid import Trajectory, ball_integral, ball_norm, build_radial_grid
from ..inequalities import (
    build_test_function,
    colinear_ratio,
    cp_constant,
    cp_inequality,
    cp_suite,
    estimate_sobolev_constant,
    iterative_sobolev_check,
    moser_exponents,
    random_space_time_profiles,
    verify_test_function,
)
from ..rng import SplitMix64
from ..solver import InitialDatum, ProblemSpec, SolverConfig, l1_order_check, run_mdp, solve_large
from .config import ExperimentSpec, validate

SPREAD_TOL = {"lambda": 0.15, "grid_points": 0.20}
NOMINAL = {"benilan_crandall", "aleksandrov", "energy", "flux", "l1_order", "large_monotone", "residual"}


@dataclass
class Report:
    """Rows, ledger and metadata of one run, sweep or self-test."""

    spec: dict
    checks: list = field(default_factory=list)
    ledger: ConstantLedger = field(default_factory=ConstantLedger)
    timing: dict = field(default_factory=dict)
    refinement: dict = field(default_factory=dict)
    series: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def csv(self) -> str:
        return write_csv(self.checks)

    def to_json(self) -> dict:
        return {
            "spec": {k: ck_json(v) for k, v in self.spec.items()},
            "checks": [c.to_json() for c in self.checks],
            "ledger": self.ledger.snapshot(),
            "timing": self.timing,
            "refinement": {k: ck_json(v) for k, v in self.refinement.items()},
            "notes": list(self.notes),
            "passed": self.passed,
        }

    def summary(self) -> str:
        lines = [f"{c.verdict.upper():4s}  {c.name:24s} constant={c.empirical_constant:.6g}  margin={c.margin:.3g}"
                 for c in self.checks]
        lines.extend(f"note: {n}" for n in self.notes)
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks pass")
        return "\n".join(lines) + "\n"

    def plot_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("time", "quantity", "series", "value"))
        for row in self.series:
            w.writerow(tuple(repr(x) if isinstance(x, float) else x for x in row))
        return buf.getvalue()

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "csv": out / "checks.csv",
            "json": out / "report.json",
            "summary": out / "summary.txt",
            "plot": out / "plot_data.csv",
        }
        paths["csv"].write_text(self.csv())
        paths["json"].write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))
        paths["summary"].write_text(self.summary())
        paths["plot"].write_text(self.plot_csv())
        return paths


def ck_json(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [ck_json(x) for x in v]
    if isinstance(v, dict):
        return {str(k): ck_json(x) for k, x in v.items()}
    if hasattr(v, "item"):
        return ck_json(v.item())
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    return repr(v)


def read_report(out_dir) -> tuple[list[dict], str]:
    """Rows of ``checks.csv`` and the summary text of a report directory."""
    out = Path(out_dir)
    csv_path = out / "checks.csv"
    if not csv_path.exists():
        raise FileNotFoundError(f"no checks.csv in {out}")
    rows = read_csv(csv_path.read_text())
    summ = (out / "summary.txt").read_text() if (out / "summary.txt").exists() else ""
    return rows, summ


# solving ----------------------------------------------------------------------------


@dataclass
class RunResult:
    traj: Optional[Trajectory]
    levels: list = field(default_factory=list)
    solution: object = None
    seconds: float = 0.0


def _problem_spec(spec: ExperimentSpec, mass_factor: float = 1.0) -> ProblemSpec:
    ini = spec.initial
    datum = InitialDatum(ini.kind, mass=ini.mass * mass_factor, level=ini.level * mass_factor)
    return ProblemSpec(spec.params, spec.R, spec.R_domain, datum)


def _closed_form(spec: ExperimentSpec):
    prm = spec.params
    if spec.solution == "large":
        return exact.separate_variable_large(prm, spec.R)
    if spec.solution == "barenblatt":
        return exact.barenblatt(prm, spec.initial.mass)
    return exact.extinction_profile(prm, spec.R, spec.T1)


def _replay_geometry(spec: ExperimentSpec) -> tuple[float, np.ndarray]:
    Rd = spec.R_domain
    if spec.solution in ("large", "extinction-profile") and Rd >= spec.R:
        Rd = (0.5 if spec.solution == "large" else 0.9) * spec.R
    if spec.times:
        times = np.array(spec.times, dtype=float)
    elif spec.solution == "extinction-profile":
        times = np.linspace(spec.t_start, 1.2 * spec.T1, 241)
    elif spec.solution == "large":
        t0 = spec.t_start if spec.t_start > 0 else 0.01
        times = np.geomspace(t0, 10 * t0, 21)
    else:
        t0 = spec.t_start if spec.t_start > 0 else 0.1
        times = np.geomspace(t0, 100 * t0, 41)
    return Rd, times


def solve_experiment(spec: ExperimentSpec) -> RunResult:
    """Run the solve (or replay) that an experiment describes."""
    t = time.perf_counter()
    if spec.problem in ("mdp", "cauchy-truncated"):
        traj = run_mdp(_problem_spec(spec), spec.solver, spec.T_final)
        res = RunResult(traj)
    elif spec.problem == "large":
        ini = spec.initial
        g = build_radial_grid(spec.params.n, spec.R, spec.solver.grid_points)
        u0 = None if ini.kind == "zero" else InitialDatum(ini.kind, ini.mass, ini.level).sample(g, spec.R)
        levels = solve_large(u0, spec.params, spec.R, spec.levels, spec.solver, spec.T_final or 0.1)
        res = RunResult(levels[-1], levels)
    else:
        sol = _closed_form(spec)
        Rd, times = _replay_geometry(spec)
        g = build_radial_grid(spec.params.n, Rd, spec.solver.grid_points)
        sup0 = float(np.max(sol(g.radii, times[0])))
        thr = spec.solver.extinction_threshold * sup0 if spec.solution == "extinction-profile" else None
        traj = exact.replay(sol, g, times, threshold=thr)
        res = RunResult(traj, solution=sol)
    res.seconds = time.perf_counter() - t
    return res


# checks ------------------------------------------------------------------------------


def _residual_check(spec: ExperimentSpec, res: RunResult, tol: float = 1e-6) -> tuple[BoundCheck, dict]:
    sol = res.solution
    Rd, times = _replay_geometry(spec)
    t_eval = float(times[len(times) // 2]) if spec.solution != "extinction-profile" else 0.5 * spec.T1
    window = {"large": (0.0, None), "barenblatt": (0.2 * Rd, None), "extinction-profile": (0.1 * Rd, 0.9 * Rd)}
    r_min, r_max = window[spec.solution]
    Ns = [spec.solver.grid_points, 2 * (spec.solver.grid_points - 1) + 1]
    vals = []
    for N in Ns:
        g = build_radial_grid(spec.params.n, Rd, N)
        vals.append(exact.residual(sol, g, t_eval, r_min=r_min, r_max=r_max, relative=True))
    order = math.log2(vals[0] / vals[1]) if vals[1] > 0 and vals[0] > 0 else math.inf
    chk = BoundCheck(
        "residual", spec.params.p, spec.params.n, lhs=vals[1], structural_rhs=vals[0],
        empirical_constant=order, margin=(tol - vals[1]) / tol, R=spec.R, R0=Rd,
        context={"grid_points": Ns, "residuals": vals, "t": t_eval, "window": (r_min, r_max)},
    )
    return chk, {"residual_N": Ns, "residual": vals, "observed_order": order}


def _u0_norms(spec: ExperimentSpec, traj: Trajectory) -> dict:
    g = traj.grid
    u0 = traj.values[0]
    prm = spec.params
    out = {1: float(ball_norm(u0, g, g.R_outer, 1.0))}
    for r in {prm.r_c_raw, spec.r, 2.0}:
        if r >= 1:
            out[r] = float(ball_norm(u0, g, g.R_outer, r))
    return out


def _extinction_window_check(spec: ExperimentSpec, traj: Trajectory, upper: str) -> BoundCheck:
    prm = spec.params
    T = ck._extinction_time(traj)
    norms = _u0_norms(spec, traj)
    inner = float(ball_integral(traj.values[0], traj.grid, spec.R))
    w = st.extinction_bound_window(prm, spec.R, traj.grid.R_outer, norms, inner_mass=inner, upper=upper)
    c_high = T / w.T_high
    c_low = T / w.T_low if w.T_low > 0 else math.inf
    name = "extinction_upper_l1" if upper == "l1" else "extinction_window"
    return BoundCheck(
        name, prm.p, prm.n, lhs=T, structural_rhs=w.T_high, empirical_constant=c_high,
        margin=0.0 if math.isfinite(c_high) and math.isfinite(c_low) else -math.inf,
        r=w.r_upper, R=spec.R, R0=traj.grid.R_outer,
        context={"T_low": w.T_low, "c_low": c_low, "lower_form": w.lower_form, "upper_form": w.upper_form},
    )


def _l1_order(spec: ExperimentSpec, traj: Trajectory) -> BoundCheck:
    T = ck._extinction_time(traj)
    outs = tuple(np.geomspace(1e-3 * T, 0.95 * T, 60))
    cfg = replace(spec.solver, output_times=outs)
    a = run_mdp(_problem_spec(spec), cfg, 0.95 * T)
    b = run_mdp(_problem_spec(spec, 2.0), cfg, 0.95 * T)
    k = min(len(a), len(b))
    a = Trajectory(a.times[:k], a.values[:k], a.grid, a.params, a.extinction, a.meta)
    b = Trajectory(b.times[:k], b.values[:k], b.grid, b.params, b.extinction, b.meta)
    return l1_order_check(a, b)


def _large_monotone(res: RunResult, spec: ExperimentSpec) -> BoundCheck:
    defects = [float(tr.meta.get("monotonicity_defect", 0.0)) for tr in res.levels[:-1]]
    worst = max(defects) if defects else 0.0
    tol = 10 * spec.solver.newton_tol
    return BoundCheck(
        "large_monotone", spec.params.p, spec.params.n, lhs=worst, structural_rhs=0.0, empirical_constant=1.0,
        margin=-max(worst, 0.0), R=spec.R, tolerance=tol, context={"defects": defects, "levels": list(spec.levels)},
    )


def _harnack(spec: ExperimentSpec, traj: Trajectory, mode: str, res: RunResult) -> BoundCheck:
    if spec.problem == "closed-form-replay":
        return ck.check_elliptic_ratio(traj, min(spec.R, _replay_geometry(spec)[0]))
    T = ck._extinction_time(traj)
    t0 = spec.harnack_t0 * T
    if mode == "alternative":
        return ck.check_harnack_alternative(traj, spec.R, t0, spec.r, spec.k_star)
    theta = 0.0 if mode == "elliptic" else spec.harnack_theta * T
    return ck.check_harnack(traj, spec.R, t0, theta, mode, spec.r, spec.harnack_eps, spec.k_star)


def run_checks(spec: ExperimentSpec, res: RunResult) -> tuple[list[BoundCheck], dict]:
    traj = res.traj
    prm = spec.params
    R, R0 = spec.R, spec.R0_eff
    if spec.problem == "large":
        R, R0 = 0.5 * spec.R, 0.75 * spec.R
    rows, refinement = [], {}
    for name in spec.checks:
        if name == "smoothing":
            c = ck.check_smoothing(traj, spec.r, R, R0)
        elif name == "lr_stability":
            c = ck.check_lr_stability(traj, spec.r, R, R0)
        elif name == "positivity":
            c = ck.check_positivity(traj, R, spec.k_star)
        elif name == "aronson_caffarelli":
            c = ck.check_aronson_caffarelli(traj, R)
        elif name.startswith("harnack_"):
            c = _harnack(spec, traj, name.split("_", 1)[1], res)
        elif name == "benilan_crandall":
            c = ck.check_benilan_crandall(traj, tol=1e-6 if spec.problem == "closed-form-replay" else None)
        elif name == "aleksandrov":
            c = ck.check_aleksandrov(traj, R)
        elif name == "flux":
            c = ck.check_flux(traj, R)
        elif name == "energy":
            c = ck.check_energy_inequality(traj, build_test_function(R, R0, 4.0, prm.n))
        elif name == "gradient":
            c = ck.check_gradient_bound(traj, R, R0)
        elif name == "mass_lower":
            c = ck.check_mass_lower(traj, R, R0)
        elif name == "extinction_window":
            c = _extinction_window_check(spec, traj, "auto")
        elif name == "extinction_upper_l1":
            c = _extinction_window_check(spec, traj, "l1")
        elif name == "l1_order":
            c = _l1_order(spec, traj)
        elif name == "large_envelope":
            c = ck.check_large_envelope(traj, spec.R)
        elif name == "large_monotone":
            c = _large_monotone(res, spec)
        elif name == "residual":
            c, refinement = _residual_check(spec, res, spec.residual_tol)
        else:  # pragma: no cover - names are validated on parse
            raise ValueError(name)
        rows.append(c)
    return rows, refinement


def _series(traj: Trajectory, label: str) -> list:
    g = traj.grid
    mass = np.asarray(ball_integral(traj.values, g, g.R_outer))
    out = []
    for t, s, c, m in zip(traj.times, traj.sup_norms(), traj.values[:, 0], mass):
        out.append((float(t), "sup", label, float(s)))
        out.append((float(t), "centre", label, float(c)))
        out.append((float(t), "mass", label, float(m)))
    return out


def run_spec(spec: ExperimentSpec, label: str = "run") -> Report:
    """Validate, solve, check; no files are written."""
    validate(spec)
    rep = Report(spec.echo())
    res = solve_experiment(spec)
    t = time.perf_counter()
    rows, refinement = run_checks(spec, res)
    rep.checks = rows
    rep.refinement = refinement
    rep.timing = {"solve_seconds": res.seconds, "check_seconds": time.perf_counter() - t}
    if res.traj is not None:
        rep.series = _series(res.traj, label)
        ext = res.traj.extinction
        if ext is not None and ext.T is not None:
            rep.refinement.setdefault("T_hat", ext.T)
    for c in rows:
        if math.isfinite(c.empirical_constant):
            rep.ledger.record(c.name, [c.empirical_constant], family=spec.name)
    return rep


def run(spec_path, out_dir=None) -> Report:
    from .config import load_spec

    spec = load_spec(spec_path)
    rep = run_spec(spec)
    if out_dir is not None:
        rep.write(out_dir)
    return rep


# sweeps -----------------------------------------------------------------------------------


def _swept(spec: ExperimentSpec, param: str, value: float) -> ExperimentSpec:
    src = dict(spec.source)
    if param == "lambda":
        lam = float(value)
        prm = spec.params
        tf = lam ** prm.scaling_exponent
        src["R"] = spec.R / lam
        src["R_domain"] = spec.R_domain / lam
        if spec.R0 is not None:
            src["R0"] = spec.R0 / lam
        for key in ("T_final", "dt_init", "dt_max"):
            if src.get(key) is not None:
                src[key] = src[key] / tf
        if spec.initial.kind == "constant":
            raise ValueError("lambda sweep needs a profile with finite mass")
    elif param == "grid_points":
        src["grid_points"] = int(value)
    elif param == "p":
        src["p"] = float(value)
    elif param == "R":
        ratio = float(value) / spec.R
        src["R"] = float(value)
        src["R_domain"] = spec.R_domain * ratio
        if spec.R0 is not None:
            src["R0"] = spec.R0 * ratio
    elif param == "eps":
        src["eps"] = float(value)
    else:
        raise ValueError(f"cannot sweep {param!r}")
    src.pop("sweep_param", None)
    src.pop("sweep_values", None)
    return spec.with_values(**src)


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def sweep_spec(spec: ExperimentSpec, param: str, values: Sequence[float]) -> Report:
    """One run per value plus cross-run rows (slopes, spreads, Cauchy tests)."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    specs = [_swept(spec, param, v) for v in values]
    for s in specs:
        validate(s)
    if param == "eps" and spec.problem in ("mdp", "cauchy-truncated"):
        pilot = run_mdp(_problem_spec(specs[0]), specs[0].solver, specs[0].T_final)
        T = ck._extinction_time(pilot)
        outs = tuple(np.geomspace(1e-3 * T, 0.9 * T, 40))
        specs = [replace(s, solver=replace(s.solver, output_times=outs), T_final=0.9 * T) for s in specs]
    rep = Report({**spec.echo(), "sweep_param": param, "sweep_values": values})
    reps, results = [], []
    t0 = time.perf_counter()
    for v, s in zip(values, specs):
        res = solve_experiment(s)
        rows, refinement = run_checks(s, res)
        results.append(res)
        r = Report(s.echo(), rows, refinement=refinement)
        reps.append(r)
        for c in rows:
            c.context["sweep"] = {param: v}
            rep.checks.append(c)
        if res.traj is not None:
            rep.series.extend(_series(res.traj, f"{param}={v!r}"))
    rep.timing = {"total_seconds": time.perf_counter() - t0}
    prm = spec.params

    names = [c.name for c in reps[0].checks]
    for name in names:
        consts = [next((c.empirical_constant for c in r.checks if c.name == name), math.nan) for r in reps]
        if all(math.isfinite(x) and x > 0 for x in consts):
            rep.ledger.record(name, consts, family=f"{spec.name}:{param}")
        else:
            rep.ledger.record(name, [x if math.isfinite(x) else math.inf for x in consts] or [math.nan], family=f"{spec.name}:{param}")
        tol = SPREAD_TOL.get(param)
        if tol is not None and name not in NOMINAL and all(math.isfinite(x) and x > 0 for x in consts):
            spread = max(consts) / min(consts)
            rep.checks.append(BoundCheck(
                f"spread:{name}", prm.p, prm.n, lhs=spread, structural_rhs=1.0 + tol, empirical_constant=spread,
                margin=(tol - (spread - 1.0)) / tol, context={"constants": consts, "values": values},
            ))

    T_hats = [r.traj.extinction.T if r.traj is not None and r.traj.extinction is not None else None for r in results]
    if param == "lambda" and len(values) > 1 and all(T is not None for T in T_hats):
        slope = fit_slope(values, T_hats)
        expected = -prm.scaling_exponent
        rel = abs(slope - expected) / abs(expected)
        rep.checks.append(BoundCheck(
            "extinction_scaling", prm.p, prm.n, lhs=slope, structural_rhs=expected, empirical_constant=slope / expected,
            margin=(0.1 - rel) / 0.1, context={"T_m": T_hats, "lambda": values, "relative_error": rel},
        ))
    if param == "eps" and len(values) > 1 and spec.problem in ("mdp", "cauchy-truncated"):
        inner = results[0].traj.grid.radii <= spec.R * (1 + 1e-12)
        k = min(len(r.traj) for r in results)
        diffs = [float(np.max(np.abs(a.traj.values[:k, inner] - b.traj.values[:k, inner])))
                 for a, b in zip(results, results[1:])]
        steps = [b - a for a, b in zip(diffs, diffs[1:])]
        worst = max(steps) if steps else 0.0
        scale = max(diffs) if diffs and max(diffs) > 0 else 1.0
        rep.checks.append(BoundCheck(
            "eps_cauchy", prm.p, prm.n, lhs=diffs[-1], structural_rhs=diffs[0], empirical_constant=1.0,
            margin=-max(worst, 0.0) / scale, context={"sup_differences": diffs, "eps": values},
        ))
    if param == "grid_points" and spec.problem == "closed-form-replay":
        res_vals = [r.refinement.get("residual", [math.nan])[0] for r in reps]
        if len(values) > 1 and all(x > 0 for x in res_vals):
            order = -fit_slope([v - 1 for v in values], res_vals)
            rep.checks.append(BoundCheck(
                "residual_order", prm.p, prm.n, lhs=order, structural_rhs=2.0, empirical_constant=order,
                margin=(order - 1.8) / 1.8, context={"residuals": res_vals, "grid_points": values},
            ))
    if param == "grid_points" and all(T is not None for T in T_hats) and len(values) > 2:
        d = [abs(b - a) for a, b in zip(T_hats, T_hats[1:])]
        rep.checks.append(BoundCheck(
            "extinction_convergence", prm.p, prm.n, lhs=d[-1], structural_rhs=d[0], empirical_constant=1.0,
            margin=0.0 if all(y <= x * (1 + 1e-9) or y < 1e-12 for x, y in zip(d, d[1:])) else -1.0,
            context={"T_hat": T_hats, "grid_points": values},
        ))
    return rep


def sweep(spec_path, parameter: str, values: Sequence[float], out_dir=None) -> Report:
    from .config import load_spec

    rep = sweep_spec(load_spec(spec_path), parameter, values)
    if out_dir is not None:
        rep.write(out_dir)
    return rep


# self-test -------------------------------------------------------------------------------------

SUITES = ("cp", "moser", "test_function", "sobolev")


def selftest(
    seed: int = 0,
    suites: Optional[Sequence[str]] = SUITES,
    cp_override: Optional[float] = None,
    draws: int = 1_000_000,
) -> Report:
    """Inequality-lab suites.  ``cp_override`` injects a constant (e.g. 2) to show the suite bites."""
    suites = tuple(suites or ())
    for s in suites:
        if s not in SUITES:
            raise ValueError(f"unknown suite {s!r}; known: {', '.join(SUITES)}")
    rep = Report({"selftest": list(suites), "seed": seed, "cp_override": cp_override, "draws": draws})
    t0 = time.perf_counter()
    if "cp" in suites:
        res = cp_suite(seed, draws, c_override=cp_override)
        rep.checks.append(BoundCheck(
            "cp_inequality", math.nan, 0, lhs=float(res.violations), structural_rhs=0.0,
            empirical_constant=res.worst_relative, margin=-float(res.violations),
            context={"draws": res.draws, "seconds": res.seconds, "c_override": cp_override},
        ))
        e1 = np.array([1.0, 0.0])
        lhs, rhs, _ = cp_inequality(2 * e1, e1, 1.5, cp_override)
        gap = abs(lhs - rhs)
        rep.checks.append(BoundCheck(
            "cp_colinear", 1.5, 2, lhs=float(lhs), structural_rhs=float(rhs), empirical_constant=float(lhs / rhs),
            margin=(1e-12 - gap) / 1e-12 if cp_override is None else float(lhs - rhs) / float(rhs),
            context={"expected": math.sqrt(2) - 1},
        ))
        for p in (1.1, 1.3):
            ratio = colinear_ratio(p, 1 + 1e-3)
            c = cp_constant(p)
            err = abs(ratio - c) / c
            rep.checks.append(BoundCheck(
                "cp_near_optimal", p, 1, lhs=ratio, structural_rhs=c, empirical_constant=ratio / c,
                margin=(1e-4 - err) / 1e-4, context={"lambda": 1 + 1e-3},
            ))
    if "moser" in suites:
        for r0, n, p in ((2.0, 2, 1.5), (1.0, 3, 1.6), (3.0, 3, 1.2), (1.5, 4, 1.7)):
            lad = moser_exponents(r0, n, p, 200)
            inc = lad.r0 > lad.fixed_point
            if inc:
                g_err = abs(lad.growth_ratios()[-1] - lad.growth_limit) / abs(lad.growth_limit)
                s_err = abs(lad.sum_ratios()[-1] - lad.sum_limit) / abs(lad.sum_limit)
            else:
                g_err = s_err = 0.0
            worst = max(lad.max_relative_gap / 1e-12, g_err / 1e-6, s_err / 1e-6)
            rep.checks.append(BoundCheck(
                "moser", p, n, lhs=lad.max_relative_gap, structural_rhs=1e-12, empirical_constant=lad.growth_limit,
                margin=1.0 - worst if lad.increasing == inc else -1.0, r=r0,
                context={"growth_error": g_err, "sum_error": s_err, "increasing": lad.increasing},
            ))
        lad = moser_exponents(1.0 * 3 / 1.5 * (2 - 1.5), 3, 1.5, 200)
        fixed = float(np.max(np.abs(lad.recurrence - lad.fixed_point)))
        rep.checks.append(BoundCheck(
            "moser_fixed_point", 1.5, 3, lhs=fixed, structural_rhs=0.0, empirical_constant=1.0,
            margin=-fixed, r=lad.r0,
        ))
    if "test_function" in suites:
        for gamma, alpha, beta in ((2.0, 1.5, None), (4.0, 1.5, 1.5), (3.5, 2.0, 1.0)):
            tf = build_test_function(1.0, 2.0, gamma, 3)
            rep.checks.append(verify_test_function(tf, alpha, beta))
    if "sobolev" in suites:
        rng = SplitMix64(seed)
        for n, p, sigma in ((2, 1.5, 2.0), (3, 1.5, 1.5), (3, 1.8, 2.0)):
            profiles = random_space_time_profiles(rng, 12, 1.0)
            S_p, _ = estimate_sobolev_constant(n, p)
            rep.checks.append(iterative_sobolev_check(profiles, n, p, sigma, S_p=S_p))
            rep.ledger.set(f"sobolev_S_p(n={n},p={p})", S_p, family="radial trial family")
    rep.timing = {"seconds": time.perf_counter() - t0}
    for c in rep.checks:
        if math.isfinite(c.empirical_constant):
            rep.ledger.record(c.name, [c.empirical_constant], family="selftest")
    return rep
