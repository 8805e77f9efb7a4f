"""Trajectory checks: each returns a :class:`BoundCheck` with an empirical constant.

Conventions shared by all checks:

* the first snapshot is the initial datum and times are measured from it;
* ``x0`` is the origin of the radial grid;
* balls are resolved node-wise (``r_i <= R``) for sup and inf, and with the
  piecewise-linear quadrature for integrals;
* the empirical constant is the extremal ratio over the run, so with that
  constant the inequality holds at every sampled time (margin 0).  When a
  ``constant`` is supplied (for instance from a ledger) the margin measures
  the slack against it instead.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from ..grid import (
    RadialGrid,
    Trajectory,
    ball_integral,
    ball_norm,
    ball_volume,
    annulus_integral,
    face_gradient,
    flux_function,
)
from ..inequalities import TestFunction, build_test_function
from .core import BoundCheck, HypothesisError, MissingDataError
from . import structural as st

_TINY = 1e-300


def _times(traj: Trajectory) -> np.ndarray:
    return traj.times - traj.times[0]


def _inner(g: RadialGrid, R: float) -> np.ndarray:
    return g.radii <= R * (1 + 1e-12)


def _solver_tol(traj: Trajectory) -> float:
    cfg = traj.meta.get("cfg")
    return 10 * (cfg.newton_tol if cfg is not None else 1e-10)


def _margin(empirical: float, constant: Optional[float], lower: bool = False) -> float:
    """Slack of ``empirical`` against ``constant``; 0 when no constant is given."""
    if constant is None or not math.isfinite(empirical):
        return 0.0 if math.isfinite(empirical) else -math.inf
    if lower:
        return empirical / constant - 1.0 if constant > 0 else 0.0
    return 1.0 - empirical / constant if constant > 0 else (0.0 if empirical <= 0 else -math.inf)


def gradient_energy(values, g: RadialGrid, p: float, R: Optional[float] = None, weight=None) -> np.ndarray:
    """Face quadrature of int |u_r|^p w dx over B_R (faces with r_f <= R).

    ``weight`` is a callable of the radius, evaluated at faces.  Accepts
    leading axes.
    """
    D = np.abs(face_gradient(values, g)) ** p
    w = g.face_areas * g.h
    if weight is not None:
        w = w * np.asarray(weight(g.faces), dtype=float)
    if R is not None:
        w = w * (g.faces <= R * (1 + 1e-12))
    return np.sum(D * w, axis=-1)


def default_k_star(traj: Trajectory, R: float) -> float:
    """k* with t*(0) = T_m / 2, which scales exactly like the extinction time."""
    T_m = _extinction_time(traj)
    mass = float(ball_integral(traj.values[0], traj.grid, R))
    if mass <= 0:
        raise MissingDataError("k* needs positive initial mass in B_R")
    return 0.5 * T_m / st.critical_time(traj.params, R, mass)


def _extinction_time(traj: Trajectory) -> float:
    rep = traj.extinction
    if rep is None or rep.T is None:
        raise MissingDataError("trajectory carries no extinction time; run to extinction first")
    return float(rep.T) - float(traj.times[0])


# smoothing -------------------------------------------------------------------


def check_smoothing(
    traj: Trajectory, r: float, R: float, R0: float, constant: Optional[float] = None
) -> BoundCheck:
    """sup over B_R x (tau0 t, t] of u against the two-term smoothing form.

    The data norm is taken on ``B_R0`` at the first snapshot; R0 may not
    exceed the grid radius.
    """
    prm = traj.params
    st.smoothing_gate(prm, r)
    g = traj.grid
    tau0 = st.smoothing_tau0(prm, R, R0)
    t = _times(traj)
    M_r = float(ball_integral(np.abs(traj.values[0]) ** r, g, R0))
    sups = np.max(np.abs(traj.values[:, _inner(g, R)]), axis=1)
    worst, arg, lhs_w, rhs_w = 0.0, None, 0.0, math.nan
    for k in range(1, t.size):
        win = (t > tau0 * t[k]) & (t <= t[k])
        lhs = float(np.max(sups[win]))
        rhs = st.structural_smoothing_bound(prm, r, R0, M_r, float(t[k]))
        ratio = lhs / rhs
        if ratio > worst or arg is None:
            worst, arg, lhs_w, rhs_w = ratio, k, lhs, rhs
    return BoundCheck(
        "smoothing", prm.p, prm.n, lhs=lhs_w, structural_rhs=rhs_w, empirical_constant=worst,
        margin=_margin(worst, constant), r=r, R=R, R0=R0,
        context={"tau0": tau0, "M_r": M_r, "t_worst": float(t[arg]) if arg is not None else math.nan},
    )


# L^r stability ---------------------------------------------------------------


def _pairs(t: np.ndarray):
    s_idx, t_idx = np.triu_indices(t.size, k=1)
    return s_idx, t_idx


def check_lr_stability(
    traj: Trajectory, r: float, R: float, R0: float, C1: float = 1.0, constant: Optional[float] = None
) -> BoundCheck:
    """Local L^r stability over all snapshot pairs s < t.

    For r > 1 the fitted constant multiplies (t - s)|B_R0 minus B_R|^{(2-p)/r}/(R0 - R)^p.
    For r = 1 the affine form ||u(t)||_{L^1(B_R)} <= C1 ||u(s)||_{L^1(B_R0)} + C2 |A|((t-s)/(R0-R)^p)^{1/(2-p)}
    is used with ``C1`` fixed and ``C2`` fitted.
    """
    if r < 1:
        raise HypothesisError(f"L^r stability needs r >= 1, got {r}")
    prm = traj.params
    p = prm.p
    g = traj.grid
    if not 0 < R < R0 <= g.R_outer * (1 + 1e-12):
        raise ValueError("need 0 < R < R0 <= grid radius")
    t = _times(traj)
    inner = np.asarray(ball_norm(traj.values, g, R, r))
    outer = np.asarray(ball_norm(traj.values, g, R0, r))
    s_i, t_i = _pairs(t)
    dt = t[t_i] - t[s_i]
    if r > 1:
        lhs = inner[t_i] ** (2 - p)
        base = outer[s_i] ** (2 - p)
        geo = st.lr_stability_rhs(prm, r, R, R0, 0.0, 1.0)
        need = np.maximum(lhs - base, 0.0) / (dt * geo)
        form = "power"
    else:
        lhs = inner[t_i]
        base = C1 * outer[s_i]
        geo = np.array([st.l1_stability_increment(prm, R, R0, float(x)) for x in dt]) if dt.size else dt
        need = np.maximum(lhs - base, 0.0) / np.maximum(geo, _TINY)
        form = "affine"
    if need.size == 0:
        return BoundCheck("lr_stability", p, prm.n, 0.0, 0.0, 0.0, 0.0, r=r, R=R, R0=R0)
    k = int(np.argmax(need))
    C = float(need[k])
    rhs = float(base[k] + (geo * dt[k] if r > 1 else geo[k]))
    return BoundCheck(
        "lr_stability", p, prm.n, lhs=float(lhs[k]), structural_rhs=rhs, empirical_constant=C,
        margin=_margin(C, constant), r=r, R=R, R0=R0,
        context={"form": form, "C1": C1 if r == 1 else math.nan, "s": float(t[s_i[k]]), "t": float(t[t_i[k]])},
    )


# positivity and Aronson-Caffarelli ---------------------------------------------


def check_positivity(
    traj: Trajectory, R: float, k_star: Optional[float] = None, constant: Optional[float] = None
) -> BoundCheck:
    """inf_{B_R} u^{p-1} >= C R^{p-n} t^{(p-1)/(2-p)} T_m^{-1/(2-p)} ||u0||_{L^1(B_R)} for 0 < t < t*."""
    prm = traj.params
    p = prm.p
    g = traj.grid
    T_m = _extinction_time(traj)
    mass = float(ball_integral(traj.values[0], g, R))
    if mass <= 0:
        return BoundCheck("positivity", p, prm.n, 0.0, 0.0, 0.0, 0.0, R=R, context={"trivial": True})
    if k_star is None:
        k_star = default_k_star(traj, R)
    t_star = st.critical_time(prm, R, mass, k_star)
    t = _times(traj)
    infs = np.min(traj.values[:, _inner(g, R)], axis=1)
    sel = np.nonzero((t > 0) & (t < t_star))[0]
    if sel.size == 0:
        raise MissingDataError(f"no snapshot inside (0, t*) with t* = {t_star:.6g}")
    lhs = np.maximum(infs[sel], 0.0) ** (p - 1)
    rhs = np.array([st.positivity_rhs(prm, R, float(t[k]), T_m, mass) for k in sel])
    ratios = lhs / rhs
    k = int(np.argmin(ratios))
    C = float(ratios[k])
    positive = bool(np.all(infs[sel] > 0))
    margin = _margin(C, constant, lower=True) if positive else -1.0
    return BoundCheck(
        "positivity", p, prm.n, lhs=float(lhs[k]), structural_rhs=float(rhs[k]), empirical_constant=C,
        margin=margin, R=R, R0=g.R_outer,
        context={"t_star": t_star, "k_star": k_star, "T_m": T_m, "mass": mass, "positive": positive,
                 "dist_over_R": (g.R_outer) / R},
    )


def fit_two_constants(lhs: float, a: np.ndarray, b: np.ndarray, grid: int = 401) -> tuple[float, float]:
    """Smallest (C1, C2) in the max-norm with lhs <= C1 a_k + C2 b_k for every k.

    C1 runs over a log grid between the values that make either term
    sufficient alone; C2 is then the least admissible value.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if lhs <= 0:
        return 0.0, 0.0
    with np.errstate(divide="ignore"):
        c1_alone = float(np.max(lhs / a)) if np.all(a > 0) else math.inf
    lo = float(np.min(lhs / np.maximum(a, _TINY)))
    hi = c1_alone if math.isfinite(c1_alone) else 1e6 * max(lo, 1.0)
    best = (math.inf, math.inf)
    for c1 in np.concatenate((np.geomspace(max(lo, 1e-300) * 1e-3, hi, grid), [hi])):
        rest = lhs - c1 * a
        if np.any((rest > 0) & (b <= 0)):
            continue
        c2 = float(np.max(np.where(rest > 0, rest / np.maximum(b, _TINY), 0.0)))
        if max(c1, c2) < max(best):
            best = (float(c1), c2)
    return best


def check_aronson_caffarelli(traj: Trajectory, R: float) -> BoundCheck:
    """R^{-n} int_{B_R} u0 <= C1 t^{1/(2-p)} R^{-p/(2-p)} + C2 t^{-(p-1)/(2-p)} T_m^{1/(2-p)} R^{-p} inf u^{p-1}."""
    prm = traj.params
    p, n = prm.p, prm.n
    g = traj.grid
    T_m = _extinction_time(traj)
    t = _times(traj)
    lhs = float(ball_integral(traj.values[0], g, R)) / R**n
    infs = np.min(traj.values[:, _inner(g, R)], axis=1)
    sel = np.nonzero((t > 0) & (t < T_m))[0]
    if sel.size == 0:
        raise MissingDataError("no snapshot inside (0, T_m)")
    terms = np.array([st.aronson_caffarelli_terms(prm, R, float(t[k]), T_m, float(infs[k])) for k in sel])
    C1, C2 = fit_two_constants(lhs, terms[:, 0], terms[:, 1])
    C = max(C1, C2)
    return BoundCheck(
        "aronson_caffarelli", p, n, lhs=lhs, structural_rhs=float(np.max(terms.sum(axis=1))),
        empirical_constant=C, margin=0.0 if math.isfinite(C) else -math.inf, R=R, R0=g.R_outer,
        context={"C1": C1, "C2": C2, "T_m": T_m, "samples": int(sel.size)},
    )


# Harnack ---------------------------------------------------------------------


def check_harnack(
    traj: Trajectory,
    R: float,
    t0: float,
    theta: float = 0.0,
    mode: str = "forward",
    r: float = 1.0,
    eps: float = 0.25,
    k_star: Optional[float] = None,
    constant: Optional[float] = None,
) -> BoundCheck:
    """Intrinsic Harnack inequality inside the window (t0 + eps t*(t0), t0 + t*(t0)).

    ``mode`` is ``forward`` (inf at t + theta), ``backward`` (t - theta) or
    ``elliptic`` (theta = 0).  The structural right side is
    eps^{r p theta_r/(2-p)} [ratio]^{r p theta_r + 1/(2-p)} u(x0, t), with the
    ratio factor equal to one when r = 1.  Times are interpolated linearly
    between snapshots; t runs over the snapshots in the window.
    """
    prm = traj.params
    p = prm.p
    if mode not in ("forward", "backward", "elliptic"):
        raise ValueError(f"unknown Harnack mode {mode!r}")
    if mode == "elliptic" and theta != 0:
        raise ValueError("elliptic mode needs theta = 0")
    if mode != "elliptic" and not theta > 0:
        raise ValueError("forward and backward modes need theta > 0")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    st.harnack_gate(prm, r)
    g = traj.grid
    t_abs0 = float(traj.times[0])
    u_t0 = traj.at_time(t_abs0 + t0)
    l1 = float(ball_norm(u_t0, g, R, 1.0))
    if l1 <= 0:
        raise MissingDataError("Harnack window needs positive mass at t0")
    lr = float(ball_norm(u_t0, g, R, r))
    if k_star is None:
        k_star = default_k_star(traj, R)
    lo, hi = st.harnack_window(prm, R, t0, l1, eps, k_star)
    shift = {"forward": theta, "backward": -theta, "elliptic": 0.0}[mode]
    if hi - lo <= abs(shift):
        raise ValueError(
            f"theta={theta:g} does not fit the intrinsic window: t*(t0) = {hi - t0:.6g}, "
            f"window ({lo:.6g}, {hi:.6g})"
        )
    t = _times(traj)
    t_end = float(t[-1])
    cand = [float(x) for x in t if lo < x < hi and lo < x + shift < hi and x + shift <= t_end and x <= t_end]
    if not cand:
        raise ValueError(f"no snapshot inside the Harnack window ({lo:.6g}, {hi:.6g}); t*(t0) = {hi - t0:.6g}")
    factor = eps ** (r * p * prm.theta(r) / (2 - p)) * st.harnack_ratio_factor(prm, r, R, l1, lr)
    inner = _inner(g, R)
    ratios, lhs_v, rhs_v = [], [], []
    for x in cand:
        centre = float(traj.at_time(t_abs0 + x)[0])
        inf = float(np.min(traj.at_time(t_abs0 + x + shift)[inner]))
        rhs = factor * centre
        lhs_v.append(inf)
        rhs_v.append(rhs)
        ratios.append(inf / rhs if rhs > 0 else math.inf)
    k = int(np.argmin(ratios))
    h1 = float(ratios[k])
    return BoundCheck(
        f"harnack_{mode}", p, prm.n, lhs=lhs_v[k], structural_rhs=rhs_v[k], empirical_constant=h1,
        margin=_margin(h1, constant, lower=True) if h1 > 0 else -1.0, r=r, R=R, R0=g.R_outer,
        context={"t0": t0, "theta": theta, "eps": eps, "k_star": k_star, "t_star": hi - t0,
                 "window": (lo, hi), "ratio_factor": st.harnack_ratio_factor(prm, r, R, l1, lr),
                 "samples": len(cand)},
    )


def check_harnack_alternative(
    traj: Trajectory, R: float, t0: float = 0.0, r: float = 1.0, k_star: Optional[float] = None
) -> BoundCheck:
    """sup_{B_R} u(t) <= C1 ||u(t0)||_{L^r(B_2R)}^{r p theta_r}/(t - t0)^{n theta_r} + C2 [ratio]^{1/(p-1)} inf_{B_R} u(t).

    Evaluated at snapshots in (t0, t0 + t*(t0)); (C1, C2) fitted jointly.
    """
    prm = traj.params
    p, n = prm.p, prm.n
    st.harnack_gate(prm, r)
    g = traj.grid
    if 2 * R > g.R_outer * (1 + 1e-12):
        raise ValueError("alternative Harnack needs B_2R inside the grid")
    t_abs0 = float(traj.times[0])
    u_t0 = traj.at_time(t_abs0 + t0)
    l1 = float(ball_norm(u_t0, g, R, 1.0))
    lr = float(ball_norm(u_t0, g, R, r))
    lr2 = float(ball_norm(u_t0, g, 2 * R, r))
    if l1 <= 0:
        raise MissingDataError("needs positive mass at t0")
    if k_star is None:
        k_star = default_k_star(traj, R)
    hi = t0 + st.critical_time(prm, R, l1, k_star)
    t = _times(traj)
    sel = np.nonzero((t > t0) & (t < hi))[0]
    if sel.size == 0:
        raise ValueError("no snapshot inside (t0, t0 + t*(t0))")
    th = prm.theta(r)
    ratio = 1.0 if r == 1 else (lr * R**n / (l1 * R ** (n / r))) ** (1 / (p - 1))
    inner = _inner(g, R)
    sups = np.max(traj.values[sel][:, inner], axis=1)
    infs = np.min(traj.values[sel][:, inner], axis=1)
    a = lr2 ** (r * p * th) / (t[sel] - t0) ** (n * th)
    b = ratio * infs
    # each time gives its own lhs; normalize so the two-constant fit sees lhs = 1
    C1, C2 = fit_two_constants(1.0, a / sups, b / sups)
    C = max(C1, C2)
    return BoundCheck(
        "harnack_alternative", p, n, lhs=float(np.max(sups)), structural_rhs=float(np.max(a + b)),
        empirical_constant=C, margin=0.0 if math.isfinite(C) else -math.inf, r=r, R=R, R0=2 * R,
        context={"C1": C1, "C2": C2, "t0": t0, "t_star": hi - t0},
    )


# monotonicity-type properties ----------------------------------------------------


def check_benilan_crandall(traj: Trajectory, tol: Optional[float] = None, t_origin: Optional[float] = None) -> BoundCheck:
    """t^{-1/(2-p)} u(x, t) nonincreasing in t at every node.

    Times are absolute (``t_origin`` defaults to 0, or to the trajectory meta
    entry ``t_origin``); snapshots at t <= 0 are skipped.  The margin is the
    largest increase between consecutive snapshots, relative to the larger
    of the two row maxima, with the sign flipped.
    """
    prm = traj.params
    p = prm.p
    if tol is None:
        tol = _solver_tol(traj)
    if t_origin is None:
        t_origin = float(traj.meta.get("t_origin", 0.0))
    t = traj.times - t_origin
    keep = t > 0
    w = traj.values[keep] * t[keep, None] ** (-1.0 / (2 - p))
    if w.shape[0] < 2:
        return BoundCheck("benilan_crandall", p, prm.n, 0.0, 0.0, 1.0, 0.0, tolerance=tol)
    inc = w[1:] - w[:-1]
    scale = np.maximum(np.max(np.abs(w[1:]), axis=1), np.max(np.abs(w[:-1]), axis=1))
    rel = np.max(inc, axis=1) / np.maximum(scale, _TINY)
    k = int(np.argmax(rel))
    worst = float(rel[k])
    return BoundCheck(
        "benilan_crandall", p, prm.n, lhs=float(np.max(inc[k])), structural_rhs=0.0, empirical_constant=1.0,
        margin=-max(worst, 0.0), tolerance=tol,
        context={"worst_relative_increase": worst, "at_time": float(traj.times[keep][k + 1])},
    )


def _require_mdp(traj: Trajectory, R: float) -> None:
    spec = traj.meta.get("spec")
    if spec is not None and spec.boundary != "zero":
        raise ValueError("check needs a zero-boundary (MDP) run")
    g = traj.grid
    outside = g.radii > R * (1 + 1e-12)
    if np.any(traj.values[0, outside] != 0):
        raise ValueError(f"initial datum is not supported in B_R, R={R}")
    if 3 * R > g.R_outer * (1 + 1e-12):
        raise ValueError("MDP geometry needs R_domain >= 3R")


def check_aleksandrov(traj: Trajectory, R: float, R_domain: Optional[float] = None, tol: float = 1e-10) -> BoundCheck:
    """u(x0, t) >= mean of u over A2 = B_{R_domain} minus B_{2R} at every snapshot."""
    _require_mdp(traj, R)
    prm = traj.params
    g = traj.grid
    Rd = g.R_outer if R_domain is None else R_domain
    vol = ball_volume(prm.n, Rd) - ball_volume(prm.n, 2 * R)
    means = np.asarray(annulus_integral(traj.values, g, 2 * R, Rd)) / vol
    centre = traj.values[:, 0]
    scale = np.maximum(np.max(np.abs(traj.values), axis=1), _TINY)
    slack = (centre - means) / scale
    k = int(np.argmin(slack))
    return BoundCheck(
        "aleksandrov", prm.p, prm.n, lhs=float(means[k]), structural_rhs=float(centre[k]),
        empirical_constant=1.0, margin=float(slack[k]), R=R, R0=Rd, tolerance=tol,
        context={"time": float(traj.times[k]), "pointwise_defect": float(np.max(
            (np.max(traj.values[:, g.radii >= 2 * R * (1 - 1e-12)], axis=1) - centre) / scale))},
    )


def check_elliptic_ratio(traj: Trajectory, R: float, constant: Optional[float] = None) -> BoundCheck:
    """sup_{B_R} u(t) <= C inf_{B_R} u(t) at every snapshot; also records both ratios to the centre value."""
    prm = traj.params
    inner = _inner(traj.grid, R)
    v = traj.values[:, inner]
    live = np.max(v, axis=1) > 0
    if not np.any(live):
        raise MissingDataError("no positive snapshot for the elliptic ratio")
    v = v[live]
    sup, inf, centre = np.max(v, axis=1), np.min(v, axis=1), v[:, 0]
    ratio = np.where(inf > 0, sup / np.maximum(inf, _TINY), np.inf)
    k = int(np.argmax(ratio))
    emp = float(ratio[k])
    return BoundCheck(
        "harnack_elliptic", prm.p, prm.n, lhs=float(sup[k]), structural_rhs=float(inf[k]), empirical_constant=emp,
        margin=_margin(emp, constant), R=R,
        context={"inf_over_centre": float(np.min(inf / centre)), "sup_over_centre": float(np.max(sup / centre))},
    )


# flux identity -----------------------------------------------------------------


def flux_identity_sides(traj: Trajectory, tf: TestFunction, s_index: int = 0) -> tuple[float, float]:
    """(int u(s) phi, int_s^T int grad-flux . grad phi + int u(T_hat) phi).

    The time integral uses the trapezoid rule over the snapshots, spatial
    terms use face gradients against the exact test-function derivative,
    and the remainder left at the detected extinction snapshot is added.
    """
    g = traj.grid
    p = traj.params.p
    rep = traj.extinction
    if rep is None or rep.T is None:
        raise MissingDataError("flux identity needs a run that reaches extinction")
    k_end = int(np.searchsorted(traj.times, rep.T, side="left"))
    phi = tf.phi(g.radii)
    lhs = float(ball_integral(traj.values[s_index] * phi, g, g.R_outer))
    vals = traj.values[s_index : k_end + 1]
    F = flux_function(face_gradient(vals, g), p, 0.0)
    dphi = tf.grad(g.faces)
    integrand = np.sum(F * dphi * g.face_areas * g.h, axis=-1)
    rhs = float(np.trapezoid(integrand, traj.times[s_index : k_end + 1]))
    rhs += float(ball_integral(traj.values[k_end] * phi, g, g.R_outer))
    return lhs, rhs


def check_flux(
    traj: Trajectory, R: float, R_domain: Optional[float] = None, testfn: Optional[TestFunction] = None,
    s_index: int = 0, tol: float = 0.02,
) -> BoundCheck:
    """Relative error of the flux identity on an MDP run; passes below ``tol``."""
    _require_mdp(traj, R)
    g = traj.grid
    prm = traj.params
    if testfn is None:
        Rd = g.R_outer if R_domain is None else R_domain
        testfn = build_test_function(R, min(2 * R, Rd), 4.0, prm.n)
    lhs, rhs = flux_identity_sides(traj, testfn, s_index)
    err = abs(lhs - rhs) / lhs if lhs > 0 else abs(rhs)
    return BoundCheck(
        "flux", prm.p, prm.n, lhs=lhs, structural_rhs=rhs, empirical_constant=rhs / lhs if lhs > 0 else 1.0,
        margin=(tol - err) / tol, R=R, R0=testfn.R0,
        context={"relative_error": err, "s": float(traj.times[s_index]), "tolerance": tol},
    )


# energy ------------------------------------------------------------------------


def energy_terms(traj: Trajectory, tf: TestFunction) -> dict:
    """Per-interval terms of the time-integrated local energy inequality.

    Returns arrays over the intervals [t_k, t_{k+1}]: ``dE`` (energy change),
    ``dissipation`` = (p/n) int int u_t^2 phi with u_t the difference
    quotient, ``forcing`` = (p/2) int int |u_r|^{2(p-1)} lap(phi) by the
    trapezoid rule, and the energy series ``E``.
    """
    g = traj.grid
    p, n = traj.params.p, traj.params.n
    vals = traj.values
    E = gradient_energy(vals, g, p, weight=tf.phi)
    lap_f = tf.laplacian(g.faces)
    G = np.sum(np.abs(face_gradient(vals, g)) ** (2 * (p - 1)) * lap_f * g.face_areas * g.h, axis=-1)
    dt = np.diff(traj.times)
    ut = np.diff(vals, axis=0) / dt[:, None]
    phi = tf.phi(g.radii)
    D = np.sum(ut**2 * phi * g.cell_volumes, axis=-1) * dt
    return {
        "E": E,
        "dE": np.diff(E),
        "dissipation": (p / n) * D,
        "forcing": (p / 2) * 0.5 * (G[1:] + G[:-1]) * dt,
        "ut2": D,
    }


def check_energy_inequality(traj: Trajectory, testfn: TestFunction, tol: float = 1e-3) -> BoundCheck:
    """Time-integrated local energy inequality between consecutive snapshots.

    The margin is the worst of -(dE + dissipation - forcing) divided by the
    energy scale max E.  The accumulated int int u_t^2 phi and the budget it
    must respect are reported in the context.
    """
    eps = traj.meta.get("eps")
    if eps is None or not eps > 0:
        raise ValueError("energy check needs a regularized run (eps > 0)")
    if testfn.gamma < 2:
        raise ValueError("energy check needs a twice differentiable test function (gamma >= 2)")
    prm = traj.params
    terms = energy_terms(traj, testfn)
    scale = float(np.max(terms["E"]))
    if scale <= 0:
        return BoundCheck("energy", prm.p, prm.n, 0.0, 0.0, 1.0, 0.0, tolerance=tol,
                          context={"ut2_total": 0.0, "budget": 0.0})
    excess = terms["dE"] + terms["dissipation"] - terms["forcing"]
    k = int(np.argmax(excess))
    margin = -float(excess[k]) / scale
    ut2 = float(np.sum(terms["ut2"]))
    budget = (prm.n / prm.p) * (float(terms["E"][0] - terms["E"][-1]) + float(np.sum(terms["forcing"])))
    return BoundCheck(
        "energy", prm.p, prm.n, lhs=float(terms["dE"][k] + terms["dissipation"][k]),
        structural_rhs=float(terms["forcing"][k]), empirical_constant=1.0, margin=margin,
        R=testfn.R, R0=testfn.R0, tolerance=tol,
        context={"ut2_total": ut2, "budget": budget, "energy_scale": scale,
                 "interval": (float(traj.times[k]), float(traj.times[k + 1])),
                 "budget_ok": bool(math.isfinite(ut2) and ut2 <= budget * (1 + tol) + tol * scale)},
    )


# gradient and mass ----------------------------------------------------------------


def check_gradient_bound(traj: Trajectory, R: float, R0: float, constant: Optional[float] = None) -> BoundCheck:
    """[int_{B_R} |grad u(t)|^p]^{(2-p)/p} <= [int_{B_R0} |grad u(s)|^p]^{(2-p)/p} + K (t - s).

    The empirical K is reported relative to the radial shape
    (R0 - R)^{-2} |B_R0 minus B_R|^{(2-p)/p}; the raw quotient is kept in the
    context as ``K_raw`` for blow-up fits.
    """
    prm = traj.params
    p = prm.p
    g = traj.grid
    if not 0 < R < R0 <= g.R_outer * (1 + 1e-12):
        raise ValueError("need 0 < R < R0 <= grid radius")
    a = gradient_energy(traj.values, g, p, R) ** ((2 - p) / p)
    b = gradient_energy(traj.values, g, p, R0) ** ((2 - p) / p)
    t = _times(traj)
    s_i, t_i = _pairs(t)
    if s_i.size == 0:
        return BoundCheck("gradient", p, prm.n, 0.0, 0.0, 0.0, 0.0, R=R, R0=R0)
    raw = np.maximum(a[t_i] - b[s_i], 0.0) / (t[t_i] - t[s_i])
    k = int(np.argmax(raw))
    shape = st.gradient_constant(prm, R, R0)
    K = float(raw[k]) / shape
    return BoundCheck(
        "gradient", p, prm.n, lhs=float(a[t_i[k]]), structural_rhs=float(b[s_i[k]] + shape * (t[t_i[k]] - t[s_i[k]])),
        empirical_constant=K, margin=_margin(K, constant), R=R, R0=R0,
        context={"K_raw": float(raw[k]), "shape": shape, "finite": bool(np.all(np.isfinite(a)))},
    )


def fit_blowup_exponent(gaps, Ks) -> float:
    """Least-squares slope of log K against log (R0 - R)."""
    x = np.log(np.asarray(gaps, dtype=float))
    y = np.log(np.asarray(Ks, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def check_mass_lower(
    traj: Trajectory, R: float, R0: float, testfn: Optional[TestFunction] = None, constant: Optional[float] = None
) -> BoundCheck:
    """int_{B_R} u(t) <= int_{B_R0} u(s) + C [(int |grad u(s)|^p phi)^{1/p} + K^{1/(2-p)} (s - t)^{1/(2-p)}] for t <= s.

    C and K carry the geometric factors (R0 - R)|A|^{(p-1)/p} and
    (R0 - R)^{-2}|A|^{(2-p)/p}; one common constant is fitted.  The implied
    extinction-time lower bound (s = T, t = 0) is compared with the detected
    extinction time when one is available.
    """
    prm = traj.params
    p, n = prm.p, prm.n
    g = traj.grid
    if not 0 < R < R0 <= g.R_outer * (1 + 1e-12):
        raise ValueError("need 0 < R < R0 <= grid radius")
    if testfn is None:
        testfn = build_test_function(R, R0, 4.0, n)
    A = ball_volume(n, R0) - ball_volume(n, R)
    Cg = (R0 - R) * A ** ((p - 1) / p)
    Kg = (R0 - R) ** -2.0 * A ** ((2 - p) / p)
    mi = np.asarray(ball_integral(traj.values, g, R))
    mo = np.asarray(ball_integral(traj.values, g, R0))
    grad = gradient_energy(traj.values, g, p, weight=testfn.phi) ** (1 / p)
    t = _times(traj)
    t_i, s_i = _pairs(t)  # t_i < s_i
    lhs = mi[t_i]
    base = mo[s_i]
    structural = Cg * (grad[s_i] + Kg ** (1 / (2 - p)) * (t[s_i] - t[t_i]) ** (1 / (2 - p)))
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(lhs > base, (lhs - base) / structural, 0.0)
    k = int(np.argmax(need)) if need.size else 0
    C = float(need[k]) if need.size else 0.0
    ctx = {"Cg": Cg, "Kg": Kg}
    rep = traj.extinction
    if rep is not None and rep.T is not None and mi[0] > 0 and C > 0:
        T_low = (mi[0] / (C * Cg)) ** (2 - p) / Kg
        ctx["T_low"] = T_low
        ctx["T_hat"] = float(rep.T) - float(traj.times[0])
        ctx["fet_ok"] = bool(ctx["T_hat"] >= T_low * (1 - 1e-9))
    margin = _margin(C, constant)
    if ctx.get("fet_ok") is False:
        margin = min(margin, -1.0)
    return BoundCheck(
        "mass_lower", p, n, lhs=float(lhs[k]) if need.size else 0.0,
        structural_rhs=float(base[k] + structural[k]) if need.size else 0.0,
        empirical_constant=C, margin=margin, R=R, R0=R0, context=ctx,
    )


def check_large_envelope(traj: Trajectory, R: Optional[float] = None) -> BoundCheck:
    """u <= C1 t^{1/(2-p)} d^{-p/(2-p)} + C2 with d = R - r, over all interior nodes and t > 0."""
    prm = traj.params
    p = prm.p
    g = traj.grid
    R = g.R_outer if R is None else R
    d = R - g.radii
    t = traj.times
    rows = t > 0
    cols = d > 0
    u = traj.values[np.ix_(rows, cols)]
    a = t[rows, None] ** (1 / (2 - p)) * d[None, cols] ** (-p / (2 - p))
    live = u > 0
    if not np.any(live):
        return BoundCheck("large_envelope", p, prm.n, 0.0, 0.0, 0.0, 0.0, R=R)
    C1, C2 = fit_two_constants(1.0, (a / np.where(live, u, 1.0))[live], (1.0 / np.where(live, u, 1.0))[live])
    C = max(C1, C2)
    return BoundCheck(
        "large_envelope", p, prm.n, lhs=float(np.max(u)), structural_rhs=float(np.max(a)),
        empirical_constant=C, margin=0.0 if math.isfinite(C) else -math.inf, R=R,
        context={"C1": C1, "C2": C2},
    )
