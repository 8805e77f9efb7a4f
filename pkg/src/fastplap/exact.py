"""Exact reference solutions, the scaling group, and the PDE residual oracle.

Catalog:
    separate-variable large solution  u = k t^{1/(2-p)} (R-|x|)^{-p/(2-p)}
    Barenblatt                        u = t^{-n th} F(|x| t^{-th}),  th = theta(1)
    extinction profile                U = (T1-t)_+^{1/(2-p)} X(|x|),  Delta_p X + X/(2-p) = 0
    rescaled                          u_lam = lam^n u(lam x, lam^{np-2n+p} t)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.special import beta as beta_fn

from .grid import ExtinctionReport, RadialGrid, Trajectory, p_laplacian_values, shell_factor
from .params import ProblemParams


class ShootingError(RuntimeError):
    """The shooting bracket does not contain a sign change of X(R)."""


@dataclass(frozen=True)
class ClosedFormSolution:
    kind: str
    params: ProblemParams
    constants: dict
    evaluator: Callable[[np.ndarray, float], np.ndarray]
    r_max: float = math.inf
    source: Optional["ClosedFormSolution"] = field(default=None, repr=False)

    def __call__(self, r, t: float) -> np.ndarray:
        return self.evaluator(np.asarray(r, dtype=float), float(t))


@dataclass(frozen=True)
class ScalingTransform:
    """x -> x/lam, u -> lam^n u, t -> t/lam^{np-2n+p} (maps u to u_lam)."""

    lam: float
    params: ProblemParams

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def space_factor(self) -> float:
        return self.lam

    @property
    def amplitude_factor(self) -> float:
        return self.lam**self.params.n

    @property
    def time_factor(self) -> float:
        return self.lam**self.params.scaling_exponent

    def extinction_time(self, T1: float) -> float:
        return T1 / self.time_factor


# separate-variable large solution ------------------------------------------


def large_constant_closed_form(p: float) -> float:
    """k with k^{2-p} = 2(p-1) p^{p-1} / (2-p)^{p-1}."""
    return (2 * (p - 1) * p ** (p - 1) / (2 - p) ** (p - 1)) ** (1 / (2 - p))


def large_constant_printed(p: float) -> float:
    """Value obtained with the denominator (2-p)^p instead (fails substitution)."""
    return (2 * (p - 1) * p ** (p - 1) / (2 - p) ** p) ** (1 / (2 - p))


def _large_pointwise_residual(k: float, p: float, d: float = 1.0, t: float = 1.0) -> float:
    # u_t - (|u_x|^{p-2} u_x)_x for u = k t^a d^{-b}, d = R - x, on the ansatz itself
    a = 1 / (2 - p)
    b = p / (2 - p)
    u_t = k * a * t ** (a - 1) * d ** (-b)
    ux = k * t**a * b * d ** (-b - 1)
    e = (b + 1) * (p - 1)
    flux_x = (k * t**a * b) ** (p - 1) * e * d ** (-e - 1)
    return u_t - flux_x


def calibrate_large_constant(p: float) -> float:
    """Root of the one-dimensional residual of the separate-variable ansatz in k."""
    if not (1 < p < 2):
        raise ValueError(f"p must lie in (1, 2), got {p}")
    a, b = 1 / (2 - p), p / (2 - p)
    e = (b + 1) * (p - 1)

    # log u_t - log flux_x at t = d = 1; k reaches ~1e35 near p = 2, so stay in logs
    def f(lk):
        return (lk + math.log(a)) - ((p - 1) * (lk + math.log(b)) + math.log(e))

    lk = brentq(f, -700.0, 700.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    k = math.exp(lk)
    if not abs(_large_pointwise_residual(k, p)) <= 1e-9 * k * a:
        raise ArithmeticError(f"large-solution calibration did not converge at p={p}")
    return k


def separate_variable_large(params: ProblemParams, R: float) -> ClosedFormSolution:
    """Large solution on B_R with k fixed by the residual of the ansatz.

    Exact in one dimension (half line ``x < R``); for ``n > 1`` it is the
    leading-order boundary behaviour only.
    """
    p = params.p
    if not (1 < p < 2):
        raise ValueError(f"p must lie in (1, 2), got {p}")
    if not R > 0:
        raise ValueError("R must be positive")
    k = calibrate_large_constant(p)
    a, b = params.time_exponent, params.boundary_exponent

    def ev(r, t):
        d = R - np.abs(r)
        out = np.full(np.shape(d), np.inf)
        ok = d > 0
        out[ok] = k * t**a * d[ok] ** (-b)
        return out

    const = {"k_p": k, "k_printed": large_constant_printed(p), "R": float(R)}
    return ClosedFormSolution("separate-variable-large", params, const, ev, r_max=float(R))


# Barenblatt -----------------------------------------------------------------


def barenblatt(params: ProblemParams, mass: float) -> ClosedFormSolution:
    """Self-similar source-type solution with total mass ``mass``."""
    p, n = params.p, params.n
    if p <= params.p_c:
        raise ValueError(f"Barenblatt profile needs p > p_c = {params.p_c:.6g}, got p={p}")
    if not mass > 0:
        raise ValueError("mass must be positive")
    th = params.theta(1.0)
    s = p / (p - 1)
    m = (p - 1) / (2 - p)
    k_B = ((2 - p) / p) * th ** (1 / (p - 1))
    S = shell_factor(n)
    integral = S * beta_fn(n / s, m - n / s) / s
    e = n / s - m
    C_B = (mass * k_B ** (n / s) / integral) ** (1 / e)

    def ev(r, t):
        xi = np.abs(r) * t ** (-th)
        return t ** (-n * th) * (C_B + k_B * xi**s) ** (-m)

    const = {"k_B": k_B, "C_B": C_B, "theta_1": th, "mass": float(mass), "F0": C_B ** (-m)}
    return ClosedFormSolution("barenblatt", params, const, ev)


# extinction profile -----------------------------------------------------------


@dataclass
class _Shot:
    sol: object
    r0: float
    A: float
    X_end: float


def _shoot(params: ProblemParams, A: float, R: float) -> _Shot:
    """One shot from X(0) = A.

    The ODE is integrated in the variables Y = X/A, s = A^{(2-p)/p} r, where
    every amplitude gives the same well-conditioned problem.  ``X_end`` is
    X(R), or -(R - rho)/R when X reaches zero at rho < R.
    """
    p, n = params.p, params.n
    c = 1 / (2 - p)
    kappa = A ** ((2 - p) / p)
    q = 1 / (p - 1)
    g = c / n
    s0 = 1e-6 * min(1.0, kappa * R)
    Y0 = 1 - (p - 1) / p * g**q * s0 ** (p / (p - 1))
    w0 = -g * s0**n

    def rhs(s, y):
        Y, w = y
        dY = np.sign(w) * np.abs(w / s ** (n - 1)) ** q
        return [dY, -(s ** (n - 1)) * Y * c]

    def hit_zero(s, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    sol = solve_ivp(
        rhs, (s0, kappa * R), [Y0, w0], method="DOP853", rtol=1e-12, atol=1e-15,
        dense_output=True, events=hit_zero,
    )
    if sol.status == -1:
        raise ShootingError(sol.message)
    dense = lambda r: A * sol.sol(kappa * np.asarray(r))[0]
    r0 = s0 / kappa
    if sol.status == 1:
        rho = float(sol.t_events[0][0]) / kappa
        return _Shot(dense, r0, A, -(R - rho) / R)
    return _Shot(dense, r0, A, A * float(sol.y[0, -1]))


def extinction_profile(
    params: ProblemParams,
    R: float,
    T1: float = 1.0,
    bracket: tuple[float, float] = (1e-6, 1e6),
    tol: float = 1e-10,
) -> ClosedFormSolution:
    """U = (T1-t)_+^{1/(2-p)} X(r) with X(R) = 0, X found by shooting on X(0)."""
    p = params.p
    if not (1 < p < 2):
        raise ValueError(f"p must lie in (1, 2), got {p}")
    if not R > 0 or not T1 > 0:
        raise ValueError("R and T1 must be positive")
    lo, hi = bracket
    f_lo = _shoot(params, lo, R).X_end
    f_hi = _shoot(params, hi, R).X_end
    if not (f_lo > 0 > f_hi):
        raise ShootingError(f"no sign change of X(R) for amplitudes in [{lo}, {hi}]")
    shot = None
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        shot = _shoot(params, mid, R)
        if abs(shot.X_end) < tol * mid or hi / lo - 1 < 1e-15:
            break
        if shot.X_end > 0:
            lo = mid
        else:
            hi = mid
    A = shot.A
    n = params.n
    q = 1 / (p - 1)
    g = A / ((2 - p) * n)
    r0 = shot.r0
    dense = shot.sol
    a = params.time_exponent

    def X(r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros(r.shape)
        inner = r < r0
        out[inner] = A - (p - 1) / p * g**q * r[inner] ** (p / (p - 1))
        mid_ = (~inner) & (r < R)
        if np.any(mid_):
            out[mid_] = dense(r[mid_])
        return np.maximum(out, 0.0)

    def ev(r, t):
        return max(T1 - t, 0.0) ** a * X(r)

    const = {"A": A, "T1": float(T1), "R": float(R), "X_R": shot.X_end}
    sol = ClosedFormSolution("extinction-profile", params, const, ev, r_max=float(R))
    object.__setattr__(sol, "profile", X)
    return sol


def extinction_amplitude_scaling(params: ProblemParams, R1: float, R2: float) -> float:
    """Ratio A(R2)/A(R1) = (R1/R2)^{p/(2-p)} implied by X -> mu X(mu^{(2-p)/p} r)."""
    return (R1 / R2) ** params.boundary_exponent


# scaling group ----------------------------------------------------------------


def rescale(source, lam: float):
    """u_lam(x,t) = lam^n u(lam x, lam^{np-2n+p} t) for closed forms or trajectories."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if isinstance(source, Trajectory):
        return _rescale_trajectory(source, lam)
    if not isinstance(source, ClosedFormSolution):
        raise TypeError("rescale expects a ClosedFormSolution or a Trajectory")
    if source.kind == "rescaled":
        return rescale(source.source, lam * source.constants["lambda"])
    if lam == 1.0:
        return source
    tr = ScalingTransform(lam, source.params)
    base = source.evaluator
    amp, sp, tf = tr.amplitude_factor, tr.space_factor, tr.time_factor

    def ev(r, t):
        return amp * base(sp * np.asarray(r, dtype=float), tf * t)

    const = dict(source.constants)
    const["lambda"] = float(lam)
    if "T1" in const:
        const["T1"] = tr.extinction_time(source.constants["T1"])
    return ClosedFormSolution("rescaled", source.params, const, ev, r_max=source.r_max / lam, source=source)


def _rescale_trajectory(tr: Trajectory, lam: float) -> Trajectory:
    st = ScalingTransform(lam, tr.params)
    ext = tr.extinction
    if ext is not None:
        ext = ExtinctionReport(
            None if ext.T_hat is None else ext.T_hat / st.time_factor,
            ext.threshold * st.amplitude_factor,
            ext.initial_sup * st.amplitude_factor,
            ext.final_sup * st.amplitude_factor,
            None if ext.T_refined is None else ext.T_refined / st.time_factor,
        )
    meta = dict(tr.meta)
    meta["lambda"] = meta.get("lambda", 1.0) * lam
    return Trajectory(
        tr.times / st.time_factor,
        tr.values * st.amplitude_factor,
        tr.grid.scaled(1 / lam),
        tr.params,
        ext,
        meta,
    )


# residual oracle ----------------------------------------------------------------


def residual(
    sol: ClosedFormSolution,
    g: RadialGrid,
    t: float,
    r_min: float = 0.0,
    r_max: Optional[float] = None,
    relative: bool = False,
) -> float:
    """max |u_t - Delta_p u| over interior nodes with r_min <= r <= r_max.

    u_t uses a centred difference with dt = 1e-4 t and Delta_p is the flux
    form with eps = 0.  The origin and the outer node are excluded.  With
    ``relative=True`` the value is divided by max |u_t| over the same nodes.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if g.R_outer >= sol.r_max:
        raise ValueError("grid reaches outside the solution's domain")
    p = sol.params.p
    r = g.radii
    dt = 1e-4 * t
    ut = (sol(r, t + dt) - sol(r, t - dt)) / (2 * dt)
    u = sol(r, t)
    lap = p_laplacian_values(u, g, p, 0.0)
    mask = np.zeros(g.N, dtype=bool)
    mask[1:-1] = True
    mask &= r >= r_min
    if r_max is not None:
        mask &= r <= r_max
    if not np.any(mask):
        return 0.0
    res = float(np.max(np.abs(ut[mask] - lap[mask])))
    if relative:
        scale = float(np.max(np.abs(ut[mask])))
        return res / scale if scale > 0 else res
    return res


def replay(sol: ClosedFormSolution, g: RadialGrid, times, threshold: Optional[float] = None) -> Trajectory:
    """Sample a closed form on a grid at the given times."""
    times = np.asarray(times, dtype=float)
    vals = np.array([sol(g.radii, t) for t in times])
    traj = Trajectory(times, vals, g, sol.params, meta={"closed_form": sol.kind})
    if threshold is not None:
        from .solver import detect_extinction

        traj.extinction = detect_extinction(traj, threshold)
    return traj
