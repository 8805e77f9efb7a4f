"""Constant-free structural forms of the local estimates.

Every function here returns the combination of exponents an estimate
predicts with all unknown multiplicative constants set to one.  Empirical
constants are fitted against these values by :mod:`fastplap.estimates.checks`.
All forms are covariant under the scaling group
``u -> lam^n u(lam x, lam^{np-2n+p} t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

from ..grid import ball_volume
from ..params import ProblemParams
from .core import HypothesisError

L1_COUNTEREXAMPLE = (
    "an L^1 upper bound for the extinction time is impossible for p < p_c: "
    "scaling counterexample: the rescaled family u_lam = lam^n u(lam x, lam^(np-2n+p) t) keeps the L^1 norm "
    "while T_lam = T_1 lam^-(np-2n+p) grows without bound as lam -> 0"
)


def smoothing_gate(params: ProblemParams, r: float) -> None:
    """Raise :class:`HypothesisError` unless the local smoothing effect is proved for (p, r)."""
    if r < 1:
        raise HypothesisError(f"smoothing needs r >= 1, got r={r}")
    if params.p <= params.p_c and not r > params.r_c_raw:
        raise HypothesisError(
            f"zone V: p={params.p} <= p_c={params.p_c:.6g} and r={r} <= r_c={params.r_c_raw:.6g}; "
            "no local smoothing effect holds there"
        )


def structural_smoothing_bound(params: ProblemParams, r: float, R0: float, M_r: float, t: float) -> float:
    """t^{-n theta_r} M_r^{p theta_r} + (t / R0^p)^{1/(2-p)}.

    Args:
        params: Equation parameters.
        r: Integrability exponent of the data.
        R0: Radius of the ball carrying the data.
        M_r: Integral of |u0|^r over ``B_R0``.
        t: Time, positive.

    Raises:
        HypothesisError: In zone V (p <= p_c and r <= r_c).
    """
    smoothing_gate(params, r)
    if not t > 0 or not R0 > 0 or M_r < 0:
        raise ValueError("need t > 0, R0 > 0 and M_r >= 0")
    p, n = params.p, params.n
    th = params.theta(r)
    first = 0.0 if M_r == 0 else t ** (-n * th) * M_r ** (p * th)
    return first + (t / R0**p) ** (1.0 / (2.0 - p))


def smoothing_terms(params: ProblemParams, r: float, R0: float, M_r: float, t: float) -> tuple[float, float]:
    """The two terms of :func:`structural_smoothing_bound` separately."""
    smoothing_gate(params, r)
    p, n = params.p, params.n
    th = params.theta(r)
    first = 0.0 if M_r == 0 else t ** (-n * th) * M_r ** (p * th)
    return first, (t / R0**p) ** (1.0 / (2.0 - p))


def smoothing_tau0(params: ProblemParams, R: float, R0: float) -> float:
    """Start fraction of the smoothing window, [(R0 - R)/(R0 + R)]^p."""
    if not 0 < R < R0:
        raise ValueError("need 0 < R < R0")
    return ((R0 - R) / (R0 + R)) ** params.p


def critical_time(params: ProblemParams, R: float, mass_L1: float, k_star: float = 1.0) -> float:
    """k* R^{p - n(2-p)} ||u0||_{L^1(B_R)}^{2-p}."""
    if not mass_L1 > 0:
        raise ValueError("critical time needs positive mass")
    p, n = params.p, params.n
    return k_star * R ** (p - n * (2 - p)) * mass_L1 ** (2 - p)


def harnack_ratio_factor(params: ProblemParams, r: float, R: float, l1: float, lr: float) -> float:
    """[||u||_1 R^{n/r} / (||u||_r R^n)]^{r p theta_r + 1/(2-p)}; identically 1 for r = 1."""
    if r == 1:
        return 1.0
    p, n = params.p, params.n
    th = params.theta(r)
    base = l1 * R ** (n / r) / (lr * R**n)
    return base ** (r * p * th + 1.0 / (2 - p))


def harnack_gate(params: ProblemParams, r: float) -> None:
    """Raise unless r >= max(1, r_c) and theta_r is finite and positive."""
    if r < max(1.0, params.r_c_raw):
        raise HypothesisError(f"Harnack inequality needs r >= max(1, r_c) = {max(1.0, params.r_c_raw):.6g}")
    th = params.theta(r)
    if not (math.isfinite(th) and th > 0):
        raise HypothesisError(f"theta_r is not positive and finite for r={r}")


def harnack_window(
    params: ProblemParams, R: float, t0: float, mass_t0: float, eps: float = 0.0, k_star: float = 1.0
) -> tuple[float, float]:
    """Intrinsic window (t0 + eps t*(t0), t0 + t*(t0))."""
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    ts = critical_time(params, R, mass_t0, k_star)
    return t0 + eps * ts, t0 + ts


def lr_stability_rhs(params: ProblemParams, r: float, R: float, R0: float, norm_s: float, dt: float) -> float:
    """||u(s)||_{L^r(B_R0)}^{2-p} + (t - s) |B_R0 \\ B_R|^{(2-p)/r} / (R0 - R)^p for r > 1."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if not 0 < R < R0:
        raise ValueError("need 0 < R < R0")
    p, n = params.p, params.n
    vol = ball_volume(n, R0) - ball_volume(n, R)
    return norm_s ** (2 - p) + dt * vol ** ((2 - p) / r) / (R0 - R) ** p


def l1_stability_increment(params: ProblemParams, R: float, R0: float, dt: float) -> float:
    """Second term of the affine L^1 form: |A| ((t - s)/(R0 - R)^p)^{1/(2-p)}, A = B_R0 minus B_R."""
    p, n = params.p, params.n
    vol = ball_volume(n, R0) - ball_volume(n, R)
    return vol * (dt / (R0 - R) ** p) ** (1.0 / (2 - p))


def positivity_rhs(params: ProblemParams, R: float, t: float, T_m: float, mass: float) -> float:
    """R^{p-n} t^{(p-1)/(2-p)} T_m^{-1/(2-p)} ||u0||_{L^1(B_R)}, compared with inf u^{p-1}."""
    p, n = params.p, params.n
    return R ** (p - n) * t ** ((p - 1) / (2 - p)) * T_m ** (-1.0 / (2 - p)) * mass


def aronson_caffarelli_terms(params: ProblemParams, R: float, t: float, T_m: float, inf_u: float) -> tuple[float, float]:
    """(t^{1/(2-p)} R^{-p/(2-p)}, t^{-(p-1)/(2-p)} T_m^{1/(2-p)} R^{-p} inf u^{p-1})."""
    p = params.p
    a = t ** (1 / (2 - p)) * R ** (-p / (2 - p))
    b = t ** (-(p - 1) / (2 - p)) * T_m ** (1 / (2 - p)) * R ** (-p) * max(inf_u, 0.0) ** (p - 1)
    return a, b


def gradient_constant(params: ProblemParams, R: float, R0: float) -> float:
    """(R0 - R)^{-2} |B_R0 \\ B_R|^{(2-p)/p}, the radial shape of the gradient constant."""
    p, n = params.p, params.n
    vol = ball_volume(n, R0) - ball_volume(n, R)
    return (R0 - R) ** -2.0 * vol ** ((2 - p) / p)


def gradient_blowup_exponent(params: ProblemParams) -> float:
    """Rate of the gradient constant as R -> R0: (2 - 3p)/p."""
    p = params.p
    return (2 - 3 * p) / p


def fet_lower_from_mass(params: ProblemParams, R: float, R0: float, mass: float) -> float:
    """Flux-based extinction lower bound R (R0 - 2R)^{p-1} [mass / |B_R0|]^{2-p}, needs 2R < R0."""
    if not 0 < 2 * R < R0:
        raise ValueError("lower bound needs 0 < 2R < R0")
    p, n = params.p, params.n
    if mass <= 0:
        return 0.0
    return R * (R0 - 2 * R) ** (p - 1) * (mass / ball_volume(n, R0)) ** (2 - p)


@dataclass(frozen=True)
class ExtinctionWindow:
    """Structural extinction-time window with unit constants.

    ``lower_form`` and ``upper_form`` name the estimate used on each side.
    """

    T_low: float
    T_high: float
    lower_form: str
    upper_form: str
    r_upper: float


def extinction_bound_window(
    params: ProblemParams,
    R: float,
    R0: float,
    u0_norms: Mapping[float, float],
    inner_mass: Optional[float] = None,
    upper: str = "auto",
) -> ExtinctionWindow:
    """Structural lower and upper bounds for the extinction time.

    Args:
        params: Equation parameters.
        R: Inner radius (support of the data for the lower bound).
        R0: Domain radius.
        u0_norms: Map from exponent ``r`` to ``||u0||_{L^r(B_R0)}``; key 1 is required.
        inner_mass: Integral of u0 over ``B_R``; defaults to ``u0_norms[1]``.
        upper: ``auto``, ``l1`` (good range), ``rc`` (at the critical exponent,
            p < p_c) or ``lr`` (largest supplied r > r_c, bounded domain).

    Returns:
        The structural window.

    Raises:
        HypothesisError: ``upper='l1'`` with p < p_c, or no applicable exponent.
    """
    p, n = params.p, params.n
    if 1 not in u0_norms:
        raise ValueError("u0_norms must contain the L^1 norm (key 1)")
    mass = u0_norms[1] if inner_mass is None else inner_mass
    if 2 * R < R0:
        T_low, low_form = fet_lower_from_mass(params, R, R0, mass), "flux"
    else:
        T_low, low_form = (R0 / 3) ** (p - n * (2 - p)) * mass ** (2 - p), "good-range-l1"

    if upper == "auto":
        if p >= params.p_c:
            upper = "l1"
        elif params.r_c_raw in u0_norms:
            upper = "rc"
        else:
            upper = "lr"
    if upper == "l1":
        if p < params.p_c:
            raise HypothesisError(L1_COUNTEREXAMPLE)
        T_high = R0 ** (p - n * (2 - p)) * u0_norms[1] ** (2 - p)
        r_up = 1.0
    elif upper == "rc":
        rc = params.r_c_raw
        if p >= params.p_c:
            raise HypothesisError("the critical-exponent upper bound applies for p < p_c")
        if rc not in u0_norms:
            raise ValueError(f"u0_norms lacks the r_c = {rc} norm")
        T_high = u0_norms[rc] ** (2 - p)
        r_up = rc
    elif upper == "lr":
        cands = [r for r in u0_norms if r > params.r_c_raw and r >= 1]
        if not cands:
            raise HypothesisError(f"no supplied exponent exceeds r_c = {params.r_c_raw:.6g}")
        r_up = max(cands)
        # T^{1/(2-p)} <= R0^{(rp + n(p-2))/(r(2-p))} ||u0||_r
        T_high = R0 ** ((r_up * p + n * (p - 2)) / r_up) * u0_norms[r_up] ** (2 - p)
    else:
        raise ValueError(f"unknown upper form {upper!r}")
    return ExtinctionWindow(T_low, T_high, low_form, upper, r_up)
