"""Pointwise and functional inequalities behind the estimates.

* the monotonicity inequality
  (a-b).(|a|^{p-2}a - |b|^{p-2}b) >= c_p |a-b|^2 / (|a|^{2-p} + |b|^{2-p})
* cut-off functions phi = psi^gamma built on a quintic smooth step
* the exponent ladder r_{k+1} = r_k (1 + 1/q) + p - 2 of the Moser iteration
* the iterative (space-time) Sobolev inequality, with Sobolev and Poincare
  constants estimated over families of radial trial profiles
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .estimates.core import BoundCheck
from .grid import annulus_volume, shell_factor
from .rng import SplitMix64

# monotonicity inequality ---------------------------------------------------------


def cp_constant(p: float) -> float:
    """min{1, 2(p-1)} for 1 < p < 2 and 2 at p = 2 (where equality holds)."""
    if not (1 < p <= 2):
        raise ValueError(f"p must lie in (1, 2], got {p}")
    if p == 2:
        return 2.0
    return min(1.0, 2.0 * (p - 1.0))


def cp_sides(a, b, p, c: Optional[float] = None):
    """Both sides of the inequality for (batches of) vectors.

    ``a`` and ``b`` have shape (..., d); ``p`` broadcasts against the batch
    shape.  ``c=None`` uses :func:`cp_constant` pointwise.  ``|0|^{p-2} 0`` is
    taken as 0.

    The left side is evaluated as
    |a|^{p-2}|a-b|^2 + (|a|^{p-2} - |b|^{p-2}) (a-b).b, with the difference of
    powers written through expm1/log1p, so that nearly equal vectors (where
    the inequality is tight) do not lose accuracy to cancellation.  Pairs
    with |a|/|b| outside (1/2, 3/2) use the textbook form instead.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 0:
        a, b = a[None], b[None]
    p = np.asarray(p, dtype=float)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    d = a - b
    dd = np.sum(d * d, axis=-1)
    both = (na > 0) & (nb > 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        sa = np.where(both, na, 1.0)
        sb = np.where(both, nb, 1.0)
        rel = np.sum(d * (a + b), axis=-1) / ((sa + sb) * sb)  # (|a| - |b|)/|b|
        pa = sa ** (p - 2.0)
        close = np.abs(rel) < 0.5
        diff = np.where(
            close,
            sb ** (p - 2.0) * np.expm1((p - 2.0) * np.log1p(np.where(close, rel, 0.0))),
            pa - sb ** (p - 2.0),
        )
        lhs_near = pa * dd + diff * np.sum(d * b, axis=-1)
        # away from |a| = |b| the textbook form has no cancellation
        fa = (pa * (na > 0))[..., None] * a
        fb = (sb ** (p - 2.0) * (nb > 0))[..., None] * b
        lhs_both = np.where(close, lhs_near, np.sum(d * (fa - fb), axis=-1))
        # one vector vanishes: lhs = |other|^p
        lhs_one = np.where(na > 0, na, nb) ** p
    lhs = np.where(both, lhs_both, np.where((na > 0) | (nb > 0), lhs_one, 0.0))
    if c is None:
        c = np.where(p >= 2.0, 2.0, np.minimum(1.0, 2.0 * (p - 1.0)))
    denom = na ** (2.0 - p) + nb ** (2.0 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = np.where(denom > 0, c * dd / np.where(denom > 0, denom, 1.0), 0.0)
    return lhs, rhs


def cp_sides_direct(a, b, p, c: Optional[float] = None):
    """Textbook evaluation (a-b).(Phi(a)-Phi(b)); used as an independent cross-check."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    na = np.linalg.norm(a, axis=-1)
    nb = np.linalg.norm(b, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        fa = np.where(na > 0, na ** (p - 2.0), 0.0)[..., None] * a
        fb = np.where(nb > 0, nb ** (p - 2.0), 0.0)[..., None] * b
    lhs = np.sum((a - b) * (fa - fb), axis=-1)
    if c is None:
        c = np.where(p >= 2.0, 2.0, np.minimum(1.0, 2.0 * (p - 1.0)))
    denom = na ** (2.0 - p) + nb ** (2.0 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = np.where(denom > 0, c * np.sum((a - b) ** 2, axis=-1) / denom, 0.0)
    return lhs, rhs


def cp_inequality(a, b, p: float, c: Optional[float] = None, slack: float = 1e-12):
    """Returns (lhs, rhs, passed) for a single pair of vectors."""
    if not (1 < p <= 2):
        raise ValueError(f"p must lie in (1, 2], got {p}")
    lhs, rhs = cp_sides(a, b, p, c)
    lhs, rhs = float(lhs), float(rhs)
    scale = max(abs(lhs), abs(rhs))
    return lhs, rhs, lhs >= rhs - slack * scale


def draw_cp_cases(rng: SplitMix64, count: int, dims: Sequence[int] = (1, 2, 3, 5), p_range=(1.05, 2.0)):
    """Random (a, b, p) with Cauchy components and log-uniform scales down to 1e-8.

    Vectors of lower dimension are zero padded to ``max(dims)``.
    """
    D = max(dims)
    dim = np.asarray(dims)[(rng.uniform(count) * len(dims)).astype(int)]
    mask = np.arange(D)[None, :] < dim[:, None]
    a = rng.cauchy(count * D).reshape(count, D) * mask
    b = rng.cauchy(count * D).reshape(count, D) * mask
    a *= 10.0 ** rng.uniform(count, -8.0, 2.0)[:, None]
    b *= 10.0 ** rng.uniform(count, -8.0, 2.0)[:, None]
    # a share of near-colinear and near-equal pairs, where the inequality is tight
    k = count // 10
    lam = 1.0 + 10.0 ** rng.uniform(k, -6.0, 1.0)
    b[:k] = a[:k] * lam[:, None]
    p = rng.uniform(count, *p_range)
    return a, b, p


@dataclass(frozen=True)
class CpSuiteResult:
    draws: int
    violations: int
    worst_relative: float
    seconds: float = 0.0


def cp_suite(seed: int = 0, draws: int = 1_000_000, c_override: Optional[float] = None, chunk: int = 250_000) -> CpSuiteResult:
    """Randomized check; a violation is lhs < rhs - 1e-12 max(|lhs|, |rhs|)."""
    import time

    t0 = time.perf_counter()
    rng = SplitMix64(seed)
    viol = 0
    worst = -math.inf
    done = 0
    while done < draws:
        m = min(chunk, draws - done)
        a, b, p = draw_cp_cases(rng, m)
        lhs, rhs = cp_sides(a, b, p, c_override)
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        ok = scale > 0
        rel = np.where(ok, (rhs - lhs) / np.where(ok, scale, 1.0), -1.0)
        viol += int(np.count_nonzero(rel > 1e-12))
        worst = max(worst, float(rel.max()))
        done += m
    return CpSuiteResult(draws, viol, worst, time.perf_counter() - t0)


def colinear_ratio(p: float, lam: float) -> float:
    """lhs / (|a-b|^2/(|a|^{2-p}+|b|^{2-p})) for a = lam e1, b = e1."""
    lhs, rhs = cp_sides(np.array([lam]), np.array([1.0]), p, 1.0)
    return float(lhs / rhs)


# test functions --------------------------------------------------------------------


def smoothstep5(s):
    s = np.clip(s, 0.0, 1.0)
    return np.clip(s**3 * (10.0 - 15.0 * s + 6.0 * s * s), 0.0, 1.0)


def _ds5(s):
    s = np.clip(s, 0.0, 1.0)
    return 30.0 * s * s * (1.0 - s) ** 2


def _d2s5(s):
    s = np.clip(s, 0.0, 1.0)
    return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)


@dataclass(frozen=True)
class TestFunction:
    """phi = psi^gamma, psi = quintic smooth step from 1 on B_R to 0 outside B_R0."""

    __test__ = False  # not a pytest class

    R: float
    R0: float
    gamma: float
    n: int = 3

    @property
    def width(self) -> float:
        return self.R0 - self.R

    def _s(self, r):
        return (self.R0 - np.abs(np.asarray(r, dtype=float))) / self.width

    def psi(self, r):
        return smoothstep5(self._s(r))

    def dpsi(self, r):
        return -_ds5(self._s(r)) / self.width

    def d2psi(self, r):
        return _d2s5(self._s(r)) / self.width**2

    def phi(self, r):
        return self.psi(r) ** self.gamma

    def grad(self, r):
        """Radial derivative phi'(r)."""
        ps = self.psi(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            pw = np.where(ps > 0, ps ** (self.gamma - 1.0), 0.0)
        return self.gamma * pw * self.dpsi(r)

    def laplacian(self, r):
        r = np.asarray(r, dtype=float)
        ps, d1, d2 = self.psi(r), self.dpsi(r), self.d2psi(r)
        g = self.gamma
        with np.errstate(divide="ignore", invalid="ignore"):
            p1 = np.where(ps > 0, ps ** (g - 1.0), 0.0)
            p2 = np.where(ps > 0, ps ** (g - 2.0), 0.0) if g != 2 else np.ones_like(ps)
            radial = np.where(r > 0, (self.n - 1) * d1 / np.where(r > 0, r, 1.0), 0.0)
        return g * (g - 1.0) * p2 * d1 * d1 + g * p1 * (d2 + radial)

    def grad_weight_density(self, r, alpha: float):
        """|grad phi|^alpha phi^{1-alpha}, written as gamma^a psi^{gamma-a} |psi'|^a."""
        ps = self.psi(r)
        return self.gamma**alpha * ps ** (self.gamma - alpha) * np.abs(self.dpsi(r)) ** alpha

    def lap_weight_density(self, r, beta: float):
        """|Lap phi|^beta phi^{1-beta} = gamma^b |(gamma-1)psi'^2 + psi Lap psi|^b psi^{gamma-2b}."""
        r = np.asarray(r, dtype=float)
        ps, d1, d2 = self.psi(r), self.dpsi(r), self.d2psi(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            radial = np.where(r > 0, (self.n - 1) * d1 / np.where(r > 0, r, 1.0), 0.0)
        core = (self.gamma - 1.0) * d1 * d1 + ps * (d2 + radial)
        return self.gamma**beta * np.abs(core) ** beta * ps ** (self.gamma - 2.0 * beta)


def build_test_function(R: float, R0: float, gamma: float, n: int = 3) -> TestFunction:
    if not (0 < R < R0):
        raise ValueError(f"need 0 < R < R0, got R={R}, R0={R0}")
    if not gamma >= 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return TestFunction(float(R), float(R0), float(gamma), int(n))


def _annulus_integral(tf: TestFunction, density: Callable) -> float:
    S = shell_factor(tf.n)
    val, _ = quad(lambda r: density(np.array([r]))[0] * r ** (tf.n - 1), tf.R, tf.R0, limit=200, epsabs=0, epsrel=1e-11)
    return S * val


def test_function_integrals(tf: TestFunction, alpha: Optional[float] = None, beta: Optional[float] = None) -> dict:
    out = {}
    if alpha is not None:
        out["grad"] = _annulus_integral(tf, lambda r: tf.grad_weight_density(r, alpha))
    if beta is not None:
        out["lap"] = _annulus_integral(tf, lambda r: tf.lap_weight_density(r, beta))
    return out


def verify_test_function(
    tf: TestFunction,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
    sweep: int = 4,
    tolerance: float = 0.15,
) -> BoundCheck:
    """Checks 0 <= phi <= 1, phi = 1 on B_R, phi = 0 off B_R0, and the scaling
    of the weighted integrals against |A|/(R0-R)^alpha and |A|/(R0-R)^{2 beta}
    over a sweep halving R0 - R.  The verdict requires the normalized integral
    to change by at most ``tolerance`` (relative) at every halving.
    """
    g = tf.gamma
    if alpha is None and beta is None:
        raise ValueError("give alpha and/or beta")
    if alpha is not None and g < max(1.0, alpha):
        raise ValueError(f"gamma={g} must be >= max(1, alpha={alpha})")
    if beta is not None and not g > max(1.0, 2 * beta):
        raise ValueError(f"gamma={g} must exceed max(1, 2 beta={2 * beta})")
    r = np.linspace(0, tf.R0 * 1.2, 2001)
    ph = tf.phi(r)
    shape_ok = bool(
        np.all((ph >= 0) & (ph <= 1))
        and np.all(ph[r <= tf.R] == 1.0)
        and np.all(ph[r >= tf.R0] == 0.0)
        and np.all(tf.grad(r[r <= tf.R]) == 0.0)
    )
    norms = {"grad": [], "lap": []}
    for j in range(sweep):
        w = tf.width / 2**j
        t = TestFunction(tf.R, tf.R + w, g, tf.n)
        A = annulus_volume(tf.n, t.R, t.R0)
        I = test_function_integrals(t, alpha, beta)
        if alpha is not None:
            norms["grad"].append(I["grad"] / (A / w**alpha))
        if beta is not None:
            norms["lap"].append(I["lap"] / (A / w ** (2 * beta)))
    steps = [max(b / a, a / b) for v in norms.values() for a, b in zip(v, v[1:])]
    spread = max(steps) if steps else 1.0
    first = norms["grad"] if alpha is not None else norms["lap"]
    margin = (tolerance - (spread - 1.0)) if shape_ok else -1.0
    return BoundCheck(
        "test_function", math.nan, tf.n, lhs=float(first[0]), structural_rhs=1.0,
        empirical_constant=float(max(max(v) for v in norms.values() if v)), margin=margin,
        R=tf.R, R0=tf.R0,
        context={"gamma": g, "alpha": alpha, "beta": beta, "normalized_grad": norms["grad"],
                 "normalized_lap": norms["lap"], "shape_ok": shape_ok, "spread": spread},
    )


# Moser ladder ------------------------------------------------------------------------


@dataclass(frozen=True)
class MoserLadder:
    r0: float
    n: int
    p: float
    K: int
    recurrence: np.ndarray = field(repr=False)
    closed_form: np.ndarray = field(repr=False)

    @property
    def q(self) -> float:
        return self.n / self.p

    @property
    def fixed_point(self) -> float:
        return self.q * (2 - self.p)

    @property
    def increasing(self) -> bool:
        return bool(np.all(np.diff(self.recurrence) > 0))

    @property
    def max_relative_gap(self) -> float:
        scale = np.maximum(np.abs(self.recurrence), np.abs(self.closed_form))
        scale = np.where(scale > 0, scale, 1.0)
        return float(np.max(np.abs(self.recurrence - self.closed_form) / scale))

    @property
    def growth_limit(self) -> float:
        """Exact value of lim (1+1/q)^{k+1} / r_{k+1}."""
        return 1.0 / (self.r0 + (self.p - 2.0) * self.q)

    @property
    def sum_limit(self) -> float:
        """Exact value of lim (1/r_{k+1}) sum_{j<=k} (1+1/q)^j."""
        return self.q / (self.r0 + (self.p - 2.0) * self.q)

    def growth_ratios(self) -> np.ndarray:
        k = np.arange(1, self.K + 1)
        return (1 + 1 / self.q) ** k / self.recurrence[1:]

    def sum_ratios(self) -> np.ndarray:
        a = 1 + 1 / self.q
        k = np.arange(1, self.K + 1)
        partial = (a**k - 1.0) / (a - 1.0)
        return partial / self.recurrence[1:]


def moser_exponents(r0: float, n: int, p: float, K: int) -> MoserLadder:
    """r_0..r_K from the recurrence and from the closed form."""
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    if not (1 < p < 2):
        raise ValueError(f"p must lie in (1, 2), got {p}")
    q = n / p
    a = 1.0 + 1.0 / q
    rec = np.empty(K + 1)
    rec[0] = r0
    for k in range(K):
        rec[k + 1] = rec[k] * a + p - 2.0
    k = np.arange(K + 1)
    closed = a**k * (r0 - (2.0 - p) * q) + q * (2.0 - p)
    return MoserLadder(float(r0), int(n), float(p), int(K), rec, closed)


# Sobolev / Poincare constants ------------------------------------------------------


def talenti_constant(n: int, p: float) -> float:
    """Sharp constant in ||f||_{p*} <= S ||grad f||_p on R^n, 1 < p < n."""
    if not (1 < p < n):
        raise ValueError("need 1 < p < n")
    a = math.pi ** (-0.5) * n ** (-1.0 / p) * ((p - 1) / (n - p)) ** (1 - 1.0 / p)
    b = gamma_fn(1 + n / 2) * gamma_fn(n) / (gamma_fn(n / p) * gamma_fn(1 + n - n / p))
    return a * b ** (1.0 / n)


@dataclass(frozen=True)
class RadialProfile:
    """f(r) and f'(r) for radial trial functions."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]


def _bubble(n, p, s):
    # extremals of the whole-space inequality: (1 + (r/s)^{p/(p-1)})^{-(n-p)/p}
    m = p / (p - 1)
    f = lambda r: (1 + (np.asarray(r) / s) ** m) ** (-(n - p) / p)
    df = lambda r: -(n - p) / p * (1 + (np.asarray(r) / s) ** m) ** (-(n - p) / p - 1) * m * np.asarray(r) ** (m - 1) / s**m
    return RadialProfile(f"bubble(s={s:g})", f, df)


def _cosine_bump(w):
    f = lambda r: np.where(np.asarray(r) < w, 0.5 * (1 + np.cos(np.pi * np.asarray(r) / w)), 0.0)
    df = lambda r: np.where(np.asarray(r) < w, -0.5 * np.pi / w * np.sin(np.pi * np.asarray(r) / w), 0.0)
    return RadialProfile(f"cosine(w={w:g})", f, df)


def _gauss(s):
    f = lambda r: np.exp(-((np.asarray(r) / s) ** 2))
    df = lambda r: -2 * np.asarray(r) / s**2 * np.exp(-((np.asarray(r) / s) ** 2))
    return RadialProfile(f"gauss(s={s:g})", f, df)


def sobolev_trial_family(n: int, p: float) -> list[RadialProfile]:
    fam = [RadialProfile("constant", lambda r: np.ones_like(np.asarray(r, dtype=float)), lambda r: np.zeros_like(np.asarray(r, dtype=float)))]
    fam += [_bubble(n, p, s) for s in (1.0, 0.3, 0.1, 0.03, 0.01)]
    fam += [_gauss(s) for s in (1.0, 0.3, 0.1)]
    fam += [_cosine_bump(w) for w in (1.0, 0.5, 0.2)]
    return fam


def _radial_norm(n, func, R, power, breaks=()):
    S = shell_factor(n)
    pts = sorted(b for b in breaks if 0 < b < R)
    val, _ = quad(lambda r: abs(float(func(np.array([r]))[0])) ** power * r ** (n - 1), 0, R,
                  points=pts or None, limit=400, epsabs=0, epsrel=1e-10)
    return (S * val) ** (1 / power)


def sobolev_quotient(prof: RadialProfile, n: int, p: float, R: float = 1.0) -> float:
    """||f||_{p*}/(||f||_p + ||f'||_p) on B_R."""
    ps = n * p / (n - p)
    br = [R * x for x in (1e-3, 1e-2, 3e-2, 0.1, 0.2, 0.3, 0.5)]
    num = _radial_norm(n, prof.f, R, ps, br)
    den = _radial_norm(n, prof.f, R, p, br) + _radial_norm(n, prof.df, R, p, br)
    return num / den


def estimate_sobolev_constant(n: int, p: float) -> tuple[float, dict]:
    """max(Talenti constant, sup of the quotient over the trial family) on B_1."""
    fam = sobolev_trial_family(n, p)
    quots = {pr.name: sobolev_quotient(pr, n, p) for pr in fam}
    S = max(talenti_constant(n, p), max(quots.values()))
    return S, quots


def poincare_trial_family(R: float) -> list[RadialProfile]:
    fam = []
    for a in (1.0, 2.0, 4.0):
        for b in (1.0, 2.0):
            f = lambda r, a=a, b=b: np.clip(1 - (np.asarray(r) / R) ** a, 0, None) ** b
            df = lambda r, a=a, b=b: np.where(
                np.asarray(r) < R,
                -b * np.clip(1 - (np.asarray(r) / R) ** a, 0, None) ** (b - 1) * a * np.asarray(r) ** (a - 1) / R**a,
                0.0,
            )
            fam.append(RadialProfile(f"(1-(r/R)^{a:g})^{b:g}", f, df))
    fam.append(_cosine_bump(R))
    return fam


def estimate_poincare_constant(n: int, p: float, R: float) -> tuple[float, dict]:
    """sup over the trial family of ||f||_p/||f'||_p on B_R with f(R) = 0 (a lower estimate)."""
    quots = {}
    for pr in poincare_trial_family(R):
        quots[pr.name] = _radial_norm(n, pr.f, R, p) / _radial_norm(n, pr.df, R, p)
    return max(quots.values()), quots


# iterative Sobolev inequality ----------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeProfile:
    """f(r, t) = a(t) g(r) on B_R x (T0, T1), sampled on a grid."""

    radial: RadialProfile
    amplitude: Callable[[np.ndarray], np.ndarray]
    label: str = ""


def iterative_sobolev_sides(
    prof: SpaceTimeProfile, n: int, p: float, sigma: float, R: float, T0: float, T1: float,
    S_p: float, nt: int = 201, nr: int = 4001,
) -> tuple[float, float]:
    """Left and right sides with composite Simpson-type quadrature (trapezoid in t, r)."""
    if not n > p:
        raise ValueError("need n > p")
    sig_star = n / (n - p)
    if not (1 < sigma < sig_star):
        raise ValueError(f"sigma must lie in (1, {sig_star:g}), got {sigma}")
    q = n / p
    S = shell_factor(n)
    r = np.linspace(0, R, nr)
    t = np.linspace(T0, T1, nt)
    w = r ** (n - 1)
    g = np.abs(prof.radial.f(r))
    dg = np.abs(prof.radial.df(r))
    a = np.abs(prof.amplitude(t))
    sp = lambda y: S * np.trapezoid(y * w, r)
    A_ps = sp(g ** (p * sigma))
    A_p = sp(g**p)
    A_dp = sp(dg**p)
    A_q = sp(g ** (p * (sigma - 1) * q))
    lhs = np.trapezoid(a ** (p * sigma), t) * A_ps
    energy = np.trapezoid(a**p, t) * (A_p + R**p * A_dp)
    sup_term = (np.max(a ** (p * (sigma - 1) * q)) * A_q / R**n) ** (1 / q)
    rhs = 2 ** (p - 1) * S_p**p * energy * sup_term
    return float(lhs), float(rhs)


def random_space_time_profiles(rng: SplitMix64, count: int, R: float) -> list[SpaceTimeProfile]:
    """Smooth radial bumps (Gaussian or cosine) with smooth random time amplitudes."""
    out = []
    for _ in range(count):
        kind, s, c0, c1, c2 = rng.uniform(5)
        width = R * (0.05 + 0.95 * s)
        radial = _gauss(width) if kind < 0.5 else _cosine_bump(width)
        amp = (lambda t, c0=c0, c1=c1, c2=c2: 0.1 + c0 + c1 * np.sin(2 * np.pi * (t + c2)) ** 2)
        out.append(SpaceTimeProfile(radial, amp, f"{radial.name}, amp({c0:.3f},{c1:.3f},{c2:.3f})"))
    return out


def iterative_sobolev_check(
    profiles: Sequence[SpaceTimeProfile] | SpaceTimeProfile,
    n: int, p: float, sigma: float, R: float = 1.0, T0: float = 0.0, T1: float = 1.0,
    S_p: Optional[float] = None,
) -> BoundCheck:
    """Holds for every profile?  The empirical constant is max lhs/rhs."""
    if isinstance(profiles, SpaceTimeProfile):
        profiles = [profiles]
    if S_p is None:
        S_p, _ = estimate_sobolev_constant(n, p)
    worst = 0.0
    L = Rr = 0.0
    for pr in profiles:
        lhs, rhs = iterative_sobolev_sides(pr, n, p, sigma, R, T0, T1, S_p)
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        if ratio >= worst:
            worst, L, Rr = ratio, lhs, rhs
    return BoundCheck(
        "iterative_sobolev", p, n, lhs=L, structural_rhs=Rr, empirical_constant=worst,
        margin=1.0 - worst, R=R, context={"sigma": sigma, "S_p": S_p, "profiles": len(profiles)},
    )
