"""Radial grids, fields, local integrals and conservative difference operators.

Everything here assumes radial symmetry about the origin in dimension ``n``.
Nodes sit at ``r_i = i h`` with ``h = R_outer/(N-1)``; the control volume of
node ``i`` is the shell between the neighbouring mid-points (the origin cell is
the ball of radius ``h/2``, the outer cell is a half shell).

For ``n = 1`` the "ball" ``B_R`` is measured as the half line ``[0, R]``
(shell factor 1), so that one-dimensional integrals read as plain
``int_0^R f(x) dx``.  Constant factors of this kind cancel in every
inequality that is checked downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

import numpy as np


def shell_factor(n: int) -> float:
    """Surface measure of the unit sphere (1 for n=1, see module docstring)."""
    if n == 1:
        return 1.0
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, R: float) -> float:
    return shell_factor(n) * R**n / n


def annulus_volume(n: int, R_in: float, R_out: float) -> float:
    return ball_volume(n, R_out) - ball_volume(n, R_in)


@dataclass(frozen=True)
class RadialGrid:
    radii: np.ndarray
    n: int

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("a radial grid needs at least 3 nodes")
        if r[0] != 0.0:
            raise ValueError("first node must be the origin")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        r.setflags(write=False)
        object.__setattr__(self, "radii", r)

    @property
    def N(self) -> int:
        return self.radii.size

    @property
    def h(self) -> float:
        return float(self.radii[1] - self.radii[0])

    @property
    def R_outer(self) -> float:
        return float(self.radii[-1])

    @property
    def faces(self) -> np.ndarray:
        """Mid-points r_{i+1/2}, i = 0..N-2."""
        return 0.5 * (self.radii[1:] + self.radii[:-1])

    @property
    def face_areas(self) -> np.ndarray:
        return shell_factor(self.n) * self.faces ** (self.n - 1)

    @property
    def cell_volumes(self) -> np.ndarray:
        """Lumped (finite-volume) weights; they sum to |B_{R_outer}| exactly."""
        edges = np.concatenate(([0.0], self.faces, [self.R_outer]))
        return shell_factor(self.n) / self.n * np.diff(edges**self.n)

    def index_of(self, R: float) -> int:
        """Index of the last node with r_i <= R (within round-off)."""
        return int(np.searchsorted(self.radii, R * (1 + 1e-12) + 1e-300, side="right") - 1)

    def scaled(self, factor: float) -> "RadialGrid":
        return RadialGrid(self.radii * factor, self.n)


def build_radial_grid(n: int, R_outer: float, N: int) -> RadialGrid:
    """Uniform radial grid with ``N`` nodes on ``[0, R_outer]``."""
    if N < 3:
        raise ValueError(f"need N >= 3 nodes, got {N}")
    if not R_outer > 0:
        raise ValueError(f"R_outer must be positive, got {R_outer}")
    return RadialGrid(np.linspace(0.0, float(R_outer), int(N)), int(n))


@dataclass(frozen=True)
class Field:
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("field values must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.time < 0:
            raise ValueError("time stamp must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ExtinctionReport:
    """Detected extinction time ``T_hat`` (first snapshot below ``threshold``)."""

    T_hat: Optional[float]
    threshold: float
    initial_sup: float
    final_sup: float
    T_refined: Optional[float] = None

    @property
    def extinct(self) -> bool:
        return self.T_hat is not None

    @property
    def T(self) -> Optional[float]:
        return self.T_refined if self.T_refined is not None else self.T_hat


@dataclass
class Trajectory:
    """Time-ordered snapshots of a radial solution on a fixed grid.

    ``values[k]`` is the solution at ``times[k]``.  ``meta`` carries the
    problem description when the trajectory came from the solver, which lets
    :func:`fastplap.solver.detect_extinction` re-run segments.
    """

    times: np.ndarray
    values: np.ndarray
    grid: RadialGrid
    params: Any
    extinction: Optional[ExtinctionReport] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape != (self.times.size, self.grid.N):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{self.times.size} times x {self.grid.N} nodes"
            )
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, k: int) -> Field:
        return Field(self.values[k], float(self.times[k]))

    def __iter__(self) -> Iterator[Field]:
        for k in range(len(self)):
            yield self[k]

    @property
    def snapshots(self) -> list[Field]:
        return list(self)

    def sup_norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    def at_time(self, t: float) -> np.ndarray:
        """Linear interpolation in time between bracketing snapshots."""
        if t <= self.times[0]:
            return self.values[0].copy()
        if t >= self.times[-1]:
            return self.values[-1].copy()
        k = int(np.searchsorted(self.times, t)) - 1
        t0, t1 = self.times[k], self.times[k + 1]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.values[k] + w * self.values[k + 1]


def _vals(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=float)


def _check_len(v: np.ndarray, g: RadialGrid) -> None:
    if v.shape[-1] != g.N:
        raise ValueError(f"field has {v.shape[-1]} values, grid has {g.N} nodes")


def ball_integral(values, g: RadialGrid, R: float) -> np.ndarray | float:
    """int_{B_R} v dx for a radial v, exact for piecewise-linear v.

    ``values`` may carry leading axes (e.g. all snapshots of a trajectory).
    """
    v = _vals(values)
    _check_len(v, g)
    if R < 0 or R > g.R_outer * (1 + 1e-12):
        raise ValueError(f"R={R} outside [0, {g.R_outer}]")
    R = min(R, g.R_outer)
    n, r = g.n, g.radii
    a = r[:-1]
    b = np.minimum(r[1:], R)
    live = b > a
    a, b = a[live], b[live]
    m0 = (b**n - a**n) / n
    m1 = (b ** (n + 1) - a ** (n + 1)) / (n + 1)
    idx = np.nonzero(live)[0]
    vl = v[..., idx]
    vr = v[..., idx + 1]
    slope = (vr - vl) / g.h
    total = np.sum((vl - slope * a) * m0 + slope * m1, axis=-1)
    return shell_factor(n) * total


def annulus_integral(values, g: RadialGrid, R_in: float, R_out: float):
    return ball_integral(values, g, R_out) - ball_integral(values, g, R_in)


def ball_norm(f, g: RadialGrid, R: float, r: float = 1.0):
    """(int_{B_R} |f|^r dx)^{1/r}."""
    if r < 1:
        raise ValueError(f"norm exponent must be >= 1, got {r}")
    if R > g.R_outer * (1 + 1e-12):
        raise ValueError(f"R={R} exceeds grid radius {g.R_outer}")
    v = np.abs(_vals(f))
    return np.maximum(ball_integral(v**r, g, R), 0.0) ** (1.0 / r)


def annulus_norm(f, g: RadialGrid, R_in: float, R_out: float, r: float = 1.0):
    if r < 1:
        raise ValueError(f"norm exponent must be >= 1, got {r}")
    v = np.abs(_vals(f)) ** r
    return np.maximum(annulus_integral(v, g, R_in, R_out), 0.0) ** (1.0 / r)


def face_gradient(values, g: RadialGrid) -> np.ndarray:
    """(u_{i+1} - u_i)/h at the N-1 faces."""
    v = _vals(values)
    return np.diff(v, axis=-1) / g.h


def discrete_gradient(f, g: RadialGrid) -> Field:
    """Nodal radial derivative: centred inside, zero at the origin, one-sided outside."""
    v = _vals(f)
    _check_len(v, g)
    h = g.h
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    d[0] = 0.0
    d[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return Field(d, getattr(f, "time", 0.0))


def flux_function(grad: np.ndarray, p: float, eps: float) -> np.ndarray:
    """(g^2 + eps^2)^{(p-2)/2} g, with zero flux where g = 0 and eps = 0."""
    grad = np.asarray(grad, dtype=float)
    if eps > 0:
        return (grad * grad + eps * eps) ** ((p - 2.0) / 2.0) * grad
    out = np.zeros_like(grad)
    nz = grad != 0
    out[nz] = np.abs(grad[nz]) ** (p - 2.0) * grad[nz]
    return out


def flux_derivative(grad: np.ndarray, p: float, eps: float) -> np.ndarray:
    """d/dg of :func:`flux_function` (requires eps > 0)."""
    s = grad * grad + eps * eps
    return s ** ((p - 4.0) / 2.0) * ((p - 1.0) * grad * grad + eps * eps)


def _divergence(face_flux: np.ndarray, g: RadialGrid) -> np.ndarray:
    F = face_flux * g.face_areas
    div = np.zeros(face_flux.shape[:-1] + (g.N,))
    div[..., :-1] += F
    div[..., 1:] -= F
    div = div / g.cell_volumes
    # the outer node is a boundary node: extrapolate from the interior
    div[..., -1] = 2 * div[..., -2] - div[..., -3]
    return div


def p_laplacian_values(values, g: RadialGrid, p: float, eps: float = 0.0) -> np.ndarray:
    """Array version of :func:`discrete_p_laplacian`; accepts leading axes."""
    if not (1.0 < p <= 2.0):
        raise ValueError(f"p must lie in (1, 2], got {p}")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    v = _vals(values)
    _check_len(v, g)
    return _divergence(flux_function(face_gradient(v, g), p, eps), g)


def discrete_p_laplacian(f, g: RadialGrid, p: float, eps: float = 0.0) -> Field:
    """r^{1-n} d/dr (r^{n-1} (u_r^2 + eps^2)^{(p-2)/2} u_r) in flux-difference form."""
    return Field(p_laplacian_values(f, g, p, eps), getattr(f, "time", 0.0))


def discrete_laplacian(f, g: RadialGrid) -> Field:
    return discrete_p_laplacian(f, g, 2.0, 0.0)


def dirichlet_form(f, w, g: RadialGrid, p: float, eps: float = 0.0) -> float:
    """sum over faces of (|Df|^2+eps^2)^{(p-2)/2} Df Dw, weighted by face area times h.

    For ``w`` vanishing at the outer node this equals
    ``-sum(w * p_laplacian(f) * cell_volumes)`` up to round-off.
    """
    gf = face_gradient(f, g)
    gw = face_gradient(w, g)
    return float(np.sum(flux_function(gf, p, eps) * gw * g.face_areas * g.h))
