"""Flat ``key = value`` experiment files.

One assignment per line, ``#`` starts a comment, lists are comma separated.
The ``initial`` value is a profile name followed by ``key=value`` options,
e.g. ``initial = bump mass=1.0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..estimates.core import HypothesisError
from ..estimates import structural as st
from ..params import ProblemParams
from ..solver import SolverConfig

PROBLEMS = ("mdp", "large", "cauchy-truncated", "closed-form-replay")
CLOSED_FORMS = ("large", "barenblatt", "extinction-profile")
SWEEP_PARAMS = ("lambda", "p", "R", "grid_points", "eps")

CHECKS = (
    "smoothing", "lr_stability", "positivity", "aronson_caffarelli",
    "harnack_forward", "harnack_backward", "harnack_elliptic", "harnack_alternative",
    "benilan_crandall", "aleksandrov", "flux", "energy", "gradient", "mass_lower",
    "extinction_window", "extinction_upper_l1", "l1_order", "large_envelope", "large_monotone",
    "residual",
)
_NEEDS_EXTINCTION = {
    "positivity", "aronson_caffarelli", "harnack_forward", "harnack_backward", "harnack_elliptic",
    "harnack_alternative", "flux", "extinction_window", "extinction_upper_l1",
}
_MDP_ONLY = {"aleksandrov", "flux"}
_BY_PROBLEM = {
    "large": {"benilan_crandall", "gradient", "lr_stability", "large_envelope", "large_monotone"},
    "closed-form-replay": {"residual", "benilan_crandall", "harnack_elliptic", "smoothing", "lr_stability"},
}

_INT_KEYS = {"n", "grid_points", "seed", "newton_max_iter", "max_steps"}
_FLOAT_KEYS = {
    "p", "R", "R_domain", "R0", "eps", "extinction_threshold", "newton_tol", "dt_init", "dt_max",
    "T_final", "r", "harnack_t0", "harnack_theta", "harnack_eps", "k_star", "T1", "growth",
    "max_sup_change", "t_start", "residual_tol",
}
_LIST_KEYS = {"checks", "levels", "sweep_values", "times"}
_STR_KEYS = {"problem", "scheme", "solution", "sweep_param", "initial", "name"}


class ConfigError(ValueError):
    """Malformed experiment file; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "bump"
    mass: float = 1.0
    level: float = 0.0


@dataclass(frozen=True)
class ExperimentSpec:
    """Parsed experiment: problem, geometry, data, solver controls and checks.

    Harnack times (``harnack_t0``, ``harnack_theta``) are fractions of the
    detected extinction time so that they transform with the scaling group.
    """

    problem: str
    params: ProblemParams
    R: float
    R_domain: float
    initial: InitialSpec = field(default_factory=InitialSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    checks: tuple = ()
    seed: int = 0
    T_final: Optional[float] = None
    R0: Optional[float] = None
    r: float = 1.0
    harnack_t0: float = 0.0
    harnack_theta: float = 0.02
    harnack_eps: float = 0.25
    k_star: Optional[float] = None
    solution: str = "large"
    levels: tuple = (10.0, 100.0, 1000.0)
    T1: float = 1.0
    times: tuple = ()
    t_start: float = 0.0
    residual_tol: float = 1e-6
    sweep_param: Optional[str] = None
    sweep_values: tuple = ()
    name: str = "experiment"
    source: dict = field(default_factory=dict, compare=False)

    @property
    def R0_eff(self) -> float:
        return self.R0 if self.R0 is not None else min(2 * self.R, self.R_domain)

    def echo(self) -> dict:
        return dict(self.source)

    def with_values(self, **kw) -> "ExperimentSpec":
        src = dict(self.source)
        for k, v in kw.items():
            src[k] = v
        return build_spec(src)


def _parse_value(key: str, raw: str, line: int):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _LIST_KEYS:
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if key == "checks":
                return tuple(items)
            return tuple(float(x) for x in items)
        if key in _STR_KEYS:
            return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})", line) from None
    raise ConfigError(f"unknown key {key!r}", line)


def parse_text(text: str) -> dict:
    """Parse the flat format into a dict of typed values (keys keep file order)."""
    out: dict = {}
    lines: dict = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", i)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", i)
        if key in out:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", i)
        out[key] = _parse_value(key, value, i)
        lines[key] = i
    out["_lines"] = lines
    return out


def _parse_initial(raw: str, line: Optional[int]) -> InitialSpec:
    parts = raw.split()
    if not parts:
        raise ConfigError("empty initial datum", line)
    kind = parts[0]
    if kind not in ("bump", "indicator", "zero", "constant"):
        raise ConfigError(f"unknown initial profile {kind!r}", line)
    opts = {}
    for tok in parts[1:]:
        if "=" not in tok:
            raise ConfigError(f"initial option {tok!r} is not key=value", line)
        k, v = tok.split("=", 1)
        if k not in ("mass", "level"):
            raise ConfigError(f"unknown initial option {k!r}", line)
        try:
            opts[k] = float(v)
        except ValueError:
            raise ConfigError(f"bad number {v!r} in initial datum", line) from None
    return InitialSpec(kind, **opts)


def default_r(params: ProblemParams) -> float:
    """1 in the good range, else the smallest integer above r_c (the gates need r > r_c there)."""
    if params.p > params.p_c:
        return 1.0
    return float(math.floor(params.r_c_raw) + 1)


def build_spec(values: dict) -> ExperimentSpec:
    """Typed dict (from :func:`parse_text`) to a validated :class:`ExperimentSpec`."""
    lines = values.get("_lines", {})
    src = {k: v for k, v in values.items() if k != "_lines"}

    def need(key):
        if key not in src:
            raise ConfigError(f"missing required key {key!r}")
        return src[key]

    problem = src.get("problem", "mdp")
    if problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {problem!r}", lines.get("problem"))
    try:
        params = ProblemParams(float(need("p")), int(need("n")))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), lines.get("p")) from None
    R = float(need("R"))
    default_Rd = {"mdp": 3 * R, "cauchy-truncated": 10 * R, "large": R, "closed-form-replay": R}[problem]
    R_domain = float(src.get("R_domain", default_Rd))
    if not (R > 0 and R_domain > 0):
        raise ConfigError("R and R_domain must be positive", lines.get("R"))
    if problem == "mdp" and R_domain < 3 * R * (1 - 1e-12):
        raise ConfigError(f"MDP needs R_domain >= 3R, got {R_domain} < {3 * R}", lines.get("R_domain"))
    initial = _parse_initial(src.get("initial", "bump mass=1.0"), lines.get("initial"))
    cfg_keys = ("eps", "dt_init", "dt_max", "newton_tol", "newton_max_iter", "extinction_threshold",
                "scheme", "grid_points", "growth", "max_sup_change", "max_steps")
    try:
        solver = SolverConfig(**{k: src[k] for k in cfg_keys if k in src})
    except ValueError as exc:
        raise ConfigError(f"solver settings: {exc}") from None
    checks = tuple(src.get("checks", ()))
    for c in checks:
        if c not in CHECKS:
            raise ConfigError(f"unknown check {c!r}; known: {', '.join(CHECKS)}", lines.get("checks"))
    solution = src.get("solution", "large")
    if solution not in CLOSED_FORMS:
        raise ConfigError(f"solution must be one of {CLOSED_FORMS}", lines.get("solution"))
    sweep_param = src.get("sweep_param")
    if sweep_param is not None and sweep_param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep_param must be one of {SWEEP_PARAMS}", lines.get("sweep_param"))
    levels = tuple(src.get("levels", (10.0, 100.0, 1000.0)))
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError("levels must be strictly increasing", lines.get("levels"))
    return ExperimentSpec(
        problem=problem, params=params, R=R, R_domain=R_domain, initial=initial, solver=solver,
        checks=checks, seed=int(src.get("seed", 0)), T_final=src.get("T_final"), R0=src.get("R0"),
        r=float(src.get("r", default_r(params))), harnack_t0=float(src.get("harnack_t0", 0.0)),
        harnack_theta=float(src.get("harnack_theta", 0.02)), harnack_eps=float(src.get("harnack_eps", 0.25)),
        k_star=src.get("k_star"), solution=solution, levels=levels, T1=float(src.get("T1", 1.0)),
        times=tuple(src.get("times", ())), t_start=float(src.get("t_start", 0.0)),
        residual_tol=float(src.get("residual_tol", 1e-6)),
        sweep_param=sweep_param, sweep_values=tuple(src.get("sweep_values", ())),
        name=str(src.get("name", "experiment")), source=src,
    )


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    return build_spec(parse_text(Path(path).read_text()))


def gate_violations(spec: ExperimentSpec) -> list[str]:
    """Every reason a requested check cannot run, collected before any solve."""
    out = []
    prm = spec.params
    allowed = _BY_PROBLEM.get(spec.problem)
    for c in spec.checks:
        if allowed is not None and c not in allowed:
            out.append(f"{c}: not available for problem {spec.problem!r}")
            continue
        if c in _MDP_ONLY and spec.problem != "mdp":
            out.append(f"{c}: needs the MDP geometry (problem = mdp)")
        if c in _NEEDS_EXTINCTION and spec.problem not in ("mdp", "cauchy-truncated", "closed-form-replay"):
            out.append(f"{c}: needs a run that reaches extinction")
        if c == "smoothing":
            try:
                st.smoothing_gate(prm, spec.r)
            except HypothesisError as exc:
                out.append(f"smoothing: {exc}")
        if c.startswith("harnack"):
            try:
                st.harnack_gate(prm, spec.r)
            except HypothesisError as exc:
                out.append(f"{c}: {exc}")
        if c == "extinction_upper_l1" and prm.p < prm.p_c:
            out.append(f"extinction_upper_l1: {st.L1_COUNTEREXAMPLE}")
        if c == "energy" and spec.problem == "closed-form-replay":
            out.append("energy: needs a regularized solver run (eps > 0)")
        if c == "lr_stability" and spec.r < 1:
            out.append("lr_stability: r must be >= 1")
        if c in ("smoothing", "lr_stability", "gradient", "mass_lower") and spec.problem != "large":
            if not spec.R < spec.R0_eff <= spec.R_domain * (1 + 1e-12):
                out.append(f"{c}: needs R < R0 <= R_domain (R0 = {spec.R0_eff})")
        if c == "residual" and spec.problem != "closed-form-replay":
            out.append("residual: only for closed-form replays")
    if spec.problem == "closed-form-replay" and spec.solution == "barenblatt" and prm.p <= prm.p_c:
        out.append(f"barenblatt replay needs p > p_c = {prm.p_c:.6g}")
    return out


def validate(spec: ExperimentSpec) -> None:
    """Raise :class:`HypothesisError` listing every gate violation."""
    v = gate_violations(spec)
    if v:
        raise HypothesisError("requested checks violate their hypotheses:\n  " + "\n  ".join(v))


def dumps(values: dict) -> str:
    """Inverse of :func:`parse_text` for typed values."""
    out = []
    for k, v in values.items():
        if k.startswith("_"):
            continue
        if isinstance(v, (tuple, list)):
            v = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v) if math.isfinite(v) else str(v)
        out.append(f"{k} = {v}")
    return "\n".join(out) + "\n"


__all__ = [
    "CHECKS", "ConfigError", "default_r", "ExperimentSpec", "InitialSpec", "build_spec", "dumps", "gate_violations",
    "load_spec", "parse_text", "validate",
]
