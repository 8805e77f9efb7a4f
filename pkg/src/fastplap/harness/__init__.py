"""Declarative experiment runner."""

from .config import ConfigError, ExperimentSpec, build_spec, load_spec, parse_text, validate
from .runner import Report, run, run_spec, selftest, sweep, sweep_spec

__all__ = [
    "ConfigError", "ExperimentSpec", "Report", "build_spec", "load_spec", "parse_text", "run", "run_spec",
    "selftest", "sweep", "sweep_spec", "validate",
]
