"""Structural forms of the a priori estimates and their numerical checks."""

from .core import BoundCheck, ConstantLedger, HypothesisError, MissingDataError, read_csv, write_csv
from .structural import L1_COUNTEREXAMPLE, ExtinctionWindow, extinction_bound_window, harnack_gate, smoothing_gate
