"""Radial solver and estimate checks for the fast p-Laplacian u_t = div(|grad u|^{p-2} grad u), 1 < p < 2."""

from .params import ProblemParams

__version__ = "0.1.0"
__all__ = ["ProblemParams", "__version__"]
