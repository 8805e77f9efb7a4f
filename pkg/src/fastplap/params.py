"""Exponent bookkeeping for the fast p-Laplacian u_t = div(|grad u|^{p-2} grad u)."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ProblemParams:
    """Exponent ``p`` in (1, 2) and spatial dimension ``n``.

    Derived quantities:
        p_c = 2n/(n+1)              critical exponent of the good range
        r_c = max(n(2-p)/p, 1)      critical integrability
        theta(r) = 1/(rp + (p-2)n)  smoothing exponent
    """

    p: float
    n: int

    def __post_init__(self):
        if not (1.0 < self.p < 2.0):
            raise ValueError(f"p must lie in (1, 2), got {self.p}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def p_c(self) -> float:
        return 2.0 * self.n / (self.n + 1.0)

    @property
    def r_c_raw(self) -> float:
        """n(2-p)/p without the floor at 1 (the Moser fixed point)."""
        return self.n * (2.0 - self.p) / self.p

    @property
    def r_c(self) -> float:
        return max(self.r_c_raw, 1.0)

    @property
    def good_range(self) -> bool:
        return self.p > self.p_c

    @property
    def scaling_exponent(self) -> float:
        """np - 2n + p, the time exponent of the mass-preserving scaling."""
        return self.n * self.p - 2.0 * self.n + self.p

    @property
    def time_exponent(self) -> float:
        """1/(2-p): large-solution growth and Benilan-Crandall exponent."""
        return 1.0 / (2.0 - self.p)

    @property
    def boundary_exponent(self) -> float:
        """p/(2-p): blow-up rate of large solutions in the distance to the boundary."""
        return self.p / (2.0 - self.p)

    def theta(self, r: float) -> float:
        denom = r * self.p + (self.p - 2.0) * self.n
        if denom == 0.0:
            return math.inf
        return 1.0 / denom

    def smoothing_admissible(self, r: float) -> bool:
        """True when the local smoothing effect is proved for L^r data."""
        if self.good_range:
            return r >= 1.0
        return r > self.r_c_raw and r >= 1.0
