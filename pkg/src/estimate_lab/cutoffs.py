"""Smooth cutoff profiles used by the localized barrier argument.

Both cutoffs are powers of the quintic smoothstep
S(x) = 6x^5 - 15x^4 + 10x^3, which is C^2 with vanishing first and
second derivatives at both ends of [0, 1].  Raising S to the power
m = ceil(2 / (1 - theta)) makes the ratios

    (rho |psi'| + rho^2 |psi''|) / psi^theta        (spatial)
    delta |phi'| / phi^((1+theta)/2)                (temporal)

bounded by a constant that depends only on theta: near the vanishing
end S ~ 10 x^3 and the exponent bookkeeping needs m (1 - theta) >= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: grid density used when measuring the profile constant
VERIFY_SAMPLES = 20_001

#: profile values below this are treated as identically zero
FLOOR = 1e-300


def smoothstep(x):
    """Quintic smoothstep on [0, 1], clamped outside."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x**3 * (10.0 + x * (-15.0 + 6.0 * x))


def smoothstep_d1(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * xc**2 * (xc - 1.0) ** 2, 0.0)


def smoothstep_d2(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 60.0 * xc * (xc - 1.0) * (2.0 * xc - 1.0), 0.0)


def exponent_for(theta: float) -> int:
    """Smallest smoothstep power giving finite profile ratios for theta."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    return math.ceil(2.0 / (1.0 - theta))


@dataclass(frozen=True)
class SpatialCutoff:
    """Decreasing C^2 profile: 1 on [0, R - rho], 0 beyond R."""

    R: float
    rho: float
    theta: float
    m: int

    def _arg(self, r):
        return (self.R - np.asarray(r, dtype=float)) / self.rho

    def __call__(self, r):
        return smoothstep(self._arg(r)) ** self.m

    def d1(self, r):
        x = self._arg(r)
        return -(self.m / self.rho) * smoothstep(x) ** (self.m - 1) * smoothstep_d1(x)

    def d2(self, r):
        x = self._arg(r)
        S = smoothstep(x)
        S1 = smoothstep_d1(x)
        S2 = smoothstep_d2(x)
        return (self.m / self.rho**2) * (
            (self.m - 1) * S ** max(self.m - 2, 0) * S1**2 + S ** (self.m - 1) * S2
        )


@dataclass(frozen=True)
class TemporalCutoff:
    """Increasing C^2 profile: 0 before t_start, 1 after t_start + delta."""

    t_start: float
    delta: float
    theta: float
    m: int

    def _arg(self, t):
        return (np.asarray(t, dtype=float) - self.t_start) / self.delta

    def __call__(self, t):
        return smoothstep(self._arg(t)) ** self.m

    def d1(self, t):
        x = self._arg(t)
        return (self.m / self.delta) * smoothstep(x) ** (self.m - 1) * smoothstep_d1(x)


def make_spatial(R: float, rho: float, theta: float) -> SpatialCutoff:
    if not (0.0 < rho < R):
        raise DomainError(f"need 0 < rho < R, got rho={rho}, R={R}")
    return SpatialCutoff(R=float(R), rho=float(rho), theta=float(theta), m=exponent_for(theta))


def make_temporal(t_start: float, delta: float, theta: float) -> TemporalCutoff:
    if delta <= 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    return TemporalCutoff(t_start=float(t_start), delta=float(delta), theta=float(theta), m=exponent_for(theta))


def verify_cutoff(cut, samples: int = VERIFY_SAMPLES) -> float:
    """Measured profile constant of a cutoff on a dense grid.

    For a spatial cutoff this is sup (rho|psi'| + rho^2|psi''|)/psi^theta,
    for a temporal one sup delta|phi'|/phi^((1+theta)/2); nodes where the
    profile is numerically zero are excluded.  The result is finite by
    construction and invariant (up to grid placement) under rescaling of
    (R, rho) or (t_start, delta).
    """
    if isinstance(cut, SpatialCutoff):
        grid = np.linspace(cut.R - cut.rho, cut.R, samples)
        psi = cut(grid)
        live = psi > FLOOR
        ratio = (cut.rho * np.abs(cut.d1(grid[live])) + cut.rho**2 * np.abs(cut.d2(grid[live]))) / psi[live] ** cut.theta
        return float(ratio.max())
    if isinstance(cut, TemporalCutoff):
        grid = np.linspace(cut.t_start, cut.t_start + cut.delta, samples)
        phi = cut(grid)
        live = phi > FLOOR
        ratio = cut.delta * np.abs(cut.d1(grid[live])) / phi[live] ** ((1.0 + cut.theta) / 2.0)
        return float(ratio.max())
    raise DomainError(f"not a cutoff object: {cut!r}")
