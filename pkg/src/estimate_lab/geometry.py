"""Spatial domains: grids over geodesic balls and their Laplacians.

Three kinds are supported:

* ``segment``   -- 1-D interval [x0-R, x0+R] (flat, n = 1);
* ``radial``    -- radial coordinate on an n-dimensional model manifold
  whose Ricci curvature equals -k exactly (k = 0 gives flat space, k > 0
  the hyperbolic-like model with metric factor sinh(sqrt(kc) r)/sqrt(kc),
  kc = k/(n-1));
* ``cartesian2d`` -- flat 2-D lattice over the square enclosing the disc
  of radius R; nodes outside the disc are masked but keep lattice values
  so central stencils remain usable for analytically extended fields.

Fields on radial domains represent radially symmetric functions of the
geodesic distance; sups over the ball reduce to sups over [0, R].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from . import _stencils
from .errors import DomainError, StencilError

Node = Union[int, Tuple[int, int]]


@dataclass(frozen=True)
class Domain:
    kind: str
    n: int
    R: float
    k: float
    x0: Tuple[float, ...]
    h: float
    axes: Tuple[np.ndarray, ...]
    distance: np.ndarray = field(repr=False)
    inside: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    interior: np.ndarray = field(repr=False)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.distance.shape

    @property
    def kappa_c(self) -> float:
        """Sectional curvature parameter of the radial model manifold."""
        if self.kind == "radial" and self.n >= 2:
            return self.k / (self.n - 1)
        return 0.0


def _snap(length: float, h: float, minimum: int = 4):
    m = int(round(length / h))
    if m < minimum:
        raise DomainError(
            f"grid too coarse: spacing {h} gives {m} cells over length {length}"
        )
    return m, length / m


def make_segment(R: float, h: float, x0: float = 0.0) -> Domain:
    """Interval [x0 - R, x0 + R]; both end nodes are lateral boundary."""
    if R <= 0 or h <= 0:
        raise DomainError("R and h must be positive")
    m, h = _snap(2.0 * R, h)
    x = x0 - R + h * np.arange(m + 1)
    dist = np.abs(x - x0)
    boundary = np.zeros(m + 1, dtype=bool)
    boundary[0] = boundary[-1] = True
    inside = np.ones(m + 1, dtype=bool)
    return Domain(
        kind="segment", n=1, R=float(R), k=0.0, x0=(float(x0),), h=h,
        axes=(x,), distance=dist, inside=inside, boundary=boundary,
        interior=inside & ~boundary,
    )


def make_radial(n: int, R: float, h: float, k: float = 0.0) -> Domain:
    """Radial grid r in [0, R] on the model manifold with Ric = -k.

    Negative k (positively curved comparison models) is rejected; the
    bounds implemented here only consume the negative-curvature size k.
    """
    if n < 2:
        raise DomainError("radial domains need dimension n >= 2; use segment for n = 1")
    if k < 0:
        raise DomainError(f"curvature parameter k must be >= 0, got {k}")
    if R <= 0 or h <= 0:
        raise DomainError("R and h must be positive")
    m, h = _snap(R, h)
    r = h * np.arange(m + 1)
    boundary = np.zeros(m + 1, dtype=bool)
    boundary[-1] = True
    inside = np.ones(m + 1, dtype=bool)
    return Domain(
        kind="radial", n=int(n), R=float(R), k=float(k), x0=(0.0,), h=h,
        axes=(r,), distance=r.copy(), inside=inside, boundary=boundary,
        interior=inside & ~boundary,
    )


def make_cartesian2d(R: float, h: float, x0: Tuple[float, float] = (0.0, 0.0)) -> Domain:
    """Flat 2-D lattice covering the closed disc of radius R around x0."""
    if R <= 0 or h <= 0:
        raise DomainError("R and h must be positive")
    m, h = _snap(2.0 * R, h, minimum=8)
    x = x0[0] - R + h * np.arange(m + 1)
    y = x0[1] - R + h * np.arange(m + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    dist = np.hypot(X - x0[0], Y - x0[1])
    inside = dist <= R * (1.0 + 1e-12)
    # discrete boundary: inside nodes with a 4-neighbour outside the disc
    padded = np.pad(inside, 1, constant_values=False)
    nb_all_in = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    boundary = inside & ~nb_all_in
    return Domain(
        kind="cartesian2d", n=2, R=float(R), k=0.0,
        x0=(float(x0[0]), float(x0[1])), h=h,
        axes=(x, y), distance=dist, inside=inside, boundary=boundary,
        interior=inside & ~boundary,
    )


# ----------------------------------------------------------------------
# metric quantities


def metric_factor(dom: Domain, r) -> np.ndarray | float:
    """Model-manifold metric factor c(r): r when flat, sinh-scaled otherwise.

    Evaluated stably through r * sinhc(sqrt(kc) r) so that kc -> 0
    degenerates smoothly to the flat factor.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("metric factor needs r >= 0")
    kc = dom.kappa_c
    if kc == 0.0:
        out = r_arr.copy()
    else:
        x = math.sqrt(kc) * r_arr
        small = np.abs(x) < 1e-4
        ratio = np.where(small, 1.0 + x * x / 6.0, np.sinh(np.where(small, 1.0, x)) / np.where(small, 1.0, x))
        out = r_arr * ratio
    return out if isinstance(r, np.ndarray) else float(out)


def metric_log_derivative(dom: Domain, r) -> np.ndarray | float:
    """c'(r)/c(r), the radial drift of the Laplacian; ~ 1/r near the origin."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("c'/c needs r > 0 (the origin is handled separately)")
    kc = dom.kappa_c
    if kc == 0.0:
        out = 1.0 / r_arr
    else:
        x = math.sqrt(kc) * r_arr
        small = np.abs(x) < 1e-4
        out = np.where(
            small,
            1.0 / r_arr + kc * r_arr / 3.0,
            math.sqrt(kc) / np.tanh(np.where(small, 1.0, x)),
        )
    return out if isinstance(r, np.ndarray) else float(out)


def geodesic_distance(dom: Domain, x) -> float:
    """Distance from the centre x0 to the point with coordinate(s) x."""
    if dom.kind == "segment":
        return abs(float(x) - dom.x0[0])
    if dom.kind == "radial":
        r = float(x)
        if r < 0:
            raise DomainError("radial coordinate must be >= 0")
        return r
    px, py = float(x[0]), float(x[1])
    return math.hypot(px - dom.x0[0], py - dom.x0[1])


def laplacian_comparison(dom: Domain, d: float) -> float:
    """Upper bound (n-1)/d + sqrt((n-1) k+) for the Laplacian of the distance.

    Returns +inf at d = 0 where the distance function is singular.
    """
    if d < 0:
        raise DomainError("distance must be >= 0")
    if d == 0.0:
        return math.inf
    kplus = max(dom.k, 0.0)
    return (dom.n - 1) / d + math.sqrt((dom.n - 1) * kplus)


# ----------------------------------------------------------------------
# Laplacians


def laplacian(dom: Domain, values: np.ndarray, node: Node) -> float:
    """Metric Laplacian of a spatial slice at one node (interior only).

    Boundary nodes raise StencilError; callers needing boundary values
    must use the one-sided field variants.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != dom.shape:
        raise StencilError(f"slice shape {values.shape} != domain shape {dom.shape}")
    h = dom.h
    if dom.kind in ("segment", "radial"):
        i = int(node)
        if dom.boundary[i]:
            raise StencilError(f"node {i} is a boundary node")
        if dom.kind == "segment":
            return float((values[i - 1] - 2.0 * values[i] + values[i + 1]) / h**2)
        if i == 0:
            # symmetry at the origin: u'(0) = 0, Laplacian = n * u''(0)
            return float(dom.n * 2.0 * (values[1] - values[0]) / h**2)
        d2 = (values[i - 1] - 2.0 * values[i] + values[i + 1]) / h**2
        d1 = (values[i + 1] - values[i - 1]) / (2.0 * h)
        return float(d2 + (dom.n - 1) * metric_log_derivative(dom, dom.axes[0][i]) * d1)
    i, j = node
    if dom.boundary[i, j] or not dom.inside[i, j]:
        raise StencilError(f"node {(i, j)} is not interior")
    return float(
        (values[i - 1, j] + values[i + 1, j] + values[i, j - 1] + values[i, j + 1]
         - 4.0 * values[i, j]) / h**2
    )


def laplacian_field(dom: Domain, values: np.ndarray) -> np.ndarray:
    """Metric Laplacian over a whole slice; one-sided stencils at edges.

    `values` may carry trailing axes (e.g. time); the spatial axes must
    come first and match the domain shape.
    """
    values = np.asarray(values, dtype=float)
    nd = len(dom.shape)
    if values.shape[:nd] != dom.shape:
        raise StencilError(f"slice shape {values.shape} != domain shape {dom.shape}")
    h = dom.h
    if dom.kind == "segment":
        return _stencils.d2(values, h)
    if dom.kind == "radial":
        lap = _stencils.d2(values, h)
        r = dom.axes[0]
        clog = np.asarray(metric_log_derivative(dom, r[1:]), dtype=float)
        clog = clog.reshape((-1,) + (1,) * (values.ndim - 1))
        lap[1:] = lap[1:] + (dom.n - 1) * clog * _stencils.d1(values, h)[1:]
        lap[0] = dom.n * 2.0 * (values[1] - values[0]) / h**2
        return lap
    return _stencils.d2(values, h, axis=0) + _stencils.d2(values, h, axis=1)
