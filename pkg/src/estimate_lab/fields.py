"""Space-time fields over a domain grid, with derivative probes and
region reductions.

A field stores values on ``domain.shape + (len(times),)``.  Derivatives
are second-order central in the interior with one-sided fallbacks at the
edges; third derivatives degrade to first order in the two outermost
layers and say so through a mask.  Norm conventions on radial domains
follow the model-manifold orthonormal frame: the gradient of a radial
function has a single radial component, and its Hessian norm includes
the (n-1)-fold angular contribution (c'/c) u_r.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _stencils, geometry
from .errors import DomainError, StencilError
from .geometry import Domain

SPACE_REGIONS = ("full", "inner", "ring", "lateral")
TIME_REGIONS = ("all", "initial", "early", "late")


@dataclass(frozen=True)
class SpaceTimeField:
    domain: Domain
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 4:
            raise StencilError("need at least 4 time nodes")
        if np.any(np.diff(times) <= 0):
            raise DomainError("time nodes must be strictly increasing")
        if values.shape != self.domain.shape + (times.size,):
            raise DomainError(
                f"values shape {values.shape} does not match "
                f"domain {self.domain.shape} x times {times.size}"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def window(self) -> float:
        return self.t_end - self.t_start


def uniform_times(t0: float, T: float, nt: int) -> np.ndarray:
    """nt+1 equispaced nodes spanning [t0 - T, t0]."""
    if T <= 0 or nt < 4:
        raise DomainError("need T > 0 and at least 4 time steps")
    return t0 - T + (T / nt) * np.arange(nt + 1)


# ----------------------------------------------------------------------
# derivatives


def gradient_components(f: SpaceTimeField) -> Tuple[np.ndarray, ...]:
    """Spatial gradient components over the full space-time array."""
    dom = f.domain
    if dom.kind == "cartesian2d":
        return (
            _stencils.d1(f.values, dom.h, axis=0),
            _stencils.d1(f.values, dom.h, axis=1),
        )
    g = _stencils.d1(f.values, dom.h, axis=0)
    if dom.kind == "radial":
        g[0] = 0.0  # radial symmetry forces u_r(0) = 0
    return (g,)


def gradient_norm_field(f: SpaceTimeField) -> np.ndarray:
    comps = gradient_components(f)
    if len(comps) == 1:
        return np.abs(comps[0])
    return np.hypot(comps[0], comps[1])


def gradient(f: SpaceTimeField, node, ti: int) -> np.ndarray:
    """Gradient vector at one node/time (length n for cartesian2d, 1 otherwise)."""
    comps = gradient_components(f)
    if f.domain.kind == "cartesian2d":
        i, j = node
        return np.array([comps[0][i, j, ti], comps[1][i, j, ti]])
    return np.array([comps[0][int(node), ti]])


def hessian(f: SpaceTimeField, node, ti: int) -> np.ndarray:
    """Coordinate second-derivative matrix at a node/time."""
    dom = f.domain
    if dom.kind == "cartesian2d":
        i, j = node
        uxx = _stencils.d2(f.values, dom.h, axis=0)[i, j, ti]
        uyy = _stencils.d2(f.values, dom.h, axis=1)[i, j, ti]
        uxy = _stencils.d1(_stencils.d1(f.values, dom.h, axis=0), dom.h, axis=1)[i, j, ti]
        return np.array([[uxx, uxy], [uxy, uyy]])
    return np.array([[_stencils.d2(f.values, dom.h, axis=0)[int(node), ti]]])


def hessian_norm_field(f: SpaceTimeField) -> np.ndarray:
    """Frobenius norm |D^2 u| in the orthonormal frame of the domain."""
    dom = f.domain
    d2 = _stencils.d2(f.values, dom.h, axis=0)
    if dom.kind == "segment":
        return np.abs(d2)
    if dom.kind == "radial":
        # radial function: D^2 u = diag(u_rr, (c'/c) u_r, ...); at the
        # origin all n second derivatives coincide with u_rr(0)
        d1 = _stencils.d1(f.values, dom.h, axis=0)
        r = dom.axes[0]
        ang = np.zeros_like(d2)
        clog = np.asarray(geometry.metric_log_derivative(dom, r[1:]), dtype=float)
        ang[1:] = clog[:, None] * d1[1:]
        out = np.sqrt(d2**2 + (dom.n - 1) * ang**2)
        origin_d2 = 2.0 * (f.values[1] - f.values[0]) / dom.h**2
        out[0] = math.sqrt(dom.n) * np.abs(origin_d2)
        return out
    uxx = d2
    uyy = _stencils.d2(f.values, dom.h, axis=1)
    uxy = _stencils.d1(_stencils.d1(f.values, dom.h, axis=0), dom.h, axis=1)
    return np.sqrt(uxx**2 + 2.0 * uxy**2 + uyy**2)


def third_derivative_norm_field(f: SpaceTimeField) -> Tuple[np.ndarray, np.ndarray]:
    """(|D^3 u|, degraded_order_mask) over the full array.

    On radial domains only the radial component u_rrr is included; the
    angular (Christoffel) contributions of a radial function are omitted,
    which is exact in 1-D and a lower bound otherwise.
    """
    dom = f.domain
    d3x, degx = _stencils.d3(f.values, dom.h, axis=0)
    if dom.kind != "cartesian2d":
        return np.abs(d3x), degx
    d3y, degy = _stencils.d3(f.values, dom.h, axis=1)
    uxxy = _stencils.d1(_stencils.d2(f.values, dom.h, axis=0), dom.h, axis=1)
    uxyy = _stencils.d1(_stencils.d2(f.values, dom.h, axis=1), dom.h, axis=0)
    norm = np.sqrt(d3x**2 + 3.0 * uxxy**2 + 3.0 * uxyy**2 + d3y**2)
    return norm, degx | degy


def third_derivative_norm(f: SpaceTimeField, node, ti: int) -> Tuple[float, bool]:
    norm, degraded = third_derivative_norm_field(f)
    idx = (node if isinstance(node, tuple) else (int(node),)) + (ti,)
    return float(norm[idx]), bool(degraded[idx])


def time_derivative_field(f: SpaceTimeField) -> np.ndarray:
    """du/dt over the full array (3-point formulas, non-uniform aware)."""
    return _stencils.d1_nonuniform(f.values, f.times, axis=f.values.ndim - 1)


def laplacian_field(f: SpaceTimeField) -> np.ndarray:
    """Metric Laplacian at every node and time (one-sided at edges)."""
    return geometry.laplacian_field(f.domain, f.values)


def div_flux_gradient_field(f: SpaceTimeField, nl) -> np.ndarray:
    """div(F'(u) grad u) expanded as F'(u) Lap(u) + F''(u) |grad u|^2."""
    u = f.values
    return nl.dF(u) * laplacian_field(f) + nl.d2F(u) * gradient_norm_field(f) ** 2


def div_flux_gradient(f: SpaceTimeField, nl, node, ti: int) -> float:
    idx = (node if isinstance(node, tuple) else (int(node),)) + (ti,)
    return float(div_flux_gradient_field(f, nl)[idx])


# ----------------------------------------------------------------------
# regions and reductions


def space_mask(dom: Domain, region: str = "full", rho: Optional[float] = None) -> np.ndarray:
    """Boolean spatial mask; cut radii resolve to the nearest grid node."""
    if region not in SPACE_REGIONS:
        raise DomainError(f"unknown space region {region!r}; use one of {SPACE_REGIONS}")
    if region == "full":
        return dom.inside.copy()
    if region == "lateral":
        return dom.boundary.copy()
    if rho is None:
        raise DomainError("inner/ring regions need the ring width rho")
    if not (0.0 < rho < dom.R):
        raise DomainError(f"need 0 < rho < R, got rho={rho}, R={dom.R}")
    cut = dom.R - rho + 0.5 * dom.h
    inner = dom.inside & (dom.distance < cut)
    if region == "inner":
        mask = inner
    else:
        mask = dom.inside & ~inner
    if not mask.any():
        raise DomainError(f"region {region!r} contains no grid nodes at rho={rho}")
    return mask


def time_mask(times: np.ndarray, region: str = "all", delta: Optional[float] = None) -> np.ndarray:
    """Boolean time mask; the split t_start + delta joins the late window."""
    if region not in TIME_REGIONS:
        raise DomainError(f"unknown time region {region!r}; use one of {TIME_REGIONS}")
    times = np.asarray(times, dtype=float)
    if region == "all":
        return np.ones(times.size, dtype=bool)
    if region == "initial":
        mask = np.zeros(times.size, dtype=bool)
        mask[0] = True
        return mask
    if delta is None:
        raise DomainError("early/late regions need the split offset delta")
    window = times[-1] - times[0]
    if not (0.0 < delta < window):
        raise DomainError(f"need 0 < delta < window, got delta={delta}, window={window}")
    dt = np.median(np.diff(times))
    late = times >= times[0] + delta - 0.5 * dt
    if region == "late":
        mask = late
    else:
        mask = ~late
    if not mask.any():
        raise DomainError(f"region {region!r} contains no time nodes at delta={delta}")
    return mask


def region_mask(
    f: SpaceTimeField,
    space: str = "full",
    time: str = "all",
    rho: Optional[float] = None,
    delta: Optional[float] = None,
) -> np.ndarray:
    sm = space_mask(f.domain, space, rho)
    tm = time_mask(f.times, time, delta)
    return sm[..., None] & tm


def sup_over(
    values: np.ndarray,
    f: SpaceTimeField,
    space: str = "full",
    time: str = "all",
    rho: Optional[float] = None,
    delta: Optional[float] = None,
) -> float:
    """Maximum of `values` over the requested space-time region."""
    values = np.asarray(values, dtype=float)
    if values.shape != f.values.shape:
        raise DomainError("values must cover the full space-time grid")
    mask = region_mask(f, space, time, rho, delta)
    return float(values[mask].max())


def to_csv(f: SpaceTimeField, path: str) -> None:
    """Dump (coordinates, time, value) rows; mainly for external plotting."""
    dom = f.domain
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if dom.kind == "cartesian2d":
            writer.writerow(["x", "y", "t", "value"])
            for i, x in enumerate(dom.axes[0]):
                for j, y in enumerate(dom.axes[1]):
                    if not dom.inside[i, j]:
                        continue
                    for ti, t in enumerate(f.times):
                        writer.writerow([repr(x), repr(y), repr(t), repr(f.values[i, j, ti])])
        else:
            writer.writerow(["x", "t", "value"])
            for i, x in enumerate(dom.axes[0]):
                for ti, t in enumerate(f.times):
                    writer.writerow([repr(x), repr(t), repr(f.values[i, ti])])
