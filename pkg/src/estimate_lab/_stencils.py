"""Finite-difference stencils on uniform and non-uniform 1-D grids.

All helpers operate along one axis of an nd-array and return an array of
the same shape.  Interior nodes use second-order central differences;
edge nodes fall back to one-sided variants (second order for d1/d2,
first order for d3, where the degraded_order mask is set).
"""

import numpy as np

from .errors import StencilError

MIN_NODES = 4


def _check_axis(values, axis, minimum=MIN_NODES):
    if values.shape[axis] < minimum:
        raise StencilError(
            f"need at least {minimum} nodes along axis {axis}, "
            f"got {values.shape[axis]}"
        )


def _mov(values, shift, axis):
    """values shifted by `shift` nodes along `axis` (edge values replicated).

    Only interior portions of the result are ever used by callers.
    """
    return np.roll(values, -shift, axis=axis)


def d1(values, h, axis=0):
    """First derivative, uniform spacing h: central + 2nd-order one-sided ends."""
    values = np.asarray(values, dtype=float)
    _check_axis(values, axis)
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def d2(values, h, axis=0):
    """Second derivative, uniform spacing h: central + 2nd-order one-sided ends."""
    values = np.asarray(values, dtype=float)
    _check_axis(values, axis)
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h)
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (h * h)
    return np.moveaxis(out, 0, axis)


def d3(values, h, axis=0):
    """Third derivative: 5-point central interior, 4-point one-sided ends.

    Returns (derivative, degraded_order_mask); the mask flags nodes where
    only the first-order one-sided stencil fits.
    """
    values = np.asarray(values, dtype=float)
    _check_axis(values, axis, minimum=5)
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[2:-2] = (-v[:-4] + 2.0 * v[1:-3] - 2.0 * v[3:-1] + v[4:]) / (2.0 * h**3)
    for i in (0, 1):
        out[i] = (v[i + 3] - 3.0 * v[i + 2] + 3.0 * v[i + 1] - v[i]) / h**3
    for i in (-1, -2):
        out[i] = (v[i] - 3.0 * v[i - 1] + 3.0 * v[i - 2] - v[i - 3]) / h**3
    degraded = np.zeros(v.shape[0], dtype=bool)
    degraded[:2] = degraded[-2:] = True
    out = np.moveaxis(out, 0, axis)
    shape = [1] * out.ndim
    shape[axis] = -1
    return out, np.broadcast_to(degraded.reshape(shape), out.shape)


def d1_nonuniform(values, coords, axis=0):
    """First derivative on a non-uniform grid (3-point formulas throughout)."""
    values = np.asarray(values, dtype=float)
    coords = np.asarray(coords, dtype=float)
    _check_axis(values, axis, minimum=3)
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    t = coords.reshape((-1,) + (1,) * (v.ndim - 1))
    a = t[1:-1] - t[:-2]
    b = t[2:] - t[1:-1]
    out[1:-1] = (
        -b / (a * (a + b)) * v[:-2]
        + (b - a) / (a * b) * v[1:-1]
        + a / (b * (a + b)) * v[2:]
    )
    a0, b0 = t[1] - t[0], t[2] - t[1]
    out[0] = (
        -(2 * a0 + b0) / (a0 * (a0 + b0)) * v[0]
        + (a0 + b0) / (a0 * b0) * v[1]
        - a0 / (b0 * (a0 + b0)) * v[2]
    )
    aN, bN = t[-2] - t[-3], t[-1] - t[-2]
    out[-1] = (
        bN / (aN * (aN + bN)) * v[-3]
        - (aN + bN) / (aN * bN) * v[-2]
        + (aN + 2 * bN) / (bN * (aN + bN)) * v[-1]
    )
    return np.moveaxis(out, 0, axis)
