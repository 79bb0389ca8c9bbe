"""Problem instances: a solution field tied to the equation it satisfies.

A scenario bundles a domain, a nonlinearity, a diffusion coefficient
a(x,t,u), a source H and a positive solution field u of

    u_t = a(x,t,u) * laplacian(F(u)) + H(x, t, u, grad u, D^2 u)

on (0, M].  Two provenances exist: ``manufactured`` (u is a closed-form
family and H is defined as the residual, so the equation holds exactly)
and ``solved`` (explicit Euler forward integration from initial and
boundary data, with the residual measured post hoc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from . import fields, geometry
from .errors import BlowUpError, DomainError, NumericalError, PositivityError
from .fields import SpaceTimeField, uniform_times
from .geometry import Domain
from .nonlinearity import Nonlinearity, require_hypotheses

#: admissible overshoot of the declared ceiling M before flagging
RANGE_SLACK = 1e-12


def space_coords(dom: Domain) -> Tuple[np.ndarray, ...]:
    """Coordinate arrays shaped like the spatial grid."""
    if dom.kind == "cartesian2d":
        return tuple(np.meshgrid(dom.axes[0], dom.axes[1], indexing="ij"))
    return (dom.axes[0],)


# ----------------------------------------------------------------------
# diffusion coefficients


@dataclass(frozen=True)
class DiffusionCoefficient:
    """a(x,t,u) with its partials and the ellipticity floor a0.

    ``grad_x_norm`` is the norm of the partial x-gradient holding u
    fixed; ``d_u`` the partial in u.  Values must stay in [a0, 1/a0].
    """

    family: str
    a0: float
    _eval: Callable
    _d_u: Callable
    _grad_x_norm: Callable

    def eval(self, xs, t, u):
        return np.asarray(self._eval(xs, t, u), dtype=float)

    def d_u(self, xs, t, u):
        return np.asarray(self._d_u(xs, t, u), dtype=float)

    def grad_x_norm(self, xs, t, u):
        return np.asarray(self._grad_x_norm(xs, t, u), dtype=float)

    @property
    def space_independent(self) -> bool:
        return self.family in ("constant", "time_sine", "solution_tanh")


def constant_diffusion(value: float = 1.0) -> DiffusionCoefficient:
    if value <= 0:
        raise DomainError(f"diffusion coefficient must be positive, got {value}")
    a0 = min(value, 1.0 / value)
    return DiffusionCoefficient(
        family="constant", a0=a0,
        _eval=lambda xs, t, u: np.broadcast_to(float(value), np.broadcast(t, u).shape).copy(),
        _d_u=lambda xs, t, u: np.zeros(np.broadcast(t, u).shape),
        _grad_x_norm=lambda xs, t, u: np.zeros(np.broadcast(t, u).shape),
    )


def time_sine_diffusion() -> DiffusionCoefficient:
    """a(t) = 1 + sin(t)/2, clamped into [1/2, 2]."""
    a0 = 0.5
    return DiffusionCoefficient(
        family="time_sine", a0=a0,
        _eval=lambda xs, t, u: np.clip(1.0 + 0.5 * np.sin(t), a0, 1.0 / a0)
        * np.ones(np.broadcast(t, u).shape),
        _d_u=lambda xs, t, u: np.zeros(np.broadcast(t, u).shape),
        _grad_x_norm=lambda xs, t, u: np.zeros(np.broadcast(t, u).shape),
    )


def solution_tanh_diffusion() -> DiffusionCoefficient:
    """a(u) = 1 + tanh(u)/10; exercises the u-dependence terms."""
    return DiffusionCoefficient(
        family="solution_tanh", a0=0.9,
        _eval=lambda xs, t, u: (1.0 + 0.1 * np.tanh(u)) * np.ones(np.broadcast(t, u).shape),
        _d_u=lambda xs, t, u: 0.1 * (1.0 - np.tanh(u) ** 2) * np.ones(np.broadcast(t, u).shape),
        _grad_x_norm=lambda xs, t, u: np.zeros(np.broadcast(t, u).shape),
    )


def custom_diffusion(family, a0, eval_fn, d_u_fn, grad_x_norm_fn) -> DiffusionCoefficient:
    return DiffusionCoefficient(
        family=family, a0=float(a0), _eval=eval_fn, _d_u=d_u_fn,
        _grad_x_norm=grad_x_norm_fn,
    )


# ----------------------------------------------------------------------
# source terms


class HPartials(NamedTuple):
    value: float
    d_u: float
    grad_x: np.ndarray
    grad_omega: np.ndarray
    d_Omega_norm: float


@dataclass(frozen=True)
class SourceTerm:
    """Source H(x, t, u, omega, Omega) with the partials the bounds need.

    kinds:
      * ``zero``           -- H identically 0;
      * ``manufactured``   -- H(x,t) tabulated on the grid with a
        closed-form callable for off-grid probes;
      * ``grad_power``     -- H = coefficient * |omega|^q with q > 1.
    """

    kind: str
    coefficient: float = 0.0
    q: float = 0.0
    h_fn: Optional[Callable] = None  # (xs, t) -> array, manufactured only
    table: Optional[np.ndarray] = None

    def depends_on_gradient(self) -> bool:
        return self.kind == "grad_power"

    def value(self, xs, t, u, grad_norm):
        if self.kind == "zero":
            return np.zeros(np.broadcast(u, grad_norm).shape)
        if self.kind == "manufactured":
            return np.asarray(self.h_fn(xs, t), dtype=float) * np.ones_like(u)
        return self.coefficient * np.abs(grad_norm) ** self.q

    def d_u_field(self, u):
        return np.zeros_like(u)

    def grad_omega_norm(self, grad_norm):
        if self.kind != "grad_power":
            return np.zeros_like(np.asarray(grad_norm, dtype=float))
        return self.coefficient * self.q * np.abs(grad_norm) ** (self.q - 1.0)

    def d_Omega_norm_field(self, u):
        return np.zeros_like(u)


def zero_source() -> SourceTerm:
    return SourceTerm(kind="zero")


def grad_power_source(coefficient: float, q: float) -> SourceTerm:
    if q <= 1.0:
        raise DomainError(
            f"gradient-power source needs exponent q > 1 for differentiability, got {q}"
        )
    return SourceTerm(kind="grad_power", coefficient=float(coefficient), q=float(q))


def manufactured_source(h_fn: Callable, table: np.ndarray) -> SourceTerm:
    return SourceTerm(kind="manufactured", h_fn=h_fn, table=table)


# ----------------------------------------------------------------------
# solution families (closed forms through third derivatives)


class HeatKernelFamily:
    """floor + amp * (4 pi (t - t_ref))^{-n/2} exp(-d^2 / (4 (t - t_ref))).

    An exact solution of u_t = laplacian(u) in flat n-dimensional space;
    on other domains it simply supplies a smooth positive profile.
    """

    kind = "radial"

    def __init__(self, n_dim: int, floor: float = 0.0, amp: float = 1.0, t_ref: float = 0.0):
        if amp <= 0 or floor < 0:
            raise DomainError("heat kernel family needs amp > 0 and floor >= 0")
        self.n_dim = int(n_dim)
        self.floor = float(floor)
        self.amp = float(amp)
        self.t_ref = float(t_ref)

    def _core(self, d, t):
        s = np.asarray(t, dtype=float) - self.t_ref
        if np.any(s <= 0):
            raise DomainError("heat kernel family needs t > t_ref on the window")
        return s, self.amp * (4.0 * math.pi * s) ** (-0.5 * self.n_dim) * np.exp(
            -np.asarray(d, dtype=float) ** 2 / (4.0 * s)
        )

    def f(self, d, t):
        _, core = self._core(d, t)
        return self.floor + core

    def f_t(self, d, t):
        s, core = self._core(d, t)
        return core * (np.asarray(d) ** 2 / (4.0 * s**2) - self.n_dim / (2.0 * s))

    def f_d(self, d, t):
        s, core = self._core(d, t)
        return -core * np.asarray(d) / (2.0 * s)

    def f_dd(self, d, t):
        s, core = self._core(d, t)
        return core * (np.asarray(d) ** 2 / (4.0 * s**2) - 1.0 / (2.0 * s))

    def f_ddd(self, d, t):
        s, core = self._core(d, t)
        d = np.asarray(d, dtype=float)
        return core * (3.0 * d / (4.0 * s**2) - d**3 / (8.0 * s**3))


class BumpFamily:
    """base + envelope(t) * cos^2(pi d / (2 W)): flat-edged radial bump.

    The profile has zero slope at both d = 0 and d = W, so with W = R the
    lateral gradient data vanish identically.  The time envelope is
    either exponential decay exp(-rate (t - anchor)) scaled by amp, or a
    linear ramp from amp*floor_frac to amp over [anchor, anchor+duration]
    (used to make initial-slice gradients arbitrarily small).
    """

    kind = "radial"

    def __init__(self, base: float, amp: float, width: float,
                 envelope: str = "decay", rate: float = 1.0,
                 anchor: float = 0.0, floor_frac: float = 1e-3,
                 duration: float = 1.0):
        if base <= 0 or amp < 0 or width <= 0:
            raise DomainError("bump family needs base > 0, amp >= 0, width > 0")
        if envelope not in ("decay", "ramp"):
            raise DomainError(f"unknown envelope {envelope!r}")
        self.base, self.amp, self.width = float(base), float(amp), float(width)
        self.envelope, self.rate, self.anchor = envelope, float(rate), float(anchor)
        self.floor_frac, self.duration = float(floor_frac), float(duration)

    def _env(self, t):
        t = np.asarray(t, dtype=float)
        if self.envelope == "decay":
            e = self.amp * np.exp(-self.rate * (t - self.anchor))
            return e, -self.rate * e
        frac = self.floor_frac + (1.0 - self.floor_frac) * (t - self.anchor) / self.duration
        return self.amp * frac, self.amp * (1.0 - self.floor_frac) / self.duration * np.ones_like(t)

    def _p(self, d):
        # cos^2(pi d / (2W)) = (1 + cos(pi d / W)) / 2
        w = math.pi / self.width
        d = np.asarray(d, dtype=float)
        return (
            0.5 * (1.0 + np.cos(w * d)),
            -0.5 * w * np.sin(w * d),
            -0.5 * w**2 * np.cos(w * d),
            0.5 * w**3 * np.sin(w * d),
        )

    def f(self, d, t):
        env, _ = self._env(t)
        return self.base + env * self._p(d)[0]

    def f_t(self, d, t):
        _, denv = self._env(t)
        return denv * self._p(d)[0]

    def f_d(self, d, t):
        env, _ = self._env(t)
        return env * self._p(d)[1]

    def f_dd(self, d, t):
        env, _ = self._env(t)
        return env * self._p(d)[2]

    def f_ddd(self, d, t):
        env, _ = self._env(t)
        return env * self._p(d)[3]


class ConstantFamily:
    kind = "radial"

    def __init__(self, value: float):
        if value <= 0:
            raise DomainError("constant family needs a positive value")
        self.value = float(value)

    def f(self, d, t):
        return self.value * np.ones(np.broadcast(np.asarray(d), np.asarray(t)).shape)

    def _zero(self, d, t):
        return np.zeros(np.broadcast(np.asarray(d), np.asarray(t)).shape)

    f_t = f_d = f_dd = f_ddd = _zero


class WaveFamily:
    """base + amp * trig(freq * (x - x0)) * exp(-decay * (t - anchor)).

    Axial (signed-coordinate) family on segment domains; with trig=sin,
    base a = 1 and decay = freq^2 it is an exact solution of u_t = u_xx.
    """

    kind = "axial"

    def __init__(self, base: float, amp: float, freq: float, decay: float,
                 anchor: float = 0.0, trig: str = "cos"):
        if trig not in ("cos", "sin"):
            raise DomainError(f"trig must be cos or sin, got {trig!r}")
        self.base, self.amp, self.freq = float(base), float(amp), float(freq)
        self.decay, self.anchor, self.trig = float(decay), float(anchor), trig

    def _parts(self, x, t):
        x = np.asarray(x, dtype=float)
        env = self.amp * np.exp(-self.decay * (np.asarray(t, dtype=float) - self.anchor))
        tr = np.sin if self.trig == "sin" else np.cos
        dtr = np.cos if self.trig == "sin" else lambda z: -np.sin(z)
        return env, tr(self.freq * x), dtr(self.freq * x)

    def f(self, x, t):
        env, tr, _ = self._parts(x, t)
        return self.base + env * tr

    def f_t(self, x, t):
        env, tr, _ = self._parts(x, t)
        return -self.decay * env * tr

    def f_d(self, x, t):
        env, _, dtr = self._parts(x, t)
        return self.freq * env * dtr

    def f_dd(self, x, t):
        env, tr, _ = self._parts(x, t)
        return -self.freq**2 * env * tr

    def f_ddd(self, x, t):
        env, _, dtr = self._parts(x, t)
        return -self.freq**3 * env * dtr


# ----------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    domain: Domain
    nl: Nonlinearity
    diffusion: DiffusionCoefficient
    source: SourceTerm
    u: SpaceTimeField
    t0: float
    T: float
    provenance: str
    M: float
    m: float
    residual_analytic: float
    family: Optional[object] = None

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def times(self) -> np.ndarray:
        return self.u.times


def _check_range(values: np.ndarray, M: float, what: str):
    if np.any(~np.isfinite(values)):
        raise PositivityError(f"{what}: non-finite solution values")
    if values.min() <= 0.0:
        idx = np.unravel_index(int(np.argmin(values)), values.shape)
        raise PositivityError(f"{what}: u = {values.min():.6g} <= 0 at index {idx}")
    if values.max() > M * (1.0 + RANGE_SLACK):
        idx = np.unravel_index(int(np.argmax(values)), values.shape)
        raise PositivityError(
            f"{what}: u = {values.max():.6g} exceeds M = {M} at index {idx}"
        )


def _distance_like(dom: Domain, family) -> np.ndarray:
    """Per-node argument of the family: distance (radial) or offset (axial)."""
    if family.kind == "axial":
        if dom.kind != "segment":
            raise DomainError("axial families are defined on segment domains only")
        return dom.axes[0] - dom.x0[0]
    return dom.distance


def _profile_laplacian(dom: Domain, family, d: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Metric Laplacian of f(d(x), t) from the family's closed forms."""
    f_dd = family.f_dd(d[..., None], t)
    if family.kind == "axial" or dom.kind == "segment":
        return f_dd
    f_d = family.f_d(d[..., None], t)
    out = np.array(f_dd, dtype=float, copy=True)
    pos = d > 0.0
    if dom.kind == "radial":
        drift = np.asarray(geometry.metric_log_derivative(dom, d[pos]), dtype=float)
    else:  # flat 2-D: Delta = f_dd + f_d / d
        drift = 1.0 / d[pos]
    out[pos] += (dom.n - 1) * drift[..., None] * f_d[pos]
    if (~pos).any():
        # smooth even profile at the centre: Delta f = n f_dd(0)
        out[~pos] = dom.n * f_dd[~pos]
    return out


def manufacture(
    dom: Domain,
    nl: Nonlinearity,
    diffusion: DiffusionCoefficient,
    family,
    t0: float,
    T: float,
    nt: int,
    validate: bool = True,
) -> Scenario:
    """Build a scenario whose source absorbs the residual of u_target.

    The family's closed-form derivatives give u_t and laplacian(F(u))
    exactly, so H(x,t) := u_t - a * laplacian(F(u)) makes the equation
    hold identically; no discretization enters the source definition.
    """
    if validate:
        nl = _with_constants(nl, dom.n)
    times = uniform_times(t0, T, nt)
    d = _distance_like(dom, family)
    td = d[..., None]
    u_vals = np.asarray(family.f(td, times), dtype=float)
    u_vals = np.broadcast_to(u_vals, dom.shape + (times.size,)).copy()
    _check_range(u_vals, nl.M, "manufactured solution")

    u_t = np.broadcast_to(family.f_t(td, times), u_vals.shape)
    f_d = np.broadcast_to(family.f_d(td, times), u_vals.shape)
    lap_u = np.broadcast_to(_profile_laplacian(dom, family, d, times), u_vals.shape)
    flux_lap = nl.dF(u_vals) * lap_u + nl.d2F(u_vals) * f_d**2

    xs = space_coords(dom)
    xs_b = tuple(c[..., None] for c in xs)
    a_vals = diffusion.eval(xs_b, times, u_vals)
    h_table = u_t - a_vals * flux_lap

    def h_fn(xs_probe, t_probe):
        """Closed-form source at arbitrary coordinates (even extension)."""
        if family.kind == "axial":
            dd = np.asarray(xs_probe[0], dtype=float) - dom.x0[0]
        elif dom.kind == "cartesian2d":
            dd = np.hypot(xs_probe[0] - dom.x0[0], xs_probe[1] - dom.x0[1])
        else:
            dd = np.abs(np.asarray(xs_probe[0], dtype=float) - dom.x0[0])
        uu = family.f(dd, t_probe)
        ut = family.f_t(dd, t_probe)
        fd = family.f_d(dd, t_probe)
        fdd = family.f_dd(dd, t_probe)
        if family.kind == "axial" or dom.kind == "segment":
            lap = fdd
        else:
            lap = np.array(np.broadcast_arrays(fdd, dd * 0.0)[0], dtype=float, copy=True)
            dd_b = np.broadcast_to(dd, lap.shape)
            pos = dd_b > 0.0
            if dom.kind == "radial":
                drift = np.asarray(geometry.metric_log_derivative(dom, dd_b[pos]), dtype=float)
            else:
                drift = 1.0 / dd_b[pos]
            lap[pos] += (dom.n - 1) * drift * np.broadcast_to(fd, lap.shape)[pos]
            if (~pos).any():
                lap[~pos] = dom.n * np.broadcast_to(fdd, lap.shape)[~pos]
        flux = nl.dF(uu) * lap + nl.d2F(uu) * np.broadcast_to(fd, np.shape(lap)) ** 2
        return ut - diffusion.eval(xs_probe, t_probe, uu) * flux

    source = manufactured_source(h_fn, h_table)
    field = SpaceTimeField(dom, times, u_vals)
    # the defining identity holds to rounding by construction; keep the
    # recomputed sup as a tripwire against evaluator drift
    resid = float(np.abs(u_t - a_vals * flux_lap - h_table).max())
    return Scenario(
        domain=dom, nl=nl, diffusion=diffusion, source=source, u=field,
        t0=float(t0), T=float(T), provenance="manufactured", M=nl.M,
        m=float(u_vals.min()), residual_analytic=resid, family=family,
    )


def _with_constants(nl: Nonlinearity, n: int) -> Nonlinearity:
    """Ensure kappa/eta/Gamma are populated, auditing hypotheses once."""
    report = require_hypotheses(nl, n, samples=4096)
    if nl.kappa is None or nl.eta is None or nl.Gamma is None:
        return replace(
            nl, kappa=report.kappa_min, eta=report.eta_min, Gamma=report.Gamma_max
        )
    return nl


# ----------------------------------------------------------------------
# forward integration


def solve_forward(
    dom: Domain,
    nl: Nonlinearity,
    diffusion: DiffusionCoefficient,
    source: SourceTerm,
    initial: np.ndarray,
    boundary: Callable[[float], np.ndarray],
    t0: float,
    T: float,
    cfl_safety: float = 0.5,
    M: Optional[float] = None,
    m_floor: Optional[float] = None,
    store_stride: int = 1,
    max_steps: int = 200_000,
    validate: bool = True,
) -> Scenario:
    """Explicit Euler integration of the flux form u_t = a Lap(F(u)) + H.

    The time step is re-derived every step from the parabolic stability
    bound cfl_safety * h^2 / (2 n sup(a F'(u))).  `boundary` maps a time
    to the Dirichlet values on the lateral boundary nodes (2 for a
    segment, 1 for radial; the radial origin evolves like any interior
    node).  Every `store_stride`-th accepted step is recorded.
    """
    if dom.kind == "cartesian2d":
        raise DomainError("forward solves support segment and radial domains only")
    if not (0.0 < cfl_safety <= 1.0):
        raise DomainError(f"cfl_safety must lie in (0, 1], got {cfl_safety}")
    if validate:
        nl = _with_constants(nl, dom.n)
    M = nl.M if M is None else float(M)
    u = np.array(initial, dtype=float).copy()
    if u.shape != dom.shape:
        raise DomainError(f"initial data shape {u.shape} != domain shape {dom.shape}")
    _check_range(u[None, :], M, "initial data")
    bidx = np.where(dom.boundary)[0]
    xs = space_coords(dom)
    interior = dom.interior

    t = t0 - T
    u[bidx] = boundary(t)
    snaps, times = [u.copy()], [t]
    steps = 0
    while t < t0 - 1e-14 * max(1.0, abs(t0)):
        aF = diffusion.eval(xs, t, u) * nl.dF(u)
        peak = float(np.max(aF))
        if not math.isfinite(peak) or peak <= 0.0:
            raise NumericalError(
                f"degenerate stability bound at t={t:.6g}: sup(a F'(u)) = {peak}"
            )
        dt = min(cfl_safety * dom.h**2 / (2.0 * dom.n * peak), t0 - t)
        lapF = geometry.laplacian_field(dom, nl.F(u))
        rhs = diffusion.eval(xs, t, u) * lapF
        if source.kind != "zero":
            grad = _stencil_gradient_slice(dom, u)
            rhs = rhs + source.value(xs, t, u, grad)
        u_new = u.copy()
        u_new[interior] = u[interior] + dt * rhs[interior]
        t_new = t + dt
        u_new[bidx] = boundary(t_new)
        if np.any(~np.isfinite(u_new)) or u_new.min() <= 0.0 or u_new.max() > M * (1.0 + RANGE_SLACK):
            raise BlowUpError(
                f"solution left (0, {M}] at step {steps} (t={t_new:.6g}): "
                f"range [{u_new.min():.6g}, {u_new.max():.6g}]"
            )
        if m_floor is not None and u_new.min() < m_floor:
            raise BlowUpError(
                f"solution fell below the declared floor m={m_floor} at step {steps}"
            )
        u, t = u_new, t_new
        steps += 1
        if steps > max_steps:
            raise NumericalError(f"forward solve exceeded {max_steps} steps")
        if steps % store_stride == 0 or t >= t0 - 1e-14 * max(1.0, abs(t0)):
            snaps.append(u.copy())
            times.append(t)

    values = np.stack(snaps, axis=-1)
    times_arr = np.asarray(times)
    field = SpaceTimeField(dom, times_arr, values)
    sc = Scenario(
        domain=dom, nl=nl, diffusion=diffusion, source=source, u=field,
        t0=float(t0), T=float(T), provenance="solved", M=M,
        m=float(values.min()), residual_analytic=math.nan, family=None,
    )
    resid = discrete_residual(sc)
    return replace(sc, residual_analytic=float(np.abs(resid[dom.interior, 1:-1]).max()))


def _stencil_gradient_slice(dom: Domain, u: np.ndarray) -> np.ndarray:
    from . import _stencils

    g = _stencils.d1(u, dom.h)
    if dom.kind == "radial":
        g[0] = 0.0
    return np.abs(g)


# ----------------------------------------------------------------------
# diagnostics and transforms


def source_table(sc: Scenario) -> np.ndarray:
    """H evaluated on the scenario grid (discrete gradients where needed)."""
    shape = sc.u.values.shape
    if sc.source.kind == "manufactured":
        if sc.source.table is not None and sc.source.table.shape == shape:
            return np.asarray(sc.source.table, dtype=float)
        xs = tuple(c[..., None] for c in space_coords(sc.domain))
        return np.broadcast_to(
            np.asarray(sc.source.h_fn(xs, sc.times), dtype=float), shape
        ).copy()
    xs = tuple(c[..., None] for c in space_coords(sc.domain))
    grad = fields.gradient_norm_field(sc.u)
    return sc.source.value(xs, sc.times, sc.u.values, grad)


def diffusion_table(sc: Scenario) -> np.ndarray:
    xs = tuple(c[..., None] for c in space_coords(sc.domain))
    return sc.diffusion.eval(xs, sc.times, sc.u.values)


def discrete_residual(sc: Scenario) -> np.ndarray:
    """u_t - a Lap(F(u)) - H with all derivatives discrete.

    O(h^2) + O(dt) for solved scenarios, O(h^2) + O(dt^2) for
    manufactured ones (whose residual is zero in exact arithmetic).
    """
    u_t = fields.time_derivative_field(sc.u)
    lapF = geometry.laplacian_field(sc.domain, sc.nl.F(sc.u.values))
    return u_t - diffusion_table(sc) * lapF - source_table(sc)


def eval_H_partials(sc: Scenario, node, ti: int) -> HPartials:
    """Source value and partial derivatives at one node/time.

    grad_x is the partial x-gradient holding (u, omega, Omega) fixed;
    for manufactured sources it comes from fourth-order central
    differences of the closed form, which extends past the grid.
    """
    dom = sc.domain
    idx = (node if isinstance(node, tuple) else (int(node),)) + (ti,)
    t = float(sc.times[ti])
    u_here = float(sc.u.values[idx])
    src = sc.source
    if src.kind == "zero":
        nsp = dom.n if dom.kind == "cartesian2d" else 1
        return HPartials(0.0, 0.0, np.zeros(nsp), np.zeros(nsp), 0.0)
    if src.kind == "manufactured":
        coords = [float(dom.axes[0][idx[0]])]
        if dom.kind == "cartesian2d":
            coords = [float(dom.axes[0][idx[0]]), float(dom.axes[1][idx[1]])]
        e = _probe_step(dom.h)

        def at(pt):
            vals = src.h_fn(tuple(np.array([c]) for c in pt), t)
            return float(np.asarray(vals).ravel()[0])

        grad = []
        for axis in range(len(coords)):
            probe = []
            for shift in (-2 * e, -e, e, 2 * e):
                pt = list(coords)
                pt[axis] += shift
                probe.append(at(pt))
            grad.append((probe[0] - 8 * probe[1] + 8 * probe[2] - probe[3]) / (12.0 * e))
        value = at(coords)
        return HPartials(value, 0.0, np.array(grad), np.zeros(len(coords)), 0.0)
    omega = fields.gradient(sc.u, node, ti)
    wnorm = float(np.hypot(*omega)) if omega.size == 2 else float(abs(omega[0]))
    value = src.coefficient * wnorm**src.q
    if wnorm == 0.0:
        gomega = np.zeros_like(omega)
    else:
        gomega = src.coefficient * src.q * wnorm ** (src.q - 2.0) * omega
    return HPartials(value, 0.0, np.zeros_like(omega), gomega, 0.0)


def _probe_step(h: float) -> float:
    """Step for fourth-order source probes: well below the grid spacing
    so the O(e^4) truncation is negligible, well above rounding scale."""
    return min(h, 0.01) / 2.0


def grad_x_norm_field(sc: Scenario) -> np.ndarray:
    """|partial_x H| over the grid (fourth-order differences of closed forms)."""
    src = sc.source
    shape = sc.u.values.shape
    if src.kind != "manufactured":
        return np.zeros(shape)
    dom = sc.domain
    xs = space_coords(dom)
    e = _probe_step(dom.h)
    comps = []
    for axis in range(len(xs)):
        vals = []
        for shift in (-2 * e, -e, e, 2 * e):
            probe = tuple(
                c[..., None] + (shift if a == axis else 0.0) for a, c in enumerate(xs)
            )
            vals.append(np.asarray(src.h_fn(probe, sc.times), dtype=float))
        comps.append((vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12.0 * e))
    if len(comps) == 1:
        return np.abs(np.broadcast_to(comps[0], shape))
    return np.broadcast_to(np.hypot(comps[0], comps[1]), shape)


def pme_residual(field: SpaceTimeField, p: float) -> np.ndarray:
    """Discrete residual of the bare power-flux equation u_t = Lap(u^p)."""
    u_t = fields.time_derivative_field(field)
    lap = geometry.laplacian_field(field.domain, field.values**p)
    return u_t - lap


def rescale_power_time(field: SpaceTimeField, p: float, M: float, t0: float) -> SpaceTimeField:
    """Normalized companion field u~ = u/M on the stretched times
    t~ = t0 + M^{p-1} (t - t0); if u solves u_t = Lap(u^p) up to a
    residual r, the companion solves it up to M^{-p} r on its own grid."""
    if M <= 0:
        raise DomainError("M must be positive")
    times = t0 + M ** (p - 1.0) * (field.times - t0)
    return SpaceTimeField(field.domain, times, field.values / M)
