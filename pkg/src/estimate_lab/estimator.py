"""Structural quantities entering the gradient bound.

For a scenario this module evaluates the barrier field w, the
structural constants mu and gamma (five components, all sups over the
grid), the parabolic data tau_u / sigma_u (initial-slice and lateral
sups of the normalized gradient), the regime scalars, and the piecewise
coefficient field Z that the global bound

    G'(u) |grad u|  <=  (C * scalar + Z) * (xi - G(u))

attaches to the four space-time regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fields, nonlinearity, scenario as scenario_mod
from .errors import DomainError, HypothesisError
from .fields import SpaceTimeField, space_mask, time_mask
from .scenario import Scenario

REGIME_NAMES = ("I", "B1", "B2", "B3")
REGIME_INTERIOR, REGIME_INITIAL, REGIME_LATERAL, REGIME_CORNER = range(4)


@dataclass(frozen=True)
class StructuralConstants:
    mu1: float
    mu2: float
    gamma1: float
    gamma2: float
    gamma3: float
    d3_degraded_fraction: float = 0.0

    @property
    def mu(self) -> float:
        return self.mu1 + self.mu2

    @property
    def gamma(self) -> float:
        return self.gamma1 + self.gamma2 + self.gamma3


@dataclass(frozen=True)
class ParabolicData:
    tau_u: float
    sigma_u: float


@dataclass(frozen=True)
class RegimeScalars:
    """Calibration scalars and their squared-regime counterparts."""

    C_scalar: float  # sqrt(mu) + gamma^(1/3)
    T_scalar: float  # 1 / sqrt(delta)
    S_scalar: float  # 1/rho + 1/sqrt(rho (R - rho)) + k+^(1/4)/sqrt(rho)
    C_sq: float      # mu + gamma^(2/3)
    T_sq: float      # 1 / delta
    S_sq: float      # 1/rho^2 + 1/(rho (R - rho)) + sqrt(k+)/rho


@dataclass(frozen=True)
class RegimeBound:
    rho: float
    delta: float
    C_cal: float
    scalars: RegimeScalars
    tau_u: float
    sigma_u: float
    beta1: float
    beta2: float
    beta3: float
    iota: float
    labels: np.ndarray  # uint8 codes into REGIME_NAMES, one per node
    Z: np.ndarray
    lhs: np.ndarray       # G'(u) |grad u|
    envelope: np.ndarray  # (C_cal * C_scalar + Z) * (xi - G(u))


# ----------------------------------------------------------------------
# pointwise building blocks


def xi_margin(sc: Scenario) -> np.ndarray:
    """xi - G(u) over the grid; must be strictly positive."""
    margin = sc.nl.xi - nonlinearity.eval_G(sc.nl, sc.u.values)
    if margin.min() <= 0.0:
        idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
        raise HypothesisError(
            f"xi - G(u) = {margin.min():.6g} <= 0 at grid index {idx}; "
            "the scenario leaves the admissible range"
        )
    return margin


def normalized_gradient(sc: Scenario) -> np.ndarray:
    """G'(u)|grad u| = F'(u)|grad u|/u, the bounded quantity."""
    fprime = sc.nl.dF(sc.u.values)
    if fprime.min() <= 0.0:
        idx = np.unravel_index(int(np.argmin(fprime)), fprime.shape)
        raise HypothesisError(f"F'(u) = {fprime.min():.6g} <= 0 at grid index {idx}")
    return fprime * fields.gradient_norm_field(sc.u) / sc.u.values


def compute_barrier_w(sc: Scenario) -> SpaceTimeField:
    """w = (F'(u))^2 |grad u|^2 / (u^2 (xi - G(u))^2)."""
    ratio = normalized_gradient(sc) / xi_margin(sc)
    return SpaceTimeField(sc.domain, sc.times, ratio**2)


# ----------------------------------------------------------------------
# structural constants


def compute_structural(sc: Scenario) -> StructuralConstants:
    u = sc.u.values
    nl = sc.nl
    fprime = nl.dF(u)
    if fprime.min() <= 0.0:
        idx = np.unravel_index(int(np.argmin(fprime)), fprime.shape)
        raise HypothesisError(f"F'(u) = {fprime.min():.6g} <= 0 at grid index {idx}")
    fsecond = nl.d2F(u)
    margin = xi_margin(sc)

    xs = tuple(c[..., None] for c in scenario_mod.space_coords(sc.domain))
    a_du = sc.diffusion.d_u(xs, sc.times, u)
    a_gradx = sc.diffusion.grad_x_norm(xs, sc.times, u)
    a_vals = scenario_mod.diffusion_table(sc)

    h_vals = scenario_mod.source_table(sc)
    h_du = sc.source.d_u_field(u)
    h_gradx = scenario_mod.grad_x_norm_field(sc)
    grad_norm = fields.gradient_norm_field(sc.u)
    h_gradomega = sc.source.grad_omega_norm(grad_norm)
    h_dOmega = sc.source.d_Omega_norm_field(u)

    div_flux = fields.div_flux_gradient_field(sc.u, nl)
    hess = fields.hessian_norm_field(sc.u)
    third, degraded = fields.third_derivative_norm_field(sc.u)

    k = sc.domain.k
    drift = (
        k * a_vals * fprime
        + h_vals * fsecond / fprime
        + h_du
        - h_vals / u
        + h_vals * fprime / (margin * u)
    )
    mu1 = float(np.maximum(drift, 0.0).max())
    mu2 = float((np.abs(a_du) * np.abs(div_flux)).max())
    gamma1 = float((fprime * h_gradx / u).max())
    gamma2 = float((fprime / u * np.abs(a_gradx) * np.abs(div_flux)).max())
    gamma3 = float((fprime / u * (h_gradomega * hess + h_dOmega * third)).max())
    return StructuralConstants(
        mu1=mu1, mu2=mu2, gamma1=gamma1, gamma2=gamma2, gamma3=gamma3,
        d3_degraded_fraction=float(degraded.mean()),
    )


def compute_parabolic_data(sc: Scenario) -> ParabolicData:
    """Sups of G'(u)|grad u|/(xi-G(u)) over the parabolic boundary:
    tau_u on the initial slice, sigma_u on the lateral boundary for all
    times (one-sided stencils supply the boundary gradients)."""
    ratio = normalized_gradient(sc) / xi_margin(sc)
    init = time_mask(sc.times, "initial")
    tau = float(ratio[..., init].max())
    lateral = space_mask(sc.domain, "lateral")
    sigma = float(ratio[lateral, :].max())
    return ParabolicData(tau_u=tau, sigma_u=sigma)


# ----------------------------------------------------------------------
# regime scalars and the piecewise bound field


def regime_scalars(mu: float, gamma: float, rho: float, delta: float,
                   R: float, k: float) -> RegimeScalars:
    if not (0.0 < rho < R):
        raise DomainError(f"rho must lie in (0, R) = (0, {R}), got {rho}")
    if delta <= 0.0:
        raise DomainError(f"delta must be positive, got {delta}")
    kp = max(k, 0.0)
    return RegimeScalars(
        C_scalar=np.sqrt(mu) + gamma ** (1.0 / 3.0),
        T_scalar=1.0 / np.sqrt(delta),
        S_scalar=1.0 / rho + 1.0 / np.sqrt(rho * (R - rho)) + kp**0.25 / np.sqrt(rho),
        C_sq=mu + gamma ** (2.0 / 3.0),
        T_sq=1.0 / delta,
        S_sq=1.0 / rho**2 + 1.0 / (rho * (R - rho)) + np.sqrt(kp) / rho,
    )


def regime_labels(sc: Scenario, rho: float, delta: float) -> np.ndarray:
    """Assign every node to exactly one region.

    inner x early -> B1 (initial data reachable), ring x late -> B2,
    ring x early -> B3 (both boundaries), inner x late -> interior.  The
    time node at t_start + delta joins the late window.
    """
    inner = space_mask(sc.domain, "inner", rho=rho)
    late = time_mask(sc.times, "late", delta=delta)
    labels = np.empty(sc.u.values.shape, dtype=np.uint8)
    inner_f = inner[..., None]
    late_f = np.broadcast_to(late, sc.u.values.shape)
    labels[inner_f & late_f] = REGIME_INTERIOR
    labels[inner_f & ~late_f] = REGIME_INITIAL
    labels[~inner_f & late_f] = REGIME_LATERAL
    labels[~inner_f & ~late_f] = REGIME_CORNER
    return labels


def compute_regime_bound(
    sc: Scenario,
    rho: float,
    delta: float,
    C_cal: float,
    constants: Optional[StructuralConstants] = None,
    data: Optional[ParabolicData] = None,
) -> RegimeBound:
    dom = sc.domain
    R, T = dom.R, sc.T
    if not (0.0 < rho < R):
        raise DomainError(f"rho must lie in (0, R) = (0, {R}), got {rho}")
    if not (0.0 < delta < T):
        raise DomainError(f"delta must lie in (0, T) = (0, {T}), got {delta}")
    if C_cal < 0.0:
        raise DomainError(f"C_cal must be nonnegative, got {C_cal}")
    if constants is None:
        constants = compute_structural(sc)
    if data is None:
        data = compute_parabolic_data(sc)
    scalars = regime_scalars(constants.mu, constants.gamma, rho, delta, R, dom.k)

    tau, sigma = data.tau_u, data.sigma_u
    beta1 = tau + min(sigma, C_cal * scalars.S_scalar)
    beta2 = sigma + min(tau, C_cal * scalars.T_scalar)
    beta3 = sigma + tau
    iota = min(sigma + tau, C_cal * (scalars.T_scalar + scalars.S_scalar))

    labels = regime_labels(sc, rho, delta)
    Z = np.choose(labels, (iota, beta1, beta2, beta3))
    lhs = normalized_gradient(sc)
    envelope = (C_cal * scalars.C_scalar + Z) * xi_margin(sc)
    return RegimeBound(
        rho=float(rho), delta=float(delta), C_cal=float(C_cal), scalars=scalars,
        tau_u=tau, sigma_u=sigma, beta1=float(beta1), beta2=float(beta2),
        beta3=float(beta3), iota=float(iota), labels=labels, Z=Z,
        lhs=lhs, envelope=envelope,
    )
