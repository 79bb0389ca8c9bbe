"""Structural-quantity computations checked against closed forms."""

import dataclasses
import math

import numpy as np
import pytest

from estimate_lab import fields, geometry
from estimate_lab.errors import DomainError, HypothesisError
from estimate_lab.estimator import (
    REGIME_CORNER,
    REGIME_INITIAL,
    REGIME_INTERIOR,
    REGIME_LATERAL,
    ParabolicData,
    StructuralConstants,
    compute_barrier_w,
    compute_parabolic_data,
    compute_regime_bound,
    compute_structural,
    normalized_gradient,
    regime_labels,
    regime_scalars,
    xi_margin,
)
from estimate_lab.nonlinearity import eval_G, make_custom, make_identity, make_power
from estimate_lab.scenario import (
    BumpFamily,
    ConstantFamily,
    WaveFamily,
    constant_diffusion,
    grad_power_source,
    manufacture,
    time_sine_diffusion,
    zero_source,
)


def wave_scenario(h=0.05, nt=12, base=2.0, amp=0.5, M=4.0):
    dom = geometry.make_segment(R=2.0, h=h)
    fam = WaveFamily(base=base, amp=amp, freq=0.9, decay=0.81,
                     anchor=-1.0, trig="sin")
    sc = manufacture(dom, make_identity(M=M), constant_diffusion(1.0),
                     fam, t0=0.0, T=1.0, nt=nt)
    return sc, fam


def bump_scenario(h=0.05, nt=16, k=0.5):
    dom = geometry.make_radial(n=2, R=1.0, h=h, k=k)
    fam = BumpFamily(base=0.2, amp=0.5, width=1.0, rate=1.0, anchor=-0.5)
    sc = manufacture(dom, make_power(n=2, p=0.75), constant_diffusion(1.0),
                     fam, t0=0.0, T=0.5, nt=nt)
    return sc, fam


class TestBarrier:
    def test_constant_solution_gives_zero(self):
        dom = geometry.make_segment(R=1.0, h=0.1)
        sc = manufacture(dom, make_identity(M=1.0), constant_diffusion(1.0),
                         ConstantFamily(0.5), t0=0.0, T=0.5, nt=6)
        w = compute_barrier_w(sc)
        assert np.all(w.values == 0.0)

    def test_identity_reduction_against_analytic_profile(self):
        # for the identity flux with s0 = M, xi = 1:
        #   w = |grad u|^2 / (u^2 (1 + ln(M/u))^2)
        # evaluated here with the analytic wave gradient
        sc, fam = wave_scenario(h=0.02)
        w = compute_barrier_w(sc).values
        x = sc.domain.axes[0][:, None] - sc.domain.x0[0]
        grad = np.abs(fam.f_d(x, sc.times))
        u = sc.u.values
        expect = grad**2 / (u**2 * (1.0 + np.log(4.0 / u)) ** 2)
        interior = np.abs(w[1:-1, :] - expect[1:-1, :]) / expect[1:-1, :].max()
        assert interior.max() < 5 * 0.02**2

    def test_margin_violation_is_reported(self):
        # s0 below M makes G(M) exceed xi; the custom constructor does
        # not pre-validate constants, so the field check must catch it
        nl = make_custom(
            F=lambda s: np.asarray(s, dtype=float),
            dF=lambda s: np.ones_like(np.asarray(s, dtype=float)),
            d2F=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            M=1.0, s0=0.3, xi=1.0,
        )
        dom = geometry.make_segment(R=1.0, h=0.1)
        sc = manufacture(dom, nl, constant_diffusion(1.0), ConstantFamily(0.99),
                         t0=0.0, T=0.5, nt=6, validate=False)
        with pytest.raises(HypothesisError, match="xi - G"):
            compute_barrier_w(sc)


class TestStructuralConstants:
    def test_pure_diffusion_zero_curvature(self):
        # H = 0, a = 1, k = 0: every component vanishes
        sc, _ = wave_scenario()
        sc = dataclasses.replace(sc, source=zero_source())
        c = compute_structural(sc)
        assert c.mu1 == 0.0 and c.mu2 == 0.0
        assert c.gamma1 == 0.0 and c.gamma2 == 0.0 and c.gamma3 == 0.0
        assert c.mu == 0.0 and c.gamma == 0.0

    def test_time_coefficient_and_space_source_kill_three_terms(self):
        # a = a(t), H = H(x,t): mu2 = gamma2 = gamma3 = 0 exactly
        dom = geometry.make_radial(n=2, R=1.0, h=0.1, k=0.5)
        fam = BumpFamily(base=0.2, amp=0.5, width=1.0, rate=1.0, anchor=-0.5)
        sc = manufacture(dom, make_power(n=2, p=0.75), time_sine_diffusion(),
                         fam, t0=0.0, T=0.5, nt=8)
        c = compute_structural(sc)
        assert c.mu2 == 0.0 and c.gamma2 == 0.0 and c.gamma3 == 0.0
        assert c.gamma == c.gamma1 and c.gamma1 > 0.0

    def test_constant_solution_curvature_only(self):
        # constant u, H = 0, a = 1, identity flux, k = 1: mu = k = 1
        dom = geometry.make_radial(n=2, R=1.0, h=0.1, k=1.0)
        sc = manufacture(dom, make_identity(M=1.0), constant_diffusion(1.0),
                         ConstantFamily(0.5), t0=0.0, T=0.5, nt=6)
        sc = dataclasses.replace(sc, source=zero_source())
        c = compute_structural(sc)
        assert c.mu == pytest.approx(1.0, abs=1e-15)
        assert c.gamma == 0.0

    def test_specialized_identity_path_matches(self):
        # independent evaluation of the reduced identity-flux formula
        #   mu1 = sup+ [ -H/u + H / ((1 + ln(M/u)) u) ]
        # (k = 0, a = 1, F' = 1, F'' = 0, d_u H = 0)
        sc, _ = wave_scenario()
        c = compute_structural(sc)
        h_table = sc.source.table
        u = sc.u.values
        margin = 1.0 + np.log(4.0 / u)
        reduced = -h_table / u + h_table / (margin * u)
        assert c.mu1 == pytest.approx(np.maximum(reduced, 0.0).max(), rel=1e-12)
        assert c.mu2 == 0.0

    def test_gradient_power_source_feeds_gamma3(self):
        sc, fam = wave_scenario(h=0.02)
        sc = dataclasses.replace(sc, source=grad_power_source(0.01, 2.0))
        c = compute_structural(sc)
        # analytic counterpart: sup (F'/u) * 0.02 |f_d| * |f_dd| on the
        # segment, where the hessian norm is |u_xx|
        x = sc.domain.axes[0][:, None] - sc.domain.x0[0]
        grad = np.abs(fam.f_d(x, sc.times))
        hess = np.abs(fam.f_dd(x, sc.times))
        expect = (0.02 * grad * hess / sc.u.values).max()
        assert c.gamma3 == pytest.approx(expect, rel=0.05)
        assert c.gamma3 > 0.0 and c.gamma1 == 0.0

    def test_fprime_violation_reported(self):
        nl = make_custom(
            F=lambda s: 2.0 * s - s**2 / 2.0,
            dF=lambda s: 2.0 - s,
            d2F=lambda s: -np.ones_like(np.asarray(s, dtype=float)),
            M=4.0, s0=1.0, xi=10.0,
        )
        dom = geometry.make_segment(R=1.0, h=0.1)
        sc = manufacture(dom, nl, constant_diffusion(1.0), ConstantFamily(3.0),
                         t0=0.0, T=0.5, nt=6, validate=False)
        with pytest.raises(HypothesisError, match="F'"):
            compute_structural(sc)

    def test_sups_converge_under_refinement(self):
        # wave under the power flux: nonzero source, nonzero boundary
        # slope, so all four sups have nonvanishing limits
        vals = {}
        for h, nt in ((0.1, 8), (0.05, 16), (0.025, 32)):
            dom = geometry.make_segment(R=2.0, h=h)
            fam = WaveFamily(base=0.5, amp=0.3, freq=0.9, decay=0.4,
                             anchor=-1.0, trig="sin")
            sc = manufacture(dom, make_power(n=1, p=0.75),
                             constant_diffusion(1.0), fam, t0=0.0, T=1.0, nt=nt)
            c = compute_structural(sc)
            d = compute_parabolic_data(sc)
            vals[h] = (c.mu1, c.gamma1, d.tau_u, d.sigma_u)
        for i in range(4):
            seq = [vals[0.1][i], vals[0.05][i], vals[0.025][i]]
            scale = max(abs(v) for v in seq)
            assert scale > 0.0
            assert abs(seq[1] - seq[0]) / scale < 0.1
            assert abs(seq[2] - seq[1]) / scale < 0.1


class TestParabolicData:
    def test_constant_solution(self):
        dom = geometry.make_segment(R=1.0, h=0.1)
        sc = manufacture(dom, make_identity(M=1.0), constant_diffusion(1.0),
                         ConstantFamily(0.5), t0=0.0, T=0.5, nt=6)
        d = compute_parabolic_data(sc)
        assert d.tau_u == 0.0 and d.sigma_u == 0.0

    def test_flat_edge_bump_suppresses_lateral_sup(self):
        # the bump profile has zero slope at the boundary, so sigma_u is
        # pure discretization residue while tau_u is order one
        sc, _ = bump_scenario(h=0.02)
        d = compute_parabolic_data(sc)
        assert d.tau_u > 0.05
        assert d.sigma_u < 0.02 * d.tau_u

    def test_initial_sup_squares_to_barrier_sup(self):
        sc, _ = bump_scenario()
        d = compute_parabolic_data(sc)
        w0 = compute_barrier_w(sc).values[..., 0]
        assert d.tau_u**2 == pytest.approx(w0.max(), rel=1e-12)


class TestRegimeBound:
    def test_labels_partition_grid(self):
        sc, _ = bump_scenario()
        labels = regime_labels(sc, rho=0.4, delta=0.2)
        counts = np.bincount(labels.ravel(), minlength=4)
        assert counts.sum() == labels.size
        assert np.all(counts > 0)

    def test_time_cut_node_joins_late_window(self):
        sc, _ = bump_scenario(nt=10)  # dt = 0.05, delta on the grid
        labels = regime_labels(sc, rho=0.4, delta=0.25)
        cut_index = 5
        inner = fields.space_mask(sc.domain, "inner", rho=0.4)
        assert np.all(labels[inner, cut_index] == REGIME_INTERIOR)
        assert np.all(labels[inner, cut_index - 1] == REGIME_INITIAL)

    def test_beta_ordering_and_monotonicity_in_C(self):
        sc, _ = bump_scenario()
        b_small = compute_regime_bound(sc, 0.4, 0.2, 0.5)
        b_large = compute_regime_bound(sc, 0.4, 0.2, 2.0)
        for b in (b_small, b_large):
            assert b.beta3 >= max(b.beta1, b.beta2)
            assert b.iota <= b.beta3
        assert np.all(b_small.Z <= b_large.Z + 1e-15)
        assert np.all(b_small.envelope <= b_large.envelope + 1e-12)

    def test_constant_solution_zero_Z(self):
        dom = geometry.make_segment(R=1.0, h=0.1)
        sc = manufacture(dom, make_identity(M=1.0), constant_diffusion(1.0),
                         ConstantFamily(0.5), t0=0.0, T=0.5, nt=6)
        b = compute_regime_bound(sc, 0.4, 0.2, 1.0)
        assert np.all(b.Z == 0.0)
        assert b.beta1 == b.beta2 == b.beta3 == b.iota == 0.0

    def test_lateral_dominated_caps_at_S(self):
        # sigma huge, tau zero: on the initial-dominated region the
        # coefficient falls back to the geometric cap C * S
        sc, _ = bump_scenario()
        consts = StructuralConstants(0.0, 0.0, 0.0, 0.0, 0.0)
        data = ParabolicData(tau_u=0.0, sigma_u=1e9)
        b = compute_regime_bound(sc, 0.4, 0.2, 1.0, constants=consts, data=data)
        assert b.beta1 == pytest.approx(b.scalars.S_scalar)
        assert b.iota == pytest.approx(b.scalars.T_scalar + b.scalars.S_scalar)

    def test_scalar_formulas(self):
        s = regime_scalars(mu=4.0, gamma=8.0, rho=0.5, delta=0.25, R=1.0, k=16.0)
        assert s.C_scalar == pytest.approx(2.0 + 2.0)
        assert s.T_scalar == pytest.approx(2.0)
        assert s.S_scalar == pytest.approx(2.0 + 2.0 + 2.0 / math.sqrt(0.5))
        assert s.C_sq == pytest.approx(4.0 + 4.0)
        assert s.T_sq == pytest.approx(4.0)
        assert s.S_sq == pytest.approx(4.0 + 4.0 + 8.0)

    def test_domain_errors(self):
        sc, _ = bump_scenario()
        with pytest.raises(DomainError):
            compute_regime_bound(sc, 1.5, 0.2, 1.0)
        with pytest.raises(DomainError):
            compute_regime_bound(sc, 0.4, 0.75, 1.0)
        with pytest.raises(DomainError):
            compute_regime_bound(sc, 0.4, 0.2, -1.0)

    def test_envelope_assembly(self):
        # spot-check the envelope arithmetic at one interior node
        sc, _ = bump_scenario()
        b = compute_regime_bound(sc, 0.4, 0.2, 1.3)
        node, ti = 5, 3
        margin = sc.nl.xi - eval_G(sc.nl, sc.u.values[node, ti])
        z = {REGIME_INTERIOR: b.iota, REGIME_INITIAL: b.beta1,
             REGIME_LATERAL: b.beta2, REGIME_CORNER: b.beta3}[b.labels[node, ti]]
        expect = (1.3 * b.scalars.C_scalar + z) * margin
        assert b.envelope[node, ti] == pytest.approx(expect, rel=1e-12)
        assert b.lhs[node, ti] == pytest.approx(
            normalized_gradient(sc)[node, ti]
        )
