import math

import numpy as np
import pytest

from estimate_lab import checker, estimator, fields, geometry, nonlinearity, scenario
from estimate_lab.checker import TolModel
from estimate_lab.errors import DomainError


def wave_scenario(h=0.05, nt=24, trig="sin", freq=0.9, amp=0.3, base=0.5,
                  decay=0.4, R=2.0, T=1.0):
    dom = geometry.make_segment(R=R, h=h)
    nl = nonlinearity.make_power(n=1, p=0.75, M=1.0)
    fam = scenario.WaveFamily(base=base, amp=amp, freq=freq, decay=decay,
                              anchor=-T, trig=trig)
    return scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                fam, t0=0.0, T=T, nt=nt)


def bump_scenario(h=0.05, nt=24, envelope="decay", k=0.5):
    dom = geometry.make_radial(n=2, R=1.0, h=h, k=k)
    nl = nonlinearity.make_power(n=2, p=0.75, M=1.0)
    fam = scenario.BumpFamily(base=0.35, amp=0.45, width=1.0,
                              envelope=envelope, rate=0.8, anchor=-0.5)
    return scenario.manufacture(dom, nl, scenario.time_sine_diffusion(),
                                fam, t0=0.0, T=0.5, nt=nt)


def heat_kernel_scenario(R=1.0, h=0.05, nt=16):
    """Exact solution of u_t = Lap u, so the manufactured source vanishes."""
    dom = geometry.make_segment(R=R, h=h)
    nl = nonlinearity.make_identity(M=1.0, xi=1.0)
    fam = scenario.HeatKernelFamily(n_dim=1, floor=0.4, amp=1.0, t_ref=0.0)
    return scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                fam, t0=1.0, T=0.5, nt=nt)


def constant_scenario(value=0.6):
    dom = geometry.make_segment(R=1.0, h=0.1)
    nl = nonlinearity.make_power(n=1, p=0.75, M=1.0)
    fam = scenario.ConstantFamily(value)
    return scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                fam, t0=0.0, T=0.5, nt=8)


class TestTolModel:
    def test_exact_recovery(self):
        # deficits follow d = 3 h^2 + 0.7 dt exactly
        pilots = [(0.1, 0.01, 3 * 0.1**2 + 0.7 * 0.01),
                  (0.05, 0.005, 3 * 0.05**2 + 0.7 * 0.005)]
        model = checker.fit_tol_model(pilots, safety=1.0)
        assert model.A == pytest.approx(3.0, rel=1e-12)
        assert model.B == pytest.approx(0.7, rel=1e-12)
        assert model(0.1, 0.01) == pytest.approx(pilots[0][2], rel=1e-9)

    def test_degenerate_pilot_gives_floor(self):
        model = checker.fit_tol_model([(0.1, 0.01, 0.0), (0.05, 0.005, 0.0)])
        assert model.A == 0.0 and model.B == 0.0
        assert model(0.1, 0.01) == model.floor

    def test_negative_solution_clamped(self):
        # pure-dt deficits at fixed implied A < 0 must not go negative
        pilots = [(0.1, 0.01, 0.001), (0.05, 0.005, 0.002)]
        model = checker.fit_tol_model(pilots)
        assert model.A >= 0.0 and model.B >= 0.0

    def test_safety_scales(self):
        m1 = TolModel(A=1.0, B=1.0, safety=1.0)
        m3 = TolModel(A=1.0, B=1.0, safety=3.0)
        assert m3(0.1, 0.01) == pytest.approx(3.0 * m1(0.1, 0.01))


class TestLemma21:
    def test_constant_solution_margin_zero(self):
        rep = checker.check_barrier_inequality(constant_scenario())
        assert rep.passed
        assert rep.worst_margin == 0.0
        assert rep.violations == 0

    def test_wave_scenario_passes_outright(self):
        rep = checker.check_barrier_inequality(wave_scenario())
        assert rep.passed
        # the continuum inequality has genuine slack here: the discrete
        # margin is already nonnegative without any tolerance
        assert rep.worst_margin > 0.0
        assert rep.details["deficit"] == 0.0

    def test_heat_kernel_identity_passes(self):
        rep = checker.check_barrier_inequality(heat_kernel_scenario())
        assert rep.passed and rep.violations == 0

    def test_skipped_nodes_counted(self):
        sc = wave_scenario(h=0.1, nt=10)
        rep = checker.check_barrier_inequality(sc)
        total = sc.u.values.size
        assert rep.n_nodes + rep.skipped == total
        # two boundary columns and two time rows are excluded
        nx = sc.domain.shape[0]
        assert rep.n_nodes == (nx - 2) * (sc.times.size - 2)

    def test_inflated_kappa_breaks_inequality(self):
        # declaring a wildly wrong curvature constant must surface as
        # violations: the check is not vacuous
        sc = wave_scenario()
        bad_nl = nonlinearity.make_custom(
            F=lambda s: np.asarray(s, dtype=float) ** 0.75,
            dF=lambda s: 0.75 * np.asarray(s, dtype=float) ** -0.25,
            d2F=lambda s: -0.1875 * np.asarray(s, dtype=float) ** -1.25,
            M=1.0, s0=sc.nl.s0, xi=sc.nl.xi,
        )
        import dataclasses
        bad_nl = dataclasses.replace(bad_nl, kappa=300.0, eta=sc.nl.eta,
                                     Gamma=sc.nl.Gamma)
        bad_sc = dataclasses.replace(sc, nl=bad_nl)
        rep = checker.check_barrier_inequality(bad_sc, TolModel(0.0, 0.0, 0.0, 0.0))
        assert not rep.passed
        assert rep.violations > 0
        assert rep.worst_margin < 0.0

    def test_refinement_study(self):
        study = checker.barrier_refinement(
            lambda h, nt: wave_scenario(h=h, nt=nt),
            [(0.2, 10), (0.1, 20), (0.05, 40)],
        )
        assert len(study.reports) == 3
        # deficits never grow under refinement; each level either shrinks
        # by at least the stencil-order factor or is already zero
        for a, b in zip(study.deficits, study.deficits[1:]):
            assert b == 0.0 or a / b >= 2.8
        assert study.reports[-1].violations == 0
        assert study.reports[-1].passed

    def test_refinement_needs_two_levels(self):
        with pytest.raises(DomainError, match="two levels"):
            checker.barrier_refinement(lambda h, nt: wave_scenario(), [(0.1, 10)])

    def test_margin_convergence_order(self):
        # with zero deficits the order comes from Cauchy differences of
        # the margin field on nested grids (away from the lateral collar,
        # where one-sided stencils are only first order)
        study = checker.barrier_refinement(
            lambda h, nt: wave_scenario(h=h, nt=nt),
            [(0.2, 12), (0.1, 24), (0.05, 48)],
        )
        assert 1.5 <= study.order <= 3.0

    def test_order_nan_for_non_nested_levels(self):
        study = checker.barrier_refinement(
            lambda h, nt: wave_scenario(h=h, nt=nt),
            [(0.2, 12), (0.11, 25), (0.05, 48)],
        )
        assert math.isnan(study.order)


class TestEmpiricalConstant:
    def test_constant_solution_gives_zero(self):
        assert checker.empirical_constant(constant_scenario(), 0.5, 0.25) == 0.0

    def test_bisection_tightness(self):
        sc = wave_scenario()
        C = checker.empirical_constant(sc, 0.5, 0.25)
        assert 0.0 < C < math.inf
        hi = checker.check_global_bound(sc, 0.5, 0.25, C * 1.000001)
        lo = checker.check_global_bound(sc, 0.5, 0.25, C * (1.0 - 1e-3))
        assert hi.passed and hi.violations == 0
        assert not lo.passed and lo.violations >= 1

    def test_fail_at_tenth(self):
        sc = wave_scenario()
        C = checker.empirical_constant(sc, 0.5, 0.25)
        rep = checker.check_global_bound(sc, 0.5, 0.25, C / 10.0)
        assert not rep.passed

    def test_refinement_stability(self):
        C1 = checker.empirical_constant(wave_scenario(h=0.1, nt=12), 0.5, 0.25)
        C2 = checker.empirical_constant(wave_scenario(h=0.05, nt=24), 0.5, 0.25)
        assert 0.8 <= C2 / C1 <= 1.25

    def test_domain_sweep_bounded(self):
        # growing the window self-similarly must not blow the constant up
        vals = {}
        for R in (1.0, 2.0, 4.0):
            dom = geometry.make_segment(R=R, h=R / 20.0)
            nl = nonlinearity.make_identity(M=1.0, xi=1.0)
            fam = scenario.HeatKernelFamily(n_dim=1, floor=0.4, amp=1.0)
            T = 0.5 * R * R
            sc = scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                      fam, t0=R * R, T=T, nt=12)
            vals[R] = checker.empirical_constant(sc, R / 2.0, T / 2.0)
        assert vals[2.0] <= 2.0 * vals[1.0]
        assert vals[4.0] <= 2.0 * vals[1.0]

    def test_inconsistent_data_gives_infinity(self):
        # zeroed constants and boundary data cannot dominate a genuine
        # gradient: the sentinel reports that no finite constant exists
        sc = wave_scenario(h=0.1, nt=12)
        C = checker.empirical_constant(
            sc, 0.5, 0.25,
            constants=estimator.StructuralConstants(0.0, 0.0, 0.0, 0.0, 0.0),
            data=estimator.ParabolicData(0.0, 0.0),
        )
        assert C == math.inf


class TestTheorem:
    def test_report_carries_regime_labels(self):
        sc = wave_scenario(h=0.1, nt=12)
        C = checker.empirical_constant(sc, 0.5, 0.25)
        rep = checker.check_global_bound(sc, 0.5, 0.25, C)
        assert rep.labels is not None
        assert set(np.unique(rep.labels)) <= {0, 1, 2, 3}
        assert rep.details["beta3"] == pytest.approx(
            rep.details["tau_u"] + rep.details["sigma_u"]
        )

    def test_hyperbolic_radial_domain(self):
        dom = geometry.make_radial(n=3, R=1.0, h=0.05, k=1.0)
        nl = nonlinearity.make_power(n=3, p=0.8, M=1.0)
        fam = scenario.BumpFamily(base=0.3, amp=0.4, width=1.0,
                                  envelope="decay", rate=1.0, anchor=-0.4)
        sc = scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                  fam, t0=0.0, T=0.4, nt=16)
        C1 = checker.empirical_constant(sc, 0.4, 0.2)
        assert 0.0 < C1 < math.inf
        sc2 = scenario.manufacture(
            geometry.make_radial(n=3, R=1.0, h=0.025, k=1.0), nl,
            scenario.constant_diffusion(1.0), fam, t0=0.0, T=0.4, nt=32)
        C2 = checker.empirical_constant(sc2, 0.4, 0.2)
        assert abs(C2 - C1) <= 0.2 * C1


class TestCorollary:
    def test_scalar_identities_and_constant(self):
        sc = wave_scenario()
        rep = checker.check_local_bound(sc)
        assert rep.passed
        T, R = sc.T, sc.domain.R
        assert rep.details["T_scalar"] == pytest.approx(math.sqrt(2.0 / T), rel=1e-13)
        assert rep.details["S_scalar"] == pytest.approx(4.0 / R, rel=1e-13)
        assert rep.violations == 0
        assert 0.0 < rep.C_emp < math.inf

    def test_hyperbolic_scalar_identity(self):
        dom = geometry.make_radial(n=2, R=1.0, h=0.05, k=2.0)
        nl = nonlinearity.make_power(n=2, p=0.75, M=1.0)
        fam = scenario.BumpFamily(base=0.35, amp=0.45, width=1.0,
                                  envelope="decay", rate=0.8, anchor=-0.5)
        sc = scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                  fam, t0=0.0, T=0.5, nt=16)
        rep = checker.check_local_bound(sc)
        expected = 4.0 / 1.0 + math.sqrt(2.0) * 2.0**0.25 / 1.0
        assert rep.details["S_scalar"] == pytest.approx(expected, rel=1e-13)

    def test_heat_kernel_reduces_to_geometric_bracket(self):
        # exact caloric solution: no source, no drift, so the bracket
        # carries only the window terms 1/R + 1/sqrt(T)
        sc = heat_kernel_scenario()
        consts = estimator.compute_structural(sc)
        assert consts.mu == 0.0 and consts.gamma == 0.0
        rep = checker.check_local_bound(sc)
        assert rep.details["bracket_standard"] == pytest.approx(
            1.0 / sc.domain.R + 1.0 / math.sqrt(sc.T), rel=1e-12)
        assert rep.passed

    def test_flat_edge_bump_prefers_boundary_data_variant(self):
        # ramp envelope: initial and lateral gradient data are tiny, so
        # the variant built from them beats the geometric bracket
        sc = bump_scenario(envelope="ramp")
        rep = checker.check_local_bound(sc)
        assert rep.details["bracket_boundary_data"] < rep.details["bracket_standard"]
        assert rep.details["sharper_pointwise_fraction"] >= 0.9

    def test_constant_solution_passes(self):
        rep = checker.check_local_bound(constant_scenario())
        assert rep.passed
        assert rep.C_emp == 0.0


class TestRegimeLemmas:
    def test_all_four_pass_with_finite_constants(self):
        sc = bump_scenario()
        reps = checker.check_regime_lemmas(sc, rho=0.4, delta=0.2)
        names = {"inner-ball", "late-window", "whole-cylinder",
                 "interior-core", "combination"}
        assert set(reps) == names
        for name in names - {"combination"}:
            assert reps[name].passed
            assert math.isfinite(reps[name].C_emp)

    def test_bound_value_is_region_sup(self):
        # offset + C_emp * bracket reproduces max(offset, sup w) exactly:
        # the direct-sup constant is the tight bisection limit
        sc = bump_scenario()
        reps = checker.check_regime_lemmas(sc, rho=0.4, delta=0.2)
        w = estimator.compute_barrier_w(sc).values
        late = fields.region_mask(sc.u, "full", "late", delta=0.2)
        rep = reps["late-window"]
        bound = rep.details["offset"] + rep.C_emp * rep.details["bracket"]
        assert bound == pytest.approx(
            max(rep.details["offset"], float(w[late].max())), rel=1e-12)

    def test_combination_dominates_w(self):
        sc = bump_scenario()
        reps = checker.check_regime_lemmas(sc, rho=0.4, delta=0.2)
        comb = reps["combination"]
        assert comb.passed
        assert comb.worst_margin >= -comb.tol
        assert comb.violations == 0

    def test_sqrt_recomposition(self):
        for sc, rho, delta in [(wave_scenario(), 0.5, 0.25),
                               (bump_scenario(), 0.4, 0.2)]:
            comb = checker.check_regime_lemmas(sc, rho, delta)["combination"]
            assert comb.details["sqrt_consistent"]
            assert all(g >= -1e-9 for g in comb.details["sqrt_gaps"].values())

    def test_inner_bound_decoupled_from_lateral_data(self):
        # growing envelope: tiny initial gradients, large lateral ones;
        # the inner-ball bound carries no lateral term yet still holds
        dom = geometry.make_segment(R=2.0, h=0.05)
        nl = nonlinearity.make_power(n=1, p=0.75, M=1.0)
        fam = scenario.WaveFamily(base=0.5, amp=0.002, freq=0.9, decay=-4.0,
                                  anchor=-1.0, trig="sin")
        sc = scenario.manufacture(dom, nl, scenario.constant_diffusion(1.0),
                                  fam, t0=0.0, T=1.0, nt=24)
        data = estimator.compute_parabolic_data(sc)
        assert data.sigma_u > 10.0 * data.tau_u
        reps = checker.check_regime_lemmas(sc, rho=0.5, delta=0.25)
        assert reps["inner-ball"].passed
        assert reps["inner-ball"].details["offset"] == pytest.approx(data.tau_u**2)

    def test_constant_solution_trivial(self):
        reps = checker.check_regime_lemmas(constant_scenario(), 0.5, 0.25)
        for name in ("inner-ball", "late-window", "whole-cylinder", "interior-core"):
            assert reps[name].passed
            assert reps[name].C_emp == 0.0


class TestPowerRescaling:
    @staticmethod
    def make_field(h=0.04, nt=20, base=0.8, amp=1.0, T=0.4):
        dom = geometry.make_radial(n=2, R=1.0, h=h, k=0.0)
        fam = scenario.BumpFamily(base=base, amp=amp, width=1.0,
                                  envelope="decay", rate=0.8, anchor=-T)
        times = fields.uniform_times(0.0, T, nt)
        vals = np.broadcast_to(fam.f(dom.distance[..., None], times),
                               dom.shape + (times.size,)).copy()
        return fields.SpaceTimeField(dom, times, vals)

    def test_time_dilation_factor(self):
        f = self.make_field()
        rep = checker.check_power_rescaling(f, p=0.75, M=2.0, t0=0.0, T=0.4)
        # M^(1-p) at M=2, p=3/4
        assert rep.details["time_dilation"] == pytest.approx(
            2.0**0.25, abs=1e-15)
        assert rep.details["time_dilation"] == pytest.approx(
            1.189207115002721, abs=1e-12)

    def test_residual_scales_exactly(self):
        f = self.make_field()
        rep = checker.check_power_rescaling(f, p=0.75, M=2.0, t0=0.0, T=0.4)
        assert rep.passed
        got = rep.details["residual_companion"]
        want = rep.details["residual_scale"] * rep.details["residual_original"]
        assert got == pytest.approx(want, rel=1e-9)

    def test_sweep_monotone_toward_limit(self):
        f = self.make_field()
        rep = checker.check_power_rescaling(f, p=0.75, M=2.0, t0=0.0, T=0.4)
        sweep = rep.details["C_emp_sweep"]
        limit = rep.details["C_emp_limit"]
        assert sweep == sorted(sweep, reverse=True)
        assert all(c >= limit for c in sweep)
        assert rep.details["stage_sweep"]

    def test_refinement_stability(self):
        reps = [
            checker.check_power_rescaling(self.make_field(h=h, nt=nt),
                                          p=0.75, M=2.0, t0=0.0, T=0.4)
            for h, nt in [(0.08, 10), (0.04, 20)]
        ]
        assert abs(reps[1].C_emp - reps[0].C_emp) <= 0.2 * reps[0].C_emp

    def test_rejects_bad_exponent(self):
        f = self.make_field()
        with pytest.raises(DomainError, match="exponent"):
            checker.check_power_rescaling(f, p=0.2, M=2.0, t0=0.0, T=0.4)

    def test_rejects_range_overflow(self):
        f = self.make_field()
        with pytest.raises(DomainError, match="range"):
            checker.check_power_rescaling(f, p=0.75, M=1.5, t0=0.0, T=0.4)

    def test_constant_field_trivial(self):
        dom = geometry.make_radial(n=2, R=1.0, h=0.1, k=0.0)
        times = fields.uniform_times(0.0, 0.4, 8)
        vals = np.full(dom.shape + (times.size,), 0.7)
        f = fields.SpaceTimeField(dom, times, vals)
        rep = checker.check_power_rescaling(f, p=0.75, M=2.0, t0=0.0, T=0.4)
        assert rep.passed
        assert rep.C_emp == 0.0
        assert rep.details["residual_original"] == pytest.approx(0.0, abs=1e-13)


def solve_grad_power(eps, h=0.04, T=0.1, q=2.0):
    dom = geometry.make_segment(R=1.0, h=h)
    nl = nonlinearity.make_power(n=1, p=0.75, M=1.0)
    xs = scenario.space_coords(dom)[0]
    init = 0.55 + 0.25 * np.cos(math.pi * xs / 2.0)
    edge = 0.55 + 0.25 * math.cos(math.pi / 2.0)

    def boundary(t):
        return np.array([edge, edge])

    return scenario.solve_forward(
        dom, nl, scenario.constant_diffusion(1.0),
        scenario.grad_power_source(eps, q), init, boundary,
        t0=0.0, T=T, store_stride=8,
    )


class TestGradientPowerSource:
    def test_solved_scenario_passes(self):
        rep = checker.check_gradient_power_source(solve_grad_power(0.01))
        assert rep.passed
        assert 0.0 < rep.C_emp < math.inf
        assert math.isfinite(rep.details["F_full"])
        assert math.isfinite(rep.details["H_full"])

    def test_eps_sweep_spread(self):
        vals = [checker.check_gradient_power_source(solve_grad_power(e)).C_emp
                for e in (0.001, 0.01, 0.1)]
        assert (max(vals) - min(vals)) / max(vals) < 0.5

    def test_gradient_partial_magnitude(self):
        # |d H / d omega| for H = eps |omega|^2 at |omega| = 5
        src = scenario.grad_power_source(0.01, 2.0)
        assert src.grad_omega_norm(5.0) == pytest.approx(0.1, abs=1e-15)

    def test_rejects_wrong_source_kind(self):
        with pytest.raises(DomainError, match="gradient-power"):
            checker.check_gradient_power_source(constant_scenario())

    def test_rejects_large_q(self):
        sc = solve_grad_power(0.01, h=0.1, T=0.1)
        import dataclasses
        bad = dataclasses.replace(
            sc, source=dataclasses.replace(sc.source, q=5.0))
        with pytest.raises(DomainError, match="q > 1|\\(1, 4\\)"):
            checker.check_gradient_power_source(bad)


def bounded_wave_window(R, T):
    dom = geometry.make_segment(R=R, h=R / 24.0)
    fam = scenario.WaveFamily(base=2.0, amp=0.5, freq=1.0, decay=1.0,
                              anchor=-T, trig="sin")
    times = fields.uniform_times(0.0, T, 48)
    xs = scenario.space_coords(dom)[0][..., None]
    return fields.SpaceTimeField(dom, times, fam.f(xs, times))


class TestLiouvilleDecay:
    def test_bounded_family_decays(self):
        rep = checker.check_liouville_decay(bounded_wave_window)
        assert rep.passed
        prods = rep.details["products"]
        assert all(b <= a * 1.10 for a, b in zip(prods, prods[1:]))
        assert rep.details["grad_collapsed"]

    def test_log_slope(self):
        rep = checker.check_liouville_decay(bounded_wave_window)
        sups = rep.details["sups"]
        for a, b in zip(sups, sups[1:]):
            assert math.log(a / b) / math.log(2.0) >= 0.9

    def test_fixed_floor_kernel_hits_past_horizon(self):
        # The kernel profile is undefined before its reference time, so the
        # builder clamps the window start there; the sweep must flag the
        # missing horizon instead of failing the decay assertion.
        def make(R, T):
            dom = geometry.make_segment(R=R, h=R / 24.0)
            fam = scenario.HeatKernelFamily(n_dim=1, floor=0.4, amp=1.0,
                                            t_ref=0.0)
            t0 = 1.0
            start = max(t0 - T, 0.5)
            times = np.linspace(start, t0, 48)
            xs = scenario.space_coords(dom)[0][..., None]
            return fields.SpaceTimeField(dom, times, fam.f(xs, times))

        rep = checker.check_liouville_decay(make)
        assert rep.status == checker.STATUS_PREMISE
        assert rep.details["window_spans"][0] == pytest.approx(0.5)
        assert rep.details["window_spans"][-1] < 0.01

    def test_growth_violates_premise(self):
        def make(R, T):
            dom = geometry.make_segment(R=R, h=R / 24.0)
            times = fields.uniform_times(0.0, T, 48)
            xs = scenario.space_coords(dom)[0][..., None]
            return fields.SpaceTimeField(
                dom, times, 2.0 + 0.5 * np.exp(times) * np.cosh(xs))

        rep = checker.check_liouville_decay(make)
        assert rep.status == checker.STATUS_PREMISE
        assert not rep.passed

    def test_constant_family(self):
        def make(R, T):
            dom = geometry.make_segment(R=R, h=R / 12.0)
            times = fields.uniform_times(0.0, T, 24)
            return fields.SpaceTimeField(
                dom, times, np.full(dom.shape + (times.size,), 3.0))

        rep = checker.check_liouville_decay(make)
        assert rep.passed
        assert rep.details["sups"] == [0.0] * 4

    def test_unbounded_family_rejected(self):
        def make(R, T):
            dom = geometry.make_segment(R=R, h=R / 12.0)
            times = fields.uniform_times(0.0, T, 24)
            vals = np.full(dom.shape + (times.size,), 1.0)
            vals[0, 0] = np.inf
            return fields.SpaceTimeField(dom, times, vals)

        with pytest.raises(DomainError, match="unbounded"):
            checker.check_liouville_decay(make)


class TestDeterminism:
    def test_reports_repeat_bitwise(self):
        a = checker.check_global_bound(wave_scenario(h=0.1, nt=12), 0.5, 0.25, 1.0)
        b = checker.check_global_bound(wave_scenario(h=0.1, nt=12), 0.5, 0.25, 1.0)
        assert a.worst_margin == b.worst_margin
        assert a.details == b.details
        np.testing.assert_array_equal(a.margin_field, b.margin_field)
