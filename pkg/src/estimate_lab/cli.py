"""Config-driven front end: declare a scenario, run checks, write reports.

One JSON document declares the scenario (domain, time window,
nonlinearity, diffusion coefficient, source, solution), the partition
used by the global bound (rho, delta, calibration constant or "auto"),
the list of checks to run, and output paths.  `run` executes the checks
in declaration order and writes report.json plus optional per-node and
profile CSVs; `sweep` repeats a run over one parameter and aggregates
the results; `hypotheses` audits the structural conditions on the
nonlinearity and exits.

Exit codes: 0 all checks pass, 1 an inequality is violated beyond
tolerance, 2 the configuration is invalid or a hypothesis/premise of a
checked statement fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from copy import deepcopy
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import checker, cutoffs, estimator, fields, geometry, nonlinearity, scenario
from .checker import CheckReport, RefinementStudy, TolModel
from .errors import ConfigError, EstimateLabError

CHECK_TOKENS = (
    "hypotheses",
    "lemma21",
    "theorem",
    "corollary",
    "regimes",
    "appendixA",
    "appendixB",
    "liouville",
    "cutoffs",
)
SWEEP_PARAMS = ("R", "T", "rho", "delta", "epsilon", "p", "k", "h")

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

_MISSING = object()


# ----------------------------------------------------------------------
# configuration parsing


def _need(block: dict, key: str, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected a JSON object, got {type(block).__name__}")
    if key not in block:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return block[key]


def _number(block: dict, key: str, where: str, default=_MISSING) -> float:
    value = block.get(key, default) if isinstance(block, dict) else _MISSING
    if value is _MISSING:
        value = _need(block, key, where)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: {key!r} must be a number, got {value!r}")
    return float(value)


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error in {path!r} at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw


class RunConfig:
    """Validated view of the raw configuration document."""

    def __init__(self, raw: dict):
        self.raw = raw
        self.scenario_cfg = _need(raw, "scenario", "config")
        _need(self.scenario_cfg, "domain", "scenario")
        _need(self.scenario_cfg, "window", "scenario")
        _need(self.scenario_cfg, "nonlinearity", "scenario")
        _need(self.scenario_cfg, "solution", "scenario")

        part = raw.get("partition", {})
        if not isinstance(part, dict):
            raise ConfigError("partition: expected a JSON object")
        self.rho: Optional[float] = (
            _number(part, "rho", "partition") if "rho" in part else None
        )
        self.delta: Optional[float] = (
            _number(part, "delta", "partition") if "delta" in part else None
        )
        c_cal = part.get("C_cal", "auto")
        if c_cal == "auto":
            self.C_cal: Optional[float] = None
        elif isinstance(c_cal, (int, float)) and not isinstance(c_cal, bool):
            self.C_cal = float(c_cal)
            if self.C_cal < 0:
                raise ConfigError(f"partition: C_cal must be >= 0, got {c_cal}")
        else:
            raise ConfigError(f'partition: C_cal must be a number or "auto", got {c_cal!r}')

        checks = raw.get("checks", [])
        if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
            raise ConfigError("checks: expected a list of check names")
        unknown = [c for c in checks if c not in CHECK_TOKENS]
        if unknown:
            raise ConfigError(
                f"checks: unknown entries {unknown}; valid names are {list(CHECK_TOKENS)}"
            )
        self.checks: List[str] = checks

        refinement = raw.get("refinement", {})
        if not isinstance(refinement, dict):
            raise ConfigError("refinement: expected a JSON object")
        levels = refinement.get("levels", 1)
        if isinstance(levels, bool) or not isinstance(levels, int) or levels < 1:
            raise ConfigError(f"refinement: levels must be a positive integer, got {levels!r}")
        self.levels = levels

        output = raw.get("output", {})
        if not isinstance(output, dict):
            raise ConfigError("output: expected a JSON object")
        self.report_path: str = output.get("report", "report.json")
        self.pernode_path: Optional[str] = output.get("pernode")
        self.plotdata_path: Optional[str] = output.get("plotdata")
        self.sweep_path: str = output.get("sweep", "sweep.csv")


# ----------------------------------------------------------------------
# scenario construction


def build_domain(cfg: dict) -> geometry.Domain:
    kind = _need(cfg, "kind", "domain")
    R = _number(cfg, "R", "domain")
    h = _number(cfg, "h", "domain")
    if kind == "segment":
        return geometry.make_segment(R=R, h=h, x0=_number(cfg, "x0", "domain", 0.0))
    if kind == "radial":
        n = _need(cfg, "n", "domain")
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError(f"domain: n must be an integer, got {n!r}")
        return geometry.make_radial(n=n, R=R, h=h, k=_number(cfg, "k", "domain", 0.0))
    if kind == "cartesian2d":
        x0 = cfg.get("x0", (0.0, 0.0))
        if not (isinstance(x0, (list, tuple)) and len(x0) == 2):
            raise ConfigError(f"domain: cartesian2d x0 must be a pair, got {x0!r}")
        return geometry.make_cartesian2d(R=R, h=h, x0=(float(x0[0]), float(x0[1])))
    raise ConfigError(f"domain: unknown kind {kind!r}")


def build_nonlinearity(cfg: dict, n: int) -> nonlinearity.Nonlinearity:
    family = _need(cfg, "family", "nonlinearity")
    M = _number(cfg, "M", "nonlinearity", 1.0)
    if family == "power":
        return nonlinearity.make_power(n=n, p=_number(cfg, "p", "nonlinearity"), M=M)
    if family == "identity":
        return nonlinearity.make_identity(M=M, xi=_number(cfg, "xi", "nonlinearity", 1.0))
    if family == "custom":
        expr = _need(cfg, "F", "nonlinearity")
        if not isinstance(expr, str):
            raise ConfigError("nonlinearity: custom flux F must be an expression string in s")
        return nonlinearity.from_expression(
            expr,
            M=M,
            s0=_number(cfg, "s0", "nonlinearity"),
            xi=_number(cfg, "xi", "nonlinearity"),
        )
    raise ConfigError(f"nonlinearity: unknown family {family!r}")


def build_diffusion(cfg: dict) -> scenario.DiffusionCoefficient:
    kind = cfg.get("kind", "constant") if isinstance(cfg, dict) else None
    if kind == "constant":
        return scenario.constant_diffusion(_number(cfg, "value", "diffusion", 1.0))
    if kind == "time_sine":
        return scenario.time_sine_diffusion()
    if kind == "solution_tanh":
        return scenario.solution_tanh_diffusion()
    raise ConfigError(f"diffusion: unknown kind {kind!r}")


def build_source(cfg: dict) -> scenario.SourceTerm:
    kind = cfg.get("kind", "zero")
    if kind == "zero":
        return scenario.zero_source()
    if kind == "grad_power":
        return scenario.grad_power_source(
            coefficient=_number(cfg, "coefficient", "source"),
            q=_number(cfg, "q", "source"),
        )
    raise ConfigError(f"source: unknown kind {kind!r} for a forward solve")


def build_family(cfg: dict, dom: geometry.Domain, window_start: float):
    kind = _need(cfg, "kind", "solution")
    anchor = _number(cfg, "anchor", "solution", window_start)
    if kind == "wave":
        return scenario.WaveFamily(
            base=_number(cfg, "base", "solution"),
            amp=_number(cfg, "amp", "solution"),
            freq=_number(cfg, "freq", "solution"),
            decay=_number(cfg, "decay", "solution", 0.0),
            anchor=anchor,
            trig=cfg.get("trig", "cos"),
        )
    if kind == "bump":
        return scenario.BumpFamily(
            base=_number(cfg, "base", "solution"),
            amp=_number(cfg, "amp", "solution"),
            width=_number(cfg, "width", "solution", dom.R),
            envelope=cfg.get("envelope", "decay"),
            rate=_number(cfg, "rate", "solution", 1.0),
            anchor=anchor,
            floor_frac=_number(cfg, "floor_frac", "solution", 1e-3),
            duration=_number(cfg, "duration", "solution", 1.0),
        )
    if kind == "heat_kernel":
        n_dim = cfg.get("n_dim", dom.n)
        if isinstance(n_dim, bool) or not isinstance(n_dim, int):
            raise ConfigError(f"solution: n_dim must be an integer, got {n_dim!r}")
        return scenario.HeatKernelFamily(
            n_dim=n_dim,
            floor=_number(cfg, "floor", "solution", 0.0),
            amp=_number(cfg, "amp", "solution", 1.0),
            t_ref=_number(cfg, "t_ref", "solution", 0.0),
        )
    if kind == "constant":
        return scenario.ConstantFamily(_number(cfg, "value", "solution"))
    raise ConfigError(f"solution: unknown kind {kind!r}")


def _initial_profile(cfg: dict, dom: geometry.Domain) -> np.ndarray:
    kind = _need(cfg, "kind", "solution.initial")
    if kind == "cosine":
        base = _number(cfg, "base", "solution.initial")
        amp = _number(cfg, "amp", "solution.initial")
        return base + amp * np.cos(math.pi * dom.distance / (2.0 * dom.R))
    if kind == "constant":
        return np.full(dom.shape, _number(cfg, "value", "solution.initial"))
    raise ConfigError(f"solution.initial: unknown kind {kind!r}")


def build_scenario(scfg: dict) -> scenario.Scenario:
    dom = build_domain(_need(scfg, "domain", "scenario"))
    wcfg = _need(scfg, "window", "scenario")
    t0 = _number(wcfg, "t0", "window")
    T = _number(wcfg, "T", "window")
    nl = build_nonlinearity(_need(scfg, "nonlinearity", "scenario"), dom.n)
    diffusion = build_diffusion(scfg.get("diffusion", {"kind": "constant"}))
    sol = _need(scfg, "solution", "scenario")
    src_cfg = scfg.get("source", {"kind": "manufactured"})

    if sol.get("kind") == "solve":
        source = build_source(src_cfg)
        init = _initial_profile(_need(sol, "initial", "solution"), dom)
        edge = init[dom.boundary].copy()
        stride = sol.get("store_stride", 1)
        if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
            raise ConfigError(f"solution: store_stride must be a positive integer, got {stride!r}")
        m_floor = sol.get("m_floor")
        return scenario.solve_forward(
            dom,
            nl,
            diffusion,
            source,
            init,
            lambda t: edge,
            t0=t0,
            T=T,
            cfl_safety=_number(sol, "cfl_safety", "solution", 0.5),
            m_floor=None if m_floor is None else float(m_floor),
            store_stride=stride,
        )

    if src_cfg.get("kind", "manufactured") != "manufactured":
        raise ConfigError(
            "source: closed-form solution families absorb the equation residual; "
            'use source {"kind": "manufactured"} (or a "solve" solution)'
        )
    nt = _need(wcfg, "nt", "window")
    if isinstance(nt, bool) or not isinstance(nt, int):
        raise ConfigError(f"window: nt must be an integer step count, got {nt!r}")
    family = build_family(sol, dom, t0 - T)
    return scenario.manufacture(dom, nl, diffusion, family, t0=t0, T=T, nt=nt)


# ----------------------------------------------------------------------
# deterministic serialization (17 significant digits, sorted keys)


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _render_json(obj, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj, key=str):
            items.append(f"{inner}{json.dumps(str(key))}: {_render_json(obj[key], indent + 1)}")
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_render_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    raise ConfigError(f"cannot serialize {type(obj).__name__} into the report")


def render_report(report: dict) -> str:
    return _render_json(report, 0) + "\n"


def _plain(value):
    """Recursively convert report details into JSON-ready values."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def report_to_dict(rep: CheckReport) -> dict:
    out = {
        "name": rep.name,
        "status": rep.status,
        "worst_margin": float(rep.worst_margin),
        "violations": int(rep.violations),
        "tol": float(rep.tol),
        "n_nodes": int(rep.n_nodes),
        "skipped": int(rep.skipped),
        "grid_h": float(rep.grid_h),
        "details": _plain(rep.details),
    }
    if rep.C_emp is not None:
        out["C_emp"] = float(rep.C_emp)
    return out


def study_to_dict(study: RefinementStudy, levels: Sequence) -> dict:
    return {
        "status": study.reports[-1].status,
        "levels": [[float(h), int(nt)] for h, nt in levels],
        "worst_margins": [float(r.worst_margin) for r in study.reports],
        "deficits": [float(d) for d in study.deficits],
        "ratios": [float(r) for r in study.ratios],
        "order": float(study.order),
        "tol_model": {
            "A": study.tol_model.A,
            "B": study.tol_model.B,
            "safety": study.tol_model.safety,
            "floor": study.tol_model.floor,
        },
        "final": report_to_dict(study.reports[-1]),
    }


# ----------------------------------------------------------------------
# check execution


class ChecksRun:
    """Executes the configured checks on one scenario, in declaration order."""

    def __init__(self, cfg: RunConfig, lemma_tol_model: Optional[TolModel] = None):
        self.cfg = cfg
        self.lemma_tol_model = lemma_tol_model
        self.sc = build_scenario(cfg.scenario_cfg)
        self.rho = cfg.rho if cfg.rho is not None else self.sc.domain.R / 2.0
        self.delta = cfg.delta if cfg.delta is not None else self.sc.T / 2.0
        self.report: Dict[str, object] = {}
        self.statuses: List[str] = []
        self.hypothesis_failures: List[str] = []
        self.worst_margins: List[float] = []
        self.first_C_emp: Optional[float] = None
        self.pernode_rep: Optional[CheckReport] = None
        self.lemma_rep: Optional[CheckReport] = None
        self.theorem_rep: Optional[CheckReport] = None

    # -- bookkeeping

    def _absorb(self, rep: CheckReport) -> dict:
        self.statuses.append(rep.status)
        self.worst_margins.append(float(rep.worst_margin))
        if self.first_C_emp is None and rep.C_emp is not None:
            self.first_C_emp = float(rep.C_emp)
        return report_to_dict(rep)

    # -- individual checks

    def _check_hypotheses(self) -> dict:
        rep = nonlinearity.check_hypotheses(self.sc.nl, self.sc.domain.n)
        if not rep.all_satisfied:
            failed = []
            if rep.kappa_min <= 0:
                failed.append(f"kappa_min = {rep.kappa_min:.6g} (needs > 0)")
            if rep.eta_min <= 0:
                failed.append(f"eta_min = {rep.eta_min:.6g} (needs > 0)")
            if not math.isfinite(rep.Gamma_max):
                failed.append("Gamma_max is not finite")
            if rep.Xi_min <= 0:
                failed.append(f"Xi_min = {rep.Xi_min:.6g} (needs > 0)")
            if not rep.fprime_positive:
                failed.append("F' is not strictly positive")
            self.hypothesis_failures.extend(failed or ["structural hypotheses fail"])
        return {
            "kappa_min": rep.kappa_min,
            "eta_min": rep.eta_min,
            "Gamma_max": rep.Gamma_max,
            "Xi_min": rep.Xi_min,
            "fprime_positive": bool(rep.fprime_positive),
            "all_satisfied": bool(rep.all_satisfied),
            "n_samples": int(rep.n_samples),
            "status": checker.STATUS_PASS if rep.all_satisfied else checker.STATUS_FAIL,
        }

    def _check_lemma(self) -> dict:
        if self.cfg.levels == 1:
            rep = checker.check_barrier_inequality(self.sc, self.lemma_tol_model)
            self.lemma_rep = rep
            return self._absorb(rep)
        scfg = self.cfg.scenario_cfg
        h0 = float(scfg["domain"]["h"])
        nt0 = int(scfg["window"].get("nt", 24))

        def rebuild(h: float, nt: int) -> scenario.Scenario:
            mutated = deepcopy(scfg)
            mutated["domain"]["h"] = h
            if "nt" in mutated["window"]:
                mutated["window"]["nt"] = nt
            return build_scenario(mutated)

        levels = [(h0 / 2**i, nt0 * 2**i) for i in range(self.cfg.levels)]
        study = checker.barrier_refinement(rebuild, levels)
        final = study.reports[-1]
        self.lemma_rep = final
        self.statuses.append(final.status)
        self.worst_margins.append(float(final.worst_margin))
        return study_to_dict(study, levels)

    def _check_theorem(self) -> dict:
        if self.cfg.C_cal is None:
            C_val = checker.empirical_constant(self.sc, self.rho, self.delta)
            mode = "auto"
        else:
            C_val = self.cfg.C_cal
            mode = "fixed"
        rep = checker.check_global_bound(self.sc, self.rho, self.delta, C_val)
        self.theorem_rep = rep
        out = self._absorb(rep)
        out["C_cal"] = float(C_val)
        out["calibration"] = mode
        return out

    def _check_regimes(self) -> dict:
        reports = checker.check_regime_lemmas(self.sc, self.rho, self.delta)
        return {name: self._absorb(rep) for name, rep in reports.items()}

    def _check_rescaling(self) -> dict:
        acfg = self.cfg.raw.get("appendixA", {})
        p = acfg.get("p", self.sc.nl.p)
        if p is None:
            raise ConfigError(
                "appendixA: the rescaling route needs a power exponent; "
                'set {"appendixA": {"p": ...}} for non-power nonlinearities'
            )
        M = acfg.get("M", self.sc.nl.M)
        s0_values = tuple(acfg.get("s0_values", (16.0, 64.0, 256.0)))
        rep = checker.check_power_rescaling(
            self.sc.u,
            p=float(p),
            M=float(M),
            t0=float(self.sc.times[-1]),
            T=float(self.sc.T),
            k=self.sc.domain.k,
            s0_values=s0_values,
        )
        return self._absorb(rep)

    def _liouville_family(self):
        scfg = self.cfg.scenario_cfg
        base_R = float(scfg["domain"]["R"])
        base_h = float(scfg["domain"]["h"])
        t0 = float(scfg["window"]["t0"])
        sol = scfg["solution"]
        # a kernel profile cannot predate its reference time, so the
        # window start is clamped at the base configuration's lag past it
        lag = None
        if sol.get("kind") == "heat_kernel":
            t_ref = float(sol.get("t_ref", 0.0))
            lag = (t0 - float(scfg["window"]["T"])) - t_ref

        def family(R: float, T: float) -> scenario.Scenario:
            mutated = deepcopy(scfg)
            mutated["domain"]["R"] = R
            mutated["domain"]["h"] = base_h * (R / base_R)
            if lag is not None:
                t_ref = float(sol.get("t_ref", 0.0))
                start = max(t0 - T, t_ref + lag)
                mutated["window"]["T"] = t0 - start
            else:
                mutated["window"]["T"] = T
            return build_scenario(mutated)

        return family

    def _check_liouville(self) -> dict:
        lcfg = self.cfg.raw.get("liouville", {})
        radii = tuple(float(r) for r in lcfg.get("radii", (1.0, 2.0, 4.0, 8.0)))
        slack = float(lcfg.get("slack", 0.10))
        rep = checker.check_liouville_decay(self._liouville_family(), radii, slack)
        return self._absorb(rep)

    def _check_cutoffs(self) -> dict:
        ccfg = self.cfg.raw.get("cutoffs", {})
        thetas = tuple(float(t) for t in ccfg.get("thetas", (0.5, 0.75)))
        t_start = float(self.sc.times[0])
        out: Dict[str, object] = {}
        all_finite = True
        for theta in thetas:
            spatial = cutoffs.verify_cutoff(
                cutoffs.make_spatial(self.sc.domain.R, self.rho, theta)
            )
            temporal = cutoffs.verify_cutoff(
                cutoffs.make_temporal(t_start, self.delta, theta)
            )
            all_finite &= math.isfinite(spatial) and math.isfinite(temporal)
            out[f"theta={format(theta, '.17g')}"] = {
                "spatial_constant": spatial,
                "temporal_constant": temporal,
                "exponent": cutoffs.exponent_for(theta),
            }
        status = checker.STATUS_PASS if all_finite else checker.STATUS_FAIL
        out["status"] = status
        self.statuses.append(status)
        return out

    # -- driver

    def execute(self) -> None:
        dispatch = {
            "hypotheses": self._check_hypotheses,
            "lemma21": self._check_lemma,
            "theorem": self._check_theorem,
            "corollary": lambda: self._absorb(checker.check_local_bound(self.sc)),
            "regimes": self._check_regimes,
            "appendixA": self._check_rescaling,
            "appendixB": lambda: self._absorb(
                checker.check_gradient_power_source(self.sc)
            ),
            "liouville": self._check_liouville,
            "cutoffs": self._check_cutoffs,
        }
        for token in self.cfg.checks:
            self.report[token] = dispatch[token]()
        if self.pernode_rep is None:
            self.pernode_rep = self.theorem_rep or self.lemma_rep

    def exit_code(self) -> int:
        if self.hypothesis_failures:
            return EXIT_CONFIG
        if checker.STATUS_FAIL in self.statuses:
            return EXIT_VIOLATION
        if checker.STATUS_PREMISE in self.statuses:
            return EXIT_CONFIG
        return EXIT_PASS


# ----------------------------------------------------------------------
# CSV emitters


def _csv_fmt(x: float) -> str:
    return format(float(x), ".17g")


def _x_column(dom: geometry.Domain) -> np.ndarray:
    if dom.kind == "segment":
        return np.asarray(dom.axes[0], dtype=float)
    return np.asarray(dom.distance, dtype=float)


def write_pernode(path: str, sc: scenario.Scenario, rep: CheckReport) -> None:
    """Per-node table with columns x, t, lhs, rhs, margin, regime."""
    xs = _x_column(sc.domain).reshape(-1)
    nt = sc.times.size
    margin = rep.margin_field.reshape(-1, nt)
    lhs = rep.lhs_field.reshape(-1, nt) if rep.lhs_field is not None else None
    rhs = rep.rhs_field.reshape(-1, nt) if rep.rhs_field is not None else None
    labels = rep.labels.reshape(-1, nt) if rep.labels is not None else None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "lhs", "rhs", "margin", "regime"])
        for i in range(xs.size):
            for j in range(nt):
                m = margin[i, j]
                if not math.isfinite(m):
                    continue
                regime = (
                    estimator.REGIME_NAMES[labels[i, j]] if labels is not None else "I"
                )
                writer.writerow(
                    [
                        _csv_fmt(xs[i]),
                        _csv_fmt(sc.times[j]),
                        _csv_fmt(lhs[i, j]) if lhs is not None else "nan",
                        _csv_fmt(rhs[i, j]) if rhs is not None else "nan",
                        _csv_fmt(m),
                        regime,
                    ]
                )


def _profile_indexer(dom: geometry.Domain):
    """Index map selecting the profile axis (row through the center in 2-D)."""
    if dom.kind == "cartesian2d":
        j_mid = int(np.argmin(np.abs(np.asarray(dom.axes[1]) - dom.x0[1])))
        return lambda arr: arr[:, j_mid], np.asarray(dom.axes[0], dtype=float)
    return lambda arr: arr, _x_column(dom)


def write_plotdata(
    path: str,
    sc: scenario.Scenario,
    theorem_rep: Optional[CheckReport],
    lemma_rep: Optional[CheckReport],
) -> None:
    """Final-time profiles of the barrier, envelope coefficient, and margin."""
    take, xs = _profile_indexer(sc.domain)
    w_slice = take(checker.compute_barrier_w(sc).values[..., -1])

    z_prof = np.full(xs.shape, math.nan)
    if theorem_rep is not None and theorem_rep.labels is not None:
        d = theorem_rep.details
        coeffs = (d["iota"], d["beta1"], d["beta2"], d["beta3"])
        z_prof = np.choose(take(theorem_rep.labels[..., -1]), coeffs)

    if theorem_rep is not None:
        margin_prof = take(theorem_rep.margin_field[..., -1])
        t_used = float(sc.times[-1])
    elif lemma_rep is not None:
        # the differential inequality is masked at the window endpoints
        margin_prof = take(lemma_rep.margin_field[..., -2])
        t_used = float(sc.times[-2])
    else:
        margin_prof = np.full(xs.shape, math.nan)
        t_used = float(sc.times[-1])

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "w", "Z", "margin"])
        for i in range(xs.size):
            writer.writerow(
                [
                    _csv_fmt(xs[i]),
                    _csv_fmt(t_used),
                    _csv_fmt(w_slice.reshape(-1)[i]),
                    _csv_fmt(np.asarray(z_prof).reshape(-1)[i]),
                    _csv_fmt(np.asarray(margin_prof).reshape(-1)[i]),
                ]
            )


# ----------------------------------------------------------------------
# commands


def cmd_run(cfg: RunConfig) -> int:
    run = ChecksRun(cfg)
    run.execute()
    with open(cfg.report_path, "w", encoding="utf-8") as fh:
        fh.write(render_report(run.report))
    if cfg.pernode_path:
        if run.pernode_rep is not None and run.pernode_rep.margin_field is not None:
            write_pernode(cfg.pernode_path, run.sc, run.pernode_rep)
        else:
            print(
                "pernode output needs the theorem or lemma21 check; skipping",
                file=sys.stderr,
            )
    if cfg.plotdata_path:
        write_plotdata(cfg.plotdata_path, run.sc, run.theorem_rep, run.lemma_rep)
    for token in cfg.checks:
        entry = run.report[token]
        status = entry.get("status") if isinstance(entry, dict) else None
        if status is None and isinstance(entry, dict):
            inner = [
                v["status"]
                for v in entry.values()
                if isinstance(v, dict) and "status" in v
            ]
            status = (
                checker.STATUS_FAIL
                if checker.STATUS_FAIL in inner
                else (inner[0] if inner else "done")
            )
        print(f"{token}: {status}")
    for failure in run.hypothesis_failures:
        print(f"hypothesis violation: {failure}", file=sys.stderr)
    return run.exit_code()


def _thread_width(n_jobs: int) -> int:
    cap = os.environ.get("ESTIMATE_LAB_THREADS")
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError as exc:
            raise ConfigError(
                f"ESTIMATE_LAB_THREADS must be an integer, got {cap!r}"
            ) from exc
        if cap_val < 1:
            raise ConfigError(f"ESTIMATE_LAB_THREADS must be >= 1, got {cap_val}")
        return max(1, min(n_jobs, cap_val))
    return max(1, min(n_jobs, os.cpu_count() or 1))


def _sweep_mutate(raw: dict, param: str, value: float) -> dict:
    mutated = deepcopy(raw)
    sc = mutated["scenario"]
    if param == "R":
        sc["domain"]["R"] = value
    elif param == "T":
        sc["window"]["T"] = value
    elif param == "rho":
        mutated.setdefault("partition", {})["rho"] = value
    elif param == "delta":
        mutated.setdefault("partition", {})["delta"] = value
    elif param == "epsilon":
        src = sc.get("source", {})
        if src.get("kind") != "grad_power":
            raise ConfigError(
                "sweep: epsilon varies the gradient-power source coefficient; "
                'the scenario source must have kind "grad_power"'
            )
        src["coefficient"] = value
    elif param == "p":
        nl = sc["nonlinearity"]
        if nl.get("family") != "power":
            raise ConfigError('sweep: p applies to the "power" nonlinearity family')
        nl["p"] = value
    elif param == "k":
        if sc["domain"].get("kind") != "radial":
            raise ConfigError('sweep: k applies to "radial" domains only')
        sc["domain"]["k"] = value
    elif param == "h":
        h0 = float(sc["domain"]["h"])
        sc["domain"]["h"] = value
        window = sc["window"]
        if "nt" in window:
            # keep dt proportional to h^2 so the tolerance scales like h^2
            window["nt"] = max(4, round(int(window["nt"]) * (h0 / value) ** 2))
    else:
        raise ConfigError(f"sweep: unknown parameter {param!r}; valid: {list(SWEEP_PARAMS)}")
    return mutated


def _sweep_tol_model(base_cfg: RunConfig) -> Optional[TolModel]:
    """Fixed tolerance model shared by every sweep value.

    The per-run heuristic rescales with each grid, which would hide the
    h^2 law the tol column is supposed to expose; instead the model is
    frozen from the base configuration's margin scale, with no floor.
    """
    if "lemma21" not in base_cfg.checks:
        return None
    base = ChecksRun(base_cfg)
    rep = checker.check_barrier_inequality(base.sc, TolModel(0.0, 0.0, 0.0, 0.0))
    scale = max(abs(rep.worst_margin), 1e-12)
    return TolModel(A=5.0 * scale, B=5.0 * scale, safety=1.0, floor=0.0)


def cmd_sweep(cfg: RunConfig, param: str, values: Sequence[float]) -> int:
    if param not in SWEEP_PARAMS:
        raise ConfigError(
            f"sweep parameter must be one of {list(SWEEP_PARAMS)}, got {param!r}"
        )
    if not values:
        raise ConfigError("sweep: need at least one value")
    tol_model = _sweep_tol_model(cfg) if param == "h" else None

    def one(value: float):
        sub = RunConfig(_sweep_mutate(cfg.raw, param, value))
        sub.levels = 1
        run = ChecksRun(sub, lemma_tol_model=tol_model)
        run.execute()
        consts = estimator.compute_structural(run.sc)
        scalars = estimator.regime_scalars(
            consts.mu, consts.gamma, run.rho, run.delta,
            run.sc.domain.R, run.sc.domain.k,
        )
        lemma_entry = run.report.get("lemma21")
        tol = lemma_entry["tol"] if isinstance(lemma_entry, dict) and "tol" in lemma_entry else math.nan
        return {
            "param": param,
            "value": value,
            "C_emp": math.nan if run.first_C_emp is None else run.first_C_emp,
            "worst_margin": min(run.worst_margins) if run.worst_margins else math.nan,
            "S_scalar": scalars.S_scalar,
            "T_scalar": scalars.T_scalar,
            "tol": tol,
        }, run.exit_code()

    width = _thread_width(len(values))
    if width > 1:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(one, values))
    else:
        results = [one(v) for v in values]

    with open(cfg.sweep_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "value", "C_emp", "worst_margin",
                         "S_scalar", "T_scalar", "tol"])
        for row, _ in results:
            writer.writerow(
                [row["param"]] + [_csv_fmt(row[c]) for c in
                                  ("value", "C_emp", "worst_margin",
                                   "S_scalar", "T_scalar", "tol")]
            )
    for (row, code), value in zip(results, values):
        print(f"{param}={value:g}: exit {code}, worst margin {row['worst_margin']:.6g}")
    return max(code for _, code in results)


def cmd_hypotheses(cfg: RunConfig) -> int:
    dom = build_domain(_need(cfg.scenario_cfg, "domain", "scenario"))
    nl = build_nonlinearity(_need(cfg.scenario_cfg, "nonlinearity", "scenario"), dom.n)
    rep = nonlinearity.check_hypotheses(nl, dom.n)
    print(f"kappa_min = {_fmt_float(rep.kappa_min)}")
    print(f"eta_min = {_fmt_float(rep.eta_min)}")
    print(f"Gamma_max = {_fmt_float(rep.Gamma_max)}")
    print(f"Xi_min = {_fmt_float(rep.Xi_min)}")
    print(f"fprime_positive = {str(bool(rep.fprime_positive)).lower()}")
    print(f"all_satisfied = {str(bool(rep.all_satisfied)).lower()}")
    if not rep.all_satisfied:
        conditions = []
        if rep.kappa_min <= 0:
            conditions.append("kappa_min > 0")
        if rep.eta_min <= 0:
            conditions.append("eta_min > 0")
        if not math.isfinite(rep.Gamma_max):
            conditions.append("Gamma_max finite")
        if rep.Xi_min <= 0:
            conditions.append("Xi_min > 0")
        if not rep.fprime_positive:
            conditions.append("F' > 0")
        print(f"hypothesis violation: {', '.join(conditions)}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_PASS


def _parse_values(text: str) -> List[float]:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"sweep: cannot parse values {text!r}: {exc}") from exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="estimate-lab",
        description="Scenario-driven certification of gradient bounds for "
        "degenerate diffusion equations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the configured checks")
    p_run.add_argument("config", help="path to the JSON configuration")
    p_sweep = sub.add_parser("sweep", help="repeat a run across one parameter")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sweep.add_argument("--values", required=True,
                         help="comma- or space-separated numbers")
    p_hyp = sub.add_parser("hypotheses", help="audit the nonlinearity hypotheses")
    p_hyp.add_argument("config")
    args = parser.parse_args(argv)

    try:
        cfg = RunConfig(load_config(args.config))
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.param, _parse_values(args.values))
        return cmd_hypotheses(cfg)
    except EstimateLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
