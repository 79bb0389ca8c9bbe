"""Diffusion flux nonlinearities and their structural constants.

A nonlinearity is the scalar function F driving the diffusion term
``a(x,t,u) * laplacian(F(u))``.  Everything downstream is phrased through
the auxiliary integral

    G(s) = integral from s0 to s of F'(h)/h dh,

its log-substituted form g(r) = G(exp(r)), and four structural constants
(kappa, eta, Gamma, xi) that quantify how far F is from losing
parabolicity on the value range (0, M].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DomainError, HypothesisError, NumericalError

#: relative accuracy target for the quadrature behind custom-family G
QUAD_REL_TOL = 1e-10

#: hypothesis sampling reaches this many decades below M
SAMPLE_FLOOR_FACTOR = 1e-8


@dataclass(frozen=True)
class Nonlinearity:
    """A flux function F with its admissible range and reference constants.

    Attributes:
        family: one of "identity", "power", "custom".
        M: upper bound of the admissible solution range (0, M].
        s0: base point of the G integral.
        xi: shift constant; xi - G(s) must stay positive on (0, M].
        F, dF, d2F: the flux and its first two derivatives (vectorized).
        p: exponent for the power family, else None.
        kappa, eta, Gamma: declared structural constants when the family
            provides closed forms (None for custom until measured).
    """

    family: str
    M: float
    s0: float
    xi: float
    F: Callable
    dF: Callable
    d2F: Callable
    p: Optional[float] = None
    kappa: Optional[float] = None
    eta: Optional[float] = None
    Gamma: Optional[float] = None


class HypothesisReport(NamedTuple):
    kappa_min: float
    eta_min: float
    Gamma_max: float
    Xi_min: float
    fprime_positive: bool
    all_satisfied: bool
    n_samples: int


class PowerLawConstants(NamedTuple):
    kappa: float
    eta: float
    Gamma: float
    xi: float
    s0: float


# ----------------------------------------------------------------------
# constructors


def make_identity(M: float, xi: float = 1.0, s0: Optional[float] = None) -> Nonlinearity:
    """Linear flux F(s) = s.

    With the default base point s0 = M one has G(s) = log(s/M), so
    xi - G(s) = xi + log(M/s) >= xi on (0, M].
    """
    if M <= 0:
        raise DomainError(f"M must be positive, got {M}")
    s0 = M if s0 is None else float(s0)
    eta = xi - math.log(M / s0)
    if eta <= 0:
        raise DomainError(
            f"identity family needs xi - log(M/s0) > 0, got {eta}"
        )
    return Nonlinearity(
        family="identity",
        M=float(M),
        s0=s0,
        xi=float(xi),
        F=lambda s: np.asarray(s, dtype=float),
        dF=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        d2F=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        kappa=1.0,
        eta=eta,
        Gamma=1.0 / eta,
    )


def power_law_constants(n: int, p: float) -> PowerLawConstants:
    """Structural constants for the power flux F(s) = s**p on (0, 1].

    Valid for p in the open interval (1 - 1/sqrt(n), 1); the constants are

        kappa = sqrt(n) * (p - 1 + 1/sqrt(n)),
        eta   = p / (2 (1 - p)),
        Gamma = 2 (1 - p),
        xi    = 0,
        s0    = 2 ** (1 / (1 - p)).

    Dimensions above 4 are rejected: the lower bound on
    2 F' - sqrt(n) |F''| s (xi - G)/F' degenerates to -inf as s -> 0
    when sqrt(n) > 2, so no admissible constants exist.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"dimension n must be a positive integer, got {n!r}")
    if n > 4:
        raise DomainError(
            f"power family supports n <= 4 only (got n={n}): for sqrt(n) > 2 "
            "the sign condition on 2F' - sqrt(n)|F''| s (xi-G)/F' fails near s=0"
        )
    if p == 1.0:
        raise DomainError("p = 1 is the linear flux; use the identity family")
    lo = 1.0 - 1.0 / math.sqrt(n)
    if not (lo < p < 1.0):
        raise DomainError(
            f"power exponent must lie in ({lo:.6g}, 1), got p={p}"
        )
    kappa = math.sqrt(n) * (p - 1.0 + 1.0 / math.sqrt(n))
    eta = p / (2.0 * (1.0 - p))
    Gamma = 2.0 * (1.0 - p)
    s0 = 2.0 ** (1.0 / (1.0 - p))
    return PowerLawConstants(kappa=kappa, eta=eta, Gamma=Gamma, xi=0.0, s0=s0)


def make_power(n: int, p: float, M: float = 1.0) -> Nonlinearity:
    """Power flux F(s) = s**p with its closed-form constants attached.

    The declared eta is only a valid lower bound for xi - G on (0, M]
    when M <= 1; rescale the solution by its maximum first.
    """
    consts = power_law_constants(n, p)
    if M <= 0 or M > 1.0 + 1e-12:
        raise DomainError(
            f"power family expects the range rescaled into (0, 1], got M={M}"
        )

    def F(s):
        return np.asarray(s, dtype=float) ** p

    def dF(s):
        return p * np.asarray(s, dtype=float) ** (p - 1.0)

    def d2F(s):
        return p * (p - 1.0) * np.asarray(s, dtype=float) ** (p - 2.0)

    return Nonlinearity(
        family="power",
        M=float(M),
        s0=consts.s0,
        xi=consts.xi,
        F=F,
        dF=dF,
        d2F=d2F,
        p=float(p),
        kappa=consts.kappa,
        eta=consts.eta,
        Gamma=consts.Gamma,
    )


def make_custom(
    F: Callable,
    dF: Callable,
    d2F: Callable,
    M: float,
    s0: float,
    xi: float,
) -> Nonlinearity:
    """Wrap user-supplied flux callables; constants stay unset until measured."""
    if M <= 0 or s0 <= 0:
        raise DomainError("M and s0 must be positive")
    return Nonlinearity(
        family="custom", M=float(M), s0=float(s0), xi=float(xi),
        F=F, dF=dF, d2F=d2F,
    )


def from_expression(expr: str, M: float, s0: float, xi: float) -> Nonlinearity:
    """Build a custom nonlinearity from a sympy expression in the symbol s."""
    import sympy

    s = sympy.Symbol("s", positive=True)
    try:
        sym = sympy.sympify(expr, locals={"s": s})
    except (sympy.SympifyError, SyntaxError) as exc:
        raise DomainError(f"cannot parse flux expression {expr!r}: {exc}") from exc
    free = sym.free_symbols - {s}
    if free:
        raise DomainError(f"flux expression has unknown symbols: {sorted(map(str, free))}")
    fns = [
        sympy.lambdify(s, d, modules="numpy")
        for d in (sym, sympy.diff(sym, s), sympy.diff(sym, s, 2))
    ]

    def vectorized(fn):
        def call(x):
            return np.asarray(fn(np.asarray(x, dtype=float)), dtype=float)
        return call

    return make_custom(*(vectorized(f) for f in fns), M=M, s0=s0, xi=xi)


# ----------------------------------------------------------------------
# quadrature (custom family only; closed forms otherwise)


def _adaptive_simpson(f, a: float, b: float, rel_tol: float = QUAD_REL_TOL) -> float:
    """Adaptive Simpson integral of f over [a, b] to relative accuracy rel_tol."""
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    tol = rel_tol * max(abs(whole), 1e-300)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        if depth <= 0:
            raise NumericalError(
                f"adaptive Simpson failed to converge on [{a}, {b}]"
            )
        return recurse(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) + recurse(
            m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1
        )

    return recurse(a, fa, b, fb, m, fm, whole, tol, 60)


def _custom_G(nl: Nonlinearity, values: np.ndarray) -> np.ndarray:
    """G at each value via segment-chained adaptive Simpson from s0."""

    def integrand(h):
        return float(nl.dF(h)) / h

    flat = values.ravel()
    order = np.argsort(flat)
    out = np.empty_like(flat)
    # integrate from s0 outward through the sorted values so each segment
    # is short; accumulate to keep total work linear in the sample count
    sorted_vals = flat[order]
    acc = np.empty_like(sorted_vals)
    prev, total = nl.s0, 0.0
    # values below s0 accumulate negative area walking downward
    below = sorted_vals[sorted_vals <= nl.s0][::-1]
    above = sorted_vals[sorted_vals > nl.s0]
    acc_below = []
    for v in below:
        total += _adaptive_simpson(integrand, prev, v)
        acc_below.append(total)
        prev = v
    prev, total = nl.s0, 0.0
    acc_above = []
    for v in above:
        total += _adaptive_simpson(integrand, prev, v)
        acc_above.append(total)
        prev = v
    acc[: below.size] = acc_below[::-1]
    acc[below.size:] = acc_above
    out[order] = acc
    return out.reshape(values.shape)


# ----------------------------------------------------------------------
# evaluation


def _check_range(nl: Nonlinearity, s: np.ndarray) -> None:
    if np.any(s <= 0.0) or np.any(s > nl.M * (1.0 + 1e-12)):
        bad = s[(s <= 0.0) | (s > nl.M * (1.0 + 1e-12))]
        raise DomainError(
            f"value {bad.flat[0]:.6g} outside the admissible range (0, {nl.M}]"
        )


def eval_G(nl: Nonlinearity, s) -> np.ndarray | float:
    """G(s) = integral of F'(h)/h from s0 to s, for s in (0, M]."""
    arr = np.asarray(s, dtype=float)
    _check_range(nl, arr)
    if nl.family == "identity":
        out = np.log(arr / nl.s0)
    elif nl.family == "power":
        p = nl.p
        out = p / (p - 1.0) * (arr ** (p - 1.0) - nl.s0 ** (p - 1.0))
    else:
        out = _custom_G(nl, arr)
    return out if isinstance(s, np.ndarray) else float(out)


def eval_g(nl: Nonlinearity, r) -> np.ndarray | float:
    """g(r) = G(exp(r)); defined while exp(r) stays in (0, M]."""
    return eval_G(nl, np.exp(np.asarray(r, dtype=float))) if isinstance(r, np.ndarray) \
        else float(eval_G(nl, math.exp(r)))


def eval_g_derivs(nl: Nonlinearity, r):
    """(g'(r), g''(r)) = (F'(exp r), exp(r) * F''(exp r))."""
    s = np.exp(np.asarray(r, dtype=float))
    _check_range(nl, s)
    gp = nl.dF(s)
    gpp = s * nl.d2F(s)
    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return float(gp), float(gpp)
    return gp, gpp


def eval_lambda(nl: Nonlinearity, r, n: int):
    """Drift coefficient g'/(xi-g) - 1 + sqrt(n)|g''|/(2 g').

    The dimension enters through sqrt(n); with the structural hypotheses
    in force the value is bounded by 2*Gamma + 1 in absolute value.
    """
    g = np.asarray(eval_g(nl, r), dtype=float)
    gp, gpp = eval_g_derivs(nl, np.asarray(r, dtype=float))
    gp = np.asarray(gp, dtype=float)
    gpp = np.asarray(gpp, dtype=float)
    denom = nl.xi - g
    if np.any(denom <= 0.0):
        raise DomainError("xi - g must stay positive on the evaluation range")
    if np.any(gp <= 0.0):
        raise DomainError("g' = F'(exp r) must be positive")
    lam = gp / denom - 1.0 + math.sqrt(n) * np.abs(gpp) / (2.0 * gp)
    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return float(lam)
    return lam


def sample_grid(nl: Nonlinearity, samples: int) -> np.ndarray:
    """Geometric grid on (0, M] used by the hypothesis audit."""
    if samples < 2:
        raise DomainError("need at least 2 samples")
    grid = np.geomspace(nl.M * SAMPLE_FLOOR_FACTOR, nl.M, samples)
    extra = [nl.M, min(nl.s0, nl.M)]
    return np.unique(np.concatenate([grid, np.asarray(extra)]))


def check_hypotheses(nl: Nonlinearity, n: int, samples: int = 10_000) -> HypothesisReport:
    """Audit the structural hypotheses by sampling (0, M].

    Measures the worst value of each of the four conditions:
    positivity margin kappa of 1 - sqrt(n)|F''| s / F', lower bound eta
    of xi - G, upper bound Gamma of F'/(xi - G), and the sign condition
    Xi = 2F' - sqrt(n)|F''| s (xi - G)/F'.  A non-positive F' at any
    sample marks the report unsatisfied without raising.
    """
    s = sample_grid(nl, samples)
    Fp = np.asarray(nl.dF(s), dtype=float)
    Fpp = np.asarray(nl.d2F(s), dtype=float)
    if np.any(~np.isfinite(Fp)) or np.any(Fp <= 0.0):
        return HypothesisReport(
            kappa_min=-math.inf, eta_min=-math.inf, Gamma_max=math.inf,
            Xi_min=-math.inf, fprime_positive=False, all_satisfied=False,
            n_samples=s.size,
        )
    G = np.asarray(eval_G(nl, s), dtype=float)
    xiG = nl.xi - G
    sqn = math.sqrt(n)
    kappa_vals = 1.0 - sqn * np.abs(Fpp) * s / Fp
    eta_min = float(xiG.min())
    Gamma_max = float((Fp / xiG).max()) if eta_min > 0.0 else math.inf
    Xi_vals = 2.0 * Fp - sqn * np.abs(Fpp) * s * xiG / Fp
    kappa_min = float(kappa_vals.min())
    Xi_min = float(Xi_vals.min())
    xi_slack = 1e-12 * max(1.0, float(np.abs(Xi_vals).max()))
    all_ok = (
        kappa_min > 0.0
        and eta_min > 0.0
        and math.isfinite(Gamma_max)
        and Xi_min >= -xi_slack
    )
    return HypothesisReport(
        kappa_min=kappa_min, eta_min=eta_min, Gamma_max=Gamma_max,
        Xi_min=Xi_min, fprime_positive=True, all_satisfied=all_ok,
        n_samples=s.size,
    )


def require_hypotheses(nl: Nonlinearity, n: int, samples: int = 10_000) -> HypothesisReport:
    """check_hypotheses, raising HypothesisError when any condition fails."""
    report = check_hypotheses(nl, n, samples)
    if not report.all_satisfied:
        raise HypothesisError(
            "structural hypotheses fail on (0, M]: "
            f"kappa_min={report.kappa_min:.6g}, eta_min={report.eta_min:.6g}, "
            f"Gamma_max={report.Gamma_max:.6g}, Xi_min={report.Xi_min:.6g}"
        )
    return report


def measured_constants(nl: Nonlinearity, n: int, samples: int = 10_000) -> Nonlinearity:
    """Return a copy with kappa/eta/Gamma filled from the sampled audit."""
    if nl.kappa is not None and nl.eta is not None and nl.Gamma is not None:
        return nl
    report = require_hypotheses(nl, n, samples)
    from dataclasses import replace

    return replace(
        nl, kappa=report.kappa_min, eta=report.eta_min, Gamma=report.Gamma_max
    )
