"""Linear operators on meromorphic functions.

An operator is a finite tree built from the identity, iterated
derivatives, shifts z -> z + c, q-scalings z -> qz and coefficient-
weighted sums (coefficients are declared-small handles or constants).
Linearity holds by construction: the argument is never multiplied with
itself anywhere in the tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamplesError, InvalidCombinationError
from .functions import (
    FunctionHandle,
    combine,
    compose_affine,
    make_constant,
    poly_roots_with_mult,
)
from .quadrature import cauchy_derivative
from .regions import Region

__all__ = [
    "OperatorExpr",
    "Identity",
    "Derivative",
    "Shift",
    "QScale",
    "WeightedSum",
    "identity",
    "derivative",
    "shift",
    "q_scale",
    "weighted_sum",
    "compose",
    "forward_difference",
    "apply_operator",
    "derivative_order",
    "has_shift_or_scale",
    "SampleSpec",
    "ResidualReport",
    "sample_points",
    "kernel_check",
    "KernelBasis",
    "linearity_probe",
    "logderiv_proximity",
    "mcmillan_gammas",
    "mcmillan_residual",
]


class OperatorExpr:
    """Base class for operator syntax-tree nodes."""

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(OperatorExpr):
    def describe(self):
        return "id"


@dataclass(frozen=True)
class Derivative(OperatorExpr):
    inner: OperatorExpr
    order: int = 1

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("derivative order must be >= 1")

    def describe(self):
        return f"D^{self.order}({self.inner.describe()})"


@dataclass(frozen=True)
class Shift(OperatorExpr):
    inner: OperatorExpr
    c: complex

    def describe(self):
        return f"shift[{self.c}]({self.inner.describe()})"


@dataclass(frozen=True)
class QScale(OperatorExpr):
    inner: OperatorExpr
    q: complex

    def __post_init__(self):
        if self.q == 0:
            raise ValueError("q-scaling requires q != 0")

    def describe(self):
        return f"qscale[{self.q}]({self.inner.describe()})"


@dataclass(frozen=True)
class WeightedSum(OperatorExpr):
    terms: tuple  # of (FunctionHandle coefficient, OperatorExpr)

    def __post_init__(self):
        for coeff, node in self.terms:
            if not isinstance(coeff, FunctionHandle):
                raise TypeError("coefficients must be FunctionHandles")
            if not coeff.is_declared_small:
                raise InvalidCombinationError(
                    "weighted-sum coefficients must be declared small"
                )
            if not isinstance(node, OperatorExpr):
                raise TypeError("sum terms must wrap OperatorExpr nodes")

    def describe(self):
        return " + ".join(
            f"{c.label()}*{n.describe()}" for c, n in self.terms
        )


# -- construction helpers ---------------------------------------------


def identity() -> OperatorExpr:
    return Identity()


def derivative(order: int = 1, inner: OperatorExpr | None = None) -> OperatorExpr:
    return Derivative(inner or Identity(), order)


def shift(c, inner: OperatorExpr | None = None) -> OperatorExpr:
    return Shift(inner or Identity(), complex(c))


def q_scale(q, inner: OperatorExpr | None = None) -> OperatorExpr:
    return QScale(inner or Identity(), complex(q))


def weighted_sum(terms) -> OperatorExpr:
    norm = []
    for coeff, node in terms:
        if not isinstance(coeff, FunctionHandle):
            coeff = make_constant(coeff)
        norm.append((coeff, node))
    return WeightedSum(tuple(norm))


def compose(outer: OperatorExpr, inner: OperatorExpr) -> OperatorExpr:
    """Structural composition: every identity leaf of outer becomes inner."""
    if isinstance(outer, Identity):
        return inner
    if isinstance(outer, Derivative):
        return Derivative(compose(outer.inner, inner), outer.order)
    if isinstance(outer, Shift):
        return Shift(compose(outer.inner, inner), outer.c)
    if isinstance(outer, QScale):
        return QScale(compose(outer.inner, inner), outer.q)
    return WeightedSum(
        tuple((c, compose(node, inner)) for c, node in outer.terms)
    )


def forward_difference(step=1.0, power: int = 1) -> OperatorExpr:
    """The difference operator (Delta_c)^power with Delta_c f = f(z+c) - f(z)."""
    delta = weighted_sum([(1.0, shift(step)), (-1.0, identity())])
    out = delta
    for _ in range(power - 1):
        out = compose(delta, out)
    return out


def derivative_order(expr: OperatorExpr) -> int:
    """Highest total derivative order along any path of the tree."""
    if isinstance(expr, Identity):
        return 0
    if isinstance(expr, Derivative):
        return expr.order + derivative_order(expr.inner)
    if isinstance(expr, (Shift, QScale)):
        return derivative_order(expr.inner)
    return max((derivative_order(n) for _, n in expr.terms), default=0)


def has_shift_or_scale(expr: OperatorExpr) -> bool:
    if isinstance(expr, Identity):
        return False
    if isinstance(expr, Derivative):
        return has_shift_or_scale(expr.inner)
    if isinstance(expr, (Shift, QScale)):
        return True
    return any(has_shift_or_scale(n) for _, n in expr.terms)


# -- application -------------------------------------------------------


def _numeric_derivative(base: FunctionHandle, rho_cap: float = 0.1) -> FunctionHandle:
    """Fallback derivative by Cauchy-integral differentiation.

    The contour radius at each point is min(rho_cap, half the distance to
    the nearest known pole).
    """

    def ev(zs):
        lo, hi = zs.real.min(), zs.real.max()
        lo_i, hi_i = zs.imag.min(), zs.imag.max()
        center = complex(0.5 * (lo + hi), 0.5 * (lo_i + hi_i))
        radius = max(1.0, float(np.max(np.abs(zs - center)))) + 2 * rho_cap
        poles = base.pole_candidates(Region.disc(center, radius))
        rho = np.full(zs.shape, rho_cap)
        if poles:
            dist = np.min(
                np.abs(zs[:, None] - np.asarray(poles)[None, :]), axis=1
            )
            rho = np.minimum(rho, 0.5 * dist)
        return cauchy_derivative(base._eval_fn, zs, 1, rho)

    return FunctionHandle(
        "field-combination",
        {"op": "numeric-derivative", "left": base, "right": None},
        ev,
        poles_fn=base.pole_candidates,
        growth=base.growth,
        label=f"D[{base.label()}] (contour)",
    )


def _differentiate(handle: FunctionHandle, order: int, allow_fallback: bool):
    out = handle
    for _ in range(order):
        if out.has_derivative_rule():
            out = out.derivative()
        elif allow_fallback:
            out = _numeric_derivative(out)
        else:
            out = out.derivative()  # raises UnsupportedDerivativeError
    return out


def apply_operator(
    expr: OperatorExpr, f: FunctionHandle, allow_fallback: bool = True
) -> FunctionHandle:
    """Evaluate the operator tree on a handle, returning L(f) as a handle."""
    if isinstance(expr, Identity):
        return f
    if isinstance(expr, Derivative):
        inner = apply_operator(expr.inner, f, allow_fallback)
        return _differentiate(inner, expr.order, allow_fallback)
    if isinstance(expr, Shift):
        inner = apply_operator(expr.inner, f, allow_fallback)
        return compose_affine(inner, 1.0, expr.c)
    if isinstance(expr, QScale):
        inner = apply_operator(expr.inner, f, allow_fallback)
        return compose_affine(inner, expr.q, 0.0)
    total = None
    for coeff, node in expr.terms:
        piece = apply_operator(node, f, allow_fallback)
        piece = combine("mul", coeff, piece)
        total = piece if total is None else combine("add", total, piece)
    return total if total is not None else make_constant(0.0)


# -- probes ------------------------------------------------------------


@dataclass(frozen=True)
class SampleSpec:
    """Probe points on two concentric circles (64 points by default)."""

    radii: tuple = (1.0, 3.0)
    per_circle: int = 32
    pole_guard: float = 0.05


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    mean_residual: float
    n_samples: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def sample_points(spec: SampleSpec) -> np.ndarray:
    pts = []
    for r in spec.radii:
        theta = (np.arange(spec.per_circle) + 0.37) * (
            2 * math.pi / spec.per_circle
        )
        pts.append(r * np.exp(1j * theta))
    return np.concatenate(pts)


def _filter_near_poles(pts, handles, guard):
    keep = np.ones(len(pts), dtype=bool)
    span = float(np.max(np.abs(pts))) + 1.0
    for h in handles:
        cands = h.pole_candidates(Region.disc(0j, span))
        if cands:
            dist = np.min(np.abs(pts[:, None] - np.asarray(cands)[None, :]), axis=1)
            keep &= dist > guard
    return pts[keep]


def kernel_check(
    expr: OperatorExpr,
    a: FunctionHandle,
    spec: SampleSpec = SampleSpec(),
    tol: float = 1e-8,
) -> ResidualReport:
    """Max/mean |L(a)| over the probe set; membership iff max < tol."""
    la = apply_operator(expr, a)
    pts = _filter_near_poles(sample_points(spec), [a, la], spec.pole_guard)
    if len(pts) == 0:
        raise InsufficientSamplesError("every probe point sits near a pole")
    vals = np.abs(la.eval(pts))
    vals = vals[np.isfinite(vals)]
    if len(vals) == 0:
        raise InsufficientSamplesError("operator value nonfinite on all probes")
    return ResidualReport(float(vals.max()), float(vals.mean()), len(vals), tol)


@dataclass
class KernelBasis:
    """Handles asserted to satisfy L(a) = 0, with their residual reports."""

    operator: OperatorExpr
    elements: list
    reports: list

    @staticmethod
    def build(expr, handles, spec: SampleSpec = SampleSpec(), tol: float = 1e-8):
        reports = [kernel_check(expr, h, spec, tol) for h in handles]
        bad = [i for i, rep in enumerate(reports) if not rep.passed]
        if bad:
            raise InvalidCombinationError(
                f"kernel residual above {tol:g} for elements {bad}"
            )
        return KernelBasis(expr, list(handles), reports)


def linearity_probe(
    expr: OperatorExpr,
    f: FunctionHandle,
    g: FunctionHandle,
    alpha,
    beta,
    spec: SampleSpec = SampleSpec(),
    tol: float = 1e-8,
) -> ResidualReport:
    """Residual of L(alpha f + beta g) - alpha L(f) - beta L(g) on probes."""
    alpha, beta = complex(alpha), complex(beta)
    lhs = apply_operator(
        expr,
        combine(
            "add",
            combine("mul", make_constant(alpha), f),
            combine("mul", make_constant(beta), g),
        ),
    )
    lf = apply_operator(expr, f)
    lg = apply_operator(expr, g)
    pts = _filter_near_poles(sample_points(spec), [f, g, lf, lg], spec.pole_guard)
    if len(pts) == 0:
        raise InsufficientSamplesError("every probe point sits near a pole")
    resid = np.abs(lhs.eval(pts) - alpha * lf.eval(pts) - beta * lg.eval(pts))
    resid = resid[np.isfinite(resid)]
    if len(resid) == 0:
        raise InsufficientSamplesError("residual nonfinite on all probes")
    return ResidualReport(float(resid.max()), float(resid.mean()), len(resid), tol)


def logderiv_proximity(expr, f, r, quad, ctx=None):
    """m(r, L(f)/f): the smallness diagnostic for the general theorem.

    The radius is auto-perturbed away from divisor points of f and pole
    candidates of L(f) before integrating.
    """
    from .divisors import guarded_radius
    from .nevanlinna import proximity

    lf = apply_operator(expr, f)
    ratio = combine("div", lf, f)
    probe = Region.disc(0j, r * 1.1)
    moduli = []
    hint_points = []
    div_f = f.divisor(probe)
    if div_f is not None:
        moduli.extend(div_f.moduli())
        hint_points.extend(div_f.swap_kinds().points)
    cands = lf.pole_candidates(probe)
    if cands:
        moduli.extend(abs(c) for c in cands)
    r_used, _ = guarded_radius(r, moduli, quad.singularity_guard)
    return proximity(ratio, r_used, quad, hint_points)


# -- the McMillan cubic --------------------------------------------------


def mcmillan_gammas(alpha, beta):
    """Roots of 2 x^3 + (alpha - 2) x + beta, the fixed values forced on
    the second difference of any solution of the McMillan map."""
    roots, _ = poly_roots_with_mult([beta, alpha - 2.0, 0.0, 2.0])
    out = []
    for z0, m in roots:
        out.extend([z0] * m)
    return sorted(out, key=lambda w: (w.real, w.imag))


def mcmillan_residual(f: FunctionHandle, alpha, beta, pts) -> float:
    """Max residual of f(z+1) + f(z-1) - (alpha f + beta)/(1 - f^2) on pts.

    Vanishes identically exactly when f solves the McMillan map; poles
    of f and points with f = +-1 are skipped.
    """
    pts = np.asarray(pts, dtype=complex)
    fz = f.eval(pts)
    fp = f.eval(pts + 1.0)
    fm = f.eval(pts - 1.0)
    with np.errstate(all="ignore"):
        resid = np.abs(fp + fm - (alpha * fz + beta) / (1.0 - fz * fz))
    resid = resid[np.isfinite(resid)]
    if len(resid) == 0:
        raise InsufficientSamplesError("no usable McMillan probe points")
    return float(resid.max())
