"""Meromorphic function handles: evaluation, divisor oracles, derivatives.

A handle bundles an evaluable function with whatever closed-form
structure its family provides: a divisor oracle, a derivative rule, pole
candidates and declared growth metadata.  Field combinations that stay
inside a closed family (rational with rational, exponential sums with
exponential sums) are folded back into that family so the exact oracles
survive; anything else becomes a generic combination node and leaves
divisor counting to the subdivision engine.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from . import elliptic
from .errors import (
    InvalidCombinationError,
    InvalidCompositionError,
    InvalidFamilyError,
    UncertifiedResultError,
    UnsupportedDerivativeError,
)
from .quadrature import WindingFailure, circle_winding
from .regions import Divisor, DivisorPoint, Region, merge_signed_points

__all__ = [
    "FunctionHandle",
    "GrowthMeta",
    "make_constant",
    "make_rational",
    "make_exp_poly",
    "make_jacobi_sn",
    "combine",
    "compose_affine",
    "as_small",
    "ilc",
]


@dataclass(frozen=True)
class GrowthMeta:
    """Declared growth order and hyper-order (None when unknown)."""

    order: float | None = None
    hyper_order: float | None = None


class FunctionHandle:
    """An evaluable meromorphic function with optional closed-form structure.

    Immutable after construction; evaluation is pure and vectorized over
    numpy arrays of complex points.
    """

    __slots__ = (
        "family",
        "params",
        "growth",
        "asserted_small",
        "_eval_fn",
        "_derivative_fn",
        "_divisor_fn",
        "_poles_fn",
        "_label",
        "_zero",
        "_derivative_cache",
    )

    def __init__(
        self,
        family,
        params,
        eval_fn,
        derivative_fn=None,
        divisor_fn=None,
        poles_fn=None,
        growth=GrowthMeta(),
        label=None,
        zero=False,
        asserted_small=False,
    ):
        self.family = family
        self.params = params
        self.growth = growth
        self.asserted_small = asserted_small
        self._eval_fn = eval_fn
        self._derivative_fn = derivative_fn
        self._divisor_fn = divisor_fn
        self._poles_fn = poles_fn
        self._label = label or family
        self._zero = zero
        self._derivative_cache = None

    # -- evaluation ----------------------------------------------------

    def eval(self, z):
        zs = np.asarray(z, dtype=complex)
        scalar = zs.ndim == 0
        with np.errstate(all="ignore"):
            out = self._eval_fn(np.atleast_1d(zs))
        return complex(out[0]) if scalar else out

    __call__ = eval

    # -- structure -----------------------------------------------------

    def is_identically_zero(self) -> bool:
        return self._zero

    def has_derivative_rule(self) -> bool:
        return self._derivative_fn is not None

    def derivative(self) -> "FunctionHandle":
        if self._derivative_fn is None:
            raise UnsupportedDerivativeError(
                f"no closed-form derivative for family {self.family!r}"
            )
        if self._derivative_cache is None:
            self._derivative_cache = self._derivative_fn()
        return self._derivative_cache

    def divisor(self, region: Region):
        """Closed-form divisor in ``region``, or None when no oracle exists."""
        if self._divisor_fn is None:
            return None
        return self._divisor_fn(region)

    def pole_candidates(self, region: Region):
        """Superset of pole locations in ``region``; None when untraceable."""
        if self._divisor_fn is not None:
            div = self._divisor_fn(region)
            if div is not None:
                return [p.location for p in div.poles()]
        if self._poles_fn is None:
            return None
        return self._poles_fn(region)

    @property
    def is_declared_small(self) -> bool:
        return self.family in ("constant", "rational") or self.asserted_small

    def label(self) -> str:
        return self._label

    def __repr__(self):
        return f"<FunctionHandle {self._label}>"


def as_small(handle: FunctionHandle) -> FunctionHandle:
    """Record the user's assertion that ``handle`` is small (not verified)."""
    clone = FunctionHandle(
        handle.family,
        handle.params,
        handle._eval_fn,
        handle._derivative_fn,
        handle._divisor_fn,
        handle._poles_fn,
        handle.growth,
        handle._label,
        handle._zero,
        asserted_small=True,
    )
    return clone


# ---------------------------------------------------------------------
# constant family
# ---------------------------------------------------------------------


def make_constant(value) -> FunctionHandle:
    c = complex(value)

    def ev(zs):
        return np.full(zs.shape, c, dtype=complex)

    def divisor(region):
        return Divisor([], region, True)

    return FunctionHandle(
        "constant",
        {"value": c},
        ev,
        derivative_fn=lambda: make_constant(0.0),
        divisor_fn=divisor if c != 0 else None,
        poles_fn=lambda region: [],
        growth=GrowthMeta(0.0, 0.0),
        label=f"const({_fmt_c(c)})",
        zero=(c == 0),
    )


def _fmt_c(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:g}"
    return f"{c.real:g}{c.imag:+g}i"


# ---------------------------------------------------------------------
# rational family
# ---------------------------------------------------------------------


def _trim(coeffs) -> np.ndarray:
    arr = np.asarray(list(coeffs), dtype=complex)
    nz = np.nonzero(arr)[0]
    if len(nz) == 0:
        return np.zeros(1, dtype=complex)
    return arr[: nz[-1] + 1]


def poly_roots_with_mult(coeffs, cluster_rel=1e-6):
    """Roots of an ascending-coefficient polynomial, clustered by multiplicity.

    Returns (list of (root, mult), certified).  Certification checks the
    derivative ladder at the polished root; unresolvable clusters clear
    the flag instead of guessing.
    """
    c = _trim(coeffs)
    deg = len(c) - 1
    if deg == 0:
        return [], True
    raw = np.roots(c[::-1])
    scale = max(1.0, float(np.max(np.abs(raw))))
    eps = cluster_rel * scale
    raw = sorted(raw, key=lambda w: (w.real, w.imag))
    clusters: list[list[complex]] = []
    for root in raw:
        for cl in clusters:
            if abs(cl[0] - root) < eps:
                cl.append(root)
                break
        else:
            clusters.append([root])

    # derivative ladder for certification
    ders = [c]
    while len(ders[-1]) > 1:
        ders.append(P.polyder(ders[-1]))
    coeff_scale = float(np.max(np.abs(c)))

    out = []
    certified = True
    for cl in clusters:
        m = len(cl)
        z0 = complex(np.mean(cl))
        # Newton on the (m-1)th derivative, where the root is simple
        pm1, pm = ders[m - 1], ders[m]
        for _ in range(60):
            dv = P.polyval(z0, pm)
            if dv == 0:
                break
            step = P.polyval(z0, pm1) / dv
            z0 -= step
            if abs(step) < 1e-15 * max(1.0, abs(z0)):
                break
        local = coeff_scale * max(1.0, abs(z0)) ** deg
        ok = all(
            abs(P.polyval(z0, ders[j])) < 1e-8 * local for j in range(m)
        ) and abs(P.polyval(z0, ders[m])) > 1e-10 * local
        if not ok:
            certified = False
        out.append((z0, m))
    return out, certified


def make_rational(numerator_coeffs, denominator_coeffs) -> FunctionHandle:
    """Handle for p(z)/q(z) with an exact divisor oracle and derivative rule."""
    num = _trim(numerator_coeffs)
    den = _trim(denominator_coeffs)
    if len(den) == 1 and den[0] == 0:
        raise InvalidFamilyError("denominator is identically zero")
    if len(num) == 1 and num[0] == 0:
        return make_constant(0.0)
    if len(num) == 1 and len(den) == 1:
        return make_constant(num[0] / den[0])

    zeros, cert_n = poly_roots_with_mult(num)
    poles, cert_d = poly_roots_with_mult(den)
    certified = cert_n and cert_d
    # cancel common roots
    zs, ps = list(zeros), list(poles)
    reduced_z, reduced_p = [], []
    for z0, mz in zs:
        for i, (p0, mp) in enumerate(ps):
            if abs(z0 - p0) < 1e-8 * max(1.0, abs(z0)):
                common = min(mz, mp)
                mz -= common
                ps[i] = (p0, mp - common)
                break
        if mz > 0:
            reduced_z.append((z0, mz))
    reduced_p = [(p0, mp) for (p0, mp) in ps if mp > 0]

    def ev(zs_arr):
        return P.polyval(zs_arr, num) / P.polyval(zs_arr, den)

    def divisor(region):
        pts = [
            DivisorPoint(z0, m, "zero")
            for z0, m in reduced_z
            if region.contains(z0)
        ] + [
            DivisorPoint(p0, m, "pole")
            for p0, m in reduced_p
            if region.contains(p0)
        ]
        return Divisor(pts, region, certified)

    def derivative():
        dnum = P.polysub(
            P.polymul(P.polyder(num), den), P.polymul(num, P.polyder(den))
        )
        return make_rational(dnum, P.polymul(den, den))

    deg = max(len(num), len(den)) - 1
    return FunctionHandle(
        "rational",
        {"numerator": tuple(num), "denominator": tuple(den)},
        ev,
        derivative_fn=derivative,
        divisor_fn=divisor,
        growth=GrowthMeta(0.0, 0.0),
        label=f"rational({len(num) - 1}/{len(den) - 1})",
    )


# ---------------------------------------------------------------------
# exponential-sum family
# ---------------------------------------------------------------------


def _canon_terms(terms):
    acc: list[list[complex]] = []
    for c, lam in terms:
        c, lam = complex(c), complex(lam)
        for slot in acc:
            if slot[1] == lam:
                slot[0] += c
                break
        else:
            acc.append([c, lam])
    acc = [(c, lam) for c, lam in acc if c != 0]
    acc.sort(key=lambda t: (t[1].real, t[1].imag))
    return tuple(acc)


def make_exp_poly(terms) -> FunctionHandle:
    """Handle for sum_k c_k exp(lambda_k z).

    Zero oracle is available for one- and two-term sums (empty set and an
    explicit line of simple zeros, respectively); the function is entire
    so the pole side is always empty.
    """
    tt = _canon_terms(terms)
    if not tt:
        return make_constant(0.0)
    if len(tt) == 1 and tt[0][1] == 0:
        return make_constant(tt[0][0])
    cs = np.array([t[0] for t in tt])
    lams = np.array([t[1] for t in tt])

    def ev(zs_arr):
        return np.einsum("i,ij->j", cs, np.exp(np.outer(lams, zs_arr)))

    divisor_fn = None
    if len(tt) == 1:

        def divisor_fn(region):
            return Divisor([], region, True)

    elif len(tt) == 2:
        (c1, l1), (c2, l2) = tt

        def divisor_fn(region):
            d = 2j * math.pi / (l1 - l2)
            z0 = cmath.log(-c2 / c1) / (l1 - l2)
            center, radius = region.bounding_disc()
            t_center = ((center - z0) / d).real
            half = radius / abs(d) + 2
            pts = []
            for n in range(math.floor(t_center - half), math.ceil(t_center + half) + 1):
                zn = z0 + n * d
                if region.contains(zn):
                    pts.append(DivisorPoint(zn, 1, "zero"))
            return Divisor(pts, region, True)

    def derivative():
        dt = [(c * lam, lam) for c, lam in tt if lam != 0]
        return make_exp_poly(dt) if dt else make_constant(0.0)

    return FunctionHandle(
        "exp-poly",
        {"terms": tt},
        ev,
        derivative_fn=derivative,
        divisor_fn=divisor_fn,
        poles_fn=lambda region: [],
        growth=GrowthMeta(1.0, 0.0),
        label=f"exp-poly({len(tt)} terms)",
    )


# ---------------------------------------------------------------------
# Jacobi elliptic family
# ---------------------------------------------------------------------

_JACOBI_ZERO_OFFSETS = {"sn": (0.0, 0.0), "cn": (1.0, 0.0), "dn": (1.0, 1.0)}


def _jacobi_handle(k: float, part: str) -> FunctionHandle:
    big_k, big_kp = elliptic.quarter_periods(k)

    def ev(zs_arr):
        return elliptic.jacobi_values(zs_arr, k, part)

    def divisor(region):
        center, radius = region.bounding_disc()
        zx, zy = _JACOBI_ZERO_OFFSETS[part]
        zeros = elliptic.lattice_in_disc(
            zx * big_k, zy * big_kp, 2 * big_k, 2 * big_kp, radius, center
        )
        poles = elliptic.lattice_in_disc(
            0.0, big_kp, 2 * big_k, 2 * big_kp, radius, center
        )
        pts = [
            DivisorPoint(z0, 1, "zero") for z0 in zeros if region.contains(z0)
        ] + [DivisorPoint(p0, 1, "pole") for p0 in poles if region.contains(p0)]
        return Divisor(pts, region, True)

    def derivative():
        sn = _jacobi_handle(k, "sn")
        cn = _jacobi_handle(k, "cn")
        dn = _jacobi_handle(k, "dn")
        if part == "sn":
            return combine("mul", cn, dn)
        if part == "cn":
            return combine("mul", make_constant(-1.0), combine("mul", sn, dn))
        return combine("mul", make_constant(-(k * k)), combine("mul", sn, cn))

    return FunctionHandle(
        "jacobi-sn",
        {"k": k, "part": part},
        ev,
        derivative_fn=derivative,
        divisor_fn=divisor,
        growth=GrowthMeta(2.0, 0.0),
        label=f"{part}(k={k:g})",
    )


def make_jacobi_sn(k: float) -> FunctionHandle:
    """Jacobi sn(z, k): doubly periodic with periods 4K and 2iK'."""
    if not (isinstance(k, (int, float)) and 0.0 < float(k) < 1.0):
        raise InvalidFamilyError(f"elliptic modulus must lie in (0,1), got {k!r}")
    return _jacobi_handle(float(k), "sn")


# ---------------------------------------------------------------------
# affine composition
# ---------------------------------------------------------------------


def compose_affine(f: FunctionHandle, a, b) -> FunctionHandle:
    """The handle z -> f(a z + b); divisors pull back through the inverse map."""
    a, b = complex(a), complex(b)
    if a == 0:
        raise InvalidCompositionError("a = 0 gives a constant; use make_constant")
    if f.family == "constant":
        return f
    if f.family == "rational":
        sub = np.array([b, a], dtype=complex)
        num = _poly_compose(np.asarray(f.params["numerator"]), sub)
        den = _poly_compose(np.asarray(f.params["denominator"]), sub)
        return make_rational(num, den)
    if f.family == "exp-poly":
        terms = [(c * cmath.exp(lam * b), lam * a) for c, lam in f.params["terms"]]
        return make_exp_poly(terms)
    if f.family == "affine-composition":
        a0, b0 = f.params["a"], f.params["b"]
        return compose_affine(f.params["base"], a0 * a, a0 * b + b0)

    base = f

    def ev(zs_arr):
        return base._eval_fn(a * zs_arr + b)

    def image_region(region):
        center, radius = region.bounding_disc()
        return Region.disc(a * center + b, abs(a) * radius)

    def divisor(region):
        inner = base.divisor(image_region(region))
        if inner is None:
            return None
        pts = [
            DivisorPoint((p.location - b) / a, p.multiplicity, p.kind)
            for p in inner.points
            if region.contains((p.location - b) / a)
        ]
        return Divisor(pts, region, inner.certified)

    def poles(region):
        inner = base.pole_candidates(image_region(region))
        if inner is None:
            return None
        return [(p - b) / a for p in inner if region.contains((p - b) / a)]

    def derivative():
        return combine(
            "mul", make_constant(a), compose_affine(base.derivative(), a, b)
        )

    return FunctionHandle(
        "affine-composition",
        {"base": base, "a": a, "b": b},
        ev,
        derivative_fn=derivative if base.has_derivative_rule() else None,
        divisor_fn=divisor if base._divisor_fn is not None else None,
        poles_fn=poles,
        growth=base.growth,
        label=f"{base.label()}@({_fmt_c(a)}z{'+' if b.real >= 0 else ''}{_fmt_c(b)})",
    )


def _poly_compose(coeffs, inner):
    out = np.zeros(1, dtype=complex)
    for c in coeffs[::-1]:
        out = P.polyadd(P.polymul(out, inner), [c])
    return out


# ---------------------------------------------------------------------
# field combinations
# ---------------------------------------------------------------------

_OPS = {"add", "sub", "mul", "div"}


def _as_rational_parts(h):
    if h.family == "rational":
        return np.asarray(h.params["numerator"]), np.asarray(h.params["denominator"])
    if h.family == "constant":
        return np.array([h.params["value"]]), np.array([1.0 + 0j])
    return None


def _as_exp_terms(h):
    if h.family == "exp-poly":
        return h.params["terms"]
    if h.family == "constant":
        return ((h.params["value"], 0j),)
    return None


def combine(op: str, f: FunctionHandle, g: FunctionHandle) -> FunctionHandle:
    """Pointwise field combination, folding back into closed families.

    Rational (and constant) operands stay rational under all four
    operations; exponential sums are closed under add/sub/mul and under
    division by a single term.  Everything else becomes a generic node
    whose divisor oracle survives only for products and quotients of
    divisor-certified operands.
    """
    if op not in _OPS:
        raise InvalidCombinationError(f"unknown combination op {op!r}")
    if op == "div" and g.is_identically_zero():
        raise InvalidCombinationError("division by the identically-zero function")

    rf, rg = _as_rational_parts(f), _as_rational_parts(g)
    if rf is not None and rg is not None:
        (n1, d1), (n2, d2) = rf, rg
        if op == "add":
            return make_rational(
                P.polyadd(P.polymul(n1, d2), P.polymul(n2, d1)), P.polymul(d1, d2)
            )
        if op == "sub":
            return make_rational(
                P.polysub(P.polymul(n1, d2), P.polymul(n2, d1)), P.polymul(d1, d2)
            )
        if op == "mul":
            return make_rational(P.polymul(n1, n2), P.polymul(d1, d2))
        return make_rational(P.polymul(n1, d2), P.polymul(d1, n2))

    ef, eg = _as_exp_terms(f), _as_exp_terms(g)
    if ef is not None and eg is not None:
        if op in ("add", "sub"):
            sign = 1 if op == "add" else -1
            return make_exp_poly(list(ef) + [(sign * c, lam) for c, lam in eg])
        if op == "mul":
            return make_exp_poly(
                [(c1 * c2, l1 + l2) for c1, l1 in ef for c2, l2 in eg]
            )
        if len(eg) == 1:
            c0, l0 = eg[0]
            return make_exp_poly([(c / c0, lam - l0) for c, lam in ef])

    return _generic_combination(op, f, g)


def _generic_combination(op, f, g):
    def ev(zs_arr):
        a = f._eval_fn(zs_arr)
        b = g._eval_fn(zs_arr)
        if op == "add":
            return a + b
        if op == "sub":
            return a - b
        if op == "mul":
            return a * b
        return a / b

    def derivative():
        df, dg = f.derivative(), g.derivative()
        if op in ("add", "sub"):
            return combine(op, df, dg)
        if op == "mul":
            return combine("add", combine("mul", df, g), combine("mul", f, dg))
        num = combine("sub", combine("mul", df, g), combine("mul", f, dg))
        return combine("div", num, combine("mul", g, g))

    divisor_fn = None
    if op in ("mul", "div"):

        def divisor_fn(region):
            dl = f.divisor(region)
            dr = g.divisor(region)
            if dl is None or dr is None:
                return None
            wr = 1 if op == "mul" else -1
            return merge_signed_points(
                [(1, dl.points), (wr, dr.points)],
                region,
                dl.certified and dr.certified,
            )

    def poles(region):
        pl = f.pole_candidates(region)
        pr = g.pole_candidates(region)
        if pl is None or pr is None:
            return None
        cands = list(pl) + list(pr)
        if op == "div":
            dg_ = g.divisor(region)
            if dg_ is None:
                return None
            cands += [p.location for p in dg_.zeros()]
        # dedupe, deterministic order
        out: list[complex] = []
        for c in sorted(cands, key=lambda w: (w.real, w.imag)):
            if not out or abs(out[-1] - c) > 1e-12:
                out.append(c)
        return out

    has_rule = f.has_derivative_rule() and g.has_derivative_rule()
    orders = [x for x in (f.growth.order, g.growth.order) if x is not None]
    hypers = [
        x for x in (f.growth.hyper_order, g.growth.hyper_order) if x is not None
    ]
    growth = GrowthMeta(
        max(orders) if len(orders) == 2 else None,
        max(hypers) if len(hypers) == 2 else None,
    )
    return FunctionHandle(
        "field-combination",
        {"op": op, "left": f, "right": g},
        ev,
        derivative_fn=derivative if has_rule else None,
        divisor_fn=divisor_fn,
        poles_fn=poles,
        growth=growth,
        label=f"({f.label()} {op} {g.label()})",
    )


# ---------------------------------------------------------------------
# initial Laurent coefficient
# ---------------------------------------------------------------------


def ilc(f: FunctionHandle, a, loc_tol: float = 1e-9):
    """Initial Laurent coefficient and order of f at a.

    Returns (c, m) with f(z) = (z-a)^m (c + o(1)) near a.  The order
    comes from the divisor oracle when present, otherwise from certified
    small-circle winding numbers; the coefficient is a circle average of
    (z-a)^{-m} f(z), cross-checked at two radii.
    """
    if f.is_identically_zero():
        raise UncertifiedResultError("ilc of the zero function is undefined")
    a = complex(a)
    scale = max(1.0, abs(a))
    probe = Region.disc(a, 0.45)
    div = f.divisor(probe)

    if div is not None:
        m = 0
        nearest_other = math.inf
        for p in div.points:
            d = abs(p.location - a)
            if d < loc_tol:
                m = p.signed_order
            else:
                nearest_other = min(nearest_other, d)
        rho = min(0.05 * scale, 0.4 * nearest_other)
    else:
        rho = 0.05 * scale
        m = None
        while rho > 1e-7 * scale:
            try:
                w1, _ = circle_winding(f._eval_fn, a, rho)
                w2, _ = circle_winding(f._eval_fn, a, rho / 4.0)
            except WindingFailure:
                rho /= 4.0
                continue
            if w1 == w2:
                m = w1
                rho = rho / 4.0
                break
            rho /= 4.0
        if m is None:
            raise UncertifiedResultError(
                f"could not certify the local order of {f.label()} at {a}"
            )

    def coefficient(radius):
        n = 64
        theta = np.arange(n) * (2 * math.pi / n)
        z = a + radius * np.exp(1j * theta)
        with np.errstate(all="ignore"):
            vals = f._eval_fn(z) * (z - a) ** (-m)
        return complex(np.mean(vals))

    c1 = coefficient(rho)
    c2 = coefficient(rho / 2.0)
    if abs(c1 - c2) > 1e-7 * max(1.0, abs(c2)):
        c3 = coefficient(rho / 8.0)
        if abs(c2 - c3) > 1e-6 * max(1.0, abs(c3)):
            raise UncertifiedResultError(
                f"ilc coefficient did not stabilize for {f.label()} at {a}"
            )
        return c3, m
    return c2, m
