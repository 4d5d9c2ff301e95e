"""Certified zero/pole location in discs via the argument principle.

The engine first traces a superset of pole locations structurally
through the handle tree and pins each one down with small-circle winding
numbers.  With all poles catalogued, every rectangle's boundary winding
determines the number of not-yet-resolved zeros inside it exactly, so
cells with nothing left are discarded and cells with content are bisected
(along nudged lines that stay clear of known points) until each zero can
be polished and certified by a matching tiny-circle winding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryDegeneracyError, UncertifiedDivisorError
from .quadrature import WindingFailure, circle_winding, polyline_winding
from .regions import Divisor, DivisorPoint, Region

__all__ = [
    "EngineOptions",
    "SubdivisionCell",
    "count_in_disc",
    "joint_count",
    "guarded_radius",
    "counting_from_divisor",
    "counting_integral_form",
    "integrate_counting",
]


@dataclass(frozen=True)
class EngineOptions:
    force_subdivision: bool = False
    guard: float = 1e-4  # relative distance kept between |z|=r and divisor points
    loc_tol: float = 1e-8
    match_tol: float = 1e-6  # joint-count coincidence tolerance
    max_cells: int = 60_000
    max_depth: int = 60
    recursion_depth: int = 3  # structural recursion budget for div denominators


@dataclass
class SubdivisionCell:
    region: Region
    boundary_winding: int
    min_boundary_modulus: float
    status: str = "split"  # resolved | split | failed


@dataclass
class _Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def diam(self):
        return math.hypot(self.width, self.height)

    @property
    def center(self):
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def corners(self):
        return [
            complex(self.x0, self.y0),
            complex(self.x1, self.y0),
            complex(self.x1, self.y1),
            complex(self.x0, self.y1),
        ]

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return (
            self.x0 + margin < z.real < self.x1 - margin
            and self.y0 + margin < z.imag < self.y1 - margin
        )

    def region(self):
        return Region.rectangle(complex(self.x0, self.y0), complex(self.x1, self.y1))


# ----------------------------------------------------------------------
# radius guard
# ----------------------------------------------------------------------


def guarded_radius(r: float, moduli, guard_rel: float = 1e-4, max_nudges: int = 10):
    """First radius in the outward-nudge schedule r(1 + j/1000) that keeps
    all given moduli at relative distance >= guard_rel.  Returns (radius,
    nudge index)."""
    mods = np.asarray(sorted(moduli), dtype=float)
    for j in range(max_nudges + 1):
        rj = r * (1.0 + j * 1e-3)
        if len(mods) == 0 or np.min(np.abs(mods - rj)) >= guard_rel * rj:
            return rj, j
    raise BoundaryDegeneracyError(
        f"no admissible radius near {r} within the 1% perturbation budget"
    )


# ----------------------------------------------------------------------
# structural pole tracing
# ----------------------------------------------------------------------


def _trace_pole_candidates(h, region: Region, opts: EngineOptions, depth: int):
    direct = h.pole_candidates(region)
    if direct is not None:
        return direct
    if depth >= opts.recursion_depth:
        return None
    if h.family == "field-combination":
        op = h.params.get("op")
        left, right = h.params.get("left"), h.params.get("right")
        if op == "numeric-derivative":
            return _trace_pole_candidates(left, region, opts, depth + 1)
        if op not in ("add", "sub", "mul", "div") or right is None:
            return None
        a = _trace_pole_candidates(left, region, opts, depth + 1)
        b = _trace_pole_candidates(right, region, opts, depth + 1)
        if a is None or b is None:
            return None
        cands = list(a) + list(b)
        if op == "div":
            div_r = right.divisor(region)
            if div_r is not None and div_r.certified:
                cands += [p.location for p in div_r.zeros()]
            else:
                center, radius = region.bounding_disc()
                sub = _engine_divisor(right, center, radius, opts, depth + 1)
                cands += [p.location for p in sub.zeros()]
        out = []
        for c in sorted(cands, key=lambda w: (w.real, w.imag)):
            if not out or abs(out[-1] - c) > 1e-12:
                out.append(c)
        return [c for c in out if region.contains(c)]
    return None


# ----------------------------------------------------------------------
# local order assessment at a candidate point
# ----------------------------------------------------------------------


def _local_order(evaluate, p: complex, isolation: float, scale: float):
    """Net order of the function at p via two agreeing circle windings."""
    delta = min(0.05 * scale, 0.45 * isolation)
    for _ in range(7):
        if delta < 1e-7 * scale:
            break
        try:
            w1, _ = circle_winding(evaluate, p, delta)
            w2, _ = circle_winding(evaluate, p, delta / 8.0)
        except WindingFailure:
            delta /= 8.0
            continue
        if w1 == w2:
            return w1, delta
        delta /= 8.0
    raise UncertifiedDivisorError(
        f"could not certify local order at candidate {p}"
    )


# ----------------------------------------------------------------------
# zero polishing
# ----------------------------------------------------------------------


class _DerivChain:
    """Lazy k-th derivative evaluators with finite-difference fallback.

    A zero of multiplicity m is a simple zero of the (m-1)-th derivative,
    where plain Newton reaches machine precision; iterating directly on h
    would stall in the cancellation noise ball of radius ~sqrt(eps).
    """

    def __init__(self, h):
        self._handles = [h]

    def evaluator(self, k: int):
        while len(self._handles) <= k:
            top = self._handles[-1]
            if top is not None and top.has_derivative_rule():
                self._handles.append(top.derivative())
            else:
                self._handles.append(None)
        hk = self._handles[k]
        if hk is not None:
            return hk._eval_fn
        prev = self.evaluator(k - 1)

        def fd(zs):
            e = 1e-6 * np.maximum(1.0, np.abs(zs))
            return (
                prev(zs - 2 * e)
                - 8 * prev(zs - e)
                + 8 * prev(zs + e)
                - prev(zs + 2 * e)
            ) / (12 * e)

        return fd


def _polish_zero(chain: _DerivChain, z0: complex, mult: int, scale: float):
    """Newton on the (mult-1)-th derivative from z0; None if it escapes."""
    target = chain.evaluator(mult - 1)
    target_d = chain.evaluator(mult)
    z = z0
    step = math.inf
    for _ in range(60):
        v = complex(target(np.array([z]))[0])
        dv = complex(target_d(np.array([z]))[0])
        if not (np.isfinite(v) and np.isfinite(dv)) or dv == 0:
            return None
        step = v / dv
        z -= step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            return z
        if abs(z - z0) > 10 * scale:
            return None
    return z if abs(step) < 1e-9 * max(1.0, abs(z)) else None


# ----------------------------------------------------------------------
# the subdivision engine
# ----------------------------------------------------------------------


@dataclass
class _EngineState:
    evaluate: object
    chain: _DerivChain
    known: list  # [(location, signed_order)] catalogued candidates
    emitted: list = field(default_factory=list)  # [(location, mult)] zeros found
    cells: int = 0
    splits_checked: int = 0
    cell_log: list = field(default_factory=list)


def _signed_in(rect: _Rect, pts):
    return [(p, s) for p, s in pts if rect.contains(p)]


def _cell_winding(state: _EngineState, rect: _Rect):
    w, minmod = polyline_winding(state.evaluate, rect.corners())
    state.cells += 1
    return w, minmod


def _nudged_split(state, rect: _Rect, opts: EngineOptions, skip: int = 0):
    """Split the longest side along a line clear of all known points.

    ``skip`` advances through the deterministic offset schedule, so a
    retry after a failed boundary certification tries a fresh line.
    """
    horizontal = rect.width >= rect.height
    span = rect.width if horizontal else rect.height
    lo = rect.x0 if horizontal else rect.y0
    hi = rect.x1 if horizontal else rect.y1
    mid = 0.5 * (lo + hi)
    coords = [
        (p.real if horizontal else p.imag)
        for p, _ in state.known + [(q, m) for q, m in state.emitted]
        if rect.contains(p, margin=-1e-12)
    ]
    line_guard = max(1e-3 * span, 4 * opts.loc_tol)
    offsets = [0.0] + [
        s * j * 1e-2 * span for j in (1, 2, 3, 5, 8, 13, 21) for s in (1, -1)
    ]
    admissible = 0
    for off in offsets:
        cut = mid + off
        if cut - lo < 0.2 * span or hi - cut < 0.2 * span:
            continue
        if all(abs(c - cut) >= line_guard for c in coords):
            if admissible < skip:
                admissible += 1
                continue
            if horizontal:
                return (
                    _Rect(rect.x0, cut, rect.y0, rect.y1),
                    _Rect(cut, rect.x1, rect.y0, rect.y1),
                )
            return (
                _Rect(rect.x0, rect.x1, rect.y0, cut),
                _Rect(rect.x0, rect.x1, cut, rect.y1),
            )
    raise UncertifiedDivisorError("no admissible split line found")


def _unresolved(state, rect: _Rect, winding: int) -> int:
    """Zeros still unaccounted for inside the rectangle.

    winding counts zeros-minus-poles; catalogued poles add back, while
    catalogued zeros and already-emitted zeros subtract.
    """
    u = winding
    for p, signed in _signed_in(rect, state.known):
        if signed < 0:
            u += -signed
        else:
            u -= signed
    for q, mult in _signed_in(rect, state.emitted):
        u -= mult
    return u


def _try_resolve(state, rect: _Rect, u: int, opts, scale):
    """Attempt to polish one zero in the cell and certify it by winding."""
    for mult_try in dict.fromkeys([u, 1, 2]):
        if mult_try < 1:
            continue
        z = _polish_zero(state.chain, rect.center, mult_try, scale)
        if z is None or not rect.contains(z, margin=1e-3 * min(rect.width, rect.height)):
            continue
        others = [p for p, _ in state.known] + [q for q, _ in state.emitted]
        sep = min((abs(z - p) for p in others), default=math.inf)
        delta = min(0.2 * rect.diam, 0.45 * sep, 0.05 * scale)
        if delta < 4 * opts.loc_tol:
            delta = 4 * opts.loc_tol
        if sep < 2 * delta:
            continue
        try:
            w, _ = circle_winding(state.evaluate, z, delta)
        except WindingFailure:
            continue
        if 1 <= w <= u:
            state.emitted.append((z, w))
            return w
    return 0


def _subdivide(state: _EngineState, root: _Rect, opts: EngineOptions, scale: float):
    stack = [(root, 0)]
    while stack:
        rect, depth = stack.pop()
        if state.cells > opts.max_cells or depth > opts.max_depth:
            raise UncertifiedDivisorError(
                "subdivision budget exhausted",
                partial=_partial_divisor(state, root),
            )
        try:
            w, minmod = _cell_winding(state, rect)
        except WindingFailure as exc:
            raise UncertifiedDivisorError(
                f"cell boundary could not be certified: {exc}",
                partial=_partial_divisor(state, root),
            )
        u = _unresolved(state, rect, w)
        state.cell_log.append(
            SubdivisionCell(rect.region(), w, minmod, "resolved" if u == 0 else "split")
        )
        if u == 0:
            continue
        if u < 0:
            raise UncertifiedDivisorError(
                f"negative unresolved count in cell around {rect.center}: "
                "pole candidate superset was incomplete",
                partial=_partial_divisor(state, root),
            )
        if rect.diam < 0.35 * scale:
            got = _try_resolve(state, rect, u, opts, scale)
            if got:
                u -= got
                if u == 0:
                    continue
        if rect.diam < 200 * opts.loc_tol:
            raise UncertifiedDivisorError(
                f"unresolved cluster of order {u} near {rect.center}",
                partial=_partial_divisor(state, root),
            )
        left, right = _split_with_additivity(state, rect, w, opts)
        stack.append((left, depth + 1))
        stack.append((right, depth + 1))


def _split_with_additivity(state, rect, parent_winding, opts):
    """Split, verifying that child windings add up to the parent's."""
    for attempt in range(10):
        left, right = _nudged_split(state, rect, opts, skip=attempt)
        try:
            wl, _ = _cell_winding(state, left)
            wr, _ = _cell_winding(state, right)
        except WindingFailure:
            continue
        if wl + wr != parent_winding:
            # an uncatalogued point sits on the shared edge; try another line
            continue
        state.splits_checked += 1
        return left, right
    raise UncertifiedDivisorError("could not find a certified split")


def _partial_divisor(state, root: _Rect):
    pts = []
    for p, signed in state.known:
        if root.contains(p) and signed != 0:
            kind = "zero" if signed > 0 else "pole"
            pts.append(DivisorPoint(p, abs(signed), kind))
    for q, mult in state.emitted:
        pts.append(DivisorPoint(q, mult, "zero"))
    return Divisor(pts, root.region(), certified=False)


# ----------------------------------------------------------------------
# public counting API
# ----------------------------------------------------------------------


def count_in_disc(h, r: float, opts: EngineOptions | None = None) -> Divisor:
    """Certified divisor of all zeros and poles of ``h`` in |z| < r.

    Uses the closed-form oracle when present (and not forced off);
    otherwise runs the subdivision engine.  The reporting radius is
    auto-perturbed outward (at most 1%, deterministic schedule) whenever
    a divisor point sits within the boundary guard; the radius actually
    used is recorded in the result's meta.
    """
    opts = opts or EngineOptions()
    if h.is_identically_zero():
        raise UncertifiedDivisorError("divisor of the zero function is undefined")

    if not opts.force_subdivision:
        oracle = h.divisor(Region.disc(0j, r * 1.02))
        if oracle is not None and oracle.certified:
            r_used, nudge = guarded_radius(r, oracle.moduli(), opts.guard)
            out = oracle.restrict(r_used)
            out.meta.update(
                {"r_requested": r, "r_used": r_used, "nudges": nudge, "mode": "oracle"}
            )
            return out

    div = _engine_divisor(h, 0j, r * 1.02, opts, 0)
    r_used, nudge = guarded_radius(r, div.moduli(), opts.guard)
    out = div.restrict(r_used)
    out.certified = div.certified
    out.meta.update(
        {
            "r_requested": r,
            "r_used": r_used,
            "nudges": nudge,
            "mode": "subdivision",
            "cells": div.meta.get("cells"),
            "splits_checked": div.meta.get("splits_checked"),
        }
    )
    # outer certification: total boundary winding matches the signed count
    try:
        w_total, _ = circle_winding(h._eval_fn, 0j, r_used)
    except WindingFailure as exc:
        raise UncertifiedDivisorError(f"outer circle winding failed: {exc}", partial=out)
    if w_total != out.total_signed_order():
        raise UncertifiedDivisorError(
            f"outer winding {w_total} disagrees with located points "
            f"({out.total_signed_order()})",
            partial=out,
        )
    return out


def _engine_divisor(h, center: complex, radius: float, opts, depth) -> Divisor:
    """Subdivision divisor over the square circumscribing the given disc."""
    half = radius
    scale = max(1.0, radius)
    rect = _Rect(
        center.real - half, center.real + half, center.imag - half, center.imag + half
    )
    margin = 0.05 * scale
    trace_region = Region.rectangle(
        complex(rect.x0 - margin, rect.y0 - margin),
        complex(rect.x1 + margin, rect.y1 + margin),
    )
    cands = _trace_pole_candidates(h, trace_region, opts, depth)
    if cands is None:
        raise UncertifiedDivisorError(
            f"pole locations of {h.label()} are not traceable; "
            "cannot certify a divisor"
        )

    known = []
    for i, p in enumerate(cands):
        others = [q for j, q in enumerate(cands) if j != i]
        isolation = min((abs(p - q) for q in others), default=math.inf)
        order, _ = _local_order(h._eval_fn, p, isolation, scale)
        if order != 0:
            known.append((p, order))

    state = _EngineState(h._eval_fn, _DerivChain(h), known)

    # nudge the root square if its boundary grazes something
    for attempt in range(8):
        try:
            _subdivide(state, rect, opts, scale)
            break
        except UncertifiedDivisorError as exc:
            if "boundary could not be certified" in str(exc) and attempt < 7:
                grow = 1.0 + (attempt + 1) * 1.3e-3
                rect = _Rect(
                    center.real - half * grow,
                    center.real + half * grow,
                    center.imag - half * grow,
                    center.imag + half * grow,
                )
                state = _EngineState(h._eval_fn, _DerivChain(h), known)
                continue
            raise

    pts = []
    for p, signed in state.known:
        if signed < 0:
            pts.append(DivisorPoint(p, -signed, "pole"))
        else:
            pts.append(DivisorPoint(p, signed, "zero"))
    for q, mult in state.emitted:
        # candidate zeros may be rediscovered by polishing; dedupe
        if any(abs(q - p.location) < 10 * opts.loc_tol for p in pts):
            continue
        pts.append(DivisorPoint(q, mult, "zero"))
    out = Divisor(
        [p for p in pts if abs(p.location - center) < radius],
        Region.disc(center, radius),
        certified=True,
    )
    out.meta.update({"cells": state.cells, "splits_checked": state.splits_checked})
    return out


def joint_count(
    f, a, lf, r: float, opts: EngineOptions | None = None, lf_divisor=None
) -> Divisor:
    """Zeros of L(f) inside |z| < r at which f - a is (numerically) zero.

    Multiplicities come from L(f) alone; the multiplicity of the a-point
    of f at the same location is deliberately ignored.  A precomputed
    divisor of L(f) covering the disc may be passed to avoid a recount.
    """
    opts = opts or EngineOptions()
    if lf_divisor is not None and lf_divisor.region.params[1] >= r:
        zeros_lf = lf_divisor.restrict(min(r, lf_divisor.region.params[1]))
        zeros_lf.certified = lf_divisor.certified
    else:
        zeros_lf = count_in_disc(lf, r, opts)
    kept = []
    for p in zeros_lf.zeros():
        fa = complex(f.eval(p.location)) - complex(a.eval(p.location))
        if abs(fa) < opts.match_tol:
            kept.append(p)
    out = Divisor(kept, zeros_lf.region, zeros_lf.certified)
    out.meta.update(zeros_lf.meta)
    return out


# ----------------------------------------------------------------------
# integrated counting functions
# ----------------------------------------------------------------------

_ORIGIN_TOL = 1e-12


def counting_from_divisor(points, r: float, kind: str) -> float:
    """N(r) as the exact finite sum over divisor points of one kind.

    Points at the origin contribute n(0) log r; every other point inside
    |z| < r contributes mult * log(r / |z|).
    """
    total = 0.0
    for p in points:
        if p.kind != kind:
            continue
        d = abs(p.location)
        if d >= r:
            continue
        if d <= _ORIGIN_TOL:
            total += p.multiplicity * math.log(r)
        else:
            total += p.multiplicity * math.log(r / d)
    return total


def counting_integral_form(points, r: float, kind: str) -> float:
    """N(r) = int_0^r (n(t) - n(0)) dt/t + n(0) log r, integrated exactly
    over the piecewise-constant counting function."""
    radii = sorted(
        abs(p.location)
        for p in points
        if p.kind == kind and _ORIGIN_TOL < abs(p.location) < r
    )
    n0 = sum(
        p.multiplicity
        for p in points
        if p.kind == kind and abs(p.location) <= _ORIGIN_TOL
    )
    mult_at = {}
    for p in points:
        if p.kind == kind and _ORIGIN_TOL < abs(p.location) < r:
            key = abs(p.location)
            mult_at[key] = mult_at.get(key, 0) + p.multiplicity
    breaks = sorted(set(radii))
    total = n0 * math.log(r)
    running = 0
    for i, b in enumerate(breaks):
        running += mult_at[b]
        upper = breaks[i + 1] if i + 1 < len(breaks) else r
        total += running * math.log(upper / b)
    return total


def integrate_counting(counts_fn, r: float, breakpoints) -> float:
    """Integrated counting function for a supplied step count t -> n(t).

    ``breakpoints`` are the jump radii in (0, r]; between them n is
    constant, so the integral is a finite sum of logarithms.
    """
    n0 = int(counts_fn(0.0))
    brk = sorted(b for b in breakpoints if 0.0 < b < r)
    total = n0 * math.log(r)
    prev = None
    for i, b in enumerate(brk):
        upper = brk[i + 1] if i + 1 < len(brk) else r
        level = int(counts_fn(0.5 * (b + upper))) - n0
        total += level * math.log(upper / b)
        prev = b
    return total
