"""Proximity, counting and characteristic functions; Jensen residuals.

All circle averages share the uniform dyadic node ladder, so differences
of integrals taken at the same radius cancel consistently; radii are
auto-perturbed outward (at most 1%, deterministic schedule) whenever a
divisor point sits too close to the circle, and the perturbation is
recorded so tables stay reproducible.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .divisors import EngineOptions, count_in_disc, counting_from_divisor, guarded_radius
from .functions import FunctionHandle, combine, ilc
from .quadrature import CircleIntegral, QuadratureConfig, circle_mean

__all__ = [
    "RadiusSchedule",
    "CharacteristicSample",
    "CharacteristicTable",
    "JensenReport",
    "DivisorContext",
    "near_circle_angles",
    "proximity",
    "mean_log_abs",
    "counting",
    "characteristic",
    "jensen_check",
]


@dataclass(frozen=True)
class RadiusSchedule:
    """Geometric radius schedule r0 * ratio^j, j = 0..count-1."""

    r0: float
    ratio: float
    count: int

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if self.ratio <= 1:
            raise ValueError("ratio must exceed 1")
        if self.count < 2:
            raise ValueError("count must be at least 2")

    def radii(self):
        return [self.r0 * self.ratio**j for j in range(self.count)]

    @property
    def r_max(self):
        return self.r0 * self.ratio ** (self.count - 1)


@dataclass(frozen=True)
class CharacteristicSample:
    r: float
    m: float
    N: float
    T: float
    per_target_N: tuple
    certified: bool
    achieved_tol: float


@dataclass
class CharacteristicTable:
    samples: list
    target_labels: tuple = ()
    monotone_ok: bool = True
    certified: bool = True
    perturbations: list = field(default_factory=list)

    def column(self, name):
        return [getattr(s, name) for s in self.samples]


class DivisorContext:
    """Caches full-disc divisors per handle so a schedule reuses one count.

    The cache stores the handle itself alongside its divisor: keying by
    id() alone would let a recycled id of a collected handle alias a
    stale entry.
    """

    def __init__(self, opts: EngineOptions | None = None):
        self.opts = opts or EngineOptions()
        self._cache: dict = {}

    def divisor(self, handle: FunctionHandle, radius: float):
        entry = self._cache.get(id(handle))
        if entry is not None and entry[0] is handle and entry[1].region.params[1] >= radius:
            return entry[1]
        div = count_in_disc(handle, radius, self.opts)
        self._cache[id(handle)] = (handle, div)
        return div


def near_circle_angles(points, r: float, window: float = 0.05, kinds=("zero", "pole")):
    """Angles of divisor points radially within ``window``*max(r,1) of |z|=r."""
    w = window * max(r, 1.0)
    return [
        cmath.phase(p.location)
        for p in points
        if p.kind in kinds and abs(abs(p.location) - r) < w
    ]


def proximity(
    f: FunctionHandle,
    r: float,
    quad: QuadratureConfig,
    hint_points=(),
) -> CircleIntegral:
    """m(r, f): circle average of log+ |f|.

    Poles just off the circle produce integrable spikes and the log+
    cutoff produces kinks; both are located and patched by graded local
    refinement rather than dropped.
    """

    def integrand(z):
        with np.errstate(all="ignore"):
            a = np.abs(f._eval_fn(z))
        return np.log(np.maximum(a, 1.0))

    angles = near_circle_angles(hint_points, r, kinds=("pole",))
    return circle_mean(integrand, r, quad, angles, detect_kinks=True)


def mean_log_abs(
    h: FunctionHandle,
    r: float,
    quad: QuadratureConfig,
    hint_points=(),
) -> CircleIntegral:
    """Circle average of log |h|, split as log+ |h| - log+ (1/|h|) on one
    shared node set."""

    def integrand(z):
        with np.errstate(all="ignore"):
            a = np.abs(h._eval_fn(z))
            plus = np.log(np.maximum(a, 1.0))
            minus = np.log(np.maximum(1.0 / a, 1.0))
        return plus - minus

    angles = near_circle_angles(hint_points, r)
    return circle_mean(integrand, r, quad, angles)


def counting(
    f: FunctionHandle,
    r: float,
    kind: str = "pole",
    ctx: DivisorContext | None = None,
) -> float:
    """N(r, f) for poles, or the zero-side analogue, by exact log sums."""
    ctx = ctx or DivisorContext()
    div = ctx.divisor(f, r * 1.02)
    return counting_from_divisor(div.points, r, kind)


def characteristic(
    f: FunctionHandle,
    schedule: RadiusSchedule,
    quad: QuadratureConfig,
    targets=(),
    ctx: DivisorContext | None = None,
) -> CharacteristicTable:
    """Per-radius m, N, T = m + N and per-target counting functions.

    T is checked for monotonicity as a post-condition; violations beyond
    tolerance flag the table rather than being silently repaired.
    """
    ctx = ctx or DivisorContext()
    radii = schedule.radii()
    r_cap = radii[-1] * 1.02
    div_f = ctx.divisor(f, r_cap)
    subs = [combine("sub", f, a) for a in targets]
    div_subs = [ctx.divisor(s, r_cap) for s in subs]

    all_moduli = list(div_f.moduli())
    for d in div_subs:
        all_moduli.extend(d.moduli())

    samples = []
    perturbations = []
    for r in radii:
        r_used, nudge = guarded_radius(r, all_moduli, quad.singularity_guard)
        if nudge:
            perturbations.append((r, r_used))
        mm = proximity(f, r_used, quad, div_f.points)
        nn = counting_from_divisor(div_f.points, r_used, "pole")
        per_t = tuple(
            counting_from_divisor(d.points, r_used, "zero") for d in div_subs
        )
        certified = mm.certified and div_f.certified and all(
            d.certified for d in div_subs
        )
        samples.append(
            CharacteristicSample(
                r_used, mm.value, nn, mm.value + nn, per_t, certified, mm.achieved_tol
            )
        )

    monotone = all(
        b.T >= a.T - 1e-9 * max(1.0, abs(a.T))
        for a, b in zip(samples[:-1], samples[1:])
    )
    return CharacteristicTable(
        samples,
        tuple(a.label() for a in targets),
        monotone_ok=monotone,
        certified=all(s.certified for s in samples) and monotone,
        perturbations=perturbations,
    )


@dataclass(frozen=True)
class JensenReport:
    r: float
    lhs: float
    rhs: float
    n_zero: float
    n_pole: float
    log_ilc: float
    residual: float
    certified: bool
    achieved_tol: float


def jensen_check(
    h: FunctionHandle,
    r: float,
    quad: QuadratureConfig,
    ctx: DivisorContext | None = None,
) -> JensenReport:
    """Residual of the Jensen identity at radius r.

    mean of log|h| over the circle must equal
    N(r, 1/h) - N(r, h) + log |ilc(h, 0)|.
    """
    ctx = ctx or DivisorContext()
    div = ctx.divisor(h, r * 1.02)
    r_used, _ = guarded_radius(r, div.moduli(), quad.singularity_guard)
    lhs = mean_log_abs(h, r_used, quad, div.points)
    n_zero = counting_from_divisor(div.points, r_used, "zero")
    n_pole = counting_from_divisor(div.points, r_used, "pole")
    c0, _ = ilc(h, 0.0)
    log_ilc = math.log(abs(c0))
    rhs = n_zero - n_pole + log_ilc
    return JensenReport(
        r_used,
        lhs.value,
        rhs,
        n_zero,
        n_pole,
        log_ilc,
        abs(lhs.value - rhs),
        lhs.certified and div.certified,
        lhs.achieved_tol,
    )
