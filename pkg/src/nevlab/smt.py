"""Second-main-theorem inequalities, deficiencies and Picard-type checks.

Every term of the two-sided inequality is computed explicitly, including
the full remainder (target characteristics, the log-sum integral, the
pairwise-separation term, the constant, and the initial-Laurent terms at
the origin).  Deficiency-type quantities replace the asymptotic liminf /
limsup by extrema over a recorded trailing window of the radius
schedule; nothing is extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .divisors import counting_from_divisor, guarded_radius, joint_count
from .errors import (
    DegenerateTargetsError,
    InvalidModelError,
    InvalidTargetError,
    InvalidWindowError,
)
from .functions import FunctionHandle, combine, ilc
from .nevanlinna import (
    DivisorContext,
    QuadratureConfig,
    RadiusSchedule,
    near_circle_angles,
    proximity,
)
from .operators import (
    OperatorExpr,
    apply_operator,
    derivative_order,
    has_shift_or_scale,
    kernel_check,
    logderiv_proximity,
)
from .quadrature import circle_mean

__all__ = [
    "RemainderBreakdown",
    "SMTReport",
    "DeficiencyEstimate",
    "DeficiencySum",
    "SyntheticDivisorModel",
    "ValironCheck",
    "PicardCandidate",
    "PicardReport",
    "remainder",
    "verify_thm21",
    "LinearSMTResult",
    "verify_linear_smt",
    "deficiencies",
    "deficiency_sum",
    "picard_check",
    "synthetic_valiron",
    "pointwise_proof_inequality",
]


@dataclass(frozen=True)
class RemainderBreakdown:
    """The remainder of the general second main theorem, term by term."""

    sum_T_targets: float
    log_sum_ratio: float
    l_term: float
    const_term: float
    ilc_terms: float
    achieved_tol: float
    certified: bool

    @property
    def total(self) -> float:
        return (
            self.sum_T_targets
            + self.log_sum_ratio
            + self.l_term
            + self.const_term
            + self.ilc_terms
        )


@dataclass(frozen=True)
class SMTReport:
    r: float
    m: float
    N: float
    T: float
    per_target_N: tuple
    N_g: float
    lhs: float
    rhs: float
    remainder: RemainderBreakdown
    slack: float
    certified: bool
    margin: float
    m_logderiv: float | None = None

    @property
    def remainder_total(self):
        return self.remainder.total


def _identically_equal(f: FunctionHandle, g: FunctionHandle) -> bool:
    diff = combine("sub", f, g)
    if diff.is_identically_zero():
        return True
    theta = np.linspace(0.3, 2 * math.pi, 17)
    pts = 1.7 * np.exp(1j * theta)
    with np.errstate(all="ignore"):
        vals = np.abs(diff.eval(pts))
    vals = vals[np.isfinite(vals)]
    return len(vals) > 0 and float(np.max(vals)) < 1e-12


def _check_targets_distinct(targets, r):
    theta = np.linspace(0.0, 2 * math.pi, 65)[:-1]
    pts = r * np.exp(1j * theta)
    q = len(targets)
    for i in range(q):
        for j in range(i + 1, q):
            with np.errstate(all="ignore"):
                gap = np.abs(targets[i].eval(pts) - targets[j].eval(pts))
            gap = gap[np.isfinite(gap)]
            if len(gap) == 0 or float(np.max(gap)) < 1e-12:
                raise DegenerateTargetsError(
                    f"targets {i} and {j} coincide numerically on |z| = {r:g}"
                )


def _target_characteristic(a, r, quad, ctx):
    """T(r, a) for a target handle (constants shortcut through the same path)."""
    mm = proximity(a, r, quad)
    if a.family == "constant":
        return mm.value, mm.achieved_tol, True
    div = ctx.divisor(a, r * 1.02)
    nn = counting_from_divisor(div.points, r, "pole")
    return mm.value + nn, mm.achieved_tol, mm.certified and div.certified


def remainder(
    f: FunctionHandle,
    g: FunctionHandle,
    targets,
    r: float,
    quad: QuadratureConfig,
    ctx: DivisorContext | None = None,
    hint_points=(),
) -> RemainderBreakdown:
    """All remainder terms at one (guarded) radius.

    The separation term and the constant vanish for a single target.
    """
    ctx = ctx or DivisorContext()
    q = len(targets)
    if q == 0:
        raise InvalidTargetError("at least one target is required")
    if q >= 2:
        _check_targets_distinct(targets, r)

    sum_T = 0.0
    tol = 0.0
    certified = True
    for a in targets:
        t, a_tol, cert = _target_characteristic(a, r, quad, ctx)
        sum_T += t
        tol += a_tol
        certified &= cert

    g_eval = g._eval_fn
    target_evals = [a._eval_fn for a in targets]
    f_eval = f._eval_fn

    def log_sum_integrand(z):
        with np.errstate(all="ignore"):
            gv = np.abs(g_eval(z))
            s = np.zeros_like(gv)
            fv = f_eval(z)
            for aev in target_evals:
                s = s + gv / np.abs(fv - aev(z))
            return np.log(s)

    angles = near_circle_angles(hint_points, r)
    log_sum = circle_mean(log_sum_integrand, r, quad, angles)
    tol += log_sum.achieved_tol
    certified &= log_sum.certified

    if q >= 2:

        def l_integrand(z):
            with np.errstate(all="ignore"):
                vals = [aev(z) for aev in target_evals]
                l = None
                for i in range(q):
                    for j in range(i + 1, q):
                        d = np.abs(vals[i] - vals[j])
                        l = d if l is None else np.minimum(l, d)
                return np.log(np.maximum(2.0 / l, 1.0))

        l_int = circle_mean(l_integrand, r, quad, detect_kinks=True)
        l_term = (q - 1) * l_int.value
        tol += (q - 1) * l_int.achieved_tol
        certified &= l_int.certified
        const_term = (q - 1) * math.log(2.0)
    else:
        l_term = 0.0
        const_term = 0.0

    ilc_sum = 0.0
    for a in targets:
        c_a, _ = ilc(combine("sub", f, a), 0.0)
        ilc_sum += math.log(abs(c_a))
    c_g, _ = ilc(g, 0.0)
    ilc_sum -= math.log(abs(c_g))

    return RemainderBreakdown(
        sum_T, log_sum.value, l_term, const_term, ilc_sum, tol, certified
    )


def verify_thm21(
    f: FunctionHandle,
    g: FunctionHandle,
    targets,
    schedule: RadiusSchedule,
    quad: QuadratureConfig,
    ctx: DivisorContext | None = None,
    expr: OperatorExpr | None = None,
) -> list[SMTReport]:
    """Both sides of the unconditional inequality on a radius schedule.

    lhs = (q-1) T(r,f) + N_g(r,f); rhs = N(r,f) + sum_j N(r, 1/(f-a_j))
    + remainder.  Certified rows must satisfy slack = rhs - lhs >=
    -margin with margin = 10x the achieved quadrature tolerance.
    """
    ctx = ctx or DivisorContext()
    if g.is_identically_zero():
        raise InvalidTargetError("g must not be identically zero")
    for j, a in enumerate(targets):
        if _identically_equal(f, a):
            raise InvalidTargetError(f"f coincides with target {j}")

    q = len(targets)
    radii = schedule.radii()
    r_cap = radii[-1] * 1.02
    div_f = ctx.divisor(f, r_cap)
    div_g = ctx.divisor(g, r_cap)
    subs = [combine("sub", f, a) for a in targets]
    div_subs = [ctx.divisor(s, r_cap) for s in subs]

    moduli = list(div_f.moduli()) + list(div_g.moduli())
    for d in div_subs:
        moduli.extend(d.moduli())

    hint_points = list(div_g.points)
    for d in div_subs:
        hint_points.extend(d.points)

    reports = []
    for r in radii:
        r_used, _ = guarded_radius(r, moduli, quad.singularity_guard)
        mm = proximity(f, r_used, quad, div_f.points)
        nn = counting_from_divisor(div_f.points, r_used, "pole")
        big_t = mm.value + nn
        per_n = tuple(
            counting_from_divisor(d.points, r_used, "zero") for d in div_subs
        )
        n_g_pole = counting_from_divisor(div_g.points, r_used, "pole")
        n_g_zero = counting_from_divisor(div_g.points, r_used, "zero")
        ram = 2.0 * nn - n_g_pole + n_g_zero
        rem = remainder(f, g, targets, r_used, quad, ctx, hint_points)
        lhs = (q - 1) * big_t + ram
        rhs = nn + sum(per_n) + rem.total
        tol = mm.achieved_tol + rem.achieved_tol
        certified = (
            mm.certified
            and rem.certified
            and div_f.certified
            and div_g.certified
            and all(d.certified for d in div_subs)
        )
        reports.append(
            SMTReport(
                r_used,
                mm.value,
                nn,
                big_t,
                per_n,
                ram,
                lhs,
                rhs,
                rem,
                rhs - lhs,
                certified,
                10.0 * tol,
            )
        )
    return reports


@dataclass
class LinearSMTResult:
    reports: list
    applicability: str
    kernel_reports: list = field(default_factory=list)

    def smallness_curve(self):
        """(r, remainder/T, m(r,L(f)/f)/T) rows for the hypothesis diagnostic."""
        out = []
        for rep in self.reports:
            out.append(
                (
                    rep.r,
                    rep.remainder_total / rep.T if rep.T > 0 else math.nan,
                    (rep.m_logderiv / rep.T)
                    if (rep.m_logderiv is not None and rep.T > 0)
                    else math.nan,
                )
            )
        return out


def _has_qscale(expr):
    from .operators import Derivative, Identity, QScale, Shift

    if isinstance(expr, Identity):
        return False
    if isinstance(expr, QScale):
        return True
    if isinstance(expr, (Derivative, Shift)):
        return _has_qscale(expr.inner)
    return any(_has_qscale(n) for _, n in expr.terms)


def _applicability(expr, f):
    if not has_shift_or_scale(expr):
        return "differential operator: lemma on the logarithmic derivative applies"
    if _has_qscale(expr):
        order = f.growth.order
        if order is None:
            return "q-scale present: declared order unknown, hypothesis not checkable"
        if order == 0:
            return "q-scale present: declared order 0, q-difference analogue applies"
        return f"q-scale present: declared order {order:g} > 0, hypothesis not established"
    hyper = f.growth.hyper_order
    if hyper is None:
        return "shift present: declared hyper-order unknown, hypothesis not checkable"
    if hyper < 1.0:
        return f"shift present: declared hyper-order {hyper:g} < 1, difference analogue applies"
    return f"shift present: declared hyper-order {hyper:g} >= 1, hypothesis fails"


def verify_linear_smt(
    f: FunctionHandle,
    expr: OperatorExpr,
    targets,
    schedule: RadiusSchedule,
    quad: QuadratureConfig,
    ctx: DivisorContext | None = None,
    kernel_tol: float = 1e-8,
) -> LinearSMTResult:
    """Second main theorem with g = L(f) and targets in ker(L).

    Each per-radius report also carries the smallness diagnostics
    remainder/T and m(r, L(f)/f)/T; the theorem's asymptotic hypothesis
    is reported, never decided.
    """
    ctx = ctx or DivisorContext()
    kernel_reports = []
    for j, a in enumerate(targets):
        rep = kernel_check(expr, a, tol=kernel_tol)
        kernel_reports.append(rep)
        if not rep.passed:
            raise InvalidTargetError(
                f"target {j} ({a.label()}) fails kernel membership: "
                f"max residual {rep.max_residual:.3e}"
            )
    f_rep = kernel_check(expr, f, tol=kernel_tol)
    if f_rep.passed:
        raise InvalidTargetError(
            "f lies in ker(L) numerically; the inequality is vacuous"
        )

    lf = apply_operator(expr, f)
    reports = verify_thm21(f, lf, targets, schedule, quad, ctx)
    out = []
    for rep in reports:
        ml = logderiv_proximity(expr, f, rep.r, quad)
        out.append(
            SMTReport(
                rep.r,
                rep.m,
                rep.N,
                rep.T,
                rep.per_target_N,
                rep.N_g,
                rep.lhs,
                rep.rhs,
                rep.remainder,
                rep.slack,
                rep.certified,
                rep.margin,
                m_logderiv=ml.value,
            )
        )
    return LinearSMTResult(out, _applicability(expr, f), kernel_reports)


# ----------------------------------------------------------------------
# deficiencies
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DeficiencyEstimate:
    target_label: str
    is_infinity: bool
    delta: float
    valiron: float
    theta_L: float
    window: tuple  # (r_lo, r_hi)
    within_typed_bounds: bool


def _window_slice(values, window):
    return values[-window:]


def deficiencies(
    f: FunctionHandle,
    expr: OperatorExpr,
    targets,
    schedule: RadiusSchedule,
    quad: QuadratureConfig,
    window: int | None = None,
    ctx: DivisorContext | None = None,
) -> list[DeficiencyEstimate]:
    """Finite-radius deficiency estimates for each target and for infinity.

    liminf/limsup are replaced by min/max over the trailing ``window``
    radii of the schedule (default: the trailing quarter); the window is
    recorded on every estimate.
    """
    ctx = ctx or DivisorContext()
    radii = schedule.radii()
    if window is None:
        window = max(2, math.ceil(len(radii) / 4))
    if window > len(radii):
        raise InvalidWindowError(
            f"window {window} exceeds schedule length {len(radii)}"
        )

    lf = apply_operator(expr, f)
    r_cap = radii[-1] * 1.02
    div_f = ctx.divisor(f, r_cap)
    div_lf = ctx.divisor(lf, r_cap)
    subs = [combine("sub", f, a) for a in targets]
    div_subs = [ctx.divisor(s, r_cap) for s in subs]
    joints = [
        joint_count(f, a, lf, radii[-1] * 1.01, ctx.opts, lf_divisor=div_lf)
        for a in targets
    ]

    moduli = list(div_f.moduli()) + list(div_lf.moduli())
    for d in div_subs:
        moduli.extend(d.moduli())

    t_vals, n_f, n_lf = [], [], []
    n_targets = [[] for _ in targets]
    n_joints = [[] for _ in targets]
    used_radii = []
    for r in radii:
        r_used, _ = guarded_radius(r, moduli, quad.singularity_guard)
        used_radii.append(r_used)
        mm = proximity(f, r_used, quad, div_f.points)
        nf = counting_from_divisor(div_f.points, r_used, "pole")
        t_vals.append(mm.value + nf)
        n_f.append(nf)
        n_lf.append(counting_from_divisor(div_lf.points, r_used, "pole"))
        for i in range(len(targets)):
            n_targets[i].append(
                counting_from_divisor(div_subs[i].points, r_used, "zero")
            )
            n_joints[i].append(
                counting_from_divisor(joints[i].points, r_used, "zero")
            )

    win = (used_radii[-window], used_radii[-1])
    k_order = derivative_order(expr)
    purely_diff = not has_shift_or_scale(expr)

    def ratios(series):
        return [x / t for x, t in zip(series, t_vals)]

    estimates = []
    for i, a in enumerate(targets):
        ra = _window_slice(ratios(n_targets[i]), window)
        rj = _window_slice(ratios(n_joints[i]), window)
        delta = 1.0 - max(ra)
        valiron = 1.0 - min(ra)
        theta = min(rj)
        ok = (-1e-9 <= delta <= 1 + 1e-9) and (-1e-9 <= valiron <= 1 + 1e-9) and (
            theta >= -1e-9
        )
        estimates.append(
            DeficiencyEstimate(a.label(), False, delta, valiron, theta, win, ok)
        )

    rf = _window_slice(ratios(n_f), window)
    r_inf = _window_slice(
        [(2 * nf - nlf) / t for nf, nlf, t in zip(n_f, n_lf, t_vals)], window
    )
    delta_inf = 1.0 - max(rf)
    valiron_inf = 1.0 - min(rf)
    theta_inf = min(r_inf)
    ok_inf = (-1e-9 <= delta_inf <= 1 + 1e-9) and (
        -1e-9 <= valiron_inf <= 1 + 1e-9
    )
    if purely_diff and k_order >= 1:
        ok_inf &= (-k_order + 1 - 1e-9) <= theta_inf <= 1 + 1e-9
    estimates.append(
        DeficiencyEstimate(
            "infinity", True, delta_inf, valiron_inf, theta_inf, win, ok_inf
        )
    )
    return estimates


@dataclass(frozen=True)
class DeficiencySum:
    total: float
    finite_sum: float
    bound: float
    tol: float

    @property
    def satisfied(self) -> bool:
        return self.total <= self.bound + self.tol

    @property
    def verdict(self) -> str:
        rel = "<=" if self.satisfied else ">"
        return f"sum {self.total:.4f} {rel} {self.bound:g} (tol {self.tol:g})"


def deficiency_sum(estimates, tol: float = 0.25) -> DeficiencySum:
    """Sum of delta + theta over all targets including infinity, compared
    against the theoretical bound 2."""
    finite = sum(e.delta + e.theta_L for e in estimates if not e.is_infinity)
    inf_part = sum(e.delta + e.theta_L for e in estimates if e.is_infinity)
    return DeficiencySum(finite + inf_part, finite, 2.0, tol)


# ----------------------------------------------------------------------
# Picard-type checks
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PicardCandidate:
    label: str
    kernel_max_residual: float
    exceptional: bool | None  # None = inconclusive
    detail: str


@dataclass(frozen=True)
class PicardReport:
    r_tested: float
    candidates: tuple
    exceptional_count: int
    threshold: int
    f_entire_in_disc: bool
    f_kernel_residual: float
    verdict: str


def picard_check(
    f: FunctionHandle,
    expr: OperatorExpr,
    candidates,
    schedule: RadiusSchedule,
    quad: QuadratureConfig,
    ctx: DivisorContext | None = None,
    kernel_tol: float = 1e-8,
) -> PicardReport:
    """Exceptionality containment test at the largest schedule radius.

    A candidate a is exceptional when every a-point of f inside the disc
    is matched by a zero of L(f) of at least the same multiplicity at the
    same location.  Empty preimages are exceptional by convention.
    """
    ctx = ctx or DivisorContext()
    for j, a in enumerate(candidates):
        rep = kernel_check(expr, a, tol=kernel_tol)
        if not rep.passed:
            raise InvalidTargetError(
                f"candidate {j} ({a.label()}) is not in ker(L): "
                f"max residual {rep.max_residual:.3e}"
            )

    f_rep = kernel_check(expr, f, tol=kernel_tol)
    lf = apply_operator(expr, f)
    r_test = schedule.r_max

    if f_rep.max_residual < 1e-9:
        # L(f) = 0: every kernel candidate is trivially exceptional
        cands = tuple(
            PicardCandidate(a.label(), kernel_check(expr, a).max_residual, True,
                            "L(f) = 0, containment vacuous")
            for a in candidates
        )
        return PicardReport(
            r_test,
            cands,
            len(cands),
            _picard_threshold(f, expr, r_test, ctx),
            _entire_in_disc(f, r_test, ctx),
            f_rep.max_residual,
            "L(f) = 0 (numerically)",
        )

    div_lf = ctx.divisor(lf, r_test * 1.02)
    opts = ctx.opts
    out = []
    n_exceptional = 0
    for a in candidates:
        sub = combine("sub", f, a)
        div_sub = ctx.divisor(sub, r_test * 1.02)
        preimage = [p for p in div_sub.zeros() if abs(p.location) < r_test]
        if not (div_sub.certified and div_lf.certified):
            out.append(
                PicardCandidate(
                    a.label(),
                    kernel_check(expr, a).max_residual,
                    None,
                    "uncertified divisors; containment undecidable",
                )
            )
            continue
        missing = []
        for p in preimage:
            hit = next(
                (
                    z
                    for z in div_lf.zeros()
                    if abs(z.location - p.location) < opts.match_tol
                    and z.multiplicity >= p.multiplicity
                ),
                None,
            )
            if hit is None:
                missing.append(p.location)
        exceptional = len(missing) == 0
        n_exceptional += int(exceptional)
        detail = (
            f"{len(preimage)} preimage points all matched"
            if exceptional
            else f"unmatched a-points at {missing[:3]}"
        )
        if not preimage:
            detail = "empty preimage (trivially exceptional)"
        out.append(
            PicardCandidate(
                a.label(),
                kernel_check(expr, a).max_residual,
                exceptional,
                detail if exceptional else "not exceptional: " + detail,
            )
        )

    threshold = _picard_threshold(f, expr, r_test, ctx)
    entire = _entire_in_disc(f, r_test, ctx)
    if n_exceptional >= threshold:
        verdict = (
            f"threshold {threshold} met at r = {r_test:g}: the corollary "
            f"forces L(f) = 0, but the kernel residual of f is "
            f"{f_rep.max_residual:.3e}: finite-radius inconsistency"
        )
    else:
        verdict = f"threshold {threshold} not met, no contradiction"
    return PicardReport(
        r_test,
        tuple(out),
        n_exceptional,
        threshold,
        entire,
        f_rep.max_residual,
        verdict,
    )


def _entire_in_disc(f, r, ctx):
    div = ctx.divisor(f, r * 1.02)
    return len([p for p in div.poles() if abs(p.location) < r]) == 0


def _picard_threshold(f, expr, r, ctx):
    if _entire_in_disc(f, r, ctx):
        return 2
    return derivative_order(expr) + 2


# ----------------------------------------------------------------------
# synthetic Valiron-deficiency calculus
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticDivisorModel:
    """Growth models standing in for a function built via Hadamard products.

    ``t_model`` maps r to T(r); ``counting_model`` maps r to the counting
    function of the distinguished target's preimages; ``p`` is the forced
    zero multiplicity of the operator image at those preimages.
    """

    t_model: object
    counting_model: object
    p: int

    def validate(self, radii, slack: float = 1e-9):
        t_prev = None
        for r in radii:
            t = self.t_model(r)
            n = self.counting_model(r)
            if t <= 0:
                raise InvalidModelError(f"T model not positive at r = {r:g}")
            if t_prev is not None and t < t_prev - 1e-12:
                raise InvalidModelError("T model is not nondecreasing")
            if n > (1 + slack) * t:
                raise InvalidModelError(
                    f"counting model exceeds T at r = {r:g} ({n:g} > {t:g})"
                )
            t_prev = t


@dataclass(frozen=True)
class ValironCheck:
    p: int
    bound: float  # 1 - 2/p
    delta_model: float
    theta_lower: float  # p * (1 - delta)
    consistent: bool  # theta_lower <= 2
    satisfied: bool  # delta_model >= bound


def synthetic_valiron(
    model: SyntheticDivisorModel,
    radii,
    window: int | None = None,
    tol: float = 1e-9,
) -> ValironCheck:
    """Instantiate the simple-a-point chain of inequalities on a model.

    The multiplicity assumption forces theta >= p (1 - Delta); theta <= 2
    then implies Delta >= 1 - 2/p.  A model whose Delta is below the
    bound would push theta above 2 and is flagged inconsistent.
    """
    if model.p < 2:
        raise InvalidModelError("the multiplicity parameter p must be >= 2")
    radii = list(radii)
    if window is None:
        window = max(2, math.ceil(len(radii) / 4))
    if window > len(radii):
        raise InvalidWindowError(
            f"window {window} exceeds schedule length {len(radii)}"
        )
    model.validate(radii)
    ratios = [model.counting_model(r) / model.t_model(r) for r in radii[-window:]]
    delta = 1.0 - min(ratios)
    theta_lower = model.p * (1.0 - delta)
    bound = 1.0 - 2.0 / model.p
    return ValironCheck(
        model.p,
        bound,
        delta,
        theta_lower,
        theta_lower <= 2.0 + tol,
        delta >= bound - tol,
    )


# ----------------------------------------------------------------------
# the pointwise inequality behind the averaged proof
# ----------------------------------------------------------------------


def pointwise_proof_inequality(
    f: FunctionHandle,
    g: FunctionHandle,
    targets,
    r: float,
    n_samples: int = 100,
    seed: int = 0,
) -> tuple[int, float]:
    """Check, at random circle points, that dropping the closest target
    from the log sum is dominated by the g-ratio correction.

    Returns (violations, worst_margin); margin = rhs - lhs, negative
    values are violations.
    """
    rng = np.random.default_rng(seed)
    worst = math.inf
    violations = 0
    checked = 0
    while checked < n_samples:
        theta = rng.uniform(0.0, 2 * math.pi)
        z = r * np.exp(1j * theta)
        with np.errstate(all="ignore"):
            fv = complex(f.eval(z))
            gv = complex(g.eval(z))
            avs = [complex(a.eval(z)) for a in targets]
            gaps = [abs(fv - av) for av in avs]
            if not all(np.isfinite(gaps)) or not np.isfinite(abs(gv)):
                continue
            if min(gaps) < 1e-13 or abs(gv) < 1e-300:
                continue
            s = int(np.argmin(gaps))
            lhs = sum(math.log(gaps[m]) for m in range(len(targets)) if m != s)
            rhs = (
                sum(math.log(gp) for gp in gaps)
                - math.log(abs(gv))
                + math.log(sum(abs(gv) / gp for gp in gaps))
            )
        margin = rhs - lhs
        worst = min(worst, margin)
        if margin < -1e-9:
            violations += 1
        checked += 1
    return violations, worst
