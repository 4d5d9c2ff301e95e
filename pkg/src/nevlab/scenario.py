"""Scenario files: JSON schema, validation and the task pipeline.

A scenario fixes one function, an operator, targets, a radius schedule
and a task list; running it produces one CSV per task, a figure per
task, and a summary JSON with verdicts, certification rates and the
perturbed-radius log.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .divisors import EngineOptions
from .errors import ScenarioError
from .functions import (
    FunctionHandle,
    as_small,
    combine,
    compose_affine,
    make_constant,
    make_exp_poly,
    make_jacobi_sn,
    make_rational,
)
from .nevanlinna import (
    DivisorContext,
    RadiusSchedule,
    characteristic,
    jensen_check,
)
from .operators import (
    OperatorExpr,
    compose,
    derivative,
    forward_difference,
    identity,
    q_scale,
    shift,
    weighted_sum,
)
from .quadrature import QuadratureConfig
from .smt import (
    SyntheticDivisorModel,
    deficiencies,
    deficiency_sum,
    picard_check,
    synthetic_valiron,
    verify_linear_smt,
    verify_thm21,
)
from . import reporting

TASKS = (
    "characteristic",
    "jensen",
    "smt21",
    "smt-linear",
    "deficiency",
    "picard",
    "synthetic-valiron",
)

__all__ = ["Scenario", "load_scenario", "parse_function", "parse_operator", "run_scenario", "TASKS"]


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------


def _complex_of(value, path):
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(x, (int, float)) for x in value)
    ):
        return complex(value[0], value[1])
    raise ScenarioError("expected a number or [re, im] pair", path)


def _require(mapping, key, path):
    if key not in mapping:
        raise ScenarioError(f"missing required field {key!r}", path)
    return mapping[key]


def parse_function(spec, path="$.function") -> FunctionHandle:
    if not isinstance(spec, dict):
        raise ScenarioError("function spec must be an object", path)
    family = _require(spec, "family", path)
    if family == "constant":
        h = make_constant(_complex_of(_require(spec, "value", path), f"{path}.value"))
    elif family == "rational":
        num = [
            _complex_of(c, f"{path}.numerator[{i}]")
            for i, c in enumerate(_require(spec, "numerator", path))
        ]
        den = [
            _complex_of(c, f"{path}.denominator[{i}]")
            for i, c in enumerate(_require(spec, "denominator", path))
        ]
        h = make_rational(num, den)
    elif family == "exp-poly":
        terms = []
        for i, t in enumerate(_require(spec, "terms", path)):
            if not isinstance(t, list) or len(t) != 2:
                raise ScenarioError(
                    "each term must be [coefficient, frequency]", f"{path}.terms[{i}]"
                )
            terms.append(
                (
                    _complex_of(t[0], f"{path}.terms[{i}][0]"),
                    _complex_of(t[1], f"{path}.terms[{i}][1]"),
                )
            )
        h = make_exp_poly(terms)
    elif family == "jacobi-sn":
        k = _require(spec, "k", path)
        if not isinstance(k, (int, float)) or not 0 < k < 1:
            raise ScenarioError("modulus k must lie in (0, 1)", f"{path}.k")
        h = make_jacobi_sn(float(k))
    elif family == "affine-composition":
        base = parse_function(_require(spec, "base", path), f"{path}.base")
        a = _complex_of(_require(spec, "a", path), f"{path}.a")
        b = _complex_of(_require(spec, "b", path), f"{path}.b")
        if a == 0:
            raise ScenarioError("affine factor a must be nonzero", f"{path}.a")
        h = compose_affine(base, a, b)
    elif family == "field-combination":
        op = _require(spec, "op", path)
        if op not in ("add", "sub", "mul", "div"):
            raise ScenarioError(f"unknown combination op {op!r}", f"{path}.op")
        left = parse_function(_require(spec, "left", path), f"{path}.left")
        right = parse_function(_require(spec, "right", path), f"{path}.right")
        h = combine(op, left, right)
    else:
        raise ScenarioError(f"unknown family {family!r}", f"{path}.family")
    if spec.get("small"):
        h = as_small(h)
    return h


def parse_operator(spec, path="$.operator") -> OperatorExpr:
    if not isinstance(spec, dict):
        raise ScenarioError("operator spec must be an object", path)
    kind = _require(spec, "type", path)
    if kind == "identity":
        return identity()
    if kind == "derivative":
        order = spec.get("order", 1)
        if not isinstance(order, int) or order < 1:
            raise ScenarioError("derivative order must be a positive integer", f"{path}.order")
        inner = (
            parse_operator(spec["inner"], f"{path}.inner") if "inner" in spec else None
        )
        return derivative(order, inner)
    if kind == "shift":
        c = _complex_of(_require(spec, "c", path), f"{path}.c")
        inner = (
            parse_operator(spec["inner"], f"{path}.inner") if "inner" in spec else None
        )
        return shift(c, inner)
    if kind == "q-scale":
        q = _complex_of(_require(spec, "q", path), f"{path}.q")
        if q == 0:
            raise ScenarioError("q must be nonzero", f"{path}.q")
        inner = (
            parse_operator(spec["inner"], f"{path}.inner") if "inner" in spec else None
        )
        return q_scale(q, inner)
    if kind == "difference":
        step = _complex_of(spec.get("step", 1.0), f"{path}.step")
        power = spec.get("power", 1)
        if not isinstance(power, int) or power < 1:
            raise ScenarioError("difference power must be a positive integer", f"{path}.power")
        return forward_difference(step, power)
    if kind == "sum":
        terms = _require(spec, "terms", path)
        if not isinstance(terms, list) or not terms:
            raise ScenarioError("sum needs a nonempty term list", f"{path}.terms")
        parsed = []
        for i, term in enumerate(terms):
            coeff_spec = _require(term, "coeff", f"{path}.terms[{i}]")
            if isinstance(coeff_spec, dict):
                coeff = parse_function(coeff_spec, f"{path}.terms[{i}].coeff")
            else:
                coeff = make_constant(
                    _complex_of(coeff_spec, f"{path}.terms[{i}].coeff")
                )
            node = parse_operator(
                _require(term, "node", f"{path}.terms[{i}]"), f"{path}.terms[{i}].node"
            )
            parsed.append((coeff, node))
        return weighted_sum(parsed)
    if kind == "compose":
        outer = parse_operator(_require(spec, "outer", path), f"{path}.outer")
        inner = parse_operator(_require(spec, "inner", path), f"{path}.inner")
        return compose(outer, inner)
    raise ScenarioError(f"unknown operator type {kind!r}", f"{path}.type")


@dataclass
class Scenario:
    name: str
    seed: int
    function: FunctionHandle
    operator: OperatorExpr
    g: FunctionHandle | None
    targets: list
    schedule: RadiusSchedule
    quadrature: QuadratureConfig
    engine: EngineOptions
    tasks: list
    window: int | None
    jensen_tol: float
    synthetic_model: dict | None
    output_dir: str


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}, column {exc.colno}")
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")

    func = parse_function(_require(raw, "function", "$"))
    operator = (
        parse_operator(raw["operator"]) if "operator" in raw else derivative()
    )
    g = parse_function(raw["g"], "$.g") if "g" in raw else None
    targets = [
        parse_function(t, f"$.targets[{i}]")
        for i, t in enumerate(raw.get("targets", []))
    ]

    sched_raw = _require(raw, "schedule", "$")
    try:
        schedule = RadiusSchedule(
            float(_require(sched_raw, "r0", "$.schedule")),
            float(_require(sched_raw, "ratio", "$.schedule")),
            int(_require(sched_raw, "count", "$.schedule")),
        )
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), "$.schedule")

    quad_raw = raw.get("quadrature", {})
    try:
        quadrature = QuadratureConfig(
            int(quad_raw.get("base_nodes", 256)),
            int(quad_raw.get("max_refinements", 9)),
            float(quad_raw.get("singularity_guard", 1e-4)),
            float(quad_raw.get("target_tol", 1e-9)),
        )
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), "$.quadrature")

    eng_raw = raw.get("engine", {})
    engine = EngineOptions(
        force_subdivision=bool(eng_raw.get("force_subdivision", False)),
        guard=float(eng_raw.get("guard", 1e-4)),
        loc_tol=float(eng_raw.get("loc_tol", 1e-8)),
        match_tol=float(eng_raw.get("match_tol", 1e-6)),
        max_cells=int(eng_raw.get("max_cells", 60000)),
    )

    tasks = _require(raw, "tasks", "$")
    if not isinstance(tasks, list) or not tasks:
        raise ScenarioError("tasks must be a nonempty list", "$.tasks")
    for i, t in enumerate(tasks):
        if t not in TASKS:
            raise ScenarioError(
                f"unknown task {t!r} (choose from {', '.join(TASKS)})",
                f"$.tasks[{i}]",
            )

    window = raw.get("window")
    if window is not None and (not isinstance(window, int) or window < 1):
        raise ScenarioError("window must be a positive integer", "$.window")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ScenarioError("seed must be an integer", "$.seed")

    model = raw.get("synthetic_model")
    if "synthetic-valiron" in tasks:
        if model is None:
            raise ScenarioError(
                "task synthetic-valiron needs a synthetic_model", "$.synthetic_model"
            )
        p = _require(model, "p", "$.synthetic_model")
        if not isinstance(p, int) or p < 2:
            raise ScenarioError("p must be an integer >= 2", "$.synthetic_model.p")

    return Scenario(
        name=str(raw.get("name", os.path.splitext(os.path.basename(path))[0])),
        seed=seed,
        function=func,
        operator=operator,
        g=g,
        targets=targets,
        schedule=schedule,
        quadrature=quadrature,
        engine=engine,
        tasks=list(tasks),
        window=window,
        jensen_tol=float(raw.get("jensen_tol", 1e-8)),
        synthetic_model=model,
        output_dir=str(raw.get("output_dir", "out")),
    )


# ----------------------------------------------------------------------
# task execution
# ----------------------------------------------------------------------


@dataclass
class TaskOutput:
    name: str
    csv_name: str
    header: list
    rows: list
    summary: dict
    assertions_ok: bool
    certified_fraction: float
    figure: dict | None = None  # {"kind": "line"|"bar", ...}


def _target_headers(n):
    return [f"N_target_{i + 1}" for i in range(n)]


def _run_characteristic(sc, ctx):
    table = characteristic(
        sc.function, sc.schedule, sc.quadrature, sc.targets, ctx
    )
    header = ["r", "m", "N", "T"] + _target_headers(len(sc.targets)) + ["certified"]
    rows = [
        [s.r, s.m, s.N, s.T, *s.per_target_N, s.certified] for s in table.samples
    ]
    rs = [s.r for s in table.samples]
    fig = {
        "kind": "line",
        "series": {
            "T": (rs, [s.T for s in table.samples]),
            "m": (rs, [s.m for s in table.samples]),
            "N": (rs, [s.N for s in table.samples]),
        },
        "xlabel": "r",
        "ylabel": "value",
        "logx": True,
    }
    cert = sum(s.certified for s in table.samples) / len(table.samples)
    return TaskOutput(
        "characteristic",
        "characteristic.csv",
        header,
        rows,
        {
            "monotone_ok": table.monotone_ok,
            "perturbed_radii": [[a, b] for a, b in table.perturbations],
        },
        table.monotone_ok,
        cert,
        fig,
    )


def _run_jensen(sc, ctx):
    rows = []
    reports = []
    for r in sc.schedule.radii():
        rep = jensen_check(sc.function, r, sc.quadrature, ctx)
        reports.append(rep)
        rows.append(
            [rep.r, rep.lhs, rep.rhs, rep.n_zero, rep.n_pole, rep.log_ilc,
             rep.residual, rep.certified]
        )
    header = ["r", "lhs", "rhs", "N_zero", "N_pole", "log_ilc", "residual", "certified"]
    worst = max(rep.residual for rep in reports)
    ok = worst < sc.jensen_tol
    fig = {
        "kind": "line",
        "series": {"residual": ([rep.r for rep in reports], [rep.residual for rep in reports])},
        "xlabel": "r",
        "ylabel": "|Jensen residual|",
        "logx": True,
        "logy": True,
    }
    cert = sum(rep.certified for rep in reports) / len(reports)
    return TaskOutput(
        "jensen",
        "jensen.csv",
        header,
        rows,
        {"worst_residual": worst, "tolerance": sc.jensen_tol, "passed": ok},
        ok,
        cert,
        fig,
    )


def _smt_rows(reports, n_targets, extra=False):
    rows = []
    for rep in reports:
        row = [rep.r, rep.m, rep.N, rep.T, *rep.per_target_N, rep.N_g, rep.lhs,
               rep.rhs, rep.remainder_total]
        if extra:
            rem_over = rep.remainder_total / rep.T if rep.T > 0 else math.nan
            ml = rep.m_logderiv if rep.m_logderiv is not None else math.nan
            row += [rem_over, ml, ml / rep.T if rep.T > 0 else math.nan]
        row += [rep.slack, rep.certified]
        rows.append(row)
    return rows


def _slack_ok(reports):
    return all(
        rep.slack >= -rep.margin for rep in reports if rep.certified
    )


def _run_smt21(sc, ctx):
    g = sc.g if sc.g is not None else sc.function.derivative()
    reports = verify_thm21(
        sc.function, g, sc.targets, sc.schedule, sc.quadrature, ctx
    )
    header = (
        ["r", "m", "N", "T"]
        + _target_headers(len(sc.targets))
        + ["N_g", "lhs", "rhs", "remainder_total", "slack", "certified"]
    )
    rows = _smt_rows(reports, len(sc.targets))
    ok = _slack_ok(reports)
    cert = sum(rep.certified for rep in reports) / len(reports)
    fig = {
        "kind": "line",
        "series": {"slack": ([rep.r for rep in reports], [rep.slack for rep in reports])},
        "xlabel": "r",
        "ylabel": "slack (rhs - lhs)",
        "logx": True,
    }
    return TaskOutput(
        "smt21",
        "smt21.csv",
        header,
        rows,
        {
            "all_certified_slacks_nonnegative": ok,
            "worst_slack": min(rep.slack for rep in reports),
        },
        ok,
        cert,
        fig,
    )


def _run_smt_linear(sc, ctx):
    result = verify_linear_smt(
        sc.function, sc.operator, sc.targets, sc.schedule, sc.quadrature, ctx
    )
    reports = result.reports
    header = (
        ["r", "m", "N", "T"]
        + _target_headers(len(sc.targets))
        + [
            "N_g",
            "lhs",
            "rhs",
            "remainder_total",
            "remainder_over_T",
            "m_logderiv",
            "logderiv_over_T",
            "slack",
            "certified",
        ]
    )
    rows = _smt_rows(reports, len(sc.targets), extra=True)
    ok = _slack_ok(reports)
    cert = sum(rep.certified for rep in reports) / len(reports)
    rs = [rep.r for rep in reports]
    fig = {
        "kind": "line",
        "series": {
            "slack": (rs, [rep.slack for rep in reports]),
            "remainder/T": (rs, [rep.remainder_total / rep.T for rep in reports]),
            "m(r,Lf/f)/T": (rs, [
                (rep.m_logderiv or math.nan) / rep.T for rep in reports
            ]),
        },
        "xlabel": "r",
        "ylabel": "value",
        "logx": True,
    }
    return TaskOutput(
        "smt_linear",
        "smt_linear.csv",
        header,
        rows,
        {
            "applicability": result.applicability,
            "all_certified_slacks_nonnegative": ok,
            "kernel_max_residuals": [rep.max_residual for rep in result.kernel_reports],
        },
        ok,
        cert,
        fig,
    )


def _run_deficiency(sc, ctx):
    ests = deficiencies(
        sc.function,
        sc.operator,
        sc.targets,
        sc.schedule,
        sc.quadrature,
        sc.window,
        ctx,
    )
    total = deficiency_sum(ests)
    header = [
        "target",
        "is_infinity",
        "delta",
        "valiron",
        "theta_L",
        "window_lo",
        "window_hi",
        "within_bounds",
    ]
    rows = [
        [e.target_label, e.is_infinity, e.delta, e.valiron, e.theta_L,
         e.window[0], e.window[1], e.within_typed_bounds]
        for e in ests
    ]
    # the asserted statement is the relation sum <= 2; the per-estimate
    # box flags are finite-radius diagnostics (a rational function's
    # counting ratio legitimately overshoots 1 by O(1)/T at desk scale)
    ok = total.satisfied
    labels = [e.target_label for e in ests]
    fig = {
        "kind": "bar",
        "labels": labels,
        "groups": {
            "delta": [e.delta for e in ests],
            "theta_L": [e.theta_L for e in ests],
        },
        "ylabel": "estimate",
    }
    return TaskOutput(
        "deficiency",
        "deficiency.csv",
        header,
        rows,
        {
            "finite_sum": total.finite_sum,
            "total_sum": total.total,
            "verdict": total.verdict,
            "window": list(ests[0].window) if ests else None,
        },
        ok,
        1.0,
        fig,
    )


def _run_picard(sc, ctx):
    rep = picard_check(
        sc.function, sc.operator, sc.targets, sc.schedule, sc.quadrature, ctx
    )
    header = ["candidate", "kernel_max_residual", "exceptional", "detail"]
    rows = [
        [c.label, c.kernel_max_residual,
         "inconclusive" if c.exceptional is None else c.exceptional, c.detail]
        for c in rep.candidates
    ]
    return TaskOutput(
        "picard",
        "picard.csv",
        header,
        rows,
        {
            "verdict": rep.verdict,
            "threshold": rep.threshold,
            "exceptional_count": rep.exceptional_count,
            "entire_in_disc": rep.f_entire_in_disc,
            "f_kernel_residual": rep.f_kernel_residual,
            "r_tested": rep.r_tested,
        },
        True,
        1.0,
        None,
    )


def _run_synthetic_valiron(sc, ctx):
    m = sc.synthetic_model
    p = m["p"]
    coeff = float(m.get("t_coeff", 1.0))
    expo = float(m.get("t_exponent", 2.0))
    share = float(m.get("counting_share", 2.0 / p))
    model = SyntheticDivisorModel(
        lambda r: coeff * r**expo, lambda r: share * coeff * r**expo, p
    )
    chk = synthetic_valiron(model, sc.schedule.radii(), sc.window)
    header = ["p", "bound", "delta_model", "theta_lower", "consistent", "satisfied"]
    rows = [[chk.p, chk.bound, chk.delta_model, chk.theta_lower, chk.consistent,
             chk.satisfied]]
    return TaskOutput(
        "synthetic_valiron",
        "synthetic_valiron.csv",
        header,
        rows,
        {
            "bound": chk.bound,
            "delta_model": chk.delta_model,
            "consistent": chk.consistent,
            "satisfied": chk.satisfied,
        },
        True,
        1.0,
        None,
    )


def _jsonable(obj):
    """Coerce numpy scalars (and nested containers) to plain JSON types."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool):
        return obj
    if hasattr(obj, "item") and not isinstance(obj, str):
        return obj.item()
    return obj


_RUNNERS = {
    "characteristic": _run_characteristic,
    "jensen": _run_jensen,
    "smt21": _run_smt21,
    "smt-linear": _run_smt_linear,
    "deficiency": _run_deficiency,
    "picard": _run_picard,
    "synthetic-valiron": _run_synthetic_valiron,
}


def run_scenario(sc: Scenario, out_dir=None, threads: int = 1, strict: bool = False,
                 figures: bool = True):
    """Execute every task, write tables/figures/summary, return an exit code.

    0: success, all assertions passed; 2: an assertion failed;
    3: uncertified results under --strict.  Input errors raise
    ScenarioError before this point (exit 1 at the CLI).
    """
    out = out_dir or sc.output_dir
    os.makedirs(out, exist_ok=True)
    ctx = DivisorContext(sc.engine)

    def run_one(name):
        return _RUNNERS[name](sc, ctx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(run_one, sc.tasks))
    else:
        outputs = [run_one(name) for name in sc.tasks]

    summary = {
        "scenario": sc.name,
        "seed": sc.seed,
        "schedule": {
            "r0": sc.schedule.r0,
            "ratio": sc.schedule.ratio,
            "count": sc.schedule.count,
        },
        "tasks": {},
    }
    all_ok = True
    any_uncertified = False
    for task in outputs:
        path = os.path.join(out, task.csv_name)
        reporting.write_csv(path, task.header, task.rows)
        if figures and task.figure is not None:
            fig = task.figure
            png = os.path.splitext(path)[0] + ".png"
            if fig["kind"] == "line":
                reporting.render_figure(
                    png,
                    fig["series"],
                    fig["xlabel"],
                    fig["ylabel"],
                    title=f"{sc.name}: {task.name}",
                    logx=fig.get("logx", False),
                    logy=fig.get("logy", False),
                )
            else:
                reporting.render_bar_figure(
                    png,
                    fig["labels"],
                    fig["groups"],
                    fig["ylabel"],
                    title=f"{sc.name}: {task.name}",
                )
        summary["tasks"][task.name] = {
            "csv": task.csv_name,
            "assertions_ok": task.assertions_ok,
            "certified_fraction": task.certified_fraction,
            **task.summary,
        }
        all_ok &= task.assertions_ok
        any_uncertified |= task.certified_fraction < 1.0

    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")

    if strict and any_uncertified:
        return 3
    return 0 if all_ok else 2
