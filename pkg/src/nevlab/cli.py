"""Command-line front end: run scenarios, list families, plot tables."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import NevlabError, ScenarioError
from .scenario import load_scenario, run_scenario
from . import reporting

_FAMILIES_TEXT = """\
function families
  constant             value: complex
  rational             numerator, denominator: complex coefficient lists (ascending)
  exp-poly             terms: list of [coefficient, frequency] pairs
  jacobi-sn            k: elliptic modulus in (0, 1)
  affine-composition   base: function, a: complex (nonzero), b: complex
  field-combination    op: add|sub|mul|div, left: function, right: function

operator nodes
  identity
  derivative           order: positive integer, inner: operator (optional)
  shift                c: complex, inner: operator (optional)
  q-scale              q: nonzero complex, inner: operator (optional)
  difference           step: complex (default 1), power: positive integer
  sum                  terms: list of {coeff: number|function, node: operator}
  compose              outer: operator, inner: operator

tasks
  characteristic       per-radius m, N, T and per-target counting functions
  jensen               Jensen-identity residuals over the schedule
  smt21                two-sided inequality with explicit remainder (g from
                       the scenario, default f')
  smt-linear           the same with g = L(f), plus smallness diagnostics
  deficiency           windowed deficiency and multiplicity-index estimates
  picard               exceptionality containment and kernel verdicts
  synthetic-valiron    multiplicity-forcing bound on a synthetic growth model

complex numbers are written as a number or an [re, im] pair.
"""


def list_families() -> str:
    return _FAMILIES_TEXT


def _cmd_run(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    try:
        code = run_scenario(
            sc,
            out_dir=args.out,
            threads=args.threads,
            strict=args.strict,
            figures=not args.no_figures,
        )
    except NevlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    out = args.out or sc.output_dir
    print(f"scenario {sc.name!r}: outputs in {out} (exit {code})")
    return code


def _cmd_plot(args) -> int:
    try:
        header, rows = reporting.read_csv(args.table)
    except OSError as exc:
        print(f"cannot read table: {exc}", file=sys.stderr)
        return 1
    for col in (args.x, args.y):
        if col not in header:
            print(
                f"unknown column {col!r}; available: {', '.join(header)}",
                file=sys.stderr,
            )
            return 1
    ix, iy = header.index(args.x), header.index(args.y)
    pairs = [
        (row[ix], row[iy])
        for row in rows
        if isinstance(row[ix], float) and isinstance(row[iy], float)
    ]
    if not pairs:
        print("no numeric rows for the requested columns", file=sys.stderr)
        return 1
    xs = [p[0] for p in pairs]
    ys = [p[1] for p in pairs]
    reporting.emit_plot_data(xs, ys, args.out)
    png = os.path.splitext(args.out)[0] + ".png"
    reporting.render_figure(png, {args.y: (xs, ys)}, args.x, args.y)
    print(f"wrote {args.out} and {png}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nevlab",
        description=(
            "Desk-scale value-distribution laboratory: characteristic "
            "functions, second-main-theorem inequalities and deficiencies "
            "for meromorphic functions under linear operators."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="path to a scenario JSON file")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1, help="worker threads")
    p_run.add_argument(
        "--strict",
        action="store_true",
        help="exit 3 when any row is uncertified",
    )
    p_run.add_argument(
        "--no-figures", action="store_true", help="skip PNG rendering"
    )
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser(
        "list-families", help="print supported families, operators and tasks"
    )
    p_list.set_defaults(func=lambda args: (print(list_families(), end=""), 0)[1])

    p_plot = sub.add_parser(
        "plot", help="extract a two-column series from a CSV and render it"
    )
    p_plot.add_argument("table", help="CSV produced by a scenario run")
    p_plot.add_argument("--x", required=True, help="x column name")
    p_plot.add_argument("--y", required=True, help="y column name")
    p_plot.add_argument("--out", required=True, help="output series file")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
