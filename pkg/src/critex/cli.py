"""critex analyze|subsidiary <file> [flags]"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Sequence

from .charts import ChartError, ConstrainedProblem
from .classify import ClassifyConfig, SubsidiaryError, SubsidiaryProblem, solve_subsidiary
from .expr import HomogeneousPolynomial, ParseError, parse_problem, sphere
from .report import (ToleranceFailure, analysis_dict, analysis_text, analyze, dumps, image_dict,
                     image_text)
from .solver import SearchConfig

EXIT_PARSE = 1
EXIT_NO_POINTS = 2
EXIT_TOLERANCE = 3


def _box(text: str | None):
    if text is None:
        return None
    parts = [float(p) for p in text.replace(":", ",").split(",") if p.strip()]
    if len(parts) == 1:
        return parts[0]
    if len(parts) % 2:
        raise argparse.ArgumentTypeError("--box takes one half-width or lo,hi pairs")
    pairs = tuple((parts[i], parts[i + 1]) for i in range(0, len(parts), 2))
    return pairs[0] if len(pairs) == 1 else pairs


class _Parser(argparse.ArgumentParser):
    """Usage errors share the parse-error exit code; 2 means no points."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="critex",
                                 description="Constrained critical points without multipliers.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="problem file ('-' for stdin)")
        p.add_argument("--box", type=str, default=None,
                       help="search box: half-width, 'lo,hi', or one lo,hi pair per variable")
        p.add_argument("--seeds-per-axis", type=int, default=None)
        p.add_argument("--kmax", type=int, default=10)
        p.add_argument("--depth-max", type=int, default=4)
        p.add_argument("--tol", type=float, default=None,
                       help="constraint and gradient tolerance (default 1e-9)")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    common(sub.add_parser("analyze", help="find and classify all critical points"))
    common(sub.add_parser("subsidiary", help="image of a homogeneous polynomial on the unit sphere"))
    return ap


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _search_config(args, default_box: float) -> SearchConfig:
    kw = {"box": _box(args.box) if args.box is not None else default_box}
    if args.seeds_per_axis is not None:
        kw["seeds_per_axis"] = args.seeds_per_axis
    if args.tol is not None:
        kw["constraint_tol"] = kw["gradient_tol"] = args.tol
    return SearchConfig(**kw)


def cmd_analyze(args, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        problem = ConstrainedProblem.from_text(_read(args.file))
    except (ParseError, ValueError) as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    scfg = _search_config(args, 10.0)
    ccfg = ClassifyConfig(k_max=args.kmax, depth_max=args.depth_max)
    try:
        a = analyze(problem, scfg, ccfg)
    except (ToleranceFailure, ChartError, SubsidiaryError) as exc:
        print(f"tolerance failure: {exc}", file=err)
        return EXIT_TOLERANCE
    out.write(dumps(analysis_dict(a)) + "\n" if args.json else analysis_text(a))
    if not a.points and not a.families:
        print("no critical points found in the search box", file=err)
        return EXIT_NO_POINTS
    return 0


def cmd_subsidiary(args, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        pt = parse_problem(_read(args.file))
    except (ParseError, ValueError) as exc:
        print(f"parse error: {exc}", file=err)
        return EXIT_PARSE
    P = pt.objective
    if P.is_zero() or not P.is_homogeneous():
        print("parse error: the objective must be a nonzero homogeneous polynomial", file=err)
        return EXIT_PARSE
    n = P.nvars
    hp = HomogeneousPolynomial(P.degree, (Fraction(0),) * n, P)
    extra = tuple(g for g in pt.constraints if g != sphere(n))
    S = SubsidiaryProblem(hp, (sphere(n),) + extra)
    ccfg = ClassifyConfig(k_max=args.kmax, depth_max=args.depth_max)
    if args.seeds_per_axis is not None:
        ccfg.subsidiary_budget = args.seeds_per_axis ** n
    if args.box is not None:
        ccfg.subsidiary_box = float(_box(args.box)) if isinstance(_box(args.box), float) else 1.1
    try:
        img = solve_subsidiary(S, ccfg)
    except SubsidiaryError as exc:
        print(f"no critical points: {exc}", file=err)
        return EXIT_NO_POINTS
    if args.json:
        d = {"objective": P.to_str(pt.names), "constraints": S.describe(pt.names),
             "image": image_dict(img)}
        out.write(dumps(d) + "\n")
    else:
        out.write(image_text(img))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        return cmd_analyze(args)
    return cmd_subsidiary(args)


if __name__ == "__main__":
    sys.exit(main())
