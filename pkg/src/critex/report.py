"""Assemble analysis results into a deterministic report.

Dictionaries are built in a fixed key order and serialised without sorting,
so identical input gives byte-identical JSON.  Floats are written with
Python's shortest round-trip repr; exact rationals also carry a "p/q" string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charts import ConstrainedProblem
from .classify import (Classification, ClassifyConfig, FamilyClassification, IntervalImage,
                       classify_family, classify_point)
from .lagrange import (OracleResult, StationarityError, bordered_hessian_oracle, oracle_agrees,
                       recover_multipliers)
from .solver import CriticalPoint, SearchConfig, SearchResult, search


class ToleranceFailure(RuntimeError):
    pass


def num(v) -> float:
    return float(v)


def exact_str(v) -> str | None:
    if isinstance(v, (int, Fraction)):
        f = Fraction(v)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    return None


def vec(values: Sequence) -> dict:
    out = {"value": [num(v) for v in values]}
    ex = [exact_str(v) for v in values]
    out["exact"] = ex if all(e is not None for e in ex) else None
    return out


def scalar(v) -> dict:
    return {"value": num(v), "exact": exact_str(v)}


def classification_dict(c: Classification) -> dict:
    return {
        "verdict": c.verdict.value,
        "reason": c.reason,
        "heuristic": c.heuristic,
        "evidence": [
            {
                "stage": e.stage,
                "degree": e.degree,
                "case": e.case,
                "interval": None if e.interval is None else [scalar(v) for v in e.interval],
                "eigenvalues": e.eigenvalues,
                "constraints": list(e.constraints),
                "depth": e.depth,
                "note": e.note,
            }
            for e in c.evidence
        ],
    }


@dataclass
class PointAnalysis:
    point: CriticalPoint
    classification: Classification
    multipliers: tuple | None = None
    oracle: OracleResult | None = None
    agrees: bool | None = None


@dataclass
class Analysis:
    problem: ConstrainedProblem
    search: SearchResult
    points: list[PointAnalysis] = field(default_factory=list)
    families: list[FamilyClassification] = field(default_factory=list)
    config: dict = field(default_factory=dict)


def analyze(problem: ConstrainedProblem, scfg: SearchConfig | None = None,
            ccfg: ClassifyConfig | None = None, family_samples: int = 9) -> Analysis:
    scfg = scfg or SearchConfig()
    ccfg = ccfg or ClassifyConfig()
    res = search(problem, scfg)
    out = Analysis(problem, res, config={
        "box": [list(map(float, b)) for b in scfg.bounds(problem.d)],
        "seeds_per_axis": scfg.axis_count(problem.d),
        "constraint_tol": scfg.constraint_tol,
        "gradient_tol": scfg.gradient_tol,
        "dedup_radius": scfg.dedup_radius,
        "k_max": ccfg.k_max,
        "depth_max": ccfg.depth_max,
    })
    for cp in res.isolated:
        c = classify_point(problem, cp, ccfg)
        pa = PointAnalysis(cp, c)
        if problem.m:
            try:
                lam = recover_multipliers(problem, cp)
            except StationarityError as exc:
                raise ToleranceFailure(str(exc)) from exc
            pa.multipliers = lam.values
            pa.oracle = bordered_hessian_oracle(problem, cp, lam)
            pa.agrees = oracle_agrees(pa.oracle, c)
        out.points.append(pa)
    for fam in res.families:
        out.families.append(classify_family(problem, fam, ccfg, family_samples))
    return out


def analysis_dict(a: Analysis) -> dict:
    P = a.problem
    names = list(P.names)
    charts = []
    for st in a.search.stats:
        charts.append({
            "dependent": [names[i] for i in st.chart.dependent],
            "skipped": st.skipped,
            "seeds": st.seeds,
            "converged": st.converged,
            "accepted": st.accepted,
        })
    points = []
    for pa in a.points:
        cp = pa.point
        fval = P.objective(cp.X)
        entry = {
            "coords": vec(cp.X),
            "objective": scalar(fval),
            "chart": [names[i] for i in cp.chart.dependent],
            "constraint_residual": cp.constraint_residual,
            "gradient_residual": cp.gradient_residual,
            "rank": cp.rank,
            "classification": classification_dict(pa.classification),
            "multipliers": None if pa.multipliers is None else vec(pa.multipliers),
            "oracle": None,
        }
        if pa.oracle is not None:
            entry["oracle"] = {
                "verdict": pa.oracle.verdict.value,
                "minors": {str(r): scalar(v) for r, v in pa.oracle.minors.items()},
                "agrees": pa.agrees,
                "note": "oracle, best-effort",
            }
        points.append(entry)
    families = []
    fam_by_id = {f.id: f for f in a.search.families}
    for fc in a.families:
        fam = fam_by_id[fc.family_id]
        families.append({
            "id": fam.id,
            "dimension": fam.dimension,
            "members": fam.member_count,
            "samples": [vec(s) for s in fam.samples],
            "tangents": [[list(map(float, t)) for t in np.atleast_2d(tg)] for tg in fam.tangents],
            "classified_samples": [
                {"coords": vec(X), "classification": classification_dict(c)}
                for X, c in zip(fc.samples, fc.verdicts)
            ],
            "summary": fc.summary(),
        })
    return {
        "problem": P.describe(),
        "config": a.config,
        "charts": charts,
        "points": points,
        "families": families,
        "stats": {
            "isolated_points": len(a.points),
            "families": len(families),
            "family_members": sum(f.member_count for f in a.search.families),
        },
    }


def image_dict(img: IntervalImage) -> dict:
    return {
        "a": scalar(img.a),
        "b": scalar(img.b),
        "exact": img.exact,
        "complete": img.complete,
        "min_witnesses": [vec(X) for X in img.min_witnesses],
        "max_witnesses": [vec(X) for X in img.max_witnesses],
        "zero_set": {
            "isolated": [vec(X) for X in img.zero_witnesses],
            "families": [[vec(X) for X in fam] for fam in img.zero_families],
        },
        "critical_values": [scalar(v) for v in img.critical_values],
    }


def dumps(d: dict) -> str:
    return json.dumps(d, indent=2, ensure_ascii=False, allow_nan=False)


# ---------------------------------------------------------------------------
# human-readable text


def _fmt(v) -> str:
    s = exact_str(v)
    return s if s is not None else f"{float(v):.10g}"


def _coords(X) -> str:
    return "(" + ", ".join(_fmt(x) for x in X) + ")"


def analysis_text(a: Analysis) -> str:
    P = a.problem
    names = list(P.names)
    lines = [f"objective: {P.objective.to_str(names)}"]
    for g in P.constraints:
        lines.append(f"constraint: {g.to_str(names)} = 0")
    lines.append("")
    lines.append(f"{len(a.points)} isolated critical point(s), {len(a.families)} family(ies)")
    for k, pa in enumerate(a.points, 1):
        cp, c = pa.point, pa.classification
        tag = " (heuristic)" if c.heuristic else ""
        lines.append(f"[{k}] {_coords(cp.X)}  f = {_fmt(P.objective(cp.X))}  "
                     f"{c.verdict.value}{tag}")
        chain = ", ".join(f"{e.stage}/{e.degree}:{e.case}" for e in c.evidence)
        lines.append(f"    chart {{{','.join(names[i] for i in cp.chart.dependent)}}}; evidence {chain}")
        if pa.multipliers is not None:
            lines.append(f"    multipliers {_coords(pa.multipliers)}")
        if pa.oracle is not None:
            agree = {None: "not decisive", True: "agrees", False: "DISAGREES"}[pa.agrees]
            lines.append(f"    bordered Hessian oracle: {pa.oracle.verdict.value} ({agree})")
    fam_by_id = {f.id: f for f in a.search.families}
    for fc in a.families:
        fam = fam_by_id[fc.family_id]
        lines.append(f"family {fam.id}: dimension {fam.dimension}, {fam.member_count} member(s), "
                     f"{len(fam.samples)} sample(s)")
        for X, c in zip(fc.samples, fc.verdicts):
            lines.append(f"    {_coords(X)}  {c.verdict.value}")
    return "\n".join(lines) + "\n"


def _listing(points, limit: int = 6) -> str:
    s = ", ".join(_coords(X) for X in points[:limit])
    if len(points) > limit:
        s += f", ... ({len(points) - limit} more)"
    return s


def image_text(img: IntervalImage) -> str:
    lines = [f"image: [{_fmt(img.a)}, {_fmt(img.b)}]"]
    lines.append("minimisers: " + _listing(img.min_witnesses))
    lines.append("maximisers: " + _listing(img.max_witnesses))
    if img.zero_witnesses:
        lines.append("isolated zeros: " + _listing(img.zero_witnesses))
    for fam in img.zero_families:
        lines.append(f"zero family sampled at {len(fam)} point(s)")
    if not img.complete:
        lines.append("note: a constraint could not be re-expressed; image may be incomplete")
    return "\n".join(lines) + "\n"
