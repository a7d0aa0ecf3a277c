"""Classification of critical points.

The Hessian of the reduced function decides the nondegenerate cases.  When it
is singular, the point is settled by the Higher Derivative Test: the leading
homogeneous Taylor component P_k is studied on the unit sphere, and if its
image touches zero the next components are examined on the zero set, which
shrinks with every descent step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charts import (ConstrainedProblem, best_chart, implicit_jet, reduced_hessian,
                     reduced_taylor_components)
from .expr import HomogeneousPolynomial, Poly, is_exact, sphere, taylor_components
from .linalg import symmetric_inertia
from .solver import CriticalPoint, Family, SearchConfig, search


class Verdict(str, Enum):
    STRICT_MIN = "StrictMin"
    STRICT_MAX = "StrictMax"
    SADDLE = "Saddle"
    NONSTRICT_MIN = "NonStrictMin"
    NONSTRICT_MAX = "NonStrictMax"
    INDETERMINATE = "Indeterminate"

    def mirrored(self) -> Verdict:
        swap = {Verdict.STRICT_MIN: Verdict.STRICT_MAX, Verdict.STRICT_MAX: Verdict.STRICT_MIN,
                Verdict.NONSTRICT_MIN: Verdict.NONSTRICT_MAX,
                Verdict.NONSTRICT_MAX: Verdict.NONSTRICT_MIN}
        return swap.get(self, self)

    @property
    def is_min(self) -> bool:
        return self in (Verdict.STRICT_MIN, Verdict.NONSTRICT_MIN)

    @property
    def is_max(self) -> bool:
        return self in (Verdict.STRICT_MAX, Verdict.NONSTRICT_MAX)


@dataclass
class ClassifyConfig:
    k_max: int = 10
    depth_max: int = 4
    eig_rel_tol: float = 1e-8
    value_tol: float = 1e-9
    subsidiary_budget: int = 8000
    subsidiary_box: float = 1.1


@dataclass
class EvidenceStep:
    stage: str
    degree: int
    case: str
    interval: tuple | None = None
    eigenvalues: list[float] | None = None
    constraints: list[str] = field(default_factory=list)
    depth: int = 0
    note: str = ""


@dataclass
class Classification:
    verdict: Verdict
    evidence: list[EvidenceStep] = field(default_factory=list)
    reason: str = ""
    heuristic: bool = False

    @property
    def case(self) -> str:
        return self.evidence[-1].case if self.evidence else ""


class SubsidiaryError(RuntimeError):
    """No real critical point of a subsidiary problem was found."""


@dataclass(frozen=True)
class SubsidiaryProblem:
    """A homogeneous objective on the unit sphere cut by earlier components.

    Coordinates are offsets from the critical point.  ``points`` is set when
    the variety is already known to be a finite set; then no solve is needed.
    """

    objective: HomogeneousPolynomial
    constraints: tuple[Poly, ...]
    center: tuple = ()
    points: tuple[tuple, ...] | None = None
    complete: bool = True
    fallback: tuple[tuple, ...] = ()

    def __post_init__(self):
        n = self.objective.nvars
        if not self.constraints or self.constraints[0] != sphere(n):
            raise ValueError("the first constraint must be the unit sphere")

    @classmethod
    def on_sphere(cls, P: HomogeneousPolynomial | Poly, center: Sequence = ()) -> SubsidiaryProblem:
        if isinstance(P, Poly):
            P = HomogeneousPolynomial(P.degree, (Fraction(0),) * P.nvars, P)
        return cls(P.centered(), (sphere(P.nvars),), tuple(center))

    @property
    def nvars(self) -> int:
        return self.objective.nvars

    def describe(self, names: Sequence[str] | None = None) -> list[str]:
        out = [c.to_str(names) for c in self.constraints]
        if self.points is not None:
            out.append(f"finite set of {len(self.points)} points")
        return out


@dataclass
class IntervalImage:
    a: object
    b: object
    min_witnesses: list[tuple]
    max_witnesses: list[tuple]
    zero_witnesses: list[tuple]
    zero_families: list[list[tuple]]
    critical_values: list
    exact: bool
    complete: bool = True

    @property
    def zero_set_finite(self) -> bool:
        return not self.zero_families

    def zero_points(self) -> list[tuple]:
        return list(self.zero_witnesses) + [s for fam in self.zero_families for s in fam]


# ---------------------------------------------------------------------------
# helpers


def _sign(v, scale: float, tol: float) -> int:
    if is_exact(v):
        return (v > 0) - (v < 0)
    f = float(v)
    if abs(f) <= tol * max(1.0, scale):
        return 0
    return 1 if f > 0 else -1


def _coeff_scale(P: HomogeneousPolynomial) -> float:
    return max((abs(float(c)) for c in P.poly.terms.values()), default=0.0)


def _fmt(v):
    return v if is_exact(v) else float(v)


# ---------------------------------------------------------------------------
# second derivative test


def second_derivative_test(H: Sequence[Sequence], eig_rel_tol: float = 1e-8) -> Classification:
    n = len(H)
    if n == 0:
        return Classification(Verdict.INDETERMINATE, [EvidenceStep("hessian", 2, "empty")],
                              reason="zero-dimensional constraint set")
    eig = np.linalg.eigvalsh(np.array(H, dtype=float))
    rho = float(np.max(np.abs(eig)))
    tol = eig_rel_tol * (1 + rho)
    pos, neg, zero, eig = symmetric_inertia(H, tol)
    step = EvidenceStep("hessian", 2, "", eigenvalues=[float(e) for e in eig])
    if zero:
        step.case = "degenerate"
        return Classification(Verdict.INDETERMINATE, [step], reason="singular Hessian")
    if pos and neg:
        step.case = "mixed"
        return Classification(Verdict.SADDLE, [step])
    step.case = "definite"
    return Classification(Verdict.STRICT_MIN if pos else Verdict.STRICT_MAX, [step])


# ---------------------------------------------------------------------------
# re-expression of degenerate constraints


@dataclass(frozen=True)
class Reexpression:
    constraints: tuple[Poly, ...]
    rule: str

    @property
    def complete(self) -> bool:
        return self.rule != "unchanged"


def _even_power_sum(p: Poly) -> list[int] | None:
    """Variables of p when p = sum c_i x_i^(2 e_i) with one sign and distinct x_i."""
    if p.is_zero() or p.constant_term() != 0:
        return None
    seen = []
    signs = set()
    for mono, c in p.terms.items():
        nz = [i for i, e in enumerate(mono) if e]
        if len(nz) != 1 or mono[nz[0]] % 2 or nz[0] in seen:
            return None
        seen.append(nz[0])
        signs.add(float(c) > 0)
    return sorted(seen) if len(signs) == 1 else None


def _lex_lead(p: Poly):
    mono = max(p.terms)
    return mono, p.terms[mono]


def _rational_root(c, e: int):
    """Exact e-th root of a positive rational, or None."""
    if not isinstance(c, (int, Fraction)) or c <= 0:
        return None
    c = Fraction(c)
    num = round(c.numerator ** (1.0 / e))
    den = round(c.denominator ** (1.0 / e))
    for a in (num - 1, num, num + 1):
        for b in (den - 1, den, den + 1):
            if a > 0 and b > 0 and Fraction(a, b) ** e == c:
                return Fraction(a, b)
    return None


def perfect_power_root(p: Poly) -> tuple[Poly, int] | None:
    """(q, e) with p == c * q^e for a constant c and the largest e >= 2."""
    if p.is_zero() or not p.is_exact():
        return None
    deg = p.degree
    mono, lc = _lex_lead(p)
    r = p * (Fraction(1) / lc)
    for e in range(deg, 1, -1):
        if deg % e or any(x % e for x in mono):
            continue
        q_terms = {tuple(x // e for x in mono): Fraction(1)}
        q = Poly(p.nvars, q_terms)
        lead_m = tuple(x // e for x in mono)
        for _ in range(4 * len(p.terms) + 8):
            diff = r - q**e
            if diff.is_zero():
                return q, e
            dm, dc = _lex_lead(diff)
            # next term of q: lt(diff) / (e * lt(q)^(e-1))
            denom = tuple((e - 1) * x for x in lead_m)
            new = tuple(a - b for a, b in zip(dm, denom))
            if any(x < 0 for x in new) or new >= lead_m or sum(new) > deg // e:
                break
            q = q + Poly(p.nvars, {new: dc / e})
    return None


def reexpress_degenerate(constraint: HomogeneousPolynomial | Poly) -> Reexpression:
    """Replace a rank-deficient constraint by one with the same real zero set.

    Two syntactic rules: a same-signed sum of even pure powers of distinct
    variables becomes {x_i = 0}; an exact perfect power c*q^e becomes q.
    Anything else is returned unchanged and marked incomplete.
    """
    p = constraint.poly if isinstance(constraint, HomogeneousPolynomial) else constraint
    vars_ = _even_power_sum(p)
    if vars_ is not None:
        return Reexpression(tuple(Poly.var(p.nvars, i) for i in vars_), "even-power-sum")
    root = perfect_power_root(p)
    if root is not None:
        q, _ = root
        inner = reexpress_degenerate(q)
        if inner.rule == "even-power-sum":
            return inner
        if q.degree == 1 or inner.rule == "unchanged":
            return Reexpression((q,), "perfect-power")
        return Reexpression(inner.constraints, "perfect-power")
    if p.degree == 1:
        return Reexpression((p,), "linear")
    return Reexpression((p,), "unchanged")


# ---------------------------------------------------------------------------
# subsidiary problems


def _sphere_extra_seeds(n: int) -> tuple[tuple[float, ...], ...]:
    out = []
    for i in range(n):
        for s in (1.0, -1.0):
            v = [0.0] * n
            v[i] = s
            out.append(tuple(v))
    r = 1 / math.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            for si in (r, -r):
                for sj in (r, -r):
                    v = [0.0] * n
                    v[i], v[j] = si, sj
                    out.append(tuple(v))
    return tuple(out)


def _image_from_values(P: HomogeneousPolynomial, items: list[tuple[tuple, object, int | None]],
                       tol: float, complete: bool) -> IntervalImage:
    """items: (point, value, family id or None)."""
    if not items:
        raise SubsidiaryError("no real critical points found on the subsidiary variety")
    scale = _coeff_scale(P)
    vals = [v for _, v, _ in items]
    exact = all(is_exact(v) for v in vals)
    if exact:
        a, b = min(vals), max(vals)
    else:
        a = min(vals, key=float)
        b = max(vals, key=float)

    def same(v, w):
        if is_exact(v) and is_exact(w):
            return v == w
        return abs(float(v) - float(w)) <= tol * max(1.0, scale)

    mins = [X for X, v, _ in items if same(v, a)]
    maxs = [X for X, v, _ in items if same(v, b)]
    zeros = [X for X, v, fid in items if fid is None and _sign(v, scale, tol) == 0]
    fams: dict[int, list] = {}
    for X, v, fid in items:
        if fid is not None and _sign(v, scale, tol) == 0:
            fams.setdefault(fid, []).append(X)
    # snap endpoints that are zero to exact zero
    if _sign(a, scale, tol) == 0:
        a = Fraction(0) if exact else 0.0
    if _sign(b, scale, tol) == 0:
        b = Fraction(0) if exact else 0.0
    cvals = sorted({_fmt(v) for v in vals}, key=float)
    return IntervalImage(a, b, mins, maxs, zeros, list(fams.values()), cvals, exact, complete)


def solve_subsidiary(S: SubsidiaryProblem, cfg: ClassifyConfig | None = None) -> IntervalImage:
    cfg = cfg or ClassifyConfig()
    P = S.objective
    n = S.nvars
    if S.points is not None:
        items = [(X, P.at_offset(X), None) for X in S.points]
        return _image_from_values(P, items, cfg.value_tol, S.complete)
    if n == 1:
        # S^0 = {+1, -1}; every further constraint is checked directly
        pts = [(Fraction(1),), (Fraction(-1),)]
        pts = [X for X in pts if all(g(X) == 0 for g in S.constraints)]
        items = [(X, P.at_offset(X), None) for X in pts]
        return _image_from_values(P, items, cfg.value_tol, S.complete)
    try:
        problem = ConstrainedProblem(P.poly, tuple(S.constraints))
    except ValueError as exc:
        return _fallback(S, cfg, str(exc))
    scfg = SearchConfig(box=cfg.subsidiary_box, seed_budget=cfg.subsidiary_budget,
                        extra_seeds=_sphere_extra_seeds(n))
    res = search(problem, scfg)
    items = [(p.X, P.at_offset(p.X), None) for p in res.isolated]
    for fam in res.families:
        items.extend((X, P.at_offset(X), fam.id) for X in fam.samples)
    if not items:
        return _fallback(S, cfg, "no critical points")
    return _image_from_values(P, items, cfg.value_tol, S.complete)


def _fallback(S: SubsidiaryProblem, cfg: ClassifyConfig, why: str) -> IntervalImage:
    # evaluate on the points known from the previous stage that satisfy the constraints
    P = S.objective
    pts = []
    for X in S.fallback:
        if all(_sign(g(X), 1.0, 1e-8) == 0 for g in S.constraints):
            pts.append(X)
    if not pts:
        raise SubsidiaryError(f"subsidiary solve failed: {why}")
    items = [(X, P.at_offset(X), None) for X in pts]
    return _image_from_values(P, items, cfg.value_tol, complete=False)


def zero_set_descent(prev: SubsidiaryProblem, zeros: IntervalImage | Sequence[tuple],
                     next_P: HomogeneousPolynomial | None = None) -> SubsidiaryProblem:
    """Restrict to the zero set of ``prev.objective`` and attach the next component.

    A finite zero set is carried as explicit points; otherwise the previous
    objective is appended, re-expressed when possible, as a constraint.
    """
    if isinstance(zeros, IntervalImage):
        finite = zeros.zero_set_finite
        pts = zeros.zero_points()
    else:
        pts = list(zeros)
        finite = True
    obj = next_P.centered() if next_P is not None else prev.objective
    if finite:
        return SubsidiaryProblem(obj, prev.constraints, prev.center, tuple(pts), prev.complete,
                                 tuple(pts))
    rx = reexpress_degenerate(prev.objective)
    cons = prev.constraints + tuple(c for c in rx.constraints if c not in prev.constraints)
    return SubsidiaryProblem(obj, cons, prev.center, None, prev.complete and rx.complete,
                             tuple(pts))


# ---------------------------------------------------------------------------
# higher derivative test


def _dispatch_interval(img: IntervalImage, scale: float, tol: float) -> str:
    sa, sb = _sign(img.a, scale, tol), _sign(img.b, scale, tol)
    if sa > 0:
        return "c1"
    if sb < 0:
        return "c2"
    if sa < 0 and sb > 0:
        return "c3"
    if sa == 0 and sb > 0:
        return "c4"
    if sa < 0 and sb == 0:
        return "c5"
    return "flat"


def _negate(img: IntervalImage) -> IntervalImage:
    return replace(img, a=-img.b, b=-img.a, min_witnesses=img.max_witnesses,
                   max_witnesses=img.min_witnesses)


def components_test(components: dict[int, HomogeneousPolynomial], k_max: int = 10,
                    depth_max: int = 4, cfg: ClassifyConfig | None = None,
                    tail_known: bool = False, names: Sequence[str] | None = None) -> Classification:
    """Higher Derivative Test given the homogeneous components (offset form)."""
    cfg = cfg or ClassifyConfig()
    tol = cfg.value_tol
    ks = sorted(k for k, P in components.items() if 2 <= k <= k_max and not P.poly.is_zero())
    # float round-off leaves tiny components behind at inexact points
    top = max([1.0] + [_coeff_scale(components[k]) for k in ks])
    ks = [k for k in ks if components[k].poly.is_exact() or _coeff_scale(components[k]) > tol * top]
    if not ks:
        return Classification(Verdict.INDETERMINATE, [EvidenceStep("P_k", k_max, "flat")],
                              reason=f"flat to order {k_max}")
    k = ks[0]
    Pk = components[k].centered()
    sub = SubsidiaryProblem.on_sphere(Pk)
    if k % 2:
        step = EvidenceStep("P_k", k, "odd", constraints=sub.describe(names))
        return Classification(Verdict.SADDLE, [step])
    img = solve_subsidiary(sub, cfg)
    scale = _coeff_scale(Pk)
    case = _dispatch_interval(img, scale, tol)
    evidence = [EvidenceStep("P_k", k, case, (_fmt(img.a), _fmt(img.b)),
                             constraints=sub.describe(names))]
    if case == "c1":
        return Classification(Verdict.STRICT_MIN, evidence)
    if case == "c2":
        return Classification(Verdict.STRICT_MAX, evidence)
    if case == "c3":
        return Classification(Verdict.SADDLE, evidence)
    if case == "flat":
        return Classification(Verdict.INDETERMINATE, evidence, reason="interval collapsed to zero")

    # c4, or c5 handled as c4 for -f with verdicts mirrored
    sign = 1 if case == "c4" else -1
    prefix = "c4" if sign > 0 else "c5"
    Z = zero_set_descent(sub, img)
    heuristic = not img.complete or not tail_known
    depth = 1
    for l in ks[1:]:
        Pl = components[l].centered()
        probe = replace(Z, objective=Pl)
        try:
            im = solve_subsidiary(probe, cfg)
        except SubsidiaryError as exc:
            evidence.append(EvidenceStep("P_k", l, "failed", depth=depth, note=str(exc),
                                         constraints=probe.describe(names)))
            return Classification(Verdict.INDETERMINATE, evidence, reason=str(exc), heuristic=True)
        if sign < 0:
            im = _negate(im)
        heuristic = heuristic or not im.complete
        sc = _coeff_scale(Pl)
        sa, sb = _sign(im.a, sc, tol), _sign(im.b, sc, tol)
        shown = (_fmt(im.a), _fmt(im.b)) if sign > 0 else (_fmt(-im.b), _fmt(-im.a))
        step = EvidenceStep("P_k", l, "", shown, constraints=probe.describe(names), depth=depth)
        evidence.append(step)
        if sa == 0 and sb == 0:
            step.case = f"{prefix}1-vanishes"
            continue
        if l % 2:
            step.case = f"{prefix}2"
            return Classification(Verdict.SADDLE, evidence, heuristic=heuristic)
        if sa > 0:
            step.case = f"{prefix}3"
            v = Verdict.STRICT_MIN if sign > 0 else Verdict.STRICT_MAX
            return Classification(v, evidence, heuristic=heuristic)
        if sa < 0:
            step.case = f"{prefix}4"
            return Classification(Verdict.SADDLE, evidence, heuristic=heuristic)
        step.case = f"{prefix}5"
        depth += 1
        if depth > depth_max:
            return Classification(Verdict.INDETERMINATE, evidence,
                                  reason=f"descent depth cap {depth_max} reached", heuristic=heuristic)
        Z = zero_set_descent(probe, im)
        heuristic = heuristic or not Z.complete
    v = Verdict.NONSTRICT_MIN if sign > 0 else Verdict.NONSTRICT_MAX
    note = ("every later component up to the cap vanishes on the zero set"
            if not tail_known else "every later component vanishes on the zero set")
    evidence.append(EvidenceStep("P_k", max(ks[-1], k), f"{prefix}1", depth=depth, note=note))
    return Classification(v, evidence, heuristic=heuristic)


def higher_derivative_test(P: ConstrainedProblem | Poly, X0: Sequence, k_max: int = 10,
                           depth_max: int = 4, cfg: ClassifyConfig | None = None,
                           chart=None) -> Classification:
    cfg = cfg or ClassifyConfig()
    comps, tail_known, names = _components(P, X0, k_max, chart)
    return components_test(comps, k_max, depth_max, cfg, tail_known, names)


def _components(P, X0, k_max, chart=None):
    if isinstance(P, Poly):
        comps = {c.degree: c for c in taylor_components(P, X0, k_max)}
        return comps, P.degree <= k_max, None
    if P.m == 0:
        comps = {c.degree: c for c in taylor_components(P.objective, X0, k_max)}
        return comps, P.objective.degree <= k_max, P.names
    chart = chart or best_chart(P, X0)
    jet = implicit_jet(P, chart, X0, order=k_max)
    names = [P.names[i] for i in chart.independent]
    return reduced_taylor_components(P, jet, k_max), False, names


def classify_point(P: ConstrainedProblem, cp: CriticalPoint | Sequence,
                   cfg: ClassifyConfig | None = None) -> Classification:
    cfg = cfg or ClassifyConfig()
    if isinstance(cp, CriticalPoint):
        X, chart = cp.X, cp.chart
    else:
        X, chart = tuple(cp), None
    if P.m == 0:
        H = [[h(X) for h in row] for row in P.hess_f]
    else:
        if P.n == 0:
            return Classification(Verdict.INDETERMINATE, [EvidenceStep("hessian", 2, "empty")],
                                  reason="zero-dimensional constraint set")
        chart = chart or best_chart(P, X)
        H = reduced_hessian(P, implicit_jet(P, chart, X, order=2))
    first = second_derivative_test(H, cfg.eig_rel_tol)
    if first.verdict is not Verdict.INDETERMINATE:
        return first
    rest = higher_derivative_test(P, X, cfg.k_max, cfg.depth_max, cfg, chart)
    return Classification(rest.verdict, first.evidence + rest.evidence, rest.reason, rest.heuristic)


@dataclass
class FamilyClassification:
    family_id: int
    samples: list[tuple]
    verdicts: list[Classification]

    def summary(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.verdicts:
            out[c.verdict.value] = out.get(c.verdict.value, 0) + 1
        return out


def classify_family(P: ConstrainedProblem, family: Family, cfg: ClassifyConfig | None = None,
                    max_samples: int = 9) -> FamilyClassification:
    """Classify a spread of samples along a family independently."""
    cfg = cfg or ClassifyConfig()
    samples = family.samples
    if len(samples) > max_samples:
        idx = np.unique(np.linspace(0, len(samples) - 1, max_samples).round().astype(int))
        samples = [samples[i] for i in idx]
    out = []
    for X in samples:
        try:
            out.append(classify_point(P, X, cfg))
        except Exception as exc:  # a sample may sit where no chart is valid
            out.append(Classification(Verdict.INDETERMINATE, reason=str(exc)))
    return FamilyClassification(family.id, list(samples), out)
