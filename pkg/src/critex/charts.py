"""Implicit-function charts on {G = 0} and derivatives of the reduced function.

A chart picks m "dependent" coordinates v whose Jacobian minor G'_v is
nonsingular; near the point the constraint set is the graph v = h(u) over the
remaining "independent" coordinates u.  The reduced function is
J(u) = f(u, h(u)).  Nothing here ever builds h symbolically: derivatives of h
come from differentiating K(u) = G(u, h(u)) == 0 at a single point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Sequence

from .expr import HomogeneousPolynomial, Poly, is_exact, parse_problem
from .linalg import det, inverse

RANK_TOL = 1e-9
CONSTRAINT_TOL = 1e-9


class ChartError(ValueError):
    pass


class SingularChartError(ChartError):
    """The dependent-variable minor is singular at the point."""


class ConstraintResidualError(ChartError):
    """The point does not satisfy G(X) = 0 within tolerance."""


@dataclass(frozen=True)
class ConstrainedProblem:
    objective: Poly
    constraints: tuple[Poly, ...] = ()
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        d = self.objective.nvars
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if any(g.nvars != d for g in self.constraints):
            raise ValueError("objective and constraints use different variable counts")
        if len(self.constraints) > d:
            raise ValueError("more constraints than variables")
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"x{i}" for i in range(d)))
        elif len(self.names) != d:
            raise ValueError("names do not match the variable count")

    @classmethod
    def from_text(cls, text: str) -> ConstrainedProblem:
        pt = parse_problem(text)
        return cls(pt.objective, pt.constraints, pt.names)

    @property
    def d(self) -> int:
        return self.objective.nvars

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def n(self) -> int:
        return self.d - self.m

    # cached symbolic derivatives

    @cached_property
    def grad_f(self) -> list[Poly]:
        return self.objective.gradient()

    @cached_property
    def hess_f(self) -> list[list[Poly]]:
        return [[g.diff(j) for j in range(self.d)] for g in self.grad_f]

    @cached_property
    def jac(self) -> list[list[Poly]]:
        return [g.gradient() for g in self.constraints]

    @cached_property
    def hess_g(self) -> list[list[list[Poly]]]:
        return [[[p.diff(j) for j in range(self.d)] for p in row] for row in self.jac]

    def constraint_residual(self, X: Sequence) -> float:
        """Largest |G_a(X)| relative to the size of its terms."""
        worst = 0.0
        for g in self.constraints:
            worst = max(worst, abs(float(g(X))) / max(1.0, g.magnitude(X)))
        return worst

    def jacobian_at(self, X: Sequence) -> list[list]:
        return [[p(X) for p in row] for row in self.jac]

    def describe(self) -> dict:
        return {
            "vars": list(self.names),
            "objective": self.objective.to_str(self.names),
            "constraints": [g.to_str(self.names) for g in self.constraints],
        }


@dataclass(frozen=True)
class Chart:
    dependent: tuple[int, ...]
    independent: tuple[int, ...]

    @classmethod
    def from_dependent(cls, dependent: Sequence[int], d: int) -> Chart:
        dep = tuple(sorted(dependent))
        return cls(dep, tuple(i for i in range(d) if i not in dep))

    def label(self, names: Sequence[str]) -> str:
        return "{" + ",".join(names[i] for i in self.dependent) + "}"


def _minor(jac_vals, dependent):
    return [[row[j] for j in dependent] for row in jac_vals]


def chart_strength(problem: ConstrainedProblem, chart: Chart, X: Sequence,
                   jac_vals=None) -> float:
    """|det G'_v| scaled by the largest row norm of G'(X), to the m-th power."""
    if problem.m == 0:
        return 1.0
    if jac_vals is None:
        jac_vals = problem.jacobian_at(X)
    rownorm = max(math.sqrt(sum(float(x) ** 2 for x in row)) for row in jac_vals)
    scale = max(1.0, rownorm) ** problem.m
    return abs(float(det(_minor(jac_vals, chart.dependent)))) / scale


def enumerate_charts(problem: ConstrainedProblem, X: Sequence,
                     rank_tol: float = RANK_TOL) -> list[Chart]:
    """All valid charts at X, strongest minor first; empty when rank G'(X) < m."""
    if len(X) != problem.d:
        raise ValueError(f"expected {problem.d} coordinates, got {len(X)}")
    if problem.m == 0:
        return [Chart((), tuple(range(problem.d)))]
    jac_vals = problem.jacobian_at(X)
    scored = []
    for dep in combinations(range(problem.d), problem.m):
        chart = Chart.from_dependent(dep, problem.d)
        s = chart_strength(problem, chart, X, jac_vals)
        if s > rank_tol:
            scored.append((-s, dep, chart))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in scored]


# ---------------------------------------------------------------------------
# truncated power series in the n independent offsets s = u - u0

Series = dict  # exponent tuple -> coefficient


def _unit(n: int, i: int) -> tuple[int, ...]:
    return tuple(int(j == i) for j in range(n))


def _series_mul(a: Series, b: Series, order: int) -> Series:
    out: Series = {}
    for ea, ca in a.items():
        da = sum(ea)
        for eb, cb in b.items():
            if da + sum(eb) > order:
                continue
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def _compose(p: Poly, subs: Sequence[Series], n: int, order: int) -> Series:
    """p(subs[0](s), ..., subs[d-1](s)) truncated at total degree ``order``."""
    zero = (0,) * n
    cache: list[dict[int, Series]] = [{0: {zero: 1}, 1: s} for s in subs]

    def power(j: int, e: int) -> Series:
        c = cache[j]
        if e not in c:
            c[e] = _series_mul(power(j, e - 1), subs[j], order)
        return c[e]

    out: Series = {}
    for mono, coeff in p.terms.items():
        term: Series = {zero: coeff}
        for j, e in enumerate(mono):
            if e:
                term = _series_mul(term, power(j, e), order)
                if not term:
                    break
        for k, v in term.items():
            out[k] = out.get(k, 0) + v
    return out


def _factorial_weight(e: Sequence[int]) -> int:
    w = 1
    for x in e:
        w *= math.factorial(x)
    return w


def _sorted_index(e: Sequence[int]) -> tuple[int, ...]:
    return tuple(i for i, k in enumerate(e) for _ in range(k))


# ---------------------------------------------------------------------------
# implicit jet


@dataclass(frozen=True)
class ImplicitJet:
    """Derivatives of h at one point, through order ``order``.

    ``h`` holds, per dependent coordinate, the Taylor coefficients of
    h(u0 + s) - v0 keyed by exponent tuples in s; derivatives are coefficient
    times the multi-index factorial.
    """

    point: tuple
    chart: Chart
    order: int
    minor: list
    ginv: list
    h: tuple[Series, ...]

    @property
    def n(self) -> int:
        return len(self.chart.independent)

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for x in self.point)

    def h_derivative(self, gamma: int, index: Sequence[int]):
        """d^k h_gamma / du_{i1}...du_{ik} for 0-based positions among u."""
        e = [0] * self.n
        for i in index:
            e[i] += 1
        if sum(e) > self.order:
            raise ValueError("jet order too small for this derivative")
        return self.h[gamma].get(tuple(e), 0) * _factorial_weight(e)

    def h_tensor(self, k: int) -> dict[tuple[int, ...], list]:
        """Sorted multi-index -> [d^k h_gamma for each dependent gamma]."""
        out = {}
        for idx in _multi_indices(self.n, k):
            out[idx] = [self.h_derivative(g, idx) for g in range(len(self.h))]
        return out

    def independent_point(self) -> tuple:
        return tuple(self.point[i] for i in self.chart.independent)


def _multi_indices(n: int, k: int):
    from itertools import combinations_with_replacement
    return list(combinations_with_replacement(range(n), k))


def implicit_jet(problem: ConstrainedProblem, chart: Chart, X: Sequence, order: int = 2,
                 constraint_tol: float = CONSTRAINT_TOL,
                 rank_tol: float = RANK_TOL) -> ImplicitJet:
    if order < 1:
        raise ValueError("jet order must be at least 1")
    X = tuple(X)
    if len(X) != problem.d:
        raise ValueError(f"expected {problem.d} coordinates, got {len(X)}")
    res = problem.constraint_residual(X)
    if res > constraint_tol:
        raise ConstraintResidualError(f"constraint residual {res:.3g} exceeds {constraint_tol:g}")
    m, n = problem.m, problem.n
    U, V = chart.independent, chart.dependent
    if m == 0:
        return ImplicitJet(X, chart, order, [], [], ())
    jac_vals = problem.jacobian_at(X)
    if chart_strength(problem, chart, X, jac_vals) <= rank_tol:
        raise SingularChartError(f"minor over {V} is singular at the point")
    minor = _minor(jac_vals, V)
    ginv = inverse(minor)

    # first order: h_{g,i} = -sum_a G^{ga} G_{a,i}
    Gu = [[jac_vals[a][i] for i in U] for a in range(m)]
    h1 = [[-sum((ginv[g][a] * Gu[a][i] for a in range(m)), 0) for i in range(n)]
          for g in range(m)]
    series: list[Series] = [{} for _ in range(m)]
    for g in range(m):
        for i in range(n):
            if h1[g][i] != 0:
                series[g][_unit(n, i)] = h1[g][i]

    if order >= 2:
        # second order from differentiating K twice:
        # h_{g,ij} = -sum_a G^{ga} (G_{a,ij} + G_{a,i mu} h_{mu,j} + G_{a,beta j} h_{beta,i}
        #                           + G_{a,beta nu} h_{beta,i} h_{nu,j})
        H = [[[problem.hess_g[a][p][q](X) for q in range(problem.d)] for p in range(problem.d)]
             for a in range(m)]
        for i in range(n):
            for j in range(i, n):
                ui, uj = U[i], U[j]
                K2 = []
                for a in range(m):
                    t = H[a][ui][uj]
                    for mu in range(m):
                        t = t + H[a][ui][V[mu]] * h1[mu][j] + H[a][V[mu]][uj] * h1[mu][i]
                        for nu in range(m):
                            t = t + H[a][V[mu]][V[nu]] * h1[mu][i] * h1[nu][j]
                    K2.append(t)
                e = tuple(x + y for x, y in zip(_unit(n, i), _unit(n, j)))
                w = _factorial_weight(e)
                for g in range(m):
                    hij = -sum((ginv[g][a] * K2[a] for a in range(m)), 0)
                    if hij != 0:
                        series[g][e] = hij / w if is_exact(hij) and w != 1 else (
                            hij if w == 1 else hij / w)

    for k in range(3, order + 1):
        series = _extend_series(problem, chart, X, ginv, series, k)

    return ImplicitJet(X, chart, order, minor, ginv, tuple(series))


def _substitutions(chart: Chart, X: Sequence, series: Sequence[Series], n: int) -> list[Series]:
    zero = (0,) * n
    subs: list[Series] = [None] * len(X)  # type: ignore[list-item]
    for pos, i in enumerate(chart.independent):
        s = {_unit(n, pos): 1}
        if X[i] != 0:
            s[zero] = X[i]
        subs[i] = s
    for g, v in enumerate(chart.dependent):
        s = dict(series[g])
        if X[v] != 0:
            s[zero] = X[v]
        subs[v] = s
    return subs


def _extend_series(problem, chart, X, ginv, series, k):
    """Order-k coefficients of h from the order-k part of K(u0+s) == 0.

    With h truncated below order k, the order-k part of G(u0+s, v0+h) is a
    residual R plus G'_v h_k, so h_k = -G'_v^{-1} R.
    """
    n, m = problem.n, problem.m
    subs = _substitutions(chart, X, series, n)
    R = []
    for g in problem.constraints:
        comp = _compose(g, subs, n, k)
        R.append({e: c for e, c in comp.items() if sum(e) == k})
    out = [dict(s) for s in series]
    keys = set().union(*[r.keys() for r in R])
    for e in keys:
        for gamma in range(m):
            val = -sum((ginv[gamma][a] * R[a].get(e, 0) for a in range(m)), 0)
            if val != 0:
                out[gamma][e] = val
    return out


def implicit_series_from_scratch(problem: ConstrainedProblem, chart: Chart, X: Sequence,
                                 order: int) -> tuple[Series, ...]:
    """h coefficients from the order-by-order recursion alone, first order up.

    Independent of the closed-form first and second order formulas; used to
    cross-check them.
    """
    m = problem.m
    jac_vals = problem.jacobian_at(X)
    ginv = inverse(_minor(jac_vals, chart.dependent))
    series: list[Series] = [{} for _ in range(m)]
    for k in range(1, order + 1):
        series = _extend_series(problem, chart, tuple(X), ginv, series, k)
    return tuple(series)


# ---------------------------------------------------------------------------
# reduced function


def reduced_gradient(problem: ConstrainedProblem, jet: ImplicitJet) -> list:
    """J_i = f_i - sum_{a,b} f_a G^{ab} G_{b,i}, written through h_{a,i}."""
    X = jet.point
    U, V = jet.chart.independent, jet.chart.dependent
    fx = [g(X) for g in problem.grad_f]
    out = []
    for pos, i in enumerate(U):
        t = fx[i]
        for g, v in enumerate(V):
            t = t + fx[v] * jet.h_derivative(g, (pos,))
        out.append(t)
    return out


def reduced_hessian(problem: ConstrainedProblem, jet: ImplicitJet) -> list[list]:
    if jet.order < 2:
        raise ValueError("reduced Hessian needs a jet of order >= 2")
    X = jet.point
    U, V = jet.chart.independent, jet.chart.dependent
    n = len(U)
    fx = [g(X) for g in problem.grad_f]
    fxx = [[p(X) for p in row] for row in problem.hess_f]
    h1 = [[jet.h_derivative(g, (i,)) for i in range(n)] for g in range(len(V))]
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            ui, uj = U[i], U[j]
            t = fxx[ui][uj]
            for a, va in enumerate(V):
                t = t + fxx[ui][va] * h1[a][j] + fxx[va][uj] * h1[a][i]
                for b, vb in enumerate(V):
                    t = t + fxx[va][vb] * h1[a][i] * h1[b][j]
                t = t + fx[va] * jet.h_derivative(a, (i, j))
            out[i][j] = out[j][i] = t
    return out


def reduced_series(problem: ConstrainedProblem, jet: ImplicitJet, order: int) -> Series:
    """Taylor coefficients of J(u0 + s) through ``order`` (constant included)."""
    if order > jet.order:
        raise ValueError(f"jet of order {jet.order} cannot give order {order}")
    n = jet.n
    subs = _substitutions(jet.chart, jet.point, jet.h, n)
    return _compose(problem.objective, subs, n, order)


def reduced_derivative_tensor(problem: ConstrainedProblem, jet: ImplicitJet,
                              order: int) -> dict[tuple[int, ...], object]:
    """All order-r partials of J at the point, keyed by sorted index tuple."""
    if order < 1:
        raise ValueError("order must be at least 1")
    coeffs = reduced_series(problem, jet, order)
    out = {}
    for idx in _multi_indices(jet.n, order):
        e = [0] * jet.n
        for i in idx:
            e[i] += 1
        c = coeffs.get(tuple(e), 0)
        out[idx] = c * _factorial_weight(e)
    return out


def reduced_taylor_components(problem: ConstrainedProblem, jet: ImplicitJet,
                              k_max: int) -> dict[int, HomogeneousPolynomial]:
    """Nonzero homogeneous components of J, degrees 1..k_max, in n variables."""
    coeffs = reduced_series(problem, jet, k_max)
    n = jet.n
    center = jet.independent_point()
    out = {}
    for k in range(1, k_max + 1):
        part = Poly(n, {e: c for e, c in coeffs.items() if sum(e) == k})
        if not part.is_zero():
            out[k] = HomogeneousPolynomial(k, center, part)
    return out


def best_chart(problem: ConstrainedProblem, X: Sequence, rank_tol: float = RANK_TOL) -> Chart:
    charts = enumerate_charts(problem, X, rank_tol)
    if not charts:
        raise SingularChartError("rank G'(X) < m: no chart is valid at the point")
    return charts[0]


def as_exact(x):
    """Fraction for ints, identity otherwise."""
    return Fraction(x) if isinstance(x, int) else x
