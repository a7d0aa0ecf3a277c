"""Lagrange multipliers recovered after the fact, and a bordered-Hessian oracle.

Nothing in the main pipeline depends on this module; it only cross-checks
the multiplier-free classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .charts import Chart, ConstrainedProblem, SingularChartError, best_chart, chart_strength
from .classify import Classification, Verdict
from .expr import is_exact
from .linalg import det, inverse
from .solver import CriticalPoint

STATIONARITY_TOL = 1e-6
MINOR_TOL = 1e-9


class StationarityError(RuntimeError):
    pass


@dataclass(frozen=True)
class MultiplierVector:
    values: tuple
    point: tuple
    chart: Chart
    residual: float

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _unpack(P: ConstrainedProblem, cp, chart):
    if isinstance(cp, CriticalPoint):
        return tuple(cp.X), chart or cp.chart
    X = tuple(cp)
    return X, chart or best_chart(P, X)


def recover_multipliers(P: ConstrainedProblem, cp: CriticalPoint | Sequence,
                        chart: Chart | None = None) -> MultiplierVector:
    """lambda = -f_V (G'_V)^{-1}, checked against the full stationarity equation."""
    X, chart = _unpack(P, cp, chart)
    if P.m == 0:
        return MultiplierVector((), X, chart, 0.0)
    if chart_strength(P, chart, X) <= 1e-12:
        raise SingularChartError("dependent minor is singular at the point")
    jac = P.jacobian_at(X)
    V = chart.dependent
    ginv = inverse([[jac[a][v] for v in V] for a in range(P.m)])
    fV = [P.grad_f[v](X) for v in V]
    lam = tuple(-sum((fV[a] * ginv[a][b] for a in range(P.m)), 0) for b in range(P.m))
    grad = [g(X) for g in P.grad_f]
    r = [grad[i] + sum((lam[j] * jac[j][i] for j in range(P.m)), 0) for i in range(P.d)]
    res = math.sqrt(sum(float(x) ** 2 for x in r))
    gnorm = math.sqrt(sum(float(x) ** 2 for x in grad))
    if res > STATIONARITY_TOL * (1 + gnorm):
        raise StationarityError(f"stationarity residual {res:.3g} too large; not a critical point")
    return MultiplierVector(lam, X, chart, res)


@dataclass
class OracleResult:
    verdict: Verdict
    minors: dict[int, object]
    order: tuple[int, ...]
    matrix: list[list]
    reason: str = ""

    @property
    def decisive(self) -> bool:
        return self.verdict is not Verdict.INDETERMINATE


def bordered_hessian(P: ConstrainedProblem, X: Sequence, lam: Sequence,
                     order: Sequence[int] | None = None) -> list[list]:
    """[[0, G'], [G'^T, Hess L]] with variables taken in ``order``."""
    order = list(order) if order is not None else list(range(P.d))
    m = P.m
    jac = P.jacobian_at(X)
    hl = []
    for i in order:
        row = []
        for j in order:
            v = P.hess_f[i][j](X)
            for a in range(m):
                v = v + lam[a] * P.hess_g[a][i][j](X)
            row.append(v)
        hl.append(row)
    zero = 0 if all(is_exact(x) for x in X) else 0.0
    top = [[zero] * m + [jac[a][i] for i in order] for a in range(m)]
    rest = [[jac[a][i] for a in range(m)] + hl[k] for k, i in enumerate(order)]
    return top + rest


def _is_zero(v, rows) -> bool:
    if is_exact(v):
        return v == 0
    scale = 1.0
    for row in rows:
        scale *= max(1.0, math.sqrt(sum(float(x) ** 2 for x in row)))
    return abs(float(v)) <= MINOR_TOL * scale


def bordered_hessian_oracle(P: ConstrainedProblem, cp: CriticalPoint | Sequence,
                            lam: MultiplierVector | None = None) -> OracleResult:
    """Sign pattern of the leading principal minors of the bordered Hessian.

    Variables are ordered with the chart's dependent block first, so the
    border's leading m x m block is nonsingular.  Minors Gamma_r are taken for
    r = 2m+1 .. m+d.  (-1)^m Gamma_r > 0 for all r is a strict minimum,
    (-1)^(r-m) Gamma_r > 0 a strict maximum; a vanishing full minor is
    indeterminate and any other pattern a saddle.
    """
    X, chart = _unpack(P, cp, lam.chart if lam is not None else None)
    if lam is None:
        lam = recover_multipliers(P, X, chart)
    m, d = P.m, P.d
    order = tuple(chart.dependent) + tuple(chart.independent)
    M = bordered_hessian(P, X, lam.values, order)
    minors = {}
    for r in range(2 * m + 1, m + d + 1):
        sub = [row[:r] for row in M[:r]]
        minors[r] = det(sub)
    full = m + d
    if full not in minors or _is_zero(minors[full], M):
        return OracleResult(Verdict.INDETERMINATE, minors, order, M, "full minor vanishes")
    signs = {}
    for r, v in minors.items():
        sub = [row[:r] for row in M[:r]]
        signs[r] = 0 if _is_zero(v, sub) else (1 if float(v) > 0 else -1)
    if all(signs[r] == (-1) ** m for r in signs):
        return OracleResult(Verdict.STRICT_MIN, minors, order, M)
    if all(signs[r] == (-1) ** (r - m) for r in signs):
        return OracleResult(Verdict.STRICT_MAX, minors, order, M)
    return OracleResult(Verdict.SADDLE, minors, order, M)


def oracle_agrees(oracle: OracleResult, c: Classification) -> bool | None:
    """None when the oracle is not decisive."""
    if not oracle.decisive:
        return None
    return oracle.verdict is c.verdict


def minors_as_floats(oracle: OracleResult) -> dict[int, float]:
    return {r: float(v) for r, v in oracle.minors.items()}


def multipliers_as_array(lam: MultiplierVector) -> np.ndarray:
    return np.array([float(v) for v in lam.values])
