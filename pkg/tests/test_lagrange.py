from fractions import Fraction

import numpy as np
import pytest

from critex.charts import ConstrainedProblem, SingularChartError
from critex.classify import Verdict, classify_point
from critex.lagrange import (StationarityError, bordered_hessian_oracle, oracle_agrees,
                             recover_multipliers)
from critex.solver import SearchConfig, search
from critex.surd import QuadraticSurd

from conftest import CUBIC_CURVE, CUBIC_CYLINDER, ELLIPSE_CIRCLE
from planted import planted_problem


@pytest.fixture(scope="module")
def cubic_curve():
    return ConstrainedProblem.from_text(CUBIC_CURVE)


def test_multiplier_at_rational_max(cubic_curve):
    lam = recover_multipliers(cubic_curve, (1, 1))
    assert lam.values == (Fraction(-1, 24),)
    assert lam.residual == 0


def test_oracle_at_rational_max(cubic_curve):
    o = bordered_hessian_oracle(cubic_curve, (1, 1))
    assert o.verdict is Verdict.STRICT_MAX
    assert oracle_agrees(o, classify_point(cubic_curve, (1, 1)))


def test_oracle_indeterminate_at_origin(cubic_curve):
    lam = recover_multipliers(cubic_curve, (0, 0))
    assert lam.values == (0,)
    o = bordered_hessian_oracle(cubic_curve, (0, 0), lam)
    assert o.minors[3] == 0
    assert o.verdict is Verdict.INDETERMINATE
    assert oracle_agrees(o, classify_point(cubic_curve, (0, 0))) is None


def test_oracle_at_surd_saddle():
    P = ConstrainedProblem.from_text(CUBIC_CYLINDER)
    X = (0, QuadraticSurd(0, Fraction(2, 11), 66), 0)
    o = bordered_hessian_oracle(P, X)
    assert o.minors[3] == 0
    # independent float evaluation of the same 4x4 determinant
    M = np.array([[float(v) for v in row] for row in o.matrix])
    assert abs(np.linalg.det(M) - float(o.minors[4])) <= 1e-9 * abs(np.linalg.det(M))
    assert o.minors[4] == Fraction(55296, 11)
    assert o.verdict is Verdict.SADDLE


def test_zero_objective_gives_zero_multipliers():
    P = ConstrainedProblem.from_text("vars x y; objective 0; constraint x^2 + y^2 - 1;")
    assert recover_multipliers(P, (1, 0)).values == (0,)


def test_non_critical_point_rejected(cubic_curve):
    with pytest.raises(StationarityError):
        recover_multipliers(cubic_curve, (2, Fraction(0)))


def test_singular_chart(cubic_curve):
    from critex.charts import Chart
    with pytest.raises(SingularChartError):
        recover_multipliers(cubic_curve, (0, 0), Chart.from_dependent([0], 2))


@pytest.mark.parametrize("seed", range(30))
def test_planted_multipliers_recovered(seed):
    P, X0, lam = planted_problem(seed)
    assert list(recover_multipliers(P, X0).values) == lam


@pytest.mark.parametrize("seed", range(10))
def test_planted_multipliers_two_constraints(seed):
    P, X0, lam = planted_problem(500 + seed, d=4, m=2)
    assert list(recover_multipliers(P, X0).values) == lam


@pytest.mark.parametrize("seed", range(30))
def test_oracle_agrees_with_classify_when_decisive(seed):
    P, X0, _ = planted_problem(seed)
    o = bordered_hessian_oracle(P, X0)
    agree = oracle_agrees(o, classify_point(P, X0))
    assert agree in (True, None)


def test_ellipse_circle_oracle_agreement():
    P = ConstrainedProblem.from_text(ELLIPSE_CIRCLE)
    for cp in search(P, SearchConfig(box=7)).points:
        lam = recover_multipliers(P, cp)
        assert lam.residual <= 1e-6
        assert oracle_agrees(bordered_hessian_oracle(P, cp, lam), classify_point(P, cp))
