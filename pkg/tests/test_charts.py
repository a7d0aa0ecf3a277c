from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from critex.charts import (Chart, ConstrainedProblem, SingularChartError, enumerate_charts,
                           implicit_jet, implicit_series_from_scratch, reduced_derivative_tensor,
                           reduced_gradient, reduced_hessian, reduced_taylor_components)
from critex.linalg import symmetric_inertia

from conftest import CUBIC_CURVE, CUBIC_CYLINDER
from planted import planted_problem


@pytest.fixture(scope="module")
def cubic_curve():
    return ConstrainedProblem.from_text(CUBIC_CURVE)


@pytest.fixture(scope="module")
def cubic_cylinder():
    return ConstrainedProblem.from_text(CUBIC_CYLINDER)


def _J_numeric(P, x):
    # y solves g(x, y) = 0 on the branch through the origin
    g = P.constraints[0]
    return x * brentq(lambda y: float(g((x, y))), -0.5, 0.5, xtol=1e-15)


def test_origin_fourth_derivative(cubic_curve):
    jet = implicit_jet(cubic_curve, Chart.from_dependent([1], 2), (0, 0), order=4)
    assert reduced_gradient(cubic_curve, jet) == [0]
    assert reduced_hessian(cubic_curve, jet) == [[0]]
    assert reduced_derivative_tensor(cubic_curve, jet, 3)[(0, 0, 0)] == 0
    assert reduced_derivative_tensor(cubic_curve, jet, 4)[(0, 0, 0, 0)] == -2
    comps = reduced_taylor_components(cubic_curve, jet, 4)
    assert comps[4].poly.terms == {(4,): Fraction(-1, 12)}


def test_fourth_derivative_against_finite_differences(cubic_curve):
    h = 0.05
    vals = [_J_numeric(cubic_curve, k * h) for k in (-2, -1, 0, 1, 2)]
    d4 = (vals[0] - 4 * vals[1] + 6 * vals[2] - 4 * vals[3] + vals[4]) / h**4
    assert abs(d4 - (-2)) < 0.05


def test_implicit_series_matches_plain_recursion(cubic_curve):
    chart = Chart.from_dependent([1], 2)
    jet = implicit_jet(cubic_curve, chart, (0, 0), order=6)
    ref = implicit_series_from_scratch(cubic_curve, chart, (0, 0), 6)
    assert jet.h[0] == ref[0]


@pytest.mark.parametrize("dep", [[0], [1]])
def test_max_point_in_both_charts(cubic_curve, dep):
    jet = implicit_jet(cubic_curve, Chart.from_dependent(dep, 2), (1, 1), order=2)
    assert reduced_gradient(cubic_curve, jet) == [0]
    assert reduced_hessian(cubic_curve, jet) == [[-3]]


@pytest.mark.parametrize("z0", [Fraction(1, 2), Fraction(1), Fraction(2), Fraction(-1, 2),
                                Fraction(-1), Fraction(-2)])
def test_zaxis_fourth_derivative(cubic_cylinder, z0):
    chart = Chart.from_dependent([1], 3)
    jet = implicit_jet(cubic_cylinder, chart, (0, 0, z0), order=4)
    assert reduced_derivative_tensor(cubic_cylinder, jet, 4)[(0, 0, 0, 0)] == -2 * z0


def test_origin_fifth_derivative(cubic_cylinder):
    jet = implicit_jet(cubic_cylinder, Chart.from_dependent([1], 3), (0, 0, 0), order=5)
    t4 = reduced_derivative_tensor(cubic_cylinder, jet, 4)
    assert all(v == 0 for v in t4.values())
    assert reduced_derivative_tensor(cubic_cylinder, jet, 5)[(0, 0, 0, 0, 1)] == -2


def test_singular_chart_rejected(cubic_curve):
    with pytest.raises(SingularChartError):
        implicit_jet(cubic_curve, Chart.from_dependent([0], 2), (0, 0))
    assert [c.dependent for c in enumerate_charts(cubic_curve, (0, 0))] == [(1,)]


@pytest.mark.parametrize("seed", range(50))
def test_chart_independence_of_eigenvalue_signs(seed):
    P, X0, _ = planted_problem(seed)
    charts = enumerate_charts(P, X0)
    assert len(charts) >= 2
    inertias = set()
    for chart in charts:
        jet = implicit_jet(P, chart, X0, order=2)
        assert all(v == 0 for v in reduced_gradient(P, jet))
        inertias.add(symmetric_inertia(reduced_hessian(P, jet), 0)[:3])
    assert len(inertias) == 1


@pytest.mark.parametrize("seed", range(10))
def test_reduced_gradient_on_planted_points_two_constraints(seed):
    P, X0, _ = planted_problem(500 + seed, d=4, m=2)
    for chart in enumerate_charts(P, X0):
        jet = implicit_jet(P, chart, X0, order=3)
        assert all(v == 0 for v in reduced_gradient(P, jet))
        assert implicit_series_from_scratch(P, chart, X0, 3) == jet.h


def test_reduced_hessian_against_finite_differences():
    P, X0, _ = planted_problem(7)
    chart = enumerate_charts(P, X0)[0]
    jet = implicit_jet(P, chart, X0, order=2)
    H = np.array(reduced_hessian(P, jet), dtype=float)
    # J(u) by Newton on the dependent coordinate
    dep, ind = chart.dependent[0], list(chart.independent)
    g = P.constraints[0]

    def J(u):
        X = [float(v) for v in X0]
        for i, ui in zip(ind, u):
            X[i] = ui
        for _ in range(50):
            X[dep] -= float(g(X)) / float(g.diff(dep)(X))
        return float(P.objective(X))

    u0 = np.array([float(X0[i]) for i in ind])
    h = 1e-4
    num = np.zeros((2, 2))
    E = np.eye(2) * h
    for a in range(2):
        for b in range(2):
            num[a, b] = (J(u0 + E[a] + E[b]) - J(u0 + E[a] - E[b]) - J(u0 - E[a] + E[b])
                         + J(u0 - E[a] - E[b])) / (4 * h * h)
    assert np.allclose(num, H, rtol=1e-4, atol=1e-4 * max(1, np.abs(H).max()))
