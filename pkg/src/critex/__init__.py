"""Find and classify constrained critical points without Lagrange multipliers."""

from .charts import (Chart, ConstrainedProblem, ImplicitJet, enumerate_charts, implicit_jet,
                     reduced_derivative_tensor, reduced_gradient, reduced_hessian,
                     reduced_taylor_components)
from .classify import (Classification, ClassifyConfig, IntervalImage, SubsidiaryProblem, Verdict,
                       classify_point, higher_derivative_test, reexpress_degenerate,
                       second_derivative_test, solve_subsidiary, zero_set_descent)
from .expr import (HomogeneousPolynomial, ParseError, Poly, differentiate, evaluate, parse,
                   parse_problem, spherical_power_form, taylor_components)
from .lagrange import MultiplierVector, bordered_hessian_oracle, recover_multipliers
from .solver import (CriticalPoint, SearchConfig, detect_family, find_critical_points, refine,
                     search)

__all__ = [
    "Chart", "ConstrainedProblem", "ImplicitJet", "enumerate_charts", "implicit_jet",
    "reduced_derivative_tensor", "reduced_gradient", "reduced_hessian",
    "reduced_taylor_components", "Classification", "ClassifyConfig", "IntervalImage",
    "SubsidiaryProblem", "Verdict", "classify_point", "higher_derivative_test",
    "reexpress_degenerate", "second_derivative_test", "solve_subsidiary", "zero_set_descent",
    "HomogeneousPolynomial", "ParseError", "Poly", "differentiate", "evaluate", "parse",
    "parse_problem", "spherical_power_form", "taylor_components", "MultiplierVector",
    "bordered_hessian_oracle", "recover_multipliers", "CriticalPoint", "SearchConfig",
    "detect_family", "find_critical_points", "refine", "search",
]
