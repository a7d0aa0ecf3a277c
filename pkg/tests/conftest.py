import random
import re
from fractions import Fraction
from pathlib import Path

import pytest

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"

CUBIC_CURVE = "vars x y; objective x*y; constraint -2*x^3 + 15*x^2*y + 11*y^3 - 24*y;"
CUBIC_CYLINDER = "vars x y z; objective x*y*z; constraint -2*x^3 + 15*x^2*y + 11*y^3 - 24*y;"
ELLIPSE_CIRCLE = ("vars u x v y; objective (x-u)^2 + (y-v)^2; constraint x^2/4 + y^2/9 - 1;"
        " constraint (u-3)^2 + (v+5)^2 - 1;")


def random_poly_text(rng: random.Random, names, max_terms=5, max_exp=3, coeff=5) -> str:
    """Sum of random monomials, written the way a user would type them."""
    parts = []
    for _ in range(rng.randint(1, max_terms)):
        c = rng.randint(-coeff, coeff) or 1
        factors = [str(c)]
        for v in names:
            e = rng.randint(0, max_exp)
            if e == 1:
                factors.append(v)
            elif e > 1:
                factors.append(f"{v}^{e}")
        parts.append("*".join(factors))
    return " + ".join(parts).replace("+ -", "- ")


def python_eval(text: str, names, point):
    """Oracle evaluator: Python's own arithmetic on the source text."""
    src = text.replace("^", "**")
    src = re.sub(r"(\d+)/(\d+)", r"Fraction(\1, \2)", src)
    env = {"Fraction": Fraction}
    env.update({n: Fraction(v) for n, v in zip(names, point)})
    return eval(src, {"__builtins__": {}}, env)


@pytest.fixture
def rng():
    return random.Random(20240611)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
