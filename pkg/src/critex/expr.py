"""Exact sparse polynomials over named variables.

A polynomial is stored in normal form: a mapping from exponent tuples (one
entry per variable) to coefficients.  Coefficients parsed from text are
``Fraction``; polynomials re-centred at a floating point pick up ``float``
coefficients.  Zero coefficients are never stored, so structural equality is
polynomial equality.

    x0^2 * x1 + 3  ->  {(2, 1): Fraction(1), (0, 0): Fraction(3)}
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

Monomial = tuple[int, ...]


class ParseError(ValueError):
    """Malformed problem text; ``position`` is a 0-based character offset."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        if text:
            line = text.count("\n", 0, position) + 1
            col = position - (text.rfind("\n", 0, position) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


def is_exact(value) -> bool:
    return isinstance(value, Rational) or getattr(value, "is_exact", False)


def _is_zero(c) -> bool:
    return c == 0


class Poly:
    """Immutable polynomial in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash", "_compiled")

    def __init__(self, nvars: int, terms: Mapping[Monomial, object] | None = None):
        self.nvars = nvars
        clean = {}
        for mono, c in (terms or {}).items():
            if len(mono) != nvars:
                raise ValueError(f"monomial {mono} does not have {nvars} entries")
            if not _is_zero(c):
                clean[tuple(mono)] = c
        self.terms: dict[Monomial, object] = clean
        self._hash = None
        self._compiled = None

    # construction

    @classmethod
    def const(cls, nvars: int, value) -> Poly:
        value = Fraction(value) if isinstance(value, int) else value
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars: int, index: int) -> Poly:
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        mono = [0] * nvars
        mono[index] = 1
        return cls(nvars, {tuple(mono): Fraction(1)})

    # basic queries

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self.terms)

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, Fraction(0))

    @property
    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def is_homogeneous(self, k: int | None = None) -> bool:
        degs = {sum(m) for m in self.terms}
        if not degs:
            return True
        return len(degs) == 1 and (k is None or degs == {k})

    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    def variables(self) -> set[int]:
        return {i for m in self.terms for i, e in enumerate(m) if e}

    def homogeneous_part(self, k: int) -> Poly:
        return Poly(self.nvars, {m: c for m, c in self.terms.items() if sum(m) == k})

    # arithmetic

    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials over different variable counts")
            return other
        return Poly.const(self.nvars, other)

    def __add__(self, other) -> Poly:
        other = self._coerce(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> Poly:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> Poly:
        return self._coerce(other) - self

    def __mul__(self, other) -> Poly:
        if not isinstance(other, Poly):
            if _is_zero(other):
                return Poly(self.nvars)
            return Poly(self.nvars, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        out: dict[Monomial, object] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> Poly:
        if not isinstance(e, int) or e < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        result = Poly.const(self.nvars, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, float, Fraction)):
            return self.terms == Poly.const(self.nvars, other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # calculus

    def diff(self, i: int) -> Poly:
        if not 0 <= i < self.nvars:
            raise IndexError(f"variable index {i} out of range for {self.nvars} variables")
        out = {}
        for m, c in self.terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out[tuple(mm)] = c * m[i]
        return Poly(self.nvars, out)

    def gradient(self) -> list[Poly]:
        return [self.diff(i) for i in range(self.nvars)]

    # evaluation

    def __call__(self, point: Sequence):
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(point)}")
        total = 0
        for m, c in self.terms.items():
            t = c
            for x, e in zip(point, m):
                if e:
                    t = t * x**e
            total = total + t
        if not self.terms:
            return Fraction(0) if all(is_exact(x) for x in point) else 0.0
        return total

    def magnitude(self, point: Sequence) -> float:
        """Sum of absolute term values at ``point``; a floating error scale."""
        total = 0.0
        for m, c in self.terms.items():
            t = abs(float(c))
            for x, e in zip(point, m):
                if e:
                    t *= abs(float(x)) ** e
            total += t
        return total

    def to_float(self) -> Poly:
        return Poly(self.nvars, {m: float(c) for m, c in self.terms.items()})

    def eval_batch(self, X: np.ndarray) -> np.ndarray:
        """Vectorised float evaluation; ``X`` has shape (N, nvars)."""
        if self._compiled is None:
            monos = list(self.terms)
            exps = np.array(monos, dtype=np.int64).reshape(len(monos), self.nvars)
            coeffs = np.array([float(self.terms[m]) for m in monos])
            self._compiled = (exps, coeffs)
        exps, coeffs = self._compiled
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not len(coeffs):
            return np.zeros(X.shape[0])
        vals = np.prod(X[:, None, :] ** exps[None, :, :], axis=2)
        return vals @ coeffs

    # change of variables

    def shift(self, center: Sequence) -> Poly:
        """Rewrite in offsets ``y = x - center``; returns q with q(y) = p(center + y)."""
        if len(center) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(center)}")
        if all(_is_zero(c) for c in center):
            return self
        out: dict[Monomial, object] = {}
        for m, c in self.terms.items():
            # binomial expansion variable by variable
            factors = []
            for x0, e in zip(center, m):
                factors.append([(j, math.comb(e, j) * x0 ** (e - j)) for j in range(e + 1)
                                if not _is_zero(x0) or j == e])
            for combo in iproduct(*factors):
                mono = tuple(j for j, _ in combo)
                coeff = c
                for _, w in combo:
                    coeff = coeff * w
                out[mono] = out.get(mono, 0) + coeff
        return Poly(self.nvars, out)

    def substitute(self, index: int, value) -> Poly:
        """Fix variable ``index`` to a constant (variable count unchanged)."""
        out: dict[Monomial, object] = {}
        for m, c in self.terms.items():
            mm = list(m)
            e = mm[index]
            mm[index] = 0
            key = tuple(mm)
            out[key] = out.get(key, 0) + c * value**e
        return Poly(self.nvars, out)

    # display

    def sorted_terms(self) -> list[tuple[Monomial, object]]:
        return sorted(self.terms.items(), key=lambda mc: (-sum(mc[0]), tuple(-e for e in mc[0])))

    def to_str(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
            neg = c < 0 if not isinstance(c, complex) else False
            mag = -c if neg else c
            cstr = _format_coeff(mag)
            if factors:
                body = "*".join(factors) if mag == 1 else f"{cstr}*" + "*".join(factors)
            else:
                body = cstr
            parts.append(("- " if neg else "+ ") + body)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[1:]

    def __repr__(self) -> str:
        return f"Poly({self.to_str()})"


def _format_coeff(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    if isinstance(c, float):
        return repr(c)
    return str(c)


# ---------------------------------------------------------------------------
# homogeneous components


@dataclass(frozen=True)
class HomogeneousPolynomial:
    """Degree-``degree`` form in offsets ``Y = X - center``."""

    degree: int
    center: tuple
    poly: Poly

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("homogeneous components have degree >= 1")
        if not self.poly.is_homogeneous(self.degree):
            raise ValueError(f"polynomial is not homogeneous of degree {self.degree}")

    @property
    def nvars(self) -> int:
        return self.poly.nvars

    def __call__(self, X: Sequence):
        return self.poly([x - c for x, c in zip(X, self.center)])

    def at_offset(self, Y: Sequence):
        return self.poly(Y)

    @property
    def coefficients(self) -> dict[tuple[int, ...], object]:
        """Coefficient per sorted multi-index, multiplicity already folded in."""
        out = {}
        for m, c in self.poly.terms.items():
            idx = tuple(i for i, e in enumerate(m) for _ in range(e))
            out[idx] = c
        return out

    def centered(self) -> HomogeneousPolynomial:
        return HomogeneousPolynomial(self.degree, (Fraction(0),) * self.nvars, self.poly)


def taylor_components(e: Poly, center: Sequence, k_max: int) -> list[HomogeneousPolynomial]:
    """Nonzero homogeneous Taylor components of degree 1..min(k_max, deg e) at ``center``."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    shifted = e.shift(center)
    out = []
    for k in range(1, min(k_max, shifted.degree) + 1):
        part = shifted.homogeneous_part(k)
        if not part.is_zero():
            out.append(HomogeneousPolynomial(k, tuple(center), part))
    return out


def spherical_power_form(P: HomogeneousPolynomial) -> tuple[object, int] | None:
    """Return (lam, p) when P == lam * (sum x_i^2)^p exactly, else None."""
    if P.degree % 2:
        return None
    p = P.degree // 2
    n = P.nvars
    first = (0,) * (n - 1) + (P.degree,) if n else ()
    lam = P.poly.terms.get(first)
    if lam is None or _is_zero(lam):
        return None
    r2 = Poly(n, {tuple(2 if j == i else 0 for j in range(n)): Fraction(1) for i in range(n)})
    target = r2**p * lam
    if target == P.poly:
        return lam, p
    if not P.poly.is_exact():
        # float coefficients: compare up to rounding
        scale = max(abs(float(c)) for c in P.poly.terms.values())
        keys = set(target.terms) | set(P.poly.terms)
        if all(abs(float(target.terms.get(k, 0)) - float(P.poly.terms.get(k, 0))) <= 1e-12 * scale
               for k in keys):
            return lam, p
    return None


def sphere(nvars: int, center: Sequence | None = None, radius=1) -> Poly:
    """(x - center)^2 summed minus radius^2."""
    out = Poly.const(nvars, -Fraction(radius) ** 2 if is_exact(radius) else -radius**2)
    for i in range(nvars):
        y = Poly.var(nvars, i)
        if center is not None:
            y = y - center[i]
        out = out + y * y
    return out


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?|\.\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


def _tokenize(text: str, offset: int = 0):
    pos = 0
    toks = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            j = pos
            while j < len(text) and text[j].isspace():
                j += 1
            raise ParseError(f"unexpected character {text[j]!r}", offset + j)
        num, ident, op = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            toks.append(("num", num, offset + start))
        elif ident is not None:
            toks.append(("ident", ident, offset + start))
        else:
            toks.append(("op", "^" if op == "**" else op, offset + start))
        pos = m.end()
    toks.append(("end", "", offset + len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, names: Sequence[str], offset: int = 0):
        self.toks = _tokenize(text, offset)
        self.i = 0
        self.index = {n: k for k, n in enumerate(names)}
        self.n = len(names)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> Poly:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return e

    def expr(self) -> Poly:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Poly:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if not rhs.is_constant():
                    raise ParseError("division by a non-constant expression", pos)
                c = rhs.constant_term()
                if c == 0:
                    raise ParseError("division by zero", pos)
                e = e * (Fraction(1) / c)
        return e

    def unary(self) -> Poly:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            e = self.unary()
            return -e if val == "-" else e
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            neg = False
            if kind == "op" and val == "-":
                neg = True
                kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError(f"exponent must be a non-negative integer, found {val!r}", pos)
            if neg:
                raise ParseError("negative exponents are not polynomial", pos)
            return base ** int(val)
        return base

    def atom(self) -> Poly:
        kind, val, pos = self.take()
        if kind == "num":
            return Poly.const(self.n, Fraction(val))
        if kind == "ident":
            if val not in self.index:
                raise ParseError(f"unknown variable {val!r}", pos)
            return Poly.var(self.n, self.index[val])
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse(text: str, names: Sequence[str], *, offset: int = 0) -> Poly:
    """Parse a polynomial over ``names`` (declaration order fixes indices)."""
    return _Parser(text, names, offset).parse()


_KEYWORDS = ("vars", "objective", "constraint")


@dataclass(frozen=True)
class ProblemText:
    names: tuple[str, ...]
    objective: Poly
    constraints: tuple[Poly, ...] = field(default=())


def parse_problem(text: str) -> ProblemText:
    """Parse ``vars ...; objective ...; constraint ...;`` statements.

    ``#`` starts a comment running to end of line.
    """
    clean = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), text)
    names: list[str] | None = None
    objective = None
    constraints = []
    pos = 0
    for piece in clean.split(";"):
        start = pos
        pos += len(piece) + 1
        body = piece.strip()
        if not body:
            continue
        lead = start + piece.index(body[0])
        kw = body.split(None, 1)[0]
        rest = body[len(kw):]
        rest_off = lead + len(kw)
        try:
            if kw == "vars":
                if names is not None:
                    raise ParseError("duplicate vars statement", lead)
                names = rest.replace(",", " ").split()
                if not names:
                    raise ParseError("vars statement declares no variables", lead)
                for n in names:
                    if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", n):
                        raise ParseError(f"invalid variable name {n!r}", lead)
                if len(set(names)) != len(names):
                    raise ParseError("duplicate variable name", lead)
            elif kw in ("objective", "constraint"):
                if names is None:
                    raise ParseError(f"{kw} before vars", lead)
                e = parse(rest, names, offset=rest_off)
                if kw == "objective":
                    if objective is not None:
                        raise ParseError("duplicate objective statement", lead)
                    objective = e
                else:
                    constraints.append(e)
            else:
                raise ParseError(f"unknown statement {kw!r}; expected one of {_KEYWORDS}", lead)
        except ParseError as exc:
            raise ParseError(str(exc.args[0]), exc.position, text) from None
    if names is None:
        raise ParseError("missing vars statement", 0, text)
    if objective is None:
        raise ParseError("missing objective statement", len(text), text)
    return ProblemText(tuple(names), objective, tuple(constraints))


# thin functional aliases


def evaluate(e: Poly, point: Sequence):
    return e(point)


def differentiate(e: Poly, i: int) -> Poly:
    return e.diff(i)


def from_terms(nvars: int, items: Iterable[tuple[Monomial, object]]) -> Poly:
    out: dict[Monomial, object] = {}
    for m, c in items:
        out[m] = out.get(m, 0) + c
    return Poly(nvars, out)
