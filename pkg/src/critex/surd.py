"""Numbers a + b*sqrt(D) with rational a, b: exact arithmetic at points such as
(0, 2*sqrt(66)/11, 0) that are not rational but lie in one quadratic field."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational


class QuadraticSurd:
    __slots__ = ("a", "b", "d")
    is_exact = True

    def __init__(self, a, b=0, d: int = 2):
        if d <= 1 or math.isqrt(d) ** 2 == d:
            raise ValueError("radicand must be a positive non-square integer")
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = d

    def _lift(self, other):
        if isinstance(other, QuadraticSurd):
            if other.d != self.d:
                raise ValueError("mixing different quadratic fields")
            return other
        if isinstance(other, Rational):
            return QuadraticSurd(other, 0, self.d)
        return None

    def _collapse(self):
        return self.a if self.b == 0 else self

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) + other
        return QuadraticSurd(self.a + o.a, self.b + o.b, self.d)._collapse()

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.a, -self.b, self.d)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) * other
        return QuadraticSurd(self.a * o.a + self.d * self.b * o.b,
                             self.a * o.b + self.b * o.a, self.d)._collapse()

    __rmul__ = __mul__

    def conjugate(self):
        return QuadraticSurd(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.b * self.b

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) / other
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero surd")
        num = self * o.conjugate()
        if isinstance(num, QuadraticSurd):
            return QuadraticSurd(num.a / n, num.b / n, self.d)._collapse()
        return num / n

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return other / float(self)
        return o / self

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            return float(self) ** e
        out = QuadraticSurd(1, 0, self.d)
        base = self
        while e:
            if e & 1:
                out = out * base
                if not isinstance(out, QuadraticSurd):
                    out = QuadraticSurd(out, 0, self.d)
            e >>= 1
            if e:
                base = base * base
                if not isinstance(base, QuadraticSurd):
                    base = QuadraticSurd(base, 0, self.d)
        return out._collapse()

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def sign(self) -> int:
        # sign of a + b*sqrt(d) decided exactly
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        lhs, rhs = self.a * self.a, self.d * self.b * self.b
        if lhs == rhs:
            return 0
        return sa if lhs > rhs else sb

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return float(self) == other
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b, self.d))

    def _cmp(self, other):
        o = self._lift(other)
        if o is None:
            f, g = float(self), float(other)
            return (f > g) - (f < g)
        return QuadraticSurd(self.a - o.a, self.b - o.b, self.d).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        return f"QuadraticSurd({self.a}, {self.b}, {self.d})"

    def __str__(self):
        return f"{self.a} + {self.b}*sqrt({self.d})"
