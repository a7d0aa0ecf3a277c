"""Small dense linear algebra that stays exact for exact entries and falls back
to numpy otherwise."""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .expr import Poly, is_exact


def all_exact(rows) -> bool:
    return all(is_exact(x) for row in rows for x in row)


def det(M: Sequence[Sequence]):
    n = len(M)
    if n == 0:
        return Fraction(1)
    if not all_exact(M):
        return float(np.linalg.det(np.array(M, dtype=float)))
    return _laplace(M)


def _laplace(M):
    # division-free, so it also works for quadratic surds
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = 0
    for j in range(n):
        if M[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _laplace(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def inverse(M: Sequence[Sequence]):
    """Inverse as nested lists; exact Gauss-Jordan for exact entries."""
    n = len(M)
    if not all_exact(M):
        return np.linalg.inv(np.array(M, dtype=float)).tolist()
    A = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


def rank_exact(M: Sequence[Sequence]) -> int:
    A = [list(row) for row in M]
    if not A:
        return 0
    rows, cols = len(A), len(A[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, rows):
            if A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        r += 1
        if r == rows:
            break
    return r


def poly_det(M: Sequence[Sequence[Poly]], nvars: int) -> Poly:
    """Symbolic determinant of a small polynomial matrix (Leibniz for n <= 3,
    cofactor expansion above)."""
    n = len(M)
    if n == 0:
        return Poly.const(nvars, 1)
    if n <= 3:
        total = Poly(nvars)
        for perm in permutations(range(n)):
            term = Poly.const(nvars, _perm_sign(perm))
            for i, j in enumerate(perm):
                term = term * M[i][j]
                if term.is_zero():
                    break
            total = total + term
        return total
    total = Poly(nvars)
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * poly_det(minor, nvars)
        total = total + term if j % 2 == 0 else total - term
    return total


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def matvec(M, v):
    return [sum((a * b for a, b in zip(row, v)), 0) for row in M]


def symmetric_inertia(H: Sequence[Sequence], tol: float) -> tuple[int, int, int, np.ndarray]:
    """(positive, negative, zero) eigenvalue counts plus the eigenvalues.

    Exact matrices decide the zero count by exact rank; the signs of the
    remaining eigenvalues come from numpy."""
    n = len(H)
    if n == 0:
        return 0, 0, 0, np.zeros(0)
    eig = np.linalg.eigvalsh(np.array(H, dtype=float))
    if all_exact(H):
        nzero = n - rank_exact(H)
        order = np.argsort(np.abs(eig))
        mask = np.ones(n, dtype=bool)
        mask[order[:nzero]] = False
        pos = int(np.sum(eig[mask] > 0))
        neg = int(np.sum(eig[mask] < 0))
        return pos, neg, nzero, eig
    pos = int(np.sum(eig > tol))
    neg = int(np.sum(eig < -tol))
    return pos, neg, n - pos - neg, eig
