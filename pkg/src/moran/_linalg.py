"""Gaussian elimination over the rationals with full pivoting."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class SingularError(ArithmeticError):
    pass


def solve_exact(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list[Fraction]]:
    """Solve A X = B for square A; B is given as a list of rows."""
    n = len(A)
    if any(len(r) != n for r in A) or len(B) != n:
        raise ValueError("shape mismatch")
    m = len(B[0]) if n else 0
    M = [[Fraction(v) for v in A[i]] + [Fraction(v) for v in B[i]] for i in range(n)]
    perm = list(range(n))  # column permutation from full pivoting
    for k in range(n):
        piv = None
        for i in range(k, n):
            row = M[i]
            for j in range(k, n):
                if row[j] != 0:
                    # smallest denominator-size pivot keeps numbers short
                    size = row[j].numerator.bit_length() + row[j].denominator.bit_length()
                    if piv is None or size < piv[0]:
                        piv = (size, i, j)
        if piv is None:
            raise SingularError(f"matrix is singular (rank {k} < {n})")
        _, i, j = piv
        M[k], M[i] = M[i], M[k]
        if j != k:
            for row in M:
                row[k], row[j] = row[j], row[k]
            perm[k], perm[j] = perm[j], perm[k]
        pivot_row = M[k]
        inv = 1 / pivot_row[k]
        for c in range(k, n + m):
            pivot_row[c] *= inv
        for i2 in range(n):
            if i2 == k:
                continue
            f = M[i2][k]
            if f == 0:
                continue
            row = M[i2]
            for c in range(k, n + m):
                if pivot_row[c] != 0:
                    row[c] -= f * pivot_row[c]
    X = [None] * n
    for k in range(n):
        X[perm[k]] = M[k][n:]
    return X


def solve_vector(A: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    return [row[0] for row in solve_exact(A, [[v] for v in b])]


def inverse_exact(A: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(A)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return solve_exact(A, eye)
