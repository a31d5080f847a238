"""Hahn and Krawtchouk polynomials, univariate and on the simplex.

The multivariate families are orthogonal for the stationary law of the
parent-independent Moran chain: Hahn for p > 0 (Dirichlet-multinomial
weight with alpha = N mu / p) and Krawtchouk for p = 0 (multinomial
weight with q = mu / |mu|).
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from numbers import Rational
from typing import Sequence

from .simplex import ArgumentError, compositions, falling, rising


def _exact(*xs) -> bool:
    return all(isinstance(x, (int, Rational)) and not isinstance(x, bool) for x in xs)


def _one(*xs):
    return Fraction(1) if _exact(*xs) else 1.0


def hahn_uni(n: int, x: int, M: int, beta, gamma):
    if n < 0:
        raise ArgumentError(f"degree must be nonnegative (got {n})")
    if not 0 <= x <= M:
        raise ArgumentError(f"need 0 <= x <= M (got x={x}, M={M})")
    if not beta > 0:
        raise ArgumentError(f"beta must be positive (got {beta})")
    one = _one(beta, gamma)
    total = 0 * one
    term = one
    # ratio of consecutive terms of the terminating 3F2 at argument 1
    top = min(n, x)
    for j in range(top + 1):
        total += term
        if j < top:
            term = term * (-n + j) * (n + beta + gamma - 1 + j) * (-x + j) / ((beta + j) * (-M + j) * (j + 1))
    return total


def krawtchouk_uni(n: int, x: int, N: int, q):
    if not 0 < q < 1:
        raise ArgumentError(f"q must lie in (0,1) (got {q})")
    if not (0 <= n <= N and 0 <= x <= N):
        raise ArgumentError(f"need 0 <= n, x <= N (got n={n}, x={x}, N={N})")
    one = _one(q)
    total = 0 * one
    term = one
    top = min(n, x)
    for j in range(top + 1):
        total += term
        if j < top:
            term = term * (-n + j) * (-x + j) / ((-N + j) * (j + 1) * q)
    return total


def _hahn_scaled(n: int, x: int, M: int, beta, gamma):
    """(-M)_(n) times the Hahn polynomial, valid for every integer M.

    The prefactor cancels the (-M)_(j) denominators, so no division by a
    vanishing factor can occur even when x > M.
    """
    one = _one(beta, gamma)
    total = 0 * one
    for j in range(min(n, x) + 1):
        num = rising(-n * one, j) * rising(n + beta + gamma - 1, j) * rising(-x * one, j)
        total += num * rising(-M + j * one, n - j) / (rising(beta, j) * factorial(j))
    return total


def _kraw_scaled(n: int, x: int, M: int, q):
    """(-M)_(n) times the Krawtchouk polynomial K_n(x; M, q)."""
    one = _one(q)
    total = 0 * one
    for j in range(min(n, x) + 1):
        num = rising(-n * one, j) * rising(-x * one, j) * rising(-M + j * one, n - j)
        total += num / (factorial(j) * q**j)
    return total


def _check_index(eta: Sequence[int], x: Sequence[int], N: int) -> None:
    if len(eta) != len(x) - 1:
        raise ArgumentError(f"index {tuple(eta)} must have K-1 = {len(x) - 1} entries")
    if min(eta) < 0 or sum(eta) > N:
        raise ArgumentError(f"need |eta| <= N (got {tuple(eta)}, N={N})")
    if min(x) < 0 or sum(x) != N:
        raise ArgumentError(f"{tuple(x)} is not in E_{{{len(x)},{N}}}")


def q_eta(eta: Sequence[int], x: Sequence[int], N: int, mu: Sequence, p=0):
    """Q_eta(x): multivariate Hahn for p > 0, Krawtchouk for p = 0."""
    _check_index(eta, x, N)
    K = len(x)
    one = _one(p, *mu)
    L = sum(eta)
    val = one / falling(N, L)
    if p > 0:
        alpha = [N * m * one / p for m in mu]
    else:
        total = sum(mu) * one
        q = [m * one / total for m in mu]
    for k in range(K - 1):
        n = eta[k]
        if n == 0:
            continue
        before = sum(x[:k])
        after = sum(eta[k + 1:])
        M = N - before - after
        if p > 0:
            gamma = sum(alpha[k + 1:]) + 2 * after
            val *= _hahn_scaled(n, x[k], M, alpha[k], gamma)
        else:
            val *= _kraw_scaled(n, x[k], M, q[k] / sum(q[k:]))
    return val


def norm_sq(eta: Sequence[int], N: int, mu: Sequence, p=0):
    """Squared norm of Q_eta under the stationary law."""
    K = len(mu)
    if len(eta) != K - 1 or min(eta) < 0 or sum(eta) > N:
        raise ArgumentError(f"bad index {tuple(eta)} for K={K}, N={N}")
    one = _one(p, *mu)
    L = sum(eta)
    tail = lambda v, j: sum(v[j:], 0 * one)  # noqa: E731
    if p > 0:
        a = [N * m * one / p for m in mu]
        A = sum(a)
        val = rising(A + N, L) / (falling(N, L) * one * rising(A, 2 * L))
        for j in range(K - 1):
            n = eta[j]
            val *= rising(tail(a, j) + tail(eta, j) + tail(eta, j + 1) - 1, n)
            val *= rising(tail(a, j + 1) + 2 * tail(eta, j + 1), n) * factorial(n)
            val /= rising(a[j], n)
        return val
    total = sum(mu) * one
    pi = [m * one / total for m in mu]
    val = one / falling(N, L)
    for j in range(K - 1):
        n = eta[j]
        val *= (tail(pi, j) * tail(pi, j + 1) / pi[j]) ** n * factorial(n)
    return val


def corner_index(x: Sequence[int], N: int) -> int | None:
    """k (from 1) when x = N e_k, else None."""
    for k, v in enumerate(x):
        if v == N:
            return k + 1
    return None


def kernel_sum(n: int, x: Sequence[int], y: Sequence[int], N: int, mu: Sequence, p=0):
    """Degree-n reproducing kernel by summing the orthogonal system."""
    K = len(mu)
    return sum(
        (q_eta(eta, x, N, mu, p) * q_eta(eta, y, N, mu, p) / norm_sq(eta, N, mu, p)
         for eta in compositions(K - 1, n)),
        0 * _one(p, *mu),
    )


def kernel_corner(n: int, k: int, N: int, mu: Sequence, p=0):
    """h_n(N e_k, N e_k) in closed form."""
    one = _one(p, *mu)
    total = sum(mu) * one
    mk = mu[k - 1] * one
    if p == 0:
        return comb(N, n) * (total / mk - 1) ** n
    if n == 0:
        return one
    A = N * total / p
    ak = N * mk / p
    num = (A + 2 * n - 1) * rising(A, n - 1) * rising(A - ak, n)
    return comb(N, n) * num / (rising(A + N, n) * rising(ak, n))


def kernel_to_corner(n: int, x: Sequence[int], k: int, N: int, mu: Sequence):
    """h_n(x, N e_k) at p = 0 in closed form."""
    one = _one(*mu)
    r = sum(mu) * one / mu[k - 1]
    return sum(
        (comb(N, m) * comb(N - m, n - m) * (-1) ** (n - m) * falling(x[k - 1], m) * r**m / falling(N, m)
         for m in range(n + 1)),
        0 * one,
    )


def kernel(n: int, x: Sequence[int], y: Sequence[int], N: int, mu: Sequence, p=0):
    """h_n(x, y); closed forms are used when one argument is a corner."""
    if not 0 <= n <= N:
        raise ArgumentError(f"need 0 <= n <= N (got n={n}, N={N})")
    kx, ky = corner_index(x, N), corner_index(y, N)
    if kx is not None and tuple(x) == tuple(y):
        return kernel_corner(n, kx, N, mu, p)
    if p == 0 and ky is not None:
        return kernel_to_corner(n, x, ky, N, mu)
    if p == 0 and kx is not None:
        return kernel_to_corner(n, y, kx, N, mu)
    return kernel_sum(n, x, y, N, mu, p)
