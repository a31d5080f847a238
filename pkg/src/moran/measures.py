"""Probability measures on the simplex and stationary-vector solving."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from numbers import Rational
from typing import Sequence

import numpy as np

from ._linalg import SingularError, solve_vector
from .generators import EXACT, GeneratorMatrix
from .simplex import ArgumentError, StateSpace, multinomial_coeff, rising


def _exact(*xs) -> bool:
    return all(isinstance(x, (int, Rational)) and not isinstance(x, bool) for x in xs)


@dataclass
class SimplexMeasure:
    space: StateSpace
    probs: list | np.ndarray

    def __getitem__(self, eta) -> object:
        return self.probs[self.space.rank(eta)]

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.probs])

    @property
    def is_exact(self) -> bool:
        return not isinstance(self.probs, np.ndarray) and _exact(*self.probs)

    def total(self):
        return sum(self.probs, 0 * self.probs[0])

    def rows(self) -> list[tuple]:
        return [(*eta, v) for eta, v in zip(self.space.states, self.probs)]


def _check_vector(v: Sequence, K: int, what: str) -> None:
    if len(v) != K or any(not x > 0 for x in v):
        raise ArgumentError(f"{what} must be a positive {K}-vector (got {list(v)})")


def multinomial_pmf(eta: Sequence[int], N: int, q: Sequence):
    if len(q) != len(eta) or any(x < 0 for x in q):
        raise ArgumentError(f"bad probability vector {list(q)}")
    tot = sum(q)
    if (tot != 1) if _exact(*q) else abs(tot - 1) > 1e-12:
        raise ArgumentError(f"probabilities sum to {tot}, not 1")
    return multinomial_coeff(N, eta) * prod((x**n for x, n in zip(q, eta)), start=q[0] ** 0)


def dirichlet_multinomial_pmf(eta: Sequence[int], N: int, alpha: Sequence):
    _check_vector(alpha, len(eta), "alpha")
    one = Fraction(1) if _exact(*alpha) else 1.0
    num = prod((rising(a, n) for a, n in zip(alpha, eta)), start=one)
    return multinomial_coeff(N, eta) * num / rising(sum(alpha) * one, N)


def _measure(space: StateSpace, pmf) -> SimplexMeasure:
    probs = [pmf(eta) for eta in space.states]
    if not all(_exact(v) for v in probs):
        probs = np.array(probs, dtype=float)
    return SimplexMeasure(space, probs)


def multinomial(K: int, N: int, q: Sequence) -> SimplexMeasure:
    return _measure(StateSpace(K, N), lambda e: multinomial_pmf(e, N, q))


def dirichlet_multinomial(K: int, N: int, alpha: Sequence) -> SimplexMeasure:
    return _measure(StateSpace(K, N), lambda e: dirichlet_multinomial_pmf(e, N, alpha))


def stationary_nu(N: int, mu: Sequence, p=0) -> SimplexMeasure:
    """DM(N, N mu / p) for p > 0 and M(N, mu/|mu|) for p = 0."""
    K = len(mu)
    _check_vector(mu, K, "mu")
    if p < 0:
        raise ArgumentError(f"p must be nonnegative (got {p})")
    one = Fraction(1) if _exact(p, *mu) else 1.0
    if p == 0:
        total = sum(mu) * one
        return multinomial(K, N, [m * one / total for m in mu])
    return dirichlet_multinomial(K, N, [N * m * one / p for m in mu])


def wdm_weight(eta: Sequence[int], N: int, mu: Sequence, w: Sequence):
    """Unnormalised selection-at-birth mass, with alpha_k = N mu_k / w_k."""
    one = Fraction(1) if _exact(*mu, *w) else 1.0
    val = multinomial_coeff(N, eta) * one
    for m, wk, n in zip(mu, w, eta):
        val *= wk**n * rising(N * m * one / wk, n)
    return val


def wdm_normaliser(N: int, mu: Sequence, w: Sequence):
    K = len(mu)
    _check_vector(mu, K, "mu")
    _check_vector(w, K, "weights")
    return sum(wdm_weight(eta, N, mu, w) for eta in StateSpace(K, N).states)


def wdm_pmf(eta: Sequence[int], N: int, mu: Sequence, w: Sequence):
    return wdm_weight(eta, N, mu, w) / wdm_normaliser(N, mu, w)


def wdm(N: int, mu: Sequence, w: Sequence) -> SimplexMeasure:
    Z = wdm_normaliser(N, mu, w)
    return _measure(StateSpace(len(mu), N), lambda e: wdm_weight(e, N, mu, w) / Z)


def wdm_normaliser_mc(N: int, mu: Sequence, w: Sequence, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of the normaliser and its standard error.

    Uses |alpha|_(N) E[(sum_k w_k Y_k)^N] with Y ~ Dirichlet(alpha), which is
    the multinomial expansion of the power combined with Dirichlet moments.
    """
    alpha = np.array([N * float(m) / float(x) for m, x in zip(mu, w)])
    Y = rng.dirichlet(alpha, size=samples)
    vals = (Y @ np.array([float(x) for x in w])) ** N
    scale = float(rising(float(alpha.sum()), N))
    return scale * float(vals.mean()), scale * float(vals.std(ddof=1)) / np.sqrt(samples)


def sample_dirichlet_multinomial(N: int, alpha: Sequence, size: int, rng: np.random.Generator) -> np.ndarray:
    P = rng.dirichlet(np.asarray(alpha, dtype=float), size=size)
    return np.array([rng.multinomial(N, row) for row in P])


def stationary_of_generator(G: GeneratorMatrix) -> SimplexMeasure:
    """Solve pi G = 0 with sum(pi) = 1, replacing one equation by the sum."""
    n = G.dim
    if G.field == EXACT:
        A = [[Fraction(0)] * n for _ in range(n)]
        for r, c, v in G.entries():
            A[c][r] = v
        A[n - 1] = [Fraction(1)] * n
        b = [Fraction(0)] * (n - 1) + [Fraction(1)]
        try:
            pi = solve_vector(A, b)
        except SingularError as exc:
            raise ArithmeticError("generator has more than one stationary law") from exc
        return SimplexMeasure(G.space, pi)
    A = G.to_scipy().toarray().T
    A[n - 1, :] = 1.0
    b = np.zeros(n)
    b[n - 1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("generator has more than one stationary law") from exc
    for _ in range(2):
        pi = pi + np.linalg.solve(A, b - A @ pi)
    return SimplexMeasure(G.space, pi)
