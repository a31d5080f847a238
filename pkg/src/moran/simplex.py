"""The discrete simplex of type-count vectors and its combinatorics.

States are compositions of N into K nonnegative parts, listed in
colexicographic order: the last coordinate varies slowest.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial, prod
from typing import Iterator, Sequence

import numpy as np


class ArgumentError(ValueError):
    pass


@lru_cache(maxsize=None)
def binom(n: int, k: int) -> int:
    if k < 0 or n < 0 or k > n:
        return 0
    return comb(n, k)


def cardinality(K: int, N: int) -> int:
    if int(K) != K or int(N) != N or K < 2 or N < 0:
        raise ArgumentError(f"need integers K >= 2, N >= 0 (got K={K}, N={N})")
    return binom(K - 1 + N, N)


def _compositions(K: int, N: int) -> Iterator[tuple[int, ...]]:
    # last coordinate is the outermost loop
    if K == 1:
        yield (N,)
        return
    for last in range(N + 1):
        for head in _compositions(K - 1, N - last):
            yield head + (last,)


class StateSpace:
    """Ranked enumeration of E_{K,N}."""

    def __init__(self, K: int, N: int):
        if N < 1:
            raise ArgumentError(f"need N >= 1 (got {N})")
        self.size = cardinality(K, N)
        self.K = int(K)
        self.N = int(N)
        self.states: tuple[tuple[int, ...], ...] = tuple(_compositions(self.K, self.N))
        self._array = None

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i: int) -> tuple[int, ...]:
        return self.states[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, StateSpace) and (self.K, self.N) == (other.K, other.N)

    def __hash__(self) -> int:
        return hash((StateSpace, self.K, self.N))

    def __repr__(self) -> str:
        return f"StateSpace(K={self.K}, N={self.N})"

    @property
    def array(self) -> np.ndarray:
        if self._array is None:
            a = np.array(self.states, dtype=np.int64)
            a.setflags(write=False)
            self._array = a
        return self._array

    def check(self, eta: Sequence[int]) -> tuple[int, ...]:
        eta = tuple(int(v) for v in eta)
        if len(eta) != self.K or min(eta) < 0 or sum(eta) != self.N:
            raise ArgumentError(f"{eta} is not in E_{{{self.K},{self.N}}}")
        return eta

    def rank(self, eta: Sequence[int]) -> int:
        eta = self.check(eta)
        r = 0
        rest = self.N
        for m in range(self.K, 1, -1):
            after = rest - eta[m - 1]
            r += binom(rest + m - 1, m - 1) - binom(after + m - 1, m - 1)
            rest = after
        return r

    def unrank(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.size:
            raise ArgumentError(f"rank {i} out of range [0, {self.size})")
        eta = [0] * self.K
        rest = self.N
        for m in range(self.K, 1, -1):
            top = binom(rest + m - 1, m - 1)
            v = 0
            while v < rest and top - binom(rest - v - 1 + m - 1, m - 1) <= i:
                v += 1
            i -= top - binom(rest - v + m - 1, m - 1)
            eta[m - 1] = v
            rest -= v
        eta[0] = rest
        return tuple(eta)

    def corner(self, k: int) -> tuple[int, ...]:
        """N e_k, with k counted from 1."""
        if not 1 <= k <= self.K:
            raise ArgumentError(f"type index {k} out of range 1..{self.K}")
        return tuple(self.N if j == k - 1 else 0 for j in range(self.K))


def psi(eta: Sequence[int]) -> tuple[int, ...]:
    """Sorted word with eta(1) ones, eta(2) twos, and so on."""
    if any(int(v) != v or v < 0 for v in eta):
        raise ArgumentError(f"not a composition: {tuple(eta)}")
    return tuple(k + 1 for k, c in enumerate(eta) for _ in range(int(c)))


def phi(word: Sequence[int], K: int) -> tuple[int, ...]:
    counts = [0] * K
    for letter in word:
        if not 1 <= letter <= K:
            raise ArgumentError(f"letter {letter} outside 1..{K}")
        counts[letter - 1] += 1
    return tuple(counts)


def rising(x, n: int):
    return prod((x + k for k in range(n)), start=x * 0 + 1)


def falling(x, n: int):
    return prod((x - k for k in range(n)), start=x * 0 + 1)


def multinomial_coeff(N: int, eta: Sequence[int]) -> int:
    if sum(eta) != N or min(eta) < 0:
        raise ArgumentError(f"{tuple(eta)} is not a composition of {N}")
    return factorial(N) // prod(factorial(int(v)) for v in eta)


def compositions(K: int, L: int) -> tuple[tuple[int, ...], ...]:
    """All compositions of L into K parts, same order as StateSpace."""
    return tuple(_compositions(K, L))


def graded_indices(K: int, N: int, start: int = 1) -> list[tuple[int, ...]]:
    """Union of E_{K-1,L} for L = start..N, grouped by L."""
    return [eta for L in range(start, N + 1) for eta in _compositions(K - 1, L)]
