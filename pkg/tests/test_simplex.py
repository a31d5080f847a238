from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

import oracles
from moran.simplex import (
    ArgumentError,
    StateSpace,
    cardinality,
    compositions,
    falling,
    graded_indices,
    multinomial_coeff,
    phi,
    psi,
    rising,
)

small = st.tuples(st.integers(2, 5), st.integers(1, 7))


def test_small_ordering():
    assert list(StateSpace(2, 2).states) == [(2, 0), (1, 1), (0, 2)]
    assert list(StateSpace(3, 1).states) == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    with pytest.raises(ArgumentError):
        StateSpace(1, 3)


@given(small)
def test_order_matches_enumeration(kn):
    K, N = kn
    space = StateSpace(K, N)
    assert list(space.states) == oracles.simplex_states(K, N)
    assert len(space) == cardinality(K, N) == comb(N + K - 1, K - 1)


@given(small, st.data())
def test_rank_roundtrip(kn, data):
    space = StateSpace(*kn)
    i = data.draw(st.integers(0, len(space) - 1))
    assert space.rank(space.unrank(i)) == i
    assert space.unrank(space.rank(space[i])) == space[i]


def test_rank_rejects_bad_states():
    space = StateSpace(3, 2)
    for bad in [(1, 1), (3, 0, 0), (-1, 3, 0)]:
        with pytest.raises(ArgumentError):
            space.rank(bad)
    with pytest.raises(ArgumentError):
        space.unrank(len(space))
    with pytest.raises(ArgumentError):
        StateSpace(3, 0)


def test_corner():
    assert StateSpace(3, 4).corner(2) == (0, 4, 0)
    with pytest.raises(ArgumentError):
        StateSpace(3, 4).corner(4)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=5))
def test_psi_phi_inverse(eta):
    word = psi(eta)
    assert list(word) == sorted(word)
    assert phi(word, len(eta)) == tuple(eta)


@given(st.integers(-6, 6), st.integers(0, 6))
def test_rising_falling_relation(x, n):
    assert rising(x, n) == (-1) ** n * falling(-x, n)
    assert rising(Fraction(x, 3), n) == falling(Fraction(x, 3) + n - 1, n)


def test_pochhammer_keeps_type():
    assert isinstance(rising(Fraction(1, 2), 0), Fraction)
    assert rising(3, 0) == 1 and falling(5, 2) == 20


def test_multinomial_coeff_sums():
    for K, N in [(2, 5), (3, 4), (4, 3)]:
        assert sum(multinomial_coeff(N, e) for e in StateSpace(K, N)) == K**N


def test_compositions_and_grading():
    assert compositions(2, 2) == ((2, 0), (1, 1), (0, 2))
    g = graded_indices(3, 3)
    assert [sum(e) for e in g] == sorted(sum(e) for e in g)
    assert len(g) == sum(comb(L + 1, 1) for L in range(1, 4))
    assert graded_indices(3, 2, start=0)[0] == (0, 0)
