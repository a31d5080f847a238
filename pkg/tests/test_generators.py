import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from moran.generators import (
    DOUBLE,
    EXACT,
    ValidationError,
    build_moran_generator,
    build_mutation_generator,
    build_parent_independent,
    build_reproduction_generator,
    build_selection_generator,
    circulant_matrix,
    load_mutation_json,
    to_exact,
    validate_mutation_matrix,
)
from moran.simplex import ArgumentError

EX31 = [[0, 7, 2], [1, 0, 6], [5, 7, 0]]

rational = st.fractions(min_value=0, max_value=3, max_denominator=6)


def dense(G):
    return [[Fraction(v) for v in row] for row in G.to_dense()]


def test_diagonal_recomputed():
    Q = validate_mutation_matrix(EX31)
    assert Q.field == EXACT
    assert [Q.rates[i][i] for i in range(3)] == [-9, -7, -12]
    assert Q.sup_norm() == 24


@pytest.mark.parametrize(
    "raw",
    [
        [[0, -1], [1, 0]],
        [[0, 1, 0], [1, 0, 0], [0, 0, 0]],
        [[0, 1], [0, 0]],
        [[0, 1, 2], [1, 0]],
        [[0]],
        [[0, float("nan")], [1, 0]],
    ],
)
def test_invalid_matrices(raw):
    with pytest.raises(ValidationError):
        validate_mutation_matrix(raw)


def test_one_way_chain_is_reducible():
    # every type reachable from type 1, but not the other way round
    with pytest.raises(ValidationError, match="be reached"):
        validate_mutation_matrix([[0, 1, 0], [0, 0, 1], [0, 1, 0]])


def test_float_rates_read_by_repr():
    assert to_exact(0.1) == Fraction(1, 10)
    assert to_exact("2/7") == Fraction(2, 7)
    with pytest.raises(ValidationError):
        to_exact("x")
    Q = validate_mutation_matrix([[0, 0.1], [0.2, 0]])
    assert Q.field == DOUBLE
    assert Q.as_field(EXACT).rates[0][0] == Fraction(-1, 10)


def test_json_loader_is_exact():
    Q = load_mutation_json(json.dumps({"K": 2, "rates": [[0, 0.1], [0.3, 0]]}))
    assert Q.field == EXACT and Q.rates[0][1] == Fraction(1, 10)
    for bad in ["[1,2]", '{"K": 3, "rates": [[0, 1], [1, 0]]}', "{oops"]:
        with pytest.raises(ValidationError):
            load_mutation_json(bad)


def test_parent_independent_and_circulant():
    Q = build_parent_independent([1, 2, 3])
    assert Q.is_parent_independent and Q.rates[1] == (1, -4, 3)
    C = circulant_matrix(3, 2)
    assert C.rates[0] == (-3, 1, 2) and not C.is_parent_independent
    with pytest.raises(ArgumentError):
        build_parent_independent([1, 0])


def test_small_moran_matrix_by_hand():
    Q = build_parent_independent([Fraction(1, 2), Fraction(1, 2)])
    G = build_moran_generator(Q, 2, 1)
    # states (2,0), (1,1), (0,2)
    assert dense(G) == [[-1, 1, 0], [1, -2, 1], [0, 1, -1]]


@settings(max_examples=25, deadline=None)
@given(
    st.integers(2, 3),
    st.integers(1, 4),
    st.lists(st.lists(rational, min_size=3, max_size=3), min_size=3, max_size=3),
    st.sampled_from([0, Fraction(1, 2), 2]),
)
def test_lumping_of_labelled_chain(K, N, raw, p):
    raw = [[v + Fraction(1, 10) for v in row[:K]] for row in raw[:K]]
    Q = validate_mutation_matrix(raw, EXACT)
    states, ref = oracles.lumped_generator(Q.rates, N, p)
    G = build_moran_generator(Q, N, p)
    assert list(G.space.states) == states
    assert dense(G) == ref


@given(st.integers(2, 4), st.integers(1, 5))
def test_conservation_and_locality(K, N):
    Q = circulant_matrix(K, Fraction(1, 3))
    G = build_moran_generator(Q, N, 2)
    G.check_conservation()
    for r, c, v in G.entries():
        a, b = G.space[r], G.space[c]
        assert sum(abs(x - y) for x, y in zip(a, b)) in (0, 2)
        if r != c:
            assert v > 0


def test_scaling_and_decomposition():
    Q = validate_mutation_matrix(EX31)
    N, p = 4, Fraction(3, 2)
    M = np.array(dense(build_moran_generator(Q, N, p)), dtype=object)
    M2 = np.array(dense(build_moran_generator(Q.scaled(2), N, 2 * p)), dtype=object)
    assert (M2 == 2 * M).all()
    QN = np.array(dense(build_mutation_generator(Q, N)), dtype=object)
    AN = np.array(dense(build_reproduction_generator(3, N)), dtype=object)
    assert (M == QN + p / N * AN).all()


def test_variant_uses_n_minus_one():
    Q = build_parent_independent([1, 1])
    a = np.array(dense(build_moran_generator(Q, 3, 2, variant="N-1")), dtype=object)
    b = np.array(dense(build_moran_generator(Q, 3, Fraction(3))), dtype=object)
    assert (a == b).all()
    with pytest.raises(ArgumentError):
        build_moran_generator(Q, 3, 1, variant="bogus")


def test_double_field_matches_exact():
    Q = validate_mutation_matrix(EX31)
    Ge = build_moran_generator(Q, 3, Fraction(1, 2))
    Gd = build_moran_generator(Q.as_field(DOUBLE), 3, 0.5)
    np.testing.assert_allclose(Gd.to_dense(), np.array(Ge.to_dense(), dtype=float), rtol=1e-15)
    f = np.arange(Gd.dim, dtype=float)
    np.testing.assert_allclose(Gd.apply(f), Gd.to_dense() @ f)
    np.testing.assert_allclose(Gd.left(f), f @ Gd.to_dense())


def test_negative_p_rejected():
    with pytest.raises(ArgumentError):
        build_moran_generator(build_parent_independent([1, 1]), 2, -1)


def test_selection_generator_rates():
    G = build_selection_generator([1, 2], [1, 3], 2)
    # from (1,1): 1 -> 2 at 1*(2 + 3*1/2), 2 -> 1 at 1*(1 + 1*1/2)
    row = dict(zip(*G.row(1)))
    assert row[2] == Fraction(7, 2) and row[0] == Fraction(3, 2)
