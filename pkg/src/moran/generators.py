"""Mutation matrices and sparse generators over the discrete simplex."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .simplex import ArgumentError, StateSpace

EXACT = "exact"
DOUBLE = "double"
ROW_SUM_RTOL = 1e-12


class ValidationError(ValueError):
    pass


def to_exact(x) -> Fraction:
    """Rational value of x; floats are read through their shortest repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise ValidationError(f"not a rate: {x!r}")
    if isinstance(x, (int, np.integer, Rational)):
        return Fraction(int(x)) if isinstance(x, (int, np.integer)) else Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {x!r} as a rational") from exc
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValidationError(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    raise ValidationError(f"unsupported scalar {x!r}")


def _is_exact_input(x) -> bool:
    return isinstance(x, (int, np.integer, Fraction, str)) and not isinstance(x, bool)


def coerce(x, fld: str):
    return to_exact(x) if fld == EXACT else float(x)


@dataclass(frozen=True)
class MutationMatrix:
    K: int
    rates: tuple[tuple, ...]
    field: str
    mu: tuple | None = None  # set when rates[i][j] = mu[j] off the diagonal

    def array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.rates])

    def as_field(self, fld: str) -> "MutationMatrix":
        if fld == self.field:
            return self
        conv = lambda v: coerce(v, fld)  # noqa: E731
        mu = None if self.mu is None else tuple(conv(v) for v in self.mu)
        return MutationMatrix(self.K, tuple(tuple(conv(v) for v in r) for r in self.rates), fld, mu)

    def scaled(self, c) -> "MutationMatrix":
        c = coerce(c, self.field)
        mu = None if self.mu is None else tuple(c * v for v in self.mu)
        return MutationMatrix(self.K, tuple(tuple(c * v for v in r) for r in self.rates), self.field, mu)

    def sup_norm(self):
        """Maximum absolute row sum."""
        return max(sum(abs(v) for v in row) for row in self.rates)

    @property
    def is_parent_independent(self) -> bool:
        return self.mu is not None


def _reachable(adj: list[list[int]], start: int) -> set[int]:
    seen = {start}
    todo = deque([start])
    while todo:
        u = todo.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def validate_mutation_matrix(raw: Sequence[Sequence], field: str | None = None) -> MutationMatrix:
    """Check a square rate matrix and recompute its diagonal.

    The field defaults to exact when every entry is an int, Fraction or
    decimal string, and to double otherwise.
    """
    rows = [list(r) for r in raw]
    K = len(rows)
    if K < 2 or any(len(r) != K for r in rows):
        raise ValidationError(f"mutation matrix must be square with K >= 2 (got {K} rows)")
    if field is None:
        field = EXACT if all(_is_exact_input(v) for r in rows for v in r) else DOUBLE
    if field not in (EXACT, DOUBLE):
        raise ArgumentError(f"unknown field {field!r}")
    vals = [[coerce(v, field) for v in r] for r in rows]
    for i in range(K):
        for j in range(K):
            if i != j and (vals[i][j] < 0 or vals[i][j] != vals[i][j]):
                raise ValidationError(f"negative off-diagonal rate at ({i + 1},{j + 1}): {vals[i][j]}")
    for i in range(K):
        vals[i][i] = -sum(vals[i][j] for j in range(K) if j != i)

    fwd = [[j for j in range(K) if j != i and vals[i][j] > 0] for i in range(K)]
    rev = [[i for i in range(K) if i != j and vals[i][j] > 0] for j in range(K)]
    for adj, word in ((fwd, "reach"), (rev, "be reached from")):
        seen = _reachable(adj, 0)
        if len(seen) < K:
            miss = min(set(range(K)) - seen)
            raise ValidationError(f"reducible: type 1 cannot {word} type {miss + 1}")
    return MutationMatrix(K, tuple(tuple(r) for r in vals), field)


def build_parent_independent(mu: Sequence, field: str | None = None) -> MutationMatrix:
    mu = list(mu)
    if len(mu) < 2:
        raise ArgumentError("need at least two types")
    if field is None:
        field = EXACT if all(_is_exact_input(v) for v in mu) else DOUBLE
    mu = [coerce(v, field) for v in mu]
    if any(not v > 0 for v in mu):
        raise ArgumentError(f"parent-independent rates must be positive: {mu}")
    K = len(mu)
    raw = [[mu[j] for j in range(K)] for _ in range(K)]
    Q = validate_mutation_matrix(raw, field)
    return MutationMatrix(K, Q.rates, field, tuple(mu))


def circulant_matrix(K: int, theta, field: str | None = None) -> MutationMatrix:
    """Rate 1 to the right neighbour and theta to the left one, cyclically."""
    raw = [[0] * K for _ in range(K)]
    for i in range(K):
        raw[i][(i + 1) % K] += 1
        raw[i][(i - 1) % K] += theta
    return validate_mutation_matrix(raw, field)


def load_mutation_json(text: str) -> MutationMatrix:
    """Parse {"K": int, "rates": [[...]]}; numbers and decimal strings are exact."""
    try:
        obj = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "rates" not in obj:
        raise ValidationError('expected an object with a "rates" array')
    rates = obj["rates"]
    K = obj.get("K", len(rates) if isinstance(rates, list) else None)
    if not isinstance(rates, list) or not isinstance(K, int) or len(rates) != K:
        raise ValidationError(f'"rates" must be a {K}x{K} array')
    return validate_mutation_matrix(rates, EXACT)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Row-compressed rate matrix; columns sorted within each row."""

    space: StateSpace
    indptr: np.ndarray
    indices: np.ndarray
    data: object  # list of Fractions (exact) or float ndarray (double)
    kind: str
    field: str
    params: dict = dc_field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.space)

    def row(self, r: int):
        a, b = self.indptr[r], self.indptr[r + 1]
        return self.indices[a:b], self.data[a:b]

    def entries(self):
        for r in range(self.dim):
            cols, vals = self.row(r)
            for c, v in zip(cols, vals):
                yield r, int(c), v

    def diagonal(self) -> list:
        out = [0] * self.dim
        for r, c, v in self.entries():
            if r == c:
                out[r] = v
        return out

    def exit_rates(self) -> list:
        return [-d for d in self.diagonal()]

    def to_scipy(self) -> sp.csr_matrix:
        data = np.array([float(v) for v in self.data]) if self.field == EXACT else self.data
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.dim, self.dim))

    def to_dense(self) -> np.ndarray:
        """Float array for double generators, object array of Fractions otherwise."""
        if self.field == DOUBLE:
            return self.to_scipy().toarray()
        out = np.full((self.dim, self.dim), Fraction(0), dtype=object)
        for r, c, v in self.entries():
            out[r, c] = v
        return out

    def apply(self, f: Sequence) -> list | np.ndarray:
        """(G f)(eta) for a value vector f over the states."""
        if self.field == DOUBLE and isinstance(f, np.ndarray) and f.dtype != object:
            return self.to_scipy() @ f
        out = []
        for r in range(self.dim):
            cols, vals = self.row(r)
            out.append(sum((v * f[c] for c, v in zip(cols, vals)), 0))
        return out

    def left(self, pi: Sequence) -> list | np.ndarray:
        """(pi G)(xi) for a row vector pi."""
        if self.field == DOUBLE and isinstance(pi, np.ndarray) and pi.dtype != object:
            return self.to_scipy().T @ pi
        out = [0] * self.dim
        for r, c, v in self.entries():
            out[c] += pi[r] * v
        return out

    def check_conservation(self) -> None:
        for r in range(self.dim):
            _, vals = self.row(r)
            total = sum(vals, 0)
            if self.field == EXACT:
                if total != 0:
                    raise ValidationError(f"row {r} sums to {total}")
            elif abs(total) > ROW_SUM_RTOL * max(1.0, float(np.sum(np.abs(vals)))):
                raise ValidationError(f"row {r} sums to {total}")


def _assemble(space: StateSpace, rate: Callable, kind: str, fld: str, params: dict) -> GeneratorMatrix:
    K = space.K
    zero = Fraction(0) if fld == EXACT else 0.0
    indptr = [0]
    indices: list[int] = []
    data: list = []
    for eta in space.states:
        r = space.rank(eta)
        row: dict[int, object] = {}
        out = zero
        for i in range(K):
            if eta[i] == 0:
                continue
            for j in range(K):
                if j == i:
                    continue
                q = rate(eta, i, j)
                if q == 0:
                    continue
                if q < 0:
                    raise ValidationError(f"negative rate {q} from {eta} ({i + 1}->{j + 1})")
                xi = list(eta)
                xi[i] -= 1
                xi[j] += 1
                c = space.rank(xi)
                row[c] = row.get(c, zero) + q
                out += q
        row[r] = -out
        for c in sorted(row):
            indices.append(c)
            data.append(row[c])
        indptr.append(len(indices))
    if fld == DOUBLE:
        data = np.asarray(data, dtype=float)
    return GeneratorMatrix(
        space, np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64),
        data, kind, fld, params,
    )


def _pair_factor(N: int, p, variant: str, fld: str):
    if variant == "N":
        return p / coerce(N, fld)
    if variant == "N-1":
        if N < 2:
            raise ArgumentError("the p/(N-1) variant needs N >= 2")
        return p / coerce(N - 1, fld)
    raise ArgumentError(f"unknown pair normalisation {variant!r}")


def build_mutation_generator(Q: MutationMatrix, N: int) -> GeneratorMatrix:
    space = StateSpace(Q.K, N)
    mu = Q.rates
    return _assemble(space, lambda e, i, j: e[i] * mu[i][j], "mutation", Q.field, {"Q": Q, "N": N})


def build_reproduction_generator(K: int, N: int, field: str = EXACT) -> GeneratorMatrix:
    if N < 2:
        raise ArgumentError("reproduction needs N >= 2")
    space = StateSpace(K, N)
    one = coerce(1, field)
    return _assemble(space, lambda e, i, j: one * e[i] * e[j], "reproduction", field, {"N": N})


def build_moran_generator(Q: MutationMatrix, N: int, p=0, variant: str = "N") -> GeneratorMatrix:
    """Q_N + (p/N) A_N; variant="N-1" uses p/(N-1) instead."""
    p = coerce(p, Q.field)
    if p < 0:
        raise ArgumentError(f"p must be nonnegative (got {p})")
    space = StateSpace(Q.K, N)
    mu = Q.rates
    c = _pair_factor(N, p, variant, Q.field) if p != 0 else p
    kind = "parent_independent" if Q.is_parent_independent else "moran"
    return _assemble(
        space, lambda e, i, j: e[i] * (mu[i][j] + c * e[j]), kind, Q.field,
        {"Q": Q, "N": N, "p": p, "variant": variant},
    )


def build_selection_generator(mu: Sequence, weights: Sequence, N: int, field: str | None = None) -> GeneratorMatrix:
    """Parent-independent mutation with type-dependent reproduction weights.

    Rate eta -> eta - e_i + e_j is eta(i) (mu_j + w_j eta(j) / N).
    """
    Q = build_parent_independent(mu, field)
    w = [coerce(v, Q.field) for v in weights]
    if len(w) != Q.K or any(not v > 0 for v in w):
        raise ArgumentError("weights must be a positive K-vector")
    m = Q.mu
    n = coerce(N, Q.field)
    space = StateSpace(Q.K, N)
    return _assemble(
        space, lambda e, i, j: e[i] * (m[j] + w[j] * e[j] / n), "selection", Q.field,
        {"Q": Q, "N": N, "weights": tuple(w)},
    )
