"""Eigenvalue catalogs, symmetrised-tensor eigenfunctions and brute-force checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from ._linalg import solve_exact
from .generators import (
    EXACT,
    GeneratorMatrix,
    MutationMatrix,
    build_moran_generator,
)
from .simplex import ArgumentError, StateSpace, binom, compositions, graded_indices

CLUSTER_TOL = 1e-9
DEFAULT_CAP = 5000
# a double-precision eigenvector basis this ill-conditioned signals Jordan
# blocks, whose eigenvalues float64 only resolves to about eps**(1/size)
DEFECT_COND = 1e6
EXTENDED_DPS = 100
EXTENDED_CAP = 200


class CapacityError(RuntimeError):
    pass


class DegenerateError(ValueError):
    pass


@dataclass
class SpectrumCatalog:
    """Eigenvalues with multiplicities; label is "zero", a list of etas, or None."""

    entries: list[tuple[object, int, object]]

    @property
    def total(self) -> int:
        return sum(m for _, m, _ in self.entries)

    def values(self) -> np.ndarray:
        return np.array([complex(v) for v, m, _ in self.entries for _ in range(m)])

    def multiplicities(self) -> dict:
        return {v: m for v, m, _ in self.entries}

    def as_set(self) -> set:
        return {v for v, _, _ in self.entries}

    def to_json(self) -> list[dict]:
        out = []
        for v, m, lab in self.entries:
            z = complex(v)
            if lab is not None and lab != "zero":
                lab = [list(eta) for eta in lab]
            out.append({"re": z.real, "im": z.imag, "multiplicity": m, "label": lab})
        return out


def _is_exact(x) -> bool:
    return isinstance(x, (int, Rational)) and not isinstance(x, bool)


def _sort_key(v):
    z = complex(v)
    return (-z.real, -z.imag)


def aggregate(pairs: Sequence[tuple[object, object]], exact: bool, tol: float = CLUSTER_TOL) -> SpectrumCatalog:
    """Group (value, label) pairs into a catalog; exact values group by equality."""
    groups: list[list] = []
    if exact:
        index: dict = {}
        for v, lab in pairs:
            if v in index:
                g = groups[index[v]]
                g[1] += 1
                g[2].append(lab)
            else:
                index[v] = len(groups)
                groups.append([v, 1, [lab]])
    else:
        for v, lab in pairs:
            z = complex(v)
            for g in groups:
                if abs(g[0] - z) <= tol:
                    g[1] += 1
                    g[2].append(lab)
                    break
            else:
                groups.append([z, 1, [lab]])
    entries = []
    for v, m, labs in groups:
        lab = "zero" if labs == ["zero"] or "zero" in labs else labs
        entries.append((v, m, lab))
    entries.sort(key=lambda e: _sort_key(e[0]))
    return SpectrumCatalog(entries)


def predicted_spectrum_moran(eigs: Sequence, K: int, N: int, p=0, variant: str = "N") -> SpectrumCatalog:
    """Catalog of Q_{N,p} from the K-1 nonzero eigenvalues of Q."""
    eigs = list(eigs)
    if len(eigs) != K - 1:
        raise ArgumentError(f"expected {K - 1} nonzero eigenvalues of Q, got {len(eigs)}")
    if p < 0:
        raise ArgumentError(f"p must be nonnegative (got {p})")
    exact = all(_is_exact(v) for v in eigs) and _is_exact(p)
    if exact:
        eigs = [Fraction(v) for v in eigs]
        c = Fraction(p) / (N if variant == "N" else N - 1)
        zero = Fraction(0)
    else:
        eigs = [complex(v) for v in eigs]
        c = float(p) / (N if variant == "N" else N - 1)
        zero = 0j
    pairs = [(zero, "zero")]
    for eta in graded_indices(K, N):
        L = sum(eta)
        lam = sum((n * l for n, l in zip(eta, eigs)), zero) - c * L * (L - 1)
        pairs.append((lam, eta))
    return aggregate(pairs, exact)


def predicted_spectrum_mutation(eigs: Sequence, K: int, N: int) -> SpectrumCatalog:
    return predicted_spectrum_moran(eigs, K, N, 0)


def predicted_spectrum_reproduction(K: int, N: int) -> SpectrumCatalog:
    if K < 2 or N < 2:
        raise ArgumentError("need K >= 2 and N >= 2")
    entries = [(0, K, "zero")]
    entries += [(-L * (L - 1), binom(K + L - 2, L), None) for L in range(2, N + 1)]
    return SpectrumCatalog(entries)


def predicted_spectrum_parent_independent(mu: Sequence, N: int, p=0) -> SpectrumCatalog:
    """lambda_{L,p} = -|mu| L - (p/N) L (L-1) with multiplicity C(K+L-2, L)."""
    K = len(mu)
    total = sum(mu)
    entries = [(0 * total, 1, "zero")]
    for L in range(1, N + 1):
        lam = -total * L - p * L * (L - 1) / (Fraction(N) if _is_exact(p) else N)
        entries.append((lam, binom(K + L - 2, L), list(compositions(K - 1, L))))
    entries.sort(key=lambda e: _sort_key(e[0]))
    return SpectrumCatalog(entries)


def circulant_eigenvalues(K: int, theta: float) -> list[complex]:
    return [
        complex(-2 * (1 + theta) * math.sin(math.pi * k / K) ** 2, (1 - theta) * math.sin(2 * math.pi * k / K))
        for k in range(1, K)
    ]


def _mp_eigvals(rows: Sequence[Sequence], dps: int) -> list[complex]:
    import mpmath

    with mpmath.workdps(dps):
        A = mpmath.matrix([[mpmath.mpf(v.numerator) / v.denominator if isinstance(v, Fraction) else mpmath.mpf(v)
                            for v in r] for r in rows])
        E = mpmath.eig(A, left=False, right=False)
        tiny = mpmath.mpf(10) ** (-(dps // 2))
        # real roots come back with imaginary noise far below double precision
        return [complex(z.real) if abs(z.imag) <= tiny * max(1, abs(z)) else complex(z) for z in E]


def _dense_eigvals(rows, A: np.ndarray, dps: int | None, auto: bool) -> list[complex]:
    """rows: exact entries, or a callable producing them on demand."""
    get = rows if callable(rows) else (lambda: rows)
    if dps:
        return _mp_eigvals(get(), dps)
    w, V = np.linalg.eig(A)
    if auto and A.shape[0] <= EXTENDED_CAP and np.linalg.cond(V) > DEFECT_COND:
        return _mp_eigvals(get(), EXTENDED_DPS)
    return [complex(z) for z in w]


def mutation_eigenvalues(Q: MutationMatrix, dps: int | None = None, auto: bool = True) -> list:
    """The K-1 nonzero characteristic roots of Q.

    Parent-independent matrices (every K=2 matrix is one up to relabelling)
    get the exact value -|mu|. Otherwise a dense solver is used, switching
    to extended precision for defective matrices or when dps is given.
    """
    K = Q.K
    if Q.is_parent_independent:
        return [-sum(Q.mu)] * (K - 1)
    if K == 2:
        return [Q.rates[0][0] + Q.rates[1][1]]
    vals = _dense_eigvals(Q.rates, Q.array(), dps, auto)
    drop = min(range(K), key=lambda i: abs(vals[i]))
    return [complex(v) for i, v in enumerate(vals) if i != drop]


def parent_independent_eigenvectors(mu: Sequence) -> list[list]:
    """U_k = e_k/mu_k - e_K/mu_K, k < K, all with eigenvalue -|mu|."""
    K = len(mu)
    one = Fraction(1) if all(_is_exact(v) for v in mu) else 1.0
    out = []
    for k in range(K - 1):
        v = [0 * one] * K
        v[k] = one / mu[k]
        v[K - 1] = -one / mu[K - 1]
        out.append(v)
    return out


def brute_spectrum(G: GeneratorMatrix, cap: int = DEFAULT_CAP, dps: int | None = None, auto: bool = True) -> SpectrumCatalog:
    """Dense nonsymmetric eigensolve of a generator.

    Runs in double precision unless dps is given or (with auto) the computed
    eigenvector basis is numerically singular, in which case the solve is
    repeated with extended precision.
    """
    if G.dim > cap:
        raise CapacityError(f"dimension {G.dim} exceeds cap {cap}")
    dense = G.to_scipy().toarray()
    vals = _dense_eigvals(lambda: G.to_dense().tolist(), dense, dps, auto)
    return SpectrumCatalog([(complex(v), 1, None) for v in sorted(vals, key=_sort_key)])


def brute_matrix_spectrum(Q: MutationMatrix, dps: int | None = None, auto: bool = True) -> SpectrumCatalog:
    vals = _dense_eigvals(Q.rates, Q.array(), dps, auto)
    return SpectrumCatalog([(complex(v), 1, None) for v in sorted(vals, key=_sort_key)])


def _perfect_matching(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    match = maximum_bipartite_matching(csr_matrix(adj.astype(np.int8)), perm_type="column")
    return int(np.sum(match >= 0)) == n


def spectra_distance(A: SpectrumCatalog, B: SpectrumCatalog) -> float:
    """Bottleneck matching distance between the expanded multisets."""
    a, b = A.values(), B.values()
    if len(a) != len(b):
        raise ArgumentError(f"multisets differ in size: {len(a)} vs {len(b)}")
    if len(a) == 0:
        return 0.0
    D = np.abs(a[:, None] - b[None, :])
    cand = np.unique(D)
    lo, hi = 0, len(cand) - 1
    # the largest candidate always admits a perfect matching
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching(D <= cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def spectral_gap(cat: SpectrumCatalog, tol: float = CLUSTER_TOL) -> float:
    nonzero = []
    for v, _, _ in cat.entries:
        if _is_exact(v):
            if v != 0:
                nonzero.append(-v)
        elif abs(complex(v)) > tol:
            nonzero.append(-complex(v).real)
    if not nonzero:
        raise DegenerateError("catalog has no nonzero eigenvalue")
    return min(nonzero)


def verify_slem_equality(Q: MutationMatrix, N: int, p=0, dps: int | None = None, tol: float = 1e-9) -> bool:
    """Spectral gaps of Q and Q_{N,p} agree (equivalently their SLEMs)."""
    g_q = spectral_gap(brute_matrix_spectrum(Q, dps))
    g_big = spectral_gap(brute_spectrum(build_moran_generator(Q, N, p), dps=dps))
    return abs(float(g_q) - float(g_big)) <= tol


# -- symmetrised tensors -------------------------------------------------------


def _key(vectors: Sequence[Sequence]) -> tuple:
    return tuple(sorted(tuple(v) for v in vectors))


def _hadamard(u: Sequence, v: Sequence) -> tuple:
    return tuple(a * b for a, b in zip(u, v))


class XiTilde:
    """Memoised evaluator of xi-tilde on a fixed state space."""

    def __init__(self, space: StateSpace):
        self.space = space
        self._memo: dict[tuple, list] = {}

    def __call__(self, vectors: Sequence[Sequence]) -> list:
        L = len(vectors)
        if L == 0:
            return [1] * len(self.space)
        if L > self.space.N:
            raise ArgumentError(f"degree {L} exceeds N={self.space.N}")
        if any(len(v) != self.space.K for v in vectors):
            raise ArgumentError(f"vectors must have length K={self.space.K}")
        return self._eval(_key(vectors))

    def _eval(self, key: tuple) -> list:
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if len(key) == 1:
            v = key[0]
            out = [sum((c * x for c, x in zip(eta, v)), 0 * v[0]) for eta in self.space.states]
        else:
            # peel off the last vector, then subtract the Hadamard merges
            *head, last = key
            out = [a * b for a, b in zip(self._eval(_key(head)), self._eval((last,)))]
            for i in range(len(head)):
                merged = head[:i] + [_hadamard(head[i], last)] + head[i + 1:]
                corr = self._eval(_key(merged))
                out = [a - b for a, b in zip(out, corr)]
        self._memo[key] = out
        return out


def xi_tilde(vectors: Sequence[Sequence], space: StateSpace) -> list:
    return XiTilde(space)(vectors)


def _multiset(eta: Sequence[int], U: Sequence[Sequence]) -> list:
    if len(eta) > len(U) and any(eta[len(U):]):
        raise ArgumentError(f"index {eta} uses eigenvectors beyond the {len(U)} supplied")
    return [tuple(U[k]) for k, n in enumerate(eta) for _ in range(n)]


def eigenfunction(eta: Sequence[int], U: Sequence[Sequence], space: StateSpace, xi: XiTilde | None = None) -> list:
    """xi-tilde of U_k repeated eta(k) times: a right eigenfunction of Q_N."""
    xi = xi or XiTilde(space)
    return xi(_multiset(eta, U))


def moran_eigenfunction(eta: Sequence[int], U: Sequence[Sequence], eigs: Sequence, G: GeneratorMatrix) -> list:
    """Right eigenfunction of Q_{N,p} for the eigenvalue labelled by eta.

    The leading part is the Q_N eigenfunction; the interaction term only
    feeds lower degrees, so the correction is found by back substitution in
    the basis of all lower-degree eigenfunctions. Exact inputs give an
    exact result.
    """
    space = G.space
    K, N = space.K, space.N
    if len(U) != K - 1 or len(eigs) != K - 1:
        raise ArgumentError("need a full set of K-1 eigenvectors and eigenvalues")
    eta = tuple(eta)
    L = sum(eta)
    p = G.params.get("p", 0)
    c = p / (N if G.params.get("variant", "N") == "N" else N - 1)
    xi = XiTilde(space)
    top = eigenfunction(eta, U, space, xi)
    if L <= 1 or p == 0:
        return top
    lower = [()] + [e for e in graded_indices(K, L - 1)]
    basis = [xi(_multiset(e, U)) for e in lower]
    lam_of = lambda e: sum((n * l for n, l in zip(e, eigs)), 0) - c * sum(e) * (sum(e) - 1)  # noqa: E731
    lam = lam_of(eta)
    exact = G.field == EXACT and all(_is_exact(v) for row in U for v in row)
    # coordinates of G b and of the residual of the leading term in the lower basis
    cols = [G.apply(b) for b in basis]
    resid = [g - lam * t for g, t in zip(G.apply(top), top)]
    coords = _coordinates(basis, cols + [resid], exact)
    n = len(basis)
    M = [[coords[j][i] for j in range(n)] for i in range(n)]
    r = [coords[n][i] for i in range(n)]
    # solve (M - lam) x = -r by back substitution, degree by degree
    x = [0] * n
    for i in range(n - 1, -1, -1):
        rhs = -r[i] - sum((M[i][j] * x[j] for j in range(i + 1, n)), 0)
        d = M[i][i] - lam
        if (d == 0) if exact else abs(d) < 1e-12:
            if (rhs != 0) if exact else abs(rhs) > 1e-9:
                raise ArgumentError(f"eigenvalue for {eta} is defective; no eigenfunction")
            x[i] = 0
        else:
            x[i] = rhs / d
    return [t + sum((xj * b[s] for xj, b in zip(x, basis)), 0) for s, t in enumerate(top)]


def _coordinates(basis: list[list], targets: list[list], exact: bool) -> list[list]:
    """Coordinates of each target in the span of basis (consistent systems)."""
    B = np.array(basis, dtype=object if exact else complex).T
    T = np.array(targets, dtype=object if exact else complex).T
    if not exact:
        X, *_ = np.linalg.lstsq(B, T, rcond=None)
        return X.T.tolist()
    # pick a set of rows on which the basis is invertible
    rows = _independent_rows(B)
    X = solve_exact(B[rows].tolist(), T[rows].tolist())
    return [[X[i][j] for i in range(len(basis))] for j in range(len(targets))]


def _independent_rows(B: np.ndarray) -> list[int]:
    chosen: list[int] = []
    echelon: list[list[Fraction]] = []
    pivots: list[int] = []
    for r in range(B.shape[0]):
        v = [Fraction(x) for x in B[r]]
        for e, pc in zip(echelon, pivots):
            if v[pc] != 0:
                f = v[pc] / e[pc]
                v = [a - f * b for a, b in zip(v, e)]
        nz = next((i for i, a in enumerate(v) if a != 0), None)
        if nz is not None:
            chosen.append(r)
            echelon.append(v)
            pivots.append(nz)
            if len(chosen) == B.shape[1]:
                break
    if len(chosen) < B.shape[1]:
        raise ArgumentError("lower-degree eigenfunctions are linearly dependent")
    return chosen
