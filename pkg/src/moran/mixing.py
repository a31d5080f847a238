"""Transition semigroups, distances to equilibrium and cutoff formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
from scipy.stats import binom as binom_dist
from scipy.stats import poisson

from .generators import EXACT, GeneratorMatrix, MutationMatrix
from .measures import SimplexMeasure, multinomial, stationary_nu, stationary_of_generator
from .orthopoly import kernel
from .simplex import ArgumentError, StateSpace

POISSON_TAIL = 1e-13


class UnsupportedModelError(ValueError):
    pass


def _start_index(space: StateSpace, start) -> int:
    if isinstance(start, (int, np.integer)):
        if not 0 <= start < len(space):
            raise ArgumentError(f"start index {start} out of range")
        return int(start)
    return space.rank(start)


def _poisson_weights(rate_t: float) -> np.ndarray:
    n_max = int(poisson.isf(POISSON_TAIL, rate_t)) + 1 if rate_t > 0 else 0
    return poisson.pmf(np.arange(n_max + 1), rate_t)


def _uniformize(G: GeneratorMatrix, t: float, V: np.ndarray) -> np.ndarray:
    """V e^{tG} for a block of row vectors V."""
    if t < 0:
        raise ArgumentError(f"time must be nonnegative (got {t})")
    A = G.to_scipy()
    lam = float(max(-A.diagonal().min(), 0.0))
    if t == 0 or lam == 0:
        return V.copy()
    P = (A / lam).tocsr()
    PT = P.T.tocsr()
    weights = _poisson_weights(lam * t)
    out = weights[0] * V
    cur = V
    for w in weights[1:]:
        cur = cur + (PT @ cur.T).T  # cur (I + G/lam)
        out = out + w * cur
    return out / out.sum(axis=-1, keepdims=True)


def transition_row(G: GeneratorMatrix, t: float, start) -> SimplexMeasure:
    i = _start_index(G.space, start)
    v = np.zeros((1, G.dim))
    v[0, i] = 1.0
    return SimplexMeasure(G.space, _uniformize(G, float(t), v)[0])


def transition_matrix(G: GeneratorMatrix, t: float) -> np.ndarray:
    return _uniformize(G, float(t), np.eye(G.dim))


def eigenvalue_level(L: int, N: int, mu: Sequence, p) -> float:
    """lambda_{L,p} = -|mu| L - (p/N) L (L-1)."""
    return -float(sum(mu)) * L - float(p) / N * L * (L - 1)


def transition_spectral(xi: Sequence[int], eta: Sequence[int], t: float, N: int, mu: Sequence, p=0) -> float:
    """P_t(eta -> xi) from the kernel-polynomial expansion."""
    if t < 0:
        raise ArgumentError(f"time must be nonnegative (got {t})")
    nu = stationary_nu(N, mu, p)
    s = 1.0
    for L in range(1, N + 1):
        s += math.exp(eigenvalue_level(L, N, mu, p) * t) * float(kernel(L, eta, xi, N, mu, p))
    return float(nu[xi]) * s


def require_parent_independent(G: GeneratorMatrix) -> tuple[tuple, object]:
    Q: MutationMatrix = G.params.get("Q")
    if G.kind != "parent_independent" or Q is None or G.params.get("variant", "N") != "N":
        raise UnsupportedModelError(
            "spectral and closed-form methods need parent-independent mutation with the p/N convention"
        )
    return Q.mu, G.params.get("p", 0)


def transition_row_spectral(G: GeneratorMatrix, t: float, start) -> SimplexMeasure:
    mu, p = require_parent_independent(G)
    eta = G.space[_start_index(G.space, start)]
    N = G.space.N
    return SimplexMeasure(G.space, np.array([transition_spectral(xi, eta, t, N, mu, p) for xi in G.space]))


def tv(m1: SimplexMeasure, m2: SimplexMeasure):
    if m1.space != m2.space:
        raise ArgumentError("measures live on different spaces")
    if m1.is_exact and m2.is_exact:
        return sum(abs(a - b) for a, b in zip(m1.probs, m2.probs)) / 2
    return 0.5 * float(np.abs(m1.as_array() - m2.as_array()).sum())


def chi2(m2: SimplexMeasure, m1: SimplexMeasure):
    """Chi-square distance of m2 from the reference m1."""
    if m1.space != m2.space:
        raise ArgumentError("measures live on different spaces")
    if any(v <= 0 for v in m1.probs):
        raise ArgumentError("reference measure must be positive everywhere")
    if m1.is_exact and m2.is_exact:
        return sum((b - a) ** 2 / a for a, b in zip(m1.probs, m2.probs))
    a, b = m1.as_array(), m2.as_array()
    return float(np.sum((b - a) ** 2 / a))


def _log_rising(x: float, n: int) -> float:
    return math.lgamma(x + n) - math.lgamma(x)


def chi2_closed_form(t: float, k: int, N: int, mu: Sequence, p=0) -> float:
    """Chi-square distance from N e_k at time t, parent-independent model."""
    mu = [float(m) for m in mu]
    total, mk = sum(mu), mu[k - 1]
    p = float(p)
    if p == 0:
        log_val = N * math.log1p(math.exp(-2 * total * t) * (total / mk - 1))
        return math.expm1(log_val) if log_val < 709 else math.inf
    A, ak = N * total / p, N * mk / p
    s = 0.0
    for L in range(1, N + 1):
        log_h = (
            math.lgamma(N + 1) - math.lgamma(L + 1) - math.lgamma(N - L + 1)
            + math.log(A + 2 * L - 1) + _log_rising(A, L - 1) + _log_rising(A - ak, L)
            - _log_rising(A + N, L) - _log_rising(ak, L)
        )
        log_term = 2 * eigenvalue_level(L, N, mu, p) * t + log_h
        if log_term > 709:
            return math.inf
        term = math.exp(log_term)
        s += term
        if L > 10 and term < 1e-17 * s:
            break
    return s


def K_const(k: int, mu: Sequence, p=0):
    total = sum(mu)
    mk = mu[k - 1]
    return total * (total - mk) / (mk * (total + p))


def t_cutoff(N: int, c: float, mu: Sequence) -> float:
    return (math.log(N) + c) / (2 * float(sum(mu)))


def cutoff_profile_chi2(c: float, k: int, mu: Sequence, p=0) -> float:
    return math.expm1(float(K_const(k, mu, p)) * math.exp(-c))


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2))


def cutoff_profile_tv_p0(c: float, k: int, mu: Sequence) -> float:
    return 2 * norm_cdf(0.5 * math.sqrt(float(K_const(k, mu, 0)) * math.exp(-c))) - 1


def binomial_tv(N: int, psi1: float, psi2: float) -> float:
    for s in (psi1, psi2):
        if not 0 < s < 1:
            raise ArgumentError(f"binomial parameter must lie in (0,1) (got {s})")
    x = np.arange(N + 1)
    return 0.5 * float(np.abs(binom_dist.pmf(x, N, psi1) - binom_dist.pmf(x, N, psi2)).sum())


def tv_from_corner_p0(t: float, k: int, N: int, mu: Sequence) -> float:
    """TV to equilibrium from N e_k at p = 0, via the k-th count alone."""
    total = float(sum(mu))
    pk = float(mu[k - 1]) / total
    e = math.exp(-total * t)
    return binomial_tv(N, pk, pk * (1 - e) + e)


def law_at_time_p0(t: float, k: int, N: int, mu: Sequence) -> SimplexMeasure:
    """Multinomial law at time t started from N e_k, no interaction."""
    K = len(mu)
    total = float(sum(mu))
    e = math.exp(-total * t)
    q = [float(m) / total * (1 - e) + (e if j == k - 1 else 0.0) for j, m in enumerate(mu)]
    q = [v / sum(q) for v in q]
    return multinomial(K, N, q)


def tv_lower_bound(c: float, k: int, Q: MutationMatrix, lam: float, V: Sequence, N: int | None = None):
    """1 - kappa (|V|_inf / |v_k|) e^{-c} with kappa = 8 (2 lam + |Q|_inf).

    Returns (bound, t) where t = (ln N - c) / (2 lam), or None without N.
    """
    A = Q.array()
    v = np.asarray([complex(x) for x in V])
    if not lam > 0:
        raise ArgumentError(f"lambda must be positive (got {lam})")
    if np.max(np.abs(A @ v + lam * v)) > 1e-9:
        raise ArgumentError("V is not an eigenvector of Q for -lambda")
    vk = abs(v[k - 1])
    if vk == 0:
        raise ArgumentError(f"component {k} of V vanishes")
    kappa = 8 * (2 * lam + float(Q.sup_norm()))
    bound = 1 - kappa * float(np.max(np.abs(v))) / vk * math.exp(-c)
    t = None if N is None else (math.log(N) - c) / (2 * lam)
    return bound, t


def kappa(Q: MutationMatrix, lam: float) -> float:
    return 8 * (2 * lam + float(Q.sup_norm()))


def max_tv(G: GeneratorMatrix, t: float) -> float:
    P = transition_matrix(G, t)
    pi = stationary_of_generator(G).as_array()
    return 0.5 * float(np.abs(P - pi[None, :]).sum(axis=1).max())


@dataclass
class MixingCurve:
    grid: np.ndarray
    values: np.ndarray
    metric: str
    provenance: str

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.metric not in ("tv", "chi2"):
            raise ArgumentError(f"unknown metric {self.metric!r}")
        if len(self.grid) != len(self.values):
            raise ArgumentError("grid and values differ in length")
        if np.any(np.diff(self.grid) <= 0):
            raise ArgumentError("time grid must be strictly increasing")

    def rows(self) -> list[tuple]:
        return [(float(t), float(v), self.metric, self.provenance) for t, v in zip(self.grid, self.values)]


def estimate_decay_rate(curve: MixingCurve, tail: float = 0.6) -> tuple[float, float]:
    """Fit log d(t) = a + b log t - rho t on the last part of the curve.

    Returns (rho, b); b estimates s - 1 for a Jordan block of size s.
    """
    n = len(curve.grid)
    if n < 6:
        raise ArgumentError(f"need at least 6 points to fit a decay rate (got {n})")
    m = max(3, int(math.ceil(tail * n)))
    t = curve.grid[-m:]
    y = np.log(curve.values[-m:])
    X = np.column_stack([np.ones_like(t), np.log(t), -t])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[2]), float(coef[1])


def carre_du_champ(G: GeneratorMatrix, f: Sequence) -> list | np.ndarray:
    f2 = [v * v for v in f]
    Gf = G.apply(list(f))
    Gf2 = G.apply(f2)
    out = [a - 2 * v * b for a, v, b in zip(Gf2, f, Gf)]
    return out if G.field == EXACT else np.array(out, dtype=float)


def _same(a, b, exact: bool, rtol: float = 1e-12) -> bool:
    if exact:
        return a == b
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def detailed_balance_violations(G: GeneratorMatrix, pi: Sequence) -> list[tuple[int, int]]:
    probs = pi.probs if isinstance(pi, SimplexMeasure) else pi
    exact = G.field == EXACT and all(isinstance(v, (int, Rational)) for v in probs)
    if any(v <= 0 for v in probs):
        raise ArgumentError("detailed balance needs a strictly positive measure")
    rate = {(r, c): v for r, c, v in G.entries() if r != c}
    bad = []
    for (r, c), v in rate.items():
        back = rate.get((c, r), 0)
        if not _same(probs[r] * v, probs[c] * back, exact):
            bad.append((r, c))
    return bad


def check_detailed_balance(G: GeneratorMatrix, pi) -> bool:
    return not detailed_balance_violations(G, pi)


def kolmogorov_cycle_check(G: GeneratorMatrix, max_len: int = 4) -> tuple[bool, list | None]:
    """Compare rate products around simple cycles in both directions.

    Returns (ok, witness) where the witness lists the states of the first
    violating cycle. Pairs are checked first, then 4-cycles, then
    triangles; anchors run from the most concentrated states outwards.
    """
    exact = G.field == EXACT
    rate = {(r, c): v for r, c, v in G.entries() if r != c}
    nbrs: dict[int, set] = {}
    for r, c in rate:
        nbrs.setdefault(r, set()).add(c)
        nbrs.setdefault(c, set()).add(r)
    states = G.space.states
    order = sorted(range(G.dim), key=lambda i: (-max(states[i]), i))
    pos = {v: i for i, v in enumerate(order)}
    label = lambda cyc: [states[i] for i in cyc]  # noqa: E731

    def product(cyc):
        out = 1
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            out = out * rate.get((a, b), 0)
        return out

    def bad(cyc):
        return not _same(product(cyc), product(cyc[::-1]), exact)

    for a in order:
        for b in sorted(nbrs.get(a, ()), key=pos.get):
            if pos[b] > pos[a] and bad([a, b]):
                return False, label([a, b])
    if max_len >= 4:
        for a in order:
            for b in sorted(nbrs.get(a, ()), key=pos.get):
                if pos[b] <= pos[a]:
                    continue
                for c in sorted(nbrs[b], key=pos.get):
                    if pos[c] <= pos[a] or c == a:
                        continue
                    for d in sorted(nbrs[c] & nbrs[a], key=pos.get):
                        if pos[d] <= pos[b] or d in (b, c):
                            continue
                        if bad([a, b, c, d]):
                            return False, label([a, b, c, d])
    if max_len >= 3:
        for a in order:
            for b in sorted(nbrs.get(a, ()), key=pos.get):
                if pos[b] <= pos[a]:
                    continue
                for c in sorted(nbrs[b] & nbrs[a], key=pos.get):
                    if pos[c] > pos[b] and bad([a, b, c]):
                        return False, label([a, b, c])
    return True, None
