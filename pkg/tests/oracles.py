"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package's algorithms; each routine goes back to
first principles (explicit particle configurations, brute sums).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import factorial, prod

import numpy as np


def simplex_states(K, N):
    """All compositions, ordered with the last coordinate slowest."""
    pts = [c for c in itertools.product(range(N + 1), repeat=K) if sum(c) == N]
    return sorted(pts, key=lambda c: tuple(reversed(c)))


def counts(config, K):
    out = [0] * K
    for x in config:
        out[x] += 1
    return tuple(out)


def particle_rates(config, mu, p, N):
    """Outgoing jumps of the labelled particle system as {target: rate}."""
    K = len(mu)
    out = {}
    for a, i in enumerate(config):
        for j in range(K):
            if j == i:
                continue
            r = mu[i][j] + sum(Fraction(p) / N for b, y in enumerate(config) if b != a and y == j)
            if r:
                tgt = config[:a] + (j,) + config[a + 1:]
                out[tgt] = out.get(tgt, 0) + r
    return out


def lumped_generator(mu, N, p):
    """Generator on counts obtained by lumping the labelled chain on [K]^N.

    Also asserts strong lumpability: every configuration with the same
    counts must give the same lumped row.
    """
    K = len(mu)
    states = simplex_states(K, N)
    idx = {s: i for i, s in enumerate(states)}
    G = [[Fraction(0)] * len(states) for _ in states]
    seen = {}
    for config in itertools.product(range(K), repeat=N):
        eta = counts(config, K)
        row = {}
        for tgt, r in particle_rates(config, mu, p, N).items():
            key = idx[counts(tgt, K)]
            row[key] = row.get(key, 0) + r
        if eta in seen:
            assert seen[eta] == row, "chain is not lumpable"
            continue
        seen[eta] = row
        i = idx[eta]
        for j, r in row.items():
            G[i][j] += r
            G[i][i] -= r
    return states, G


def xi_injections(vectors, eta):
    """Sum over injective particle assignments of the product of entries."""
    word = [k for k, c in enumerate(eta) for _ in range(c)]
    total = 0
    for pick in itertools.permutations(range(len(word)), len(vectors)):
        total += prod((v[word[a]] for v, a in zip(vectors, pick)), start=1)
    return total


def multinomial_mass(eta, q):
    N = sum(eta)
    c = factorial(N) // prod(factorial(n) for n in eta)
    return c * prod((x**n for x, n in zip(q, eta)), start=Fraction(1))


def dm_mass(eta, alpha):
    """Dirichlet-multinomial mass via Gamma-ratio products, written out."""
    N = sum(eta)
    A = sum(alpha)
    c = Fraction(factorial(N), prod(factorial(n) for n in eta))
    num = prod((prod((a + i for i in range(n)), start=Fraction(1)) for a, n in zip(alpha, eta)), start=Fraction(1))
    den = prod((A + i for i in range(N)), start=Fraction(1))
    return c * num / den


def hahn_series(n, x, M, beta, gamma):
    """Terminating 3F2 evaluated term by term from Pochhammer symbols."""
    def poch(a, k):
        return prod((a + i for i in range(k)), start=Fraction(1))

    return sum(
        poch(-n, j) * poch(n + beta + gamma - 1, j) * poch(-x, j) / (poch(beta, j) * poch(-M, j) * factorial(j))
        for j in range(n + 1)
        if poch(-M, j) != 0
    )


def krawtchouk_series(n, x, N, q):
    def poch(a, k):
        return prod((a + i for i in range(k)), start=Fraction(1))

    return sum(poch(-n, j) * poch(-x, j) / (poch(-N, j) * factorial(j) * q**j) for j in range(n + 1))


def expm_dense(G, t):
    """Matrix exponential by scaling and squaring of a Taylor series."""
    A = np.asarray(G, dtype=float) * t
    s = max(0, int(np.ceil(np.log2(max(np.abs(A).sum(axis=1).max(), 1e-300)))) + 1)
    A = A / 2**s
    E = np.eye(len(A))
    term = np.eye(len(A))
    for k in range(1, 30):
        term = term @ A / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def matching_distance(a, b):
    """Bottleneck distance by trying every pairing (small inputs only)."""
    best = float("inf")
    for perm in itertools.permutations(range(len(b))):
        best = min(best, max(abs(a[i] - b[j]) for i, j in enumerate(perm)))
    return best
