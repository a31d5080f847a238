"""Event-driven simulation of the Moran particle system.

Random numbers come from a counter-based hash (splitmix64 finaliser) keyed
by (seed, replica, draw index), so each replica's trajectory is fixed by its
key alone and replicas can be batched, split or parallelised freely.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .generators import MutationMatrix
from .measures import SimplexMeasure
from .simplex import ArgumentError, StateSpace

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_CHUNK = 1 << 14


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def replica_keys(seed: int, replicas: np.ndarray) -> np.ndarray:
    s = _mix(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    return _mix(s ^ _mix(replicas.astype(np.uint64) * _GOLDEN + np.uint64(1)))


def uniforms(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    """Open-interval uniforms for each (key, counter) pair."""
    bits = _mix(keys + counters.astype(np.uint64) * _GOLDEN) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class SimConfig:
    K: int
    N: int
    rates: tuple[tuple[float, ...], ...]
    p: float
    start: tuple[int, ...]
    horizon: float
    replicas: int
    seed: int
    variant: str = "N"

    def __post_init__(self):
        if self.replicas < 1:
            raise ArgumentError("need at least one replica")
        if self.horizon < 0:
            raise ArgumentError("horizon must be nonnegative")
        if self.p < 0:
            raise ArgumentError("p must be nonnegative")
        StateSpace(self.K, self.N).check(self.start)
        if len(self.rates) != self.K or any(len(r) != self.K for r in self.rates):
            raise ArgumentError("rate matrix shape does not match K")

    @classmethod
    def from_matrix(cls, Q: MutationMatrix, N: int, p, start, horizon, replicas, seed, variant="N"):
        rates = tuple(tuple(float(v) for v in row) for row in Q.rates)
        return cls(Q.K, N, rates, float(p), tuple(start), float(horizon), int(replicas), int(seed), variant)

    @property
    def pair_factor(self) -> float:
        return self.p / (self.N if self.variant == "N" else self.N - 1)

    def mutation_array(self) -> np.ndarray:
        A = np.array(self.rates, dtype=float)
        np.fill_diagonal(A, 0.0)
        return A


def event_rates(state: Sequence[int], cfg: SimConfig) -> np.ndarray:
    """K x K table of jump rates eta(i) (mu_ij + c eta(j)), zero diagonal."""
    eta = np.asarray(state, dtype=float)
    R = eta[:, None] * (cfg.mutation_array() + cfg.pair_factor * eta[None, :])
    np.fill_diagonal(R, 0.0)
    return R


def _run(cfg: SimConfig, replicas: np.ndarray) -> np.ndarray:
    K = cfg.K
    mu = cfg.mutation_array()
    c = cfg.pair_factor
    off = ~np.eye(K, dtype=bool).ravel()
    moves = np.array([(i, j) for i in range(K) for j in range(K)])[off]
    states = np.tile(np.asarray(cfg.start, dtype=np.int64), (len(replicas), 1))
    if cfg.horizon == 0:
        return states
    keys = replica_keys(cfg.seed, replicas)
    clock = np.zeros(len(replicas))
    draws = np.zeros(len(replicas), dtype=np.uint64)
    active = np.arange(len(replicas))
    while active.size:
        eta = states[active].astype(float)
        R = (eta[:, :, None] * (mu[None] + c * eta[:, None, :])).reshape(len(active), K * K)[:, off]
        total = R.sum(axis=1)
        k = keys[active]
        u1 = uniforms(k, draws[active])
        u2 = uniforms(k, draws[active] + np.uint64(1))
        draws[active] += np.uint64(2)
        clock[active] += -np.log(u1) / total
        go = clock[active] <= cfg.horizon
        idx = active[go]
        if idx.size:
            cum = np.cumsum(R[go], axis=1)
            pick = (cum < (u2[go] * total[go])[:, None]).sum(axis=1)
            pick = np.minimum(pick, cum.shape[1] - 1)
            src, dst = moves[pick, 0], moves[pick, 1]
            states[idx, src] -= 1
            states[idx, dst] += 1
        active = idx
    return states


def worker_cap() -> int:
    raw = os.environ.get("MORAN_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ArgumentError(f"MORAN_THREADS must be an integer (got {raw!r})")
    return os.cpu_count() or 1


def simulate_batch(cfg: SimConfig, replicas: Sequence[int] | None = None, workers: int | None = None) -> np.ndarray:
    """End states at the horizon, one row per replica."""
    reps = np.arange(cfg.replicas) if replicas is None else np.asarray(replicas, dtype=np.int64)
    chunks = [reps[i:i + _CHUNK] for i in range(0, len(reps), _CHUNK)] or [reps]
    workers = min(workers or worker_cap(), len(chunks))
    if workers <= 1:
        parts = [_run(cfg, ch) for ch in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ch: _run(cfg, ch), chunks))
    return np.concatenate(parts, axis=0)


def sample_state_at(cfg: SimConfig, replica: int) -> tuple[int, ...]:
    return tuple(int(v) for v in _run(cfg, np.array([replica]))[0])


def histogram(samples: np.ndarray, space: StateSpace) -> np.ndarray:
    counts = np.zeros(len(space), dtype=np.int64)
    rows, n = np.unique(samples, axis=0, return_counts=True)
    for row, m in zip(rows, n):
        counts[space.rank(row)] += m
    return counts


def _plugin_tv(counts: np.ndarray, ref: np.ndarray) -> float:
    return 0.5 * float(np.abs(counts / counts.sum() - ref).sum())


def empirical_tv(
    samples: np.ndarray,
    reference,
    coordinate: int | None = None,
    boot: int = 200,
    seed: int = 0,
) -> tuple[float, float]:
    """Plug-in TV between the sample histogram and a reference law.

    reference is a SimplexMeasure on the full simplex or, with coordinate=k,
    a pmf over the values 0..N of the k-th count. Returns (estimate, stderr)
    with a multinomial bootstrap standard error.
    """
    samples = np.asarray(samples)
    if coordinate is None:
        if not isinstance(reference, SimplexMeasure):
            raise ArgumentError("full-state comparison needs a SimplexMeasure reference")
        ref = reference.as_array()
        counts = histogram(samples, reference.space)
    else:
        ref = np.asarray(reference, dtype=float)
        counts = np.bincount(samples[:, coordinate - 1], minlength=len(ref))
        if len(counts) != len(ref):
            raise ArgumentError("reference pmf is shorter than the observed range")
    est = _plugin_tv(counts, ref)
    rng = np.random.default_rng(seed)
    n = int(counts.sum())
    reps = rng.multinomial(n, counts / n, size=boot)
    stats = 0.5 * np.abs(reps / n - ref[None, :]).sum(axis=1)
    return est, float(stats.std(ddof=1))
