"""Seeded Monte Carlo for S_N = f(s_1) + ... + f(s_N).

Randomness is counter-based: the t-th uniform of replica r is a SplitMix64
output of a key derived from (seed, r), so any replica can be regenerated
on its own and the way replicas are split into blocks or workers has no
effect on the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from .chain import InitialDistribution, ReversibleChain
from .errors import DimensionMismatchError, InvalidParameterError
from .observable import VectorObservable

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0xD1B54A32D192ED03)
BLOCK = 8192
CONFIDENCE = 0.99


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def replica_keys(seed: int, replicas: np.ndarray) -> np.ndarray:
    """Stream key for each replica index, a hash of (seed, index)."""
    s = _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) * _SEED_SALT + GOLDEN)
    r = np.asarray(replicas, dtype=np.uint64)
    return _mix64(s ^ _mix64(r * GOLDEN + _SEED_SALT))


def uniforms(keys: np.ndarray, counter: int) -> np.ndarray:
    """Draw number ``counter`` (0-based) of each stream, as doubles in [0, 1)."""
    offset = np.uint64((0x9E3779B97F4A7C15 * (counter + 1)) & 0xFFFFFFFFFFFFFFFF)
    x = _mix64(keys + offset)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def _closed_cumsum(rows: np.ndarray) -> np.ndarray:
    """Row-wise CDFs forced to exactly 1 from the last positive entry on,
    so rounding can never select a trailing zero-probability state."""
    cum = np.cumsum(rows, axis=1)
    last = rows.shape[1] - 1 - np.argmax(rows[:, ::-1] > 0, axis=1)
    cols = np.arange(rows.shape[1])
    cum[cols[None, :] >= last[:, None]] = 1.0
    return cum


class _Sampler:
    """Inverse-CDF sampling by binary search over flattened cumulative rows."""

    def __init__(self, P: np.ndarray, mu0: np.ndarray):
        n = P.shape[0]
        cum = _closed_cumsum(P)
        # row s occupies [s, s + 1] so one sorted array serves every row
        self.flat = (cum + np.arange(n)[:, None]).ravel()
        self.init = _closed_cumsum(mu0[None, :])[0]
        self.n = n

    def first(self, u: np.ndarray) -> np.ndarray:
        return np.minimum(np.searchsorted(self.init, u, side="right"), self.n - 1)

    def step(self, states: np.ndarray, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.flat, states + u, side="right")
        return np.minimum(idx - states * self.n, self.n - 1)


def _weights(mu0, chain: ReversibleChain) -> np.ndarray:
    w = mu0.weights if isinstance(mu0, InitialDistribution) else np.asarray(mu0, dtype=float)
    if w.shape != (chain.n,):
        raise DimensionMismatchError("initial law does not match the chain")
    return w


def simulate_sums(
    chain: ReversibleChain,
    values: np.ndarray,
    mu0,
    N: int,
    replica_ids: np.ndarray,
    seed: int,
    occupancy: bool = False,
):
    """S_N for the given replica indices; optionally also state visit counts."""
    w = _weights(mu0, chain)
    sampler = _Sampler(chain.P, w)
    keys = replica_keys(seed, replica_ids)
    states = sampler.first(uniforms(keys, 0))
    total = np.zeros((len(replica_ids), values.shape[1]))
    counts = np.zeros(chain.n, dtype=np.int64) if occupancy else None
    for t in range(1, N + 1):
        states = sampler.step(states, uniforms(keys, t))
        total += values[states]
        if occupancy:
            counts += np.bincount(states, minlength=chain.n)
    return total, counts


def _blocks(replicas: int, block: int):
    for start in range(0, replicas, block):
        yield np.arange(start, min(start + block, replicas), dtype=np.uint64)


def _run(chain, values, mu0, N, replicas, seed, occupancy=False, workers=1, block=BLOCK):
    jobs = list(_blocks(replicas, block))

    def one(ids):
        return simulate_sums(chain, values, mu0, N, ids, seed, occupancy)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(ids) for ids in jobs]
    sums = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, values.shape[1]))
    counts = sum(p[1] for p in parts) if occupancy else None
    return sums, counts


def clopper_pearson_upper(hits: int, trials: int, confidence: float = CONFIDENCE) -> float:
    """One-sided exact binomial upper confidence bound."""
    if hits >= trials:
        return 1.0
    return float(beta.ppf(confidence, hits + 1, trials - hits))


@dataclass(frozen=True)
class SimulationReport:
    N: int
    replicas: int
    epsilon_grid: tuple
    hits: tuple
    estimate: tuple
    upper99: tuple
    seed: int
    occupancy: tuple | None = None


def simulate_tails(
    chain: ReversibleChain,
    f: VectorObservable,
    mu0,
    N: int,
    replicas: int,
    epsilon_grid,
    seed: int,
    workers: int = 1,
    occupancy: bool = False,
) -> SimulationReport:
    """Count replicas with |S_N| >= eps N for each eps in the grid.

    s_0 ~ mu0, then s_1..s_N follow P; f is summed from s_1 on.
    """
    if N < 1 or replicas < 1:
        raise InvalidParameterError("need N >= 1 and replicas >= 1")
    grid = tuple(float(e) for e in epsilon_grid)
    if not grid:
        raise InvalidParameterError("empty epsilon grid")
    if f.n != chain.n:
        raise DimensionMismatchError("observable does not match the chain")
    sums, counts = _run(chain, f.values, mu0, N, replicas, seed, occupancy, workers)
    norms = np.linalg.norm(sums, axis=1)
    hits = tuple(int(np.count_nonzero(norms >= e * N)) for e in grid)
    est = tuple(h / replicas for h in hits)
    upper = tuple(clopper_pearson_upper(h, replicas) for h in hits)
    occ = tuple(int(c) for c in counts) if occupancy else None
    return SimulationReport(N, replicas, grid, hits, est, upper, seed, occ)


def estimate_mgf(
    chain: ReversibleChain,
    f: VectorObservable,
    u,
    mu0,
    N: int,
    replicas: int,
    seed: int,
    workers: int = 1,
) -> tuple[float, float]:
    """Sample mean of exp<S_N, u> and its standard error."""
    if replicas < 1 or N < 0:
        raise InvalidParameterError("need N >= 0 and replicas >= 1")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (f.m,):
        raise DimensionMismatchError("u does not match the observable dimension")
    if N == 0 or not np.any(u):
        return 1.0, 0.0
    sums, _ = _run(chain, f.values, mu0, N, replicas, seed, workers=workers)
    x = np.exp(sums @ u)
    se = float(x.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return float(x.mean()), se
