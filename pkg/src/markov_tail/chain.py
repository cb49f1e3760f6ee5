"""Finite reversible Markov chains: construction, file I/O and spectra."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import (
    CapacityError,
    ChainParseError,
    DimensionMismatchError,
    InvalidParameterError,
    NonStochasticRowError,
    NotReversibleError,
    NumericalFailureError,
    ReducibleChainError,
)
from .linalg import symmetric_eigh

ROW_SUM_TOL = 1e-9
BALANCE_TOL = 1e-10
LOAD_BALANCE_TOL = 1e-8
STATIONARY_TOL = 1e-10
POWER_RESIDUAL_TOL = 1e-12
POWER_MAX_ITER = 2_000_000
MAX_HYPERCUBE_DIM = 12


def _check_stochastic(P: np.ndarray) -> None:
    if np.any(P < 0) or np.any(P > 1):
        raise NonStochasticRowError("transition probabilities must lie in [0, 1]")
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        s = int(bad[0])
        raise NonStochasticRowError(f"row {s} sums to {sums[s]!r}")


def balance_violation(P: np.ndarray, mu: np.ndarray) -> float:
    """max_{s,t} |mu_s P_st - mu_t P_ts|."""
    flow = mu[:, None] * P
    return float(np.max(np.abs(flow - flow.T)))


@dataclass(frozen=True, eq=False)
class ReversibleChain:
    """Row-stochastic kernel ``P`` with positive invariant law ``mu``.

    Construction validates stochastic rows, positivity of ``mu``,
    stationarity and detailed balance (up to ``LOAD_BALANCE_TOL``; the
    builders are exact to rounding). Arrays are made read-only.
    """

    P: np.ndarray
    mu: np.ndarray
    label: str = ""
    n: int = field(init=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        mu = np.array(self.mu, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise InvalidParameterError("P must be a non-empty square matrix")
        if mu.shape != (P.shape[0],):
            raise DimensionMismatchError("mu length must equal the state count")
        _check_stochastic(P)
        if np.any(mu <= 0):
            raise ReducibleChainError("invariant distribution has a non-positive entry")
        if abs(mu.sum() - 1.0) > ROW_SUM_TOL:
            raise InvalidParameterError("mu must sum to 1")
        if np.max(np.abs(mu @ P - mu)) > STATIONARY_TOL:
            raise InvalidParameterError("mu is not invariant under P")
        viol = balance_violation(P, mu)
        if viol > LOAD_BALANCE_TOL:
            raise NotReversibleError(f"detailed balance violated by {viol:.3e}")
        P.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "n", P.shape[0])

    def symmetrized(self) -> np.ndarray:
        """S = D P D^-1 with D = diag(sqrt(mu)); symmetric by reversibility."""
        d = np.sqrt(self.mu)
        S = d[:, None] * self.P / d[None, :]
        return 0.5 * (S + S.T)

    def permuted(self, perm) -> "ReversibleChain":
        perm = np.asarray(perm)
        return ReversibleChain(self.P[np.ix_(perm, perm)], self.mu[perm], self.label)


@dataclass(frozen=True)
class InitialDistribution:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InvalidParameterError("weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > ROW_SUM_TOL:
            raise InvalidParameterError("weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, n: int, state: int) -> "InitialDistribution":
        w = np.zeros(n)
        w[state] = 1.0
        return cls(w)

    @classmethod
    def uniform(cls, n: int) -> "InitialDistribution":
        return cls(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    gap: float
    absolute_gap: float
    eigenvectors: np.ndarray | None = field(default=None, repr=False, compare=False)


# --- builders -------------------------------------------------------------


def build_complete(n: int) -> ReversibleChain:
    """Random walk on the complete graph K_n (no self-loops)."""
    if n < 2:
        raise InvalidParameterError("complete graph needs n >= 2")
    P = np.full((n, n), 1.0 / (n - 1))
    np.fill_diagonal(P, 0.0)
    return ReversibleChain(P, np.full(n, 1.0 / n), f"complete:{n}")


def build_lazy_hypercube(d: int) -> ReversibleChain:
    """Walk on {0,1}^d: flip one of d bits or hold, each w.p. 1/(d+1).

    State x is the integer whose binary digits are the coordinates.
    """
    if d < 1:
        raise InvalidParameterError("hypercube needs d >= 1")
    if d > MAX_HYPERCUBE_DIM:
        raise CapacityError(f"hypercube dimension capped at {MAX_HYPERCUBE_DIM}")
    n = 1 << d
    p = 1.0 / (d + 1)
    P = np.zeros((n, n))
    states = np.arange(n)
    P[states, states] = p
    for bit in range(d):
        P[states, states ^ (1 << bit)] = p
    return ReversibleChain(P, np.full(n, 1.0 / n), f"hypercube:{d}")


def build_cycle(n: int) -> ReversibleChain:
    """Simple random walk on Z/nZ."""
    if n < 3:
        raise InvalidParameterError("cycle needs n >= 3")
    P = np.zeros((n, n))
    s = np.arange(n)
    P[s, (s + 1) % n] = 0.5
    P[s, (s - 1) % n] = 0.5
    return ReversibleChain(P, np.full(n, 1.0 / n), f"cycle:{n}")


BUILDERS = {
    "complete": build_complete,
    "hypercube": build_lazy_hypercube,
    "cycle": build_cycle,
}


def chain_from_spec(spec: str) -> ReversibleChain:
    """``complete:N``, ``hypercube:D`` or ``cycle:N``; anything else is a file path."""
    kind, sep, arg = spec.partition(":")
    if sep and kind in BUILDERS:
        try:
            size = int(arg)
        except ValueError:
            raise InvalidParameterError(f"bad builder size in {spec!r}") from None
        return BUILDERS[kind](size)
    return load_chain(spec)


# --- invariant distribution ----------------------------------------------


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    """Left Perron vector of ``P`` by power iteration.

    Iterates with the lazy kernel (I + P)/2, which has the same invariant law
    but no periodicity, until ||mu P - mu||_inf <= 1e-12.
    """
    n = P.shape[0]
    lazy_T = 0.5 * (np.eye(n) + P).T
    mu = np.full(n, 1.0 / n)
    for _ in range(POWER_MAX_ITER):
        nxt = lazy_T @ mu
        nxt /= nxt.sum()
        mu = nxt
        if np.max(np.abs(P.T @ mu - mu)) <= POWER_RESIDUAL_TOL:
            return mu
    raise NumericalFailureError("power iteration for the invariant law did not converge")


def _is_irreducible(P: np.ndarray) -> bool:
    ncomp, _ = connected_components(P > 0, directed=True, connection="strong")
    return ncomp == 1


# --- file format -----------------------------------------------------------


def _strip_comments(text: str) -> list[str]:
    lines = []
    for line in text.splitlines():
        if line.lstrip().startswith("#"):
            continue
        lines.append(line)
    return lines


def parse_chain(text: str, label: str = "") -> ReversibleChain:
    lines = _strip_comments(text)
    body, mu_tokens = [], None
    for i, line in enumerate(lines):
        if line.strip().startswith("mu:"):
            body = lines[:i]
            rest = [line.strip()[3:]] + lines[i + 1 :]
            mu_tokens = " ".join(rest).split()
            break
    else:
        body = lines
    tokens = " ".join(body).split()
    if not tokens:
        raise ChainParseError("empty chain file")
    try:
        n = int(tokens[0])
    except ValueError:
        raise ChainParseError(f"state count must be an integer, got {tokens[0]!r}") from None
    if n < 1:
        raise ChainParseError("state count must be positive")
    if len(tokens) - 1 != n * n:
        raise ChainParseError(f"expected {n * n} probabilities, found {len(tokens) - 1}")
    try:
        P = np.array([float(t) for t in tokens[1:]]).reshape(n, n)
        mu = None if mu_tokens is None else np.array([float(t) for t in mu_tokens])
    except ValueError as exc:
        raise ChainParseError(str(exc)) from None
    if not np.all(np.isfinite(P)):
        raise ChainParseError("non-finite probability")
    _check_stochastic(P)

    if mu is None:
        if not _is_irreducible(P):
            raise ReducibleChainError("chain is reducible")
        mu = stationary_distribution(P)
        if np.min(mu) <= POWER_RESIDUAL_TOL:
            raise ReducibleChainError("invariant law has a zero entry")
    elif mu.shape != (n,):
        raise ChainParseError(f"mu line must hold {n} values")
    viol = balance_violation(P, mu)
    if viol > LOAD_BALANCE_TOL:
        raise NotReversibleError(f"detailed balance violated by {viol:.3e}")
    return ReversibleChain(P, mu, label)


def load_chain(path: str | os.PathLike) -> ReversibleChain:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_chain(text, label=os.fspath(path))


def format_chain(chain: ReversibleChain, include_mu: bool = True) -> str:
    """Text form that :func:`parse_chain` reads back bit-for-bit."""
    out = [f"# {chain.label}" if chain.label else "# chain", str(chain.n)]
    for row in chain.P:
        out.append(" ".join(repr(float(x)) for x in row))
    if include_mu:
        out.append("mu: " + " ".join(repr(float(x)) for x in chain.mu))
    return "\n".join(out) + "\n"


def save_chain(chain: ReversibleChain, path: str | os.PathLike, include_mu: bool = True) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_chain(chain, include_mu))


# --- spectral quantities -----------------------------------------------------


def spectrum(chain: ReversibleChain, method: str = "auto") -> Spectrum:
    """All eigenvalues of P, via the similar symmetric matrix S.

    The default-method result is cached on the (immutable) chain.
    """
    if method == "auto":
        cached = chain.__dict__.get("_spectrum")
        if cached is None:
            cached = _compute_spectrum(chain, method)
            object.__setattr__(chain, "_spectrum", cached)
        return cached
    return _compute_spectrum(chain, method)


def _compute_spectrum(chain: ReversibleChain, method: str) -> Spectrum:
    w, v = symmetric_eigh(chain.symmetrized(), method)
    if chain.n == 1:
        gap = absolute_gap = 1.0
    else:
        gap = float(1.0 - w[1])
        absolute_gap = float(1.0 - np.max(np.abs(w[1:])))
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, gap, absolute_gap, v)


def spread(chain: ReversibleChain) -> float:
    return float(chain.mu.max() / chain.mu.min())


def chi_distance(mu0: InitialDistribution | np.ndarray, chain: ReversibleChain) -> float:
    """sqrt(sum_s mu0_s^2 / mu_s), the L2(mu) norm of the density mu0/mu."""
    w = mu0.weights if isinstance(mu0, InitialDistribution) else np.asarray(mu0, dtype=float)
    if w.shape != chain.mu.shape:
        raise DimensionMismatchError(f"initial law has {w.size} entries, chain has {chain.n}")
    return math.sqrt(float(np.sum(w * w / chain.mu)))
