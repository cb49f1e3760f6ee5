"""Vector-valued observables f: states -> R^m and their summary statistics."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .chain import ReversibleChain
from .errors import ChainParseError, DimensionMismatchError, InvalidParameterError, PreconditionError
from .linalg import symmetric_eigvals

CENTERED_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class VectorObservable:
    """Values ``f(s)`` (one row per state) plus statistics under the chain's mu.

    ``principal_variance`` is the top eigenvalue of the mu-covariance of f,
    which for a centered observable is sup_{|u|=1} E<f,u>^2.
    """

    values: np.ndarray
    mean: np.ndarray
    linf: float
    principal_variance: float

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def is_centered(self, tol: float = CENTERED_TOL) -> bool:
        return float(np.max(np.abs(self.mean), initial=0.0)) <= tol


def second_moment(values: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Sigma = sum_s mu_s f(s) f(s)^T."""
    return (values * mu[:, None]).T @ values


def make_observable(values, chain: ReversibleChain) -> VectorObservable:
    vals = np.array(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.ndim != 2 or vals.shape[1] < 1:
        raise InvalidParameterError("observable values must be an n x m array")
    if vals.shape[0] != chain.n:
        raise DimensionMismatchError(f"observable has {vals.shape[0]} rows, chain has {chain.n} states")
    mu = chain.mu
    mean = mu @ vals
    linf = float(np.max(np.linalg.norm(vals, axis=1)))
    cov = second_moment(vals - mean, mu)
    pv = float(max(symmetric_eigvals(cov)[0], 0.0))
    vals.setflags(write=False)
    mean.setflags(write=False)
    return VectorObservable(vals, mean, linf, pv)


def center(f: VectorObservable, chain: ReversibleChain) -> VectorObservable:
    """Subtract the stationary mean.

    Done twice so the residual mean is at rounding level rather than
    ``n * eps * max|f|``; an already-centered f moves by O(1e-16) only.
    """
    vals = f.values - f.mean
    vals = vals - chain.mu @ vals
    return make_observable(vals, chain)


def principal_variance(f: VectorObservable, chain: ReversibleChain) -> float:
    """Largest eigenvalue of sum_s mu_s f(s) f(s)^T for centered f."""
    mean = chain.mu @ f.values
    if np.max(np.abs(mean)) > CENTERED_TOL:
        raise PreconditionError("principal variance requires a centered observable")
    return float(max(symmetric_eigvals(second_moment(f.values, chain.mu))[0], 0.0))


def rescaled(f: VectorObservable, chain: ReversibleChain, c: float) -> VectorObservable:
    return make_observable(f.values * c, chain)


def random_observable(chain: ReversibleChain, m: int, L: float, seed: int) -> VectorObservable:
    """Centered random observable with ||f||_inf <= L, deterministic in ``seed``."""
    if m < 1:
        raise InvalidParameterError("m must be >= 1")
    if not L > 0:
        raise InvalidParameterError("L must be positive")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, size=(chain.n, m))
    f = center(make_observable(raw, chain), chain)
    if f.linf > L:
        f = make_observable(f.values * (L / f.linf), chain)
        # rounding in the product can leave linf a hair above L
        if f.linf > L:
            f = make_observable(f.values * np.nextafter(L / f.linf, 0.0), chain)
    return f


def parse_observable(text: str, chain: ReversibleChain) -> VectorObservable:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ChainParseError("empty observable file")
    head = lines[0].split()
    try:
        n, m = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ChainParseError("observable header must be 'n m'") from None
    if len(head) != 2 or n < 1 or m < 1:
        raise ChainParseError("observable header must be 'n m'")
    rows = lines[1:]
    if len(rows) != n:
        raise ChainParseError(f"header declares {n} rows, found {len(rows)}")
    try:
        vals = np.array([[float(x) for x in row.split()] for row in rows], dtype=float)
    except ValueError as exc:
        raise ChainParseError(str(exc)) from None
    if vals.shape != (n, m):
        raise ChainParseError(f"every row must hold {m} values")
    if n != chain.n:
        raise DimensionMismatchError(f"observable has {n} rows, chain has {chain.n} states")
    return make_observable(vals, chain)


def load_observable(path: str | os.PathLike, chain: ReversibleChain) -> VectorObservable:
    with open(path, encoding="utf-8") as fh:
        return parse_observable(fh.read(), chain)


def format_observable(f: VectorObservable) -> str:
    out = [f"{f.n} {f.m}"]
    out.extend(" ".join(repr(float(x)) for x in row) for row in f.values)
    return "\n".join(out) + "\n"
