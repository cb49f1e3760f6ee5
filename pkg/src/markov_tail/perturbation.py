"""Exponentially tilted kernels P(u)_st = P_st exp<f(t), u> and checks on
their top eigenvalue.

Everything spectral goes through the symmetric matrix
S_u = E_u S E_u, E_u = diag(exp(<f(s), u>/2)), which is similar to P(u).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bounds import k_constant
from .chain import InitialDistribution, ReversibleChain, chi_distance, spectrum
from .errors import (
    DimensionMismatchError,
    InvalidGapError,
    InvalidParameterError,
    PreconditionError,
)
from .linalg import symmetric_eigvals
from .observable import CENTERED_TOL, VectorObservable, principal_variance

DEFAULT_STEP = 1e-4
LINF_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class PerturbedKernel:
    base: ReversibleChain
    f: VectorObservable
    u: np.ndarray
    Pu: np.ndarray
    Su: np.ndarray


@dataclass(frozen=True)
class PerturbationReport:
    lambda0: float
    k_used: float
    margin: float
    derivative1: float = math.nan
    derivative2: float = math.nan
    d2_bound: float = math.nan


class Scaled(NamedTuple):
    """mantissa * 2**exponent, for values beyond float range."""

    mantissa: float
    exponent: int

    def log(self) -> float:
        return math.log(self.mantissa) + self.exponent * math.log(2.0)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _as_vector(u, m: int) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (m,):
        raise DimensionMismatchError(f"u has shape {u.shape}, observable dimension is {m}")
    return u


def _check_pair(chain: ReversibleChain, f: VectorObservable) -> None:
    if f.n != chain.n:
        raise DimensionMismatchError(f"observable has {f.n} states, chain has {chain.n}")


def _require_centered(chain: ReversibleChain, f: VectorObservable) -> None:
    if np.max(np.abs(chain.mu @ f.values)) > CENTERED_TOL:
        raise PreconditionError("observable must be centered")


def perturbed(chain: ReversibleChain, f: VectorObservable, u) -> PerturbedKernel:
    _check_pair(chain, f)
    u = _as_vector(u, f.m)
    tilt = f.values @ u
    Pu = chain.P * np.exp(tilt)[None, :]
    e = np.exp(0.5 * tilt)
    Su = e[:, None] * chain.symmetrized() * e[None, :]
    Su = 0.5 * (Su + Su.T)
    for a in (Pu, Su, u):
        a.setflags(write=False)
    return PerturbedKernel(chain, f, u, Pu, Su)


def _tilted_top(S: np.ndarray, tilt: np.ndarray) -> float:
    e = np.exp(0.5 * tilt)
    return float(symmetric_eigvals(e[:, None] * S * e[None, :], method="lapack")[0])


def _symmetrized_ld(chain: ReversibleChain) -> np.ndarray:
    d = np.sqrt(chain.mu.astype(np.longdouble))
    S = d[:, None] * chain.P.astype(np.longdouble) / d[None, :]
    return (S + S.T) / 2


def _tilted_top_refined(S_ld: np.ndarray, tilt: np.ndarray) -> np.longdouble:
    """Top eigenvalue as a Rayleigh quotient evaluated in extended precision.

    The eigenvector comes from a float64 solve; the quotient's error is
    quadratic in the eigenvector error, so what remains is longdouble
    rounding. Finite differences of lambda0 near 0 need this.
    """
    e = np.exp(tilt.astype(np.longdouble) / 2)
    Su = e[:, None] * S_ld * e[None, :]
    _, vecs = np.linalg.eigh(Su.astype(float))
    x = vecs[:, -1].astype(np.longdouble)
    return (x @ (Su @ x)) / (x @ x)


def lambda0(kernel: PerturbedKernel) -> float:
    """Perron root of P(u): the top eigenvalue of S_u."""
    if not np.any(kernel.u):
        return 1.0
    return float(symmetric_eigvals(kernel.Su, method="lapack")[0])


def perturbed_spectrum(kernel: PerturbedKernel) -> np.ndarray:
    return symmetric_eigvals(kernel.Su, method="lapack")


def verify_growth(chain: ReversibleChain, f: VectorObservable, u, g: float | None = None) -> PerturbationReport:
    """margin = exp(k|u|^2) - lambda0(u), k from the principal variance of f and g = 1 - lambda_1."""
    _check_pair(chain, f)
    _require_centered(chain, f)
    if f.linf > 1 + LINF_SLACK:
        raise PreconditionError("rescale f so that ||f||_inf <= 1 first")
    if g is None:
        g = spectrum(chain).gap
    if not g > 0:
        raise InvalidGapError("chain has no spectral gap")
    k = k_constant(principal_variance(f, chain), 1.0, min(g, 2.0), "prop9")
    u = _as_vector(u, f.m)
    lam = lambda0(perturbed(chain, f, u))
    return PerturbationReport(lam, k, _exp(k * float(u @ u)) - lam)


def growth_sweep(
    chain: ReversibleChain,
    f: VectorObservable,
    direction,
    radii,
    g: float | None = None,
) -> list[PerturbationReport]:
    """verify_growth at u = z * direction for each z in ``radii`` (k computed once)."""
    _check_pair(chain, f)
    _require_centered(chain, f)
    if f.linf > 1 + LINF_SLACK:
        raise PreconditionError("rescale f so that ||f||_inf <= 1 first")
    if g is None:
        g = spectrum(chain).gap
    if not g > 0:
        raise InvalidGapError("chain has no spectral gap")
    k = k_constant(principal_variance(f, chain), 1.0, min(g, 2.0), "prop9")
    u = _as_vector(direction, f.m)
    u = u / np.linalg.norm(u)
    S = chain.symmetrized()
    tilt = f.values @ u
    reports = []
    for z in radii:
        lam = _tilted_top(S, z * tilt) if z != 0 else 1.0
        reports.append(PerturbationReport(lam, k, _exp(k * z * z) - lam))
    return reports


def derivative_checks(
    chain: ReversibleChain,
    f: VectorObservable,
    direction,
    h: float = DEFAULT_STEP,
    g: float | None = None,
) -> PerturbationReport:
    """Central differences of z -> lambda0(z u) at z = 0."""
    _check_pair(chain, f)
    _require_centered(chain, f)
    if not 1e-6 <= h <= 1e-2:
        raise InvalidParameterError("step h must lie in [1e-6, 1e-2]")
    u = _as_vector(direction, f.m)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise InvalidParameterError("direction must be a unit vector")
    if g is None:
        g = spectrum(chain).gap
    sigma2 = principal_variance(f, chain)
    tilt = f.values @ u
    if not np.any(tilt):
        d1 = d2 = 0.0
    else:
        S = _symmetrized_ld(chain)
        plus = _tilted_top_refined(S, h * tilt)
        minus = _tilted_top_refined(S, -h * tilt)
        center = _tilted_top_refined(S, 0 * tilt)
        d1 = float((plus - minus) / (2 * h))
        d2 = float(((plus - center) + (minus - center)) / (h * h))
    bound = (1 + 2 / g) * sigma2 if g > 0 else math.inf
    return PerturbationReport(1.0, math.nan, math.nan, d1, d2, bound)


def pseudo_inverse_sym(chain: ReversibleChain) -> np.ndarray:
    """(I - S)^dagger: inverse of I - S off sqrt(mu), zero on sqrt(mu)."""
    spec = spectrum(chain)
    if not spec.gap > 0:
        raise InvalidGapError("I - P is not invertible off the constants (gap = 0)")
    lam, V = spec.eigenvalues[1:], spec.eigenvectors[:, 1:]
    return (V / (1.0 - lam)) @ V.T


def eigenvector_derivative(chain: ReversibleChain, f: VectorObservable, direction) -> np.ndarray:
    """X'(0) = mu V (I - P)^dagger = mu V D^-1 (I - S)^dagger D (a row vector)."""
    _check_pair(chain, f)
    u = _as_vector(direction, f.m)
    d = np.sqrt(chain.mu)
    muV = chain.mu * (f.values @ u)
    return ((muV / d) @ pseudo_inverse_sym(chain)) * d


def second_derivative_formula(chain: ReversibleChain, f: VectorObservable, direction) -> float:
    """lambda0''(0) = mu V^2 1 + 2 X'(0) P V 1."""
    _check_pair(chain, f)
    _require_centered(chain, f)
    u = _as_vector(direction, f.m)
    v = f.values @ u
    xp = eigenvector_derivative(chain, f, u)
    return float(chain.mu @ (v * v) + 2.0 * xp @ (chain.P @ v))


def eigvec_residuals(chain: ReversibleChain, f: VectorObservable, direction) -> tuple[float, float]:
    """(max |X'(0)(I - P) - mu V|, |<X'(0), 1>|)."""
    u = _as_vector(direction, f.m)
    xp = eigenvector_derivative(chain, f, u)
    muV = chain.mu * (f.values @ u)
    resid = xp - xp @ chain.P - muV
    return float(np.max(np.abs(resid))), float(abs(xp.sum()))


def resolvent_norms(chain: ReversibleChain, zetas) -> np.ndarray:
    """||R_S(zeta) S|| = max_i |lambda_i / (lambda_i - zeta)| for each zeta.

    R_S(zeta) S is a function of the symmetric S, hence normal, so its
    operator norm is its spectral radius.
    """
    lam = spectrum(chain).eigenvalues.astype(complex)
    z = np.atleast_1d(np.asarray(zetas, dtype=complex))
    return np.max(np.abs(lam[None, :] / (lam[None, :] - z[:, None])), axis=1)


def resolvent_circle(g: float, samples: int, include_real_point: bool = True) -> np.ndarray:
    """Points on |zeta - 1| = g/2; index 0 is zeta_0 = 1 - g/2 when included."""
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    if include_real_point:
        theta = np.pi + 2 * np.pi * np.arange(samples) / samples
    else:
        theta = np.pi + 2 * np.pi * (np.arange(samples) + 0.5) / samples
    return 1.0 + 0.5 * g * np.exp(1j * theta)


def resolvent_check(chain: ReversibleChain, samples: int = 256) -> float:
    """Largest sampled ||R_S(zeta) S|| on the circle of radius g/2 around 1.

    The circle always contains zeta_0 = 1 - g/2. Raises if the maximum
    is not 2/g to 1e-6 relative, or is not reached at zeta_0.
    """
    g = spectrum(chain).gap
    if not g > 0:
        raise InvalidGapError("gap must be positive")
    norms = resolvent_norms(chain, resolvent_circle(g, samples))
    best = float(norms.max())
    expected = 2.0 / g
    if abs(best - expected) > 1e-6 * expected or abs(norms[0] - best) > 1e-6 * expected:
        raise PreconditionError(f"resolvent maximum {best!r} differs from 2/g = {expected!r}")
    return best


def quadratic_form_power(
    chain: ReversibleChain,
    f: VectorObservable,
    u,
    mu0: InitialDistribution | np.ndarray,
    N: int,
) -> float | Scaled:
    """(mu0, P(u)^N 1) by N matrix-vector products.

    The running vector is renormalized by powers of two once it grows past
    1e150; if the final value does not fit in a float, a ``Scaled`` is returned.
    """
    if N < 0:
        raise InvalidParameterError("N must be nonnegative")
    w = mu0.weights if isinstance(mu0, InitialDistribution) else np.asarray(mu0, dtype=float)
    if w.shape != (chain.n,):
        raise DimensionMismatchError("initial law does not match the chain")
    Pu = perturbed(chain, f, u).Pu
    x = np.ones(chain.n)
    exponent = 0
    for _ in range(N):
        x = Pu @ x
        top = float(x.max())
        if top > 1e150:
            e = math.frexp(top)[1]
            x = np.ldexp(x, -e)
            exponent += e
    value = float(w @ x)
    if exponent == 0:
        return value
    if value == 0.0:
        return 0.0
    mant, e = math.frexp(value)
    exponent += e
    if exponent < 996:
        return math.ldexp(mant, exponent)
    return Scaled(mant, exponent)


def path_sum(chain: ReversibleChain, f: VectorObservable, u, mu0, N: int) -> float:
    """Brute-force E^(0) exp<S_N, u> over all n^(N+1) state paths."""
    w = mu0.weights if isinstance(mu0, InitialDistribution) else np.asarray(mu0, dtype=float)
    u = _as_vector(u, f.m)
    tilt = np.exp(f.values @ u)
    total = 0.0
    for path in itertools.product(range(chain.n), repeat=N + 1):
        term = w[path[0]]
        for a, b in zip(path, path[1:]):
            term *= chain.P[a, b] * tilt[b]
        total += term
    return total


def verify_mgf_domination(
    chain: ReversibleChain,
    f: VectorObservable,
    u,
    mu0: InitialDistribution | np.ndarray,
    N: int,
) -> float:
    """3 chi lambda0(u)^N - (mu0, P(u)^N 1); nonnegative under |u| <= 1, ||f||_inf <= 1."""
    u = _as_vector(u, f.m)
    if np.linalg.norm(u) > 1 + LINF_SLACK or f.linf > 1 + LINF_SLACK:
        raise PreconditionError("needs |u| <= 1 and ||f||_inf <= 1")
    chi = chi_distance(mu0, chain)
    lam = lambda0(perturbed(chain, f, u))
    q = quadratic_form_power(chain, f, u, mu0, N)
    return 3.0 * chi * lam**N - float(q)


def worst_direction_observable(chain: ReversibleChain) -> np.ndarray:
    """Scalar f proportional to the slowest right eigenvector of P, max |f| = 1."""
    spec = spectrum(chain)
    x = spec.eigenvectors[:, 1] / np.sqrt(chain.mu)
    x = x - chain.mu @ x
    return x / np.max(np.abs(x))
