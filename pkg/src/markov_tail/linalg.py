"""Dense symmetric eigensolvers.

The default solver is a cyclic Jacobi method in round-robin (parallel)
ordering: every round applies n/2 disjoint plane rotations at once, so each
round is a handful of vectorized row/column updates. Jacobi is slow for big
matrices but has excellent relative accuracy on the small kernels used here.
Above ``JACOBI_MAX_N`` we hand off to LAPACK.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailureError

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
JACOBI_MAX_N = 128


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one sweep; n must be even. Circle method with slot 0 fixed."""
    slots = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array(slots[: n // 2])
        q = np.array(slots[n // 2 :][::-1])
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        rounds.append((lo, hi))
        slots = [slots[0], slots[-1]] + slots[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(
    a: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ``w`` sorted descending and the
    matching orthonormal eigenvectors in the columns of ``V``. Iteration stops
    once the off-diagonal Frobenius norm drops to ``tol * ||a||_F``; raises
    ``NumericalFailureError`` after ``max_sweeps`` sweeps.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    n0 = a.shape[0]
    if n0 == 0:
        return np.zeros(0), np.zeros((0, 0))
    # symmetrize away representation noise
    a = 0.5 * (a + a.T)
    n = n0 + (n0 % 2)
    if n != n0:
        # a zero dummy row/column never rotates (its off-diagonals stay 0)
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    rounds = _round_robin(n)

    for _ in range(max_sweeps):
        if _off_norm(a) <= tol * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                # theta**2 overflow only means t ~ 1/(2 theta), i.e. below 1e-150
                t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        if _off_norm(a) > tol * scale:
            raise NumericalFailureError(
                f"Jacobi did not converge in {max_sweeps} sweeps"
            )

    w = np.diag(a)[:n0].copy()
    v = v[:n0, :n0]
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def symmetric_eigh(a: np.ndarray, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenpairs of a symmetric matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_N`` rows, LAPACK beyond).
    """
    n = np.shape(a)[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        return jacobi_eigh(a)
    if method == "lapack":
        try:
            w, v = np.linalg.eigh(0.5 * (np.asarray(a) + np.asarray(a).T))
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError(str(exc)) from exc
        return w[::-1], v[:, ::-1]
    raise ValueError(f"unknown eigensolver {method!r}")


def symmetric_eigvals(a: np.ndarray, method: str = "auto") -> np.ndarray:
    n = np.shape(a)[0]
    if method == "lapack" or (method == "auto" and n > JACOBI_MAX_N):
        try:
            return np.linalg.eigvalsh(0.5 * (np.asarray(a) + np.asarray(a).T))[::-1]
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError(str(exc)) from exc
    return symmetric_eigh(a, method)[0]
