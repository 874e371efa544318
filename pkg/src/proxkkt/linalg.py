"""Small dense symmetric linear algebra.

Every Newton-type step in the solvers reduces to a solve with ``H + K*I``
where ``H`` is a symmetric Hessian and ``K > 0`` the proximal constant.
Matrices here are plain ``numpy`` arrays; :func:`symmetrize` is applied on the
way in because finite-difference Hessians are only symmetric up to truncation
error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, SingularSystem

PIVOT_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 100
_JACOBI_OFF_RTOL = 1e-14


def as_vector(b) -> np.ndarray:
    v = np.asarray(b, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def symmetrize(a) -> np.ndarray:
    """Return ``(A + A^T) / 2`` as a float array of shape ``(n, n)``."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class ShiftedFactor:
    """A reusable factorization of ``H + K*I``.

    ``method`` is ``"cholesky"`` when the shifted matrix was positive definite
    and ``"lu"`` when the pivoted fallback was needed.
    """

    order: int
    K: float
    method: str
    _factor: tuple

    def solve(self, b) -> np.ndarray:
        rhs = np.asarray(b, dtype=float)
        if rhs.shape[0] != self.order:
            raise ValueError(f"right-hand side has {rhs.shape[0]} rows, expected {self.order}")
        if self.method == "cholesky":
            return sla.cho_solve(self._factor, rhs, check_finite=False)
        return sla.lu_solve(self._factor, rhs, check_finite=False)

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.order))


def factor_shifted(H, K: float) -> ShiftedFactor:
    """Factor ``H + K*I``, trying Cholesky first and pivoted LU second.

    Raises:
        SingularSystem: if a pivot falls below ``1e-14 * max(max|H|, K)``.
    """
    if not K > 0:
        raise ValueError(f"proximal constant K must be positive, got {K}")
    Hs = symmetrize(H)
    n = Hs.shape[0]
    shifted = Hs + K * np.eye(n)
    scale = max(float(np.max(np.abs(Hs))), float(K))
    threshold = PIVOT_RTOL * scale
    try:
        c, lower = sla.cho_factor(shifted, lower=True, check_finite=False)
        if np.min(np.diag(c)) ** 2 >= threshold:
            return ShiftedFactor(n, float(K), "cholesky", (c, lower))
    except np.linalg.LinAlgError:
        pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu, piv = sla.lu_factor(shifted, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < threshold:
        raise SingularSystem(
            f"H + K*I is numerically singular (smallest pivot {np.min(pivots):.3e}, "
            f"threshold {threshold:.3e})"
        )
    return ShiftedFactor(n, float(K), "lu", (lu, piv))


def regularized_solve(H, K: float, b) -> np.ndarray:
    """Solve ``(H + K*I) d = b`` for ``d``."""
    v = as_vector(b)
    factor = factor_shifted(H, K)
    if v.size != factor.order:
        raise ValueError(f"H has order {factor.order} but b has dimension {v.size}")
    return factor.solve(v)


def jacobi_eigenvalues(a, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """All eigenvalues of one symmetric matrix or a stack of them.

    Cyclic Jacobi rotations are applied to every matrix of the stack at once,
    so ``a`` may have shape ``(n, n)`` or ``(B, n, n)``. The result is sorted
    ascending along the last axis.

    Raises:
        NoConvergence: if the off-diagonal mass has not vanished after
            ``max_sweeps`` sweeps.
    """
    A = np.array(a, dtype=float)
    single = A.ndim == 2
    if single:
        A = A[None]
    if A.ndim != 3 or A.shape[1] != A.shape[2] or A.shape[1] < 1:
        raise ValueError(f"expected (n, n) or (B, n, n), got {np.shape(a)}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    A = 0.5 * (A + np.swapaxes(A, 1, 2))
    n = A.shape[1]
    fro = np.sqrt(np.sum(A * A, axis=(1, 2)))
    offmask = ~np.eye(n, dtype=bool)

    def converged() -> bool:
        off = np.sqrt(np.sum(np.where(offmask, A * A, 0.0), axis=(1, 2)))
        return bool(np.all(off <= _JACOBI_OFF_RTOL * fro))

    sweeps = 0
    while not converged():
        if sweeps == max_sweeps:
            raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                rotate = apq != 0.0
                if not np.any(rotate):
                    continue
                safe = np.where(rotate, apq, 1.0)
                theta = (A[:, q, q] - A[:, p, p]) / (2.0 * safe)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(rotate, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                c3, s3 = c[:, None], s[:, None]
                rp, rq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = c3 * rp - s3 * rq
                A[:, q, :] = s3 * rp + c3 * rq
                cp, cq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = c3 * cp - s3 * cq
                A[:, :, q] = s3 * cp + c3 * cq
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0

    w = np.sort(np.diagonal(A, axis1=1, axis2=2), axis=-1)
    return w[0] if single else w


def extreme_eigenvalues(H) -> tuple[float, float]:
    """Return ``(lambda_min, lambda_max)`` of a symmetric matrix."""
    Hs = symmetrize(H)
    if Hs.shape[0] == 1:
        v = float(Hs[0, 0])
        return v, v
    w = jacobi_eigenvalues(Hs)
    return float(w[0]), float(w[-1])


def operator_norm(H) -> float:
    """Spectral norm ``max(|lambda_min|, |lambda_max|)`` of a symmetric matrix."""
    lo, hi = extreme_eigenvalues(H)
    return max(abs(lo), abs(hi))


def psd_margin(A) -> float:
    """``lambda_min(A)``; the ordering ``0 <= A`` holds when this is >= -tol."""
    return extreme_eigenvalues(A)[0]
