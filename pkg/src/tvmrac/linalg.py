"""Small dense-matrix kernels: Lyapunov solve, symmetric eigen-extrema,
spectral norms, left pseudo-inverse and a Hurwitz test.

Problem sizes are tiny (n <= ~10), so the Lyapunov equation is solved by
Kronecker vectorization with a dense LU factorization, and symmetric
eigenvalues come from cyclic Jacobi sweeps.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    SingularSystem,
)

LYAPUNOV_RESIDUAL_TOL = 1e-9
RANK_TOL = 1e-10
SYMMETRY_TOL = 1e-12
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array with positive dimensions."""
    M = np.array(M, dtype=float, copy=True)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2 or M.shape[0] == 0 or M.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _require_square(M, name):
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")


def check_symmetric(M, name="matrix"):
    M = as_matrix(M, name)
    _require_square(M, name)
    scale = max(np.linalg.norm(M), 1.0)
    if np.linalg.norm(M - M.T) > SYMMETRY_TOL * scale:
        raise NotSymmetric(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


def symmetric_eigenvalues(M):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm drops below
    ``JACOBI_TOL`` (relative to the matrix norm). Returned in ascending order.
    """
    M = check_symmetric(M)
    n = M.shape[0]
    a = M.copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                with np.errstate(over="ignore"):
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/cols p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.sort(np.diag(a))


def eigen_extrema(M):
    """Return ``(lambda_min, lambda_max)`` of a symmetric matrix."""
    w = symmetric_eigenvalues(M)
    return w[0], w[-1]


def check_positive_definite(M, name="matrix"):
    M = check_symmetric(M, name)
    lo, _ = eigen_extrema(M)
    if lo <= 0.0:
        raise NotPositiveDefinite(f"{name} is not positive definite (lambda_min={lo:.3e})")
    return M


def spectral_norm(M):
    M = as_matrix(M)
    return float(np.sqrt(max(eigen_extrema(M.T @ M)[1], 0.0)))


def min_singular_value(M):
    M = as_matrix(M)
    return float(np.sqrt(max(eigen_extrema(M.T @ M)[0], 0.0)))


def solve_lyapunov(A_r, Q):
    """Solve ``A_r^T P + P A_r + Q = 0`` for symmetric positive-definite P.

    Raises
    ------
    SingularSystem
        If the vectorized system is singular, the residual check fails, or
        the solution is not positive definite (``A_r`` not Hurwitz).
    """
    A_r = as_matrix(A_r, "A_r")
    _require_square(A_r, "A_r")
    Q = as_matrix(Q, "Q")
    if Q.shape != A_r.shape:
        raise DimensionMismatch(f"Q has shape {Q.shape}, expected {A_r.shape}")
    Q = check_positive_definite(Q, "Q")
    n = A_r.shape[0]
    eye = np.eye(n)
    # column-major vec: vec(A^T P) = (I kron A^T) vec P, vec(P A) = (A^T kron I) vec P
    K = np.kron(eye, A_r.T) + np.kron(A_r.T, eye)
    with warnings.catch_warnings():
        # singularity is detected from the pivots below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(K, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0) * n * n:
        raise SingularSystem("Lyapunov system is singular; A_r has eigenvalues summing to zero")
    P = lu_solve((lu, piv), -Q.reshape(-1, order="F")).reshape(n, n, order="F")
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(A_r.T @ P + P @ A_r + Q)
    if residual > LYAPUNOV_RESIDUAL_TOL * np.linalg.norm(Q):
        raise SingularSystem(f"Lyapunov residual {residual:.3e} exceeds tolerance")
    if eigen_extrema(P)[0] <= 0.0:
        raise SingularSystem("Lyapunov solution is not positive definite; A_r is not Hurwitz")
    return P


def is_hurwitz(A):
    A = as_matrix(A, "A")
    _require_square(A, "A")
    try:
        solve_lyapunov(A, np.eye(A.shape[0]))
    except SingularSystem:
        return False
    return True


def left_pseudo_inverse(B):
    """``(B^T B)^{-1} B^T`` for a full-column-rank B."""
    B = as_matrix(B, "B")
    if B.shape[1] > B.shape[0] or min_singular_value(B) <= RANK_TOL:
        raise RankDeficient("B must have full column rank")
    return np.linalg.solve(B.T @ B, B.T)


@dataclass(frozen=True)
class SpectralConstants:
    lambda_min_P: float
    lambda_max_P: float
    lambda_min_Q: float
    norm_B: float
    norm_B_dagger: float
    eta: float
    sqrt_lambda_min_P: float


def spectral_constants(P, Q, B):
    """Eigen-extrema and norms that enter the feasibility condition and the
    barrier scaling ``phi_e' = phi_e * sqrt(lambda_min(P))``."""
    P = check_positive_definite(P, "P")
    Q = check_positive_definite(Q, "Q")
    B = as_matrix(B, "B")
    if B.shape[0] != P.shape[0]:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, P is {P.shape}")
    lo_BtB, hi_BtB = eigen_extrema(B.T @ B)
    if B.shape[1] > B.shape[0] or np.sqrt(max(lo_BtB, 0.0)) <= RANK_TOL:
        raise RankDeficient("B must have full column rank")
    lmin_P, lmax_P = eigen_extrema(P)
    lmin_Q = eigen_extrema(Q)[0]
    norm_B = float(np.sqrt(hi_BtB))
    return SpectralConstants(
        lambda_min_P=float(lmin_P),
        lambda_max_P=float(lmax_P),
        lambda_min_Q=float(lmin_Q),
        norm_B=norm_B,
        norm_B_dagger=float(1.0 / np.sqrt(lo_BtB)),
        eta=float(lmin_Q / (2.0 * lmax_P * norm_B)),
        sqrt_lambda_min_P=float(np.sqrt(lmin_P)),
    )
