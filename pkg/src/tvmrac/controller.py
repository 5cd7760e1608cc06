"""Constrained MRAC control path: auxiliary input, time-varying saturation,
the time-varying barrier Lyapunov function, its projection-guarded adaptive
law, the classical MRAC law, and the matched-gain oracle."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import BarrierBreach, DimensionMismatch, ValidationError
from .linalg import as_matrix, check_positive_definite, left_pseudo_inverse

DEFAULT_PROJ_EPSILON = 0.1
DEFAULT_DENOM_FLOOR = 1e-9


@dataclass(frozen=True)
class ControllerConfig:
    """Immutable controller settings.

    ``denom_floor`` is relative: the barrier guard is ``denom_floor * phi_e'^2``.
    """

    gamma_x: np.ndarray
    k_bar_x: float
    k_r: np.ndarray
    proj_epsilon: float = DEFAULT_PROJ_EPSILON
    denom_floor: float = DEFAULT_DENOM_FLOOR

    def __post_init__(self):
        gamma = as_matrix(self.gamma_x, "gamma_x")
        try:
            gamma = check_positive_definite(gamma, "gamma_x")
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        k_r = as_matrix(self.k_r, "k_r")
        m = gamma.shape[0]
        if k_r.shape != (m, m):
            raise DimensionMismatch(f"k_r must be {m}x{m}, got {k_r.shape}")
        if not self.k_bar_x > 0:
            raise ValidationError("k_bar_x must be positive")
        if not 0 < self.proj_epsilon <= 1:
            raise ValidationError("proj_epsilon must lie in (0, 1]")
        if not 0 < self.denom_floor <= 1e-6:
            raise ValidationError("denom_floor must lie in (0, 1e-6]")
        object.__setattr__(self, "gamma_x", gamma)
        object.__setattr__(self, "k_r", k_r)

    @property
    def k_bar_eff(self):
        """Inner radius of the projection boundary layer."""
        return self.k_bar_x / np.sqrt(1.0 + self.proj_epsilon)


class ControllerOutput(NamedTuple):
    u: np.ndarray
    v: np.ndarray
    delta_u: np.ndarray
    saturated: bool
    v_e: float
    barrier_denominator: float


class MatchedGains(NamedTuple):
    K_x: np.ndarray
    K_r: np.ndarray
    residual_A: float
    residual_B: float


def _vec(a):
    return np.ascontiguousarray(np.asarray(a, dtype=float).reshape(-1))


def auxiliary_input(k_hat_x, k_r, x, r, phi_e, phi_e_dot, b_dagger, e):
    """``v = K_hat x + K_r r - (phi_e_dot / phi_e) B^dagger e``."""
    k_hat_x = as_matrix(k_hat_x, "k_hat_x")
    k_r = as_matrix(k_r, "k_r")
    b_dagger = as_matrix(b_dagger, "b_dagger")
    x, r, e = _vec(x), _vec(r), _vec(e)
    m, n = k_hat_x.shape
    if x.size != n or e.size != n or r.size != m or b_dagger.shape != (m, n):
        raise DimensionMismatch("inconsistent dimensions in auxiliary_input")
    v = np.empty(m)
    _kernels.aux_input_into(_vec(k_hat_x), x, k_r, r, phi_e_dot / phi_e, b_dagger, e, v)
    return v


def saturate(v, phi_u):
    """Scale ``v`` into the ball of radius ``phi_u``.

    Returns ``(u, delta_u, saturated)`` with ``delta_u = u - v``; the
    boundary ``||v|| == phi_u`` counts as unsaturated.
    """
    if not phi_u > 0:
        raise ValueError("phi_u must be positive")
    v = _vec(v)
    u = np.empty_like(v)
    sat = _kernels.saturate_into(v, float(phi_u), u)
    delta = u - v if sat else np.zeros_like(v)
    return u, delta, bool(sat)


def barrier_denominator(e, P, phi_e_prime):
    e = _vec(e)
    return float(phi_e_prime**2 - _kernels.quad(as_matrix(P), e))


def tvblf_value(e, P, phi_e_prime, denom_floor=DEFAULT_DENOM_FLOOR):
    """``log(phi'^2 / (phi'^2 - e^T P e))``.

    Raises
    ------
    BarrierBreach
        If ``e^T P e >= phi'^2 (1 - denom_floor)``.
    """
    den = barrier_denominator(e, P, phi_e_prime)
    if den <= denom_floor * phi_e_prime**2:
        raise BarrierBreach(f"tracking error at the barrier (denominator {den:.3e})")
    return float(np.log(phi_e_prime**2 / den))


def project(theta, y, k_bar, eps_p):
    """Projection of the update ``y`` at ``theta`` onto the ball of radius ``k_bar``.

    Outward radial components of ``y`` are removed progressively inside the
    boundary layer ``k_bar / sqrt(1 + eps_p) < ||theta||_F <= k_bar`` and
    entirely at the outer boundary.
    """
    theta = np.asarray(theta, dtype=float)
    y = np.asarray(y, dtype=float)
    if theta.shape != y.shape:
        raise DimensionMismatch("theta and y must have the same shape")
    out = np.empty(theta.size)
    _kernels.project_into(_vec(theta), _vec(y), float(k_bar), float(eps_p), out)
    return out.reshape(theta.shape)


def classical_rate(e, x, P, B, gamma_x):
    """Unconstrained MRAC law ``-Gamma B^T P e x^T``."""
    return _rate(e, x, P, B, gamma_x, 1.0)


def _rate(e, x, P, B, gamma_x, denom):
    B = as_matrix(B, "B")
    gamma_x = as_matrix(gamma_x, "gamma_x")
    e, x = _vec(e), _vec(x)
    n, m = B.shape
    out = np.empty(m * n)
    _kernels.raw_rate_into(e, x, as_matrix(P, "P"), B, gamma_x, float(denom), out)
    return out.reshape(m, n)


def adaptive_rate(k_hat_x, e, x, P, B, gamma_x, phi_e_prime, config):
    """Barrier-weighted, projected gain update
    ``Proj(-Gamma B^T P e x^T / (phi'^2 - e^T P e))``."""
    den = barrier_denominator(e, P, phi_e_prime)
    if den <= config.denom_floor * phi_e_prime**2:
        raise BarrierBreach(f"tracking error at the barrier (denominator {den:.3e})")
    raw = _rate(e, x, P, B, gamma_x, den)
    return project(k_hat_x, raw, config.k_bar_x, config.proj_epsilon)


def matched_gains(A, A_r, B, B_r):
    """Ideal gains ``K_x = B^dagger (A_r - A)``, ``K_r = B^dagger B_r`` and the
    Frobenius residuals of the matching equations (zero iff exactly solvable).

    Needs the true plant matrix ``A``; used as a test oracle and for
    computing the fixed feedforward gain.
    """
    A, A_r = as_matrix(A, "A"), as_matrix(A_r, "A_r")
    B, B_r = as_matrix(B, "B"), as_matrix(B_r, "B_r")
    if A.shape != A_r.shape or B.shape != B_r.shape or B.shape[0] != A.shape[0]:
        raise DimensionMismatch("inconsistent dimensions in matched_gains")
    Bd = left_pseudo_inverse(B)
    proj = np.eye(A.shape[0]) - B @ Bd
    return MatchedGains(
        K_x=Bd @ (A_r - A),
        K_r=Bd @ B_r,
        residual_A=float(np.linalg.norm(proj @ (A_r - A))),
        residual_B=float(np.linalg.norm(proj @ B_r)),
    )


def control_law(k_hat_x, x, x_r, r, phi_e, phi_e_dot, phi_u, P, b_dagger, k_r, sqrt_lambda_min_P,
                denom_floor=DEFAULT_DENOM_FLOOR):
    """Full control computation at one instant, returning a ControllerOutput."""
    x, x_r = _vec(x), _vec(x_r)
    e = x - x_r
    v = auxiliary_input(k_hat_x, k_r, x, r, phi_e, phi_e_dot, b_dagger, e)
    u, delta_u, sat = saturate(v, phi_u)
    phi_p = phi_e * sqrt_lambda_min_P
    den = barrier_denominator(e, P, phi_p)
    v_e = tvblf_value(e, P, phi_p, denom_floor)
    return ControllerOutput(u=u, v=v, delta_u=delta_u, saturated=sat, v_e=v_e, barrier_denominator=den)
