"""Offline feasibility certificates for a (state, input) constraint pair.

The canonical check evaluates, at every grid point,

    phi_u(t) > phi_x(t) (K_x_bar - eta) + |phi_e_dot(t)| ||B^dagger||
               + eta chi_r(t) + K_r_bar r_bar + d_bar / ||B||

(the last term only with a disturbance bound). The three-part decomposition
``alpha1 phi_e + alpha2 |phi_e_dot| + beta`` is reported alongside for margin
attribution; it is not algebraically identical to the canonical form (its
reference-bound coefficient differs), so both margins are kept.
"""
import csv
import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .linalg import spectral_norm

REGIME_TOL = 1e-12


class Verdict(str, enum.Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"


class Regime(str, enum.Enum):
    CASE2_1 = "Case2_1"
    CASE2_2 = "Case2_2"
    ALPHA_ZERO = "AlphaZero"


TERM_NAMES = ("state-envelope", "rate", "offset")


@dataclass(frozen=True)
class FeasibilityCoefficients:
    alpha1: float
    alpha2: float
    beta: float
    eta: float
    k_bar_x: float
    k_bar_r: float
    r_bar: float
    chi_r_sup: float


def compute_coefficients(constants, k_bar_x, k_bar_r, r_bar, chi_r_sup):
    """Split the input budget into error-envelope, envelope-rate and offset parts."""
    for name, val in (("k_bar_x", k_bar_x), ("k_bar_r", k_bar_r), ("r_bar", r_bar)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    if chi_r_sup < 0:
        raise ValueError("chi_r_sup must be non-negative")
    eta = constants.eta
    return FeasibilityCoefficients(
        alpha1=k_bar_x - eta,
        alpha2=constants.norm_B_dagger,
        beta=eta * chi_r_sup + k_bar_r * r_bar,
        eta=eta,
        k_bar_x=float(k_bar_x),
        k_bar_r=float(k_bar_r),
        r_bar=float(r_bar),
        chi_r_sup=float(chi_r_sup),
    )


@dataclass
class FeasibilityReport:
    grid: np.ndarray
    phi_u: np.ndarray
    rhs: np.ndarray
    margin: np.ndarray
    min_margin: float
    argmin_t: float
    verdict: Verdict
    dominant_term: np.ndarray
    regime: Regime
    disturbance_bound: float
    decomposition_margin: np.ndarray
    decomposition_min_margin: float

    @property
    def feasible(self):
        return self.verdict is Verdict.FEASIBLE

    @property
    def decomposition_agrees(self):
        """Whether the three-part decomposition gives the same verdict."""
        return (self.decomposition_min_margin > 0) == self.feasible

    def summary(self):
        lines = [
            f"verdict: {self.verdict.value}",
            f"min_margin: {self.min_margin:.16e}",
            f"argmin_t: {self.argmin_t:.16e}",
            f"regime: {self.regime.value}",
            f"disturbance_bound: {self.disturbance_bound:.16e}",
            f"decomposition_min_margin: {self.decomposition_min_margin:.16e}",
            f"decomposition_agrees: {str(self.decomposition_agrees).lower()}",
        ]
        return "\n".join(lines)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "phi_u", "rhs", "margin", "dominant_term"])
            for row in zip(self.grid, self.phi_u, self.rhs, self.margin, self.dominant_term):
                w.writerow([f"{row[0]:.16e}", f"{row[1]:.16e}", f"{row[2]:.16e}", f"{row[3]:.16e}", row[4]])


def regime_of(alpha1):
    if alpha1 > REGIME_TOL:
        return Regime.CASE2_1
    if alpha1 < -REGIME_TOL:
        return Regime.CASE2_2
    return Regime.ALPHA_ZERO


def check_c1(coeffs, constraints, grid, d_bar=0.0, norm_B=None, clamp=False):
    """Pointwise feasibility margin ``phi_u(t) - rhs(t)`` over ``grid``.

    ``norm_B`` is required when ``d_bar > 0``. The verdict is Feasible iff
    the minimum margin is strictly positive.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be non-empty and strictly increasing")
    if d_bar < 0:
        raise ValueError("d_bar must be non-negative")
    if d_bar > 0 and not norm_B:
        raise ValueError("norm_B is required with a disturbance bound")
    dist = d_bar / norm_B if d_bar > 0 else 0.0

    phi_u = np.asarray(constraints.phi_u.value(grid), dtype=float)
    phi_x = np.asarray(constraints.phi_x.value(grid), dtype=float)
    phi_e = np.asarray(constraints.phi_e.value(grid), dtype=float)
    rate = np.abs(np.asarray(constraints.phi_e.derivative(grid, clamp=clamp), dtype=float))
    chi_r = np.asarray(constraints.chi_r.value(grid), dtype=float)
    k_r_term = coeffs.k_bar_r * coeffs.r_bar

    rhs = phi_x * (coeffs.k_bar_x - coeffs.eta) + rate * coeffs.alpha2 + coeffs.eta * chi_r + k_r_term + dist
    margin = phi_u - rhs

    parts = np.vstack([coeffs.alpha1 * phi_e, coeffs.alpha2 * rate, np.full(grid.shape, coeffs.beta)])
    dominant = np.array(TERM_NAMES, dtype=object)[np.argmax(np.abs(parts), axis=0)]
    decomposition_margin = phi_u - parts.sum(axis=0) - dist

    k = int(np.argmin(margin))
    min_margin = float(margin[k])
    return FeasibilityReport(
        grid=grid,
        phi_u=phi_u,
        rhs=rhs,
        margin=margin,
        min_margin=min_margin,
        argmin_t=float(grid[k]),
        verdict=Verdict.FEASIBLE if min_margin > 0 else Verdict.INFEASIBLE,
        dominant_term=dominant,
        regime=regime_of(coeffs.alpha1),
        disturbance_bound=float(d_bar),
        decomposition_margin=decomposition_margin,
        decomposition_min_margin=float(decomposition_margin.min()),
    )


class SteadyStateResult(NamedTuple):
    passed: bool
    margin: float


def steady_state_check(coeffs, phi_e_inf, phi_u_inf):
    """Limit of the condition as the envelopes settle: ``phi_u_inf > alpha1 phi_e_inf + beta``."""
    if not (phi_e_inf > 0 and phi_u_inf > 0):
        raise ValueError("steady-state bounds must be positive")
    margin = phi_u_inf - coeffs.alpha1 * phi_e_inf - coeffs.beta
    return SteadyStateResult(margin > 0, float(margin))


class InputOnlyResult(NamedTuple):
    passed: bool
    min_margin: float


def input_only_check(eta, chi_r, k_bar_r, r_bar, phi_u, grid):
    """Condition without a state constraint: ``phi_u(t) > eta chi_r(t) + K_r_bar r_bar``."""
    grid = np.asarray(grid, dtype=float)
    margin = np.asarray(phi_u.value(grid)) - eta * np.asarray(chi_r.value(grid)) - k_bar_r * r_bar
    mm = float(np.min(margin))
    return InputOnlyResult(mm > 0, mm)


class RegimeResult(NamedTuple):
    regime: Regime
    note: str
    model_distance: Optional[float] = None
    distance_exceeds_eta: Optional[bool] = None


_NOTES = {
    Regime.CASE2_1: "alpha1 > 0: a larger error envelope raises the required input budget",
    Regime.CASE2_2: "alpha1 < 0: a larger error envelope lowers the required input budget",
    Regime.ALPHA_ZERO: "alpha1 = 0: the condition no longer depends on phi_e, "
    "only on |phi_e_dot| and the offset beta",
}


def classify_regime(coeffs, A=None, A_r=None):
    """Regime from the sign of alpha1; with the true ``A`` (test mode) also
    reports whether ``||A_r - A|| > eta``."""
    regime = regime_of(coeffs.alpha1)
    if A is None or A_r is None:
        return RegimeResult(regime, _NOTES[regime])
    dist = spectral_norm(np.asarray(A_r, dtype=float) - np.asarray(A, dtype=float))
    return RegimeResult(regime, _NOTES[regime], dist, dist > coeffs.eta)
