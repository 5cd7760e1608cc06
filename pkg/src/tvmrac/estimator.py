"""Estimator-style front end: ``fit`` performs the offline design and
certification for a scenario; simulation methods reuse the fitted design."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .feasibility import check_c1, classify_regime, compute_coefficients
from .linalg import is_hurwitz
from .simulation import Scenario, _Runner, config_from_scenario, design, monte_carlo, run, validate_assumption1


def certification_grid(T, step):
    if not step > 0:
        raise ValueError("grid step must be positive")
    count = int(round(T / step))
    return np.linspace(0.0, count * step, count + 1)


def certify(scenario, design_=None, grid_step=0.01, disturbed=False):
    """Feasibility report for a scenario on a uniform grid over ``[0, T]``."""
    design_ = design_ or design(scenario)
    grid = certification_grid(scenario.T, grid_step)
    chi_r_sup = float(np.max(scenario.constraints.chi_r.value(grid)))
    coeffs = compute_coefficients(design_.constants, scenario.k_bar_x, scenario.k_bar_r, scenario.r_bar, chi_r_sup)
    d_bar = scenario.d_bar if disturbed else 0.0
    report = check_c1(coeffs, scenario.constraints, grid, d_bar=d_bar, norm_B=design_.constants.norm_B,
                      clamp=scenario.clamp_derivative)
    return coeffs, report


class ConstrainedMRAC(BaseEstimator):
    """Offline design and certification of the constrained adaptive controller.

    Parameters
    ----------
    grid_step : float
        Step of the certification grid.
    disturbed : bool
        Include the scenario's disturbance bound in the certificate.

    Attributes
    ----------
    P_ : ndarray
        Lyapunov solution for the reference model.
    constants_ : SpectralConstants
    coefficients_ : FeasibilityCoefficients
    report_ : FeasibilityReport
    config_ : ControllerConfig
    """

    def __init__(self, grid_step=0.01, disturbed=False):
        self.grid_step = grid_step
        self.disturbed = disturbed

    def fit(self, scenario, y=None):
        if not isinstance(scenario, Scenario):
            raise TypeError("fit expects a Scenario")
        scenario.validate()
        self.scenario_ = scenario
        self.design_ = design(scenario)
        self.P_ = self.design_.P
        self.constants_ = self.design_.constants
        self.matched_ = self.design_.matched
        self.K_r_ = self.matched_.K_r
        self.config_ = config_from_scenario(scenario, self.design_)
        self.coefficients_, self.report_ = certify(scenario, self.design_, self.grid_step, self.disturbed)
        self.regime_ = classify_regime(self.coefficients_, scenario.A, scenario.A_r)
        self.assumption1_ = validate_assumption1(scenario)
        return self

    def simulate(self, noise=None, clamp_denom=False, oracle=False):
        check_is_fitted(self, "design_")
        return run(self.scenario_, self.config_, noise=noise, clamp_denom=clamp_denom, oracle=oracle)

    def monte_carlo(self, N, sigma2, master_seed=0, window=None):
        check_is_fitted(self, "design_")
        return monte_carlo(self.scenario_, self.config_, N=N, sigma2=sigma2, master_seed=master_seed, window=window)

    def runner(self):
        """Reusable compiled-kernel runner for repeated simulations."""
        check_is_fitted(self, "design_")
        return _Runner(self.scenario_, self.config_, self.design_)

    def validation_report(self):
        check_is_fitted(self, "design_")
        sc = self.scenario_
        a1 = self.assumption1_
        lines = [
            f"scenario: {sc.name}",
            f"is_hurwitz(A_r): {str(is_hurwitz(sc.A_r)).lower()}",
            f"residual_A: {self.matched_.residual_A:.16e}",
            f"residual_B: {self.matched_.residual_B:.16e}",
            f"assumption1: {'pass' if a1.passed else 'fail'} (sup |x_r| = {a1.sup_norm:.16e})",
            f"c1_verdict: {self.report_.verdict.value}",
        ]
        lines.extend(f"note: {note}" for note in sc.notes)
        return "\n".join(lines)
