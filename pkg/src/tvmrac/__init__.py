"""Model reference adaptive control under time-varying state and input
constraints: feasibility certificates, closed-loop simulation and
measurement-noise Monte-Carlo studies."""
from .controller import ControllerConfig, adaptive_rate, auxiliary_input, matched_gains, project, saturate, tvblf_value
from .envelopes import (
    PPF,
    ConstraintSet,
    Constant,
    Exponential,
    PerformanceFunction,
    Sinusoid,
    Sum,
    Window,
    convergence_time,
    derive_error_envelope,
    eval_envelope,
)
from .errors import BarrierBreach, NonFiniteState, ParseError, TvmracError, ValidationError
from .estimator import ConstrainedMRAC, certify
from .feasibility import check_c1, classify_regime, compute_coefficients, input_only_check, steady_state_check
from .linalg import is_hurwitz, left_pseudo_inverse, solve_lyapunov, spectral_constants
from .scenarios import BUILTINS, load_scenario
from .simulation import Scenario, monte_carlo, p_avg, run, validate_assumption1

__version__ = "0.1.0"

__all__ = [
    "ControllerConfig",
    "adaptive_rate",
    "auxiliary_input",
    "matched_gains",
    "project",
    "saturate",
    "tvblf_value",
    "PPF",
    "ConstraintSet",
    "Constant",
    "Exponential",
    "PerformanceFunction",
    "Sinusoid",
    "Sum",
    "Window",
    "convergence_time",
    "derive_error_envelope",
    "eval_envelope",
    "BarrierBreach",
    "NonFiniteState",
    "ParseError",
    "TvmracError",
    "ValidationError",
    "ConstrainedMRAC",
    "certify",
    "check_c1",
    "classify_regime",
    "compute_coefficients",
    "input_only_check",
    "steady_state_check",
    "is_hurwitz",
    "left_pseudo_inverse",
    "solve_lyapunov",
    "spectral_constants",
    "BUILTINS",
    "load_scenario",
    "Scenario",
    "monte_carlo",
    "p_avg",
    "run",
    "validate_assumption1",
]
