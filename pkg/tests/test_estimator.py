import dataclasses

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tvmrac import ConstrainedMRAC
from tvmrac.estimator import certification_grid, certify
from tvmrac.feasibility import Regime, Verdict
from tvmrac.simulation import run


def test_params_round_trip():
    est = ConstrainedMRAC(grid_step=0.005, disturbed=True)
    assert est.get_params() == {"grid_step": 0.005, "disturbed": True}
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est
    est.set_params(grid_step=0.02)
    assert est.grid_step == 0.02


def test_not_fitted():
    est = ConstrainedMRAC()
    for call in (est.simulate, est.validation_report, est.runner, lambda: est.monte_carlo(1, 0.0)):
        with pytest.raises(NotFittedError):
            call()


def test_fit_rejects_non_scenario():
    with pytest.raises(TypeError):
        ConstrainedMRAC().fit(np.eye(2))


def test_fitted_attributes(ex1):
    est = ConstrainedMRAC().fit(ex1)
    np.testing.assert_allclose(est.P_, [[1.5, 0.5], [0.5, 0.5]], atol=1e-12)
    np.testing.assert_allclose(est.matched_.K_x, [[-3.0, -3.5]], atol=1e-14)
    np.testing.assert_allclose(est.K_r_, [[1.0]], atol=1e-14)
    assert est.report_.verdict is Verdict.INFEASIBLE
    assert est.regime_.regime is Regime.CASE2_1
    assert est.assumption1_.passed
    assert est.config_.k_bar_x == ex1.k_bar_x
    report = est.validation_report()
    assert "c1_verdict: Infeasible" in report and "residual_A: 0.0000000000000000e+00" in report


def test_simulate_matches_function(ex1):
    sc = dataclasses.replace(ex1, T=1.0)
    a = ConstrainedMRAC().fit(sc).simulate()
    b = run(sc)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.u, b.u)


def test_grid_step_and_disturbed_params(ex2):
    coarse = ConstrainedMRAC(grid_step=0.1).fit(ex2)
    assert len(coarse.report_.grid) == 151
    calm, disturbed = certify(ex2)[1], certify(ex2, disturbed=True)[1]
    assert disturbed.min_margin < calm.min_margin
    np.testing.assert_allclose(
        calm.margin - disturbed.margin, ex2.d_bar / np.linalg.norm(ex2.B, 2), rtol=1e-12
    )


def test_certification_grid():
    g = certification_grid(20.0, 0.01)
    assert len(g) == 2001 and g[-1] == 20.0
    with pytest.raises(ValueError):
        certification_grid(1.0, 0.0)
