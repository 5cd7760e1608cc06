import csv
import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from helpers import random_scenario
from tvmrac.envelopes import PPF, ConstraintSet, Constant, Sinusoid
from tvmrac.errors import BarrierBreach, EmptyWindow, ValidationError
from tvmrac.simulation import (
    ClosedLoopState,
    NoiseSpec,
    Scenario,
    closed_loop_rhs,
    design,
    error_dynamics_oracle,
    gaussian_noise,
    margin_h,
    monte_carlo,
    p_avg,
    reference_trajectory,
    run,
    validate_assumption1,
)


def small_scenario(**kw):
    base = dict(
        A=[[0.0, 1.0], [2.0, 1.5]],
        B=[[0.0], [1.0]],
        A_r=[[0.0, 1.0], [-1.0, -2.0]],
        B_r=[[0.0], [1.0]],
        Q=np.eye(2),
        r=(Constant(0.0),),
        constraints=ConstraintSet.from_error_envelope(PPF(0.8, 0.05, 1.2, 1.0), PPF(5.0, 1.7, 1.0, 1.0),
                                                      Constant(0.85)),
        k_bar_x=5.0,
        k_bar_r=1.2,
        r_bar=1.0,
        T=2.0,
        dt=1e-3,
        gamma_x=[[5.0]],
    )
    base.update(kw)
    return Scenario(**base)


def interior_state(rng, sc, d, t):
    """Random state whose error lies strictly inside the barrier set at t."""
    n, m = sc.n, sc.m
    pe = sc.constraints.phi_e.value(t) * d.constants.sqrt_lambda_min_P
    direction = rng.normal(size=n)
    e = direction / np.sqrt(direction @ d.P @ direction) * pe * rng.uniform(0, 0.95)
    xr = rng.normal(scale=0.5, size=n)
    K = rng.normal(size=(m, n))
    K *= rng.uniform(0, 1) * sc.k_bar_x / np.linalg.norm(K)
    return ClosedLoopState(xr + e, xr, K)


class TestClosedLoopRhs:
    def test_equilibrium(self):
        sc = small_scenario()
        ds = closed_loop_rhs(ClosedLoopState(np.zeros(2), np.zeros(2), np.array([[0.3, -0.2]])), 0.7, sc)
        assert all(np.all(part == 0.0) for part in ds)

    def test_matched_gain_contraction(self, rng):
        sc = small_scenario(constraints=ConstraintSet.from_error_envelope(PPF(0.8, 0.05, 1.2, 1.0), Constant(1e6),
                                                                           Constant(0.85)),
                            r=(Sinusoid(1.0, 0.5),))
        K_x = design(sc).matched.K_x
        t = 0.4
        pe, ped = sc.constraints.phi_e.evaluate(t)
        for _ in range(20):
            s = interior_state(rng, sc, design(sc), t)._replace(k_hat_x=K_x)
            ds = closed_loop_rhs(s, t, sc)
            e = s.x - s.x_r
            # square-free B: the rate term acts through B B^dagger
            expected = sc.A_r @ e - (ped / pe) * sc.B @ np.array([[0.0, 1.0]]) @ e
            np.testing.assert_allclose(ds.x - ds.x_r, expected, atol=1e-12)

    def test_square_b_reduces_to_scalar_rate(self, rng):
        """With invertible B, r = 0 and exact matching, e' = (A_r - phi'/phi I) e + B K~ x + B du."""
        A_r = np.array([[-1.0, 0.5], [0.0, -2.0]])
        B = np.array([[1.0, 0.2], [0.3, 1.0]])
        A = A_r - B @ np.array([[0.4, -0.3], [0.1, 0.2]])
        sc = small_scenario(A=A, B=B, A_r=A_r, B_r=B, r=(Constant(0.0), Constant(0.0)), gamma_x=np.eye(2),
                            constraints=ConstraintSet.from_error_envelope(PPF(0.8, 0.05, 1.2, 1.0),
                                                                          PPF(1.0, 0.5, 1.0, 1.0), Constant(0.85)))
        d = design(sc)
        for _ in range(50):
            t = rng.uniform(0, 2)
            s = interior_state(rng, sc, d, t)
            pe, ped = sc.constraints.phi_e.evaluate(t)
            e = s.x - s.x_r
            v = s.k_hat_x @ s.x - (ped / pe) * np.linalg.solve(B, e)
            nv = np.linalg.norm(v)
            pu = sc.constraints.phi_u.value(t)
            du = v * (min(1.0, pu / nv) - 1.0)
            expected = (A_r - ped / pe * np.eye(2)) @ e + B @ (s.k_hat_x - d.matched.K_x) @ s.x + B @ du
            ds = closed_loop_rhs(s, t, sc)
            np.testing.assert_allclose(ds.x - ds.x_r, expected, atol=1e-11)

    @pytest.mark.parametrize("name", ["ex1", "ex2", "ex2n"])
    def test_matches_error_oracle(self, name, request, rng):
        sc = request.getfixturevalue(name)
        d = design(sc)
        for _ in range(200):
            t = rng.uniform(0, sc.T)
            s = interior_state(rng, sc, d, t)
            ds = closed_loop_rhs(s, t, sc, design_=d)
            oracle = error_dynamics_oracle(s, t, sc, design_=d)
            np.testing.assert_allclose(ds.x - ds.x_r, oracle, atol=1e-10 * max(1.0, np.abs(oracle).max()))

    def test_breach(self):
        sc = small_scenario()
        with pytest.raises(BarrierBreach):
            closed_loop_rhs(ClosedLoopState(np.array([1.0, 0.0]), np.zeros(2), np.zeros((1, 2))), 0.0, sc)

    def test_pack_round_trip(self, rng):
        s = ClosedLoopState(rng.normal(size=3), rng.normal(size=3), rng.normal(size=(2, 3)))
        u = ClosedLoopState.unpack(s.pack(), 3, 2)
        for a, b in zip(s, u):
            np.testing.assert_array_equal(a, b)


class TestRun:
    def test_zero_scenario(self):
        log = run(small_scenario())
        for arr in (log.x, log.x_r, log.u, log.v, log.k_hat_x, log.e):
            assert np.all(arr == 0.0)
        assert len(log.times) == 2001 and log.completed

    def test_series_share_grid(self, ex1):
        log = run(ex1)
        N = len(log.times)
        for arr in (log.x, log.x_r, log.u, log.v, log.delta_u, log.k_hat_x, log.margin_h, log.sat_flags, log.phi_e,
                    log.phi_u, log.phi_x, log.v_e):
            assert len(arr) == N
        np.testing.assert_array_equal(log.sat_flags, np.abs(log.u_norm - log.phi_u) <= 1e-12 * log.phi_u)

    def test_bicycle_behaviour(self, ex1):
        log = run(ex1, oracle=True)
        assert np.max(log.e_norm / log.phi_e) < 1
        assert np.max(log.u_norm / log.phi_u) <= 1 + 1e-12
        assert np.max(log.lyapunov_total - log.lyapunov_total[0]) <= 1e-6
        assert log.lyapunov_total[0] == pytest.approx(0.5 * 0 + (9 + 12.25) / 5.0)
        assert np.max(log.k_hat_fro) <= ex1.k_bar_x + 1e-9

    def test_oracle_needs_matching(self, ex2):
        with pytest.raises(ValidationError):
            run(ex2, oracle=True)

    def test_breach_carries_partial_log(self, ex2):
        with pytest.raises(BarrierBreach) as info:
            run(ex2)
        exc = info.value
        assert 5.0 < exc.t < 6.0
        assert not exc.log.completed and exc.log.breach_time == exc.t
        assert exc.log.times[-1] <= exc.t

    def test_csv(self, ex1, tmp_path):
        log = run(dataclasses.replace(ex1, T=0.01))
        path = tmp_path / "s.csv"
        log.to_csv(path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["t", "x_1", "x_2", "xr_1", "xr_2", "e_norm", "phi_e", "u_1", "u_norm", "phi_u", "sat",
                           "V_e", "h_m", "k_hat_fro"]
        assert len(rows) == 12
        assert float(rows[1][6]) == 0.8

    def test_noise_shape_checked(self, ex1):
        with pytest.raises(ValueError):
            run(ex1, noise=np.zeros((3, 2)))

    @settings(max_examples=10)
    @given(st.integers(0, 2**31))
    def test_random_containment(self, seed):
        sc = random_scenario(np.random.default_rng(seed), T=2.0)
        try:
            log = run(sc)
        except BarrierBreach as exc:
            log = exc.log
        assert np.max(log.u_norm / log.phi_u) <= 1 + 1e-12
        assert np.max(log.k_hat_fro) <= sc.k_bar_x + 1e-9


class TestMargins:
    def test_examples(self):
        assert margin_h([0.0, 0.0], np.eye(2), 1.0) == 1.0
        assert margin_h([0.6, 0.8], np.eye(2), 1.0) == pytest.approx(0.0, abs=1e-15)
        assert margin_h([0.6, 0.8], np.eye(2), 0.9) == pytest.approx(-0.19, abs=1e-15)

    def test_p_avg(self):
        assert p_avg(np.ones((3, 4))) == 1.0
        assert p_avg([1.0, -1.0, 2.0, 0.0]) == 0.5
        with pytest.raises(EmptyWindow):
            p_avg([])

    def test_chi_square_oracle(self):
        """With e = 0 and P = I the measured quadratic is sigma2 * chi2(n)."""
        sigma2, n, c = 0.05, 4, 0.2
        eta = gaussian_noise(3, 0, (200_000, n), sigma2)
        margins = c - np.sum(eta**2, axis=1)
        expected = stats.chi2.cdf(c / sigma2, df=n)
        assert p_avg(margins) == pytest.approx(expected, abs=4 * np.sqrt(expected * (1 - expected) / 200_000))

    def test_gaussian_moments(self):
        z = gaussian_noise(11, 4, (100_000, 3), 0.08)
        assert abs(z.mean()) < 0.005
        assert z.var() == pytest.approx(0.08, rel=0.02)
        assert stats.kstest(z[:, 0] / np.sqrt(0.08), "norm").pvalue > 1e-3

    def test_streams_are_independent_and_deterministic(self):
        a = gaussian_noise(7, 0, (10, 2), 1.0)
        np.testing.assert_array_equal(a, gaussian_noise(7, 0, (10, 2), 1.0))
        assert not np.array_equal(a, gaussian_noise(7, 1, (10, 2), 1.0))
        assert not np.array_equal(a, gaussian_noise(8, 0, (10, 2), 1.0))


class TestMonteCarlo:
    def test_noise_free_feasible_run(self, ex1):
        rep = monte_carlo(dataclasses.replace(ex1, T=5.0), N=3, sigma2=0.0, master_seed=1)
        assert rep.p_avg == 1.0 and np.all(rep.per_trial_satisfaction == 1.0)

    def test_deterministic(self, ex2n):
        sc = dataclasses.replace(ex2n, T=3.0)
        a = monte_carlo(sc, N=2, sigma2=0.05, master_seed=7, keep_margins=True)
        b = monte_carlo(sc, N=2, sigma2=0.05, master_seed=7, keep_margins=True)
        np.testing.assert_array_equal(a.per_trial_satisfaction, b.per_trial_satisfaction)
        np.testing.assert_array_equal(a.margins, b.margins)
        assert a.summary() == b.summary()

    def test_p_avg_is_pooled_mean(self, ex2n):
        sc = dataclasses.replace(ex2n, T=2.0)
        rep = monte_carlo(sc, N=3, sigma2=0.01, master_seed=2, window=(0.5, 1.5), keep_margins=True)
        assert rep.p_avg == p_avg(rep.margins)
        assert rep.margins.shape == (3, 1001)
        assert rep.window == (0.5, 1.5)

    def test_window_validation(self, ex2n):
        with pytest.raises(ValueError):
            monte_carlo(ex2n, N=1, sigma2=0.0, window=(2.0, 100.0))
        with pytest.raises(ValueError):
            monte_carlo(ex2n, N=0, sigma2=0.0)

    def test_csv(self, ex2n, tmp_path):
        rep = monte_carlo(dataclasses.replace(ex2n, T=1.0), N=2, sigma2=0.01, master_seed=3)
        rep.to_csv(tmp_path / "m.csv")
        rows = list(csv.reader(open(tmp_path / "m.csv")))
        assert rows[0] == ["sigma2", "trial", "satisfaction"] and len(rows) == 3
        assert "p_avg=" in rep.summary()


class TestAssumption1:
    def test_zero_reference(self):
        res = validate_assumption1(small_scenario())
        assert res.passed and res.sup_norm == 0.0 and res.first_violation_t is None

    def test_zero_bound_fails(self):
        sc = small_scenario(r=(Sinusoid(1.0, 0.5),), constraints=ConstraintSet.from_error_envelope(
            PPF(0.8, 0.05, 1.2, 1.0), PPF(5.0, 1.7, 1.0, 1.0), Constant(0.0)))
        res = validate_assumption1(sc)
        assert not res.passed and res.first_violation_t == pytest.approx(1e-3)

    def test_bicycle_threshold(self, ex1):
        xr = reference_trajectory(ex1)
        sup = np.linalg.norm(xr, axis=1).max()
        for c, expect in ((sup + 1e-6, True), (sup - 1e-6, False)):
            cs = ConstraintSet.from_error_envelope(ex1.constraints.phi_e, ex1.constraints.phi_u, Constant(c))
            assert validate_assumption1(dataclasses.replace(ex1, constraints=cs)).passed is expect

    def test_reference_matches_closed_form(self):
        # x_r' = -x_r + 1 on a scalar model: x_r(t) = 1 - exp(-t)
        sc = small_scenario(A=[[-1.0]], B=[[1.0]], A_r=[[-1.0]], B_r=[[1.0]], Q=[[1.0]], gamma_x=[[1.0]],
                            r=(Constant(1.0),), r_bar=2.0)
        xr = reference_trajectory(sc)
        np.testing.assert_allclose(xr[:, 0], 1 - np.exp(-sc.grid), atol=1e-12)


class TestScenarioValidation:
    @pytest.mark.parametrize(
        "kw, fragment",
        [
            (dict(B=[[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]]), "[plant].B"),
            (dict(A_r=[[0.0, 1.0], [2.0, 1.5]]), "Hurwitz"),
            (dict(Q=[[1.0, 0.0], [0.0, -1.0]]), "Q"),
            (dict(gamma_x=[[-1.0]]), "gamma_x"),
            (dict(x0=[0.9, 0.0]), "initial error"),
            (dict(r=(Constant(2.0),)), "r_bar"),
            (dict(B_r=[[1.0], [0.0]]), "column space"),
            (dict(k_hat_x0=[[5.0, 0.0]]), "k_hat_x0"),
            (dict(T=1.0005), "multiple"),
            (dict(d=(Constant(0.1), Constant(0.0))), "d_bar"),
        ],
    )
    def test_invariants(self, kw, fragment):
        with pytest.raises(ValidationError, match=fragment.replace("[", r"\[").replace("]", r"\]")):
            small_scenario(**kw).validate()

    def test_equality(self, ex1):
        assert small_scenario() == small_scenario()
        assert small_scenario() != small_scenario(k_bar_x=4.0)
        assert ex1 == dataclasses.replace(ex1)

    def test_noise_spec_default_window(self):
        assert NoiseSpec().window is None
