"""Closed-loop simulation of plant, reference model and barrier-based adaptation
under the saturated controller, plus the measurement-noise Monte-Carlo harness.
"""
import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import _kernels
from .controller import ControllerConfig, matched_gains
from .envelopes import ConstraintSet, Constant, Envelope
from .errors import (
    BarrierBreach,
    DimensionMismatch,
    EmptyWindow,
    NonFiniteState,
    RankDeficient,
    ValidationError,
)
from .linalg import (
    as_matrix,
    check_positive_definite,
    is_hurwitz,
    left_pseudo_inverse,
    solve_lyapunov,
    spectral_constants,
)

MATCH_TOL = 1e-9
GRID_TOL = 1e-9


@dataclass(frozen=True)
class NoiseSpec:
    sigma2: float = 0.0
    seed: int = 0
    window: Optional[Tuple[float, float]] = None


@dataclass(eq=False)
class Scenario:
    """Plant, reference model, constraints and run settings.

    ``A`` is the true plant matrix; the controller never reads it. ``r`` and
    ``d`` are per-component envelope lists (length m and n).
    """

    A: np.ndarray
    B: np.ndarray
    A_r: np.ndarray
    B_r: np.ndarray
    Q: np.ndarray
    r: Tuple[Envelope, ...]
    constraints: ConstraintSet
    k_bar_x: float
    k_bar_r: float
    r_bar: float
    T: float
    dt: float
    gamma_x: np.ndarray
    d: Optional[Tuple[Envelope, ...]] = None
    d_bar: float = 0.0
    x0: Optional[np.ndarray] = None
    xr0: Optional[np.ndarray] = None
    k_hat_x0: Optional[np.ndarray] = None
    proj_epsilon: float = 0.1
    denom_floor: float = 1e-9
    clamp_derivative: bool = False
    noise: Optional[NoiseSpec] = None
    name: str = "scenario"
    notes: Tuple[str, ...] = ()

    def __post_init__(self):
        self.A = as_matrix(self.A, "[plant].A")
        self.B = as_matrix(self.B, "[plant].B")
        self.A_r = as_matrix(self.A_r, "[reference].A_r")
        self.B_r = as_matrix(self.B_r, "[reference].B_r")
        self.Q = as_matrix(self.Q, "[simulation].Q")
        self.gamma_x = as_matrix(self.gamma_x, "[simulation].gamma_x")
        n, m = self.B.shape
        self.r = tuple(self.r)
        self.d = tuple(self.d) if self.d is not None else tuple(Constant(0.0) for _ in range(n))
        self.x0 = np.zeros(n) if self.x0 is None else np.asarray(self.x0, dtype=float).reshape(-1)
        self.xr0 = np.zeros(n) if self.xr0 is None else np.asarray(self.xr0, dtype=float).reshape(-1)
        self.k_hat_x0 = (
            np.zeros((m, n)) if self.k_hat_x0 is None else np.asarray(self.k_hat_x0, dtype=float).reshape(m, -1)
        )
        self.notes = tuple(self.notes)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def steps(self):
        return int(round(self.T / self.dt))

    @property
    def grid(self):
        return np.arange(self.steps + 1) * self.dt

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        from .scenarios import scenario_to_dict

        return scenario_to_dict(self) == scenario_to_dict(other)

    def check_dimensions(self):
        n, m = self.B.shape
        checks = [
            ("[plant].A", self.A.shape, (n, n)),
            ("[reference].A_r", self.A_r.shape, (n, n)),
            ("[reference].B_r", self.B_r.shape, (n, m)),
            ("[simulation].Q", self.Q.shape, (n, n)),
            ("[simulation].gamma_x", self.gamma_x.shape, (m, m)),
            ("[simulation].x0", self.x0.shape, (n,)),
            ("[simulation].xr0", self.xr0.shape, (n,)),
            ("[simulation].k_hat_x0", self.k_hat_x0.shape, (m, n)),
            ("[reference].r", (len(self.r),), (m,)),
            ("[disturbance].d", (len(self.d),), (n,)),
        ]
        if self.A.shape[0] != self.A.shape[1]:
            raise ValidationError(f"[plant].A must be square, got {self.A.shape}")
        for name, got, want in checks:
            if got != want:
                if name == "[plant].A":
                    name = "[plant].B"
                raise ValidationError(f"{name} dimension clash: got {got}, expected {want} (n={n}, m={m})")

    def validate(self):
        """Check every scenario invariant; raises ValidationError naming the first failure."""
        self.check_dimensions()
        if not (self.T > 0 and self.dt > 0) or abs(self.steps * self.dt - self.T) > GRID_TOL * max(self.T, 1.0):
            raise ValidationError("[simulation].T must be a positive multiple of dt")
        try:
            check_positive_definite(self.Q, "Q")
        except ValueError as exc:
            raise ValidationError(f"[simulation].Q: {exc}") from None
        try:
            check_positive_definite(self.gamma_x, "gamma_x")
        except ValueError as exc:
            raise ValidationError(f"[simulation].gamma_x: {exc}") from None
        if not is_hurwitz(self.A_r):
            raise ValidationError("[reference].A_r is not Hurwitz")
        try:
            mg = matched_gains(self.A, self.A_r, self.B, self.B_r)
        except RankDeficient:
            raise ValidationError("[plant].B must have full column rank") from None
        if mg.residual_B > MATCH_TOL:
            raise ValidationError(f"[reference].B_r is not in the column space of B (residual {mg.residual_B:.3e})")
        for name, val in (("k_bar_x", self.k_bar_x), ("k_bar_r", self.k_bar_r), ("r_bar", self.r_bar)):
            if not val > 0:
                raise ValidationError(f"[bounds].{name} must be positive")
        if self.d_bar < 0:
            raise ValidationError("[bounds].d_bar must be non-negative")
        grid = self.grid
        try:
            self.constraints.validate(grid)
        except ValueError as exc:
            raise ValidationError(f"[constraints]: {exc}") from None
        phi_e0 = self.constraints.phi_e.value(0.0)
        if not np.linalg.norm(self.x0 - self.xr0) < phi_e0:
            raise ValidationError("initial error ||x0 - xr0|| must be below phi_e(0)")
        r_sup = float(np.max(np.linalg.norm(sample_signals(self.r, grid), axis=1)))
        if not r_sup < self.r_bar:
            raise ValidationError(f"sup ||r(t)|| = {r_sup:.6g} is not below [bounds].r_bar = {self.r_bar:g}")
        d_sup = float(np.max(np.linalg.norm(sample_signals(self.d, grid), axis=1)))
        if d_sup > self.d_bar:
            raise ValidationError(f"sup ||d(t)|| = {d_sup:.6g} exceeds [bounds].d_bar = {self.d_bar:g}")
        if not 0 < self.proj_epsilon <= 1:
            raise ValidationError("[simulation].proj_epsilon must lie in (0, 1]")
        k_eff = self.k_bar_x / np.sqrt(1.0 + self.proj_epsilon)
        if np.linalg.norm(self.k_hat_x0) > k_eff:
            raise ValidationError("[simulation].k_hat_x0 lies outside the projection inner ball")
        return self


def sample_signals(signals, times):
    """Stack per-component envelopes into an array of shape (len(times), k)."""
    times = np.asarray(times, dtype=float)
    return np.column_stack([np.broadcast_to(np.asarray(s.value(times), dtype=float), times.shape) for s in signals])


class Design(NamedTuple):
    """Offline quantities derived from a scenario."""

    P: np.ndarray
    constants: object
    B_dagger: np.ndarray
    matched: object


def design(scenario):
    P = solve_lyapunov(scenario.A_r, scenario.Q)
    return Design(
        P=P,
        constants=spectral_constants(P, scenario.Q, scenario.B),
        B_dagger=left_pseudo_inverse(scenario.B),
        matched=matched_gains(scenario.A, scenario.A_r, scenario.B, scenario.B_r),
    )


def config_from_scenario(scenario, design_=None):
    design_ = design_ or design(scenario)
    return ControllerConfig(
        gamma_x=scenario.gamma_x,
        k_bar_x=scenario.k_bar_x,
        k_r=design_.matched.K_r,
        proj_epsilon=scenario.proj_epsilon,
        denom_floor=scenario.denom_floor,
    )


class ClosedLoopState(NamedTuple):
    x: np.ndarray
    x_r: np.ndarray
    k_hat_x: np.ndarray

    def pack(self):
        return np.concatenate([np.ravel(self.x), np.ravel(self.x_r), np.ravel(self.k_hat_x)]).astype(float)

    @classmethod
    def unpack(cls, s, n, m):
        s = np.asarray(s, dtype=float)
        return cls(s[:n].copy(), s[n : 2 * n].copy(), s[2 * n :].reshape(m, n).copy())


@dataclass
class SimLog:
    times: np.ndarray
    x: np.ndarray
    x_r: np.ndarray
    u: np.ndarray
    v: np.ndarray
    k_hat_x: np.ndarray
    margin_h: np.ndarray
    sat_flags: np.ndarray
    phi_e: np.ndarray
    phi_u: np.ndarray
    phi_x: np.ndarray
    phi_e_prime: np.ndarray
    lyapunov_total: Optional[np.ndarray] = None
    completed: bool = True
    breach_time: Optional[float] = None

    @property
    def e(self):
        return self.x - self.x_r

    @property
    def delta_u(self):
        return self.u - self.v

    @property
    def e_norm(self):
        return np.linalg.norm(self.e, axis=1)

    @property
    def x_norm(self):
        return np.linalg.norm(self.x, axis=1)

    @property
    def u_norm(self):
        return np.linalg.norm(self.u, axis=1)

    @property
    def k_hat_fro(self):
        return np.linalg.norm(self.k_hat_x.reshape(len(self.times), -1), axis=1)

    @property
    def v_e(self):
        """Barrier value from the (measured) margin; +inf outside the barrier set."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.margin_h > 0, np.log(self.phi_e_prime**2 / self.margin_h), np.inf)

    def to_csv(self, path):
        n = self.x.shape[1]
        m = self.u.shape[1]
        header = (
            ["t"]
            + [f"x_{i + 1}" for i in range(n)]
            + [f"xr_{i + 1}" for i in range(n)]
            + ["e_norm", "phi_e"]
            + [f"u_{i + 1}" for i in range(m)]
            + ["u_norm", "phi_u", "sat", "V_e", "h_m", "k_hat_fro"]
        )
        cols = [self.times, *self.x.T, *self.x_r.T, self.e_norm, self.phi_e, *self.u.T, self.u_norm, self.phi_u]
        tail = [self.v_e, self.margin_h, self.k_hat_fro]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(len(self.times)):
                row = [f"{c[k]:.16e}" for c in cols]
                row.append("1" if self.sat_flags[k] else "0")
                row.extend(f"{c[k]:.16e}" for c in tail)
                w.writerow(row)


class _Runner:
    """Pre-sampled signals and matrices for repeated kernel calls on one scenario."""

    def __init__(self, scenario, config=None, design_=None):
        self.scenario = sc = scenario
        self.design = design_ or design(sc)
        self.config = config or config_from_scenario(sc, self.design)
        N = sc.steps
        self.N = N
        half = np.arange(2 * N + 1) * (0.5 * sc.dt)
        phi_e = sc.constraints.phi_e
        self.PE = np.ascontiguousarray(phi_e.value(half), dtype=float)
        self.PED = np.ascontiguousarray(phi_e.derivative(half, clamp=sc.clamp_derivative), dtype=float)
        self.PU = np.ascontiguousarray(sc.constraints.phi_u.value(half), dtype=float)
        self.R = np.ascontiguousarray(sample_signals(sc.r, half))
        self.D = np.ascontiguousarray(sample_signals(sc.d, half))
        c = lambda a: np.ascontiguousarray(a, dtype=float)  # noqa: E731
        self.mats = (
            c(sc.A), c(sc.B), c(sc.A_r), c(sc.B_r), c(self.design.B_dagger), c(self.config.k_r),
            c(self.design.P), c(self.config.gamma_x),
        )
        self.s0 = ClosedLoopState(sc.x0, sc.xr0, sc.k_hat_x0).pack()
        self.zero_noise = np.zeros((N + 1, sc.n))

    def integrate(self, noise=None, clamp_denom=False):
        sc = self.scenario
        N, n, m = self.N, sc.n, sc.m
        noise = self.zero_noise if noise is None else np.ascontiguousarray(noise, dtype=float)
        if noise.shape != (N + 1, n):
            raise DimensionMismatch(f"noise must have shape {(N + 1, n)}")
        S = np.zeros((N + 1, self.s0.size))
        U = np.zeros((N + 1, m))
        V = np.zeros((N + 1, m))
        H = np.zeros(N + 1)
        SAT = np.zeros(N + 1, dtype=np.bool_)
        count, status, t_fail = _kernels.integrate(
            self.s0, N, sc.dt, self.PE, self.PED, self.PU, self.R, self.D, noise, *self.mats,
            self.design.constants.sqrt_lambda_min_P, self.config.k_bar_x, self.config.proj_epsilon,
            self.config.denom_floor, clamp_denom, S, U, V, H, SAT,
        )
        return S[:count], U[:count], V[:count], H[:count], SAT[:count], status, t_fail


def _build_log(runner, S, U, V, H, SAT, status, t_fail, oracle):
    sc = runner.scenario
    n, m = sc.n, sc.m
    count = S.shape[0]
    idx = 2 * np.arange(count)
    times = np.arange(count) * sc.dt
    pe = runner.PE[idx]
    PU = runner.PU[idx]
    u_norm = np.linalg.norm(U, axis=1)
    log = SimLog(
        times=times,
        x=S[:, :n],
        x_r=S[:, n : 2 * n],
        u=U,
        v=V,
        k_hat_x=S[:, 2 * n :].reshape(count, m, n),
        margin_h=H,
        sat_flags=np.abs(u_norm - PU) <= 1e-12 * PU,
        phi_e=pe,
        phi_u=PU,
        phi_x=np.asarray(sc.constraints.phi_x.value(times), dtype=float),
        phi_e_prime=pe * runner.design.constants.sqrt_lambda_min_P,
        completed=status == _kernels.OK,
        breach_time=None if status == _kernels.OK else float(t_fail),
    )
    if oracle:
        mg = runner.design.matched
        if mg.residual_A > MATCH_TOL or mg.residual_B > MATCH_TOL:
            raise ValidationError("oracle diagnostics need exactly matched gains (residual_A > 0)")
        g_inv = np.linalg.inv(runner.config.gamma_x)
        kt = log.k_hat_x - mg.K_x
        trace_term = np.einsum("kij,il,klj->k", kt, g_inv, kt)
        log.lyapunov_total = 0.5 * log.v_e + trace_term
    return log


def run(scenario, config=None, noise=None, clamp_denom=False, oracle=False):
    """Fixed-step RK4 simulation over ``[0, T]``.

    Parameters
    ----------
    noise : ndarray of shape (steps + 1, n), optional
        Additive measurement noise; row ``k`` is held over step ``k``.
    clamp_denom : bool
        Floor the barrier denominator instead of aborting; used for noisy runs
        where measured (not true) excursions may cross the barrier.
    oracle : bool
        Also compute the total Lyapunov function, which needs the true gains.

    Raises
    ------
    BarrierBreach, NonFiniteState
        With the partial log attached as ``exc.log``.
    """
    runner = _Runner(scenario, config)
    S, U, V, H, SAT, status, t_fail = runner.integrate(noise, clamp_denom)
    log = _build_log(runner, S, U, V, H, SAT, status, t_fail, oracle)
    if status == _kernels.BREACH:
        raise BarrierBreach(f"barrier reached at t={t_fail:.6g}", t=t_fail, log=log)
    if status == _kernels.NONFINITE:
        raise NonFiniteState(f"state left the finite range at t={t_fail:.6g}", t=t_fail, log=log)
    return log


def closed_loop_rhs(state, t, scenario, config=None, design_=None, eta=None):
    """Derivative of the packed closed loop at time ``t``.

    ``state`` is a ClosedLoopState; returns a ClosedLoopState of derivatives.
    ``eta`` is an optional measurement-noise sample.
    """
    sc = scenario
    design_ = design_ or design(sc)
    config = config or config_from_scenario(sc, design_)
    n, m = sc.n, sc.m
    s = state.pack()
    pe, ped = sc.constraints.phi_e.evaluate(float(t), clamp=sc.clamp_derivative)
    pu = sc.constraints.phi_u.value(float(t))
    r = sample_signals(sc.r, [t])[0]
    d = sample_signals(sc.d, [t])[0]
    eta = np.zeros(n) if eta is None else np.asarray(eta, dtype=float)
    ds = np.empty_like(s)
    aux = np.empty(2 * m + 2)
    c = np.ascontiguousarray
    status = _kernels.stage(
        s, pe, ped, pu, c(r), c(d), c(eta), c(sc.A), c(sc.B), c(sc.A_r), c(sc.B_r), c(design_.B_dagger),
        c(config.k_r), c(design_.P), c(config.gamma_x), design_.constants.sqrt_lambda_min_P, config.k_bar_x,
        config.proj_epsilon, config.denom_floor, False, ds, aux,
    )
    if status == _kernels.BREACH:
        raise BarrierBreach(f"barrier reached at t={t:.6g}", t=float(t))
    return ClosedLoopState.unpack(ds, n, m)


def error_dynamics_oracle(state, t, scenario, design_=None, config=None):
    """Tracking-error derivative assembled term by term, independently of
    the closed-loop kernel:

        e_dot = (A_r - (phi_e_dot/phi_e) B B^dagger) e + B K_tilde x + B du
                + (A + B K_x - A_r) x + (B K_r - B_r) r + d

    The last three terms vanish for exactly matched plants without disturbance.
    """
    sc = scenario
    design_ = design_ or design(sc)
    config = config or config_from_scenario(sc, design_)
    x, xr, K = (np.asarray(a, dtype=float) for a in state)
    e = x - xr
    pe, ped = sc.constraints.phi_e.evaluate(float(t), clamp=sc.clamp_derivative)
    pu = sc.constraints.phi_u.value(float(t))
    r = np.array([s.value(float(t)) for s in sc.r])
    d = np.array([s.value(float(t)) for s in sc.d])
    Bd = np.linalg.pinv(sc.B)
    K_x = Bd @ (sc.A_r - sc.A)
    v = K @ x + config.k_r @ r - (ped / pe) * (Bd @ e)
    nv = np.linalg.norm(v)
    du = (min(1.0, pu / nv) - 1.0) * v if nv > 0 else np.zeros_like(v)
    return (
        (sc.A_r - (ped / pe) * sc.B @ Bd) @ e
        + sc.B @ (K - K_x) @ x
        + sc.B @ du
        + (sc.A + sc.B @ K_x - sc.A_r) @ x
        + (sc.B @ config.k_r - sc.B_r) @ r
        + d
    )


def margin_h(e_m, P, phi_e_prime):
    """Constraint violation margin ``phi_e'^2 - e_m^T P e_m``; negative means outside."""
    e_m = np.asarray(e_m, dtype=float).reshape(-1)
    return float(phi_e_prime**2 - e_m @ np.asarray(P, dtype=float) @ e_m)


def p_avg(margins):
    """Fraction of (trial, sample) pairs with a strictly positive margin."""
    margins = np.asarray(margins, dtype=float)
    if margins.size == 0:
        raise EmptyWindow("no samples in the evaluation window")
    return float(np.mean(margins > 0))


def gaussian_noise(master_seed, trial, shape, sigma2):
    """Zero-mean Gaussian samples with variance ``sigma2`` by Box-Muller from a
    stream seeded deterministically by ``(master_seed, trial)``."""
    count = int(np.prod(shape))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), int(trial)])))
    half = (count + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * half)
    z[0::2] = radius * np.cos(2.0 * np.pi * u2)
    z[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return np.sqrt(sigma2) * z[:count].reshape(shape)


@dataclass
class MonteCarloReport:
    trials: int
    sigma2: float
    p_avg: float
    per_trial_satisfaction: np.ndarray
    window: Tuple[float, float]
    master_seed: int
    max_k_hat_fro: float = 0.0
    max_u_ratio: float = 0.0
    aborted_trials: int = 0
    margins: Optional[np.ndarray] = field(default=None, repr=False)

    def summary(self):
        return (
            f"sigma2={self.sigma2:.16e} trials={self.trials} seed={self.master_seed} "
            f"window=[{self.window[0]:.16e}, {self.window[1]:.16e}] p_avg={self.p_avg:.16e} "
            f"aborted={self.aborted_trials}"
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sigma2", "trial", "satisfaction"])
            for i, s in enumerate(self.per_trial_satisfaction):
                w.writerow([f"{self.sigma2:.16e}", i, f"{s:.16e}"])


def monte_carlo(scenario, config=None, N=1000, sigma2=0.0, master_seed=0, window=None, keep_margins=False):
    """Repeat the run under independent measurement-noise realizations.

    The controller and adaptation see ``x + eta_k``; the plant integrates the
    true state. A trial that stops early (non-finite state) counts every
    remaining window sample as a violation.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    runner = _Runner(scenario, config)
    sc = scenario
    times = sc.grid
    if window is None:
        window = (0.0, sc.T)
    t_a, t_b = float(window[0]), float(window[1])
    if not (0 <= t_a <= t_b <= sc.T + GRID_TOL):
        raise ValueError("window must lie inside [0, T]")
    mask = (times >= t_a - GRID_TOL) & (times <= t_b + GRID_TOL)
    if not mask.any():
        raise EmptyWindow("no grid samples inside the window")
    n_steps = runner.N
    sat = np.empty(N)
    kept = np.empty((N, int(mask.sum()))) if keep_margins else None
    max_k = 0.0
    max_u = 0.0
    aborted = 0
    for i in range(N):
        noise = gaussian_noise(master_seed, i, (n_steps + 1, sc.n), sigma2) if sigma2 > 0 else None
        S, U, V, H, SAT, status, _ = runner.integrate(noise, clamp_denom=True)
        h = np.full(n_steps + 1, -np.inf)
        h[: H.size] = H
        if status != _kernels.OK:
            aborted += 1
        hw = h[mask]
        sat[i] = np.mean(hw > 0)
        if keep_margins:
            kept[i] = hw
        max_k = max(max_k, float(np.max(np.linalg.norm(S[:, 2 * sc.n :], axis=1))))
        max_u = max(max_u, float(np.max(np.linalg.norm(U, axis=1) / runner.PU[2 * np.arange(U.shape[0])])))
    return MonteCarloReport(
        trials=N,
        sigma2=float(sigma2),
        p_avg=float(np.mean(sat)),
        per_trial_satisfaction=sat,
        window=(t_a, t_b),
        master_seed=int(master_seed),
        max_k_hat_fro=max_k,
        max_u_ratio=max_u,
        aborted_trials=aborted,
        margins=kept,
    )


class Assumption1Result(NamedTuple):
    passed: bool
    sup_norm: float
    first_violation_t: Optional[float]


def reference_trajectory(scenario, grid=None):
    """Integrate the reference model alone with RK4 on ``grid`` (default: the run grid)."""
    sc = scenario
    grid = sc.grid if grid is None else np.asarray(grid, dtype=float)
    xr = np.empty((grid.size, sc.n))
    xr[0] = sc.xr0
    Ar, Br = sc.A_r, sc.B_r
    f = lambda t, z: Ar @ z + Br @ np.array([s.value(t) for s in sc.r])  # noqa: E731
    z = sc.xr0.copy()
    for k in range(grid.size - 1):
        t, h = grid[k], grid[k + 1] - grid[k]
        k1 = f(t, z)
        k2 = f(t + h / 2, z + h / 2 * k1)
        k3 = f(t + h / 2, z + h / 2 * k2)
        k4 = f(t + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        xr[k + 1] = z
    return xr


def validate_assumption1(scenario, grid=None):
    """Check ``||x_r(t)|| <= chi_r(t) < phi_x(t)`` along the reference-only trajectory."""
    sc = scenario
    grid = sc.grid if grid is None else np.asarray(grid, dtype=float)
    norms = np.linalg.norm(reference_trajectory(sc, grid), axis=1)
    chi = np.asarray(sc.constraints.chi_r.value(grid), dtype=float)
    phi_x = np.asarray(sc.constraints.phi_x.value(grid), dtype=float)
    bad = np.nonzero(~((norms <= chi) & (chi < phi_x)))[0]
    first = float(grid[bad[0]]) if bad.size else None
    return Assumption1Result(bad.size == 0, float(norms.max()), first)
