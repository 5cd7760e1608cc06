"""Random scenario and matrix generators shared by the test modules."""
import numpy as np

from tvmrac.envelopes import PPF, ConstraintSet, Constant, Sinusoid
from tvmrac.simulation import Scenario


def random_hurwitz(rng, n, margin=0.3):
    M = rng.normal(size=(n, n))
    shift = np.max(np.linalg.eigvals(M).real) + margin + rng.uniform(0.0, 1.0)
    return M - shift * np.eye(n)


def random_spd(rng, n, lo=0.5):
    M = rng.normal(size=(n, n))
    return M @ M.T + lo * np.eye(n)


def random_scenario(rng, n=None, m=None, T=20.0, dt=1e-3, matched=True):
    n = n or int(rng.integers(1, 5))
    m = m or int(rng.integers(1, n + 1))
    A_r = random_hurwitz(rng, n)
    B = rng.normal(size=(n, m))
    while np.linalg.svd(B, compute_uv=False).min() < 0.3:
        B = rng.normal(size=(n, m))
    K_r = np.eye(m) + 0.3 * rng.normal(size=(m, m))
    if matched:
        A = A_r - B @ rng.normal(scale=0.8, size=(m, n))
    else:
        A = A_r + rng.normal(scale=0.5, size=(n, n))
    amp = rng.uniform(0.1, 1.0)
    r = tuple(Sinusoid(amp, rng.uniform(0.2, 2.0), rng.uniform(0, np.pi)) for _ in range(m))
    phi_e = PPF(rng.uniform(0.5, 2.0), rng.uniform(0.05, 0.3), rng.uniform(0.5, 2.0), float(rng.integers(1, 3)))
    phi_u = PPF(rng.uniform(1.0, 6.0), rng.uniform(0.2, 0.9), rng.uniform(0.5, 4.0), float(rng.integers(1, 3)))
    constraints = ConstraintSet.from_error_envelope(phi_e, phi_u, Constant(1.0))
    P = np.linalg.solve(np.kron(np.eye(n), A_r.T) + np.kron(A_r.T, np.eye(n)), -np.eye(n).reshape(-1)).reshape(n, n)
    lam = np.linalg.eigvalsh((P + P.T) / 2)
    xr0 = rng.normal(scale=0.2, size=n)
    direction = rng.normal(size=n)
    direction /= np.linalg.norm(direction)
    e0 = 0.4 * phi_e.phi0 * np.sqrt(lam[0] / lam[-1]) * direction
    return Scenario(
        name="random",
        A=A,
        B=B,
        A_r=A_r,
        B_r=B @ K_r,
        Q=np.eye(n),
        r=r,
        constraints=constraints,
        k_bar_x=rng.uniform(2.0, 10.0),
        k_bar_r=2.0,
        r_bar=amp * np.sqrt(m) + 0.1,
        T=T,
        dt=dt,
        gamma_x=np.diag(rng.uniform(0.5, 5.0, size=m)),
        x0=xr0 + e0,
        xr0=xr0,
    )
