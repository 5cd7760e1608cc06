"""Compiled closed-loop kernels.

Matrices are dense float64 arrays; the gain estimate travels flattened in
row-major order inside the packed state ``[x, x_r, vec(K_hat)]``. Envelope,
reference and disturbance signals are pre-sampled on a half-step grid so the
RK4 stages at ``t``, ``t + dt/2`` and ``t + dt`` index them directly.
"""
import numpy as np
from numba import njit

OK = 0
BREACH = 1
NONFINITE = 2


@njit(cache=True)
def saturate_into(v, phi_u, u):
    """Radially scale ``v`` into the ball of radius ``phi_u``; writes ``u``.
    Returns True when scaling was applied."""
    nv = 0.0
    for i in range(v.shape[0]):
        nv += v[i] * v[i]
    nv = np.sqrt(nv)
    if nv <= phi_u:
        for i in range(v.shape[0]):
            u[i] = v[i]
        return False
    scale = phi_u / nv
    for i in range(v.shape[0]):
        u[i] = scale * v[i]
    return True


@njit(cache=True)
def project_into(theta, y, k_bar, eps_p, out):
    """Smooth projection of the update ``y`` for the ball ``||theta||_F <= k_bar``.

    Convex function f(theta) = (||theta||^2 - k_eff^2) / (eps_p k_eff^2) with
    k_eff = k_bar / sqrt(1 + eps_p), so f = 1 exactly on ``||theta|| = k_bar``.
    """
    th2 = 0.0
    ip = 0.0
    for i in range(theta.shape[0]):
        th2 += theta[i] * theta[i]
        ip += theta[i] * y[i]
    keff2 = k_bar * k_bar / (1.0 + eps_p)
    f = (th2 - keff2) / (eps_p * keff2)
    if f > 0.0 and ip > 0.0:
        c = f * ip / th2
        for i in range(theta.shape[0]):
            out[i] = y[i] - c * theta[i]
    else:
        for i in range(theta.shape[0]):
            out[i] = y[i]


@njit(cache=True)
def raw_rate_into(e, x, P, B, G, denom, out):
    """``-Gamma B^T P e x^T / denom`` written row-major into ``out``."""
    n = e.shape[0]
    m = B.shape[1]
    pe = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += P[i, j] * e[j]
        pe[i] = acc
    btpe = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += B[j, i] * pe[j]
        btpe[i] = acc
    for i in range(m):
        g = 0.0
        for j in range(m):
            g += G[i, j] * btpe[j]
        for j in range(n):
            out[i * n + j] = -(g * x[j]) / denom


@njit(cache=True)
def aux_input_into(K, x, Kr, r, ratio, Bd, e, v):
    """``v = K x + K_r r - ratio * B^dagger e`` with ``ratio = phi_e_dot / phi_e``."""
    m = Kr.shape[0]
    n = x.shape[0]
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += K[i * n + j] * x[j]
        for j in range(m):
            acc += Kr[i, j] * r[j]
        corr = 0.0
        for j in range(n):
            corr += Bd[i, j] * e[j]
        v[i] = acc - ratio * corr


@njit(cache=True)
def quad(P, e):
    n = e.shape[0]
    acc = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            row += P[i, j] * e[j]
        acc += e[i] * row
    return acc


@njit(cache=True)
def stage(s, pe, ped, pu, r, d, eta, A, B, Ar, Br, Bd, Kr, P, G,
          sqrt_lmin, k_bar, eps_p, floor_rel, clamp_denom, ds, aux):
    """One closed-loop right-hand side evaluation.

    Writes the state derivative into ``ds`` and
    ``aux = [u (m), v (m), h_m, saturated]``. Returns ``BREACH`` when the
    measured barrier denominator is at or below the guard and
    ``clamp_denom`` is False.
    """
    n = A.shape[0]
    m = B.shape[1]
    x = s[:n]
    xr = s[n:2 * n]
    K = s[2 * n:]
    xm = np.empty(n)
    em = np.empty(n)
    for i in range(n):
        xm[i] = x[i] + eta[i]
        em[i] = xm[i] - xr[i]
    v = np.empty(m)
    u = np.empty(m)
    aux_input_into(K, xm, Kr, r, ped / pe, Bd, em, v)
    sat = saturate_into(v, pu, u)
    php2 = pe * sqrt_lmin
    php2 = php2 * php2
    h = php2 - quad(P, em)
    for i in range(m):
        aux[i] = u[i]
        aux[m + i] = v[i]
    aux[2 * m] = h
    aux[2 * m + 1] = 1.0 if sat else 0.0
    guard = floor_rel * php2
    denom = h
    if h <= guard:
        if not clamp_denom:
            return BREACH
        denom = guard
    y = np.empty(m * n)
    raw_rate_into(em, xm, P, B, G, denom, y)
    project_into(K, y, k_bar, eps_p, ds[2 * n:])
    for i in range(n):
        acc = d[i]
        for j in range(n):
            acc += A[i, j] * x[j]
        for j in range(m):
            acc += B[i, j] * u[j]
        ds[i] = acc
        acc = 0.0
        for j in range(n):
            acc += Ar[i, j] * xr[j]
        for j in range(m):
            acc += Br[i, j] * r[j]
        ds[n + i] = acc
    return OK


@njit(cache=True)
def integrate(s0, N, dt, PE, PED, PU, R, D, NOISE, A, B, Ar, Br, Bd, Kr, P, G,
              sqrt_lmin, k_bar, eps_p, floor_rel, clamp_denom,
              S, U, V, H, SAT):
    """Classical RK4 over ``N`` steps; noise row ``k`` is held over step ``k``.

    Logs samples ``0..N`` into ``S`` (packed state), ``U``, ``V``, ``H``
    (measured margin) and ``SAT``. Returns ``(n_logged, status, t_fail)``.
    """
    n = A.shape[0]
    dim = s0.shape[0]
    s = s0.copy()
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    aux = np.empty(U.shape[1] * 2 + 2)
    m = U.shape[1]
    half = 0.5 * dt
    for k in range(N + 1):
        j = 2 * k
        eta = NOISE[k]
        st = stage(s, PE[j], PED[j], PU[j], R[j], D[j], eta, A, B, Ar, Br, Bd, Kr, P, G,
                   sqrt_lmin, k_bar, eps_p, floor_rel, clamp_denom, k1, aux)
        for i in range(dim):
            S[k, i] = s[i]
        for i in range(m):
            U[k, i] = aux[i]
            V[k, i] = aux[m + i]
        H[k] = aux[2 * m]
        SAT[k] = aux[2 * m + 1] > 0.5
        if st != OK:
            return k + 1, st, k * dt
        if k == N:
            break
        for i in range(dim):
            tmp[i] = s[i] + half * k1[i]
        st = stage(tmp, PE[j + 1], PED[j + 1], PU[j + 1], R[j + 1], D[j + 1], eta, A, B, Ar, Br, Bd, Kr,
                   P, G, sqrt_lmin, k_bar, eps_p, floor_rel, clamp_denom, k2, aux)
        if st != OK:
            return k + 1, st, k * dt + half
        for i in range(dim):
            tmp[i] = s[i] + half * k2[i]
        st = stage(tmp, PE[j + 1], PED[j + 1], PU[j + 1], R[j + 1], D[j + 1], eta, A, B, Ar, Br, Bd, Kr,
                   P, G, sqrt_lmin, k_bar, eps_p, floor_rel, clamp_denom, k3, aux)
        if st != OK:
            return k + 1, st, k * dt + half
        for i in range(dim):
            tmp[i] = s[i] + dt * k3[i]
        st = stage(tmp, PE[j + 2], PED[j + 2], PU[j + 2], R[j + 2], D[j + 2], eta, A, B, Ar, Br, Bd, Kr,
                   P, G, sqrt_lmin, k_bar, eps_p, floor_rel, clamp_denom, k4, aux)
        if st != OK:
            return k + 1, st, (k + 1) * dt
        finite = True
        for i in range(dim):
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(s[i]):
                finite = False
        if not finite:
            return k + 1, NONFINITE, (k + 1) * dt
        # discrete guard: RK4 steps may overshoot the projection ball by O(dt^2)
        kn = 0.0
        for i in range(2 * n, dim):
            kn += s[i] * s[i]
        kn = np.sqrt(kn)
        if kn > k_bar:
            for i in range(2 * n, dim):
                s[i] *= k_bar / kn
    return N + 1, OK, N * dt
