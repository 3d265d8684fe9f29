"""Hot inner loops, each in a numba-compiled and a pure-numpy flavour.

The public names at the bottom of the module are bound to one flavour at
import time according to :data:`chain_lab._jit.USE_NUMBA`.  Both flavours are
always reachable through :data:`IMPLEMENTATIONS` so tests and the benchmark
can compare them side by side.
"""

import math

import numpy as np

from ._jit import USE_NUMBA, optional_njit

# --------------------------------------------------------------------------
# damped chain right-hand side and RK4
# --------------------------------------------------------------------------


@optional_njit
def _chain_rhs_loop(q, p, omega0, omega1, alpha, site, dq, dp):
    N = q.shape[0]
    for i in range(N):
        dq[i] = p[i]
    if N == 1:
        dp[0] = -omega0 * q[0]
    else:
        dp[0] = -((omega0 + omega1) * q[0] - omega1 * q[1])
        for i in range(1, N - 1):
            dp[i] = -((omega0 + 2.0 * omega1) * q[i] - omega1 * (q[i - 1] + q[i + 1]))
        dp[N - 1] = -((omega0 + omega1) * q[N - 1] - omega1 * q[N - 2])
    dp[site] -= alpha * p[site]


@optional_njit
def _rk4_loop(q0, p0, omega0, omega1, alpha, site, dt, nsteps):
    N = q0.shape[0]
    Q = np.empty((nsteps + 1, N))
    P = np.empty((nsteps + 1, N))
    Q[0] = q0
    P[0] = p0
    q = q0.copy()
    p = p0.copy()
    k1q = np.empty(N)
    k1p = np.empty(N)
    k2q = np.empty(N)
    k2p = np.empty(N)
    k3q = np.empty(N)
    k3p = np.empty(N)
    k4q = np.empty(N)
    k4p = np.empty(N)
    tq = np.empty(N)
    tp = np.empty(N)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for step in range(nsteps):
        _chain_rhs_loop(q, p, omega0, omega1, alpha, site, k1q, k1p)
        for i in range(N):
            tq[i] = q[i] + h2 * k1q[i]
            tp[i] = p[i] + h2 * k1p[i]
        _chain_rhs_loop(tq, tp, omega0, omega1, alpha, site, k2q, k2p)
        for i in range(N):
            tq[i] = q[i] + h2 * k2q[i]
            tp[i] = p[i] + h2 * k2p[i]
        _chain_rhs_loop(tq, tp, omega0, omega1, alpha, site, k3q, k3p)
        for i in range(N):
            tq[i] = q[i] + dt * k3q[i]
            tp[i] = p[i] + dt * k3p[i]
        _chain_rhs_loop(tq, tp, omega0, omega1, alpha, site, k4q, k4p)
        for i in range(N):
            q[i] += h6 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i])
            p[i] += h6 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i])
        Q[step + 1] = q
        P[step + 1] = p
    return Q, P


def _chain_rhs_numpy(q, p, omega0, omega1, alpha, site):
    dp = -omega0 * q
    if q.shape[0] > 1:
        dp[:-1] += omega1 * (q[1:] - q[:-1])
        dp[1:] += omega1 * (q[:-1] - q[1:])
    dp[site] -= alpha * p[site]
    return p.copy(), dp


def _rk4_numpy(q0, p0, omega0, omega1, alpha, site, dt, nsteps):
    N = q0.shape[0]
    Q = np.empty((nsteps + 1, N))
    P = np.empty((nsteps + 1, N))
    Q[0] = q0
    P[0] = p0
    q = np.array(q0, dtype=np.float64)
    p = np.array(p0, dtype=np.float64)
    args = (omega0, omega1, alpha, site)
    for step in range(nsteps):
        k1q, k1p = _chain_rhs_numpy(q, p, *args)
        k2q, k2p = _chain_rhs_numpy(q + 0.5 * dt * k1q, p + 0.5 * dt * k1p, *args)
        k3q, k3p = _chain_rhs_numpy(q + 0.5 * dt * k2q, p + 0.5 * dt * k2p, *args)
        k4q, k4p = _chain_rhs_numpy(q + dt * k3q, p + dt * k3p, *args)
        q = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        Q[step + 1] = q
        P[step + 1] = p
    return Q, P


# --------------------------------------------------------------------------
# Krylov rank of span{V^j e_site}
# --------------------------------------------------------------------------

REORTH = 0.7  # reorthogonalise when one pass keeps less than this fraction


@optional_njit
def _krylov_rank_loop(V, site, rank_tol):
    N = V.shape[0]
    basis = np.zeros((N, N))
    basis[0, site] = 1.0
    m = 1
    ref = 1.0
    while m < N:
        w = np.dot(V, basis[m - 1])
        cand = np.sqrt(np.dot(w, w))
        # classical Gram-Schmidt; second pass only after heavy cancellation
        B = basis[:m]
        w = w - np.dot(np.dot(B, w), B)
        r = np.sqrt(np.dot(w, w))
        if r < REORTH * cand:
            w = w - np.dot(np.dot(B, w), B)
            r = np.sqrt(np.dot(w, w))
        if r <= rank_tol * ref:
            break
        basis[m] = w / r
        if cand > ref:
            ref = cand
        m += 1
    return m


def _krylov_rank_numpy(V, site, rank_tol):
    N = V.shape[0]
    basis = np.zeros((N, N))
    basis[0, site] = 1.0
    m = 1
    ref = 1.0
    dot = np.dot
    # ~N^2 steps per N, so per-call overhead matters: np.dot and math.sqrt
    while m < N:
        w = dot(V, basis[m - 1])
        cand = math.sqrt(dot(w, w))
        B = basis[:m]
        w = w - dot(dot(B, w), B)
        r = math.sqrt(dot(w, w))
        if r < REORTH * cand:
            w = w - dot(dot(B, w), B)
            r = math.sqrt(dot(w, w))
        if r <= rank_tol * ref:
            break
        basis[m] = w / r
        ref = max(ref, cand)
        m += 1
    return m


# --------------------------------------------------------------------------
# row sums  sum_{n=1}^{N} gcd(N, 2n-1)  for N = 1..N_max
# --------------------------------------------------------------------------


@optional_njit
def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


@optional_njit
def _odd_gcd_sums_brute_loop(N_max):
    out = np.zeros(N_max + 1, dtype=np.int64)
    for N in range(1, N_max + 1):
        s = 0
        for n in range(1, N + 1):
            s += _gcd(N, 2 * n - 1)
        out[N] = s
    return out


def _odd_gcd_sums_brute_numpy(N_max):
    out = np.zeros(N_max + 1, dtype=np.int64)
    for N in range(1, N_max + 1):
        out[N] = np.gcd(N, 2 * np.arange(1, N + 1, dtype=np.int64) - 1).sum()
    return out


@optional_njit
def _odd_gcd_sums_divisor_loop(N_max):
    phi = np.arange(N_max + 1, dtype=np.int64)
    for p in range(2, N_max + 1):
        if phi[p] == p:
            for k in range(p, N_max + 1, p):
                phi[k] -= phi[k] // p
    # Pillai sum over odd m: sum_{d | m} d * phi(m / d)
    pillai = np.zeros(N_max + 1, dtype=np.int64)
    for d in range(1, N_max + 1, 2):
        for m in range(d, N_max + 1, 2 * d):
            pillai[m] += d * phi[m // d]
    out = np.zeros(N_max + 1, dtype=np.int64)
    for N in range(1, N_max + 1):
        m = N
        while m % 2 == 0:
            m //= 2
        out[N] = (N // m) * pillai[m]
    return out


def _odd_gcd_sums_divisor_numpy(N_max):
    phi = np.arange(N_max + 1, dtype=np.int64)
    for p in range(2, N_max + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    pillai = np.zeros(N_max + 1, dtype=np.int64)
    for d in range(1, N_max + 1, 2):
        pillai[d::2 * d] += d * phi[1:N_max // d + 1:2]
    N = np.arange(N_max + 1, dtype=np.int64)
    N[0] = 1
    odd = N // (N & -N)
    out = (N // odd) * pillai[odd]
    out[0] = 0
    return out


IMPLEMENTATIONS = {
    "numba": {
        "rk4": _rk4_loop,
        "krylov_rank": _krylov_rank_loop,
        "odd_gcd_sums_brute": _odd_gcd_sums_brute_loop,
        "odd_gcd_sums_divisor": _odd_gcd_sums_divisor_loop,
    },
    "numpy": {
        "rk4": _rk4_numpy,
        "krylov_rank": _krylov_rank_numpy,
        "odd_gcd_sums_brute": _odd_gcd_sums_brute_numpy,
        "odd_gcd_sums_divisor": _odd_gcd_sums_divisor_numpy,
    },
}

BACKEND = "numba" if USE_NUMBA else "numpy"
_active = IMPLEMENTATIONS[BACKEND]

rk4 = _active["rk4"]
krylov_rank = _active["krylov_rank"]
odd_gcd_sums_brute = _active["odd_gcd_sums_brute"]
odd_gcd_sums_divisor = _active["odd_gcd_sums_divisor"]
