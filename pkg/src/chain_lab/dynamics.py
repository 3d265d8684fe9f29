"""Time evolution under psi' = A psi, energy bookkeeping and decay fits."""

from dataclasses import dataclass
import csv
import math

import numpy as np
import scipy.linalg

from . import kernels
from .chain_model import (
    PhaseState,
    as_vector,
    build_drift,
    build_stiffness,
    energies,
)
from .exceptions import (
    DegenerateFitError,
    IntegrationError,
    StepSizeError,
    VerificationError,
)
from .spectral import TAU_EIG, closed_form_spectrum, split_subspaces

STABILITY_LIMIT = 0.1  # max dt * sqrt(lambda_max) accepted by integrate()
EIG_COND_LIMIT = 1e8
TAU_DYN = 1e-9
UNDERFLOW_FLOOR = 1e3 * np.finfo(np.float64).tiny
MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    Q: np.ndarray  # (len(times), N) positions
    P: np.ndarray  # (len(times), N) momenta
    energies: np.ndarray
    powers: np.ndarray

    def __len__(self):
        return self.times.size

    @property
    def N(self):
        return self.Q.shape[1]

    @property
    def states(self):
        return [PhaseState(q, p) for q, p in zip(self.Q, self.P)]

    @property
    def final(self):
        return PhaseState(self.Q[-1], self.P[-1])


@dataclass(frozen=True)
class DecayFit:
    c2_hat: float
    c1_hat: float
    r_squared: float
    window: tuple


def _make_trajectory(params, times, Q, P, V=None):
    if V is None:
        V = build_stiffness(params)
    H = energies(Q, P, V)
    pn = P[:, params.site]
    return Trajectory(times, Q, P, H, -params.alpha * pn * pn)


class ExactPropagator:
    """psi -> e^{tA} psi for a fixed generator A.

    Diagonalises A once when its eigenvector matrix is well conditioned;
    otherwise every call goes through scaling-and-squaring ``expm``.
    """

    def __init__(self, A, cond_limit=EIG_COND_LIMIT):
        self.A = np.asarray(A, dtype=np.float64)
        self.method = "expm"
        try:
            mu, W = np.linalg.eig(self.A)
            cond = np.linalg.cond(W)
        except np.linalg.LinAlgError:
            return
        if np.isfinite(cond) and cond < cond_limit:
            self.method = "eig"
            self.mu = mu
            self.W = W
            self.W_inv = np.linalg.inv(W)
            self.cond = float(cond)

    def sample(self, psi0, times):
        """Rows are e^{t A} psi0 for each t in ``times``."""
        psi0 = as_vector(psi0)
        times = np.atleast_1d(np.asarray(times, dtype=np.float64))
        if np.any(times < 0):
            raise ValueError("propagation times must be >= 0")
        if self.method == "eig":
            coeffs = self.W_inv @ psi0
            out = (np.exp(np.outer(times, self.mu)) * coeffs) @ self.W.T
            out = out.real
        else:
            out = np.array([scipy.linalg.expm(t * self.A) @ psi0 for t in times])
        if not np.all(np.isfinite(out)):
            raise IntegrationError("exact propagation produced non-finite values")
        out[times == 0] = psi0
        return out

    def __call__(self, psi0, t):
        return PhaseState.from_vector(self.sample(psi0, [t])[0])


def exact_propagate(A, psi0, t):
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    return ExactPropagator(A)(psi0, t)


def sample_exact(params, psi0, times):
    """Trajectory sampled from the exact propagator at the given times."""
    V = build_stiffness(params)
    times = np.asarray(times, dtype=np.float64)
    X = ExactPropagator(build_drift(params, V)).sample(psi0, times)
    N = params.N
    return _make_trajectory(params, times, X[:, :N].copy(), X[:, N:].copy(), V)


def max_stable_dt(params):
    lam_max = float(closed_form_spectrum(params).eigenvalues[-1])
    return STABILITY_LIMIT / math.sqrt(lam_max)


def integrate(params, psi0, t_end, dt=None):
    """Classical RK4 with a fixed step, sampling every step.

    The step is shrunk so that an integer number of steps lands on
    ``t_end``; it must satisfy dt * sqrt(lambda_max) <= 0.1.
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end!r}")
    dt_max = max_stable_dt(params)
    if dt is None:
        dt = dt_max
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if dt > dt_max * (1 + 1e-12):
        raise StepSizeError(dt, dt_max)
    nsteps = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / nsteps
    psi0 = as_vector(psi0)
    N = params.N
    if psi0.size != 2 * N:
        raise ValueError(f"initial state has dimension {psi0.size}, expected {2 * N}")
    Q, P = kernels.rk4(
        np.ascontiguousarray(psi0[:N]),
        np.ascontiguousarray(psi0[N:]),
        float(params.omega0),
        float(params.omega1),
        float(params.alpha),
        params.site,
        h,
        nsteps,
    )
    if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(P))):
        raise IntegrationError("integration produced non-finite state")
    times = h * np.arange(nsteps + 1)
    times[-1] = t_end
    return _make_trajectory(params, times, Q, P)


def verify_dissipation_identity(traj, params):
    """Max mismatch between central-difference dH/dt and -alpha p_n^2.

    Normalised by max(max |power|, H(0) / t_end); interior samples only.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 samples")
    t, H = traj.times, traj.energies
    dHdt = (H[2:] - H[:-2]) / (t[2:] - t[:-2])
    resid = np.abs(dHdt - traj.powers[1:-1])
    scale = max(float(np.abs(traj.powers).max()), H[0] / (t[-1] - t[0]))
    if scale == 0:
        return 0.0
    return float(resid.max() / scale)


def restricted_generator(params, split=None):
    """Matrix of A restricted to the decaying subspace, in its orthonormal basis."""
    if split is None:
        split = split_subspaces(params)
    B = split.decaying_matrix
    A = build_drift(params, build_stiffness(params))
    return B.T @ A @ B


def theoretical_decay_rate(params, split=None):
    """Energy decay rate -2 * (spectral abscissa of A on L-)."""
    Ar = restricted_generator(params, split)
    if Ar.size == 0:
        raise ValueError("decaying subspace is empty")
    abscissa = float(np.linalg.eigvals(Ar).real.max())
    if abscissa >= -TAU_EIG * max(1.0, float(np.abs(Ar).max())):
        raise VerificationError(f"A restricted to L- is not Hurwitz (abscissa {abscissa:.3e})")
    return -2.0 * abscissa


def fit_decay(traj, skip_fraction=0.5):
    """Least-squares line through log H(t) over the trailing window."""
    if not 0 <= skip_fraction < 1:
        raise ValueError(f"skip_fraction must be in [0, 1), got {skip_fraction!r}")
    t, H = traj.times, traj.energies
    t_start = t[0] + skip_fraction * (t[-1] - t[0])
    mask = t >= t_start
    t_w, H_w = t[mask], H[mask]
    below = np.nonzero(H_w <= UNDERFLOW_FLOOR)[0]
    if below.size:
        t_w, H_w = t_w[: below[0]], H_w[: below[0]]
    if t_w.size < MIN_FIT_SAMPLES:
        raise DegenerateFitError(f"only {t_w.size} usable samples in the fit window")
    y = np.log(H_w)
    slope, intercept = np.polyfit(t_w, y, 1)
    ss_res = float(np.sum((y - (slope * t_w + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        c2_hat=float(-slope),
        c1_hat=float(math.exp(intercept)),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        window=(float(t_w[0]), float(t_w[-1])),
    )


def _fmt(x):
    return format(float(x), ".17g")


def write_trajectory_csv(traj, fh, coords=True):
    """CSV with columns t, H, power[, q_1..q_N, p_1..p_N]."""
    writer = csv.writer(fh, lineterminator="\n")
    header = ["t", "H", "power"]
    if coords:
        header += [f"q_{i}" for i in range(1, traj.N + 1)]
        header += [f"p_{i}" for i in range(1, traj.N + 1)]
    writer.writerow(header)
    for j in range(len(traj)):
        row = [traj.times[j], traj.energies[j], traj.powers[j]]
        if coords:
            row += list(traj.Q[j]) + list(traj.P[j])
        writer.writerow([_fmt(x) for x in row])


def read_trajectory_csv(fh):
    """Inverse of :func:`write_trajectory_csv` (coordinates required)."""
    rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=np.float64).reshape(-1, len(rows[0]))
    N = (len(header) - 3) // 2
    if N < 1:
        raise ValueError("trajectory CSV has no coordinate columns")
    return Trajectory(body[:, 0], body[:, 3:3 + N], body[:, 3 + N:], body[:, 1], body[:, 2])
