"""The damped harmonic chain: parameters, phase states, V, A, energy."""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import DimensionError, InvalidParameterError


@dataclass(frozen=True)
class ChainParams:
    """A chain of ``N`` unit masses with friction on particle ``n`` (1-based).

    ``alpha = 0`` (no friction) and ``omega1 = 0`` (uncoupled oscillators)
    are only accepted with ``allow_degenerate=True``.
    """

    N: int
    n: int = 1
    alpha: float = 1.0
    omega0: float = 1.0
    omega1: float = 1.0
    allow_degenerate: bool = False

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError(f"N must be an integer >= 1, got {self.N!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or not 1 <= self.n <= self.N:
            raise InvalidParameterError(f"n must satisfy 1 <= n <= N={self.N}, got {self.n!r}")
        for name in ("alpha", "omega0", "omega1"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.alpha < 0 or (self.alpha == 0 and not self.allow_degenerate):
            raise InvalidParameterError(f"alpha must be > 0, got {self.alpha!r}")
        if self.omega0 <= 0:
            raise InvalidParameterError(f"omega0 must be > 0, got {self.omega0!r}")
        if self.omega1 < 0 or (self.omega1 == 0 and not self.allow_degenerate):
            raise InvalidParameterError(f"omega1 must be > 0, got {self.omega1!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "n", int(self.n))

    @property
    def site(self):
        """0-based index of the dissipating particle."""
        return self.n - 1


@dataclass(frozen=True)
class PhaseState:
    """A point ``(q, p)`` of the 2N-dimensional phase space."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64).reshape(-1)
        p = np.array(self.p, dtype=np.float64).reshape(-1)
        if q.shape != p.shape:
            raise DimensionError(f"q has length {q.size} but p has length {p.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase state has non-finite entries")
        q.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def N(self):
        return self.q.size

    @property
    def vector(self):
        """The stacked vector ``[q, p]`` of length 2N (a fresh copy)."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, psi):
        psi = np.asarray(psi, dtype=np.float64).reshape(-1)
        if psi.size % 2:
            raise DimensionError(f"phase vector must have even length, got {psi.size}")
        half = psi.size // 2
        return cls(psi[:half], psi[half:])

    @classmethod
    def zeros(cls, N):
        return cls(np.zeros(N), np.zeros(N))

    def __add__(self, other):
        return PhaseState(self.q + other.q, self.p + other.p)

    def __sub__(self, other):
        return PhaseState(self.q - other.q, self.p - other.p)

    def __mul__(self, scalar):
        return PhaseState(scalar * self.q, scalar * self.p)

    __rmul__ = __mul__


def as_vector(state):
    """Accept a PhaseState or a flat array and return the flat 2N array."""
    if isinstance(state, PhaseState):
        return state.vector
    return np.asarray(state, dtype=np.float64).reshape(-1)


def random_state(N, seed):
    """Independent standard Gaussians in every coordinate.

    Uses numpy's counter-based Philox bit generator so a given seed yields
    the same draw on every platform.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    return PhaseState(rng.standard_normal(N), rng.standard_normal(N))


def build_stiffness(params):
    """Tridiagonal stiffness matrix V of the pinned, nearest-neighbour chain."""
    N = params.N
    w0, w1 = params.omega0, params.omega1
    V = np.zeros((N, N))
    idx = np.arange(N)
    V[idx, idx] = w0 + 2.0 * w1
    V[0, 0] -= w1
    V[N - 1, N - 1] -= w1
    if N > 1:
        V[idx[:-1], idx[1:]] = -w1
        V[idx[1:], idx[:-1]] = -w1
    return V


def build_drift(params, V):
    """Generator A = [[0, E], [-V, -D]] of the linear flow, D = alpha e_n e_n^T."""
    V = np.asarray(V, dtype=np.float64)
    N = params.N
    if V.shape != (N, N):
        raise DimensionError(f"V has shape {V.shape}, expected ({N}, {N})")
    A = np.zeros((2 * N, 2 * N))
    A[:N, N:] = np.eye(N)
    A[N:, :N] = -V
    A[N + params.site, N + params.site] = -params.alpha
    return A


def energy(state, V):
    """H = T + U = 1/2 |p|^2 + 1/2 q.Vq."""
    V = np.asarray(V, dtype=np.float64)
    psi = as_vector(state)
    N = V.shape[0]
    if psi.size != 2 * N:
        raise DimensionError(f"state has dimension {psi.size}, V expects {2 * N}")
    q, p = psi[:N], psi[N:]
    return 0.5 * float(p @ p) + 0.5 * float(q @ (V @ q))


def energies(Q, P, V):
    """Row-wise energies for stacked position/momentum samples."""
    Q = np.atleast_2d(Q)
    P = np.atleast_2d(P)
    return 0.5 * np.einsum("ij,ij->i", P, P) + 0.5 * np.einsum("ij,ij->i", Q, Q @ V)


def power_dissipated(state, params):
    """Instantaneous dH/dt = -alpha p_n^2."""
    psi = as_vector(state)
    if psi.size != 2 * params.N:
        raise DimensionError(f"state has dimension {psi.size}, params expect {2 * params.N}")
    pn = psi[params.N + params.site]
    return -params.alpha * pn * pn
