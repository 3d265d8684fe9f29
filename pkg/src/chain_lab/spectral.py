"""Spectrum of V and the split of phase space into conserved and decaying parts.

Eigenvectors are indexed by the mode number ``k = 0..N-1`` of the cosine
basis, which is also ascending eigenvalue order.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import kernels
from .chain_model import PhaseState, as_vector, build_drift, build_stiffness
from .exceptions import DimensionError, EigensolverError, SpectrumGapError

TAU_EIG = 1e-10
TAU_ORTH = 1e-10
TAU_GAP = 1e-12
TAU_ENERGY = 1e-10
RANK_TOL = 1e-9


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column k is the unit eigenvector of mode k

    @property
    def N(self):
        return self.eigenvalues.size

    def residual(self, V):
        """max_k |V y_k - lambda_k y_k|, relative to the largest eigenvalue."""
        V = np.asarray(V, dtype=np.float64)
        R = V @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        scale = max(abs(self.eigenvalues).max(), 1.0)
        return float(np.abs(R).max() / scale)

    def orthogonality_defect(self):
        Y = self.eigenvectors
        return float(np.abs(Y.T @ Y - np.eye(self.N)).max())


@dataclass(frozen=True)
class SubspaceSplit:
    """Orthonormal (in the Euclidean product) bases of L0 and L-.

    Bases are stored as columns of 2N x d matrices; ``conserved_basis`` and
    ``decaying_basis`` give the same vectors as PhaseState lists.
    """

    N: int
    conserved_modes: tuple
    decaying_modes: tuple
    conserved_matrix: np.ndarray
    decaying_matrix: np.ndarray

    @property
    def dim_conserved(self):
        return self.conserved_matrix.shape[1]

    @property
    def dim_decaying(self):
        return self.decaying_matrix.shape[1]

    @property
    def conserved_basis(self):
        return [PhaseState.from_vector(c) for c in self.conserved_matrix.T]

    @property
    def decaying_basis(self):
        return [PhaseState.from_vector(c) for c in self.decaying_matrix.T]


def closed_form_spectrum(params):
    """Eigenpairs of the chain's V from the cosine formula, columns normalised."""
    N = params.N
    k = np.arange(N)
    lam = params.omega0 + 2.0 * params.omega1 * (1.0 - np.cos(np.pi * k / N))
    j = np.arange(1, N + 1)
    Y = np.cos(np.pi * np.outer(j - 0.5, k) / N)
    Y /= np.linalg.norm(Y, axis=0)
    return SpectralData(lam, Y)


def numeric_spectrum(V):
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DimensionError(f"V must be square, got shape {V.shape}")
    try:
        lam, Y = np.linalg.eigh(V)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    order = np.argsort(lam, kind="stable")
    return SpectralData(lam[order], Y[:, order])


def zero_modes(N, n):
    """Mode numbers k whose eigenvector vanishes at particle n.

    cos(pi k (n - 1/2) / N) = 0 exactly when k(2n - 1) is an odd multiple
    of N, i.e. k(2n - 1) = N (mod 2N).
    """
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    step = 2 * n - 1
    return [k for k in range(N) if (k * step) % (2 * N) == N]


def zero_component_count(N, n):
    return len(zero_modes(N, n))


def dim_L0_spectral(params):
    return 2 * zero_component_count(params.N, params.n)


def krylov_dim(V, n, rank_tol=RANK_TOL):
    """Dimension of span{V^j e_n}, grown by Arnoldi with Gram-Schmidt (reorthogonalised on cancellation).

    A new direction is kept while its residual after projection exceeds
    ``rank_tol`` times the largest norm seen among accepted directions.
    """
    V = np.ascontiguousarray(V, dtype=np.float64)
    N = V.shape[0]
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    return int(kernels.krylov_rank(V, n - 1, float(rank_tol)))


def dim_L0_krylov(params, rank_tol=RANK_TOL):
    return 2 * params.N - 2 * krylov_dim(build_stiffness(params), params.n, rank_tol)


def check_simple(spec):
    lam = spec.eigenvalues
    if lam.size < 2:
        return
    gap = float(np.diff(lam).min())
    if gap < TAU_GAP * float(abs(lam).max()):
        raise SpectrumGapError(f"smallest eigenvalue gap {gap:.3e} cannot certify a simple spectrum")


def split_subspaces(params, spec=None):
    """Bases of L0 = span{(v_k,0),(0,v_k): (v_k)_n = 0} and of L- (the rest)."""
    if spec is None:
        spec = closed_form_spectrum(params)
    N = params.N
    if spec.N != N:
        raise DimensionError(f"spectrum has size {spec.N}, params have N={N}")
    check_simple(spec)
    zero = set(zero_modes(N, params.n))
    conserved = tuple(sorted(zero))
    decaying = tuple(k for k in range(N) if k not in zero)

    def pairs(modes):
        B = np.zeros((2 * N, 2 * len(modes)))
        for i, k in enumerate(modes):
            B[:N, 2 * i] = spec.eigenvectors[:, k]
            B[N:, 2 * i + 1] = spec.eigenvectors[:, k]
        return B

    return SubspaceSplit(N, conserved, decaying, pairs(conserved), pairs(decaying))


def _energy_projection(B, Qpsi, Qmetric):
    if B.shape[1] == 0:
        return np.zeros(B.shape[0])
    gram = B.T @ (Qmetric @ B)
    coeffs = np.linalg.solve(gram, B.T @ Qpsi)
    return B @ coeffs


def project(state, split, V):
    """Split a state into its L0 and L- parts, orthogonally in the energy product.

    The energy product is (psi, psi')_2 = (Vq, q') + (p, p'), so the two
    parts carry additive energies.
    """
    psi = as_vector(state)
    V = np.asarray(V, dtype=np.float64)
    N = split.N
    if psi.size != 2 * N or V.shape != (N, N):
        raise DimensionError("state, split and V dimensions disagree")
    metric = np.zeros((2 * N, 2 * N))
    metric[:N, :N] = V
    metric[N:, N:] = np.eye(N)
    Qpsi = metric @ psi
    psi0 = _energy_projection(split.conserved_matrix, Qpsi, metric)
    psi2 = _energy_projection(split.decaying_matrix, Qpsi, metric)
    return PhaseState.from_vector(psi0), PhaseState.from_vector(psi2)


def operator_matrices(params, V=None):
    """Explicit I, Q and Gamma with A = IQ - alpha Gamma."""
    N = params.N
    if V is None:
        V = build_stiffness(params)
    E = np.eye(N)
    I = np.zeros((2 * N, 2 * N))
    I[:N, N:] = E
    I[N:, :N] = -E
    Q = np.zeros((2 * N, 2 * N))
    Q[:N, :N] = V
    Q[N:, N:] = E
    g = np.zeros(2 * N)
    g[N + params.site] = 1.0
    Gamma = np.outer(g, g)
    return I, Q, Gamma


def operator_identity_check(params, A=None, tol=TAU_EIG):
    V = build_stiffness(params)
    if A is None:
        A = build_drift(params, V)
    I, Q, Gamma = operator_matrices(params, V)
    R = A - (I @ Q - params.alpha * Gamma)
    scale = max(float(np.abs(A).max()), 1.0)
    return bool(np.abs(R).max() <= tol * scale)


def subspace_angle(u, v):
    """Angle between the lines spanned by ``u`` and ``v``."""
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    c = abs(float(u @ v))
    s = float(np.linalg.norm(v - (u @ v) * u))
    return math.atan2(s, c)
