"""Damped harmonic chain laboratory.

Builds the chain with friction on a single particle, splits phase space into
the energy-conserving and the decaying subspace, simulates the flow, and
evaluates the gcd formula for the conserved dimension with its averages.
"""

from .chain_model import (
    ChainParams,
    PhaseState,
    build_drift,
    build_stiffness,
    energy,
    power_dissipated,
    random_state,
)
from .dynamics import (
    DecayFit,
    ExactPropagator,
    Trajectory,
    exact_propagate,
    fit_decay,
    integrate,
    sample_exact,
    theoretical_decay_rate,
    verify_dissipation_identity,
)
from .kernels import BACKEND
from .number_theory import D, S, cumulative_average, growth_scan
from .spectral import (
    SpectralData,
    SubspaceSplit,
    closed_form_spectrum,
    dim_L0_spectral,
    krylov_dim,
    numeric_spectrum,
    operator_identity_check,
    project,
    split_subspaces,
    zero_component_count,
)

__version__ = "0.1.0"
