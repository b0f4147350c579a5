"""Gaussian states, symplectic decompositions and probability kernels."""

from .kernels import hafnian, torontonian
from .probabilities import (
    click_distribution,
    click_probability,
    complex_moments,
    fock_amplitude,
    husimi_matrix,
    index_to_patterns,
    is_pure,
    marginal_click_probability,
    patterns_to_index,
    pure_state_matrix,
    single_mode_photon_distribution,
)
from .state import (
    GaussianState,
    SqueezerBank,
    apply_transfer,
    reduced_state,
    single_mode_squeezed_cov,
    squeezed_vacuum,
)
from .symplectic import WilliamsonFactor, omega, real_representation, symplectic_eigenvalues, williamson

__all__ = [
    "GaussianState",
    "SqueezerBank",
    "WilliamsonFactor",
    "apply_transfer",
    "click_distribution",
    "click_probability",
    "complex_moments",
    "fock_amplitude",
    "hafnian",
    "husimi_matrix",
    "index_to_patterns",
    "is_pure",
    "marginal_click_probability",
    "omega",
    "patterns_to_index",
    "pure_state_matrix",
    "real_representation",
    "reduced_state",
    "single_mode_photon_distribution",
    "single_mode_squeezed_cov",
    "squeezed_vacuum",
    "symplectic_eigenvalues",
    "torontonian",
    "williamson",
]
