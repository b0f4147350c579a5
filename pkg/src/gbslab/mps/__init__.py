"""Matrix-product-state simulation of lossy Gaussian boson sampling."""

from .decomposition import (
    PureDecomposition,
    adapt_transmission,
    check_decomposition,
    decompose,
    decompose_at_sources,
    effective_photon_number,
)
from .spectrum import EntanglementSpectrum, TruncationReport, entanglement_spectrum, truncation_error
from .tensor import (
    MPSState,
    build_mps,
    default_cutoff,
    displacement_columns,
    fock_statevector,
    load_mps,
    mps_sample,
    save_mps,
    vacuum_mps,
)

__all__ = [
    "EntanglementSpectrum",
    "MPSState",
    "PureDecomposition",
    "TruncationReport",
    "adapt_transmission",
    "build_mps",
    "check_decomposition",
    "decompose",
    "decompose_at_sources",
    "default_cutoff",
    "displacement_columns",
    "effective_photon_number",
    "entanglement_spectrum",
    "fock_statevector",
    "load_mps",
    "mps_sample",
    "save_mps",
    "truncation_error",
    "vacuum_mps",
]
