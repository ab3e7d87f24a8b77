"""Qubit probe of a Su-Schrieffer-Heeger ring: bound states, decoherence and recoherence."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    BandStructure,
    ChainSpec,
    Disorder,
    HamiltonianMatrix,
    band_dispersion,
    build_defect_hamiltonian,
    build_dissipative_hamiltonian,
    build_hamiltonian,
    build_ssh_hamiltonian,
)
from .dynamics import (  # noqa: E402
    CoherenceTrace,
    build_initial_state,
    coherence_dephasing,
    coherence_dissipative,
    eigendecompose,
    parity_index,
    probe_density_matrix,
)
from .boundstates import (  # noqa: E402
    BoundState,
    classify_numeric_bound_states,
    dephasing_bound_states,
    dissipative_bound_states,
    existence_thresholds,
    in_gap_state,
)
from .nonmarkov import compute_n_t, count_peaks, echo_spectrum  # noqa: E402
