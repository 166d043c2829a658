"""Numerical laboratory for clock Hamiltonians built from gate sequences.

The package turns a short gate sequence into the associated clock
Hamiltonian, measures spectra and gaps, certifies and amplifies the
frustration-free structure, runs the measurement-driven search protocol
on padded Grover circuits, and counts fractional oracle queries of
Trotterized evolution. The ``clocklab`` command exposes the same
machinery as report-producing subcommands.
"""

from .amplification import (
    AmplifiedHamiltonian,
    AmplifiedSplit,
    amplified_oracle_split,
    amplify,
    attach_ancilla_pivot,
    check_frustration_free,
    verify_amplified_gap,
)
from .circuit import (
    Circuit,
    Gate,
    StateVector,
    apply_circuit_prefix,
    build_controlled_grover,
    build_grover,
    build_modified_grover,
    build_trivial,
    circuit_states,
    gate_unitary,
    initial_state,
    load_circuit,
    optimal_grover_iterations,
    parse_circuit,
    sample_basis,
    save_circuit,
    serialize_circuit,
    validate_circuit,
)
from .errors import (
    CapacityError,
    CircuitSyntaxError,
    ClockLabError,
    NonConvergenceError,
    NonInterpolableGateError,
)
from .gadget import (
    GadgetKernel,
    QueryLedger,
    build_kernel,
    calibrate_steps,
    diagonalize_coupling,
    fit_query_exponent,
    fractional_oracle,
    gadget_fidelity,
    gadget_step,
    query_sweep,
    trotter_simulate,
)
from .hamiltonian import (
    ClockHamiltonian,
    HistoryState,
    OracleSplit,
    build_feynman,
    build_history_state,
    build_modified,
    build_standard,
    conjugation_unitary,
    feynman_term,
    input_term,
    oracle_split,
)
from .search import (
    SearchConfig,
    SearchOutcome,
    assumption_profile,
    measure_ground_state_exact,
    measure_via_phase_randomization,
    overlap_probabilities,
    reference_state,
    run_generalized_search,
)
from .spectral import (
    analytic_feynman_spectrum,
    check_inverse_square_consistency,
    eigendecompose,
    fit_gap_scaling,
    gap_along_path,
    gap_to_state,
    spectral_gap,
)

__version__ = "0.1.0"

__all__ = [
    "AmplifiedHamiltonian",
    "AmplifiedSplit",
    "CapacityError",
    "Circuit",
    "CircuitSyntaxError",
    "ClockHamiltonian",
    "ClockLabError",
    "Gate",
    "GadgetKernel",
    "HistoryState",
    "NonConvergenceError",
    "NonInterpolableGateError",
    "OracleSplit",
    "QueryLedger",
    "SearchConfig",
    "SearchOutcome",
    "StateVector",
    "amplified_oracle_split",
    "amplify",
    "analytic_feynman_spectrum",
    "apply_circuit_prefix",
    "assumption_profile",
    "attach_ancilla_pivot",
    "build_controlled_grover",
    "build_feynman",
    "build_grover",
    "build_history_state",
    "build_kernel",
    "build_modified",
    "build_modified_grover",
    "build_standard",
    "build_trivial",
    "calibrate_steps",
    "check_frustration_free",
    "check_inverse_square_consistency",
    "circuit_states",
    "conjugation_unitary",
    "diagonalize_coupling",
    "eigendecompose",
    "feynman_term",
    "fit_gap_scaling",
    "fit_query_exponent",
    "fractional_oracle",
    "gadget_fidelity",
    "gadget_step",
    "gap_along_path",
    "gap_to_state",
    "gate_unitary",
    "initial_state",
    "input_term",
    "load_circuit",
    "measure_ground_state_exact",
    "measure_via_phase_randomization",
    "optimal_grover_iterations",
    "oracle_split",
    "overlap_probabilities",
    "parse_circuit",
    "query_sweep",
    "reference_state",
    "run_generalized_search",
    "sample_basis",
    "save_circuit",
    "serialize_circuit",
    "spectral_gap",
    "trotter_simulate",
    "validate_circuit",
    "verify_amplified_gap",
]
