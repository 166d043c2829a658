"""Shared test utilities.

The eigenvalue cross-check here deliberately avoids numpy.linalg.eigh:
coefficients of the characteristic polynomial come from the
Leverrier-Faddeev recursion (traces of matrix powers only) and the roots
from the companion matrix of that polynomial. Slow and only healthy for
small, well-separated spectra, which is exactly what the fixed test
matrices are.
"""

from pathlib import Path

import numpy as np

from clocklab.errors import CircuitSyntaxError

DATA_DIR = Path(__file__).parent / "data"
VALID_DIR = DATA_DIR / "valid"
BAD_DIR = DATA_DIR / "bad"

# every malformed corpus file and the diagnostic it must produce
EXPECTED_DIAGNOSTICS = {
    "missing_qubits.circ": (CircuitSyntaxError, "missing qubits directive"),
    "duplicate_qubits.circ": (CircuitSyntaxError, "duplicate qubits directive"),
    "qubits_non_integer.circ": (CircuitSyntaxError, "qubits needs one integer argument"),
    "qubits_extra_args.circ": (CircuitSyntaxError, "qubits needs one integer argument"),
    "duplicate_ancilla.circ": (CircuitSyntaxError, "duplicate control-ancilla directive"),
    "ancilla_with_args.circ": (CircuitSyntaxError, "control-ancilla takes no arguments"),
    "duplicate_oracle.circ": (CircuitSyntaxError, "duplicate oracle directive"),
    "oracle_missing_arg.circ": (CircuitSyntaxError, "oracle needs one bitstring argument"),
    "duplicate_initial.circ": (CircuitSyntaxError, "duplicate initial directive"),
    "initial_malformed.circ": (CircuitSyntaxError, "initial must be"),
    "gates_empty.circ": (CircuitSyntaxError, "gates needs at least one gate name"),
    "gates_unknown_kind.circ": (CircuitSyntaxError, "unknown gate kind 'HADAMARD'"),
    "gates_custom_inline.circ": (CircuitSyntaxError, "CUSTOM needs its own 'gate' line"),
    "gate_missing_name.circ": (CircuitSyntaxError, "gate needs a gate name"),
    "gate_unknown_kind.circ": (CircuitSyntaxError, "unknown gate kind 'FOO'"),
    "gate_id_with_args.circ": (CircuitSyntaxError, "ID takes no arguments"),
    "custom_no_targets.circ": (CircuitSyntaxError, "at least one target qubit"),
    "custom_size_mismatch.circ": (CircuitSyntaxError, "matrix size mismatch"),
    "custom_bad_complex.circ": (CircuitSyntaxError, "malformed complex entry 'zebra'"),
    "unknown_directive.circ": (CircuitSyntaxError, "unknown directive 'qbits'"),
    "oracle_wrong_length.circ": (ValueError, "has 3 bits, expected 2"),
    "oracle_not_bits.circ": (ValueError, "must be a bitstring"),
    "oracle_gate_without_target.circ": (ValueError, "requires an oracle target"),
    "controlled_without_ancilla.circ": (ValueError, "requires the control ancilla"),
    "custom_duplicate_target.circ": (ValueError, "duplicate CUSTOM target"),
    "custom_target_out_of_range.circ": (ValueError, "outside system qubits"),
    "custom_not_unitary.circ": (ValueError, "not unitary"),
    "zero_qubits.circ": (ValueError, "at least one system qubit"),
    "initial_basis_wrong_length.circ": (ValueError, "has 3 bits, expected 2"),
}


def charpoly_eigenvalues(mat) -> np.ndarray:
    """Sorted real eigenvalues of a small Hermitian matrix via char poly."""
    a = np.asarray(mat, dtype=complex)
    dim = a.shape[0]
    if dim > 8:
        raise ValueError(f"characteristic-polynomial route is for dim <= 8, got {dim}")
    coeffs = np.zeros(dim + 1, dtype=complex)
    coeffs[0] = 1.0
    m = np.eye(dim, dtype=complex)
    for k in range(1, dim + 1):
        m = a @ m
        coeffs[k] = -np.trace(m) / k
        m = m + coeffs[k] * np.eye(dim)
    roots = np.roots(coeffs)
    return np.sort(roots.real)


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2.0


def random_unitary(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def dense_of(h) -> np.ndarray:
    """Dense array from a ClockHamiltonian-like object, sparse, or array."""
    if hasattr(h, "dense"):
        return h.dense()
    if hasattr(h, "toarray"):
        return h.toarray()
    return np.asarray(h, dtype=complex)
