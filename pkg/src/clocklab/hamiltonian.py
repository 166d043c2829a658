"""Clock Hamiltonians that encode circuit execution in their ground state.

A circuit with gates U^1 .. U^L on a register of dimension d is mapped to
operators on register (x) clock, where the clock is an (L+1)-level system.
Each transition l carries the projector term

    h^l(g) = 1/2 ( 1 (x) (|l><l| + |l-1><l-1|)
                   - U^l(g) (x) |l><l-1|  -  U^l(g)^dag (x) |l-1><l| )

and the input penalty pins the register at clock value 0, one term per
register qubit. The sum of all terms annihilates exactly the uniform
history state, which makes these Hamiltonians a laboratory for adiabatic
gap questions: the whole construction is exposed as a tagged term list so
spectra, frustration-freeness, and amplified variants can be studied
term by term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, StateVector, circuit_states, gate_unitary, validate_circuit
from .errors import CapacityError
from .limits import DENSE_ASSEMBLE_CAP, check_dim

TERM_FEYNMAN = "feynman"
TERM_INPUT = "input"
TERM_POINTER = "pointer"

# Coupling coefficient of the oracle in the split H = coupling * O_X (x) P_c + H_sc.
# P_c is kept unit-normalized (eigenvalues in {-1, 0, +1}); the 1/2 from the
# transition terms lives here instead.
ORACLE_COUPLING = 0.5

_MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)


@dataclass
class Term:
    """One tagged Hamiltonian term: ``weight`` times the stored operator."""

    kind: str
    index: int
    weight: float
    op: sp.csr_matrix  # unit-weight operator on register (x) clock


@dataclass
class TermList:
    terms: list[Term]
    sys_dim: int
    clock_dim: int

    @property
    def dim(self) -> int:
        return self.sys_dim * self.clock_dim

    @property
    def n_input(self) -> int:
        return sum(1 for t in self.terms if t.kind == TERM_INPUT)

    def assemble(self) -> sp.csr_matrix:
        total = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for t in self.terms:
            total = total + t.weight * t.op
        return total.tocsr()


@dataclass
class ClockHamiltonian:
    """A term list plus a constant shift, with cached assembled forms."""

    term_list: TermList
    g: float
    shift: float = 0.0
    circuit: Circuit | None = None
    _sparse: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.term_list.dim

    @property
    def dims(self) -> tuple[int, int]:
        return (self.term_list.sys_dim, self.term_list.clock_dim)

    def sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            total = self.term_list.assemble()
            if self.shift:
                total = total + self.shift * sp.identity(self.dim, dtype=complex)
            self._sparse = total.tocsr()
        return self._sparse

    def dense(self) -> np.ndarray:
        if self.dim > DENSE_ASSEMBLE_CAP:
            raise CapacityError(
                f"dense assembly of dimension {self.dim} exceeds the"
                f" {DENSE_ASSEMBLE_CAP} cap; use the sparse form"
            )
        return self.sparse().toarray()

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self.sparse() @ vec

    def norm_bound(self) -> float:
        """Upper bound on the operator norm from term weights."""
        return sum(abs(t.weight) for t in self.term_list.terms) + abs(self.shift)


@dataclass
class HistoryState:
    """Ground state Sum_l alpha^l |phi^l> (x) |l> of a clock Hamiltonian."""

    state: StateVector
    alphas: np.ndarray
    sys_dim: int
    clock_dim: int
    has_ancilla: bool


def _clock_unit(clock_dim: int, row: int, col: int) -> sp.csr_matrix:
    return sp.csr_matrix(([1.0 + 0j], ([row], [col])), shape=(clock_dim, clock_dim))


def feynman_term(c: Circuit, l: int, g: float = 1.0) -> Term:
    """Projector term coupling clock values l-1 and l through U^l(g)."""
    if not 1 <= l <= c.length:
        raise ValueError(f"no transition {l} in a length-{c.length} circuit")
    clock_dim = c.length + 1
    u = gate_unitary(c, l, g)
    eye = sp.identity(c.dim, dtype=complex, format="csr")
    op = 0.5 * (
        sp.kron(eye, _clock_unit(clock_dim, l, l) + _clock_unit(clock_dim, l - 1, l - 1))
        - sp.kron(sp.csr_matrix(u), _clock_unit(clock_dim, l, l - 1))
        - sp.kron(sp.csr_matrix(u.conj().T), _clock_unit(clock_dim, l - 1, l))
    )
    return Term(TERM_FEYNMAN, l, 1.0, op.tocsr())


def input_term(c: Circuit, register_pos: int) -> Term:
    """Penalty pinning register qubit ``register_pos`` at clock value 0.

    Register positions follow tensor order (ancilla b first when present).
    For a plus-type initial state the projector is |-><-|; for a basis
    initial state it projects on the flipped bit, so the intended basis
    state is the unique zero mode.
    """
    total = c.total_qubits
    if not 0 <= register_pos < total:
        raise ValueError(f"register position {register_pos} outside 0..{total - 1}")
    if c.has_control_ancilla and register_pos == 0:
        proj = _MINUS
    else:
        sys_index = register_pos - (1 if c.has_control_ancilla else 0)
        if c.initial_kind == "plus":
            proj = _MINUS
        else:
            wrong = 1 - int(c.initial_bits[sys_index])
            proj = np.zeros((2, 2), dtype=complex)
            proj[wrong, wrong] = 1.0
    before = sp.identity(2**register_pos, dtype=complex, format="csr")
    after = sp.identity(2 ** (total - register_pos - 1), dtype=complex, format="csr")
    full = sp.kron(sp.kron(before, sp.csr_matrix(proj)), after)
    op = sp.kron(full, _clock_unit(c.length + 1, 0, 0))
    return Term(TERM_INPUT, register_pos + 1, 1.0, op.tocsr())


def _base_terms(c: Circuit, g: float, with_input: bool) -> TermList:
    validate_circuit(c)
    if c.length < 1:
        raise ValueError("need at least one gate to build a clock Hamiltonian")
    check_dim(c.dim * (c.length + 1), "clock Hamiltonian")
    terms = [feynman_term(c, l, g) for l in range(1, c.length + 1)]
    if with_input:
        terms.extend(input_term(c, q) for q in range(c.total_qubits))
    return TermList(terms, sys_dim=c.dim, clock_dim=c.length + 1)


def build_feynman(c: Circuit, g: float = 1.0) -> ClockHamiltonian:
    """Transition terms only; spectrum 1 - cos(pi m / (L+1)), each d-fold."""
    return ClockHamiltonian(_base_terms(c, g, with_input=False), g=g, circuit=c)


def build_standard(c: Circuit, g: float = 1.0) -> ClockHamiltonian:
    """Transition terms plus input penalty; unique zero mode = history state."""
    return ClockHamiltonian(_base_terms(c, g, with_input=True), g=g, circuit=c)


def build_modified(
    c: Circuit,
    betas,
    energies,
    g: float = 1.0,
) -> ClockHamiltonian:
    """Weighted transitions plus clock-diagonal pointer energies.

    ``betas`` are L positive transition weights, ``energies`` are L+1 real
    diagonal pointer values E^0 .. E^L. The result is shifted by a constant
    so its smallest eigenvalue is 0; the shift is recorded on the returned
    object, so the matrix stays the literal weighted term sum plus
    shift * identity.
    """
    betas = np.asarray(betas, dtype=float)
    energies = np.asarray(energies, dtype=float)
    if betas.shape != (c.length,):
        raise ValueError(f"need {c.length} transition weights, got {betas.shape}")
    if np.any(betas <= 0):
        raise ValueError("transition weights must be positive")
    if energies.shape != (c.length + 1,):
        raise ValueError(f"need {c.length + 1} pointer energies, got {energies.shape}")

    tl = _base_terms(c, g, with_input=True)
    for term in tl.terms:
        if term.kind == TERM_FEYNMAN:
            term.weight = float(betas[term.index - 1])
    eye = sp.identity(c.dim, dtype=complex, format="csr")
    for l, e in enumerate(energies):
        if e != 0.0:
            op = sp.kron(eye, _clock_unit(c.length + 1, l, l)).tocsr()
            tl.terms.append(Term(TERM_POINTER, l, float(e), op))

    ham = ClockHamiltonian(tl, g=g, circuit=c)
    from .spectral import eigendecompose  # local import, avoids a cycle

    lam_min = float(eigendecompose(ham, want_vectors=False).eigenvalues[0])
    if abs(lam_min) > 1e-13:
        ham = ClockHamiltonian(tl, g=g, shift=-lam_min, circuit=c)
    return ham


def build_history_state(c: Circuit, g: float = 1.0) -> HistoryState:
    """Uniform history state (L+1)^{-1/2} Sum_l |phi^l(g)> (x) |l>."""
    states = circuit_states(c, g)
    clock_dim = c.length + 1
    alphas = np.full(clock_dim, 1.0 / math.sqrt(clock_dim))
    amps = (states.T * alphas).ravel()
    if c.has_control_ancilla:
        shape = (2, 2**c.n, clock_dim)
    else:
        shape = (2**c.n, clock_dim)
    return HistoryState(
        state=StateVector(amps, shape),
        alphas=alphas,
        sys_dim=c.dim,
        clock_dim=clock_dim,
        has_ancilla=c.has_control_ancilla,
    )


def conjugation_unitary(c: Circuit, g: float = 1.0) -> np.ndarray:
    """Block unitary W = Sum_l U^l(g)..U^1(g) (x) |l><l|.

    W maps the trivial-circuit eigenvectors onto those of ``c``, which is
    why every spectrum built here is circuit independent.
    """
    validate_circuit(c)
    clock_dim = c.length + 1
    total = c.dim * clock_dim
    if total > DENSE_ASSEMBLE_CAP:
        raise CapacityError(f"conjugation unitary of dimension {total} over dense cap")
    w = np.zeros((total, total), dtype=complex)
    prefix = np.eye(c.dim, dtype=complex)
    for l in range(clock_dim):
        if l > 0:
            prefix = gate_unitary(c, l, g) @ prefix
        w[l::clock_dim, l::clock_dim] = prefix
    return w


def oracle_positions(c: Circuit) -> tuple[int, ...]:
    return tuple(l for l, gate in enumerate(c.gates, start=1) if gate.kind == "ORACLE")


@dataclass
class OracleSplit:
    """H = coupling * O_X (x) P_c + H_sc with circuit-independent H_sc.

    P_c is the unit-normalized clock hopping over oracle transitions
    (eigenvalues in {-1, 0, +1}); the physical coupling strength 1/2 is
    carried separately in ``coupling``.
    """

    coupling: float
    oracle_op: np.ndarray  # O_X on the full register
    p_clock: np.ndarray  # clock-space coupling pattern
    h_rest: sp.csr_matrix  # X-independent remainder on register (x) clock
    positions: tuple[int, ...]
    sys_dim: int
    clock_dim: int

    def coupling_matrix(self) -> sp.csr_matrix:
        """coupling * O_X (x) P_c as a sparse matrix."""
        return (
            self.coupling * sp.kron(sp.csr_matrix(self.oracle_op), sp.csr_matrix(self.p_clock))
        ).tocsr()

    def reassembled(self) -> sp.csr_matrix:
        return (self.coupling_matrix() + self.h_rest).tocsr()


def oracle_split(c: Circuit, g: float = 1.0) -> OracleSplit:
    """Separate the oracle dependence of the standard Hamiltonian.

    Requires a circuit whose oracle enters through plain ORACLE gates at
    pairwise non-adjacent positions (the Grover-structured layout); the
    clock coupling P_c is then a sum of disjoint hopping pairs, hence has
    eigenvalues in {-1, 0, +1} and unit norm.

    The remainder is oracle independent at g = 1. At fractional g the
    oracle gates themselves interpolate, so only the reassembly identity
    H(g) = coupling * O_X (x) P_c + H_sc survives.
    """
    validate_circuit(c)
    if c.oracle is None:
        raise ValueError("oracle split needs a circuit with an oracle target")
    if any(gate.kind == "CORACLE" for gate in c.gates):
        raise ValueError(
            "controlled oracle layout: CORACLE mixes the oracle with the"
            " ancilla, so the remainder would stay oracle dependent"
        )
    positions = oracle_positions(c)
    for a, b in zip(positions, positions[1:]):
        if b - a < 2:
            raise ValueError(f"adjacent ORACLE gates at transitions {a} and {b}")

    clock_dim = c.length + 1
    p_clock = np.zeros((clock_dim, clock_dim), dtype=complex)
    for l in positions:
        p_clock[l, l - 1] -= 1.0
        p_clock[l - 1, l] -= 1.0

    marked = int(c.oracle, 2)
    o_sys = np.eye(2**c.n, dtype=complex)
    o_sys[marked, marked] = -1.0
    oracle_op = np.kron(np.eye(2, dtype=complex), o_sys) if c.has_control_ancilla else o_sys

    h_full = build_standard(c, g).sparse()
    coupling_mat = ORACLE_COUPLING * sp.kron(sp.csr_matrix(oracle_op), sp.csr_matrix(p_clock))
    h_rest = (h_full - coupling_mat).tocsr()
    return OracleSplit(
        coupling=ORACLE_COUPLING,
        oracle_op=oracle_op,
        p_clock=p_clock,
        h_rest=h_rest,
        positions=positions,
        sys_dim=c.dim,
        clock_dim=clock_dim,
    )
