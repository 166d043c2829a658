"""Circuit descriptions, interpolated gate unitaries, and a dense statevector engine.

A circuit acts on ``n`` system qubits, optionally preceded by one control
ancilla qubit ``b`` (tensor order: b first, then system qubits left to
right). Gates are drawn from a small fixed alphabet:

    ID        identity on the full register
    ORACLE    marks the target bitstring X: |Y> -> |Y> for Y != X, |X> -> -|X>
    REFLECT   reflection 2|phi0><phi0| - 1 about the initial system state
    CORACLE   ORACLE on the system, controlled on the ancilla being |1>
    CREFLECT  REFLECT on the system, controlled on the ancilla being |1>
    CUSTOM    explicit unitary on listed system qubits

Every gate comes with a one-parameter interpolation U(g) with U(0) = 1 and
U(1) the nominal gate. Reflection-type gates (everything except ID and
CUSTOM) are of the form 1 + (e^{i pi g} - 1) P for a projector P and
interpolate through that phase; CUSTOM gates use the principal fractional
matrix power.

The text format understood by :func:`parse_circuit` is line-oriented:

    # comment (blank lines are fine too)
    qubits 2
    control-ancilla            (optional)
    oracle 11                  (optional, required by ORACLE/CORACLE)
    initial basis 01           (optional, default "initial plus")
    gates ID ORACLE REFLECT    (gate names, applied left to right)
    gate CUSTOM 0 1 <16 complex entries a+bi, row major>

``gates`` and ``gate`` lines may repeat and mix; gates accumulate in file
order. Complex entries are written like ``0.5-0.5i``. On a ``gate CUSTOM``
line the target list is the leading run of bare integers, so matrix
entries must carry a decimal point or an imaginary part (``1.0``, not
``1``) to mark where the targets end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CircuitSyntaxError, NonInterpolableGateError
from .limits import check_dim
from .seeding import resolve_rng

GATE_KINDS = ("ID", "ORACLE", "REFLECT", "CORACLE", "CREFLECT", "CUSTOM")
CONTROLLED_KINDS = ("CORACLE", "CREFLECT")

UNITARITY_TOL = 1e-12
_DEGENERATE_MINUS_ONE_TOL = 1e-8


@dataclass
class Gate:
    """One gate: a kind, and for CUSTOM the target qubits and matrix."""

    kind: str
    targets: tuple[int, ...] = ()
    matrix: np.ndarray | None = None

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if self.kind != other.kind or self.targets != other.targets:
            return False
        if (self.matrix is None) != (other.matrix is None):
            return False
        if self.matrix is None:
            return True
        return self.matrix.shape == other.matrix.shape and bool(
            np.array_equal(self.matrix, other.matrix)
        )


@dataclass
class Circuit:
    """A gate list on ``n`` system qubits plus an optional control ancilla."""

    n: int
    gates: list[Gate] = field(default_factory=list)
    oracle: str | None = None
    has_control_ancilla: bool = False
    initial_kind: str = "plus"  # "plus" or "basis"
    initial_bits: str | None = None

    @property
    def length(self) -> int:
        return len(self.gates)

    @property
    def total_qubits(self) -> int:
        return self.n + (1 if self.has_control_ancilla else 0)

    @property
    def dim(self) -> int:
        return 2**self.total_qubits

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.n == other.n
            and self.oracle == other.oracle
            and self.has_control_ancilla == other.has_control_ancilla
            and self.initial_kind == other.initial_kind
            and self.initial_bits == other.initial_bits
            and self.gates == other.gates
        )


@dataclass
class StateVector:
    """Dense amplitudes over an ordered list of subsystem factors."""

    amplitudes: np.ndarray
    factor_shape: tuple[int, ...]

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        self.factor_shape = tuple(int(d) for d in self.factor_shape)
        if math.prod(self.factor_shape) != self.amplitudes.size:
            raise ValueError(
                f"factor shape {self.factor_shape} does not match "
                f"{self.amplitudes.size} amplitudes"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm} deviates from 1 beyond 1e-9")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def reduced_probabilities(self, factor: int) -> np.ndarray:
        """Born probabilities of a computational measurement on one factor."""
        probs = np.abs(self.amplitudes.reshape(self.factor_shape)) ** 2
        axes = tuple(i for i in range(len(self.factor_shape)) if i != factor)
        return probs.sum(axis=axes)


@dataclass
class MeasurementSample:
    """Outcome of one computational-basis measurement on a factor."""

    outcome: int
    label: str
    probability: float
    post: StateVector


def _outcome_label(outcome: int, dim: int) -> str:
    if dim >= 2 and dim & (dim - 1) == 0:
        return format(outcome, f"0{dim.bit_length() - 1}b")
    return str(outcome)


def sample_basis(state: StateVector, subsystem: int, seed_or_rng) -> MeasurementSample:
    """Measure one factor of ``state`` in the computational basis.

    Returns the sampled outcome (with a bitstring label when the factor
    dimension is a power of two), its Born probability, and the collapsed
    renormalized post-measurement state.
    """
    if not 0 <= subsystem < len(state.factor_shape):
        raise ValueError(f"no subsystem {subsystem} in shape {state.factor_shape}")
    rng = resolve_rng(seed_or_rng)
    probs = state.reduced_probabilities(subsystem)
    probs = probs / probs.sum()
    outcome = int(rng.choice(probs.size, p=probs))
    tensor = state.amplitudes.reshape(state.factor_shape)
    collapsed = np.zeros_like(tensor)
    index = [slice(None)] * len(state.factor_shape)
    index[subsystem] = outcome
    collapsed[tuple(index)] = tensor[tuple(index)]
    collapsed = collapsed / np.linalg.norm(collapsed)
    return MeasurementSample(
        outcome=outcome,
        label=_outcome_label(outcome, state.factor_shape[subsystem]),
        probability=float(probs[outcome]),
        post=StateVector(collapsed.ravel(), state.factor_shape),
    )


# ---------------------------------------------------------------------------
# validation


def _check_bits(bits: str, n: int, what: str):
    if set(bits) - {"0", "1"}:
        raise ValueError(f"{what} must be a bitstring of 0s and 1s, got {bits!r}")
    if len(bits) != n:
        raise ValueError(f"{what} has {len(bits)} bits, expected {n}")


def validate_circuit(c: Circuit):
    """Check structural invariants; raises ValueError on violation."""
    if c.n < 1:
        raise ValueError(f"need at least one system qubit, got n={c.n}")
    check_dim(c.dim, "circuit register")
    if c.oracle is not None:
        _check_bits(c.oracle, c.n, "oracle target")
    if c.initial_kind not in ("plus", "basis"):
        raise ValueError(f"unknown initial state kind {c.initial_kind!r}")
    if c.initial_kind == "basis":
        if c.initial_bits is None:
            raise ValueError("basis initial state needs a bitstring")
        _check_bits(c.initial_bits, c.n, "initial state")
    elif c.initial_bits is not None:
        raise ValueError("initial bits given but initial kind is plus")
    for pos, gate in enumerate(c.gates, start=1):
        if gate.kind not in GATE_KINDS:
            raise ValueError(f"gate {pos}: unknown gate kind {gate.kind!r}")
        if gate.kind in ("ORACLE", "CORACLE") and c.oracle is None:
            raise ValueError(f"gate {pos}: {gate.kind} requires an oracle target")
        if gate.kind in CONTROLLED_KINDS and not c.has_control_ancilla:
            raise ValueError(f"gate {pos}: {gate.kind} requires the control ancilla")
        if gate.kind == "CUSTOM":
            _validate_custom(gate, c.n, pos)
        else:
            if gate.targets:
                raise ValueError(f"gate {pos}: {gate.kind} takes no targets")
            if gate.matrix is not None:
                raise ValueError(f"gate {pos}: {gate.kind} takes no matrix")


def _validate_custom(gate: Gate, n: int, pos: int):
    if not gate.targets:
        raise ValueError(f"gate {pos}: CUSTOM needs at least one target qubit")
    if len(set(gate.targets)) != len(gate.targets):
        raise ValueError(f"gate {pos}: duplicate CUSTOM target")
    for t in gate.targets:
        if not 0 <= t < n:
            raise ValueError(f"gate {pos}: target {t} outside system qubits 0..{n - 1}")
    if gate.matrix is None:
        raise ValueError(f"gate {pos}: CUSTOM needs a matrix")
    d = 2 ** len(gate.targets)
    if gate.matrix.shape != (d, d):
        raise ValueError(
            f"gate {pos}: matrix shape {gate.matrix.shape} does not match"
            f" {len(gate.targets)} targets (expected {d}x{d})"
        )
    drift = np.max(np.abs(gate.matrix.conj().T @ gate.matrix - np.eye(d)))
    if drift > UNITARITY_TOL:
        raise ValueError(
            f"gate {pos}: matrix is not unitary (drift {drift:.3e} > {UNITARITY_TOL})"
        )


# ---------------------------------------------------------------------------
# states and unitaries

_PLUS = np.array([1.0, 1.0]) / math.sqrt(2.0)


def _system_initial(c: Circuit) -> np.ndarray:
    if c.initial_kind == "plus":
        return np.full(2**c.n, 2 ** (-c.n / 2), dtype=complex)
    state = np.zeros(2**c.n, dtype=complex)
    state[int(c.initial_bits, 2)] = 1.0
    return state


def initial_state(c: Circuit) -> np.ndarray:
    """|phi^0>: the initial register state (ancilla b, when present, in |+>)."""
    sys = _system_initial(c)
    if c.has_control_ancilla:
        return np.kron(_PLUS.astype(complex), sys)
    return sys


def _embed_on_targets(mat: np.ndarray, targets: tuple[int, ...], total: int) -> np.ndarray:
    """Expand a unitary on ``targets`` to the full register (big-endian order)."""
    k = len(targets)
    rest = [q for q in range(total) if q not in targets]
    perm = list(targets) + rest
    full = np.kron(mat, np.eye(2 ** (total - k), dtype=complex))
    full = full.reshape([2] * (2 * total))
    inv = np.argsort(perm)
    full = full.transpose(list(inv) + [total + i for i in inv])
    return full.reshape(2**total, 2**total)


def _interpolated_reflection(projector: np.ndarray, g: float) -> np.ndarray:
    phase = np.exp(1j * math.pi * g) - 1.0
    return np.eye(projector.shape[0], dtype=complex) + phase * projector


def _custom_power(mat: np.ndarray, g: float) -> np.ndarray:
    """Principal fractional power of a unitary via its eigenphases."""
    vals, vecs = np.linalg.eig(mat)
    minus_one = np.abs(vals + 1.0) < _DEGENERATE_MINUS_ONE_TOL
    if int(minus_one.sum()) >= 2:
        raise NonInterpolableGateError(
            "non-interpolable gate: CUSTOM matrix has a degenerate -1 eigenvalue"
            " pair, so the principal fractional power is ambiguous"
        )
    phases = np.exp(1j * g * np.angle(vals))
    return vecs @ np.diag(phases) @ np.linalg.inv(vecs)


def gate_unitary(c: Circuit, position: int, g: float = 1.0) -> np.ndarray:
    """U^l(g) on the full register for the gate at 1-based ``position``.

    U^l(0) = 1 and U^l(1) is the nominal gate. Reflection-type gates
    interpolate as 1 + (e^{i pi g} - 1) P; CUSTOM gates take the principal
    fractional matrix power, which is rejected as non-interpolable when the
    matrix has a degenerate -1 eigenvalue pair and g is strictly between
    0 and 1.
    """
    if not 1 <= position <= c.length:
        raise ValueError(f"no gate at position {position} (circuit length {c.length})")
    gate = c.gates[position - 1]
    dim = c.dim
    anc = c.has_control_ancilla

    if gate.kind == "ID":
        return np.eye(dim, dtype=complex)

    if gate.kind == "CUSTOM":
        if g == 0.0:
            return np.eye(dim, dtype=complex)
        mat = gate.matrix if g == 1.0 else _custom_power(gate.matrix, g)
        targets = gate.targets
        if anc:
            targets = tuple(t + 1 for t in targets)
        return _embed_on_targets(mat, targets, c.total_qubits)

    sys_dim = 2**c.n
    if gate.kind in ("ORACLE", "CORACLE"):
        proj_sys = np.zeros((sys_dim, sys_dim), dtype=complex)
        marked = int(c.oracle, 2)
        proj_sys[marked, marked] = 1.0
    else:  # REFLECT / CREFLECT reflect about the initial system state
        phi0 = _system_initial(c)
        proj_sys = np.eye(sys_dim, dtype=complex) - np.outer(phi0, phi0.conj())

    if gate.kind in CONTROLLED_KINDS:
        projector = np.kron(np.diag([0.0, 1.0]).astype(complex), proj_sys)
    elif anc:
        projector = np.kron(np.eye(2, dtype=complex), proj_sys)
    else:
        projector = proj_sys
    return _interpolated_reflection(projector, g)


def apply_circuit_prefix(c: Circuit, l: int, g: float = 1.0) -> StateVector:
    """|phi^l(g)> = U^l(g) ... U^1(g) |phi^0>, qubit-resolved factors."""
    states = circuit_states(c, g, upto=l)
    return StateVector(states[l], (2,) * c.total_qubits)


def circuit_states(c: Circuit, g: float = 1.0, upto: int | None = None) -> np.ndarray:
    """All prefix states phi^0 .. phi^upto as rows of an (upto+1, dim) array."""
    validate_circuit(c)
    last = c.length if upto is None else upto
    if not 0 <= last <= c.length:
        raise ValueError(f"prefix length {last} outside 0..{c.length}")
    out = np.empty((last + 1, c.dim), dtype=complex)
    out[0] = initial_state(c)
    for l in range(1, last + 1):
        out[l] = gate_unitary(c, l, g) @ out[l - 1]
    return out


# ---------------------------------------------------------------------------
# builders


def optimal_grover_iterations(n: int) -> int:
    """Iteration count for an n-qubit search, floor(pi/4 * sqrt(2^n)), min 1."""
    return max(1, math.floor(math.pi / 4.0 * math.sqrt(2.0**n)))


def build_trivial(n: int, length: int) -> Circuit:
    """All-identity circuit of the given length."""
    if length < 1:
        raise ValueError(f"need at least one gate, got length={length}")
    c = Circuit(n=n, gates=[Gate("ID") for _ in range(length)])
    validate_circuit(c)
    return c


def build_grover(n: int, iterations: int, x: str) -> Circuit:
    """Plain Grover search: (ORACLE, REFLECT) repeated ``iterations`` times."""
    if iterations < 1:
        raise ValueError(f"need at least one iteration, got {iterations}")
    gates = []
    for _ in range(iterations):
        gates.append(Gate("ORACLE"))
        gates.append(Gate("REFLECT"))
    c = Circuit(n=n, gates=gates, oracle=x)
    validate_circuit(c)
    return c


def build_modified_grover(n: int, x: str, iterations: int | None = None) -> Circuit:
    """Grover iterations padded by identity stretches: 1^q (O R)^q 1^q.

    With ``iterations`` omitted the optimal count q(n) is used, which
    requires n >= 2. An explicit ``iterations`` decouples the length from n
    (used by gap scans, where L = 4*iterations is swept independently).
    """
    if iterations is None:
        if n < 2:
            raise ValueError(f"optimal iteration count needs n >= 2, got n={n}")
        iterations = optimal_grover_iterations(n)
    if iterations < 1:
        raise ValueError(f"need at least one iteration, got {iterations}")
    gates = [Gate("ID") for _ in range(iterations)]
    for _ in range(iterations):
        gates.append(Gate("ORACLE"))
        gates.append(Gate("REFLECT"))
    gates.extend(Gate("ID") for _ in range(iterations))
    c = Circuit(n=n, gates=gates, oracle=x)
    validate_circuit(c)
    return c


def build_controlled_grover(n: int, x: str, l0: int, length: int) -> Circuit:
    """Identity prefix of l0 gates, then ancilla-controlled Grover iterations.

    The register carries one control ancilla b (initially |+>_b), so the
    final state superposes the untouched branch with the searched branch.
    l0 = length is allowed and yields the all-identity degenerate case.
    """
    if not 0 <= l0 <= length:
        raise ValueError(f"identity prefix l0={l0} outside 0..{length}")
    if (length - l0) % 2:
        raise ValueError(f"length - l0 = {length - l0} must be even")
    gates = [Gate("ID") for _ in range(l0)]
    for _ in range((length - l0) // 2):
        gates.append(Gate("CORACLE"))
        gates.append(Gate("CREFLECT"))
    c = Circuit(n=n, gates=gates, oracle=x, has_control_ancilla=True)
    validate_circuit(c)
    return c


# ---------------------------------------------------------------------------
# text format


def _parse_complex(token: str, line: int) -> complex:
    try:
        return complex(token.replace("i", "j").replace("I", "j"))
    except ValueError:
        raise CircuitSyntaxError(f"malformed complex entry {token!r}", line)


def _format_complex(z: complex) -> str:
    real, imag = float(z.real), float(z.imag)
    sign = "+" if imag >= 0 or math.isnan(imag) else "-"
    return f"{real!r}{sign}{abs(imag)!r}i"


def _parse_gate_line(tokens: list[str], line: int) -> Gate:
    kind = tokens[0]
    if kind not in GATE_KINDS:
        raise CircuitSyntaxError(f"unknown gate kind {kind!r}", line)
    if kind != "CUSTOM":
        if len(tokens) > 1:
            raise CircuitSyntaxError(f"{kind} takes no arguments", line)
        return Gate(kind)
    targets = []
    rest = tokens[1:]
    while rest and rest[0].lstrip("-").isdigit():
        targets.append(int(rest.pop(0)))
    if not targets:
        raise CircuitSyntaxError("CUSTOM needs at least one target qubit", line)
    d = 2 ** len(targets)
    if len(rest) != d * d:
        raise CircuitSyntaxError(
            f"matrix size mismatch: got {len(rest)} entries,"
            f" expected {d * d} for {len(targets)} targets",
            line,
        )
    entries = [_parse_complex(tok, line) for tok in rest]
    matrix = np.array(entries, dtype=complex).reshape(d, d)
    return Gate("CUSTOM", tuple(targets), matrix)


def parse_circuit(text: str) -> Circuit:
    """Parse the line-oriented circuit format; see the module docstring.

    Raises CircuitSyntaxError (with line number) on malformed input and
    ValueError when the assembled circuit violates a structural invariant
    (bad oracle length, non-unitary CUSTOM matrix, and so on).
    """
    n = None
    oracle = None
    ancilla = False
    initial_kind = "plus"
    initial_bits = None
    seen = set()
    gates: list[Gate] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.split()
        head = tokens[0]
        if head == "qubits":
            if "qubits" in seen:
                raise CircuitSyntaxError("duplicate qubits directive", lineno)
            seen.add("qubits")
            if len(tokens) != 2 or not tokens[1].isdigit():
                raise CircuitSyntaxError("qubits needs one integer argument", lineno)
            n = int(tokens[1])
        elif head == "control-ancilla":
            if "control-ancilla" in seen:
                raise CircuitSyntaxError("duplicate control-ancilla directive", lineno)
            seen.add("control-ancilla")
            if len(tokens) != 1:
                raise CircuitSyntaxError("control-ancilla takes no arguments", lineno)
            ancilla = True
        elif head == "oracle":
            if "oracle" in seen:
                raise CircuitSyntaxError("duplicate oracle directive", lineno)
            seen.add("oracle")
            if len(tokens) != 2:
                raise CircuitSyntaxError("oracle needs one bitstring argument", lineno)
            oracle = tokens[1]
        elif head == "initial":
            if "initial" in seen:
                raise CircuitSyntaxError("duplicate initial directive", lineno)
            seen.add("initial")
            if len(tokens) == 2 and tokens[1] == "plus":
                initial_kind = "plus"
            elif len(tokens) == 3 and tokens[1] == "basis":
                initial_kind, initial_bits = "basis", tokens[2]
            else:
                raise CircuitSyntaxError(
                    "initial must be 'initial plus' or 'initial basis <bits>'", lineno
                )
        elif head == "gates":
            if len(tokens) < 2:
                raise CircuitSyntaxError("gates needs at least one gate name", lineno)
            for name in tokens[1:]:
                if name not in GATE_KINDS:
                    raise CircuitSyntaxError(f"unknown gate kind {name!r}", lineno)
                if name == "CUSTOM":
                    raise CircuitSyntaxError(
                        "CUSTOM needs its own 'gate' line with targets and matrix",
                        lineno,
                    )
                gates.append(Gate(name))
        elif head == "gate":
            if len(tokens) < 2:
                raise CircuitSyntaxError("gate needs a gate name", lineno)
            gates.append(_parse_gate_line(tokens[1:], lineno))
        else:
            raise CircuitSyntaxError(f"unknown directive {head!r}", lineno)

    if n is None:
        raise CircuitSyntaxError("missing qubits directive", len(text.splitlines()) or 1)
    c = Circuit(
        n=n,
        gates=gates,
        oracle=oracle,
        has_control_ancilla=ancilla,
        initial_kind=initial_kind,
        initial_bits=initial_bits,
    )
    validate_circuit(c)
    return c


def serialize_circuit(c: Circuit) -> str:
    """Canonical text form; parse(serialize(c)) == c exactly."""
    validate_circuit(c)
    lines = [f"qubits {c.n}"]
    if c.has_control_ancilla:
        lines.append("control-ancilla")
    if c.oracle is not None:
        lines.append(f"oracle {c.oracle}")
    if c.initial_kind == "basis":
        lines.append(f"initial basis {c.initial_bits}")
    if any(g.kind == "CUSTOM" for g in c.gates):
        for gate in c.gates:
            if gate.kind == "CUSTOM":
                entries = " ".join(_format_complex(z) for z in gate.matrix.ravel())
                targets = " ".join(str(t) for t in gate.targets)
                lines.append(f"gate CUSTOM {targets} {entries}")
            else:
                lines.append(f"gate {gate.kind}")
    elif c.gates:
        lines.append("gates " + " ".join(g.kind for g in c.gates))
    return "\n".join(lines) + "\n"


def load_circuit(path) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def save_circuit(c: Circuit, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_circuit(c))
