"""Measurement-driven search on clock-Hamiltonian ground states.

The protocol per trial: (i) prepare a cheap circuit-independent reference
state nu, (ii) measure whether the system is in the ground (history)
state of the clock Hamiltonian for the searched circuit, (iii) measure
clock then register in the computational basis and read off the marked
bitstring. Success probability is bounded below by the product of the
two overlaps p_{nu,zeta} * p_{X,zeta}, both Theta(1) for the padded
Grover family, so a ground-state measurement primitive turns the clock
construction into a search method.

Ground-state measurement comes in two flavors: an exact projective
measurement, and phase randomization, where evolving for a random time
drawn uniformly from a full period window dephases the off-diagonal
coherence between eigenspaces while leaving eigenbasis populations
untouched. Phase randomization is what costs evolution time (T = c/gap
per measurement) and, through the fractional-oracle machinery, oracle
queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import (
    Circuit,
    StateVector,
    build_controlled_grover,
    build_modified_grover,
    initial_state,
    optimal_grover_iterations,
    sample_basis,
)
from .hamiltonian import HistoryState, build_history_state, build_standard
from .seeding import resolve_rng, rng_from
from .spectral import eigendecompose, spectral_gap

FAMILIES = ("modified_grover", "controlled_grover")
MODES = ("exact_projective", "phase_randomization")

THETA_FLOOR = 0.15


def leading_identity_run(c: Circuit) -> int:
    run = 0
    for gate in c.gates:
        if gate.kind != "ID":
            break
        run += 1
    return run


def reference_state(c: Circuit) -> StateVector:
    """phi^0 spread uniformly over the leading identity stretch of the clock.

    The state is circuit independent apart from the register size and the
    length of the identity prefix, and its overlap with the history state
    is (k+1)/(L+1) for a prefix of k identities.
    """
    k = leading_identity_run(c)
    clock_dim = c.length + 1
    clock = np.zeros(clock_dim, dtype=complex)
    clock[: k + 1] = 1.0 / math.sqrt(k + 1)
    amps = np.kron(initial_state(c), clock)
    shape = (2, 2**c.n, clock_dim) if c.has_control_ancilla else (2**c.n, clock_dim)
    return StateVector(amps, shape)


def overlap_probabilities(zeta: HistoryState, nu: StateVector, x: str) -> tuple[float, float]:
    """(p_{nu,zeta}, p_{X,zeta}): reference overlap and marked readout weight.

    p_{X,zeta} sums, over clock values (and over the control ancilla when
    present), the probability that a computational measurement of the
    system register returns the marked bitstring X.
    """
    amps = zeta.state.amplitudes
    if amps.size != nu.amplitudes.size:
        raise ValueError("reference and history states live on different spaces")
    p_nu = float(abs(np.vdot(nu.amplitudes, amps)) ** 2)
    marked = int(x, 2)
    tensor = amps.reshape(zeta.state.factor_shape)
    if zeta.has_ancilla:
        column = tensor[:, marked, :]
    else:
        column = tensor[marked, :]
    p_x = float(np.sum(np.abs(column) ** 2))
    return p_nu, p_x


@dataclass
class GroundMeasurement:
    success: bool
    probability: float
    post: StateVector


def _ground_vector(h) -> np.ndarray:
    result = eigendecompose(h, want_vectors=True)
    gap = spectral_gap(result)
    if gap.ground_degeneracy != 1:
        raise ValueError(
            f"ground space is {gap.ground_degeneracy}-fold degenerate;"
            " the projective ground measurement needs a unique ground state"
        )
    return result.eigenvectors[:, 0]


def measure_ground_state_exact(s: StateVector, h, seed_or_rng, ground: np.ndarray | None = None) -> GroundMeasurement:
    """Projective binary measurement {|zeta><zeta|, 1 - |zeta><zeta|}."""
    rng = resolve_rng(seed_or_rng)
    zeta = _ground_vector(h) if ground is None else ground
    amp = np.vdot(zeta, s.amplitudes)
    p = float(min(1.0, abs(amp) ** 2))
    if rng.random() < p:
        phase = amp / abs(amp) if abs(amp) > 1e-15 else 1.0
        post = zeta * phase  # keep the branch continuous with the input state
        return GroundMeasurement(True, p, StateVector(post, s.factor_shape))
    rest = s.amplitudes - amp * zeta
    rest = rest / np.linalg.norm(rest)
    return GroundMeasurement(False, p, StateVector(rest, s.factor_shape))


@dataclass
class PhaseRandomization:
    populations: np.ndarray  # per eigenvalue cluster, invariant under the channel
    cluster_values: np.ndarray
    suppression_to_ground: np.ndarray  # analytic |E e^{-i w t}|^reps per cluster
    times: np.ndarray
    total_time: float
    post: StateVector


def measure_via_phase_randomization(
    s: StateVector,
    h,
    delta_est: float,
    reps: int = 3,
    seed_or_rng=0,
) -> PhaseRandomization:
    """Dephase ``s`` in the eigenbasis of ``h`` by random-time evolution.

    Each of ``reps`` draws evolves for a time uniform on [0, 2 pi /
    delta_est]. Populations are unchanged; the ensemble-averaged coherence
    between eigenspaces separated by w shrinks by |(1 - e^{-i w T}) /
    (i w T)| per rep, which vanishes exactly at w = delta_est. The sampled
    trajectory state is returned alongside the analytic summary.
    """
    if delta_est <= 0:
        raise ValueError(f"gap estimate must be positive, got {delta_est}")
    if reps < 0:
        raise ValueError(f"reps must be nonnegative, got {reps}")
    rng = resolve_rng(seed_or_rng)
    result = eigendecompose(h, want_vectors=True)
    if not result.complete:
        raise ValueError("phase randomization needs the full eigenbasis")
    window = 2.0 * math.pi / delta_est
    times = rng.uniform(0.0, window, size=reps)

    coeffs = result.eigenvectors.conj().T @ s.amplitudes
    phases = np.exp(-1j * result.eigenvalues * times.sum())
    post = result.eigenvectors @ (phases * coeffs)

    # cluster eigenvalues, then aggregate populations per cluster
    tol = 1e-9 * max(1.0, result.norm)
    boundaries = np.where(np.diff(result.eigenvalues) > tol)[0]
    starts = np.concatenate(([0], boundaries + 1))
    ends = np.concatenate((boundaries + 1, [result.eigenvalues.size]))
    cluster_values = np.array(
        [result.eigenvalues[a:b].mean() for a, b in zip(starts, ends)]
    )
    populations = np.array(
        [float(np.sum(np.abs(coeffs[a:b]) ** 2)) for a, b in zip(starts, ends)]
    )
    omegas = cluster_values - cluster_values[0]
    suppression = np.ones_like(omegas)
    nonzero = np.abs(omegas) > 1e-15
    phase_full = np.exp(-1j * omegas[nonzero] * window)
    suppression[nonzero] = np.abs((1.0 - phase_full) / (1j * omegas[nonzero] * window)) ** reps

    return PhaseRandomization(
        populations=populations,
        cluster_values=cluster_values,
        suppression_to_ground=suppression,
        times=times,
        total_time=float(times.sum()),
        post=StateVector(post, s.factor_shape),
    )


@dataclass
class SearchConfig:
    family: str
    n: int
    mode: str = "exact_projective"
    trials: int = 1000
    seed: int = 0
    c_constant: float = math.pi
    reps: int = 3
    count_queries: bool = True
    trotter_order: int = 1
    query_error_target: float = 1e-3


@dataclass
class SearchOutcome:
    family: str
    n: int
    mode: str
    trials: int
    seed: int
    success_count: int
    empirical_p_s: float
    p_nu_zeta: float  # min over marked strings
    p_x_zeta: float
    p_s_lower: float
    delta: float
    measured_T: float
    oracle_count: int | None
    c_constant: float


def build_family_circuit(family: str, n: int, x: str) -> Circuit:
    if family == "modified_grover":
        return build_modified_grover(n, x)
    if family == "controlled_grover":
        q = optimal_grover_iterations(n)
        return build_controlled_grover(n, x, l0=2 * q, length=4 * q)
    raise ValueError(f"unsupported family {family!r}; choose from {FAMILIES}")


@dataclass
class _Instance:
    circuit: Circuit
    zeta: HistoryState
    nu: StateVector
    p_nu: float
    p_x: float


def _prepare_instances(family: str, n: int) -> tuple[dict[str, _Instance], float]:
    instances = {}
    delta = None
    for index in range(2**n):
        x = format(index, f"0{n}b")
        c = build_family_circuit(family, n, x)
        zeta = build_history_state(c)
        nu = reference_state(c)
        p_nu, p_x = overlap_probabilities(zeta, nu, x)
        instances[x] = _Instance(c, zeta, nu, p_nu, p_x)
        if delta is None:
            # the spectrum is circuit independent, one instance fixes the gap
            delta = spectral_gap(eigendecompose(build_standard(c), want_vectors=False)).gap
    return instances, float(delta)


def _measurement_query_cost(c: Circuit, t: float, cfg: SearchConfig) -> int:
    from .gadget import calibrate_steps

    _, entry = calibrate_steps(
        c,
        t=t,
        target_error=cfg.query_error_target,
        order=cfg.trotter_order,
        seed=cfg.seed,
    )
    return entry.oracle_count


def run_generalized_search(cfg: SearchConfig) -> SearchOutcome:
    """Run the three-step protocol ``cfg.trials`` times and tally successes.

    Each trial draws its own marked string and randomness from a child
    stream keyed by the trial index, so results are reproducible and
    order independent. In phase_randomization mode each ground-state
    measurement is charged T = c_constant/gap of evolution time, and the
    equivalent fractional-oracle query cost (calibrated once against the
    Trotter machinery at error target 1e-3) is accumulated per trial.
    """
    if cfg.family not in FAMILIES:
        raise ValueError(f"unsupported family {cfg.family!r}; choose from {FAMILIES}")
    if cfg.mode not in MODES:
        raise ValueError(f"unsupported mode {cfg.mode!r}; choose from {MODES}")
    if cfg.trials < 1:
        raise ValueError(f"need at least one trial, got {cfg.trials}")

    instances, delta = _prepare_instances(cfg.family, cfg.n)
    p_nu_min = min(inst.p_nu for inst in instances.values())
    p_x_min = min(inst.p_x for inst in instances.values())

    t_per_measurement = cfg.c_constant / delta
    queries_per_measurement = 0
    if cfg.mode == "phase_randomization" and cfg.count_queries:
        first = instances[format(0, f"0{cfg.n}b")]
        queries_per_measurement = _measurement_query_cost(
            first.circuit, t_per_measurement, cfg
        )

    successes = 0
    total_time = 0.0
    oracle_count = 0
    labels = sorted(instances)
    for trial in range(cfg.trials):
        rng = rng_from(cfg.seed, trial)
        x = labels[int(rng.integers(len(labels)))]
        inst = instances[x]
        state = inst.nu
        ground = inst.zeta.state.amplitudes

        amp = np.vdot(ground, state.amplitudes)
        p = float(min(1.0, abs(amp) ** 2))
        if rng.random() < p:
            state = inst.zeta.state
        else:
            rest = state.amplitudes - amp * ground
            state = StateVector(rest / np.linalg.norm(rest), state.factor_shape)
        if cfg.mode == "phase_randomization":
            total_time += t_per_measurement
            oracle_count += queries_per_measurement

        clock_factor = len(state.factor_shape) - 1
        after_clock = sample_basis(state, clock_factor, rng)
        system_factor = 1 if inst.circuit.has_control_ancilla else 0
        after_system = sample_basis(after_clock.post, system_factor, rng)
        if after_system.outcome == int(x, 2):
            successes += 1

    return SearchOutcome(
        family=cfg.family,
        n=cfg.n,
        mode=cfg.mode,
        trials=cfg.trials,
        seed=cfg.seed,
        success_count=successes,
        empirical_p_s=successes / cfg.trials,
        p_nu_zeta=p_nu_min,
        p_x_zeta=p_x_min,
        p_s_lower=p_nu_min * p_x_min,
        delta=delta,
        measured_T=total_time,
        oracle_count=oracle_count if cfg.mode == "phase_randomization" else None,
        c_constant=cfg.c_constant,
    )


@dataclass
class AssumptionRow:
    n: int
    length: int
    p_nu_zeta: float
    p_x_zeta: float


@dataclass
class AssumptionProfile:
    family: str
    rows: list[AssumptionRow] = field(default_factory=list)
    theta_flag: bool = False  # all minima clear the constant floor


def assumption_profile(family: str, n_values) -> AssumptionProfile:
    """Minimum overlaps over all marked strings, per register size."""
    profile = AssumptionProfile(family=family)
    for n in n_values:
        instances, _ = _prepare_instances(family, int(n))
        profile.rows.append(
            AssumptionRow(
                n=int(n),
                length=next(iter(instances.values())).circuit.length,
                p_nu_zeta=min(i.p_nu for i in instances.values()),
                p_x_zeta=min(i.p_x for i in instances.values()),
            )
        )
    profile.theta_flag = all(
        row.p_nu_zeta >= THETA_FLOOR and row.p_x_zeta >= THETA_FLOOR
        for row in profile.rows
    )
    return profile
