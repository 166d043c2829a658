"""Fractional oracle queries via a measure-and-retry ancilla gadget.

The oracle enters the clock Hamiltonian only through the split term
coupling * O_X (x) P_c. Rotating the clock register into the eigenbasis
of P_c turns evolution under that term into independent single-qubit
problems, one per clock eigenvalue lambda_k: apply e^{-i theta_k O_X}
with theta_k = s * lambda_k. The gadget realizes all of these fractional
oracle powers simultaneously with a *single* controlled call to the full
(g = 1) oracle:

    attach ancilla |0>, rotate by R1(k), apply O_X controlled on the
    ancilla, rotate by R2(k), measure the ancilla.

On outcome 0 the register operator is exactly e^{-i theta_k O_X} / C
with one common renormalization C = max_k (|cos theta_k| + |sin theta_k|),
so the success branch equals the target evolution on the nose and the
success probability is 1/C^2 regardless of the input state. On outcome 1
the attempt failed; the caller restores its checkpoint and retries with
a fresh ancilla, paying one more oracle call. Choosing the rotations
this way (rather than minimizing the per-level failure probability)
is what makes the renormalization level independent; without that the
success branch would distort the relative weight of the clock
eigenspaces and the error of a Trotterized evolution would stall at a
constant floor.

Everything downstream (Trotterized evolution, step calibration, query
counting against evolution time) builds on this primitive and reports
its oracle usage through ``QueryLedger``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .circuit import Circuit, StateVector
from .errors import CapacityError, NonConvergenceError
from .hamiltonian import OracleSplit, oracle_split
from .limits import DENSE_ASSEMBLE_CAP
from .seeding import resolve_rng, rng_from

DOMAIN_TOL = 1e-9
_GUARD = 1e-12
MAX_ATTEMPTS = 10_000


@dataclass
class GadgetKernel:
    """Per-level ancilla rotations with a shared renormalization.

    For level k the success operator is alpha_k gamma_k I + beta_k
    delta_k O = (cos theta_k I - i sin theta_k O) / C and the failure
    operator is -alpha_k conj(delta_k) I + beta_k conj(gamma_k) O.
    """

    thetas: np.ndarray
    big_c: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray

    @property
    def success_probability(self) -> float:
        return 1.0 / self.big_c**2

    def r1(self, k: int) -> np.ndarray:
        a, b = self.alpha[k], self.beta[k]
        return np.array([[a, -b], [b, a]], dtype=complex)

    def r2(self, k: int) -> np.ndarray:
        g, d = self.gamma[k], self.delta[k]
        return np.array([[g, d], [-np.conj(d), np.conj(g)]], dtype=complex)

    def success_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """(identity weight, oracle weight) arrays of the success branch."""
        return self.alpha * self.gamma, self.beta * self.delta

    def failure_coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        return -self.alpha * np.conj(self.delta), self.beta * np.conj(self.gamma)


def build_kernel(thetas) -> GadgetKernel:
    """Solve for the rotation angles that share one renormalization.

    Unitarity of R2 pins u = alpha^2 to a root of u^2 - (1 + p - q) u + p
    with p = cos^2(theta)/C^2 and q = sin^2(theta)/C^2. The discriminant
    is nonnegative exactly when C >= |cos theta| + |sin theta|, which the
    shared C = max_k(...) satisfies for every level, so the construction
    never leaves the reals. The smaller root is evaluated in the
    cancellation-free form 2p / (S + sqrt(S^2 - 4p)).
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.max(np.abs(thetas)) > math.pi + DOMAIN_TOL:
        raise ValueError(
            f"fractional step leaves the |s * lambda| <= pi domain"
            f" (largest angle {np.max(np.abs(thetas)):.6g})"
        )
    cos = np.cos(thetas)
    sin = np.sin(thetas)
    big_c = float(np.max(np.abs(cos) + np.abs(sin)))
    p = cos**2 / big_c**2
    q = sin**2 / big_c**2
    s = 1.0 + p - q
    disc = np.clip(s * s - 4.0 * p, 0.0, None)
    u = np.clip(2.0 * p / (s + np.sqrt(disc)), 0.0, 1.0)
    alpha = np.sqrt(u)
    beta = np.sqrt(1.0 - u)

    gamma = np.zeros_like(thetas, dtype=complex)
    delta = np.zeros_like(thetas, dtype=complex)
    ok_a = alpha > _GUARD
    ok_b = beta > _GUARD
    gamma[ok_a] = cos[ok_a] / (big_c * alpha[ok_a])
    delta[ok_b] = -1j * sin[ok_b] / (big_c * beta[ok_b])
    # alpha and beta cannot vanish together; fill each degenerate entry
    # from the other column so R2 stays unitary
    gamma[~ok_a] = np.sqrt(np.clip(1.0 - np.abs(delta[~ok_a]) ** 2, 0.0, None))
    delta[~ok_b] = -1j * np.sqrt(np.clip(1.0 - np.abs(gamma[~ok_b]) ** 2, 0.0, None))

    drift = np.max(np.abs(np.abs(gamma) ** 2 + np.abs(delta) ** 2 - 1.0))
    if drift > 1e-9:
        raise ValueError(f"rotation construction lost unitarity by {drift:.3g}")
    return GadgetKernel(
        thetas=thetas, big_c=big_c, alpha=alpha, beta=beta, gamma=gamma, delta=delta
    )


@dataclass
class CouplingDiagonalization:
    """Clock-side eigenbasis of the oracle coupling pattern.

    ``v`` maps clock amplitudes into the eigenbasis (v P v^dag diagonal);
    ``lambdas`` are the eigenvalues in the rotated order.
    """

    v: np.ndarray
    lambdas: np.ndarray

    @property
    def dim(self) -> int:
        return self.lambdas.size

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.lambdas))) if self.lambdas.size else 0.0


def _coupling_pattern(split) -> np.ndarray:
    pattern = getattr(split, "p_clock", None)
    if pattern is None:
        pattern = split.p_clock_ancilla
    if sp.issparse(pattern):
        pattern = pattern.toarray()
    return np.asarray(pattern, dtype=complex)


def diagonalize_coupling(split) -> CouplingDiagonalization:
    pattern = _coupling_pattern(split)
    lambdas, q = np.linalg.eigh(pattern)
    return CouplingDiagonalization(v=q.conj().T, lambdas=lambdas)


@dataclass
class GadgetResult:
    success: bool
    post: StateVector
    success_probability: float
    outcome: str


@dataclass
class QueryLedger:
    """Running count of oracle calls, with one row per completed run."""

    oracle_count: int = 0
    rows: list = field(default_factory=list)

    def charge(self, calls: int = 1) -> None:
        self.oracle_count += calls


@dataclass
class LedgerEntry:
    t: float
    oracle_count: int
    steps: int
    error: float
    order: int
    seed: int


def gadget_step(
    state: StateVector,
    s_param: float,
    lambdas,
    oracle_op,
    seed_or_rng,
    ledger: QueryLedger | None = None,
    kernel: GadgetKernel | None = None,
) -> GadgetResult:
    """One gadget attempt in the frame where the clock coupling is diagonal.

    The last state factor must already be expressed in the eigenbasis of
    the coupling pattern (see ``fractional_oracle`` for the wrapped
    version). Costs exactly one oracle call, charged to ``ledger``.
    """
    rng = resolve_rng(seed_or_rng)
    lambdas = np.asarray(lambdas, dtype=float)
    k = lambdas.size
    if state.amplitudes.size % k:
        raise ValueError(
            f"state of dimension {state.amplitudes.size} does not factor"
            f" over {k} coupling levels"
        )
    if kernel is None:
        kernel = build_kernel(s_param * lambdas)
    mat = state.amplitudes.reshape(-1, k)
    omat = oracle_op @ mat
    a_id, a_or = kernel.success_coefficients()
    succ = mat * a_id + omat * a_or
    p = float(np.real(np.vdot(succ, succ)))
    if ledger is not None:
        ledger.charge()
    if rng.random() < p:
        post = succ.ravel() / math.sqrt(p)
        return GadgetResult(True, StateVector(post, state.factor_shape), p, "success")
    b_id, b_or = kernel.failure_coefficients()
    fail = (mat * b_id + omat * b_or).ravel()
    fail = fail / np.linalg.norm(fail)
    return GadgetResult(False, StateVector(fail, state.factor_shape), p, "failure")


@dataclass
class FractionalResult:
    state: StateVector
    attempts: int
    success_probability: float


def fractional_oracle(
    state: StateVector,
    s_param: float,
    source,
    seed_or_rng,
    ledger: QueryLedger | None = None,
    diag: CouplingDiagonalization | None = None,
    max_attempts: int = MAX_ATTEMPTS,
) -> FractionalResult:
    """Apply e^{-i s_param O_X (x) P} by repeat-until-success gadget runs.

    ``source`` is an oracle split (plain or amplified) or a circuit, in
    which case its split is built first. Failed attempts restart from the
    stored input state; every attempt costs one oracle call.
    """
    if isinstance(source, Circuit):
        source = oracle_split(source)
    if diag is None:
        diag = diagonalize_coupling(source)
    rng = resolve_rng(seed_or_rng)
    k = diag.dim
    kernel = build_kernel(s_param * diag.lambdas)
    rotated = StateVector(
        (state.amplitudes.reshape(-1, k) @ diag.v.T).ravel(), state.factor_shape
    )
    attempts = 0
    while True:
        attempts += 1
        if attempts > max_attempts:
            raise NonConvergenceError(
                f"gadget failed {max_attempts} consecutive attempts"
            )
        result = gadget_step(
            rotated, s_param, diag.lambdas, source.oracle_op, rng, ledger, kernel
        )
        if result.success:
            break
    out = (result.post.amplitudes.reshape(-1, k) @ np.conj(diag.v)).ravel()
    return FractionalResult(
        StateVector(out, state.factor_shape), attempts, result.success_probability
    )


@dataclass
class TrotterResult:
    state: StateVector
    error: float
    t: float
    steps: int
    order: int
    oracle_count: int
    seed: int


@dataclass
class _EvolutionContext:
    circuit: Circuit
    split: OracleSplit
    diag: CouplingDiagonalization
    h_rest: np.ndarray
    h_full: np.ndarray
    factor_shape: tuple


def _prepare_context(c: Circuit) -> _EvolutionContext:
    split = oracle_split(c, g=1.0)
    dim = split.sys_dim * split.clock_dim
    if dim > DENSE_ASSEMBLE_CAP:
        raise CapacityError(
            f"trotter evolution needs dense exponentials; dimension {dim}"
            f" exceeds the dense cap {DENSE_ASSEMBLE_CAP}"
        )
    if c.has_control_ancilla:
        shape = (2, 2**c.n, split.clock_dim)
    else:
        shape = (2**c.n, split.clock_dim)
    return _EvolutionContext(
        circuit=c,
        split=split,
        diag=diagonalize_coupling(split),
        h_rest=split.h_rest.toarray(),
        h_full=split.reassembled().toarray(),
        factor_shape=shape,
    )


def _random_unit(dim: int, rng) -> np.ndarray:
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def _evolve(
    ctx: _EvolutionContext,
    psi0: np.ndarray,
    t: float,
    steps: int,
    order: int,
    rng,
    ledger: QueryLedger | None,
    max_attempts: int = MAX_ATTEMPTS,
) -> tuple[np.ndarray, int]:
    """Product-formula evolution; returns the state and the oracle calls.

    The split term is applied exactly through the gadget, so the only
    error is the product-formula commutator error. Failed gadget
    attempts retry from the checkpointed pre-attempt state, which leaves
    the trajectory deterministic in psi0; randomness moves the oracle
    count only.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    tau = t / steps
    s_step = ctx.split.coupling * tau
    kernel = build_kernel(s_step * ctx.diag.lambdas)
    a_id, a_or = kernel.success_coefficients()
    v_in = ctx.diag.v.T
    v_out = np.conj(ctx.diag.v)
    oracle = ctx.split.oracle_op
    k = ctx.diag.dim

    calls = 0

    def frac(flat: np.ndarray) -> np.ndarray:
        nonlocal calls
        mat = flat.reshape(-1, k) @ v_in
        succ = mat * a_id + (oracle @ mat) * a_or
        p = float(np.real(np.vdot(succ, succ)))
        for _ in range(max_attempts):
            calls += 1
            if ledger is not None:
                ledger.charge()
            if rng.random() < p:
                break
        else:
            raise NonConvergenceError(
                f"gadget failed {max_attempts} consecutive attempts"
            )
        return ((succ / math.sqrt(p)) @ v_out).ravel()

    psi = psi0
    if order == 1:
        e_full = expm(-1j * tau * ctx.h_rest)
        for _ in range(steps):
            psi = e_full @ frac(psi)
    else:
        e_half = expm(-1j * 0.5 * tau * ctx.h_rest)
        e_full = expm(-1j * tau * ctx.h_rest)
        psi = e_half @ psi
        for step in range(steps):
            psi = frac(psi)
            if step < steps - 1:
                psi = e_full @ psi
        psi = e_half @ psi
    return psi, calls


def _resolve_initial(ctx: _EvolutionContext, initial, seed: int) -> np.ndarray:
    if initial is None:
        return _random_unit(ctx.h_full.shape[0], rng_from(seed, 0))
    if isinstance(initial, StateVector):
        return initial.amplitudes
    vec = np.asarray(initial, dtype=complex)
    return vec / np.linalg.norm(vec)


def trotter_simulate(
    c: Circuit,
    t: float,
    steps: int,
    order: int = 1,
    seed: int = 0,
    ledger: QueryLedger | None = None,
    initial=None,
) -> TrotterResult:
    """Evolve under the standard Hamiltonian with gadget-powered oracles.

    Splits e^{-i t H} into ``steps`` product-formula slices, applying the
    oracle part exactly via the fractional gadget and the remainder by a
    dense exponential. The reported error is the Euclidean distance to
    the exact evolution of the same initial state (a seeded random unit
    vector by default; the history state itself is stationary and would
    show no error at all).
    """
    ctx = _prepare_context(c)
    psi0 = _resolve_initial(ctx, initial, seed)
    exact = expm(-1j * t * ctx.h_full) @ psi0
    psi, calls = _evolve(ctx, psi0, t, steps, order, rng_from(seed, 1, steps), ledger)
    error = float(np.linalg.norm(psi - exact))
    result = TrotterResult(
        state=StateVector(psi, ctx.factor_shape),
        error=error,
        t=t,
        steps=steps,
        order=order,
        oracle_count=calls,
        seed=seed,
    )
    if ledger is not None:
        ledger.rows.append(
            LedgerEntry(t=t, oracle_count=calls, steps=steps, error=error, order=order, seed=seed)
        )
    return result


MAX_CALIBRATION_STEPS = 2**20


def calibrate_steps(
    c: Circuit,
    t: float,
    target_error: float,
    order: int = 1,
    seed: int = 0,
    start: int = 1,
    max_steps: int = MAX_CALIBRATION_STEPS,
    ledger: QueryLedger | None = None,
) -> tuple[int, LedgerEntry]:
    """Smallest step count whose product-formula error meets the target.

    Doubles the step count until the error drops below ``target_error``,
    then bisects for the minimum. The trajectory is deterministic in the
    seed, so probe runs are exact predictions of the final run, whose
    ledger entry is returned.
    """
    if target_error <= 0:
        raise ValueError(f"target error must be positive, got {target_error}")
    ctx = _prepare_context(c)
    psi0 = _random_unit(ctx.h_full.shape[0], rng_from(seed, 0))
    exact = expm(-1j * t * ctx.h_full) @ psi0

    domain_floor = ctx.split.coupling * abs(t) * ctx.diag.max_abs / math.pi
    floor = max(1, int(math.ceil(domain_floor - DOMAIN_TOL)))
    probe_from = max(start, floor)

    def error_at(r: int) -> float:
        psi, _ = _evolve(ctx, psi0, t, r, order, rng_from(seed, 1, r), None)
        return float(np.linalg.norm(psi - exact))

    r = probe_from
    while error_at(r) > target_error:
        if r >= max_steps:
            raise NonConvergenceError(
                f"error target {target_error} not reached within {max_steps} steps"
            )
        r = min(2 * r, max_steps)

    lo = max(probe_from, r // 2) if r > probe_from else probe_from
    hi = r
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if error_at(mid) <= target_error:
            hi = mid
        else:
            lo = mid
    best = hi if hi > probe_from else probe_from

    own = ledger if ledger is not None else QueryLedger()
    trotter_simulate(c, t, best, order=order, seed=seed, ledger=own)
    return best, own.rows[-1]


def query_sweep(
    c: Circuit,
    ts,
    target_error: float = 1e-3,
    order: int = 1,
    seed: int = 0,
    ledger: QueryLedger | None = None,
) -> list[LedgerEntry]:
    """Calibrated oracle cost of reaching each evolution time in ``ts``."""
    entries = []
    for t in ts:
        _, entry = calibrate_steps(
            c, float(t), target_error, order=order, seed=seed, ledger=ledger
        )
        entries.append(entry)
    return entries


@dataclass
class GammaFit:
    gamma: float
    intercept: float
    r_squared: float
    n_points: int


def fit_query_exponent(rows) -> GammaFit:
    """Least-squares exponent of oracle count against evolution time.

    Fits log(count) = gamma log(t) + b. First-order splitting lands near
    gamma = 2 and second order near 1.5 once t is large enough for the
    error bound to bind.
    """
    ts = np.array([row.t for row in rows], dtype=float)
    counts = np.array([row.oracle_count for row in rows], dtype=float)
    if ts.size < 2:
        raise ValueError("need at least two ledger rows to fit an exponent")
    if np.any(ts <= 0) or np.any(counts <= 0):
        raise ValueError("evolution times and oracle counts must be positive")
    x = np.log(ts)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot < 1e-30 else 1.0 - ss_res / ss_tot
    return GammaFit(float(slope), float(intercept), r_squared, int(ts.size))


@dataclass
class FidelityRow:
    s_param: float
    fidelity: float
    success_probability: float
    renormalization: float
    attempts: int


def gadget_fidelity(c: Circuit, s_values, seed: int = 0) -> list[FidelityRow]:
    """Success-branch fidelity against the exact fractional evolution.

    For each s the gadget output on a seeded random state is compared
    with e^{-i s O_X (x) P_c} applied exactly; the construction makes the
    branch exact, so fidelities sit at 1 up to floating-point noise.
    """
    split = oracle_split(c, g=1.0)
    diag = diagonalize_coupling(split)
    dim = split.sys_dim * split.clock_dim
    if c.has_control_ancilla:
        shape = (2, 2**c.n, split.clock_dim)
    else:
        shape = (2**c.n, split.clock_dim)
    psi0 = _random_unit(dim, rng_from(seed, 2))
    state = StateVector(psi0, shape)
    coupling_dense = np.kron(split.oracle_op, split.p_clock)
    rows = []
    for s in s_values:
        s = float(s)
        target = expm(-1j * s * coupling_dense) @ psi0
        run = fractional_oracle(state, s, split, rng_from(seed, 3), diag=diag)
        fid = float(abs(np.vdot(target, run.state.amplitudes)))
        kernel = build_kernel(s * diag.lambdas)
        rows.append(
            FidelityRow(
                s_param=s,
                fidelity=fid,
                success_probability=run.success_probability,
                renormalization=kernel.big_c,
                attempts=run.attempts,
            )
        )
    return rows
