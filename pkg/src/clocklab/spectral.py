"""Eigenspectra, gaps, and gap-scaling fits.

Dense Hermitian diagonalization is used up to dimension 2**12; beyond
that the 16 lowest eigenpairs come from ARPACK on the sparse operator.
Gap extraction clusters eigenvalues at a tolerance proportional to the
operator norm, so degenerate ground spaces are handled explicitly rather
than by luck.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergenceError
from .limits import DENSE_EIG_CAP

DEFAULT_K = 16
_HERMITICITY_TOL = 1e-10


@dataclass
class SpectralResult:
    """Ascending eigenvalues, optional eigenvectors, and quality numbers."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    residual: float
    norm: float
    method: str
    dim: int

    @property
    def complete(self) -> bool:
        return self.eigenvalues.size == self.dim


@dataclass
class GapReport:
    lambda0: float
    lambda1: float
    gap: float
    ground_degeneracy: int
    cluster_tol: float


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


@dataclass
class PathPoint:
    g: float
    lambda0: float
    gap: float


@dataclass
class PathScan:
    points: list[PathPoint]
    min_gap: float
    argmin_g: float


class _Operator:
    """Uniform view over ClockHamiltonian-like objects, arrays, sparse."""

    def __init__(self, h):
        if hasattr(h, "sparse") and hasattr(h, "dim"):
            self.dim = h.dim
            self._sparse = h.sparse()
            self._bound = h.norm_bound() if hasattr(h, "norm_bound") else None
        elif sp.issparse(h):
            self.dim = h.shape[0]
            self._sparse = h.tocsr()
            self._bound = None
        else:
            arr = np.asarray(h, dtype=complex)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValueError(f"expected a square operator, got shape {arr.shape}")
            self.dim = arr.shape[0]
            self._sparse = sp.csr_matrix(arr)
            self._bound = None

    def dense(self) -> np.ndarray:
        return self._sparse.toarray()

    def sparse(self) -> sp.csr_matrix:
        return self._sparse

    def check_hermitian(self):
        drift = abs(self._sparse - self._sparse.getH()).max()
        scale = max(1.0, abs(self._sparse).max())
        if drift > _HERMITICITY_TOL * scale:
            raise ValueError(f"operator is not Hermitian (drift {drift:.3e})")

    def norm_estimate(self, eigenvalues: np.ndarray) -> float:
        by_columns = float(abs(self._sparse).sum(axis=0).max())  # bounds the 2-norm
        est = by_columns
        if self._bound is not None:
            est = min(est, self._bound)
        if eigenvalues.size:
            est = max(est, float(np.max(np.abs(eigenvalues))))
        return est


def eigendecompose(h, want_vectors: bool = True, k: int = DEFAULT_K, solver: str = "auto") -> SpectralResult:
    """Eigenvalues (and vectors) of a Hermitian operator.

    ``solver`` is "auto" (dense up to the cap, iterative above), "dense",
    or "iterative". The iterative path returns the ``k`` lowest pairs.
    Residuals are checked against 1e-8 * max(1, norm); iterative
    non-convergence raises NonConvergenceError.
    """
    op = _Operator(h)
    op.check_hermitian()
    if solver not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown solver {solver!r}")
    use_dense = solver == "dense" or (solver == "auto" and op.dim <= DENSE_EIG_CAP)

    if use_dense:
        matrix = op.dense()
        if want_vectors:
            vals, vecs = np.linalg.eigh(matrix)
        else:
            vals, vecs = np.linalg.eigvalsh(matrix), None
        norm = float(np.max(np.abs(vals))) if vals.size else 0.0
        method = "dense"
    else:
        matrix = op.sparse()
        k_eff = min(k, op.dim - 1)
        ncv = min(op.dim, max(2 * k_eff + 1, 40))
        # Lanczos annihilates components at eigenvalue exactly 0 (A^j v loses
        # them after the first step), and 0 is the typical ground value here,
        # so solve the strictly positive shifted operator and shift back.
        shift = 1.0 + float(abs(matrix).sum(axis=0).max())
        shifted = (matrix + shift * sp.identity(op.dim, dtype=complex, format="csr")).tocsr()
        try:
            vals, vecs = spla.eigsh(shifted, k=k_eff, which="SA", ncv=ncv, maxiter=100000)
        except spla.ArpackNoConvergence as exc:
            raise NonConvergenceError(f"iterative eigensolver did not converge: {exc}")
        vals = vals - shift
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        if not want_vectors:
            vecs = None
        norm = op.norm_estimate(vals)
        method = "iterative"

    residual = 0.0
    if vecs is not None and vals.size:
        residual = float(np.max(np.linalg.norm(matrix @ vecs - vecs * vals, axis=0)))
        if residual > 1e-8 * max(1.0, norm):
            raise NonConvergenceError(
                f"eigenpair residual {residual:.3e} exceeds tolerance"
            )
    return SpectralResult(
        eigenvalues=np.asarray(vals, dtype=float),
        eigenvectors=vecs,
        residual=residual,
        norm=norm,
        method=method,
        dim=op.dim,
    )


def analytic_feynman_spectrum(length: int, n: int) -> SpectralResult:
    """Closed-form spectrum of the bare transition sum for L gates, n qubits.

    The L projector terms form an open chain over the L+1 clock values
    (conjugation removes the gates), i.e. half the free-boundary path
    Laplacian, whose eigenvalues are 1 - cos(pi m / (L+1)) for m = 0..L,
    each with multiplicity 2**n. A periodically wrapped chain would give
    2 pi m / (L+1) phases instead, but no wrap term exists here: it would
    have to undo the whole circuit in one step, entangling the oracle
    dependence into every other term.
    """
    if length < 1:
        raise ValueError(f"need at least one gate, got length={length}")
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    ks = np.pi * np.arange(length + 1) / (length + 1)
    values = np.sort(np.repeat(1.0 - np.cos(ks), 2**n))
    return SpectralResult(
        eigenvalues=values,
        eigenvectors=None,
        residual=0.0,
        norm=float(values[-1]) if values.size else 0.0,
        method="analytic",
        dim=values.size,
    )


def _cluster_tol(result: SpectralResult, cluster_tol: float | None) -> float:
    if cluster_tol is not None:
        return cluster_tol
    return 1e-9 * max(1.0, result.norm)


def spectral_gap(result: SpectralResult, cluster_tol: float | None = None) -> GapReport:
    """Gap between the lowest eigenvalue cluster and the next one."""
    vals = result.eigenvalues
    if vals.size < 2:
        raise ValueError("need at least two eigenvalues to report a gap")
    tol = _cluster_tol(result, cluster_tol)
    lam0 = float(vals[0])
    above = vals[vals > lam0 + tol]
    if above.size == 0:
        raise ValueError(
            "all computed eigenvalues fall in the ground cluster; "
            "no gap is resolvable at this tolerance"
        )
    lam1 = float(above[0])
    degeneracy = int(vals.size - above.size)
    return GapReport(lam0, lam1, lam1 - lam0, degeneracy, tol)


def gap_to_state(h, state, cluster_tol: float | None = None) -> GapReport:
    """Distance from the eigenvalue of ``state`` to the rest of the spectrum.

    ``state`` must be an eigenvector (residual checked); its whole
    eigenvalue cluster is excluded, so degeneracy of that eigenvalue does
    not shrink the reported gap.
    """
    vec = np.asarray(getattr(state, "amplitudes", state), dtype=complex).ravel()
    op = _Operator(h)
    if vec.size != op.dim:
        raise ValueError(f"state dimension {vec.size} does not match operator {op.dim}")
    vec = vec / np.linalg.norm(vec)
    matrix = op.sparse()
    image = matrix @ vec
    lam_s = float(np.real(np.vdot(vec, image)))
    norm_guess = max(1.0, float(np.linalg.norm(image)))
    residual = float(np.linalg.norm(image - lam_s * vec))
    if residual > 1e-8 * norm_guess:
        raise ValueError(
            f"state is not an eigenvector: residual {residual:.3e}"
            f" at Rayleigh value {lam_s:.6e}"
        )

    if op.dim <= DENSE_EIG_CAP:
        result = eigendecompose(op.sparse(), want_vectors=True)
    else:
        try:
            vals, vecs = spla.eigsh(matrix, k=min(DEFAULT_K, op.dim - 1), sigma=lam_s, which="LM")
        except spla.ArpackNoConvergence as exc:
            raise NonConvergenceError(f"shift-invert eigensolver did not converge: {exc}")
        order = np.argsort(vals)
        result = SpectralResult(
            eigenvalues=np.asarray(vals[order], dtype=float),
            eigenvectors=vecs[:, order],
            residual=0.0,
            norm=op.norm_estimate(vals),
            method="iterative",
            dim=op.dim,
        )

    tol = _cluster_tol(result, cluster_tol)
    vals = result.eigenvalues
    in_cluster = np.abs(vals - lam_s) <= tol
    if result.eigenvectors is not None and np.any(in_cluster):
        # exclude by eigenspace overlap, not only by eigenvalue proximity
        basis = result.eigenvectors[:, in_cluster]
        overlaps = np.abs(basis.conj().T @ result.eigenvectors) ** 2
        in_cluster = overlaps.sum(axis=0) >= 0.5
    outside = vals[~in_cluster]
    if outside.size == 0:
        raise ValueError("no eigenvalues outside the state's cluster were computed")
    gap = float(np.min(np.abs(outside - lam_s)))
    return GapReport(
        lambda0=lam_s,
        lambda1=lam_s + gap,
        gap=gap,
        ground_degeneracy=int(np.sum(in_cluster)),
        cluster_tol=tol,
    )


def fit_gap_scaling(points) -> ScalingFit:
    """Least-squares power-law fit gap = C * L^slope through (L, gap) pairs."""
    pts = [(float(l), float(g)) for l, g in points]
    if len(pts) < 3:
        raise ValueError(f"need at least 3 points for a scaling fit, got {len(pts)}")
    if any(l <= 0 or g <= 0 for l, g in pts):
        raise ValueError("scaling fit needs positive lengths and gaps")
    logl = np.log([l for l, _ in pts])
    logg = np.log([g for _, g in pts])
    slope, intercept = np.polyfit(logl, logg, 1)
    fitted = slope * logl + intercept
    ss_res = float(np.sum((logg - fitted) ** 2))
    ss_tot = float(np.sum((logg - logg.mean()) ** 2))
    if ss_tot < 1e-300:
        r2 = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return ScalingFit(float(slope), float(intercept), float(r2), len(pts))


@dataclass
class ConsistencyRow:
    length: int
    gap: float
    lower_bound: float
    margin: float


@dataclass
class ConsistencyReport:
    """Check of measured gaps against the inverse-square lower bound.

    The constant c2 is anchored so the smallest measured length
    saturates gap = c2 / L^2; consistency then requires every other
    length to stay at or above its own c2 / L^2 line (up to ``slack``)
    and the fitted exponent to sit in ``slope_band``.
    """

    c2: float
    fit: ScalingFit
    rows: list
    slope_band: tuple
    slack: float
    slope_ok: bool
    bound_ok: bool
    consistent: bool


def check_inverse_square_consistency(
    points,
    slope_band: tuple = (-2.15, -1.85),
    slack: float = 0.05,
) -> ConsistencyReport:
    """Decide whether (L, gap) data is consistent with gap = Omega(1/L^2).

    A genuinely slower decay (say gap ~ 1/sqrt(L)) passes the bound rows
    trivially but lands far outside the slope band, while a faster decay
    (gap ~ 1/L^3) fails both, so the verdict needs the two checks
    together.
    """
    pts = sorted(((int(l), float(g)) for l, g in points), key=lambda p: p[0])
    fit = fit_gap_scaling(pts)
    l0, g0 = pts[0]
    c2 = g0 * l0**2
    rows = []
    for l, g in pts:
        bound = c2 / l**2
        rows.append(
            ConsistencyRow(
                length=l, gap=g, lower_bound=bound, margin=g / bound - 1.0
            )
        )
    slope_ok = slope_band[0] <= fit.slope <= slope_band[1]
    bound_ok = all(row.margin >= -slack for row in rows)
    return ConsistencyReport(
        c2=c2,
        fit=fit,
        rows=rows,
        slope_band=tuple(slope_band),
        slack=slack,
        slope_ok=slope_ok,
        bound_ok=bound_ok,
        consistent=slope_ok and bound_ok,
    )


def gap_along_path(c, g_grid, build=None) -> PathScan:
    """Spectral gap of the interpolated Hamiltonian at each g in the grid."""
    from .hamiltonian import build_standard

    builder = build or build_standard
    gs = [float(g) for g in g_grid]
    if not gs:
        raise ValueError("empty interpolation grid")
    points = []
    for g in gs:
        report = spectral_gap(eigendecompose(builder(c, g), want_vectors=False))
        points.append(PathPoint(g=g, lambda0=report.lambda0, gap=report.gap))
    best = min(points, key=lambda p: p.gap)
    return PathScan(points=points, min_gap=best.gap, argmin_g=best.g)
