"""Pinning-vector construction and the min-on-diagonal verification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import IsingModel, PinningVector, energy

DENSE_EIG_LIMIT = 64
MIN_DIAGONAL_LIMIT = 14
GS_TIE_TOL = 1e-9


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge; carries the best estimate."""

    def __init__(self, message, best_estimate):
        super().__init__(message)
        self.best_estimate = best_estimate


@dataclass(frozen=True)
class SpectralInfo:
    """Largest eigenvalue of [-J] with the method used and accuracy reached."""

    lambda_max: float
    method: str  # "dense-exact" or "power-iteration"
    tolerance: float


def largest_eigenvalue(model: IsingModel) -> SpectralInfo:
    """Largest eigenvalue of the matrix [-J_xy].

    Dense eigendecomposition for small instances; shifted power iteration
    with a Rayleigh-quotient stopping rule otherwise.  The shift
    s = max_x sum_y |J_xy| (Gershgorin bound) makes -J + sI positive
    semidefinite so the target eigenvalue is dominant and the iteration
    cannot oscillate between a +/- eigenvalue pair.
    """
    if not model.couplings:
        return SpectralInfo(0.0, "dense-exact", 0.0)
    if model.n <= DENSE_EIG_LIMIT:
        dense = -model.coupling_matrix.toarray()
        lam = float(np.linalg.eigvalsh(dense)[-1])
        return SpectralInfo(lam, "dense-exact", 1e-10)
    a = -model.coupling_matrix
    s = float(model.abs_row_sums().max())
    # deterministic start; the perturbation breaks accidental orthogonality
    v = np.ones(model.n) + 1e-3 * np.cos(np.arange(model.n))
    v /= np.linalg.norm(v)
    tol = 1e-10 * (1.0 + s)
    rho_prev = np.inf
    cap = 100 * model.n
    for _ in range(cap):
        w = a @ v + s * v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return SpectralInfo(-s, "power-iteration", tol)
        v = w / norm
        rho = float(v @ (a @ v + s * v))
        if abs(rho - rho_prev) <= tol:
            return SpectralInfo(rho - s, "power-iteration", tol)
        rho_prev = rho
    raise PowerIterationError(
        f"power iteration did not converge within {cap} iterations",
        best_estimate=rho_prev - s,
    )


def build_pinning(model: IsingModel, members=None, slack: float = 1.0) -> PinningVector:
    """Minimal pinning vector for the sufficient min-on-diagonal condition.

    For x in the chosen vertex set C:
        q_x = sum_y |J_xy| - 1/2 sum_{y in C} |J_xy|
    and q_x = lambda/2 outside C, where lambda is the top eigenvalue of [-J].
    ``members=None`` means C = V, which needs no eigensolve.  ``slack``
    multiplies the minimal choice (must be >= 1).
    """
    if slack < 1.0:
        raise ValueError(f"slack factor must be >= 1, got {slack}")
    if members is None:
        in_c = np.ones(model.n, dtype=bool)
        tag = "spectral(C=V)"
    else:
        members = np.asarray(sorted(set(int(x) for x in members)), dtype=np.int64)
        if members.size and (members[0] < 0 or members[-1] >= model.n):
            raise IndexError("pinning set C contains out-of-range vertices")
        in_c = np.zeros(model.n, dtype=bool)
        in_c[members] = True
        tag = f"spectral(C={{{','.join(map(str, members))}}})"
    q = np.zeros(model.n)
    abs_j = abs(model.coupling_matrix)
    row_tot = np.asarray(abs_j.sum(axis=1)).reshape(model.n)
    row_in_c = abs_j @ in_c.astype(float)
    q[in_c] = row_tot[in_c] - 0.5 * row_in_c[in_c]
    if not in_c.all():
        lam = largest_eigenvalue(model).lambda_max
        q[~in_c] = max(lam, 0.0) / 2.0
    return PinningVector(np.maximum(q, 0.0) * slack, provenance=tag)


@dataclass(frozen=True)
class MinDiagonalReport:
    """Outcome of the exhaustive scan of the two-replica energy surface."""

    holds: bool
    min_diagonal: float
    min_offdiagonal: float
    witness: tuple[np.ndarray, np.ndarray] | None = None
    ground_states: list[int] = field(default_factory=list)


def verify_min_diagonal(
    model: IsingModel, q: PinningVector, tol: float = GS_TIE_TOL
) -> MinDiagonalReport:
    """Exhaustively check that H~ attains its minimum on the diagonal.

    Scans all 4^n configuration pairs in row blocks (never materializing the
    full pair matrix), and checks that the diagonal minimizers are exactly
    the ground states of H.  On failure the report carries a witness pair
    with H~(sigma, tau) below the diagonal minimum.
    """
    if model.n > MIN_DIAGONAL_LIMIT:
        raise ValueError(
            f"exhaustive scan limited to n <= {MIN_DIAGONAL_LIMIT}, got n={model.n}"
        )
    from .exactlab import all_configurations

    spins = all_configurations(model.n).astype(float)
    m = 1 << model.n
    # H~(s,t) = -1/2 s'(J + diag(q))t - 1/2 h.(s+t)
    jq = model.coupling_matrix @ spins.T + q.q[:, None] * spins.T  # (n, m)
    hs = spins @ model.fields  # (m,)
    diag = np.array([
        -0.5 * spins[i] @ jq[:, i] - hs[i] for i in range(m)
    ])
    min_diag = float(diag.min())
    gs_energy = min(energy(model, row.astype(np.int8)) for row in spins)
    gs = [i for i in range(m) if diag[i] <= min_diag + tol]
    # diagonal identity makes argmin H~(s,s) == argmin H(s); assert it anyway
    half_q = 0.5 * float(q.q.sum())
    assert abs(min_diag - (gs_energy - half_q)) <= tol * (1 + abs(gs_energy))

    min_off = np.inf
    witness = None
    block = max(1, (1 << 22) // m)
    for lo in range(0, m, block):
        hi = min(lo + block, m)
        rows = -0.5 * spins[lo:hi] @ jq - 0.5 * (hs[lo:hi, None] + hs[None, :])
        for k in range(lo, hi):
            rows[k - lo, k] = np.inf  # exclude the diagonal
        idx = np.unravel_index(np.argmin(rows), rows.shape)
        val = float(rows[idx])
        if val < min_off:
            min_off = val
            witness = (lo + int(idx[0]), int(idx[1]))
    holds = min_off >= min_diag - tol
    report_witness = None
    if not holds:
        i, j = witness
        report_witness = (spins[i].astype(np.int8), spins[j].astype(np.int8))
    return MinDiagonalReport(
        holds=holds,
        min_diagonal=min_diag,
        min_offdiagonal=min_off,
        witness=report_witness,
        ground_states=gs,
    )
