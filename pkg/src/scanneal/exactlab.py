"""Brute-force laboratory: exact distributions, kernels, total-variation
distances, Dobrushin coefficients and mixing times for instances small
enough to enumerate.  Everything works in log-space with max-shifts so
inverse temperatures up to 1e6 stay finite.

Configuration indexing convention, used everywhere: bit x of the state
index is set iff sigma_x = +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .model import IsingModel, PinningVector, energy

DISTRIBUTION_LIMIT = 14
KERNEL_LIMIT = 10
JOINT_LIMIT = 7
GS_TIE_TOL = 1e-9

_LOG2 = math.log(2.0)


def _check_size(n: int, limit: int, what: str):
    if n > limit:
        raise ValueError(f"{what} limited to n <= {limit}, got n={n}")


def all_configurations(n: int) -> np.ndarray:
    """All 2^n spin configurations, row i matching state index i."""
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def _log2cosh(a: np.ndarray) -> np.ndarray:
    # log(2 cosh a) without overflow
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a))


def _all_energies(model: IsingModel) -> np.ndarray:
    spins = all_configurations(model.n).astype(float)
    js = spins @ model.coupling_matrix  # row i = J sigma_i
    return -0.5 * np.einsum("ij,ij->i", spins, js) - spins @ model.fields


def _all_cavity_fields(model: IsingModel) -> np.ndarray:
    spins = all_configurations(model.n).astype(float)
    return spins @ model.coupling_matrix + model.fields


@dataclass(frozen=True)
class ExactDistribution:
    """Log-weight table over all 2^n configurations."""

    n: int
    log_weights: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - logsumexp(self.log_weights))


@dataclass(frozen=True)
class ExactKernel:
    """Full 2^n x 2^n row-stochastic transition matrix."""

    n: int
    rows: np.ndarray


def gibbs_distribution(model: IsingModel, beta: float) -> ExactDistribution:
    """Weights e^{-beta H(sigma)}."""
    _check_size(model.n, DISTRIBUTION_LIMIT, "exact distributions")
    return ExactDistribution(model.n, -beta * _all_energies(model))


def sca_distribution(
    model: IsingModel, q: PinningVector, beta: float
) -> ExactDistribution:
    """Stationary distribution of the synchronous chain:
    w(sigma) = prod_x 2 e^{(beta/2) h_x sigma_x} cosh((beta/2)(h~_x + q_x sigma_x))."""
    _check_size(model.n, DISTRIBUTION_LIMIT, "exact distributions")
    spins = all_configurations(model.n).astype(float)
    m = 0.5 * beta * (_all_cavity_fields(model) + q.q * spins)
    logw = 0.5 * beta * (spins @ model.fields) + _log2cosh(m).sum(axis=1)
    return ExactDistribution(model.n, logw)


def sca_kernel(model: IsingModel, q: PinningVector, beta: float) -> ExactKernel:
    """Transition matrix of the synchronous chain, entry (sigma, tau) =
    prod_x e^{(beta/2)(h~_x(sigma)+q_x sigma_x) tau_x} / (2 cosh(...))."""
    _check_size(model.n, KERNEL_LIMIT, "exact kernels")
    spins = all_configurations(model.n).astype(float)
    m = 0.5 * beta * (_all_cavity_fields(model) + q.q * spins)  # (2^n, n)
    log_rows = m @ spins.T - _log2cosh(m).sum(axis=1)[:, None]
    return ExactKernel(model.n, np.exp(log_rows))


def glauber_kernel(model: IsingModel, beta: float) -> ExactKernel:
    """Single-site heat-bath transition matrix: off-diagonal mass only to
    Hamming-1 neighbors."""
    _check_size(model.n, KERNEL_LIMIT, "exact kernels")
    n = model.n
    size = 1 << n
    spins = all_configurations(n).astype(float)
    a = beta * _all_cavity_fields(model) * spins
    flip = expit(-2.0 * a) / n  # (2^n, n); expit keeps tiny probs accurate
    rows = np.zeros((size, size))
    idx = np.arange(size)
    for x in range(n):
        rows[idx, idx ^ (1 << x)] += flip[:, x]
    rows[idx, idx] = 1.0 - rows.sum(axis=1)
    return ExactKernel(n, rows)


def binomial_kernel(
    model: IsingModel, q: PinningVector, beta: float, epsilon: float
) -> ExactKernel:
    """Transition matrix of the constant-epsilon binomial-subset chain: each
    vertex independently flips with probability epsilon * p_x(sigma)."""
    _check_size(model.n, KERNEL_LIMIT, "exact kernels")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0,1), got {epsilon}")
    n = model.n
    size = 1 << n
    spins = all_configurations(n).astype(float)
    a = 0.5 * beta * _all_cavity_fields(model) * spins
    f = epsilon * expit(-2.0 * a)  # per-vertex flip prob, (2^n, n)
    rows = np.empty((size, size))
    idx = np.arange(size)
    for i in range(size):
        d = ((idx ^ i)[:, None] >> np.arange(n)) & 1  # flip indicators
        rows[i] = np.prod(np.where(d == 1, f[i], 1.0 - f[i]), axis=1)
    return ExactKernel(n, rows)


def epsilon_factor(
    model: IsingModel, q: PinningVector, beta: float, sigma
) -> np.ndarray:
    """Per-vertex factor splitting the synchronous flip probability into
    epsilon_x(sigma) * p_x(sigma):

    epsilon_x(sigma) = e^{-beta q_x / 2} cosh((beta/2) h~_x)
                       / cosh((beta/2)(h~_x + q_x sigma_x)).
    """
    from .model import cavity_fields

    h = cavity_fields(model, sigma)
    log_eps = (
        -0.5 * beta * q.q
        + _log2cosh(0.5 * beta * h)
        - _log2cosh(0.5 * beta * (h + q.q * sigma))
    )
    return np.exp(log_eps)


def _as_probs(p) -> np.ndarray:
    if isinstance(p, ExactDistribution):
        return p.probabilities()
    return np.asarray(p, dtype=float)


def tv_distance(p, q) -> float:
    """Total-variation distance, 1/2 sum |p - q|; cross-checked against the
    overlap form 1 - sum min(p, q)."""
    pv, qv = _as_probs(p), _as_probs(q)
    if pv.shape != qv.shape:
        raise ValueError("distributions must have the same support size")
    half_l1 = 0.5 * float(np.abs(pv - qv).sum())
    overlap = 1.0 - float(np.minimum(pv, qv).sum())
    if abs(half_l1 - overlap) > 1e-12:
        raise AssertionError(
            f"TV forms disagree: {half_l1} vs {overlap}"
        )
    return half_l1


def dobrushin(kernel: ExactKernel) -> float:
    """Ergodic coefficient: max over row pairs of their TV distance."""
    rows = kernel.rows
    worst = 0.0
    for i in range(rows.shape[0] - 1):
        d = 0.5 * np.abs(rows[i + 1 :] - rows[i]).sum(axis=1).max()
        worst = max(worst, float(d))
    return worst


class MixingTimeCapExceeded(RuntimeError):
    pass


def tv_profile(kernel: ExactKernel, stationary, t_max: int) -> np.ndarray:
    """Worst-case TV to stationarity after t = 1 .. t_max steps."""
    pi = _as_probs(stationary)
    pt = kernel.rows
    out = np.empty(t_max)
    for t in range(t_max):
        out[t] = 0.5 * np.abs(pt - pi).sum(axis=1).max()
        if t + 1 < t_max:
            pt = pt @ kernel.rows
    return out


def exact_mixing_time(
    kernel: ExactKernel, stationary, epsilon_tv: float, cap: int = 10**6
) -> int:
    """Smallest t with max_sigma TV(P^t(sigma, .), pi) <= epsilon_tv."""
    pi = _as_probs(stationary)
    if 0.5 * np.abs(np.eye(len(pi)) - pi).sum(axis=1).max() <= epsilon_tv:
        return 0
    pt = kernel.rows.copy()
    for t in range(1, cap + 1):
        if 0.5 * np.abs(pt - pi).sum(axis=1).max() <= epsilon_tv:
            return t
        pt = pt @ kernel.rows
    raise MixingTimeCapExceeded(f"no mixing within {cap} steps")


def extended_energy_matrix(model: IsingModel, q: PinningVector) -> np.ndarray:
    """Full table of the two-replica energy over all configuration pairs."""
    spins = all_configurations(model.n).astype(float)
    jq = spins @ model.coupling_matrix + q.q * spins  # row i = (J + diag q) s_i
    hs = spins @ model.fields
    return -0.5 * spins @ jq.T - 0.5 * (hs[:, None] + hs[None, :])


def joint_measure(model: IsingModel, q: PinningVector, beta: float) -> np.ndarray:
    """Normalized joint measure proportional to e^{-beta H~(sigma, tau)},
    exponentiated after subtracting the global minimum of H~."""
    _check_size(model.n, JOINT_LIMIT, "joint measures")
    ext = extended_energy_matrix(model, q)
    w = np.exp(-beta * (ext - ext.min()))
    return w / w.sum()


def uniform_gs(model: IsingModel) -> ExactDistribution:
    """Uniform distribution over the enumerated ground states (ties within
    1e-9 absolute)."""
    _check_size(model.n, DISTRIBUTION_LIMIT, "exact distributions")
    energies = _all_energies(model)
    gs = energies <= energies.min() + GS_TIE_TOL
    logw = np.where(gs, 0.0, -np.inf)
    return ExactDistribution(model.n, logw)


@dataclass(frozen=True)
class OrderPreservationReport:
    """Result of the pairwise energy-ordering scan."""

    holds: bool
    energy_range: float
    violations: list[tuple[int, int]] = field(default_factory=list)


def order_preservation_check(
    model: IsingModel, q: PinningVector, beta: float, epsilon: float
) -> OrderPreservationReport:
    """Check that ranking states by the synchronous chain's stationary
    probability misorders energies by at most epsilon * range(H):

        pi(sigma) >= pi(tau)  =>  H(sigma) <= H(tau) + epsilon * R_H.
    """
    _check_size(model.n, KERNEL_LIMIT, "order-preservation scans")
    energies = _all_energies(model)
    r_h = float(energies.max() - energies.min())
    if r_h == 0.0:
        return OrderPreservationReport(holds=True, energy_range=0.0)
    logw = sca_distribution(model, q, beta).log_weights
    higher = logw[:, None] >= logw[None, :]
    slack = 1e-12 * (1.0 + r_h)
    too_high = energies[:, None] > energies[None, :] + epsilon * r_h + slack
    bad = np.argwhere(higher & too_high)
    return OrderPreservationReport(
        holds=bad.size == 0,
        energy_range=r_h,
        violations=[(int(i), int(j)) for i, j in bad],
    )


def epsilon_close_pinning(
    model: IsingModel, beta: float, epsilon: float, r_h: float | None = None
) -> PinningVector:
    """Minimal pinning strengths guaranteeing epsilon-order-preservation:

        q_x = |h_x| + sum_y |J_xy|
              + (1/beta) log(2 n (|h_x| + sum_y |J_xy|) / (epsilon R_H))

    clamped at 0 (vertices with no field and no couplings need no pinning).
    R_H is enumerated unless supplied.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if r_h is None:
        _check_size(model.n, DISTRIBUTION_LIMIT, "energy-range enumeration")
        energies = _all_energies(model)
        r_h = float(energies.max() - energies.min())
    if epsilon * r_h <= 0.0:
        raise ValueError(
            f"epsilon * R_H must be positive, got {epsilon} * {r_h}"
        )
    a = np.abs(model.fields) + model.abs_row_sums()
    with np.errstate(divide="ignore"):
        log_term = np.log(2.0 * model.n * a / (epsilon * r_h))
    q = np.where(a > 0.0, a + log_term / beta, 0.0)
    return PinningVector(
        np.maximum(q, 0.0), provenance=f"order-preserving(eps={epsilon})"
    )
