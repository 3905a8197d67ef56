"""Samplers: synchronous SCA, single-site Glauber, the binomial-subset
variant, the grand coupling, and the closed-form contraction / flip-count
quantities.

Randomness is counter-based: the uniforms consumed at step t are a pure
function of (seed, t, vertex), so trajectories are reproducible regardless
of internal vectorization, and blocks of steps can be pre-generated for
batch estimation without changing any draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .model import (
    IsingModel,
    ModelError,
    PinningVector,
    cavity_fields,
    energy,
)


class ConfigError(ValueError):
    """Invalid sampler configuration."""


@dataclass(frozen=True)
class SamplerConfig:
    """Which chain to run, at what inverse temperature, from which seed."""

    beta: float
    seed: int
    kind: str  # "sca" | "glauber" | "binomial"
    q: PinningVector | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.kind not in ("sca", "glauber", "binomial"):
            raise ConfigError(f"unknown sampler kind {self.kind!r}")
        if self.kind in ("sca", "binomial") and self.q is None:
            raise ConfigError(f"{self.kind} sampler needs a pinning vector")
        if self.kind == "binomial":
            if self.epsilon is None or not 0.0 < self.epsilon < 1.0:
                raise ConfigError(
                    f"binomial sampler needs epsilon in (0,1), got {self.epsilon}"
                )


@dataclass(frozen=True)
class StepStats:
    flips: int
    energy_after: float


# ---------------------------------------------------------------------------
# counter-based uniforms
# ---------------------------------------------------------------------------

def _blocks_per_step(count: int) -> int:
    # Philox emits 4 64-bit words per counter increment; pad so each step
    # starts on a counter boundary
    return -(-count // 4)


def step_uniforms(seed: int, step: int, count: int) -> np.ndarray:
    """The ``count`` uniforms consumed at the given step, as a pure function
    of (seed, step, position)."""
    bg = np.random.Philox(key=seed, counter=step * _blocks_per_step(count))
    return np.random.Generator(bg).random(count)


def block_uniforms(seed: int, start_step: int, nsteps: int, count: int) -> np.ndarray:
    """Uniforms for ``nsteps`` consecutive steps, shape (nsteps, count).

    Row i equals ``step_uniforms(seed, start_step + i, count)`` exactly.
    """
    bps = _blocks_per_step(count)
    bg = np.random.Philox(key=seed, counter=start_step * bps)
    flat = np.random.Generator(bg).random(nsteps * bps * 4)
    return flat.reshape(nsteps, bps * 4)[:, :count]


# ---------------------------------------------------------------------------
# per-vertex probabilities (tanh forms, safe at large beta)
# ---------------------------------------------------------------------------

def sca_flip_probability(
    model: IsingModel, q: PinningVector, sigma, x: int, beta: float
) -> float:
    """Probability that the refreshed spin at x is +1 under the synchronous
    chain: [1 + tanh(beta/2 (h~_x(sigma) + q_x sigma_x))] / 2."""
    model._check_vertex(x)
    return float(sca_plus_probabilities(model, q, beta, sigma)[x])


def sca_plus_probabilities(
    model: IsingModel, q: PinningVector, beta: float, sigma
) -> np.ndarray:
    """Vector of P(new spin at x is +1), all from the pre-step sigma."""
    h = cavity_fields(model, sigma) + q.q * sigma
    return 0.5 * (1.0 + np.tanh(0.5 * beta * h))


def _glauber_flip_probs(model: IsingModel, beta: float, sigma) -> np.ndarray:
    # e^{-beta h~ s} / (2 cosh(beta h~)) == sigmoid(-2 beta h~ s); expit
    # keeps full relative accuracy when the probability is tiny
    a = beta * cavity_fields(model, sigma) * sigma
    return expit(-2.0 * a)


def _binomial_flip_probs(model: IsingModel, beta: float, sigma) -> np.ndarray:
    # p_x(sigma) = e^{-(beta/2) h~ s} / (2 cosh((beta/2) h~))
    a = 0.5 * beta * cavity_fields(model, sigma) * sigma
    return expit(-2.0 * a)


# ---------------------------------------------------------------------------
# one-step transitions
# ---------------------------------------------------------------------------

def sca_step(model: IsingModel, config: SamplerConfig, sigma, step: int):
    """Synchronous update: every vertex refreshes independently from the
    pre-step configuration."""
    p = sca_plus_probabilities(model, config.q, config.beta, sigma)
    u = step_uniforms(config.seed, step, model.n)
    new = np.where(u <= p, 1, -1).astype(sigma.dtype)
    flips = int(np.count_nonzero(new != sigma))
    return new, StepStats(flips, energy(model, new))


def glauber_step(model: IsingModel, config: SamplerConfig, sigma, step: int):
    """Pick one vertex uniformly, flip it with the heat-bath probability."""
    u = step_uniforms(config.seed, step, 2)
    x = min(int(u[0] * model.n), model.n - 1)
    p_flip = _glauber_flip_probs(model, config.beta, sigma)[x]
    if u[1] < p_flip:
        new = sigma.copy()
        new[x] = -new[x]
        return new, StepStats(1, energy(model, new))
    return sigma.copy(), StepStats(0, energy(model, sigma))


def binomial_step(model: IsingModel, config: SamplerConfig, sigma, step: int):
    """Draw a binomial vertex subset with inclusion probability epsilon, then
    flip each selected spin with its heat-bath probability at beta/2."""
    u = step_uniforms(config.seed, step, 2 * model.n)
    selected = u[: model.n] < config.epsilon
    p = _binomial_flip_probs(model, config.beta, sigma)
    do_flip = selected & (u[model.n :] < p)
    new = sigma.copy()
    new[do_flip] = -new[do_flip]
    return new, StepStats(int(np.count_nonzero(do_flip)), energy(model, new))


def coupled_sca_step(
    model: IsingModel,
    q: PinningVector,
    beta: float,
    sigma,
    tau,
    seed: int,
    step: int,
):
    """One synchronous update of two chains sharing the same per-vertex
    uniforms; each marginal is exactly the single-chain update."""
    if sigma.shape != tau.shape:
        raise ModelError("coupled configurations must have equal length")
    u = step_uniforms(seed, step, model.n)
    p_sigma = sca_plus_probabilities(model, q, beta, sigma)
    p_tau = sca_plus_probabilities(model, q, beta, tau)
    x = np.where(u <= p_sigma, 1, -1).astype(sigma.dtype)
    y = np.where(u <= p_tau, 1, -1).astype(tau.dtype)
    return x, y


def step(model: IsingModel, config: SamplerConfig, sigma, t: int):
    """Dispatch one step of the configured sampler."""
    if config.kind == "sca":
        return sca_step(model, config, sigma, t)
    if config.kind == "glauber":
        return glauber_step(model, config, sigma, t)
    return binomial_step(model, config, sigma, t)


# ---------------------------------------------------------------------------
# batch one-step draws (for empirical kernel estimation)
# ---------------------------------------------------------------------------

def sample_one_step_states(
    model: IsingModel,
    config: SamplerConfig,
    sigma,
    num_samples: int,
    start_step: int = 0,
) -> np.ndarray:
    """State indices reached by ``num_samples`` independent one-step draws
    from sigma, using steps start_step .. start_step + num_samples - 1.

    Draw i is bit-identical to resetting the chain to sigma and calling the
    step function at step index start_step + i.  Bit x of the returned index
    is set iff the new spin at x is +1.
    """
    n = model.n
    weights = (1 << np.arange(n)).astype(np.int64)
    if config.kind == "sca":
        p = sca_plus_probabilities(model, config.q, config.beta, sigma)
        u = block_uniforms(config.seed, start_step, num_samples, n)
        plus = u <= p
        return plus.astype(np.int64) @ weights
    base = np.asarray(sigma) > 0
    base_idx = int(base.astype(np.int64) @ weights)
    if config.kind == "glauber":
        u = block_uniforms(config.seed, start_step, num_samples, 2)
        x = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
        p_flip = _glauber_flip_probs(model, config.beta, sigma)
        flip = u[:, 1] < p_flip[x]
        out = np.full(num_samples, base_idx, dtype=np.int64)
        out[flip] ^= weights[x[flip]]
        return out
    # binomial
    u = block_uniforms(config.seed, start_step, num_samples, 2 * n)
    p = _binomial_flip_probs(model, config.beta, sigma)
    do_flip = (u[:, :n] < config.epsilon) & (u[:, n:] < p)
    return base_idx ^ (do_flip.astype(np.int64) @ weights)


def sample_coupled_states(
    model: IsingModel,
    q: PinningVector,
    beta: float,
    sigma,
    tau,
    seed: int,
    num_samples: int,
    start_step: int = 0,
):
    """Pairs of state indices from repeated coupled one-step draws."""
    n = model.n
    weights = (1 << np.arange(n)).astype(np.int64)
    u = block_uniforms(seed, start_step, num_samples, n)
    p_sigma = sca_plus_probabilities(model, q, beta, sigma)
    p_tau = sca_plus_probabilities(model, q, beta, tau)
    xs = (u <= p_sigma).astype(np.int64) @ weights
    ys = (u <= p_tau).astype(np.int64) @ weights
    return xs, ys


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def contraction_rate(model: IsingModel, q: PinningVector, beta: float) -> float:
    """r = max_x [tanh(beta q_x / 2) + sum_y tanh(beta |J_xy| / 2)].

    When r < 1 the shared-uniform coupling contracts the expected
    disagreement of adjacent chains by a factor r per step.
    """
    m = model.coupling_matrix
    tanh_j = m.copy()
    tanh_j.data = np.tanh(0.5 * beta * np.abs(tanh_j.data))
    neighbor = np.asarray(tanh_j.sum(axis=1)).reshape(model.n)
    return float(np.max(np.tanh(0.5 * beta * q.q) + neighbor))


def mixing_time_bound(
    model: IsingModel, q: PinningVector, beta: float, epsilon_tv: float
):
    """ceil((log n - log eps) / log(1/r)) when r < 1, else None."""
    if not 0.0 < epsilon_tv < 1.0:
        raise ValueError(f"epsilon_tv must be in (0,1), got {epsilon_tv}")
    r = contraction_rate(model, q, beta)
    if r >= 1.0:
        return None
    if r == 0.0:
        # chains coalesce in a single step
        return 1
    return math.ceil((math.log(model.n) - math.log(epsilon_tv)) / math.log(1.0 / r))


def expected_coupled_disagreement(
    model: IsingModel, q: PinningVector, beta: float, sigma, x: int
) -> float:
    """Exact expected disagreement after one coupled step from the adjacent
    pair (sigma, sigma^x): sum_y |p(sigma, y) - p(sigma^x, y)|."""
    from .model import flip as flip_config

    p1 = sca_plus_probabilities(model, q, beta, sigma)
    p2 = sca_plus_probabilities(model, q, beta, flip_config(sigma, x))
    return float(np.abs(p1 - p2).sum())


def expected_flips_sca(
    model: IsingModel, q: PinningVector, beta: float, sigma
) -> float:
    """Mean number of spin flips in one synchronous update:
    sum_x 1 / (e^{beta (h~_x sigma_x + q_x)} + 1)."""
    a = 0.5 * beta * (cavity_fields(model, sigma) * sigma + q.q)
    return float(np.sum(0.5 * (1.0 - np.tanh(a))))


def expected_flips_glauber(model: IsingModel, beta: float, sigma) -> float:
    """Mean number of spin flips in one single-site update:
    (1/n) sum_x 1 / (e^{2 beta h~_x sigma_x} + 1)."""
    return float(np.mean(_glauber_flip_probs(model, beta, sigma)))


def more_flips_condition(model: IsingModel, q: PinningVector, beta: float) -> bool:
    """High-temperature condition under which the synchronous chain flips at
    least as many spins per update as Glauber, for every configuration:
    max_x (beta/2)(q_x + |h_x| + sum_y |J_xy|) <= log sqrt(n)."""
    lhs = 0.5 * beta * (q.q + np.abs(model.fields) + model.abs_row_sums())
    return bool(np.max(lhs) <= 0.5 * math.log(model.n))
