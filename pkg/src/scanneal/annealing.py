"""Cooling schedules and the annealing driver.

The driver runs the time-inhomogeneous chain X_1, X_2, ... where X_1 is the
initial configuration and the update into time t uses the schedule's
beta_t.  Replicas (one per seed) advance in lockstep as rows of a single
spin matrix; because every uniform is a pure function of (seed, t, vertex),
each replica's trajectory is identical to a standalone single-seed run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import block_uniforms
from .model import IsingModel, PinningVector


class ScheduleError(ValueError):
    """Invalid schedule parameters."""


@dataclass(frozen=True)
class Schedule:
    """A non-decreasing inverse-temperature sequence beta_1 .. beta_T."""

    kind: str  # "fixed" | "log" | "exp"
    horizon: int
    beta: float = 0.0  # fixed
    gamma: float = 0.0  # log: beta_t = log(t + t0 - 1) / gamma
    t0: int = 1
    beta0: float = 0.1  # exp: beta_t = min(beta_max, beta0 / ratio^(t-1))
    ratio: float = 0.999
    beta_max: float = 50.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ScheduleError(f"horizon must be >= 1, got {self.horizon}")
        if self.kind == "fixed":
            if self.beta < 0:
                raise ScheduleError(f"fixed beta must be >= 0, got {self.beta}")
        elif self.kind == "log":
            if self.gamma <= 0:
                raise ScheduleError(
                    f"logarithmic schedule needs gamma > 0, got {self.gamma}"
                )
            if self.t0 < 1:
                raise ScheduleError(f"t0 must be >= 1, got {self.t0}")
        elif self.kind == "exp":
            if self.beta0 <= 0 or not 0.0 < self.ratio < 1.0:
                raise ScheduleError(
                    f"exponential schedule needs beta0 > 0 and ratio in (0,1)"
                )
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "fixed":
            return f"fixed(beta={self.beta:g},T={self.horizon})"
        if self.kind == "log":
            return f"log(gamma={self.gamma:g},t0={self.t0},T={self.horizon})"
        return (
            f"exp(beta0={self.beta0:g},ratio={self.ratio:g},"
            f"beta_max={self.beta_max:g},T={self.horizon})"
        )


def fixed_schedule(beta: float, horizon: int) -> Schedule:
    return Schedule(kind="fixed", horizon=horizon, beta=beta)


def log_schedule(gamma: float, horizon: int, t0: int = 1) -> Schedule:
    return Schedule(kind="log", horizon=horizon, gamma=gamma, t0=t0)


def exp_schedule(
    horizon: int,
    beta0: float = 0.1,
    ratio: float = 0.999,
    beta_max: float = 50.0,
) -> Schedule:
    return Schedule(
        kind="exp", horizon=horizon, beta0=beta0, ratio=ratio, beta_max=beta_max
    )


def beta_at(schedule: Schedule, t: int) -> float:
    """The schedule's inverse temperature at step t (1-based)."""
    if not 1 <= t <= schedule.horizon:
        raise ScheduleError(f"step {t} outside [1, {schedule.horizon}]")
    if schedule.kind == "fixed":
        return schedule.beta
    if schedule.kind == "log":
        return math.log(t + schedule.t0 - 1) / schedule.gamma
    return min(schedule.beta_max, schedule.beta0 / schedule.ratio ** (t - 1))


def gamma_constant(model: IsingModel, q: PinningVector):
    """The logarithmic-schedule constant Gamma = sum_x Gamma_x with
    Gamma_x = q_x + |h_x| + sum_y |J_xy|.  Returns (Gamma, per-vertex)."""
    per_vertex = q.q + np.abs(model.fields) + model.abs_row_sums()
    return float(per_vertex.sum()), per_vertex


@dataclass
class AnnealResult:
    """Best-found configuration of one annealing run plus metadata."""

    best_config: np.ndarray
    best_energy: float
    seed: int
    sampler_kind: str
    schedule: str
    trajectory: list[tuple[int, float, float, int]] = field(default_factory=list)


_DENSE_LIMIT = 1024


def _coupling_operator(model: IsingModel):
    # dense matmul beats sparse dispatch overhead at desk scale
    if model.n <= _DENSE_LIMIT:
        return model.coupling_matrix.toarray()
    return model.coupling_matrix


def _batch_energies(model: IsingModel, spins: np.ndarray, j_op=None) -> np.ndarray:
    s = spins.astype(float)
    js = s @ (j_op if j_op is not None else model.coupling_matrix)
    return -0.5 * np.einsum("ij,ij->i", s, js) - s @ model.fields


def _batch_cavity(model: IsingModel, spins: np.ndarray, j_op=None) -> np.ndarray:
    return spins.astype(float) @ (
        j_op if j_op is not None else model.coupling_matrix
    ) + model.fields


_CHUNK = 256


def anneal_replicas(
    model: IsingModel,
    q: PinningVector,
    schedule: Schedule,
    sampler_kind: str,
    seeds,
    epsilon: float | None = None,
    initial=None,
    record_every: int = 0,
) -> list[AnnealResult]:
    """Run one annealing replica per seed, all in lockstep.

    Each replica starts from a uniform random configuration drawn from its
    own seed (a separate key, so it never collides with step uniforms) unless ``initial`` is
    given, and tracks its best-so-far configuration.  ``record_every`` > 0
    down-samples the trajectory to every k-th step.
    """
    if sampler_kind not in ("sca", "glauber", "binomial"):
        raise ValueError(f"unknown sampler kind {sampler_kind!r}")
    if sampler_kind == "binomial" and (
        epsilon is None or not 0.0 < epsilon < 1.0
    ):
        raise ValueError(f"binomial sampler needs epsilon in (0,1), got {epsilon}")
    seeds = [int(s) for s in seeds]
    k, n = len(seeds), model.n
    words = {"sca": n, "glauber": 2, "binomial": 2 * n}[sampler_kind]

    if initial is None:
        u0 = np.stack([
            np.random.Generator(np.random.Philox(key=[s, 1])).random(n)
            for s in seeds
        ])
        spins = np.where(u0 < 0.5, 1, -1).astype(np.int8)
    else:
        spins = np.tile(np.asarray(initial, dtype=np.int8), (k, 1))

    j_op = _coupling_operator(model)
    energies = _batch_energies(model, spins, j_op)
    best_e = energies.copy()
    best_s = spins.copy()
    results = [
        AnnealResult(
            best_config=None,
            best_energy=0.0,
            seed=s,
            sampler_kind=sampler_kind,
            schedule=schedule.describe(),
        )
        for s in seeds
    ]
    if record_every > 0:
        for i in range(k):
            results[i].trajectory.append((1, beta_at(schedule, 1), float(energies[i]), 0))

    t = 2
    while t <= schedule.horizon:
        hi = min(t + _CHUNK, schedule.horizon + 1)
        blocks = np.stack([
            block_uniforms(s, t, hi - t, words) for s in seeds
        ])  # (k, chunk, words)
        for j, tt in enumerate(range(t, hi)):
            beta = beta_at(schedule, tt)
            u = blocks[:, j, :]
            cav = _batch_cavity(model, spins, j_op)
            if sampler_kind == "sca":
                p = 0.5 * (1.0 + np.tanh(0.5 * beta * (cav + q.q * spins)))
                new = np.where(u <= p, 1, -1).astype(np.int8)
            elif sampler_kind == "glauber":
                x = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
                a = beta * cav[np.arange(k), x] * spins[np.arange(k), x]
                p_flip = 0.5 * (1.0 - np.tanh(a))
                new = spins.copy()
                do = u[:, 1] < p_flip
                new[do, x[do]] = -new[do, x[do]]
            else:
                a = 0.5 * beta * cav * spins
                p = 0.5 * (1.0 - np.tanh(a))
                do = (u[:, :n] < epsilon) & (u[:, n:] < p)
                new = spins.copy()
                new[do] = -new[do]
            flips = np.count_nonzero(new != spins, axis=1)
            spins = new
            energies = _batch_energies(model, spins, j_op)
            improved = energies < best_e
            best_e[improved] = energies[improved]
            best_s[improved] = spins[improved]
            if record_every > 0 and (tt % record_every == 0 or tt == schedule.horizon):
                for i in range(k):
                    results[i].trajectory.append(
                        (tt, beta, float(energies[i]), int(flips[i]))
                    )
        t = hi

    for i in range(k):
        results[i].best_config = best_s[i].copy()
        results[i].best_energy = float(best_e[i])
    return results


def anneal(
    model: IsingModel,
    q: PinningVector,
    schedule: Schedule,
    sampler_kind: str,
    seed: int,
    epsilon: float | None = None,
    initial=None,
    record_every: int = 0,
) -> AnnealResult:
    """Single-seed annealing run; see anneal_replicas."""
    return anneal_replicas(
        model, q, schedule, sampler_kind, [seed],
        epsilon=epsilon, initial=initial, record_every=record_every,
    )[0]


def empirical_state_distribution(
    model: IsingModel,
    q: PinningVector,
    schedule: Schedule,
    sampler_kind: str,
    seeds,
    t_checkpoints,
    epsilon: float | None = None,
) -> dict[int, np.ndarray]:
    """Histogram of replica states at the requested checkpoints.

    Checkpoint t is the distribution of X_t, where X_1 is the initial
    configuration; only feasible for n <= 6.
    """
    if model.n > 6:
        raise ValueError(f"state histograms limited to n <= 6, got n={model.n}")
    checkpoints = sorted(set(int(t) for t in t_checkpoints))
    if checkpoints and not 1 <= checkpoints[0] <= checkpoints[-1] <= schedule.horizon:
        raise ScheduleError("checkpoints must lie in [1, horizon]")
    seeds = [int(s) for s in seeds]
    k, n = len(seeds), model.n
    weights = (1 << np.arange(n)).astype(np.int64)
    size = 1 << n

    u0 = np.stack([
        np.random.Generator(np.random.Philox(key=[s, 1])).random(n)
        for s in seeds
    ])
    spins = np.where(u0 < 0.5, 1, -1).astype(np.int8)

    j_op = _coupling_operator(model)
    out: dict[int, np.ndarray] = {}

    def snapshot(t):
        idx = (spins > 0).astype(np.int64) @ weights
        out[t] = np.bincount(idx, minlength=size) / k

    if checkpoints and checkpoints[0] == 1:
        snapshot(1)
    t = 2
    remaining = [c for c in checkpoints if c >= 2]
    words = {"sca": n, "glauber": 2, "binomial": 2 * n}[sampler_kind]
    while t <= schedule.horizon and remaining:
        hi = min(t + _CHUNK, schedule.horizon + 1)
        blocks = np.stack([block_uniforms(s, t, hi - t, words) for s in seeds])
        for j, tt in enumerate(range(t, hi)):
            beta = beta_at(schedule, tt)
            u = blocks[:, j, :]
            cav = _batch_cavity(model, spins, j_op)
            if sampler_kind == "sca":
                p = 0.5 * (1.0 + np.tanh(0.5 * beta * (cav + q.q * spins)))
                spins = np.where(u <= p, 1, -1).astype(np.int8)
            elif sampler_kind == "glauber":
                x = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
                a = beta * cav[np.arange(k), x] * spins[np.arange(k), x]
                do = u[:, 1] < 0.5 * (1.0 - np.tanh(a))
                spins = spins.copy()
                spins[do, x[do]] = -spins[do, x[do]]
            else:
                a = 0.5 * beta * cav * spins
                do = (u[:, :n] < epsilon) & (u[:, n:] < 0.5 * (1.0 - np.tanh(a)))
                spins = spins.copy()
                spins[do] = -spins[do]
            if remaining and tt == remaining[0]:
                snapshot(tt)
                remaining.pop(0)
        t = hi
    return out


def divergence_surrogate(gamma: float, horizon: int) -> float:
    """Partial sum of e^{-beta_t Gamma} under the logarithmic schedule,
    the quantity whose divergence drives the annealing theorem (it equals
    the harmonic sum when beta_t = log t / Gamma)."""
    sched = log_schedule(gamma, horizon)
    t = np.arange(1, horizon + 1, dtype=float)
    betas = np.log(t + sched.t0 - 1) / gamma
    return float(np.exp(-betas * gamma).sum())
