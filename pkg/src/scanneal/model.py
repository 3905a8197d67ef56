"""Ising problem instances: couplings, fields, spin configurations, energies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_array

SPIN_DTYPE = np.int8


class ModelError(ValueError):
    """Invalid model construction or mismatched dimensions."""


def as_spins(values) -> np.ndarray:
    """Validate and return a +/-1 spin configuration as an int8 array."""
    sigma = np.asarray(values, dtype=SPIN_DTYPE)
    if sigma.ndim != 1:
        raise ModelError(f"spin configuration must be 1-d, got shape {sigma.shape}")
    if not np.all(np.abs(sigma) == 1):
        raise ModelError("spin values must be exactly +1 or -1")
    return sigma


class IsingModel:
    """Ising instance on a simple graph: sparse symmetric couplings J and fields h.

    Energy of a configuration sigma in {+1,-1}^n is

        H(sigma) = - sum_{edges {x,y}} J_xy sigma_x sigma_y - sum_x h_x sigma_x

    with each unordered edge counted once.  Couplings are keyed by unordered
    pairs, so symmetry holds by construction; self-edges and duplicate pairs
    are rejected, zero-weight edges are dropped.  Instances are immutable
    after construction and safe to share across threads.
    """

    def __init__(self, n: int, edges=(), fields=None):
        """Build a model from edge triples (x, y, J) and a field vector.

        Args:
            n: number of vertices (0-based dense labels).
            edges: iterable of (x, y, J) with x != y, each unordered pair at
                most once.
            fields: length-n vector h, defaults to zero.
        """
        if n < 1:
            raise ModelError(f"vertex count must be positive, got {n}")
        self.n = int(n)
        if fields is None:
            self.fields = np.zeros(self.n)
        else:
            self.fields = np.asarray(fields, dtype=float).copy()
            if self.fields.shape != (self.n,):
                raise ModelError(
                    f"fields must have length {self.n}, got shape {self.fields.shape}"
                )
        couplings: dict[tuple[int, int], float] = {}
        for x, y, j in edges:
            x, y = int(x), int(y)
            if not (0 <= x < self.n and 0 <= y < self.n):
                raise ModelError(f"edge ({x},{y}) out of range for n={self.n}")
            if x == y:
                raise ModelError(f"self-edge at vertex {x} is not allowed")
            key = (min(x, y), max(x, y))
            if key in couplings:
                raise ModelError(f"duplicate edge {key}")
            j = float(j)
            if j != 0.0:
                couplings[key] = j
        self.couplings = couplings
        self._coupling_matrix = self._build_matrix()
        self.fields.setflags(write=False)

    def _build_matrix(self) -> csr_array:
        if self.couplings:
            keys = np.array(sorted(self.couplings), dtype=np.int64)
            vals = np.array([self.couplings[tuple(k)] for k in keys])
            rows = np.concatenate([keys[:, 0], keys[:, 1]])
            cols = np.concatenate([keys[:, 1], keys[:, 0]])
            data = np.concatenate([vals, vals])
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            data = np.zeros(0)
        return csr_array((data, (rows, cols)), shape=(self.n, self.n))

    @property
    def coupling_matrix(self) -> csr_array:
        """Symmetric sparse matrix J with zero diagonal."""
        return self._coupling_matrix

    def abs_row_sums(self) -> np.ndarray:
        """Vector of sum_y |J_xy| per vertex."""
        m = self._coupling_matrix
        return np.asarray(abs(m).sum(axis=1)).reshape(self.n)

    def neighbors(self, x: int) -> np.ndarray:
        """Vertices y with J_xy != 0."""
        self._check_vertex(x)
        m = self._coupling_matrix
        return m.indices[m.indptr[x] : m.indptr[x + 1]].copy()

    def _check_vertex(self, x: int):
        if not 0 <= x < self.n:
            raise IndexError(f"vertex {x} out of range for n={self.n}")

    def __repr__(self):
        return f"IsingModel(n={self.n}, edges={len(self.couplings)})"


@dataclass(frozen=True)
class PinningVector:
    """Per-vertex pinning strengths q_x >= 0 with a note on how they were built."""

    q: np.ndarray
    provenance: str = "explicit"

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1:
            raise ModelError(f"pinning vector must be 1-d, got shape {q.shape}")
        if np.any(q < 0):
            raise ModelError("pinning parameters must be non-negative")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)


def _check_length(model: IsingModel, sigma: np.ndarray, name: str = "sigma"):
    if sigma.shape != (model.n,):
        raise ModelError(
            f"{name} has shape {sigma.shape}, expected ({model.n},)"
        )


def energy(model: IsingModel, sigma: np.ndarray) -> float:
    """H(sigma), each unordered edge counted once."""
    _check_length(model, sigma)
    s = sigma.astype(float)
    pair = -0.5 * s @ (model.coupling_matrix @ s)
    return float(pair - model.fields @ s)


def cavity_field(model: IsingModel, sigma: np.ndarray, x: int) -> float:
    """Local effective field at x: sum_y J_xy sigma_y + h_x."""
    model._check_vertex(x)
    _check_length(model, sigma)
    m = model.coupling_matrix
    lo, hi = m.indptr[x], m.indptr[x + 1]
    return float(m.data[lo:hi] @ sigma[m.indices[lo:hi]] + model.fields[x])


def cavity_fields(model: IsingModel, sigma: np.ndarray) -> np.ndarray:
    """All cavity fields at once: J sigma + h."""
    _check_length(model, sigma)
    return model.coupling_matrix @ sigma.astype(float) + model.fields


def extended_energy(model: IsingModel, q: PinningVector, sigma, tau) -> float:
    """Two-replica energy whose diagonal recovers H up to a constant.

    H~(sigma, tau) = -1/2 sigma' J tau - 1/2 h.(sigma + tau)
                     - 1/2 sum_x q_x sigma_x tau_x

    Symmetric in (sigma, tau); H~(s, s) = H(s) - 1/2 sum_x q_x.
    """
    _check_length(model, sigma)
    _check_length(model, tau, "tau")
    s = sigma.astype(float)
    t = tau.astype(float)
    pair = -0.5 * s @ (model.coupling_matrix @ t)
    field = -0.5 * model.fields @ (s + t)
    pin = -0.5 * np.sum(q.q * s * t)
    return float(pair + field + pin)


def flip(sigma: np.ndarray, x: int) -> np.ndarray:
    """Copy of sigma with the spin at x negated."""
    if not 0 <= x < len(sigma):
        raise IndexError(f"vertex {x} out of range for n={len(sigma)}")
    out = sigma.copy()
    out[x] = -out[x]
    return out


def disagreement(sigma: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Sorted vertices at which sigma and tau differ."""
    if sigma.shape != tau.shape:
        raise ModelError(
            f"configurations have shapes {sigma.shape} and {tau.shape}"
        )
    return np.flatnonzero(sigma != tau)
