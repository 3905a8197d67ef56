"""Shared fixtures: the seeded instance battery and brute-force helpers.

The brute-force helpers here enumerate configurations with plain Python /
itertools so they stay independent of the library code paths they check.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from scanneal.model import IsingModel


def random_model(rng: np.random.Generator, n: int, edge_prob: float = 0.5) -> IsingModel:
    edges = []
    for x in range(n):
        for y in range(x + 1, n):
            if rng.random() < edge_prob:
                j = rng.uniform(-1.0, 1.0)
                if j != 0.0:
                    edges.append((x, y, j))
    h = rng.uniform(-1.0, 1.0, size=n)
    return IsingModel(n, edges, h)


def make_battery(count: int = 20, seed: int = 20240817) -> list[IsingModel]:
    """Fixed battery of random sparse instances, n cycling through 2..6."""
    rng = np.random.default_rng(seed)
    sizes = [2, 3, 4, 5, 6]
    return [random_model(rng, sizes[i % len(sizes)]) for i in range(count)]


@pytest.fixture(scope="session")
def battery():
    return make_battery()


@pytest.fixture
def triangle():
    """Ferromagnetic triangle, all J = 1, no fields."""
    return IsingModel(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


# ---------------------------------------------------------------------------
# independent brute-force oracles
# ---------------------------------------------------------------------------

def brute_energy(model: IsingModel, sigma) -> float:
    total = 0.0
    for (x, y), j in model.couplings.items():
        total -= j * sigma[x] * sigma[y]
    for x in range(model.n):
        total -= model.fields[x] * sigma[x]
    return total


def enumerate_spins(n):
    for combo in itertools.product((-1, 1), repeat=n):
        yield np.array(combo, dtype=np.int8)


def brute_ground_states(model: IsingModel, tol: float = 1e-9):
    """All minimizing configurations and the minimum energy, by enumeration."""
    configs = list(enumerate_spins(model.n))
    energies = [brute_energy(model, s) for s in configs]
    emin = min(energies)
    return [s for s, e in zip(configs, energies) if e <= emin + tol], emin


def state_index(sigma) -> int:
    """Bit x set iff sigma_x = +1 (the shared indexing convention)."""
    return sum(1 << x for x, s in enumerate(sigma) if s > 0)
