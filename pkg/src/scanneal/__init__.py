"""Stochastic cellular automata annealer for Ising ground-state search."""

from .model import (
    IsingModel,
    ModelError,
    PinningVector,
    as_spins,
    cavity_field,
    cavity_fields,
    disagreement,
    energy,
    extended_energy,
    flip,
)
from .pinning import (
    SpectralInfo,
    build_pinning,
    largest_eigenvalue,
    verify_min_diagonal,
)
from .dynamics import (
    SamplerConfig,
    StepStats,
    binomial_step,
    contraction_rate,
    coupled_sca_step,
    expected_flips_glauber,
    expected_flips_sca,
    glauber_step,
    mixing_time_bound,
    more_flips_condition,
    sca_flip_probability,
    sca_step,
)
from .annealing import (
    AnnealResult,
    Schedule,
    anneal,
    anneal_replicas,
    beta_at,
    exp_schedule,
    fixed_schedule,
    gamma_constant,
    log_schedule,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
