import math

import numpy as np
import pytest

from scanneal.dynamics import (
    ConfigError,
    SamplerConfig,
    binomial_step,
    block_uniforms,
    contraction_rate,
    coupled_sca_step,
    expected_coupled_disagreement,
    expected_flips_glauber,
    expected_flips_sca,
    glauber_step,
    mixing_time_bound,
    more_flips_condition,
    sample_one_step_states,
    sca_flip_probability,
    sca_step,
    step_uniforms,
)
from scanneal.model import IsingModel, PinningVector, as_spins

from conftest import enumerate_spins, random_model, state_index


def two_bond():
    return IsingModel(2, [(0, 1, 1.0)])


def test_step_uniforms_counter_based():
    a = step_uniforms(42, 7, 5)
    b = step_uniforms(42, 7, 5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, step_uniforms(42, 8, 5))
    assert not np.array_equal(a, step_uniforms(43, 7, 5))


def test_block_uniforms_match_per_step():
    block = block_uniforms(99, 10, 6, 5)
    for i in range(6):
        assert np.array_equal(block[i], step_uniforms(99, 10 + i, 5))


def test_flip_probability_beta_zero():
    m = two_bond()
    q = PinningVector([1.0, 1.0])
    for sigma in enumerate_spins(2):
        for x in range(2):
            assert sca_flip_probability(m, q, sigma, x, 0.0) == 0.5


def test_flip_probability_saturation():
    m = IsingModel(1, [], [10.0])
    p = sca_flip_probability(m, PinningVector([0.0]), as_spins([-1]), 0, 10.0)
    assert p == pytest.approx(1.0, abs=1e-8)


def test_flip_probability_hand_value():
    m = two_bond()
    q = PinningVector([1.0, 1.0])
    p = sca_flip_probability(m, q, as_spins([1, 1]), 0, 1.0)
    # cross-check against the product form summed over the other spin
    num = sum(
        math.exp(0.5 * (1 * 1 + 1 * 1)) * math.exp(0.5 * (1 + 1) * t1)
        / (2 * math.cosh(0.5 * 2)) / (2 * math.cosh(0.5 * 2))
        for t1 in (-1, 1)
    )
    assert p == pytest.approx((1 + math.tanh(1.0)) / 2, abs=1e-12)
    assert p == pytest.approx(num, abs=1e-12)


def test_sampler_config_validation():
    q = PinningVector([1.0])
    with pytest.raises(ConfigError):
        SamplerConfig(beta=-1.0, seed=0, kind="sca", q=q)
    with pytest.raises(ConfigError):
        SamplerConfig(beta=1.0, seed=0, kind="sca")
    with pytest.raises(ConfigError):
        SamplerConfig(beta=1.0, seed=0, kind="binomial", q=q, epsilon=1.5)
    with pytest.raises(ConfigError):
        SamplerConfig(beta=1.0, seed=0, kind="nope")


def test_sca_step_beta_zero_uniform():
    m = IsingModel(3, [(0, 1, 1.0), (1, 2, -0.5)], [0.2, 0.0, -0.1])
    q = PinningVector(np.ones(3))
    cfg = SamplerConfig(beta=0.0, seed=5, kind="sca", q=q)
    counts = np.zeros(8)
    sigma = as_spins([1, 1, 1])
    idx = sample_one_step_states(m, cfg, sigma, 100_000)
    counts = np.bincount(idx, minlength=8)
    n_draws = 100_000
    p = 1 / 8
    sd = math.sqrt(n_draws * p * (1 - p))
    assert np.all(np.abs(counts - n_draws * p) <= 3 * sd + 1)


def test_sca_step_large_pinning_freezes():
    m = random_model(np.random.default_rng(3), 4)
    q = PinningVector(np.full(4, 1e6))
    cfg = SamplerConfig(beta=1.0, seed=9, kind="sca", q=q)
    sigma = as_spins([1, -1, 1, -1])
    for t in range(200):
        new, stats = sca_step(m, cfg, sigma, t)
        assert stats.flips == 0
        assert np.array_equal(new, sigma)


def test_sca_step_deterministic():
    m = random_model(np.random.default_rng(41), 5)
    q = PinningVector(np.ones(5))
    cfg = SamplerConfig(beta=0.7, seed=123, kind="sca", q=q)
    sigma = as_spins([1, -1, 1, -1, 1])
    run1, run2 = [], []
    for run in (run1, run2):
        s = sigma
        for t in range(50):
            s, _ = sca_step(m, cfg, s, t)
            run.append(s.copy())
    assert all(np.array_equal(a, b) for a, b in zip(run1, run2))


def test_glauber_step_flip_count_and_beta_zero():
    m = two_bond()
    cfg = SamplerConfig(beta=0.0, seed=2, kind="glauber")
    sigma = as_spins([1, 1])
    flips = 0
    for t in range(20_000):
        new, stats = glauber_step(m, cfg, sigma, t)
        assert stats.flips in (0, 1)
        flips += stats.flips
    # chosen-vertex flip probability is 1/2 at beta = 0
    assert flips / 20_000 == pytest.approx(0.5, abs=0.02)


def test_glauber_single_vertex_closed_form():
    h = 0.8
    m = IsingModel(1, [], [h])
    beta = 1.3
    cfg = SamplerConfig(beta=beta, seed=77, kind="glauber")
    idx = sample_one_step_states(m, cfg, as_spins([1]), 200_000)
    p_flip = math.exp(-beta * h) / (2 * math.cosh(beta * h))
    observed = np.mean(idx == 0)
    sd = math.sqrt(p_flip * (1 - p_flip) / 200_000)
    assert observed == pytest.approx(p_flip, abs=4 * sd)


def test_binomial_step_flip_rate_beta_zero():
    m = random_model(np.random.default_rng(55), 4)
    q = PinningVector(np.ones(4))
    cfg = SamplerConfig(beta=0.0, seed=6, kind="binomial", q=q, epsilon=0.5)
    sigma = as_spins([1, 1, -1, 1])
    total = 0
    for t in range(20_000):
        _, stats = binomial_step(m, cfg, sigma, t)
        assert stats.flips <= 4
        total += stats.flips
    # per-vertex flip probability is eps * 1/2 = 1/4 at beta = 0
    assert total / (20_000 * 4) == pytest.approx(0.25, abs=0.01)


@pytest.mark.parametrize("kind,eps", [("sca", None), ("glauber", None), ("binomial", 0.4)])
def test_batch_draws_match_step_functions(kind, eps):
    m = random_model(np.random.default_rng(61), 4)
    q = PinningVector(np.full(4, 0.8))
    cfg = SamplerConfig(beta=0.9, seed=2024, kind=kind, q=q, epsilon=eps)
    sigma = as_spins([1, -1, -1, 1])
    batch = sample_one_step_states(m, cfg, sigma, 30, start_step=5)
    from scanneal.dynamics import step as one_step

    for i in range(30):
        new, _ = one_step(m, cfg, sigma, 5 + i)
        assert batch[i] == state_index(new)


def test_coupled_identical_configs_stay_identical():
    m = random_model(np.random.default_rng(67), 4)
    q = PinningVector(np.ones(4))
    sigma = as_spins([1, 1, -1, 1])
    for t in range(100):
        x, y = coupled_sca_step(m, q, 0.8, sigma, sigma.copy(), 31, t)
        assert np.array_equal(x, y)


def test_coupled_beta_zero_always_agrees():
    m = random_model(np.random.default_rng(71), 4)
    q = PinningVector(np.ones(4))
    sigma = as_spins([1, 1, -1, 1])
    tau = as_spins([-1, 1, 1, -1])
    for t in range(100):
        x, y = coupled_sca_step(m, q, 0.0, sigma, tau, 17, t)
        assert np.array_equal(x, y)


def test_coupled_contraction_monte_carlo():
    m = two_bond()
    q = PinningVector([0.1, 0.1])
    beta = 0.5
    r = contraction_rate(m, q, beta)
    assert r < 1
    sigma = as_spins([1, 1])
    tau = as_spins([-1, 1])  # adjacent pair
    from scanneal.dynamics import sample_coupled_states

    xs, ys = sample_coupled_states(m, q, beta, sigma, tau, 301, 100_000)
    hamming = np.array([bin(a ^ b).count("1") for a, b in zip(xs, ys)])
    sd = hamming.std() / math.sqrt(len(hamming))
    assert hamming.mean() <= r + 3 * sd


def test_contraction_rate_values():
    m = two_bond()
    assert contraction_rate(m, PinningVector([0.0, 0.0]), 0.0) == 0.0
    r = contraction_rate(m, PinningVector([0.0, 0.0]), 1.0)
    assert r == pytest.approx(math.tanh(0.5), abs=1e-12)
    tri = IsingModel(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    r = contraction_rate(tri, PinningVector(np.ones(3)), 0.4)
    # second evaluation path: sum over the neighbor list by hand
    expected = math.tanh(0.2) + 2 * math.tanh(0.2)
    assert r == pytest.approx(expected, abs=1e-12)


def test_mixing_time_bound_formula():
    m = two_bond()
    q = PinningVector([0.0, 0.0])
    tri = IsingModel(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    q3 = PinningVector(np.ones(3))
    assert contraction_rate(tri, q3, 10.0) >= 1
    assert mixing_time_bound(tri, q3, 10.0, 0.01) is None
    r = contraction_rate(m, q, 1.0)
    expected = math.ceil((math.log(2) - math.log(0.01)) / math.log(1 / r))
    assert mixing_time_bound(m, q, 1.0, 0.01) == expected
    # monotone decreasing in the target epsilon
    assert mixing_time_bound(m, q, 1.0, 0.5) <= expected
    with pytest.raises(ValueError):
        mixing_time_bound(m, q, 1.0, 0.0)


def test_expected_flips_sca_values():
    m = two_bond()
    q = PinningVector([1.0, 1.0])
    sigma = as_spins([1, 1])
    assert expected_flips_sca(m, PinningVector([0.0, 0.0]), 0.0, sigma) == pytest.approx(1.0)
    big = PinningVector([1e6, 1e6])
    assert expected_flips_sca(m, big, 1.0, sigma) == pytest.approx(0.0, abs=1e-12)
    val = expected_flips_sca(m, q, 1.0, sigma)
    assert val == pytest.approx(2 / (math.exp(2) + 1), abs=1e-12)


def test_expected_flips_glauber_values():
    m = two_bond()
    sigma = as_spins([1, 1])
    assert expected_flips_glauber(m, 0.0, sigma) == pytest.approx(0.5)
    val = expected_flips_glauber(m, 1.0, sigma)
    assert val == pytest.approx(1 / (math.exp(2) + 1), abs=1e-12)


def test_expected_flips_match_monte_carlo():
    m = random_model(np.random.default_rng(73), 4)
    q = PinningVector(np.full(4, 0.5))
    sigma = as_spins([1, -1, 1, 1])
    beta = 0.8
    cfg = SamplerConfig(beta=beta, seed=404, kind="sca", q=q)
    idx = sample_one_step_states(m, cfg, sigma, 200_000)
    base = state_index(sigma)
    flips = np.array([bin(i ^ base).count("1") for i in idx])
    sd = flips.std() / math.sqrt(len(flips))
    assert flips.mean() == pytest.approx(
        expected_flips_sca(m, q, beta, sigma), abs=3 * sd
    )


def test_more_flips_condition():
    m = two_bond()
    q0 = PinningVector([0.0, 0.0])
    assert more_flips_condition(m, q0, 0.0)
    single = IsingModel(1, [], [0.0])
    assert more_flips_condition(single, PinningVector([0.0]), 1.0)  # lhs = rhs = 0
    assert not more_flips_condition(
        IsingModel(1, [], [1.0]), PinningVector([0.0]), 1.0
    )
    # direct formula comparison on a 16-vertex instance
    n = 16
    edges = [(0, 1, 1.0)]
    m16 = IsingModel(n, edges)
    q = PinningVector(np.ones(n))
    beta = 0.5
    lhs = max(
        0.5 * beta * (1.0 + 0.0 + (1.0 if x in (0, 1) else 0.0)) for x in range(n)
    )
    assert more_flips_condition(m16, q, beta) == (lhs <= math.log(4))


def test_expected_coupled_disagreement_below_rate():
    rng = np.random.default_rng(79)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        m = random_model(rng, n)
        q = PinningVector(rng.uniform(0, 1, n))
        beta = 0.3
        r = contraction_rate(m, q, beta)
        if r >= 1:
            continue
        for sigma in enumerate_spins(n):
            for x in range(n):
                assert expected_coupled_disagreement(m, q, beta, sigma, x) <= r + 1e-12
