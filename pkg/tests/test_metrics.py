import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qamlab.derive import amplitude_damping_circuit, channel_pair
from qamlab.metrics import (
    OptConfig,
    ProbDist,
    check_entropy_sandwich,
    check_fuchs_van_de_graaf,
    check_measurement_monotonicity,
    check_mixture_bound,
    check_mixture_entropy,
    fidelity,
    max_output_entropy,
    max_output_fidelity,
    min_output_trace_distance,
    mix_channel,
    relative_entropy,
    shannon_entropy,
    trace_distance,
    vajda_gap,
    vn_entropy,
)
from qamlab.qobj import Channel, DensityMatrix, channel_of_circuit
from qamlab.rand import random_density, random_povm, random_probs, random_state_vector, random_unitary

CFG = OptConfig(restarts=8, max_iters=400)


def test_trace_distance_examples(rng):
    rho = random_density(2, rng)
    assert trace_distance(rho, rho) < 1e-12
    for n in (1, 2, 3):
        zero = DensityMatrix.zero(n)
        assert abs(trace_distance(zero, DensityMatrix.mixed(n)) - (1 - 2.0**-n)) < 1e-12
    sigma = random_density(2, rng)
    # trace norm from singular values instead of eigenvalues
    want = 0.5 * np.linalg.svd(rho - sigma, compute_uv=False).sum()
    assert abs(trace_distance(rho, sigma) - want) < 1e-12


def test_fidelity_examples(rng):
    rho = random_density(2, rng)
    assert abs(fidelity(rho, rho) - 1) < 1e-7
    a, b = random_state_vector(4, rng), random_state_vector(4, rng)
    assert abs(fidelity(np.outer(a, a.conj()), np.outer(b, b.conj())) - abs(np.vdot(a, b))) < 1e-7
    assert abs(fidelity(DensityMatrix.zero(1), DensityMatrix.mixed(1)) - 1 / math.sqrt(2)) < 1e-12


def test_fidelity_matches_nuclear_norm_formula(rng):
    from scipy.linalg import sqrtm

    for _ in range(10):
        rho, sigma = random_density(2, rng), random_density(2, rng)
        want = np.linalg.svd(sqrtm(rho) @ sqrtm(sigma), compute_uv=False).sum()
        assert abs(fidelity(rho, sigma) - want) < 1e-8


def test_entropies(rng):
    for n in (1, 2, 3):
        assert abs(vn_entropy(DensityMatrix.mixed(n)) - n) < 1e-12
    psi = random_state_vector(4, rng)
    assert abs(vn_entropy(np.outer(psi, psi.conj()))) < 1e-9
    mu = random_probs(8, rng)
    kl = sum(p * math.log2(p * 8) for p in mu if p > 0)
    assert abs(relative_entropy(mu, ProbDist.uniform(8)) - kl) < 1e-12
    assert abs(kl - (3 - shannon_entropy(mu))) < 1e-12


def test_relative_entropy_support_violation():
    assert relative_entropy([0.5, 0.5], [1.0, 0.0]) == math.inf


def test_probdist_validation():
    with pytest.raises(ValueError):
        ProbDist(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        ProbDist(np.array([1.5, -0.5]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_state_lemmas(seed, n):
    r = np.random.default_rng(seed)
    rho, sigma, tau = (random_density(n, r, rank=int(r.integers(1, 2**n + 1))) for _ in range(3))
    checks = check_fuchs_van_de_graaf(rho, sigma)
    checks.append(check_measurement_monotonicity(rho, sigma, random_povm(2**n, 4, r)))
    checks.append(check_mixture_bound(rho, sigma, tau, float(r.random())))
    checks.append(check_mixture_entropy(random_probs(3, r), [rho, sigma, tau]))
    assert all(c.ok(1e-9) for c in checks), [c for c in checks if not c.ok(1e-9)]
    assert check_entropy_sandwich(rho).passed
    assert vajda_gap(random_probs(2**n, r)) >= -1e-9


def test_sandwich_examples():
    sw = check_entropy_sandwich(DensityMatrix.mixed(2))
    assert abs(sw.lhs - 1.5) < 1e-12 and abs(sw.S - 2) < 1e-12 and abs(sw.rhs - 4) < 1e-12
    sw = check_entropy_sandwich(DensityMatrix.zero(2))
    assert abs(sw.lhs) < 1e-12 and abs(sw.S) < 1e-12 and abs(sw.rhs - 2) < 1e-12 and sw.passed


def test_fmax_examples():
    idc = Channel.identity(1)
    assert abs(max_output_fidelity(idc, idc, CFG).value - 1) < 1e-9
    c0 = Channel.constant(DensityMatrix.zero(1), 1)
    cm = Channel.constant(DensityMatrix.mixed(1), 1)
    assert abs(max_output_fidelity(c0, cm, CFG).value - 1 / math.sqrt(2)) < 1e-9


def test_uhlmann_attainability(rng):
    # constant channels pin the outputs, so the purification see-saw must reach F(rho, sigma)
    for _ in range(5):
        rho, sigma = random_density(1, rng), random_density(1, rng)
        r = max_output_fidelity(Channel.constant(rho, 1), Channel.constant(sigma, 1), CFG)
        assert abs(r.value - fidelity(rho, sigma)) < 1e-6


def test_dmin_examples():
    idc = Channel.identity(1)
    assert min_output_trace_distance(idc, idc, CFG).value < 1e-7
    c0 = Channel.constant(DensityMatrix.zero(1), 1)
    cm = Channel.constant(DensityMatrix.mixed(1), 1)
    r = min_output_trace_distance(c0, cm, CFG)
    assert abs(r.value - 0.5) < 1e-7 and abs(r.bound - 0.5) < 1e-7


def test_optimizer_witnesses_reproduce_values():
    Phi, Psi = channel_pair(101)
    r = min_output_trace_distance(Phi, Psi, CFG)
    a, b = r.witness_states
    assert abs(trace_distance(Phi(a), Psi(b)) - r.value) < 1e-6
    assert r.bound <= r.value + 1e-9
    f = max_output_fidelity(Phi, Psi, CFG)
    a, b = f.witness_states
    assert abs(fidelity(Phi(a), Psi(b)) - f.value) < 1e-6


def test_against_frozen_oracles(oracle_values):
    for s in range(3):
        Phi, Psi = channel_pair(100 + s)
        d = min_output_trace_distance(Phi, Psi, CFG)
        assert abs(d.value - oracle_values[f"dmin_pair_{s}"]) < 1e-6
        f = max_output_fidelity(Phi, Psi, OptConfig(restarts=32, max_iters=2000))
        # see-saw is a lower bound; the SDP oracle may sit slightly above it
        assert f.value <= oracle_values[f"fmax_pair_{s}"] + 1e-6
        assert oracle_values[f"fmax_pair_{s}"] - f.value < 1e-3


def test_fmax_multiplicativity_oracle(oracle_values):
    v = oracle_values["fmax_product_pair_1_2"]
    assert abs(v - oracle_values["fmax_pair_1"] * oracle_values["fmax_pair_2"]) < 1e-4


def test_fmax_product_achievable():
    (P1, Q1), (P2, Q2) = channel_pair(101), channel_pair(102)
    f1 = max_output_fidelity(P1, Q1, CFG).value
    f2 = max_output_fidelity(P2, Q2, CFG).value
    f12 = max_output_fidelity(P1.tensor(P2), Q1.tensor(Q2), CFG).value
    assert f12 >= f1 * f2 - 1e-6


def test_smax_examples(rng, oracle_values):
    U = random_unitary(4, rng)
    unital = Channel(2, 2, (U / math.sqrt(2), np.eye(4) / math.sqrt(2)))
    assert abs(max_output_entropy(unital, CFG).value - 2) < 1e-6
    rho0 = random_density(1, rng)
    const = Channel.constant(rho0, 1)
    assert abs(max_output_entropy(const, CFG).value - vn_entropy(rho0)) < 1e-9
    amp = channel_of_circuit(amplitude_damping_circuit(0.3))
    assert abs(max_output_entropy(amp, CFG).value - oracle_values["smax_amplitude_damping_0.3"]) < 1e-6


def test_mix_channel():
    ch = mix_channel(2, 1)
    assert np.allclose(ch.apply(np.eye(4) / 4), np.eye(2) / 2)
    assert np.allclose(ch.apply(np.diag([1, 0, 0, 0])), np.eye(2) / 2)
