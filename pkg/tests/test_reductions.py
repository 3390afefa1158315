import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qamlab.cli import hardness_check, value_one_toy
from qamlab.linalg import DimensionError
from qamlab.metrics import OptConfig, max_output_entropy, min_output_trace_distance, mix_channel
from qamlab.protocol import always_accept, make_protocol, optimal_value_two_turn, random_protocol, random_strategy
from qamlab.qobj import (
    apply_circuit,
    channel_of_circuit,
    constant_zero_circuit,
    identity_circuit,
    random_circuit,
)
from qamlab.rand import random_density, random_unitary
from qamlab.reductions import (
    CITMInstance,
    MaxOutQEAInstance,
    Mixer,
    build_citm_verifier,
    build_dispatch_circuit,
    build_hardness_circuit,
    build_maxoutqea_hardness,
    hardness_distance,
    instance_from_dict,
    k_formula,
    reduce_maxoutqea_to_citm,
    repeat_circuit,
)

CFG = OptConfig(restarts=8, max_iters=400)


def test_citm_verifier_examples(oracle_values):
    assert abs(optimal_value_two_turn(build_citm_verifier(identity_circuit(1)), CFG).value - 1) < 1e-9
    P = build_citm_verifier(constant_zero_circuit(1))
    r = optimal_value_two_turn(P, CFG)
    assert abs(r.value - 0.5) < 1e-9 and abs(r.bound - 0.5) < 1e-6
    assert abs(oracle_values["citm_constant_zero_value"] - 0.5) < 1e-3
    # 1 - b^2 with b = 1/sqrt(2) is the fidelity bound F(|0><0|, I/2)^2
    assert abs(r.value - (1 / math.sqrt(2)) ** 2) < 1e-9


def test_citm_verifier_layout():
    Q = random_circuit(3, 2, 1, 5, np.random.default_rng(0))
    P = build_citm_verifier(Q)
    assert P.turn_types == ("q", "q") and P.msg_qubits == (1, 2)
    with pytest.raises(DimensionError):
        build_citm_verifier(identity_circuit(9))


def test_citm_bounds_random(rng):
    for _ in range(4):
        Q = random_circuit(2, int(rng.integers(1, 3)), int(rng.integers(1, 3)), 6, rng)
        d = min_output_trace_distance(channel_of_circuit(Q), mix_channel(Q.q_inp, Q.q_out), CFG).value
        v = optimal_value_two_turn(build_citm_verifier(Q), CFG).value
        assert (1 - d) ** 2 - 1e-6 <= v <= 1 - d * d + 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_hardness_identity(seed, lS):
    P = random_protocol("qq", (lS, 1), 1, 8, seed=seed)
    D, pred = hardness_check(P, random_strategy(P, 1, seed=seed + 1))
    assert abs(D - pred) < 1e-6


def test_hardness_examples():
    P = always_accept()
    D, pred = hardness_check(P, random_strategy(P, 0, seed=1))
    assert D < 1e-12 and abs(pred) < 1e-12
    # Bell state on (S, M) into the always-accepting verifier's circuit
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    out = apply_circuit(build_hardness_circuit(P), np.outer(phi, phi))
    assert np.abs(out.mat - np.eye(2) / 2).max() < 1e-12
    assert hardness_distance(0.0, 1) == 0.25
    with pytest.raises(ValueError):
        build_hardness_circuit(make_protocol("cq", (1, 1), 1))


def test_repeat_circuit(rng, oracle_values):
    Q = random_circuit(2, 1, 1, 6, rng)
    assert repeat_circuit(Q, 1) is Q
    ch, ch2 = channel_of_circuit(Q), channel_of_circuit(repeat_circuit(Q, 2))
    for _ in range(5):
        a, b = random_density(1, rng), random_density(1, rng)
        assert np.abs(ch2.apply(np.kron(a, b)) - np.kron(ch.apply(a), ch.apply(b))).max() < 1e-9
    rep = channel_of_circuit(repeat_circuit(constant_zero_circuit(1), 2))
    d = min_output_trace_distance(rep, mix_channel(2, 2), CFG).value
    assert abs(d - oracle_values["dmin_const0_doubled"]) < 1e-6
    # polarization sandwich around the single-copy value 1/2
    assert 1 - (1 - 0.25) ** 1 - 1e-9 <= d <= 2 * 0.5 + 1e-9
    idd = channel_of_circuit(repeat_circuit(identity_circuit(1), 2))
    assert min_output_trace_distance(idd, mix_channel(2, 2), CFG).value < 1e-7
    with pytest.raises(DimensionError):
        repeat_circuit(identity_circuit(9), 2)


def test_dispatch_examples(rng):
    fam = [identity_circuit(1), constant_zero_circuit(1)]
    R = build_dispatch_circuit(fam, 1)
    rho = random_density(1, rng)
    assert np.abs(apply_circuit(R, np.kron(np.diag([1, 0]), rho)).mat - rho).max() < 1e-12
    assert np.abs(apply_circuit(R, np.kron(np.diag([0, 1]), rho)).mat - np.diag([1, 0])).max() < 1e-12
    # a coherent W is pinned, so the output is the mixture over measured w
    plus = np.full((2, 2), 0.5)
    want = 0.5 * rho + 0.5 * np.diag([1, 0])
    assert np.abs(apply_circuit(R, np.kron(plus, rho)).mat - want).max() < 1e-12


def test_dispatch_identical_branches(rng):
    Q = random_circuit(2, 1, 1, 6, rng)
    R = build_dispatch_circuit([Q, Q, Q, Q], 2)
    for _ in range(3):
        W, rho = random_density(2, rng), random_density(1, rng)
        assert np.abs(apply_circuit(R, np.kron(W, rho)).mat - apply_circuit(Q, rho).mat).max() < 1e-9


def test_dispatch_shape_mismatch():
    with pytest.raises(ValueError):
        build_dispatch_circuit([identity_circuit(1), identity_circuit(2)], 1)


def test_dispatch_no_case_entropy_bound():
    # every branch outputs |00>, at distance 3/4 > 1 - 2^-q from mix with q = 1
    l, q = 1, 1
    fam = [constant_zero_circuit(2), constant_zero_circuit(2)]
    R = build_dispatch_circuit(fam, l)
    s = max_output_entropy(channel_of_circuit(R), CFG).value
    assert s < l + 2 - q + 2


def test_maxoutqea_hardness_yes_case():
    inst = build_maxoutqea_hardness(value_one_toy(), 1, k=1)
    assert inst.t == inst.circuit.q_out - 3
    assert inst.provenance["degenerate"] and not inst.provenance["gap_guaranteed"]
    s = max_output_entropy(channel_of_circuit(inst.circuit), CFG).value
    assert s >= inst.circuit.q_out - 2 - 1e-6
    assert s >= inst.t + 1 - 1e-6


def test_k_formula():
    assert k_formula(1) == 554
    inst = build_maxoutqea_hardness(value_one_toy(), 1, k=2)
    assert inst.provenance["k_formula"] == 554 and inst.provenance["k"] == 2
    with pytest.raises(ValueError):
        build_maxoutqea_hardness(always_accept(), 1, k=1)


def test_pauli_twirl(rng):
    M = Mixer("pauli").circuit(1)
    for _ in range(10):
        out = apply_circuit(M, random_density(1, rng)).mat
        assert np.abs(out - np.eye(2) / 2).max() < 1e-12


def test_mixers_and_reduction(rng):
    inst = MaxOutQEAInstance(identity_circuit(1), 1)
    R = reduce_maxoutqea_to_citm(inst, Mixer("identity"))
    ch = channel_of_circuit(R.circuit)
    assert min_output_trace_distance(ch, mix_channel(1, 1), CFG).value < 1e-7
    assert abs(R.a - 1.5 * 2.0**-8) < 1e-15 and abs(R.b - 0.25) < 1e-15
    us = [random_unitary(2, rng) for _ in range(4)]
    R = reduce_maxoutqea_to_citm(inst, Mixer("unitaries", us))
    rho = random_density(1, rng)
    want = sum(U @ rho @ U.conj().T for U in us) / 4
    assert np.abs(apply_circuit(R.circuit, rho).mat - want).max() < 1e-12
    with pytest.raises(ValueError):
        Mixer("unitaries", us[:3])
    with pytest.raises(ValueError):
        Mixer("unitaries", [np.eye(2), 2 * np.eye(2)])


def test_unital_mixture_entropy(rng):
    us = [random_unitary(4, rng) for _ in range(2)]
    R = reduce_maxoutqea_to_citm(MaxOutQEAInstance(identity_circuit(2), 1), Mixer("unitaries", us))
    s = max_output_entropy(channel_of_circuit(R.circuit), CFG).value
    assert abs(s - 2) < 1e-6


def test_instance_serialization():
    inst = CITMInstance(identity_circuit(1), 0.1, 0.5, {"builder": "manual"})
    doc = inst.to_dict()
    back = instance_from_dict(doc)
    assert doc["kind"] == "CITM" and back.a == 0.1 and back.circuit.same_as(inst.circuit)
    m = instance_from_dict(MaxOutQEAInstance(identity_circuit(1), 2).to_dict())
    assert m.t == 2
    with pytest.raises(ValueError):
        CITMInstance(identity_circuit(1), 0.5, 0.5)
    with pytest.raises(ValueError):
        MaxOutQEAInstance(identity_circuit(1), 0)
    with pytest.raises(ValueError):
        instance_from_dict({"kind": "other", "circuit": doc["circuit"]})
