import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qamlab.linalg import DimensionError, partial_trace, permute_qubits
from qamlab.qobj import (
    Channel,
    CircuitInstance,
    CircuitParseError,
    DensityMatrix,
    Gate,
    apply_circuit,
    channel_of_circuit,
    circuit_unitary,
    compose_circuits,
    constant_zero_circuit,
    gate,
    identity_circuit,
    load_circuit,
    make_circuit,
    parse_circuit,
    random_circuit,
    serialize_circuit,
)
from qamlab.rand import random_density, random_unitary

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def dense_apply(Q, rho):
    """Oracle: full density-matrix evolution, then trace out the non-outputs."""
    n = Q.q_all
    anc = [q for q in range(n) if q not in Q.input_qubits]
    zero = np.zeros((2 ** len(anc),) * 2)
    zero[0, 0] = 1
    full = np.kron(rho, zero)
    # full is ordered (inputs, ancillas); move to qubit order
    order = list(Q.input_qubits) + anc
    full = permute_qubits(full, np.argsort(order))
    U = circuit_unitary(Q)
    out = U @ full @ U.conj().T
    keep = list(Q.output_qubits)
    red = partial_trace(out, [2] * n, keep)
    # partial_trace returns ascending qubit order; reorder to the output list
    return permute_qubits(red, np.argsort(np.argsort(keep)))


def test_density_matrix_validation():
    DensityMatrix.mixed(2)
    with pytest.raises(ValueError):
        DensityMatrix(1, np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        DensityMatrix(1, np.diag([1.5, -0.5]))
    with pytest.raises(DimensionError):
        DensityMatrix(1, np.eye(4) / 4)


def test_channel_validation():
    with pytest.raises(ValueError):
        Channel(1, 1, (np.eye(2) * 0.9,))


def test_identity_and_constant_circuits(rng):
    rho = random_density(1, rng)
    assert np.allclose(apply_circuit(identity_circuit(1), rho).mat, rho)
    assert np.allclose(apply_circuit(constant_zero_circuit(1), rho).mat, np.diag([1, 0]))


def test_channel_of_circuit_examples():
    ch = channel_of_circuit(identity_circuit(1))
    assert len(ch.kraus) == 1 and np.allclose(ch.kraus[0], np.eye(2))
    ch = channel_of_circuit(make_circuit(1, [gate("H", 0)]))
    assert len(ch.kraus) == 1 and np.allclose(np.abs(ch.kraus[0]), np.abs(H))
    # coin flip: H on an ancilla controls a swap of the two input qubits
    Q = make_circuit(3, [gate("H", 2), Gate("SWAP", (0, 1), (2,))], q_inp=2, outputs=[0, 1])
    ch = channel_of_circuit(Q, minimal=False)
    assert len(ch.kraus) == 2
    for K in ch.kraus:
        assert np.allclose(K.conj().T @ K, np.eye(4) / 2)
    assert len(channel_of_circuit(Q).kraus) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_apply_circuit_matches_dense_oracle(seed, q_all):
    r = np.random.default_rng(seed)
    q_inp = int(r.integers(1, q_all + 1))
    q_out = int(r.integers(1, q_all + 1))
    Q = random_circuit(q_all, q_inp, q_out, 6, r)
    rho = random_density(q_inp, r)
    out = apply_circuit(Q, rho)
    assert np.abs(out.mat - dense_apply(Q, rho)).max() < 1e-9
    ch = channel_of_circuit(Q)
    assert np.abs(ch.apply(rho) - out.mat).max() < 1e-9
    w = np.linalg.eigvalsh(out.mat)
    assert w.min() > -1e-9 and abs(w.sum() - 1) < 1e-9


def test_unsorted_inputs_and_outputs(rng):
    Q = CircuitInstance(3, (gate("CX", 2, 0), gate("H", 1)), (2, 0), (1, 2))
    rho = random_density(2, rng)
    assert np.abs(apply_circuit(Q, rho).mat - dense_apply(Q, rho)).max() < 1e-12


def test_compose_matches_channel_composition(rng):
    for _ in range(20):
        A = random_circuit(3, 2, 2, 5, rng)
        B = random_circuit(3, 2, 1, 5, rng)
        C = compose_circuits(A, B)
        rho = random_density(2, rng)
        want = channel_of_circuit(B).apply(channel_of_circuit(A).apply(rho))
        assert np.abs(apply_circuit(C, rho).mat - want).max() < 1e-9


def test_parse_minimal_document():
    doc = {"qubits": 1, "inputs": [0], "outputs": [0], "gates": [{"name": "H", "targets": [0]}]}
    Q = parse_circuit(json.dumps(doc))
    assert np.allclose(circuit_unitary(Q), H)


def test_parse_errors_carry_path():
    doc = {"qubits": 1, "gates": [{"name": "H", "targets": [1]}]}
    with pytest.raises(CircuitParseError, match="out of range"):
        parse_circuit(doc)
    with pytest.raises(CircuitParseError, match=r"gates\[0\]\.name"):
        parse_circuit({"qubits": 1, "gates": [{"name": "FOO", "targets": [0]}]})
    bad = [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]
    with pytest.raises(CircuitParseError):
        parse_circuit({"qubits": 1, "gates": [{"name": "U", "targets": [0], "matrix": bad}]})
    with pytest.raises(CircuitParseError):
        parse_circuit("{not json")


def test_round_trip(rng):
    U = random_unitary(2, rng)
    Q = make_circuit(2, [gate("H", 0), Gate("U", (1,), (), U), gate("CZ", 0, 1)], q_inp=1, q_out=1)
    text = serialize_circuit(Q)
    Q2 = parse_circuit(text)
    assert Q2.same_as(Q)
    assert serialize_circuit(Q2) == text
    assert np.array_equal(circuit_unitary(Q2), circuit_unitary(Q))


def test_load_circuit_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(serialize_circuit(identity_circuit(2)), encoding="utf-8")
    assert load_circuit(p).same_as(identity_circuit(2))
    p.write_text('{"qubits": -1}', encoding="utf-8")
    with pytest.raises(CircuitParseError, match="c.json"):
        load_circuit(p)


def test_input_size_mismatch():
    with pytest.raises(DimensionError):
        apply_circuit(identity_circuit(2), np.eye(2) / 2)
