import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qamlab.metrics import OptConfig
from qamlab.oracle import enumerate_classical_strategies
from qamlab.protocol import (
    ProtocolSpec,
    ProverStrategy,
    acceptance_operator,
    always_accept,
    backward_induction,
    binomial_tail,
    classical_backward_value,
    echo_game,
    echo_prover,
    eval_with_prover,
    identity_strategy,
    lift_classical_turn,
    make_protocol,
    message_state,
    optimal_value_two_turn,
    parallel_repeat,
    protocol_from_dict,
    protocol_to_dict,
    random_protocol,
    random_strategy,
    sample_transcript,
    table_protocol,
    threshold_parameters,
    threshold_repeat,
)
from qamlab.qobj import circuit_unitary, gate, identity_circuit
from qamlab.reductions import build_citm_verifier

CFG = OptConfig(restarts=8, max_iters=400)


def dense_two_turn(P, S):
    """Oracle: statevector on (V, M1, M2, slot, private) built by hand."""
    qV = P.verifier_qubits
    l1, l2 = P.msg_qubits
    qP = S.private_qubits
    n_v = P.width
    n = n_v + l1 + qP
    total = 0.0
    if P.turn_types[0] == "q":
        starts = [(1.0, None)]
    else:
        starts = [(2.0**-l1, r) for r in range(2**l1)]
    UV = circuit_unitary(P.verifier_circuit)
    U = S.unitaries[0]
    for w, r in starts:
        psi = np.zeros((2,) * n, dtype=complex)
        for x in range(2**l1):
            if r is not None and x != r:
                continue
            bits = [(x >> (l1 - 1 - k)) & 1 for k in range(l1)]
            idx = [0] * n
            for k, b in enumerate(bits):
                idx[qV + k] = b
                idx[n_v + k] = b
            psi[tuple(idx)] = 1.0
        psi = psi.reshape(-1)
        psi /= np.linalg.norm(psi)
        # prover acts on (slot, private, M2)
        order = list(range(n_v, n)) + list(range(qV + l1, n_v))
        rest = [q for q in range(n) if q not in order]
        T = psi.reshape((2,) * n).transpose(order + rest).reshape(U.shape[0], -1)
        T = (U @ T).reshape((2,) * n)
        psi = T.transpose(np.argsort(order + rest)).reshape(-1)
        branches = [psi]
        if P.turn_types[1] == "c":
            branches = []
            for y in range(2**l2):
                ybits = [(y >> (l2 - 1 - k)) & 1 for k in range(l2)]
                T = psi.reshape((2,) * n).copy()
                for k, b in enumerate(ybits):
                    sl = [slice(None)] * n
                    sl[qV + l1 + k] = 1 - b
                    T[tuple(sl)] = 0
                branches.append(T.reshape(-1))
        for v in branches:
            M = v.reshape(2**n_v, -1)
            M = UV @ M
            T = M.reshape((2,) * n_v + (-1,))
            sl = [slice(None)] * (n_v + 1)
            sl[P.output_qubit] = 1
            total += w * float(np.sum(np.abs(T[tuple(sl)]) ** 2))
    return total


def test_always_accept():
    P = always_accept()
    for s in range(3):
        assert abs(eval_with_prover(P, random_strategy(P, 1, s)) - 1) < 1e-12


def test_echo_game():
    P = echo_game(1)
    assert abs(eval_with_prover(P, echo_prover(P)) - 1) < 1e-12
    assert abs(eval_with_prover(P, identity_strategy(P)) - 0.5) < 1e-12


def test_honest_prover_on_identity_circuit():
    P = build_citm_verifier(identity_circuit(1))
    r = optimal_value_two_turn(P, CFG)
    assert abs(eval_with_prover(P, r.extra["strategy"]) - 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["qq", "cq", "qc", "cc"]), st.integers(0, 1))
def test_eval_matches_dense_oracle(seed, types, qP):
    P = random_protocol(types, (1, 1), 1, 8, seed=seed)
    S = random_strategy(P, qP, seed=seed + 1)
    assert abs(eval_with_prover(P, S) - dense_two_turn(P, S)) < 1e-10


def test_branch_and_pins_modes_agree():
    P = random_protocol("cqc", (1, 1, 1), 1, 10, seed=4)
    S = random_strategy(P, 1, seed=5)
    assert abs(eval_with_prover(P, S, "branch") - eval_with_prover(P, S, "pins")) < 1e-10


def test_turn_indexing_from_last():
    P = make_protocol("cq", (1, 2), 1, [], 0)
    assert P.turn_type(1) == "q" and P.turn_type(2) == "c"
    assert P.owner(1) == "P" and P.owner(0) == "V"
    with pytest.raises(IndexError):
        P.turn_type(3)


def test_protocol_validation():
    with pytest.raises(ValueError):
        make_protocol("xq", (1, 1), 1)
    with pytest.raises(ValueError):
        make_protocol("qq", (1, 1), 1, output_qubit=1)
    with pytest.raises(ValueError):
        ProverStrategy(0, (np.eye(2) * 2,))
    with pytest.raises(ValueError):
        eval_with_prover(echo_game(1), ProverStrategy(0, (np.eye(8),)))


def test_message_state_marginal():
    # the prover never touches the kept EPR halves, so M1 is maximally mixed
    P = random_protocol("qq", (1, 1), 1, 6, seed=2)
    rho = message_state(P, random_strategy(P, 1, seed=3)).mat
    red = rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
    assert np.allclose(red, np.eye(2) / 2)


def test_sample_transcript_types():
    P = random_protocol("cqc", (1, 1, 1), 1, 6, seed=1)
    tr = sample_transcript(P, random_strategy(P, 1, seed=2), seed=3)
    kinds = [(who, typ) for who, typ, _ in tr.messages]
    assert kinds == [("P", "c"), ("V", "q"), ("P", "c")]
    assert 0 <= tr.accept_prob <= 1


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_strategies_below_optimum(seed):
    P = random_protocol("qq", (1, 1), 1, 8, seed=seed)
    r = optimal_value_two_turn(P, CFG)
    assert r.bound >= r.value - 1e-7
    assert abs(eval_with_prover(P, r.extra["strategy"]) - r.value) < 1e-9
    for s in range(5):
        assert eval_with_prover(P, random_strategy(P, 2, seed=seed + s)) <= r.value + 1e-6


def test_optimal_value_examples(oracle_values):
    from qamlab.qobj import constant_zero_circuit

    v0 = optimal_value_two_turn(build_citm_verifier(constant_zero_circuit(1)), CFG).value
    assert abs(v0 - 0.5) < 1e-9
    assert abs(oracle_values["citm_constant_zero_value"] - 0.5) < 1e-3
    # verifier that only looks at its kept EPR half
    P = make_protocol("qq", (1, 1), 1, [gate("CX", 1, 0)], 0)
    assert abs(optimal_value_two_turn(P, CFG).value - 0.5) < 1e-9
    assert abs(optimal_value_two_turn(echo_game(1), CFG).value - oracle_values["echo_game_value"]) < 1e-9


def test_oracle_lower_bounds_seesaw(oracle_values):
    from qamlab.qobj import constant_zero_circuit

    cases = {"citm_constant_zero_value": build_citm_verifier(constant_zero_circuit(1)),
             "echo_game_value": echo_game(1),
             "echo_game_lifted_value": lift_classical_turn(echo_game(1), 2)}
    for fid, P in cases.items():
        v = optimal_value_two_turn(P, CFG).value
        assert oracle_values[fid] <= v + 1e-6
        assert v - oracle_values[fid] <= 1e-3


def test_acceptance_operator_consistency():
    P = random_protocol("qq", (1, 1), 1, 8, seed=9)
    S = random_strategy(P, 1, seed=10)
    E = acceptance_operator(P)
    rho = message_state(P, S).mat
    assert abs(np.trace(E @ rho).real - eval_with_prover(P, S)) < 1e-10


def test_classical_backward_value_and_enumeration(rng, oracle_values):
    T = rng.random((2, 2, 2))
    P = table_protocol("ccc", (1, 1, 1), T)
    want = enumerate_classical_strategies(T)
    assert abs(backward_induction(["P", "V", "P"], T) - want) < 1e-12
    assert abs(classical_backward_value(P, T) - want) < 1e-12
    assert abs(classical_backward_value(P, cfg=CFG) - want) < 1e-9
    T3 = np.random.default_rng(21).random((4, 4, 4))
    assert backward_induction(["P", "V", "P"], T3) == oracle_values["classical_3turn_l2"]


def test_classical_tree_examples():
    assert classical_backward_value(table_protocol("ccc", (1, 1, 1), np.full((2, 2, 2), 0.3)),
                                    np.full((2, 2, 2), 0.3)) == pytest.approx(0.3)
    w = np.zeros((2, 2))
    for y, r in itertools.product(range(2), repeat=2):
        w[y, r] = y ^ r
    assert enumerate_classical_strategies(w, ["P", "V"]) == 0.5
    # deterministic predicate with an accepting leaf under every r
    T = np.zeros((2, 2, 2))
    T[0, :, 1] = 1
    assert classical_backward_value(table_protocol("ccc", (1, 1, 1), T), T) == 1.0


def test_table_protocol_simulation(rng):
    T = rng.random((2, 2, 2))
    P = table_protocol("ccc", (1, 1, 1), T)
    for y, z in itertools.product(range(2), repeat=2):
        # deterministic prover on (slot r, message): send y first and z last, ignoring r
        U0 = np.kron(np.eye(2), np.array([[0, 1], [1, 0]]) if y else np.eye(2))
        U1 = np.kron(np.eye(2), np.array([[0, 1], [1, 0]]) if z else np.eye(2))
        v = eval_with_prover(P, ProverStrategy(0, (U0, U1)))
        assert abs(v - T[y, :, z].mean()) < 1e-12


def test_parallel_repeat():
    P = always_accept()
    assert parallel_repeat(P, 1) is P
    assert abs(optimal_value_two_turn(parallel_repeat(P, 2), CFG).value - 1) < 1e-9
    P = random_protocol("qq", (1, 1), 1, 10, seed=3)
    v = optimal_value_two_turn(P, CFG).value
    v2 = optimal_value_two_turn(parallel_repeat(P, 2), CFG)
    assert abs(v2.value - v**2) < 1e-5
    assert v2.bound <= v**2 + 1e-5
    with pytest.raises(ValueError):
        parallel_repeat(P, 0)


def test_threshold_parameters():
    assert threshold_parameters(1, 0, 1) == {"q": 1, "N": 2, "fraction": 0.5, "threshold": 1}
    par = threshold_parameters(2 / 3, 1 / 3, 1)
    assert (par["q"], par["N"]) == (3, 18) and abs(par["fraction"] - 0.5) < 1e-12
    with pytest.raises(ValueError):
        threshold_parameters(0.5, 0.5, 1)


def test_threshold_repeat_counts_acceptances():
    # one-turn-pair protocol accepting with probability p under the identity strategy
    th = 2 * np.arcsin(np.sqrt(0.3))
    Ry = np.array([[np.cos(th / 2), -np.sin(th / 2)], [np.sin(th / 2), np.cos(th / 2)]])
    from qamlab.qobj import Gate

    P = make_protocol("qq", (0, 0), 1, [Gate("U", (0,), (), Ry)], 0)
    R = threshold_repeat(P, 1.0, 0.0, 1)
    v = eval_with_prover(R, identity_strategy(R))
    assert abs(v - binomial_tail(0.3, 2, 1)) < 1e-12


def test_lift_classical_turn():
    P = echo_game(1)
    L = lift_classical_turn(P, 2)
    assert L.turn_types == ("q", "c")
    assert abs(optimal_value_two_turn(L, CFG).value - 1) < 1e-9
    A = lift_classical_turn(always_accept(("c", "c")), 1)
    assert abs(optimal_value_two_turn(A, CFG).value - 1) < 1e-9
    with pytest.raises(ValueError):
        lift_classical_turn(L, 2)


def test_lift_preserves_value_random():
    for s in range(3):
        P = random_protocol("cq", (1, 1), 1, 10, seed=s)
        a = optimal_value_two_turn(P, CFG).value
        b = optimal_value_two_turn(lift_classical_turn(P, 2), CFG).value
        assert abs(a - b) < 1e-6


def test_dict_round_trip():
    P = random_protocol("cq", (1, 2), 2, 6, seed=1)
    Q = protocol_from_dict(protocol_to_dict(P))
    assert isinstance(Q, ProtocolSpec) and Q.turn_types == P.turn_types
    assert Q.verifier_circuit.same_as(P.verifier_circuit)
