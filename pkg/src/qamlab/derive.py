"""Catalog of oracle-derived reference values.

Each case builds its inputs from a seed, describes them canonically (the
description is hashed into the fixture) and computes the value with an
oracle from :mod:`qamlab.oracle`.  ``qamlab derive`` writes the fixtures
file; the test suite recomputes only the descriptions to check the fixture
still matches its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .collapse import BitSubset, folded_table
from .linalg import complete_to_unitary
from .metrics import mix_channel, vn_entropy
from .oracle import (
    SearchBudget,
    brute_max_over_states,
    brute_min_output_trace_distance,
    brute_two_turn_value,
    enumerate_classical_strategies,
    fixture,
    sdp_max_output_fidelity,
)
from .protocol import backward_induction, echo_game, lift_classical_turn
from .qobj import Channel, Gate, channel_of_circuit, constant_zero_circuit, make_circuit
from .rand import random_replacement_kraus, rng_from
from .reductions import build_citm_verifier, repeat_circuit


@dataclass
class Case:
    id: str
    seed: int
    budget: SearchBudget | None
    describe: Callable[[], object]
    compute: Callable[[], float]


def amplitude_damping_circuit(gamma: float = 0.3):
    """1-qubit amplitude damping as a 2-qubit circuit with one explicit U gate."""
    W = np.zeros((4, 2), dtype=complex)
    W[0, 0] = 1  # |0>|0> -> |0>|0>
    W[2, 1] = math.sqrt(1 - gamma)  # |1>|0> -> sqrt(1-g)|1>|0> + sqrt(g)|0>|1>
    W[1, 1] = math.sqrt(gamma)
    # columns of the input |a>|0> sit at indices 0 and 2
    U = np.empty((4, 4), dtype=complex)
    full = complete_to_unitary(W)
    U[:, 0], U[:, 2] = full[:, 0], full[:, 1]
    U[:, 1], U[:, 3] = full[:, 2], full[:, 3]
    return make_circuit(2, [Gate("U", (0, 1), (), U)], inputs=[0], outputs=[0])


def channel_pair(seed: int) -> tuple[Channel, Channel]:
    """A seeded pair of 1-qubit replacement channels."""
    rng = rng_from(seed)
    Phi = Channel(1, 1, tuple(random_replacement_kraus(1, rng)))
    Psi = Channel(1, 1, tuple(random_replacement_kraus(1, rng)))
    return Phi, Psi


def random_table(shape, seed: int) -> np.ndarray:
    return rng_from(seed).random(shape)


def _kraus_desc(ch: Channel):
    return [np.asarray(K) for K in ch.kraus]


def _cases() -> list[Case]:
    out = []
    b_state = SearchBudget(samples=300, polish_iters=3000, seed=11)
    amp = amplitude_damping_circuit(0.3)
    amp_ch = channel_of_circuit(amp)
    out.append(Case("smax_amplitude_damping_0.3", 11, b_state,
                    lambda: {"kraus": _kraus_desc(amp_ch)},
                    lambda: brute_max_over_states(lambda R: vn_entropy(amp_ch.apply(R)), 1, b_state)[0]))

    b_tt = SearchBudget(samples=60, polish_iters=4000, seed=5)
    citm0 = build_citm_verifier(constant_zero_circuit(1))
    out.append(Case("citm_constant_zero_value", 5, b_tt, lambda: {"protocol": "citm(const0)", "q_P": 1},
                    lambda: brute_two_turn_value(citm0, 1, b_tt)[0]))
    echo = echo_game(1)
    out.append(Case("echo_game_value", 5, b_tt, lambda: {"protocol": "echo(1)", "q_P": 1},
                    lambda: brute_two_turn_value(echo, 1, b_tt)[0]))
    lifted = lift_classical_turn(echo, 2)
    out.append(Case("echo_game_lifted_value", 5, b_tt, lambda: {"protocol": "lift(echo(1), 2)", "q_P": 1},
                    lambda: brute_two_turn_value(lifted, 1, b_tt)[0]))

    b_d = SearchBudget(samples=400, polish_iters=6000, seed=3)
    rep = channel_of_circuit(repeat_circuit(constant_zero_circuit(1), 2))
    out.append(Case("dmin_const0_doubled", 3, b_d, lambda: {"kraus": _kraus_desc(rep), "vs": "mix(2,2)"},
                    lambda: brute_min_output_trace_distance(rep, mix_channel(2, 2), b_d)[0]))
    for s in range(3):
        Phi, Psi = channel_pair(100 + s)
        out.append(Case(f"dmin_pair_{s}", 100 + s, b_d,
                        (lambda Phi=Phi, Psi=Psi: {"phi": _kraus_desc(Phi), "psi": _kraus_desc(Psi)}),
                        (lambda Phi=Phi, Psi=Psi: brute_min_output_trace_distance(Phi, Psi, b_d)[0])))
        out.append(Case(f"fmax_pair_{s}", 100 + s, None,
                        (lambda Phi=Phi, Psi=Psi: {"phi": _kraus_desc(Phi), "psi": _kraus_desc(Psi)}),
                        (lambda Phi=Phi, Psi=Psi: sdp_max_output_fidelity(Phi, Psi))))

    (P1, Q1), (P2, Q2) = channel_pair(101), channel_pair(102)
    PP, QQ = P1.tensor(P2), Q1.tensor(Q2)
    out.append(Case("fmax_product_pair_1_2", 101, None,
                    lambda: {"phi": _kraus_desc(PP), "psi": _kraus_desc(QQ)},
                    lambda: sdp_max_output_fidelity(PP, QQ)))

    T3 = random_table((4, 4, 4), 21)
    out.append(Case("classical_3turn_l2", 21, None, lambda: {"table": T3},
                    lambda: enumerate_classical_strategies(T3)))
    T5 = random_table((2,) * 5, 22)
    out.append(Case("classical_5turn_l1", 22, None, lambda: {"table": T5},
                    lambda: enumerate_classical_strategies(T5)))
    for k in (1, 2, 3):
        out.append(Case(f"fold_5turn_l1_k{k}", 22, None, (lambda k=k: {"table": T5, "k": k}),
                        (lambda k=k: backward_induction(*folded_table(T5, k)))))

    S5 = BitSubset(3, (0, 1, 2, 4, 7))
    out.append(Case("xor_l3_size5_k2", 0, None, lambda: {"l": 3, "members": list(S5.members), "k": 2},
                    lambda: _set_intersection_probability(S5, 2)))
    return out


def _set_intersection_probability(S: BitSubset, k: int) -> float:
    """Plain-set enumeration of Pr[nonempty intersection of S xor r_j]."""
    import itertools

    L = 2**S.l
    base = set(S.members)
    hits = 0
    for rs in itertools.product(range(L), repeat=k):
        inter = set(range(L))
        for r in rs:
            inter &= {x ^ r for x in base}
        hits += bool(inter)
    return hits / L**k


def case_ids() -> list[str]:
    return [c.id for c in _cases()]


def descriptions() -> dict:
    return {c.id: c.describe() for c in _cases()}


def derive_one(case_id: str) -> dict:
    c = {c.id: c for c in _cases()}[case_id]
    return fixture(c.id, c.describe(), c.compute(), c.seed, c.budget)


def derive_all(ids=None) -> list[dict]:
    return [derive_one(i) for i in case_ids() if not ids or i in ids]
