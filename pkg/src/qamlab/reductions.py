"""Circuit and protocol constructions linking CITM, MaxOutQEA and qq-QAM games.

All builders return plain :class:`~qamlab.qobj.CircuitInstance` or
:class:`~qamlab.protocol.ProtocolSpec` values.  Coin flips and measurements
are deferred: a coin is an H-prepared ancilla that controls the branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import DimensionError, is_unitary
from .protocol import ProtocolSpec, make_protocol
from .qobj import (
    MAX_DESCRIBE_QUBITS,
    MAX_SIM_QUBITS,
    CircuitInstance,
    Gate,
    adjoint_gates,
    circuit_from_dict,
    circuit_to_dict,
    compose_circuits,
    gate,
    remap_gates,
    x_on_pattern,
)

CITM_VERIFIER_CAP = 8
K_FACTOR = 2 * math.log(2) / math.log(400 / 399)


@dataclass(frozen=True, eq=False)
class CITMInstance:
    """Circuit plus promise parameters: yes if some output is a-close to mix, no if all are b-far."""

    circuit: CircuitInstance
    a: float
    b: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.a < self.b <= 1:
            raise ValueError(f"need 0 <= a < b <= 1, got a={self.a}, b={self.b}")

    def to_dict(self) -> dict:
        return {"kind": "CITM", "circuit": circuit_to_dict(self.circuit), "a": self.a, "b": self.b,
                "provenance": dict(self.provenance)}


@dataclass(frozen=True, eq=False)
class MaxOutQEAInstance:
    """Circuit plus entropy threshold: yes if S_max >= t + 1, no if S_max <= t - 1."""

    circuit: CircuitInstance
    t: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.t) < 1:
            raise ValueError(f"threshold t must be at least 1, got {self.t}")

    def to_dict(self) -> dict:
        return {"kind": "MaxOutQEA", "circuit": circuit_to_dict(self.circuit), "t": int(self.t),
                "provenance": dict(self.provenance)}


def instance_from_dict(doc: dict):
    kind = doc.get("kind")
    circ = circuit_from_dict(doc.get("circuit"), "$.circuit")
    prov = dict(doc.get("provenance", {}))
    if kind == "CITM":
        return CITMInstance(circ, float(doc["a"]), float(doc["b"]), prov)
    if kind == "MaxOutQEA":
        return MaxOutQEAInstance(circ, int(doc["t"]), prov)
    raise ValueError(f"$.kind: unknown instance kind {kind!r}")


def _on_pattern(gates: Sequence[Gate], controls: Sequence[int], pattern: Sequence[int]) -> list[Gate]:
    """Run ``gates`` only when ``controls`` hold ``pattern``."""
    flips = [gate("X", c) for c, b in zip(controls, pattern) if not b]
    return flips + [g.with_controls(controls) for g in gates] + flips


def _bits(w: int, l: int) -> list[int]:
    return [(w >> (l - 1 - k)) & 1 for k in range(l)]


# ---------------------------------------------------------------------------
# CITM verifier


def build_citm_verifier(Q: CircuitInstance) -> ProtocolSpec:
    """Two-turn qq verifier that accepts with high probability iff Q can output near-mix.

    Layout: V = [out], M_1 = kept EPR halves playing Q's output qubits, M_2 =
    the prover's reply playing Q's remaining qubits (ascending).  The
    verifier undoes U_Q and checks that every non-input qubit returned to |0>.
    """
    if Q.q_all > CITM_VERIFIER_CAP:
        raise DimensionError(f"CITM verifier supports at most {CITM_VERIFIER_CAP} circuit qubits")
    if Q.q_out == 0:
        raise ValueError("circuit has no output qubits")
    rest = [x for x in range(Q.q_all) if x not in Q.output_qubits]
    mp = {}
    for k, o in enumerate(Q.output_qubits):
        mp[o] = 1 + k
    for k, x in enumerate(rest):
        mp[x] = 1 + Q.q_out + k
    gates = remap_gates(adjoint_gates(Q.gates), mp)
    checked = [mp[x] for x in range(Q.q_all) if x not in Q.input_qubits]
    if checked:
        gates += x_on_pattern(0, checked, [0] * len(checked))
    else:
        gates.append(gate("X", 0))
    return make_protocol(("q", "q"), (Q.q_out, Q.q_all - Q.q_out), 1, gates, 0, note="CITM verifier")


# ---------------------------------------------------------------------------
# hardness circuit


def build_hardness_circuit(P: ProtocolSpec) -> CircuitInstance:
    """Circuit Q_x with inputs (S, M) and output S built from a two-turn qq verifier.

    Qubits: the protocol's ``width`` qubits, then a coin, then q_S swap
    ancillas ``a`` and q_S helpers ``b``.  Heads (coin 0) leaves S alone.
    Tails runs the verifier; on acceptance each ``a_j`` is made maximally
    mixed through an EPR pair with ``b_j``, and S is swapped with ``a``.
    """
    if P.m != 2 or P.turn_types != ("q", "q"):
        raise ValueError("the hardness circuit needs a two-turn qq protocol")
    w = P.width
    lS = P.msg_qubits[0]
    coin = w
    a = list(range(w + 1, w + 1 + lS))
    b = list(range(w + 1 + lS, w + 1 + 2 * lS))
    q_all = w + 1 + 2 * lS
    if q_all > MAX_SIM_QUBITS:
        raise DimensionError(f"hardness circuit needs {q_all} qubits, above {MAX_SIM_QUBITS}")
    S = P.msg_register(0)
    M = P.msg_register(1)
    out = P.output_qubit
    gates = [gate("H", coin)]
    gates += [g.with_controls([coin]) for g in P.verifier_circuit.gates]
    for aj, bj in zip(a, b):
        gates.append(Gate("H", (bj,), (coin, out)))
        gates.append(Gate("X", (aj,), (bj, coin, out)))
    for sj, aj in zip(S, a):
        gates.append(Gate("SWAP", (sj, aj), (coin,)))
    return CircuitInstance(q_all, tuple(gates), tuple(S + M), tuple(S))


def hardness_distance(p_acc: float, q_S: int) -> float:
    """Predicted D(Q_x(rho_x), mix) = (1 - p_acc)(1 - 2^-q_S) / 2."""
    return 0.5 * (1 - p_acc) * (1 - 2.0**-q_S)


# ---------------------------------------------------------------------------
# repetition and dispatch


def repeat_circuit(Q: CircuitInstance, k: int, cap: int = MAX_SIM_QUBITS) -> CircuitInstance:
    """k side-by-side copies of Q (copy c uses qubits c*q_all .. c*q_all + q_all - 1)."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return Q
    if k * Q.q_all > cap:
        raise DimensionError(f"{k} copies of a {Q.q_all}-qubit circuit exceed the cap {cap}")
    n = Q.q_all
    gates, ins, outs = [], [], []
    for c in range(k):
        mp = {x: c * n + x for x in range(n)}
        gates += remap_gates(Q.gates, mp)
        ins += [mp[x] for x in Q.input_qubits]
        outs += [mp[x] for x in Q.output_qubits]
    return CircuitInstance(k * n, tuple(gates), tuple(ins), tuple(outs))


def build_dispatch_circuit(family, l: int) -> CircuitInstance:
    """Circuit R: read an l-bit string w from the first inputs, then run Q'_w on the rest.

    ``family`` is a sequence of 2**l circuits or a callable ``w -> circuit``.
    W is pinned to the computational basis by CNOT copies, which makes R
    the mixture over the measured w.  Branch outputs are swapped into a
    dedicated output register.
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    getter: Callable[[int], CircuitInstance] = family if callable(family) else (lambda w: family[w])
    branches = [getter(w) for w in range(2**l)]
    q_inp, q_out = branches[0].q_inp, branches[0].q_out
    for w, B in enumerate(branches):
        if (B.q_inp, B.q_out) != (q_inp, q_out):
            raise ValueError(f"branch {w} has shape ({B.q_inp}, {B.q_out}), expected ({q_inp}, {q_out})")
    ws_size = max(B.q_all for B in branches)
    W = list(range(l))
    pins = list(range(l, 2 * l))
    ws = list(range(2 * l, 2 * l + ws_size))
    outreg = list(range(2 * l + ws_size, 2 * l + ws_size + q_out))
    q_all = 2 * l + ws_size + q_out
    if q_all > MAX_DESCRIBE_QUBITS:
        raise DimensionError(f"dispatch circuit needs {q_all} qubits")
    gates = [gate("CX", c, p) for c, p in zip(W, pins)]
    for w, B in enumerate(branches):
        rest = [x for x in range(B.q_all) if x not in B.input_qubits]
        mp = {x: ws[k] for k, x in enumerate(list(B.input_qubits) + rest)}
        body = remap_gates(B.gates, mp)
        body += [gate("SWAP", mp[o], t) for o, t in zip(B.output_qubits, outreg)]
        gates += _on_pattern(body, W, _bits(w, l)) if l else body
    return CircuitInstance(q_all, tuple(gates), tuple(W + ws[:q_inp]), tuple(outreg))


# ---------------------------------------------------------------------------
# MaxOutQEA


def k_formula(q: int) -> int:
    """Copy count ceil(2 ln 2 / ln(400/399) * q) used to polarize the hardness circuit."""
    return math.ceil(K_FACTOR * q)


def build_maxoutqea_hardness(P: ProtocolSpec, q: int, k: int | None = None) -> MaxOutQEAInstance:
    """Instance (Q', q'_out - 3) with Q' = k parallel copies of the hardness circuit.

    ``k`` defaults to :func:`k_formula`, which is far beyond simulation
    range; pass a small ``k`` for desk-scale use.  The provenance records
    whether the chosen k meets the formula.
    """
    if q < 1:
        raise ValueError("gap parameter q must be positive")
    Qx = build_hardness_circuit(P)
    k_req = k_formula(q)
    k_used = k_req if k is None else int(k)
    Qp = repeat_circuit(Qx, k_used, cap=MAX_DESCRIBE_QUBITS)
    t = Qp.q_out - 3
    if t < 1:
        raise ValueError(f"q'_out = {Qp.q_out} leaves no positive threshold; use more copies or a larger S")
    prov = {"builder": "maxoutqea_hardness", "q": q, "k": k_used, "k_formula": k_req,
            "gap_guaranteed": k_used >= k_req, "degenerate": k_used == 1,
            "q_S": P.msg_qubits[0], "q_M": P.msg_qubits[1]}
    return MaxOutQEAInstance(Qp, t, prov)


@dataclass(frozen=True, eq=False)
class Mixer:
    """Uniform mixture of unitaries applied to an n-qubit register.

    ``kind`` is "pauli" (all 4**n Pauli strings, two coins per qubit),
    "identity" (no coins) or "unitaries" (an explicit list of 2**d
    matrices on at most three qubits, d coins).
    """

    kind: str = "pauli"
    unitaries: tuple = ()

    def __post_init__(self):
        if self.kind not in ("pauli", "identity", "unitaries"):
            raise ValueError(f"unknown mixer kind {self.kind!r}")
        if self.kind == "unitaries":
            us = tuple(np.asarray(U, dtype=complex) for U in self.unitaries)
            if not us or len(us) & (len(us) - 1):
                raise ValueError("a unitary mixer needs 2**d unitaries so that uniform coins realize it")
            for U in us:
                if not is_unitary(U):
                    raise ValueError("mixer element is not unitary, the mixture would not be trace preserving")
            object.__setattr__(self, "unitaries", us)

    def coins(self, n: int) -> int:
        if self.kind == "pauli":
            return 2 * n
        if self.kind == "identity":
            return 0
        return int(math.log2(len(self.unitaries)))

    def circuit(self, n: int) -> CircuitInstance:
        """Circuit on (register, coins): H on the coins, then coin-controlled unitaries."""
        d = self.coins(n)
        coins = list(range(n, n + d))
        gates = [gate("H", c) for c in coins]
        if self.kind == "pauli":
            for j in range(n):
                gates.append(gate("CX", coins[2 * j], j))
                gates.append(gate("CZ", coins[2 * j + 1], j))
        elif self.kind == "unitaries":
            dim = self.unitaries[0].shape[0]
            if dim != 2**n or n > 3:
                raise ValueError(f"mixer unitaries act on {int(math.log2(dim))} qubits, register has {n}")
            for i, U in enumerate(self.unitaries):
                body = [Gate("U", tuple(range(n)), (), U)]
                gates += _on_pattern(body, coins, _bits(i, d)) if d else body
        return CircuitInstance(n + d, tuple(gates), tuple(range(n)), tuple(range(n)))


def reduce_maxoutqea_to_citm(inst: MaxOutQEAInstance, mixer: Mixer | None = None, q_copies: int = 1,
                             a: float | None = None, b: float | None = None,
                             eps: float = 2.0**-8) -> CITMInstance:
    """CITM instance R = mixer o Phi^{(x) q_copies}.

    Without explicit ``a`` and ``b`` the promise is set to a = 1.5 eps and
    b = 1 / (4 q_copies m_out), the closeness a perfect mixer with error
    eps gives on yes-instances and the distance every no-instance keeps.
    """
    mixer = mixer or Mixer("pauli")
    rep = repeat_circuit(inst.circuit, q_copies)
    n = rep.q_out
    R = compose_circuits(rep, mixer.circuit(n))
    if a is None:
        a = 1.5 * eps
    if b is None:
        b = 1.0 / (4 * q_copies * inst.circuit.q_out)
    prov = {"builder": "maxoutqea_to_citm", "mixer": mixer.kind, "coins": mixer.coins(n),
            "q_copies": q_copies, "eps": eps, "t": int(inst.t), "source": dict(inst.provenance)}
    return CITMInstance(R, float(a), float(b), prov)
