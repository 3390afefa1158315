"""Turn-structured quantum Arthur-Merlin games.

Layout conventions
------------------
Turns are stored chronologically (first turn first).  Turn ``j`` counted
from the *last* turn, the indexing used in the literature, is available
through :meth:`ProtocolSpec.turn_type`.  The last turn always belongs to the
prover, so the prover moves at chronological turn ``i`` iff ``m - i`` is odd
(0-based ``i``).

The verifier circuit acts on ``(V, M_1, ..., M_m)`` with ``V`` the first
``verifier_qubits`` qubits.  ``M_i`` is the chronological message register of
turn ``i``.  For a verifier turn it holds the verifier's own copy: the kept
EPR halves for a quantum turn, the random string (in the computational
basis) for a classical turn.  The prover receives the partner halves, or a
copy of the string, in a *slot* register of its workspace.  All registers
start in |0>.

A prover strategy holds one unitary per prover turn.  The unitary of a
prover turn acts on ``(slots of all verifier turns, private register P,
M_i)`` in that order; slots of turns that have not happened yet are still
|0>.  Messages of classical prover turns are measured in the computational
basis when sent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import MAX_DIM, apply_unitary, complete_to_unitary, is_unitary, polar_unitary
from .metrics import OptConfig, OptResult
from .qobj import (
    MAX_SIM_QUBITS,
    CircuitInstance,
    DensityMatrix,
    Gate,
    circuit_from_dict,
    circuit_to_dict,
    embed_inputs,
    gate,
    make_circuit,
    remap_gates,
    simulate,
    x_on_pattern,
)
from .rand import random_isometry, random_unitary, rng_from

TURN_TYPES = ("c", "q")
BRANCH_LIMIT = 256


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """An m-turn verifier: turn types, message sizes and the final circuit."""

    turn_types: tuple
    msg_qubits: tuple
    verifier_qubits: int
    output_qubit: int
    verifier_circuit: CircuitInstance
    note: str = ""

    def __post_init__(self):
        tt = tuple(self.turn_types)
        mq = tuple(int(x) for x in self.msg_qubits)
        if len(tt) < 1:
            raise ValueError("a protocol needs at least one turn")
        if any(t not in TURN_TYPES for t in tt):
            raise ValueError(f"turn types must be 'c' or 'q', got {tt}")
        if len(mq) != len(tt) or any(x < 0 for x in mq):
            raise ValueError("one nonnegative message size per turn is required")
        if not 0 <= self.output_qubit < self.verifier_qubits:
            raise ValueError("output qubit must lie in the verifier's private register")
        if self.verifier_circuit.q_all != self.verifier_qubits + sum(mq):
            raise ValueError(
                f"verifier circuit has {self.verifier_circuit.q_all} qubits, "
                f"expected {self.verifier_qubits + sum(mq)}")
        object.__setattr__(self, "turn_types", tt)
        object.__setattr__(self, "msg_qubits", mq)

    @property
    def m(self) -> int:
        return len(self.turn_types)

    def owner(self, i: int) -> str:
        """'P' or 'V' for chronological turn i (0-based)."""
        return "P" if (self.m - i) % 2 == 1 else "V"

    def turn_type(self, j: int) -> str:
        """Type t_j of turn j counted from the last turn (1-based)."""
        if not 1 <= j <= self.m:
            raise IndexError(f"turn index {j} out of range 1..{self.m}")
        return self.turn_types[self.m - j]

    @property
    def signature(self) -> str:
        """Turn types t_m ... t_1, i.e. in chronological order."""
        return "".join(self.turn_types)

    def msg_offset(self, i: int) -> int:
        return self.verifier_qubits + sum(self.msg_qubits[:i])

    def msg_register(self, i: int) -> list[int]:
        o = self.msg_offset(i)
        return list(range(o, o + self.msg_qubits[i]))

    @property
    def verifier_turns(self) -> list[int]:
        return [i for i in range(self.m) if self.owner(i) == "V"]

    @property
    def prover_turns(self) -> list[int]:
        return [i for i in range(self.m) if self.owner(i) == "P"]

    @property
    def ep_register(self) -> list[int]:
        """Circuit qubits holding the verifier's kept EPR halves."""
        return [q for i in self.verifier_turns if self.turn_types[i] == "q" for q in self.msg_register(i)]

    @property
    def width(self) -> int:
        return self.verifier_circuit.q_all


def make_protocol(turn_types: Sequence[str] | str, msg_qubits: Sequence[int], verifier_qubits: int,
                  gates: Sequence[Gate] = (), output_qubit: int = 0, note: str = "") -> ProtocolSpec:
    """Build a protocol from chronological turn types and a gate list."""
    width = verifier_qubits + sum(msg_qubits)
    Q = make_circuit(width, gates, outputs=[output_qubit])
    return ProtocolSpec(tuple(turn_types), tuple(msg_qubits), verifier_qubits, output_qubit, Q, note)


@dataclass(frozen=True, eq=False)
class ProverStrategy:
    """One unitary per prover turn, chronological, plus the private register size.

    ``measure`` mirrors the message types: classical prover messages are
    measured before they are sent.
    """

    private_qubits: int
    unitaries: tuple
    measure: tuple = ()

    def __post_init__(self):
        us = tuple(np.asarray(U, dtype=complex) for U in self.unitaries)
        for U in us:
            if not is_unitary(U, 1e-8):
                raise ValueError("prover operations must be unitary")
        object.__setattr__(self, "unitaries", us)


@dataclass
class Transcript:
    """One sampled run: per-turn messages and the conditional acceptance probability."""

    messages: list = field(default_factory=list)
    accept_prob: float = 0.0


# ---------------------------------------------------------------------------
# simulation


def _slot_offsets(P: ProtocolSpec) -> dict:
    base = P.width
    out = {}
    for i in P.verifier_turns:
        out[i] = base
        base += P.msg_qubits[i]
    return out


def workspace_qubits(P: ProtocolSpec, private_qubits: int) -> int:
    return sum(P.msg_qubits[i] for i in P.verifier_turns) + private_qubits


def prover_unitary_qubits(P: ProtocolSpec, private_qubits: int, i: int) -> int:
    """Number of qubits the prover's unitary at chronological turn i acts on."""
    return workspace_qubits(P, private_qubits) + P.msg_qubits[i]


def _check_strategy(P: ProtocolSpec, S: ProverStrategy):
    turns = P.prover_turns
    if len(S.unitaries) != len(turns):
        raise ValueError(f"strategy has {len(S.unitaries)} unitaries for {len(turns)} prover turns")
    for U, i in zip(S.unitaries, turns):
        n = prover_unitary_qubits(P, S.private_qubits, i)
        if U.shape != (2**n, 2**n):
            raise ValueError(f"prover unitary at turn {i} has shape {U.shape}, expected {2**n} square")


def _layout(P: ProtocolSpec, S: ProverStrategy, pins: bool):
    slots = _slot_offsets(P)
    n_ws = workspace_qubits(P, S.private_qubits)
    ws = list(range(P.width, P.width + n_ws))
    n = P.width + n_ws
    pin_base = {}
    if pins:
        for i in range(P.m):
            if P.turn_types[i] == "c":
                pin_base[i] = n
                n += P.msg_qubits[i]
    if n > MAX_SIM_QUBITS:
        raise ValueError(f"simulation needs {n} qubits, above the cap {MAX_SIM_QUBITS}")
    return slots, ws, pin_base, n


def _branch_count(P: ProtocolSpec) -> int:
    return int(np.prod([2 ** P.msg_qubits[i] for i in range(P.m) if P.turn_types[i] == "c"]))


def _run(P: ProtocolSpec, S: ProverStrategy, mode: str = "auto", sampler=None):
    """Simulate all turns; return weighted branches (weight, state) and metadata.

    ``mode`` is "branch" (exact sum over classical strings), "pins"
    (purified coins with copy ancillas) or "auto".  With a ``sampler`` rng a
    single branch is followed and a transcript is recorded.
    """
    _check_strategy(P, S)
    if mode == "auto":
        mode = "branch" if (sampler is not None or _branch_count(P) <= BRANCH_LIMIT) else "pins"
    pins = mode == "pins"
    slots, ws, pin_base, n = _layout(P, S, pins)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    branches = [(1.0, psi)]
    transcript = Transcript()
    prover_idx = 0
    for i in range(P.m):
        reg = P.msg_register(i)
        typ = P.turn_types[i]
        new = []
        if P.owner(i) == "V":
            slot = list(range(slots[i], slots[i] + len(reg)))
            if typ == "q" or pins:
                for w, v in branches:
                    for a, b in zip(reg, slot):
                        v = apply_unitary(v, _H, [a], n)
                        v = apply_unitary(v, _X, [b], n, [a])
                        if pins:
                            v = apply_unitary(v, _X, [pin_base[i] + reg.index(a)], n, [a]) if typ == "c" else v
                    new.append((w, v))
                if sampler is not None:
                    transcript.messages.append(("V", typ, _reduced(new[0][1], reg, n)))
            else:
                strings = range(2 ** len(reg))
                if sampler is not None:
                    strings = [int(sampler.integers(2 ** len(reg)))]
                for r in strings:
                    bits = _bits(r, len(reg))
                    for w, v in branches:
                        for q, bit in zip(reg + slot, bits + bits):
                            if bit:
                                v = apply_unitary(v, _X, [q], n)
                        new.append((w / 2 ** len(reg) if sampler is None else w, v))
                if sampler is not None:
                    transcript.messages.append(("V", "c", _bits(strings[0], len(reg))))
        else:
            U = S.unitaries[prover_idx]
            prover_idx += 1
            qubits = ws + reg
            for w, v in branches:
                v = apply_unitary(v, U, qubits, n)
                if typ == "c" and pins:
                    for k, a in enumerate(reg):
                        v = apply_unitary(v, _X, [pin_base[i] + k], n, [a])
                    new.append((w, v))
                elif typ == "c":
                    outcomes = _measure(v, reg, n)
                    if sampler is not None:
                        probs = np.array([p for _, p, _ in outcomes])
                        pick = int(sampler.choice(len(outcomes), p=probs / probs.sum()))
                        y, p, vy = outcomes[pick]
                        new.append((w, vy))
                        transcript.messages.append(("P", "c", _bits(y, len(reg))))
                    else:
                        new += [(w * p, vy) for y, p, vy in outcomes]
                else:
                    new.append((w, v))
                    if sampler is not None:
                        transcript.messages.append(("P", "q", _reduced(v, reg, n)))
        branches = new
    return branches, n, transcript


_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _bits(r: int, l: int) -> list[int]:
    return [(r >> (l - 1 - k)) & 1 for k in range(l)]


def _measure(v: np.ndarray, reg: list[int], n: int):
    """Computational-basis outcomes (y, prob, normalized post-state) on ``reg``."""
    T = v.reshape((2,) * n)
    T = np.moveaxis(T, reg, list(range(len(reg))))
    shp = T.shape
    T = T.reshape(2 ** len(reg), -1)
    out = []
    for y in range(2 ** len(reg)):
        p = float(np.vdot(T[y], T[y]).real)
        if p <= 1e-15:
            continue
        post = np.zeros_like(T)
        post[y] = T[y] / math.sqrt(p)
        post = np.moveaxis(post.reshape(shp), list(range(len(reg))), reg).reshape(-1)
        out.append((y, p, post))
    return out


def _reduced(v: np.ndarray, keep: list[int], n: int) -> np.ndarray:
    T = np.moveaxis(v.reshape((2,) * n), keep, list(range(len(keep)))).reshape(2 ** len(keep), -1)
    return T @ T.conj().T


def _accept(P: ProtocolSpec, v: np.ndarray, n: int) -> float:
    gates = P.verifier_circuit.gates
    for g in gates:
        v = apply_unitary(v, g.unitary(), g.targets, n, g.controls)
    T = v.reshape((2,) * n)
    T = np.moveaxis(T, P.output_qubit, 0).reshape(2, -1)
    return float(np.vdot(T[1], T[1]).real)


def eval_with_prover(P: ProtocolSpec, S: ProverStrategy, mode: str = "auto") -> float:
    """Exact acceptance probability of the verifier against a fixed prover."""
    branches, n, _ = _run(P, S, mode)
    total = sum(w * _accept(P, v, n) for w, v in branches)
    return float(min(1.0, max(0.0, total)))


def message_state(P: ProtocolSpec, S: ProverStrategy, mode: str = "auto") -> DensityMatrix:
    """State of (M_1, ..., M_m) just before the verifier's final circuit."""
    branches, n, _ = _run(P, S, mode)
    regs = [q for i in range(P.m) for q in P.msg_register(i)]
    if 2 ** len(regs) > MAX_DIM:
        raise ValueError("message registers exceed the dense cap")
    rho = sum(w * _reduced(v, regs, n) for w, v in branches)
    return DensityMatrix(len(regs), rho)


def sample_transcript(P: ProtocolSpec, S: ProverStrategy, seed=0) -> Transcript:
    """Follow one random branch, recording classical strings or register snapshots."""
    rng = rng_from(seed)
    branches, n, tr = _run(P, S, "branch", sampler=rng)
    w, v = branches[0]
    tr.accept_prob = _accept(P, v, n)
    return tr


def random_strategy(P: ProtocolSpec, private_qubits: int, seed=0) -> ProverStrategy:
    rng = rng_from(seed)
    us = [random_unitary(2 ** prover_unitary_qubits(P, private_qubits, i), rng) for i in P.prover_turns]
    return ProverStrategy(private_qubits, tuple(us))


def identity_strategy(P: ProtocolSpec, private_qubits: int = 0) -> ProverStrategy:
    us = [np.eye(2 ** prover_unitary_qubits(P, private_qubits, i), dtype=complex) for i in P.prover_turns]
    return ProverStrategy(private_qubits, tuple(us))


# ---------------------------------------------------------------------------
# two-turn optimal value


def acceptance_operator(P: ProtocolSpec) -> np.ndarray:
    """Effective POVM element E on (M_1, ..., M_m) with V initialized to |0>.

    Classical prover messages are pinched to their diagonal blocks, so
    tr(E sigma) is the acceptance probability of the message state sigma.
    """
    Q = P.verifier_circuit
    regs = [q for i in range(P.m) for q in P.msg_register(i)]
    if 2 ** len(regs) > MAX_DIM:
        raise ValueError("message registers exceed the dense cap")
    C = CircuitInstance(Q.q_all, Q.gates, tuple(regs), (P.output_qubit,))
    A = simulate(C, embed_inputs(C, np.eye(2 ** len(regs), dtype=complex)))
    T = np.moveaxis(A.reshape((2,) * Q.q_all + (-1,)), P.output_qubit, 0).reshape(2, -1, A.shape[1])
    E = T[1].conj().T @ T[1]
    E = (E + E.conj().T) / 2
    for i in P.prover_turns:
        if P.turn_types[i] == "c":
            E = _pinch(E, P, i)
    return E


def _pinch(E: np.ndarray, P: ProtocolSpec, i: int) -> np.ndarray:
    dims = [2 ** P.msg_qubits[k] for k in range(P.m)]
    d = int(np.prod(dims))
    T = E.reshape(dims + dims)
    m = P.m
    idx = np.arange(dims[i])
    mask_shape = [1] * (2 * m)
    mask_shape[i] = dims[i]
    mask_shape[m + i] = dims[i]
    mask = (idx[:, None] == idx[None, :]).reshape(mask_shape)
    return (T * mask).reshape(d, d)


def two_turn_dual_bound(E: np.ndarray, dS: int, dM: int) -> float:
    """Certified upper bound min tr(Y)/dS subject to Y (x) I_M >= E (cvxpy).

    The solver's Y is shifted by its worst constraint violation so that the
    returned number is a valid bound regardless of solver accuracy.
    """
    import cvxpy as cp

    from .metrics import _solve_attempts

    Y = cp.Variable((dS, dS), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(Y)) / dS), [cp.kron(Y, np.eye(dM)) - E >> 0])
    Yv = None
    for status in _solve_attempts(prob):
        if status is not None and Y.value is not None:
            Yv = np.asarray(Y.value)
            break
    if Yv is None:
        return 1.0
    Yv = (Yv + Yv.conj().T) / 2
    gap = np.linalg.eigvalsh(np.kron(Yv, np.eye(dM)) - E)[0]
    return float(min(1.0, np.trace(Yv).real / dS + max(0.0, -gap)))


def _check_two_turn(P: ProtocolSpec):
    if P.m != 2:
        raise ValueError(f"expected a two-turn protocol, got m={P.m}")


def optimal_value_two_turn(P: ProtocolSpec, cfg: OptConfig | None = None,
                           certify: bool = True) -> OptResult:
    """Maximum acceptance probability of a two-turn protocol.

    Verifier turn first, prover reply second.  For a quantum first turn the
    prover's reply is an isometry W from its EPR halves into (M_2, R); the
    value is a convex quadratic in W maximized by see-saw (polar step).  For
    a classical first turn each question r has a best reply, the top
    eigenvector of the block E_r.

    ``extra["strategy"]`` holds a prover strategy attaining ``value`` and
    ``bound`` a certified upper bound from the dual problem when
    ``certify`` is set.
    """
    _check_two_turn(P)
    cfg = cfg or OptConfig()
    lS, lM = P.msg_qubits
    dS, dM = 2**lS, 2**lM
    E = acceptance_operator(P)
    bound = two_turn_dual_bound(E, dS, dM) if certify and P.turn_types[0] == "q" else None
    if P.turn_types[0] == "c":
        vals, vecs = [], []
        for r in range(dS):
            w, v = np.linalg.eigh(E[r * dM:(r + 1) * dM, r * dM:(r + 1) * dM])
            vals.append(w[-1])
            vecs.append(v[:, -1])
        value = float(np.mean(vals))
        sigma = sum(np.kron(_proj_basis(r, dS), np.outer(v, v.conj())) for r, v in enumerate(vecs)) / dS
        strat = _strategy_from_classical(P, vecs)
        res = OptResult(value, (DensityMatrix(lS + lM, sigma),), 1, 0, True, bound=value)
        res.extra["strategy"] = strat
        return res

    rng = rng_from(cfg.seed)
    lR = lS + lM
    dR = 2**lR
    best = (-1.0, None)
    iters = 0
    conv_any = False
    r = 0
    for r in range(max(1, cfg.restarts)):
        X = random_isometry(dM * dR, dS, rng).T.reshape(dS, dM, dR)
        val = -1.0
        for it in range(cfg.max_iters):
            iters += 1
            Y = (E @ X.reshape(dS * dM, dR)).reshape(dS, dM, dR)
            new = float(np.vdot(X, Y).real) / dS
            G = Y.reshape(dS, dM * dR).T
            X = polar_unitary(G).T.reshape(dS, dM, dR)
            if new - val < cfg.tol:
                conv_any = True
                val = max(val, new)
                break
            val = new
        Xr = X.reshape(dS * dM, dR)
        val = float(np.vdot(Xr, E @ Xr).real) / dS
        if val > best[0]:
            best = (val, X)
        if best[0] >= 1 - 1e-12 or (bound is not None and bound - best[0] < 1e-9):
            break
    val, X = best
    Xr = X.reshape(dS * dM, dR)
    sigma = Xr @ Xr.conj().T / dS
    marg = np.einsum("imjm->ij", sigma.reshape(dS, dM, dS, dM))
    residual = float(np.max(np.abs(marg - np.eye(dS) / dS)))
    res = OptResult(float(np.real(np.trace(E @ sigma))), (DensityMatrix(lS + lM, sigma),), iters, r + 1,
                    conv_any, bound=bound, residual=residual)
    res.extra["strategy"] = _strategy_from_isometry(P, X)
    return res


def _proj_basis(r: int, d: int) -> np.ndarray:
    M = np.zeros((d, d), dtype=complex)
    M[r, r] = 1
    return M


def unitary_with_columns(d: int, cols: Sequence[int], W: np.ndarray) -> np.ndarray:
    """Unitary whose columns at indices ``cols`` are the columns of isometry W."""
    U0 = complete_to_unitary(W)
    rest = [c for c in range(d) if c not in set(cols)]
    U = np.empty((d, d), dtype=complex)
    U[:, list(cols)] = U0[:, :len(cols)]
    U[:, rest] = U0[:, len(cols):]
    return U


def _strategy_from_isometry(P: ProtocolSpec, X: np.ndarray) -> ProverStrategy:
    """Prover unitary on (slot, private, M_2) realizing |h> -> sum X[h, m, r] |r>|m>.

    The purifying index r (dimension dS*dM) is stored in (slot, private), so
    a private register of lM qubits suffices.
    """
    lS, lM = P.msg_qubits
    dS, dM, dR = X.shape
    q_P = lM
    n = lS + q_P + lM
    d_rest = 2 ** (lS + q_P)
    # output index (r padded into slot+private, m); input |h, 0_P, 0_M>
    W = np.zeros((2**n, dS), dtype=complex)
    for h in range(dS):
        full = np.zeros((d_rest, dM), dtype=complex)
        full[:dR, :] = X[h].T
        W[:, h] = full.reshape(-1)
    cols = [h * 2 ** (q_P + lM) for h in range(dS)]
    return ProverStrategy(q_P, (unitary_with_columns(2**n, cols, W),))


def _strategy_from_classical(P: ProtocolSpec, vecs) -> ProverStrategy:
    lS, lM = P.msg_qubits
    q_P = 0
    n = lS + q_P + lM
    dS, dM = 2**lS, 2**lM
    W = np.zeros((2**n, dS), dtype=complex)
    cols = []
    for r, v in enumerate(vecs):
        col = np.zeros((dS, 2**q_P, dM), dtype=complex)
        col[r, 0, :] = v
        W[:, r] = col.reshape(-1)
        cols.append(r * 2 ** (q_P + lM))
    return ProverStrategy(q_P, (unitary_with_columns(2**n, cols, W),))


# ---------------------------------------------------------------------------
# classical turns


def restrict_prefix(P: ProtocolSpec, prefix: Sequence[int]) -> ProtocolSpec:
    """Fix the first len(prefix) (classical) messages; the result has the remaining turns.

    The fixed registers become part of the verifier's private register and
    are prepared by X gates.
    """
    k = len(prefix)
    if k == 0:
        return P
    if any(P.turn_types[i] != "c" for i in range(k)):
        raise ValueError("only classical turns can be fixed")
    gates = []
    for i, s in enumerate(prefix):
        reg = P.msg_register(i)
        for q, b in zip(reg, _bits(int(s), len(reg))):
            if b:
                gates.append(gate("X", q))
    gates += list(P.verifier_circuit.gates)
    qV = P.verifier_qubits + sum(P.msg_qubits[:k])
    return ProtocolSpec(P.turn_types[k:], P.msg_qubits[k:], qV, P.output_qubit,
                        make_circuit(P.width, gates, outputs=[P.output_qubit]))


LEAF_LIMIT = 2**16


def backward_induction(owners: Sequence[str], table: np.ndarray) -> float:
    """Value of a game tree: max over prover turns, mean over verifier turns."""
    T = np.asarray(table, dtype=float)
    if T.ndim != len(owners):
        raise ValueError("table rank must equal the number of turns")
    for ax in range(T.ndim - 1, -1, -1):
        T = T.max(axis=ax) if owners[ax] == "P" else T.mean(axis=ax)
    return float(T)


def classical_backward_value(P: ProtocolSpec, leaf=None, cfg: OptConfig | None = None) -> float:
    """Exact optimal value when the leading turns are classical.

    ``leaf`` is either an array indexed by the leading messages (its rank
    sets how many turns are expanded), a callable ``prefix -> value`` for the
    remaining two turns, or ``None`` to solve each remaining two-turn game
    with :func:`optimal_value_two_turn`.
    """
    if isinstance(leaf, np.ndarray) or isinstance(leaf, list):
        table = np.asarray(leaf, dtype=float)
        depth = table.ndim
    else:
        depth = P.m - 2
    if depth < 0 or depth > P.m:
        raise ValueError("invalid expansion depth")
    for i in range(depth):
        if P.turn_types[i] != "c":
            raise ValueError(f"turn {i} (chronological) is not classical")
    sizes = [2 ** P.msg_qubits[i] for i in range(depth)]
    n_leaves = int(np.prod(sizes)) if sizes else 1
    if n_leaves > LEAF_LIMIT:
        raise ValueError(f"enumeration budget exceeded: {n_leaves} leaves")
    owners = [P.owner(i) for i in range(depth)]
    if isinstance(leaf, np.ndarray) or isinstance(leaf, list):
        if list(table.shape) != sizes:
            raise ValueError(f"leaf table shape {table.shape} does not match message sizes {sizes}")
        return backward_induction(owners, table)
    if leaf is None:
        def leaf(prefix):
            return optimal_value_two_turn(restrict_prefix(P, prefix), cfg).value
    vals = np.empty(n_leaves)
    for idx, prefix in enumerate(itertools.product(*[range(s) for s in sizes])):
        vals[idx] = leaf(prefix)
    return backward_induction(owners, vals.reshape(sizes) if sizes else vals.reshape(()))


def table_protocol(turn_types: Sequence[str] | str, msg_qubits: Sequence[int], table: np.ndarray) -> ProtocolSpec:
    """All-classical protocol whose verifier accepts transcript t with probability table[t].

    The acceptance amplitude is loaded by a controlled rotation on the
    output qubit for every transcript with a nonzero entry.
    """
    table = np.asarray(table, dtype=float)
    if any(t != "c" for t in turn_types):
        raise ValueError("table protocols are all-classical")
    sizes = [2**l for l in msg_qubits]
    if list(table.shape) != sizes:
        raise ValueError("table shape does not match message sizes")
    if table.min() < 0 or table.max() > 1:
        raise ValueError("table entries must be probabilities")
    width = 1 + sum(msg_qubits)
    regs = list(range(1, width))
    gates = []
    for idx in itertools.product(*[range(s) for s in sizes]):
        p = table[idx]
        if p <= 0:
            continue
        pattern = [b for s, l in zip(idx, msg_qubits) for b in _bits(s, l)]
        flips = [q for q, b in zip(regs, pattern) if not b]
        gates += [gate("X", q) for q in flips]
        if p >= 1:
            gates.append(Gate("X", (0,), tuple(regs)))
        else:
            th = math.asin(math.sqrt(p))
            Ry = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]], dtype=complex)
            gates.append(Gate("U", (0,), tuple(regs), Ry))
        gates += [gate("X", q) for q in flips]
    return make_protocol(tuple(turn_types), tuple(msg_qubits), 1, gates, 0)


def alternating_types(m: int, kind: str = "c") -> tuple:
    return tuple(kind for _ in range(m))


# ---------------------------------------------------------------------------
# transforms


def _copy_layout(P: ProtocolSpec, k: int, extra_v: int):
    """Qubit maps for k side-by-side copies; V copies first, then extra V qubits, then messages."""
    qV = P.verifier_qubits
    new_qV = k * qV + extra_v
    maps = []
    for c in range(k):
        mp = {v: c * qV + v for v in range(qV)}
        off = new_qV
        for i in range(P.m):
            l = P.msg_qubits[i]
            for b in range(l):
                mp[P.msg_offset(i) + b] = off + c * l + b
            off += k * l
        maps.append(mp)
    return new_qV, maps


def parallel_repeat(P: ProtocolSpec, k: int) -> ProtocolSpec:
    """k independent parallel copies; accept iff every copy accepts."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return P
    new_qV, maps = _copy_layout(P, k, 1)
    out = k * P.verifier_qubits
    gates = []
    for mp in maps:
        gates += remap_gates(P.verifier_circuit.gates, mp)
    gates.append(Gate("X", (out,), tuple(mp[P.output_qubit] for mp in maps)))
    width = new_qV + k * sum(P.msg_qubits)
    return ProtocolSpec(P.turn_types, tuple(k * l for l in P.msg_qubits), new_qV, out,
                        make_circuit(width, gates, outputs=[out]))


def threshold_parameters(c: float, s: float, q_prime: int) -> dict:
    """Copy count N = 2 q' q^2 with q = ceil(1/(c - s)) and the acceptance threshold."""
    if not c > s:
        raise ValueError("completeness must exceed soundness")
    q = math.ceil(1 / (c - s) - 1e-9)
    N = 2 * q_prime * q * q
    frac = (c + s) / 2
    T = math.ceil(N * frac - 1e-9)
    return {"q": q, "N": N, "fraction": frac, "threshold": T}


def counter_gates(inputs: Sequence[int], counter: Sequence[int], out: int, threshold: int) -> list[Gate]:
    """Count the |1> inputs into a binary counter (MSB first), then flag count >= threshold."""
    gates = []
    b = len(counter)
    for x in inputs:
        # increment: flip bit p when x and all lower bits are 1, MSB first
        for p in range(b):
            lower = list(counter[p + 1:])
            gates.append(Gate("X", (counter[p],), tuple([x] + lower)))
    for v in range(threshold, 2**b):
        gates += x_on_pattern(out, counter, _bits(v, b))
    return gates


def threshold_repeat(P: ProtocolSpec, c: float, s: float, q_prime: int) -> ProtocolSpec:
    """N parallel attempts, accept iff at least a (c + s)/2 fraction accepts."""
    par = threshold_parameters(c, s, q_prime)
    N, T = par["N"], par["threshold"]
    b = N.bit_length()
    new_qV, maps = _copy_layout(P, N, b + 1)
    counter = list(range(N * P.verifier_qubits, N * P.verifier_qubits + b))
    out = N * P.verifier_qubits + b
    gates = []
    for mp in maps:
        gates += remap_gates(P.verifier_circuit.gates, mp)
    gates += counter_gates([mp[P.output_qubit] for mp in maps], counter, out, T)
    width = new_qV + N * sum(P.msg_qubits)
    return ProtocolSpec(P.turn_types, tuple(N * l for l in P.msg_qubits), new_qV, out,
                        make_circuit(width, gates, outputs=[out]),
                        note=f"threshold repetition N={N} T={T}")


def binomial_tail(p: float, N: int, T: int) -> float:
    """Pr[Bin(N, p) >= T], the acceptance of N independent attempts at threshold T."""
    return float(sum(math.comb(N, j) * p**j * (1 - p) ** (N - j) for j in range(T, N + 1)))


def lift_classical_turn(P: ProtocolSpec, j: int) -> ProtocolSpec:
    """Make turn j (counted from the last turn) quantum, pinning it with CNOT copies."""
    if not 1 <= j <= P.m:
        raise IndexError(f"turn index {j} out of range 1..{P.m}")
    i = P.m - j
    if P.turn_types[i] != "c":
        raise ValueError(f"turn {j} is already quantum")
    l = P.msg_qubits[i]
    qV = P.verifier_qubits
    mp = {q: q if q < qV else q + l for q in range(P.width)}
    pins = list(range(qV, qV + l))
    gates = [gate("CX", mp[a], p) for a, p in zip(P.msg_register(i), pins)]
    gates += remap_gates(P.verifier_circuit.gates, mp)
    types = list(P.turn_types)
    types[i] = "q"
    return ProtocolSpec(tuple(types), P.msg_qubits, qV + l, P.output_qubit,
                        make_circuit(P.width + l, gates, outputs=[P.output_qubit]), P.note)


# ---------------------------------------------------------------------------
# JSON


def protocol_to_dict(P: ProtocolSpec) -> dict:
    return {
        "turn_types": list(P.turn_types),
        "turn_order": "first turn first; the reverse index j counts from the last turn, "
                      "so turn_types[0] is t_m",
        "msg_qubits": list(P.msg_qubits),
        "verifier_qubits": P.verifier_qubits,
        "output_qubit": P.output_qubit,
        "verifier_circuit": circuit_to_dict(P.verifier_circuit),
    }


def protocol_from_dict(doc: dict) -> ProtocolSpec:
    for key in ("turn_types", "msg_qubits", "verifier_qubits", "output_qubit", "verifier_circuit"):
        if key not in doc:
            raise ValueError(f"$.{key}: missing field")
    Q = circuit_from_dict(doc["verifier_circuit"], "$.verifier_circuit")
    return ProtocolSpec(tuple(doc["turn_types"]), tuple(doc["msg_qubits"]), int(doc["verifier_qubits"]),
                        int(doc["output_qubit"]), Q)


def echo_game(l: int = 1, quantum_question: bool = False) -> ProtocolSpec:
    """Verifier sends r (l bits), prover answers y; accept iff y == r."""
    t = ("q" if quantum_question else "c", "c")
    # V = [out], M_1 = r, M_2 = y; compare by CX y->r then test r == 0
    gates = [gate("CX", 1 + l + b, 1 + b) for b in range(l)]
    gates += x_on_pattern(0, list(range(1, 1 + l)), [0] * l)
    return make_protocol(t, (l, l), 1, gates, 0, note="echo game")


def random_protocol(turn_types, msg_qubits, verifier_qubits: int, depth: int, seed=0) -> ProtocolSpec:
    """Verifier with a random final circuit on all its qubits."""
    from .qobj import random_circuit

    width = verifier_qubits + sum(msg_qubits)
    Q = random_circuit(width, width, 1, depth, seed)
    return make_protocol(tuple(turn_types), tuple(msg_qubits), verifier_qubits, Q.gates, 0)


def always_accept(turn_types=("q", "q"), msg_qubits=(1, 1)) -> ProtocolSpec:
    return make_protocol(tuple(turn_types), tuple(msg_qubits), 1, [gate("X", 0)], 0)


def echo_prover(P: ProtocolSpec) -> ProverStrategy:
    """Copy the received question (slot) into the answer register with CNOTs."""
    l = P.msg_qubits[0]
    n = l + l
    g = [gate("CX", b, l + b) for b in range(l)]
    U = simulate(make_circuit(n, g), np.eye(2**n, dtype=complex))
    return ProverStrategy(0, (U,))
