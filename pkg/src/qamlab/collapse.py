"""Turn-reduction transforms: majority folding, first-turn merging,
XOR-shift covering and teleportation of a quantum reply.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import apply_unitary
from .protocol import (
    LEAF_LIMIT,
    ProtocolSpec,
    ProverStrategy,
    backward_induction,
    classical_backward_value,
    counter_gates,
    optimal_value_two_turn,
    prover_unitary_qubits,
    restrict_prefix,
)
from .qobj import Gate, gate, make_circuit, remap_gates, simulate
from .rand import trial_seed


def _bits(v: int, l: int) -> list[int]:
    return [(v >> (l - 1 - k)) & 1 for k in range(l)]


def _on_pattern(gates, controls, pattern) -> list[Gate]:
    flips = [gate("X", c) for c, b in zip(controls, pattern) if not b]
    return flips + [g.with_controls(controls) for g in gates] + flips


# ---------------------------------------------------------------------------
# majority folding


@dataclass
class FoldReport:
    k: int
    l: int
    p_original: float
    p_folded: float
    bound_lower: float
    bound_upper: float

    @property
    def within(self) -> bool:
        return self.bound_lower - 1e-12 <= self.p_folded <= self.bound_upper + 1e-12


def fold_bounds(p: float, k: int, l: int) -> tuple[float, float]:
    """(max(0, 1 - 2^k (1-p)^(k/2)), min(1, 2^(k+l) p^(k/2)))."""
    if not 0 <= p <= 1:
        raise ValueError("p must be a probability")
    lower = max(0.0, 1 - 2.0**k * (1 - p) ** (k / 2))
    upper = min(1.0, 2.0 ** (k + l) * p ** (k / 2))
    return lower, upper


def majority_threshold(k: int) -> int:
    """Smallest count that is strictly more than k/2; exactly k/2 rejects."""
    return k // 2 + 1


def majority_prob(ps: Sequence[float], k: int | None = None) -> float:
    """Pr[more than k/2 of independent Bernoulli(ps) succeed]."""
    k = len(ps) if k is None else k
    dist = np.zeros(len(ps) + 1)
    dist[0] = 1.0
    for p in ps:
        dist[1:] = dist[1:] * (1 - p) + dist[:-1] * p
        dist[0] *= 1 - p
    return float(dist[majority_threshold(k):].sum())


def _check_foldable(P: ProtocolSpec):
    if P.m < 3 or P.m % 2 == 0:
        raise ValueError("folding needs an odd number of turns (prover moves first), at least 3")
    if any(P.turn_types[i] != "c" for i in range(3)):
        raise ValueError("the first three turns must be classical")


def _fixed_accept(P: ProtocolSpec, msgs: Sequence[int]) -> float:
    """Acceptance probability of the final circuit on fixed classical messages."""
    n = P.width
    idx = 0
    for i, s in enumerate(msgs):
        for q, b in zip(P.msg_register(i), _bits(int(s), P.msg_qubits[i])):
            idx |= b << (n - 1 - q)
    psi = np.zeros(2**n, dtype=complex)
    psi[idx] = 1
    out = simulate(P.verifier_circuit, psi).reshape((2,) * n)
    T = np.moveaxis(out, P.output_qubit, 0).reshape(2, -1)
    return float(np.vdot(T[1], T[1]).real)


def tail_values(P: ProtocolSpec, cfg=None) -> np.ndarray:
    """w[y, r, z]: optimal acceptance after the first three (classical) messages."""
    _check_foldable(P)
    sizes = [2 ** P.msg_qubits[i] for i in range(3)]
    w = np.empty(sizes)
    for y, r, z in itertools.product(*[range(s) for s in sizes]):
        if P.m == 3:
            w[y, r, z] = _fixed_accept(P, (y, r, z))
            continue
        R = restrict_prefix(P, (y, r, z))
        if R.m == 2:
            w[y, r, z] = optimal_value_two_turn(R, cfg, certify=False).value
        else:
            w[y, r, z] = classical_backward_value(R, None, cfg)
    return w


def fold_value_shortcut(w: np.ndarray, k: int) -> float:
    """Folded value E_{r_1..r_k} max_{y,z} Pr[majority of copies accept].

    Copy j accepts independently with probability w[y, r_j, z]; the tail
    value already includes the prover's best continuation for that copy.
    """
    Ly, Lr, Lz = w.shape
    total = 0.0
    for rs in itertools.product(range(Lr), repeat=k):
        best = 0.0
        for y in range(Ly):
            for z in range(Lz):
                best = max(best, majority_prob([w[y, r, z] for r in rs], k))
        total += best
    return total / Lr**k


def folded_table(table: np.ndarray, k: int) -> tuple[list[str], np.ndarray]:
    """Leaf table of the folded game built from an all-classical table.

    Folded turns: (r_1..r_k), (y, z), then each tail turn in k copies.
    Returns the owners and the table for :func:`backward_induction`.
    """
    T = np.asarray(table, dtype=float)
    m = T.ndim
    if m < 3 or m % 2 == 0:
        raise ValueError("the original table must have an odd number of turns >= 3")
    L = T.shape
    sizes = [L[1] ** k, L[0] * L[2]] + [L[i] ** k for i in range(3, m)]
    n_leaves = int(np.prod(sizes))
    if n_leaves > LEAF_LIMIT:
        raise ValueError(f"folded tree has {n_leaves} leaves, above {LEAF_LIMIT}")
    owners = ["V", "P"] + ["V" if (m - i) % 2 == 0 else "P" for i in range(3, m)]
    out = np.empty(n_leaves)

    def digits(v, base):
        ds = []
        for _ in range(k):
            ds.append(v % base)
            v //= base
        return ds[::-1]

    for idx, leaf in enumerate(itertools.product(*[range(s) for s in sizes])):
        rs = digits(leaf[0], L[1])
        y, z = divmod(leaf[1], L[2])
        tails = [digits(leaf[2 + t], L[3 + t]) for t in range(m - 3)]
        ps = [T[(y, rs[j], z) + tuple(tl[j] for tl in tails)] for j in range(k)]
        out[idx] = majority_prob(ps, k)
    return owners, out.reshape(sizes)


def fold_turns_once(P: ProtocolSpec, k: int) -> ProtocolSpec:
    """Verifier that sends k questions first, then runs k copies of the tail and takes a majority.

    Layout: V' = k copies of V, a counter and the output qubit.  Turn 1
    carries r_1..r_k, turn 2 carries (y, z), and each later turn carries the
    k copies of the original message.
    """
    _check_foldable(P)
    if k < 1:
        raise ValueError("k must be positive")
    qV, l = P.verifier_qubits, P.msg_qubits
    b = max(1, k.bit_length())
    counter = list(range(k * qV, k * qV + b))
    out = k * qV + b
    new_qV = out + 1
    new_sizes = [k * l[1], l[0] + l[2]] + [k * l[i] for i in range(3, P.m)]
    offs = np.cumsum([new_qV] + new_sizes).tolist()
    gates = []
    for c in range(k):
        mp = {v: c * qV + v for v in range(qV)}
        for t, q in enumerate(P.msg_register(0)):
            mp[q] = offs[1] + t
        for t, q in enumerate(P.msg_register(1)):
            mp[q] = offs[0] + c * l[1] + t
        for t, q in enumerate(P.msg_register(2)):
            mp[q] = offs[1] + l[0] + t
        for i in range(3, P.m):
            for t, q in enumerate(P.msg_register(i)):
                mp[q] = offs[i - 1] + c * l[i] + t
        gates += remap_gates(P.verifier_circuit.gates, mp)
    outs = [c * qV + P.output_qubit for c in range(k)]
    gates += counter_gates(outs, counter, out, majority_threshold(k))
    types = ("c", "c") + P.turn_types[3:]
    width = offs[-1]
    return ProtocolSpec(types, tuple(new_sizes), new_qV, out, make_circuit(width, gates, outputs=[out]),
                        note=f"majority fold k={k}")


def fold_report(P: ProtocolSpec, k: int, table: np.ndarray | None = None, cfg=None) -> FoldReport:
    """Original and folded values with the majority-fold sandwich.

    With a full leaf ``table`` both values come from exact backward
    induction; otherwise from tail values of ``P``.
    """
    _check_foldable(P)
    l = max(P.msg_qubits[:3])
    if table is not None:
        owners = [P.owner(i) for i in range(P.m)]
        p = backward_induction(owners, table)
        w = _tail_from_table(table)
    else:
        w = tail_values(P, cfg)
        p = backward_induction(["P", "V", "P"], w)
    pf = fold_value_shortcut(w, k)
    lo, hi = fold_bounds(p, k, l)
    return FoldReport(k, l, p, pf, lo, hi)


def _tail_from_table(table: np.ndarray) -> np.ndarray:
    T = np.asarray(table, dtype=float)
    m = T.ndim
    for ax in range(m - 1, 2, -1):
        T = T.max(axis=ax) if (m - ax) % 2 == 1 else T.mean(axis=ax)
    return T


# ---------------------------------------------------------------------------
# merging a random string into the first turn


def merge_first_turn(P: ProtocolSpec, extra_bits: int,
                     family: Callable[[int], ProtocolSpec] | None = None) -> ProtocolSpec:
    """Prepend an extra random string r to the verifier's first message.

    ``family(r)`` gives the protocol to run once r is known; all members
    share P's shape.  Without a family the rest of the protocol ignores r.
    When the first turn is quantum, r is sent as EPR halves and the
    verifier's halves are pinned to the computational basis by CNOT copies,
    which is the same as measuring them.
    """
    if P.owner(0) != "V":
        raise ValueError("the first turn belongs to the prover")
    l = int(extra_bits)
    if l < 0:
        raise ValueError("extra_bits must be nonnegative")
    quantum = P.turn_types[0] == "q"
    qV = P.verifier_qubits
    npins = l if quantum else 0
    new_qV = qV + npins
    rreg = list(range(new_qV, new_qV + l))
    pins = list(range(qV, qV + npins))
    shift = npins + l
    mp = {q: q if q < qV else q + shift for q in range(P.width)}
    members = [family(r) for r in range(2**l)] if family else [P]
    for R in members:
        if (R.turn_types, R.msg_qubits, R.verifier_qubits, R.output_qubit) != \
                (P.turn_types, P.msg_qubits, P.verifier_qubits, P.output_qubit):
            raise ValueError("all family members must share the protocol's shape")
    gates = [gate("CX", a, p) for a, p in zip(rreg, pins)]
    if family is None:
        gates += remap_gates(P.verifier_circuit.gates, mp)
    else:
        ctrl = pins if quantum else rreg
        for r, R in enumerate(members):
            body = remap_gates(R.verifier_circuit.gates, mp)
            gates += _on_pattern(body, ctrl, _bits(r, l)) if l else body
    sizes = (P.msg_qubits[0] + l,) + P.msg_qubits[1:]
    return ProtocolSpec(P.turn_types, sizes, new_qV, P.output_qubit,
                        make_circuit(P.width + shift, gates, outputs=[P.output_qubit]),
                        note=f"merged {l} extra bits")


def merge_soundness_arithmetic(bad_fraction: float = 3 * 2.0**-8, c: float = 2 / 3,
                               s: float = 1 / 3) -> dict:
    """Acceptance bounds after merging: yes >= (1-f) c, no <= f + (1-f) s."""
    yes = (1 - bad_fraction) * c
    no = bad_fraction + (1 - bad_fraction) * s
    return {"yes": yes, "no": no, "yes_ok": yes > 5 / 8, "no_ok": no < 3 / 8}


# ---------------------------------------------------------------------------
# fat and thin sets


@dataclass(frozen=True)
class BitSubset:
    """Subset of {0,1}^l stored as a sorted tuple of integers."""

    l: int
    members: tuple = ()

    def __post_init__(self):
        ms = tuple(sorted(set(int(x) for x in self.members)))
        if any(x < 0 or x >= 2**self.l for x in ms):
            raise ValueError(f"members must be {self.l}-bit strings")
        object.__setattr__(self, "members", ms)

    @property
    def density(self) -> float:
        return len(self.members) / 2**self.l

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(2**self.l, dtype=bool)
        m[list(self.members)] = True
        return m

    def is_fat(self) -> bool:
        return self.density >= 1 - 1 / self.l

    def is_thin(self) -> bool:
        return self.density <= 1 / self.l


def xor_shift_intersect(S: BitSubset, shifts: Sequence[int]) -> bool:
    """True iff some x lies in every S xor r_j, i.e. x xor r_j is in S for all j."""
    if len(shifts) == 0:
        raise ValueError("at least one shift is required")
    if any(r < 0 or r >= 2**S.l for r in shifts):
        raise ValueError(f"shifts must be {S.l}-bit strings")
    x = np.arange(2**S.l)
    ok = np.ones(2**S.l, dtype=bool)
    mask = S.mask
    for r in shifts:
        ok &= mask[x ^ int(r)]
    return bool(ok.any())


def fatthin_bound(l: int, k: int) -> float:
    """Lower bound 1 - 2^l / l^k on the emptiness probability for thin sets."""
    return 1 - 2.0**l / float(l) ** k


def fat_thin_experiment(S: BitSubset, k: int, trials: int, seed: int, case: str = "fat") -> float:
    """Monte Carlo frequency of a nonempty (fat) or empty (thin) k-shift intersection.

    Each trial draws its shifts from its own generator seeded by
    ``trial_seed(seed, trial)`` so the result does not depend on scheduling.
    """
    if case not in ("fat", "thin"):
        raise ValueError("case must be 'fat' or 'thin'")
    if trials == 0:
        return float("nan")
    hits = 0
    for t in range(trials):
        rng = np.random.default_rng(trial_seed(seed, t, "fatthin"))
        shifts = rng.integers(0, 2**S.l, size=k)
        inter = xor_shift_intersect(S, shifts)
        hits += inter if case == "fat" else (not inter)
    return hits / trials


def exact_intersection_probability(S: BitSubset, k: int) -> float:
    """Exact Pr over uniform shifts that the k-fold intersection is nonempty."""
    L = 2**S.l
    n = sum(xor_shift_intersect(S, rs) for rs in itertools.product(range(L), repeat=k))
    return n / L**k


# ---------------------------------------------------------------------------
# shell of the perfect-completeness protocol with an abstract sub-verifier


@dataclass(frozen=True)
class SubVerifierStub:
    """Stand-in for a perfect-completeness sub-protocol: accepts yes-instances always,
    no-instances with probability at most ``soundness``."""

    soundness: float = 0.5

    def accept_prob(self, is_yes: bool) -> float:
        return 1.0 if is_yes else self.soundness


def shell_acceptance(S_yes: BitSubset, shifts: Sequence[int], stub: SubVerifierStub) -> float:
    """Best prover's acceptance: choose r, then every instance r xor r_j is checked.

    Instances outside ``S_yes`` are treated as no-instances.
    """
    mask = S_yes.mask
    best = 0.0
    for r in range(2**S_yes.l):
        p = 1.0
        for rj in shifts:
            p *= stub.accept_prob(bool(mask[r ^ int(rj)]))
        best = max(best, p)
    return best


# ---------------------------------------------------------------------------
# teleportation


def teleport_transform(P: ProtocolSpec):
    """Replace the quantum third message of a qcq protocol by 2l classical bits.

    New layout: (V, M_1, S_1, r, b).  The prover sends l extra qubits S_1
    with its first message.  After receiving b the verifier applies
    Z^{b_{j,2}} and then X^{b_{j,1}} to the j-th qubit of S_1 and runs the
    original check with S_1 in place of M_2.

    Returns the new protocol and a function mapping a strategy for P to the
    teleporting strategy for the new protocol.
    """
    if P.m != 3 or P.turn_types != ("q", "c", "q"):
        raise ValueError(f"expected a qcq protocol, got {P.signature}")
    qV = P.verifier_qubits
    l1, lr, l = P.msg_qubits
    M1 = list(range(qV, qV + l1))
    S1 = list(range(qV + l1, qV + l1 + l))
    R = list(range(qV + l1 + l, qV + l1 + l + lr))
    B = list(range(qV + l1 + l + lr, qV + l1 + l + lr + 2 * l))
    mp = {v: v for v in range(qV)}
    mp.update(dict(zip(P.msg_register(0), M1)))
    mp.update(dict(zip(P.msg_register(1), R)))
    mp.update(dict(zip(P.msg_register(2), S1)))
    gates = []
    for j, s in enumerate(S1):
        gates.append(gate("CZ", B[2 * j + 1], s))
        gates.append(gate("CX", B[2 * j], s))
    gates += remap_gates(P.verifier_circuit.gates, mp)
    width = qV + l1 + l + lr + 2 * l
    newP = ProtocolSpec(("q", "c", "c"), (l1 + l, lr, 2 * l), qV, P.output_qubit,
                        make_circuit(width, gates, outputs=[P.output_qubit]), note="teleported reply")

    def transform(S: ProverStrategy) -> ProverStrategy:
        qP = S.private_qubits
        # old unitaries act on (slot r, P, M_i); new private register is (P, M2', S2)
        n0 = prover_unitary_qubits(newP, qP + 2 * l, 0)
        slot = list(range(lr))
        Pp = list(range(lr, lr + qP))
        M2p = list(range(lr + qP, lr + qP + l))
        S2 = list(range(lr + qP + l, lr + qP + 2 * l))
        base = lr + qP + 2 * l
        m1 = list(range(base, base + l1))
        s1 = list(range(base + l1, base + l1 + l))
        U0 = np.eye(2**n0, dtype=complex)
        U0 = apply_unitary(U0, S.unitaries[0], slot + Pp + m1, n0)
        for a, b in zip(s1, S2):
            U0 = apply_unitary(U0, _H, [a], n0)
            U0 = apply_unitary(U0, _X, [b], n0, [a])
        n2 = prover_unitary_qubits(newP, qP + 2 * l, 2)
        bb = list(range(base, base + 2 * l))
        U2 = np.eye(2**n2, dtype=complex)
        U2 = apply_unitary(U2, S.unitaries[1], slot + Pp + M2p, n2)
        for j, (mq, sq) in enumerate(zip(M2p, S2)):
            U2 = apply_unitary(U2, _X, [sq], n2, [mq])
            U2 = apply_unitary(U2, _H, [mq], n2)
            U2 = apply_unitary(U2, _X, [bb[2 * j]], n2, [sq])
            U2 = apply_unitary(U2, _X, [bb[2 * j + 1]], n2, [mq])
        return ProverStrategy(qP + 2 * l, (U0, U2))

    return newP, transform


_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def bell_outcome_bits(label: str) -> tuple[int, int]:
    """Correction bits (b1 selects X, b2 selects Z) for a Bell-basis outcome."""
    table = {"phi+": (0, 0), "phi-": (0, 1), "psi+": (1, 0), "psi-": (1, 1)}
    return table[label]
