"""States, channels and unitary circuits with designated input/output qubits."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .linalg import (
    DimensionError,
    apply_unitary,
    check_dim,
    clamp_eigenvalues,
    hermitize,
    is_unitary,
    tensor,
)

# Statevector simulation is allowed beyond the dense-matrix cap.
MAX_SIM_QUBITS = 16
# Circuits may be described (not simulated) up to this width.
MAX_DESCRIBE_QUBITS = 64


# ---------------------------------------------------------------------------
# states and channels


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated n-qubit density matrix."""

    n_qubits: int
    mat: np.ndarray

    def __post_init__(self):
        d = 2**self.n_qubits
        check_dim(d)
        M = np.asarray(self.mat, dtype=complex)
        if M.shape != (d, d):
            raise DimensionError(f"expected a {d}x{d} matrix for {self.n_qubits} qubits, got {M.shape}")
        M = hermitize(M)
        clamp_eigenvalues(np.linalg.eigvalsh(M))
        tr = np.trace(M).real
        if abs(tr - 1) > 1e-9:
            raise ValueError(f"density matrix has trace {tr!r}")
        M.setflags(write=False)
        object.__setattr__(self, "mat", M)

    @classmethod
    def from_array(cls, M) -> "DensityMatrix":
        M = np.asarray(M, dtype=complex)
        n = int(round(np.log2(M.shape[0])))
        return cls(n, M)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls.from_array(np.outer(psi, psi.conj()))

    @classmethod
    def mixed(cls, n: int) -> "DensityMatrix":
        return cls(n, np.eye(2**n, dtype=complex) / 2**n)

    @classmethod
    def zero(cls, n: int) -> "DensityMatrix":
        M = np.zeros((2**n, 2**n), dtype=complex)
        M[0, 0] = 1
        return cls(n, M)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def __matmul__(self, other: "DensityMatrix") -> "DensityMatrix":
        # tensor product, self as the most significant factor
        return DensityMatrix(self.n_qubits + other.n_qubits, np.kron(self.mat, other.mat))


def as_matrix(x) -> np.ndarray:
    """Return the raw array of a DensityMatrix or array-like."""
    if isinstance(x, DensityMatrix):
        return x.mat
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True, eq=False)
class Channel:
    """CPTP map in Kraus form, from ``in_qubits`` to ``out_qubits`` qubits."""

    in_qubits: int
    out_qubits: int
    kraus: tuple

    def __post_init__(self):
        din, dout = 2**self.in_qubits, 2**self.out_qubits
        check_dim(din)
        check_dim(dout)
        ks = tuple(np.asarray(K, dtype=complex) for K in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        for K in ks:
            if K.shape != (dout, din):
                raise DimensionError(f"Kraus operator of shape {K.shape}, expected {(dout, din)}")
        S = sum(K.conj().T @ K for K in ks)
        err = np.max(np.abs(S - np.eye(din)))
        if err > 1e-8:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.3g})")
        object.__setattr__(self, "kraus", ks)

    @classmethod
    def from_unitary(cls, U) -> "Channel":
        U = np.asarray(U, dtype=complex)
        n = int(round(np.log2(U.shape[0])))
        return cls(n, n, (U,))

    @classmethod
    def identity(cls, n: int) -> "Channel":
        return cls(n, n, (np.eye(2**n, dtype=complex),))

    @classmethod
    def constant(cls, rho, in_qubits: int) -> "Channel":
        """Replacement channel that outputs ``rho`` for every input."""
        R = as_matrix(rho)
        n_out = int(round(np.log2(R.shape[0])))
        w, v = np.linalg.eigh(hermitize(R))
        w = clamp_eigenvalues(w)
        din = 2**in_qubits
        ks = []
        for j in range(len(w)):
            if w[j] <= 0:
                continue
            for i in range(din):
                K = np.zeros((2**n_out, din), dtype=complex)
                K[:, i] = np.sqrt(w[j]) * v[:, j]
                ks.append(K)
        return cls(in_qubits, n_out, tuple(ks))

    @property
    def din(self) -> int:
        return 2**self.in_qubits

    @property
    def dout(self) -> int:
        return 2**self.out_qubits

    def apply(self, rho) -> np.ndarray:
        R = as_matrix(rho)
        if R.shape != (self.din, self.din):
            raise DimensionError(f"input of shape {R.shape} for a {self.in_qubits}-qubit channel")
        K = np.stack(self.kraus)
        return np.einsum("kij,jl,kml->im", K, R, K.conj())

    def __call__(self, rho) -> DensityMatrix:
        return DensityMatrix(self.out_qubits, self.apply(rho))

    def adjoint(self, X) -> np.ndarray:
        """Heisenberg-picture map X -> sum_k K^dag X K."""
        K = np.stack(self.kraus)
        return np.einsum("kji,jl,klm->im", K.conj(), np.asarray(X), K)

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij |i><j| (x) Phi(|i><j|), input factor first."""
        K = np.stack(self.kraus)  # (k, out, in)
        A = K.transpose(2, 1, 0).reshape(self.din * self.dout, -1)
        return A @ A.conj().T

    def simplify(self, tol: float = 1e-12) -> "Channel":
        """Equivalent channel with a minimal number of Kraus operators."""
        return Channel(self.in_qubits, self.out_qubits, _minimal_kraus(np.stack(self.kraus), tol))

    def compose(self, other: "Channel") -> "Channel":
        """Return self after other, i.e. rho -> self(other(rho))."""
        if other.out_qubits != self.in_qubits:
            raise DimensionError("channel dimensions do not compose")
        ks = tuple(A @ B for A in self.kraus for B in other.kraus)
        return Channel(other.in_qubits, self.out_qubits, ks).simplify()

    def tensor(self, other: "Channel") -> "Channel":
        ks = tuple(np.kron(A, B) for A in self.kraus for B in other.kraus)
        return Channel(self.in_qubits + other.in_qubits, self.out_qubits + other.out_qubits, ks)

    def power(self, k: int) -> "Channel":
        out = self
        for _ in range(k - 1):
            out = out.tensor(self).simplify()
        return out

    def stinespring(self) -> np.ndarray:
        """Isometry V with rows ordered (output, environment)."""
        K = np.stack(self.kraus)  # (e, out, in)
        return K.transpose(1, 0, 2).reshape(self.dout * len(self.kraus), self.din)


def _minimal_kraus(K: np.ndarray, tol: float = 1e-12) -> tuple:
    """Minimal Kraus set from a stack of shape (n_kraus, d_out, d_in)."""
    e, dout, din = K.shape
    A = K.transpose(1, 2, 0).reshape(dout * din, e)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    r = max(1, int(np.sum(s > tol * max(1.0, s[0]))))
    return tuple((u[:, j] * s[j]).reshape(dout, din) for j in range(r))


# ---------------------------------------------------------------------------
# gates and circuits

_SQ2 = 1 / np.sqrt(2)
GATE_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CX": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_ccx = np.eye(8, dtype=complex)
_ccx[6:, 6:] = GATE_MATRICES["X"]
GATE_MATRICES["CCX"] = _ccx
GATE_NAMES = ("H", "X", "Y", "Z", "S", "T", "CX", "CZ", "SWAP", "CCX", "U")
_ARITY = {"H": 1, "X": 1, "Y": 1, "Z": 1, "S": 1, "T": 1, "CX": 2, "CZ": 2, "SWAP": 2, "CCX": 3}
_SELF_INVERSE = {"H", "X", "Y", "Z", "CX", "CZ", "SWAP", "CCX"}


@dataclass(frozen=True, eq=False)
class Gate:
    """A named gate on ``targets`` with optional extra ``controls``.

    Two- and three-qubit named gates list all their qubits in ``targets``
    (for CX and CCX the controls come first).  ``U`` carries an explicit
    unitary on one to three target qubits.
    """

    name: str
    targets: tuple
    controls: tuple = ()
    matrix: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        if self.name not in GATE_NAMES:
            raise ValueError(f"unknown gate name {self.name!r}")
        t = len(self.targets)
        if self.name == "U":
            if self.matrix is None:
                raise ValueError("gate U requires a matrix")
            M = np.array(self.matrix, dtype=complex)
            if not 1 <= t <= 3 or M.shape != (2**t, 2**t):
                raise ValueError(f"U matrix of shape {M.shape} does not match {t} targets")
            if not is_unitary(M):
                raise ValueError("U matrix is not unitary")
            M.setflags(write=False)
            object.__setattr__(self, "matrix", M)
        else:
            if self.matrix is not None:
                raise ValueError(f"named gate {self.name} must not carry a matrix")
            if t != _ARITY[self.name]:
                raise ValueError(f"gate {self.name} acts on {_ARITY[self.name]} qubits, got {t}")
        qs = self.targets + self.controls
        if len(set(qs)) != len(qs):
            raise ValueError("gate qubits must be distinct")

    def unitary(self) -> np.ndarray:
        return self.matrix if self.name == "U" else GATE_MATRICES[self.name]

    def qubits(self) -> tuple:
        return self.targets + self.controls

    def dagger(self) -> "Gate":
        if self.name in _SELF_INVERSE:
            return self
        return Gate("U", self.targets, self.controls, self.unitary().conj().T)

    def remap(self, mapping) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.targets),
                    tuple(mapping[q] for q in self.controls), self.matrix)

    def with_controls(self, extra: Sequence[int]) -> "Gate":
        return Gate(self.name, self.targets, tuple(extra) + self.controls, self.matrix)

    def same_as(self, other: "Gate") -> bool:
        if (self.name, self.targets, self.controls) != (other.name, other.targets, other.controls):
            return False
        if self.matrix is None:
            return other.matrix is None
        return other.matrix is not None and np.array_equal(self.matrix, other.matrix)


def gate(name: str, *targets: int, controls: Sequence[int] = (), matrix=None) -> Gate:
    return Gate(name, tuple(targets), tuple(controls), matrix)


def x_on_pattern(target: int, controls: Sequence[int], pattern: Sequence[int]) -> list[Gate]:
    """X on ``target`` controlled on ``controls`` holding the bit ``pattern``."""
    flips = [c for c, b in zip(controls, pattern) if not b]
    gs = [gate("X", c) for c in flips]
    gs.append(Gate("X", (target,), tuple(controls)))
    gs += [gate("X", c) for c in flips]
    return gs


@dataclass(frozen=True, eq=False)
class CircuitInstance:
    """Unitary circuit on ``q_all`` qubits with designated inputs and outputs.

    Non-input qubits start in |0>.  The circuit's channel traces out every
    qubit that is not an output.
    """

    q_all: int
    gates: tuple = ()
    input_qubits: tuple = ()
    output_qubits: tuple = ()

    def __post_init__(self):
        q = int(self.q_all)
        if q < 0 or q > MAX_DESCRIBE_QUBITS:
            raise DimensionError(f"circuit width {q} outside [0, {MAX_DESCRIBE_QUBITS}]")
        ins = tuple(int(i) for i in self.input_qubits)
        outs = tuple(int(o) for o in self.output_qubits)
        for lst, what in ((ins, "input"), (outs, "output")):
            if any(i < 0 or i >= q for i in lst):
                raise IndexError(f"{what} qubit index out of range")
            if len(set(lst)) != len(lst):
                raise ValueError(f"duplicate {what} qubits")
        gs = tuple(self.gates)
        for g in gs:
            if any(i < 0 or i >= q for i in g.qubits()):
                raise IndexError("gate qubit index out of range")
        object.__setattr__(self, "gates", gs)
        object.__setattr__(self, "input_qubits", ins)
        object.__setattr__(self, "output_qubits", outs)

    @property
    def q_inp(self) -> int:
        return len(self.input_qubits)

    @property
    def q_out(self) -> int:
        return len(self.output_qubits)

    def same_as(self, other: "CircuitInstance") -> bool:
        return (self.q_all == other.q_all and self.input_qubits == other.input_qubits
                and self.output_qubits == other.output_qubits and len(self.gates) == len(other.gates)
                and all(a.same_as(b) for a, b in zip(self.gates, other.gates)))


def make_circuit(q_all: int, gates: Iterable[Gate] = (), q_inp: int | None = None,
                 q_out: int | None = None, inputs=None, outputs=None) -> CircuitInstance:
    """Build a circuit; inputs default to the first q_inp qubits, outputs to the last q_out."""
    if inputs is None:
        inputs = range(q_all if q_inp is None else q_inp)
    if outputs is None:
        k = q_all if q_out is None else q_out
        outputs = range(q_all - k, q_all)
    return CircuitInstance(q_all, tuple(gates), tuple(inputs), tuple(outputs))


def simulate(Q: CircuitInstance, psi: np.ndarray) -> np.ndarray:
    """Apply the circuit's gates to a (batched) statevector on all q_all qubits."""
    if Q.q_all > MAX_SIM_QUBITS:
        raise DimensionError(f"{Q.q_all} qubits exceed the simulation cap {MAX_SIM_QUBITS}")
    for g in Q.gates:
        psi = apply_unitary(psi, g.unitary(), g.targets, Q.q_all, g.controls)
    return psi


def circuit_unitary(Q: CircuitInstance) -> np.ndarray:
    d = 2**Q.q_all
    check_dim(d)
    return simulate(Q, np.eye(d, dtype=complex))


def embed_inputs(Q: CircuitInstance, X: np.ndarray) -> np.ndarray:
    """Place columns of X (on the input qubits) into the full register, ancillas |0>."""
    n = Q.q_all
    k = X.shape[1] if X.ndim == 2 else 1
    X = X.reshape(2**Q.q_inp, k)
    out = np.zeros((2,) * n + (k,), dtype=complex)
    idx = [0] * n
    for q in Q.input_qubits:
        idx[q] = slice(None)
    sub = X.reshape((2,) * Q.q_inp + (k,))
    # the sliced view orders axes by qubit index, not by input order
    order = np.argsort(Q.input_qubits)
    out[tuple(idx)] = sub.transpose(list(order) + [Q.q_inp])
    return out.reshape(2**n, k)


def circuit_isometry(Q: CircuitInstance) -> np.ndarray:
    """Isometry from the inputs to (outputs, environment) as a 2^q_all x 2^q_inp matrix.

    Rows are ordered with the output qubits (in ``output_qubits`` order)
    most significant, then the remaining qubits in increasing index order.
    """
    psi = simulate(Q, embed_inputs(Q, np.eye(2**Q.q_inp, dtype=complex)))
    env = [q for q in range(Q.q_all) if q not in Q.output_qubits]
    perm = list(Q.output_qubits) + env
    T = psi.reshape((2,) * Q.q_all + (-1,)).transpose(perm + [Q.q_all])
    return T.reshape(2**Q.q_all, -1)


def channel_of_circuit(Q: CircuitInstance, minimal: bool = True) -> Channel:
    """Kraus form of the circuit's channel via its Stinespring isometry."""
    check_dim(2**Q.q_inp)
    check_dim(2**Q.q_out)
    V = circuit_isometry(Q)
    dout = 2**Q.q_out
    K = V.reshape(dout, -1, 2**Q.q_inp).transpose(1, 0, 2)
    if minimal and K.shape[0] > 1:
        return Channel(Q.q_inp, Q.q_out, _minimal_kraus(K))
    return Channel(Q.q_inp, Q.q_out, tuple(K))


def apply_circuit(Q: CircuitInstance, rho) -> DensityMatrix:
    """Output state Q(rho) = tr_non-output(U (rho (x) |0..0><0..0|) U^dag)."""
    R = as_matrix(rho)
    if R.shape != (2**Q.q_inp, 2**Q.q_inp):
        raise DimensionError(f"input of shape {R.shape} for a circuit with {Q.q_inp} input qubits")
    V = circuit_isometry(Q)
    dout = 2**Q.q_out
    A = V.reshape(dout, -1, 2**Q.q_inp)
    B = np.einsum("oei,ij->oej", A, R)
    out = np.einsum("oej,pej->op", B, A.conj())
    return DensityMatrix(Q.q_out, out)


def adjoint_gates(gates: Sequence[Gate]) -> list[Gate]:
    return [g.dagger() for g in reversed(gates)]


def remap_gates(gates: Sequence[Gate], mapping) -> list[Gate]:
    return [g.remap(mapping) for g in gates]


def controlled_gates(gates: Sequence[Gate], controls: Sequence[int]) -> list[Gate]:
    return [g.with_controls(controls) for g in gates]


def compose_circuits(first: CircuitInstance, second: CircuitInstance) -> CircuitInstance:
    """Run ``first`` then ``second`` with first's outputs wired to second's inputs.

    Both circuits are laid side by side; second's non-input qubits get fresh
    qubits, first's non-output qubits become garbage.
    """
    if first.q_out != second.q_inp:
        raise DimensionError("output/input counts do not match")
    n1 = first.q_all
    mapping = {}
    for o, i in zip(first.output_qubits, second.input_qubits):
        mapping[i] = o
    nxt = n1
    for q in range(second.q_all):
        if q not in mapping:
            mapping[q] = nxt
            nxt += 1
    gates = list(first.gates) + remap_gates(second.gates, mapping)
    return CircuitInstance(nxt, tuple(gates), first.input_qubits,
                           tuple(mapping[o] for o in second.output_qubits))


# ---------------------------------------------------------------------------
# JSON


class CircuitParseError(ValueError):
    """Schema violation in a circuit document; the message starts with a path."""


def _err(path: str, msg: str):
    raise CircuitParseError(f"{path}: {msg}")


def _int_list(v, path, q):
    if not isinstance(v, list):
        _err(path, "expected a list of integers")
    out = []
    for i, x in enumerate(v):
        if not isinstance(x, int) or isinstance(x, bool):
            _err(f"{path}[{i}]", "expected an integer")
        if x < 0 or x >= q:
            _err(f"{path}[{i}]", "index out of range")
        out.append(x)
    return out


def _parse_matrix(v, path):
    if not isinstance(v, list) or not v:
        _err(path, "expected a nonempty list of rows")
    rows = []
    for i, row in enumerate(v):
        if not isinstance(row, list):
            _err(f"{path}[{i}]", "expected a row")
        r = []
        for j, z in enumerate(row):
            ok = (isinstance(z, list) and len(z) == 2
                  and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z))
            if not ok:
                _err(f"{path}[{i}][{j}]", "expected [re, im]")
            r.append(complex(z[0], z[1]))
        rows.append(r)
    if any(len(r) != len(rows) for r in rows):
        _err(path, "matrix is not square")
    return np.array(rows, dtype=complex)


def circuit_from_dict(doc, path: str = "$") -> CircuitInstance:
    if not isinstance(doc, dict):
        _err(path, "expected an object")
    allowed = {"qubits", "inputs", "outputs", "gates"}
    for key in doc:
        if key not in allowed:
            _err(f"{path}.{key}", "unknown field")
    q = doc.get("qubits")
    if not isinstance(q, int) or isinstance(q, bool) or q < 0:
        _err(f"{path}.qubits", "expected a nonnegative integer")
    if q > MAX_DESCRIBE_QUBITS:
        _err(f"{path}.qubits", f"more than {MAX_DESCRIBE_QUBITS} qubits")
    ins = _int_list(doc.get("inputs", list(range(q))), f"{path}.inputs", q)
    outs = _int_list(doc.get("outputs", list(range(q))), f"{path}.outputs", q)
    gates_doc = doc.get("gates", [])
    if not isinstance(gates_doc, list):
        _err(f"{path}.gates", "expected a list")
    gates = []
    for gi, g in enumerate(gates_doc):
        gp = f"{path}.gates[{gi}]"
        if not isinstance(g, dict):
            _err(gp, "expected an object")
        for key in g:
            if key not in {"name", "targets", "controls", "matrix"}:
                _err(f"{gp}.{key}", "unknown field")
        name = g.get("name")
        if name not in GATE_NAMES:
            _err(f"{gp}.name", f"unknown gate name {name!r}")
        targets = _int_list(g.get("targets"), f"{gp}.targets", q)
        controls = _int_list(g.get("controls", []), f"{gp}.controls", q)
        matrix = None
        if "matrix" in g:
            matrix = _parse_matrix(g["matrix"], f"{gp}.matrix")
        try:
            gates.append(Gate(name, tuple(targets), tuple(controls), matrix))
        except ValueError as exc:
            _err(gp, str(exc))
    try:
        return CircuitInstance(q, tuple(gates), tuple(ins), tuple(outs))
    except (ValueError, IndexError) as exc:
        _err(path, str(exc))


def parse_circuit(text) -> CircuitInstance:
    """Parse a circuit JSON document (string, bytes or already-decoded dict)."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CircuitParseError(f"$: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    else:
        doc = text
    return circuit_from_dict(doc)


def _matrix_doc(M: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def circuit_to_dict(Q: CircuitInstance) -> dict:
    gates = []
    for g in Q.gates:
        d = {"name": g.name, "targets": list(g.targets)}
        if g.controls:
            d["controls"] = list(g.controls)
        if g.matrix is not None:
            d["matrix"] = _matrix_doc(g.matrix)
        gates.append(d)
    return {"qubits": Q.q_all, "inputs": list(Q.input_qubits),
            "outputs": list(Q.output_qubits), "gates": gates}


def serialize_circuit(Q: CircuitInstance) -> str:
    return json.dumps(circuit_to_dict(Q))


def load_circuit(path) -> CircuitInstance:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse_circuit(text)
    except CircuitParseError as exc:
        raise CircuitParseError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# a few standard circuits


def identity_circuit(n: int = 1) -> CircuitInstance:
    return make_circuit(n)


def constant_zero_circuit(n: int = 1) -> CircuitInstance:
    """n inputs that are discarded; n fresh |0> ancillas are output."""
    return make_circuit(2 * n, q_inp=n, q_out=n)


def unitary_circuit(U: np.ndarray) -> CircuitInstance:
    n = int(round(np.log2(U.shape[0])))
    if n > 3:
        raise DimensionError("explicit U gates act on at most three qubits")
    return make_circuit(n, [Gate("U", tuple(range(n)), (), U)])


def pure_state(psi) -> DensityMatrix:
    return DensityMatrix.pure(psi)


def product_state(*rhos) -> DensityMatrix:
    M = tensor(*[as_matrix(r) for r in rhos])
    return DensityMatrix.from_array(M)



def random_circuit(q_all: int, q_inp: int, q_out: int, depth: int, rng) -> CircuitInstance:
    """Random circuit of named gates and random single-qubit U gates.

    Inputs are the first q_inp qubits and outputs the last q_out.
    """
    from .rand import random_unitary, rng_from

    rng = rng_from(rng)
    gates = []
    for _ in range(depth):
        kind = int(rng.integers(4)) if q_all > 1 else int(rng.integers(2))
        if kind == 0:
            gates.append(gate("H", int(rng.integers(q_all))))
        elif kind == 1:
            gates.append(Gate("U", (int(rng.integers(q_all)),), (), random_unitary(2, rng)))
        else:
            a, b = (int(x) for x in rng.choice(q_all, 2, replace=False))
            gates.append(gate("CX" if kind == 2 else "CZ", a, b))
    return make_circuit(q_all, gates, q_inp=q_inp, q_out=q_out)
