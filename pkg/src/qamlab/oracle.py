"""Brute-force reference values used to cross-check the optimizers.

Nothing here shares code paths with :mod:`qamlab.metrics` optimizers or
:func:`qamlab.protocol.optimal_value_two_turn`: states are sampled and
polished with Nelder-Mead, protocols are evaluated by full simulation, and
classical games by exhaustive strategy enumeration.  The fidelity SDP is a
different formulation from the see-saw it checks.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .metrics import trace_distance
from .protocol import ProtocolSpec, ProverStrategy, eval_with_prover, prover_unitary_qubits, unitary_with_columns
from .qobj import Channel, DensityMatrix
from .rand import ginibre, rng_from

STRATEGY_LIMIT = 2**20


@dataclass(frozen=True)
class SearchBudget:
    samples: int = 400
    polish_iters: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1 or self.polish_iters < 1:
            raise ValueError("budget counts must be positive")


def _vec(x: np.ndarray, d: int) -> np.ndarray:
    v = x[:d] + 1j * x[d:2 * d]
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 0 else np.eye(d, dtype=complex)[0]


def _mixed(x: np.ndarray, d: int) -> np.ndarray:
    A = (x[:d * d] + 1j * x[d * d:2 * d * d]).reshape(d, d)
    R = A @ A.conj().T
    tr = np.trace(R).real
    return R / tr if tr > 0 else np.eye(d) / d


def _as_params(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    A = v * np.sqrt(np.clip(w, 0, None))
    return np.concatenate([A.real.reshape(-1), A.imag.reshape(-1)])


def brute_max_over_states(f: Callable[[np.ndarray], float], n_qubits: int,
                          budget: SearchBudget | None = None) -> tuple[float, DensityMatrix]:
    """Maximize f over n-qubit density matrices (n <= 2).

    Haar-random pure states are scored, the best are polished, pairs of the
    best are mixed on a grid, and the winner is polished once more over
    mixed states.
    """
    if n_qubits > 2:
        raise ValueError("the state oracle handles at most two qubits")
    budget = budget or SearchBudget()
    d = 2**n_qubits
    rng = rng_from(budget.seed)
    cands = []
    for _ in range(budget.samples):
        v = ginibre(d, rng)
        v /= np.linalg.norm(v)
        cands.append((f(np.outer(v, v.conj())), v))
    cands.sort(key=lambda t: -t[0])
    top = []
    for val, v in cands[:4]:
        x0 = np.concatenate([v.real, v.imag])
        res = minimize(lambda x: -f(np.outer(_vec(x, d), _vec(x, d).conj())), x0, method="Nelder-Mead",
                       options={"maxiter": budget.polish_iters, "xatol": 1e-10, "fatol": 1e-13})
        u = _vec(res.x, d)
        top.append((max(val, -res.fun), u if -res.fun >= val else v))
    best_val, best = max(((v, np.outer(u, u.conj())) for v, u in top), key=lambda t: t[0])
    for (_, u1), (_, u2) in itertools.combinations(top, 2):
        for p in np.linspace(0, 1, 21):
            R = p * np.outer(u1, u1.conj()) + (1 - p) * np.outer(u2, u2.conj())
            val = f(R)
            if val > best_val:
                best_val, best = val, R
    res = minimize(lambda x: -f(_mixed(x, d)), _as_params(best), method="Nelder-Mead",
                   options={"maxiter": budget.polish_iters, "xatol": 1e-10, "fatol": 1e-13})
    if -res.fun > best_val:
        best_val, best = -res.fun, _mixed(res.x, d)
    return float(best_val), DensityMatrix(n_qubits, best)


def brute_min_output_trace_distance(Phi: Channel, Psi: Channel,
                                    budget: SearchBudget | None = None) -> tuple[float, tuple]:
    """min D(Phi(rho), Psi(sigma)) by sampling pairs of states and Nelder-Mead polish."""
    if Phi.in_qubits > 2:
        raise ValueError("the trace-distance oracle handles at most two input qubits")
    budget = budget or SearchBudget()
    d = Phi.din
    rng = rng_from(budget.seed)
    p = 2 * d * d

    def obj(x):
        return trace_distance(Phi.apply(_mixed(x[:p], d)), Psi.apply(_mixed(x[p:], d)))

    starts = [np.concatenate([_as_params(np.eye(d) / d)] * 2)]
    starts += [rng.standard_normal(2 * p) for _ in range(max(1, budget.samples // 50))]
    scored = sorted(starts, key=obj)[:4]
    best = (np.inf, None)
    for x0 in scored:
        res = minimize(obj, x0, method="Nelder-Mead",
                       options={"maxiter": budget.polish_iters, "xatol": 1e-12, "fatol": 1e-14, "adaptive": True})
        res = minimize(obj, res.x, method="Powell", options={"maxiter": budget.polish_iters, "xtol": 1e-10,
                                                               "ftol": 1e-14})
        if res.fun < best[0]:
            best = (res.fun, res.x)
    val, x = best
    return float(val), (DensityMatrix(Phi.in_qubits, _mixed(x[:p], d)), DensityMatrix(Psi.in_qubits, _mixed(x[p:], d)))


def sdp_max_output_fidelity(Phi: Channel, Psi: Channel) -> float:
    """F_max from the fidelity SDP: max Re tr X s.t. [[Phi(rho), X], [X^dag, Psi(sigma)]] >= 0."""
    import cvxpy as cp

    d, dB = Phi.din, Phi.dout
    rho = cp.Variable((d, d), hermitian=True)
    sig = cp.Variable((d, d), hermitian=True)
    X = cp.Variable((dB, dB), complex=True)
    # row-major vec(K R K^dag) = (K kron conj(K)) vec(R)
    T1 = sum(np.kron(K, K.conj()) for K in Phi.kraus)
    T2 = sum(np.kron(K, K.conj()) for K in Psi.kraus)
    A = cp.reshape(T1 @ cp.vec(rho, order="C"), (dB, dB), order="C")
    B = cp.reshape(T2 @ cp.vec(sig, order="C"), (dB, dB), order="C")
    block = cp.bmat([[A, X], [X.H, B]])
    cons = [rho >> 0, sig >> 0, cp.real(cp.trace(rho)) == 1, cp.real(cp.trace(sig)) == 1,
            (block + block.H) / 2 >> 0]
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(X))), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        pass
    if prob.status != cp.OPTIMAL:
        prob.solve(solver=cp.SCS, eps=1e-9)
    return float(min(1.0, prob.value))


# ---------------------------------------------------------------------------
# two-turn games


def _isometry(x: np.ndarray, rows: int, cols: int) -> np.ndarray:
    G = (x[:rows * cols] + 1j * x[rows * cols:]).reshape(rows, cols)
    u, _, vh = np.linalg.svd(G, full_matrices=False)
    return u @ vh


def brute_two_turn_value(P: ProtocolSpec, prover_qubits: int = 1,
                         budget: SearchBudget | None = None) -> tuple[float, ProverStrategy]:
    """Best acceptance over sampled and polished prover replies, by full simulation.

    The prover's unitary only matters on inputs (slot = h, private = 0,
    message = 0), so it is parametrized by an isometry on those columns.
    """
    if P.m != 2:
        raise ValueError("the two-turn oracle needs m = 2")
    if prover_qubits > 2:
        raise ValueError("the two-turn oracle handles at most two private qubits")
    budget = budget or SearchBudget()
    lS, lM = P.msg_qubits
    n = prover_unitary_qubits(P, prover_qubits, 1)
    if P.width + lS + prover_qubits > 8:
        raise ValueError("the two-turn oracle simulates at most 8 qubits")
    dS, D = 2**lS, 2**n
    cols = [h * 2 ** (prover_qubits + lM) for h in range(dS)]
    rng = rng_from(budget.seed)

    def strat(x):
        W = _isometry(x, D, dS)
        return ProverStrategy(prover_qubits, (unitary_with_columns(D, cols, W),))

    def obj(x):
        return -eval_with_prover(P, strat(x))

    k = 2 * D * dS
    xs = [rng.standard_normal(k) for _ in range(budget.samples)]
    scored = sorted(((obj(x), i) for i, x in enumerate(xs)))[:3]
    best = (np.inf, None)
    for val, i in scored:
        res = minimize(obj, xs[i], method="Nelder-Mead",
                       options={"maxiter": budget.polish_iters, "xatol": 1e-9, "fatol": 1e-12, "adaptive": True})
        if res.fun < best[0]:
            best = (res.fun, res.x)
    return float(-best[0]), strat(best[1])


# ---------------------------------------------------------------------------
# classical games


def _owners(m: int) -> list[str]:
    return ["P" if (m - i) % 2 == 1 else "V" for i in range(m)]


def enumerate_classical_strategies(table: np.ndarray, owners: Sequence[str] | None = None) -> float:
    """Exact optimum by trying every deterministic prover strategy.

    A prover strategy fixes a message for each prover turn and each history
    of verifier strings before it; its value averages the table over the
    verifier's strings.
    """
    T = np.asarray(table, dtype=float)
    m = T.ndim
    owners = list(owners) if owners is not None else _owners(m)
    sizes = T.shape
    vturns = [i for i in range(m) if owners[i] == "V"]
    pturns = [i for i in range(m) if owners[i] == "P"]
    domains = {i: list(itertools.product(*[range(sizes[v]) for v in vturns if v < i])) for i in pturns}
    choices = []
    for i in pturns:
        for h in domains[i]:
            choices.append((i, h))
    count = 1
    for i, h in choices:
        count *= sizes[i]
        if count > STRATEGY_LIMIT:
            raise ValueError(f"more than {STRATEGY_LIMIT} deterministic strategies")
    vstrings = list(itertools.product(*[range(sizes[v]) for v in vturns]))
    best = -np.inf
    for pick in itertools.product(*[range(sizes[i]) for i, _ in choices]):
        strat = dict(zip(choices, pick))
        total = 0.0
        for vs in vstrings:
            path = [0] * m
            vmap = dict(zip(vturns, vs))
            for i in range(m):
                if owners[i] == "V":
                    path[i] = vmap[i]
                else:
                    h = tuple(vmap[v] for v in vturns if v < i)
                    path[i] = strat[(i, h)]
            total += T[tuple(path)]
        best = max(best, total / len(vstrings))
    return float(best)


# ---------------------------------------------------------------------------
# fixtures


def inputs_hash(desc) -> str:
    """sha256 of a canonical JSON description of an oracle's inputs."""
    text = json.dumps(desc, sort_keys=True, separators=(",", ":"), default=_default)
    return hashlib.sha256(text.encode()).hexdigest()


def _default(o):
    if isinstance(o, np.ndarray):
        return {"re": np.round(o.real, 12).tolist(), "im": np.round(o.imag, 12).tolist()}
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot describe {type(o).__name__}")


def fixture(id: str, desc, value: float, seed: int, budget: SearchBudget | None) -> dict:
    return {"id": id, "inputs-hash": inputs_hash(desc), "value": float(value), "seed": int(seed),
            "budget": asdict(budget) if budget else None}


def load_fixtures(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    return {r["id"]: r for r in rows}


def write_fixtures(rows: list, path) -> None:
    rows = sorted(rows, key=lambda r: r["id"])
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=1, sort_keys=True)
        fh.write("\n")
