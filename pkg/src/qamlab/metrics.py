"""Distances, entropies and their channel-optimized versions.

All logarithms are base 2.  Functions accept :class:`DensityMatrix` objects
or plain arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import clamp_eigenvalues, eigh, hermitize, mat_func, xlogx
from .qobj import Channel, DensityMatrix, as_matrix
from .rand import random_density, random_state_vector, rng_from


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class ProbDist:
    """Finite probability distribution."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a nonempty finite vector")
        if w.min() < 0:
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, d: int) -> "ProbDist":
        return cls(np.full(d, 1.0 / d))


@dataclass
class OptConfig:
    restarts: int = 32
    max_iters: int = 500
    tol: float = 1e-10
    seed: int = 0


@dataclass
class OptResult:
    """Optimizer output with re-checkable certificates.

    ``bound`` holds a certified bound on the other side when the method
    provides one (a dual value), ``residual`` a constraint violation.
    """

    value: float
    witness_states: tuple
    iterations: int
    restarts: int
    converged: bool
    bound: float | None = None
    residual: float = 0.0
    extra: dict = field(default_factory=dict)


def _probs(mu) -> np.ndarray:
    if isinstance(mu, ProbDist):
        return mu.weights
    return ProbDist(mu).weights


def _pair(rho, sigma):
    A, B = as_matrix(rho), as_matrix(sigma)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A, B


# ---------------------------------------------------------------------------
# state functionals


def trace_distance(rho, sigma) -> float:
    """D(rho, sigma) = (1/2) sum |eig(rho - sigma)|."""
    A, B = _pair(rho, sigma)
    w = np.linalg.eigvalsh(hermitize(A - B))
    return float(min(1.0, 0.5 * np.abs(w).sum()))


def fidelity(rho, sigma) -> float:
    """F(rho, sigma) = tr sqrt(sqrt(rho) sigma sqrt(rho)), computed as ||sqrt(rho) sqrt(sigma)||_1."""
    A, B = _pair(rho, sigma)
    s = np.linalg.svd(mat_func(A, "sqrt") @ mat_func(B, "sqrt"), compute_uv=False)
    return float(min(1.0, s.sum()))


def vn_entropy(rho) -> float:
    w = clamp_eigenvalues(np.linalg.eigvalsh(hermitize(as_matrix(rho))))
    return float(max(0.0, -xlogx(w).sum()))


def shannon_entropy(mu) -> float:
    return float(max(0.0, -xlogx(_probs(mu)).sum()))


def relative_entropy(mu, nu) -> float:
    """KL divergence in bits; ``inf`` flags a support violation."""
    p, q = _probs(mu), _probs(nu)
    if p.shape != q.shape:
        raise ValueError("distributions over different index sets")
    if np.any((p > 0) & (q == 0)):
        return math.inf
    m = p > 0
    return float(np.sum(p[m] * np.log2(p[m] / q[m])))


def statistical_distance(mu, nu) -> float:
    p, q = _probs(mu), _probs(nu)
    return float(0.5 * np.abs(p - q).sum())


def measure(rho, povm: Sequence[np.ndarray]) -> ProbDist:
    """Outcome distribution of a POVM."""
    R = as_matrix(rho)
    p = np.array([np.real(np.trace(E @ R)) for E in povm])
    p = np.clip(p, 0.0, None)
    return ProbDist(p / p.sum())


# ---------------------------------------------------------------------------
# lemma checkers; each returns lhs <= rhs data with slack = rhs - lhs


class Check(NamedTuple):
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def ok(self, tol: float = 1e-9) -> bool:
        return self.slack >= -tol


def check_fuchs_van_de_graaf(rho, sigma) -> list[Check]:
    D, F = trace_distance(rho, sigma), fidelity(rho, sigma)
    return [Check("fvdg_lower", 1 - F, D), Check("fvdg_upper", D, math.sqrt(max(0.0, 1 - F * F)))]


def check_measurement_monotonicity(rho, sigma, povm) -> Check:
    sd = statistical_distance(measure(rho, povm), measure(sigma, povm))
    return Check("measurement", sd, trace_distance(rho, sigma))


def check_mixture_bound(rho, sigma, tau, p: float) -> Check:
    mix = (1 - p) * as_matrix(rho) + p * as_matrix(sigma)
    return Check("mixture_distance", trace_distance(rho, tau) - p, trace_distance(mix, tau))


def check_mixture_entropy(mu, rhos) -> Check:
    w = _probs(mu)
    mix = sum(wi * as_matrix(r) for wi, r in zip(w, rhos))
    rhs = shannon_entropy(w) + sum(wi * vn_entropy(r) for wi, r in zip(w, rhos))
    return Check("mixture_entropy", vn_entropy(mix), rhs)


class Sandwich(NamedTuple):
    lhs: float
    S: float
    rhs: float
    passed: bool


def check_entropy_sandwich(rho, tol: float = 1e-9) -> Sandwich:
    """Bounds (1 - D - 2^-n) n <= S(rho) <= n - log(1/(1-D)) + 2 with D = D(rho, mix)."""
    R = as_matrix(rho)
    d = R.shape[0]
    n = int(round(math.log2(d)))
    D = trace_distance(R, np.eye(d) / d)
    S = vn_entropy(R)
    lhs = (1 - D - 2.0**-n) * n
    rhs = math.inf if D >= 1 else n + math.log2(1 - D) + 2
    return Sandwich(lhs, S, rhs, bool(lhs - tol <= S <= rhs + tol))


def vajda_gap(mu) -> float:
    """Slack of the Vajda-type bound used in the entropy sandwich.

    For gamma = SD(mu, uniform) < 1 the KL divergence to the uniform
    distribution satisfies KL >= log(1/(1-gamma)) - 2 (in bits).  The return
    value is KL minus that bound, so it should be nonnegative.
    """
    p = _probs(mu)
    u = np.full(p.size, 1.0 / p.size)
    g = statistical_distance(p, u)
    if g >= 1:
        return math.inf
    return relative_entropy(p, u) - (math.log2(1 / (1 - g)) - 2)


# ---------------------------------------------------------------------------
# optimized channel functionals


def _density_from_vector(a: np.ndarray, d: int) -> np.ndarray:
    """Reduced state on A of a vector on A (x) A' stored with A most significant."""
    X = a.reshape(d, d)
    return X @ X.conj().T


def _project_density(R: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((R + R.conj().T) / 2)
    w = np.clip(w, 0.0, None)
    R = (v * w) @ v.conj().T
    return R / np.trace(R).real


def max_output_fidelity(Phi: Channel, Psi: Channel, cfg: OptConfig | None = None) -> OptResult:
    """Maximum output fidelity by see-saw over purifications.

    The two inputs are purified on A (x) A'.  Through the Stinespring
    isometries the outputs are purified on B (x) E (x) A'; for fixed inputs
    the best overlap over environment unitaries is a polar decomposition
    (Uhlmann), and for a fixed environment map the best inputs are the top
    singular pair of an effective operator on A (x) A'.  The returned value
    is the fidelity of the witness outputs, so it is a certified lower bound.
    """
    cfg = cfg or OptConfig()
    if Phi.out_qubits != Psi.out_qubits or Phi.in_qubits != Psi.in_qubits:
        raise ValueError("channels must have matching dimensions")
    Phi, Psi = Phi.simplify(), Psi.simplify()
    d, dB = Phi.din, Phi.dout
    # V[b, e, a]: input a, environment e, output b
    V1 = np.stack(Phi.kraus).transpose(1, 0, 2)
    V2 = np.stack(Psi.kraus).transpose(1, 0, 2)
    e1, e2 = V1.shape[1], V2.shape[1]
    rng = rng_from(cfg.seed)

    # T[b, (e, a'), (a, a'')] = V[b, e, a] delta(a', a''), i.e. V (x) I_A'
    T1 = np.einsum("bei,jk->bejik", V1, np.eye(d)).reshape(dB, e1 * d, d * d)
    T2 = np.einsum("bei,jk->bejik", V2, np.eye(d)).reshape(dB, e2 * d, d * d)

    def fid_pure(a, b):
        return fidelity(Phi.apply(_density_from_vector(a, d)), Psi.apply(_density_from_vector(b, d)))

    best = (-1.0, None, None)
    total_iters = 0
    converged_any = False
    for r in range(max(1, cfg.restarts)):
        a = random_state_vector(d * d, rng)
        b = random_state_vector(d * d, rng)
        val = -1.0
        conv = False
        for it in range(cfg.max_iters):
            total_iters += 1
            # Uhlmann step: W maximizes |<Phi a|(I (x) W)|Psi b>| over contractions
            va = T1 @ a
            vb = T2 @ b
            u, s, vh = np.linalg.svd(va.T @ vb.conj(), full_matrices=False)
            keep = s > 1e-14 * max(1.0, s[0])
            W = u[:, keep] @ vh[keep]
            # input step: top singular pair of M = (V1 (x) I)^dag (I_B (x) W) (V2 (x) I)
            Z = W @ T2
            M = T1.conj().reshape(-1, d * d).T @ Z.reshape(-1, d * d)
            uu, ss, vvh = np.linalg.svd(M)
            a, b = uu[:, 0], vvh[0].conj()
            if it > 0 and ss[0] - val < cfg.tol:
                conv = True
                val = max(val, ss[0])
                break
            val = max(val, ss[0])
        f = fid_pure(a, b)
        converged_any = converged_any or conv
        if f > best[0]:
            best = (f, a, b)
        if best[0] >= 1 - 1e-13:
            break
    f, a, b = best
    rho = DensityMatrix(Phi.in_qubits, _project_density(_density_from_vector(a, d)))
    sigma = DensityMatrix(Psi.in_qubits, _project_density(_density_from_vector(b, d)))
    value = fidelity(Phi.apply(rho), Psi.apply(sigma))
    return OptResult(value, (rho, sigma), total_iters, r + 1, converged_any)


def _superop(ch: Channel) -> np.ndarray:
    """Matrix S with vec(Phi(X)) = S vec(X) for row-major vec."""
    return sum(np.kron(K, K.conj()) for K in ch.kraus)


def min_output_trace_distance(Phi: Channel, Psi: Channel, cfg: OptConfig | None = None) -> OptResult:
    """Minimum output trace distance as a semidefinite program.

    Solved with cvxpy.  The primal witnesses are re-evaluated (certified
    upper bound ``value``); a dual certificate built from the Helstrom
    projector of the witness outputs gives the certified lower bound
    ``bound`` = lambda_min(Phi^dag P) - lambda_max(Psi^dag P).
    """
    import cvxpy as cp

    cfg = cfg or OptConfig()
    if Phi.out_qubits != Psi.out_qubits or Phi.in_qubits != Psi.in_qubits:
        raise ValueError("channels must have matching dimensions")
    Phi, Psi = Phi.simplify(), Psi.simplify()
    d, dB = Phi.din, Phi.dout
    S1, S2 = _superop(Phi), _superop(Psi)
    # real parameterization keeps the problem small and solver-agnostic
    rho = cp.Variable((d, d), hermitian=True)
    sig = cp.Variable((d, d), hermitian=True)
    P = cp.Variable((dB, dB), hermitian=True)
    N = cp.Variable((dB, dB), hermitian=True)
    out1 = cp.reshape(S1 @ cp.vec(rho, order="C"), (dB, dB), order="C")
    out2 = cp.reshape(S2 @ cp.vec(sig, order="C"), (dB, dB), order="C")
    link = out1 - out2 == P - N
    cons = [rho >> 0, sig >> 0, cp.real(cp.trace(rho)) == 1, cp.real(cp.trace(sig)) == 1,
            P >> 0, N >> 0, link]
    prob = cp.Problem(cp.Minimize(0.5 * cp.real(cp.trace(P + N))), cons)
    best = None
    attempts = 0
    for status in _solve_attempts(prob):
        attempts += 1
        if status is None or rho.value is None:
            continue
        R = _project_density(np.asarray(rho.value))
        Sg = _project_density(np.asarray(sig.value))
        diff = Phi.apply(R) - Psi.apply(Sg)
        value = trace_distance(Phi.apply(R), Psi.apply(Sg))
        tests = _helstrom_tests(diff)
        if link.dual_value is not None:
            L = np.asarray(link.dual_value, dtype=complex).reshape(dB, dB)
            tests += [_center_clip(L), _center_clip(-L)]
        lower = max(0.0, max(_dmin_test_bound(Phi, Psi, T) for T in tests))
        if best is None or value < best[0]:
            best = (value, R, Sg, max(lower, best[3] if best else 0.0))
        elif lower > best[3]:
            best = best[:3] + (lower,)
        if status == "optimal" and best[0] - best[3] <= 1e-7:
            break
    if best is None:
        raise RuntimeError("all SDP solver attempts failed")
    value, R, Sg, lower = best
    if value < 1e-6:
        R2, S2 = _polish_overlap(Phi, Psi, R, Sg)
        v2 = trace_distance(Phi.apply(R2), Psi.apply(S2))
        if v2 < value:
            value, R, Sg = v2, R2, S2
    wit = (DensityMatrix(Phi.in_qubits, R), DensityMatrix(Psi.in_qubits, Sg))
    return OptResult(value, wit, attempts, 0, value - lower <= 1e-6, bound=lower)


def _solve_attempts(prob):
    """Solve with a sequence of solver settings, yielding the status after each.

    Tight interior-point tolerances occasionally fail on degenerate
    instances (zero optimum); the fallbacks are a first-order and a second
    interior-point solver.
    """
    import warnings

    import cvxpy as cp

    settings = [
        dict(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11, max_iter=500),
        dict(solver=cp.SCS, eps=1e-10, max_iters=200000),
        dict(solver=cp.CVXOPT),
        dict(solver=cp.CLARABEL),
    ]
    for kw in settings:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(**kw)
        except cp.error.SolverError:
            yield None
            continue
        yield prob.status if prob.status in ("optimal", "optimal_inaccurate") else None


def _polish_overlap(Phi: Channel, Psi: Channel, R, S, iters: int = 3000):
    """Accelerated projected gradient on ||Phi(R) - Psi(S)||_F^2.

    Used when the images nearly intersect: the smooth objective drives the
    residual to machine precision where the SDP stalls near 1e-9.
    """
    L = 2 * (np.linalg.norm(_superop(Phi), 2) ** 2 + np.linalg.norm(_superop(Psi), 2) ** 2)
    x, y = R, S
    xo, yo = R, S
    t = 1.0
    for _ in range(iters):
        tn = (1 + math.sqrt(1 + 4 * t * t)) / 2
        zx = x + (t - 1) / tn * (x - xo)
        zy = y + (t - 1) / tn * (y - yo)
        D = Phi.apply(zx) - Psi.apply(zy)
        xo, yo = x, y
        x = _simplex_project_density(zx - 2 * Phi.adjoint(D) / L)
        y = _simplex_project_density(zy + 2 * Psi.adjoint(D) / L)
        t = tn
        if np.linalg.norm(Phi.apply(x) - Psi.apply(y)) < 1e-15:
            break
    return _project_density(x), _project_density(y)


def _helstrom_tests(diff: np.ndarray) -> list[np.ndarray]:
    w, v = eigh(diff)
    Pp = v[:, w > 0] @ v[:, w > 0].conj().T
    I = np.eye(diff.shape[0])
    return [Pp - I / 2, I / 2 - Pp]


def _center_clip(L: np.ndarray) -> np.ndarray:
    """Shift a Hermitian operator to a centered spectrum and clip it into [-1/2, 1/2]."""
    w, v = eigh((L + L.conj().T) / 2)
    if w[-1] - w[0] > 1e-15:
        w = (w - (w[0] + w[-1]) / 2) / (w[-1] - w[0])
    else:
        w = np.zeros_like(w)
    return (v * np.clip(w, -0.5, 0.5)) @ v.conj().T


def _dmin_test_bound(Phi: Channel, Psi: Channel, T: np.ndarray) -> float:
    """lambda_min(Phi^dag T) - lambda_max(Psi^dag T), a lower bound on D_min for ||T|| <= 1/2."""
    a = np.linalg.eigvalsh(hermitize(Phi.adjoint(T), tol=1e-6))[0]
    b = np.linalg.eigvalsh(hermitize(Psi.adjoint(T), tol=1e-6))[-1]
    return float(a - b)


def max_output_entropy(Phi: Channel, cfg: OptConfig | None = None) -> OptResult:
    """Maximum output entropy by projected gradient ascent over input states.

    The gradient of S(Phi(rho)) is -Phi^dag(log2 Phi(rho)) up to a multiple of
    the identity.  Each step moves along it and projects the eigenvalues back
    onto the probability simplex; the step is halved until the value
    increases.  S(Phi(.)) is concave, so every restart climbs towards the
    same global maximum.
    """
    cfg = cfg or OptConfig()
    Phi = Phi.simplify()
    d = Phi.din
    n_out = Phi.out_qubits
    rng = rng_from(cfg.seed)

    def value(R):
        return vn_entropy(Phi.apply(R))

    def grad(R):
        w, v = np.linalg.eigh(hermitize(Phi.apply(R)))
        w = np.clip(w, 1e-300, None)
        L = (v * np.log2(w)) @ v.conj().T
        return -hermitize(Phi.adjoint(L))

    starts = [np.eye(d) / d] + [random_density(Phi.in_qubits, rng) for _ in range(max(0, cfg.restarts - 1))]
    best_val, best_R = -1.0, None
    total = 0
    conv_all = True
    for r, R in enumerate(starts):
        val = value(R)
        step = 1.0
        conv = False
        for it in range(cfg.max_iters):
            total += 1
            G = grad(R)
            G = G - np.trace(G).real / d * np.eye(d)
            improved = False
            while step > 1e-14:
                Rn = _simplex_project_density(R + step * G)
                vn = value(Rn)
                if vn > val:
                    improved = True
                    break
                step /= 2
            if not improved:
                conv = True
                break
            gain = vn - val
            R, val = Rn, vn
            step = min(step * 2, 1e3)
            if gain < cfg.tol or val >= n_out - 1e-13:
                conv = True
                break
        conv_all = conv_all and conv
        if val > best_val:
            best_val, best_R = val, R
        if best_val >= n_out - 1e-13:
            break
    wit = DensityMatrix(Phi.in_qubits, _project_density(best_R))
    return OptResult(value(wit.mat), (wit,), total, r + 1, conv_all)


def _simplex_project(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, len(w) + 1)
    cond = u - (css - 1) / k > 0
    rho = k[cond][-1]
    theta = (css[rho - 1] - 1) / rho
    return np.clip(w - theta, 0.0, None)


def _simplex_project_density(R: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((R + R.conj().T) / 2)
    w = _simplex_project(w)
    return (v * w) @ v.conj().T


def mix_channel(in_qubits: int, out_qubits: int) -> Channel:
    """Constant channel onto the totally mixed state."""
    return Channel.constant(np.eye(2**out_qubits) / 2**out_qubits, in_qubits)
