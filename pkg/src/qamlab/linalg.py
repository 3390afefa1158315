"""Dense complex linear algebra kernel.

Every operator in the package is a plain ``numpy`` complex array.  Qubit 0 is
the most significant tensor factor, so a computational basis index
``b_0 b_1 ... b_{n-1}`` maps to ``sum(b_i * 2**(n-1-i))``.
"""

from __future__ import annotations

from functools import reduce
from typing import Callable, Sequence

import numpy as np

MAX_DIM = 2**10
HERM_TOL = 1e-8
CLAMP_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when matrix shapes and subsystem dimensions disagree."""


def check_dim(d: int) -> None:
    if d > MAX_DIM:
        raise DimensionError(f"dimension {d} exceeds the dense cap {MAX_DIM}")


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product with the first argument as the most significant factor."""
    if len(ops) == 0:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, ops)


def partial_trace(M: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    M : ndarray
        Square operator on ``prod(dims)`` dimensions.
    dims : sequence of int
        Subsystem dimensions, most significant first.
    keep : iterable of int
        Subsystems to keep.  The result is ordered as in ``dims``.
    """
    M = np.asarray(M)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims)) if dims else 1
    if M.ndim != 2 or M.shape != (total, total):
        raise DimensionError(f"matrix of shape {M.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DimensionError("keep must be a nonempty set of subsystems")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionError(f"keep {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    T = M.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum with repeated labels performs the trace
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    row = letters[:n]
    col = letters[n:]
    for i in traced:
        col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    T = np.einsum("".join(row + col) + "->" + "".join(out), T)
    dk = int(np.prod([dims[i] for i in keep]))
    return T.reshape(dk, dk)


def is_hermitian(M: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= tol)


def hermitize(M: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    """Return (M + M^dag)/2 after checking the asymmetry is within ``tol``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    asym = np.max(np.abs(M - M.conj().T), initial=0.0)
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian (asymmetry {asym:.3g})")
    return (M + M.conj().T) / 2


def clamp_eigenvalues(w: np.ndarray, tol: float = CLAMP_TOL) -> np.ndarray:
    """Zero eigenvalues in [-tol, 0); raise on anything more negative."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -tol:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    return np.where(w < 0, 0.0, w)


def xlogx(w: np.ndarray) -> np.ndarray:
    """Elementwise ``w * log2(w)`` with ``0 log 0 = 0``."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log2(w[pos])
    return out


def _safe_log2(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log2(w)


_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sqrt": np.sqrt,
    "log2": _safe_log2,
    "xlogx": xlogx,
}


def eigh(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition after the tolerance check."""
    return np.linalg.eigh(hermitize(M))


def mat_func(M: np.ndarray, f) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its eigenbasis.

    ``f`` is one of ``"sqrt"``, ``"log2"``, ``"xlogx"`` or a callable acting
    on a real eigenvalue array.  For the named functions the eigenvalues are
    clamped first (see :func:`clamp_eigenvalues`).
    """
    w, v = eigh(M)
    if isinstance(f, str):
        if f not in _FUNCS:
            raise ValueError(f"unknown matrix function {f!r}")
        w = clamp_eigenvalues(w)
        fw = _FUNCS[f](w)
    else:
        fw = f(w)
    return (v * fw) @ v.conj().T


def polar_unitary(X: np.ndarray) -> np.ndarray:
    """Unitary (or isometric) factor U of the polar decomposition X = U|X|."""
    u, _, vh = np.linalg.svd(X, full_matrices=False)
    return u @ vh


def ket(bits, n: int | None = None) -> np.ndarray:
    """Computational basis vector from a bit string, tuple or integer."""
    if isinstance(bits, str):
        n = len(bits)
        idx = int(bits, 2) if bits else 0
    elif isinstance(bits, (tuple, list)):
        n = len(bits)
        idx = 0
        for b in bits:
            idx = 2 * idx + int(b)
    else:
        if n is None:
            raise ValueError("n is required for integer basis labels")
        idx = int(bits)
    v = np.zeros(2**n, dtype=complex)
    v[idx] = 1.0
    return v


def proj(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def apply_unitary(psi: np.ndarray, U: np.ndarray, targets: Sequence[int], n: int,
                  controls: Sequence[int] = ()) -> np.ndarray:
    """Apply a (controlled) operator to the given qubits of a state array.

    ``psi`` has shape ``(2**n, ...)``; trailing axes are treated as a batch,
    so this also applies ``U`` from the left to a matrix.
    """
    targets = list(targets)
    controls = list(controls)
    t = len(targets)
    if U.shape != (2**t, 2**t):
        raise DimensionError(f"operator of shape {U.shape} does not act on {t} qubits")
    if len(set(targets + controls)) != t + len(controls):
        raise ValueError("targets and controls must be distinct qubits")
    batch = psi.shape[1:]
    out = np.array(psi, dtype=complex, copy=True).reshape((2,) * n + batch)
    idx = [slice(None)] * n
    for c in controls:
        idx[c] = 1
    idx = tuple(idx)
    sub = out[idx]
    axes = [q - sum(1 for c in controls if c < q) for q in targets]
    sub = np.moveaxis(sub, axes, list(range(t)))
    shp = sub.shape
    new = (U @ sub.reshape(2**t, -1)).reshape(shp)
    out[idx] = np.moveaxis(new, list(range(t)), axes)
    return out.reshape((2**n,) + batch)


def conjugate_by(rho: np.ndarray, U: np.ndarray, targets: Sequence[int], n: int,
                 controls: Sequence[int] = ()) -> np.ndarray:
    """Return U rho U^dag with U acting on ``targets`` of an n-qubit operator."""
    A = apply_unitary(rho, U, targets, n, controls)
    return apply_unitary(A.conj().T, U, targets, n, controls).conj().T


def permute_qubits(M: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Reorder the qubits of a vector or square operator.

    New qubit ``i`` is old qubit ``perm[i]``.
    """
    n = len(perm)
    if M.ndim == 1:
        return M.reshape((2,) * n).transpose(perm).reshape(-1)
    T = M.reshape((2,) * (2 * n))
    return T.transpose(list(perm) + [n + p for p in perm]).reshape(2**n, 2**n)


def complete_to_unitary(W: np.ndarray) -> np.ndarray:
    """Extend an isometry (orthonormal columns) to a square unitary.

    The first ``W.shape[1]`` columns of the result equal ``W``.
    """
    d, k = W.shape
    if k > d:
        raise DimensionError("isometry has more columns than rows")
    # project random-free completion: orthonormal basis of the complement
    Q, _ = np.linalg.qr(np.hstack([W, np.eye(d, dtype=complex)]))
    U = Q[:, :d].copy()
    # QR can flip phases of the leading columns; restore W exactly
    U[:, :k] = W
    comp = U[:, k:]
    comp = comp - W @ (W.conj().T @ comp)
    q, _ = np.linalg.qr(comp)
    U[:, k:] = q
    return U


def is_unitary(U: np.ndarray, tol: float = 1e-8) -> bool:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol)
