"""Seeded random quantum objects used by experiments, oracles and tests."""

from __future__ import annotations

import hashlib
import math

import numpy as np


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_seed(seed: int, index: int, *labels) -> int:
    """Deterministic per-trial seed, a hash of (seed, index, labels)."""
    text = ":".join(str(x) for x in (seed, index) + labels)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def ginibre(shape, rng) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_unitary(d: int, rng) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fix."""
    rng = rng_from(rng)
    q, r = np.linalg.qr(ginibre((d, d), rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_isometry(d_out: int, d_in: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    q, r = np.linalg.qr(ginibre((d_out, d_in), rng))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state_vector(d: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    v = ginibre(d, rng)
    return v / np.linalg.norm(v)


def random_density(n: int, rng, rank: int | None = None) -> np.ndarray:
    """Random n-qubit density matrix from the induced (Ginibre) measure."""
    rng = rng_from(rng)
    d = 2**n
    G = ginibre((d, rank or d), rng)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_kraus(n_in: int, n_out: int, n_kraus: int, rng) -> list[np.ndarray]:
    """Kraus operators of a random channel, sliced from a random isometry."""
    rng = rng_from(rng)
    din, dout = 2**n_in, 2**n_out
    V = random_isometry(dout * n_kraus, din, rng)
    return [V[k * dout:(k + 1) * dout, :] for k in range(n_kraus)]


def random_povm(d: int, n_outcomes: int, rng) -> list[np.ndarray]:
    """Random POVM with ``n_outcomes`` elements on a d-dimensional space."""
    rng = rng_from(rng)
    V = random_isometry(d * n_outcomes, d, rng)
    blocks = [V[k * d:(k + 1) * d, :] for k in range(n_outcomes)]
    return [B.conj().T @ B for B in blocks]


def random_probs(d: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    return rng.dirichlet(np.ones(d))


def random_replacement_kraus(n: int, rng, lam_range=(0.5, 0.9)) -> list[np.ndarray]:
    """Kraus operators of rho -> (1 - lam) U rho U^dag + lam |t><t|.

    U and |t> are Haar random and lam is uniform in ``lam_range``; the output
    set is a shrunken copy of the state space pulled towards |t>, so two
    such channels usually have separated output sets.
    """
    rng = rng_from(rng)
    d = 2**n
    U = random_unitary(d, rng)
    t = random_state_vector(d, rng)
    lam = float(rng.uniform(*lam_range))
    return [math.sqrt(1 - lam) * U] + [math.sqrt(lam) * np.outer(t, e) for e in np.eye(d)]
