"""Dense oracles and random generators shared by the tests."""
from __future__ import annotations

import itertools

import numpy as np

from qatpg.pauli import SignedPauli, commutes, independent
from qatpg.stabilizer import StabilizerProjector

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
LETTERS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_label(label: str) -> np.ndarray:
    """Dense Pauli from a label whose first letter is qubit 1 (least significant)."""
    out = np.array([[1]], dtype=complex)
    for ch in label:
        out = np.kron(LETTERS[ch], out)
    return out


def random_pauli(n: int, rng: np.random.Generator, nonidentity: bool = True) -> SignedPauli:
    while True:
        p = SignedPauli(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)),
                        int(rng.choice([1, -1])))
        if not nonidentity or not p.is_identity():
            return p


def random_projector(n: int, rng: np.random.Generator, k: int | None = None) -> StabilizerProjector:
    """Random stabilizer projector with k generators (random k when None)."""
    k = int(rng.integers(0, n + 1)) if k is None else k
    while True:
        gens: list[SignedPauli] = []
        tries = 0
        while len(gens) < k and tries < 200:
            tries += 1
            p = random_pauli(n, rng)
            if all(commutes(p, g) for g in gens) and independent(gens + [p]):
                gens.append(p)
        if len(gens) == k:
            return StabilizerProjector(n, gens)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_effect(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian operator with spectrum in [0, 1]."""
    u = random_unitary(dim, rng)
    return (u * rng.uniform(0, 1, size=dim)) @ u.conj().T


def split_leading(a: np.ndarray, m: int) -> np.ndarray:
    """View a 2^n matrix as [rest, lead, rest, lead] with the leading m qubits as low bits."""
    dim = a.shape[0]
    r = dim >> m
    return a.reshape(r, 1 << m, r, 1 << m)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < atol:
        return np.allclose(a, b, atol=atol)
    ph = a[idx] / b[idx]
    return abs(abs(ph) - 1) < 1e-6 and np.allclose(a, ph * b, atol=atol)


def group_elements(p: StabilizerProjector) -> set[tuple[int, int, int]]:
    return {(e.x, e.z, e.sign) for e in p.elements()}


def all_subsets(items, max_size):
    for k in range(max_size + 1):
        yield from itertools.combinations(items, k)
