"""Shared generators for the test suite."""

import math

import numpy as np
from scipy.linalg import expm

from gateconv import linalg
from gateconv.gates import Gate, canonical_gate, random_local_unitary

PI4 = math.pi / 4


def dressed(mu, rng) -> Gate:
    """Canonical gate for ``mu`` wrapped in random local unitaries and a random phase."""
    left = linalg.tensor(random_local_unitary(rng), random_local_unitary(rng))
    right = linalg.tensor(random_local_unitary(rng), random_local_unitary(rng))
    phase = np.exp(1j * rng.uniform(0, 2 * math.pi))
    return Gate(2, phase * left @ canonical_gate(mu).matrix @ right)


def random_cell_point(rng):
    """Random point inside the canonical cell (not on a face)."""
    m1 = rng.uniform(0.02, PI4)
    m2 = rng.uniform(0.01, m1)
    m3 = rng.uniform(-m2, m2)
    if abs(m3) < 1e-3:
        m3 = 1e-3 if m3 >= 0 else -1e-3
    if m1 == PI4 and m3 < 0:
        m3 = -m3
    return (m1, m2, m3)


def random_class2(rng):
    """``(mu, gate)`` with ``mu = (m1, 0, 0)``, ``m1 > 0``."""
    mu = (rng.uniform(0.01, PI4), 0.0, 0.0)
    return mu, dressed(mu, rng)


def random_class3(rng):
    mu = random_cell_point(rng)
    return mu, dressed(mu, rng)


def random_state(rng, n=4) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def a3_modulus_sq(mu) -> float:
    """|a_3|^2 by direct expansion of exp(-i H) in the sigma_k (x) sigma_k basis (independent of gates.py)."""
    h = sum(m * np.kron(p, p) for m, p in zip(mu, (linalg.X, linalg.Y, linalg.Z)))
    u = expm(-1j * h)
    a3 = np.trace(np.kron(linalg.Z, linalg.Z) @ u) / 4
    return float(abs(a3) ** 2)
