"""Canonical form of two-qubit gates.

Every two-qubit unitary is, up to local unitaries and a global phase, a
product of three commuting interactions exp(-i mu_k sigma_k (x) sigma_k).
This script decomposes a few named gates and a random one, and rebuilds
the original matrix from the pieces.
"""

import numpy as np

from gateconv.gates import canonical_decompose, haar_random_gate, interaction_coefficients, named_gate

for name in ("identity", "cnot", "cz", "iswap", "sqrt_swap", "swap"):
    cf = canonical_decompose(named_gate(name))
    print(f"{name:10s} mu = ({cf.mu[0]:.6f}, {cf.mu[1]:.6f}, {cf.mu[2]:.6f})")

# a Haar-random gate: reconstruct it from its local factors and mu
g = haar_random_gate(seed=2024)
cf = canonical_decompose(g)
print("\nrandom gate mu =", np.round(cf.mu, 6))
print("reconstruction error:", np.linalg.norm(cf.matrix() - g.matrix))

# the interaction coefficients are the weights of exp(-iH) on sigma_k (x) sigma_k
a = interaction_coefficients(cf.mu)
print("|a_k| =", np.round(np.abs(a), 6), " sum |a_k|^2 =", round(float(np.sum(np.abs(a) ** 2)), 12))
