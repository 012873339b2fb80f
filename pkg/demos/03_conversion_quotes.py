"""Optimal probabilities for turning one use of a gate into CNOT or SWAP."""

import math

import numpy as np

from gateconv.convert import quote
from gateconv.gates import canonical_gate, named_gate

print("CNOT-class gates mu = (m, 0, 0): p(CNOT) = 2 sin^2 m")
for m in np.linspace(0.1, math.pi / 4, 5):
    q = quote(canonical_gate((m, 0, 0)), "cnot")
    print(f"  m = {m:.4f}  p = {q.probability:.6f}  (2 sin^2 m = {2 * math.sin(m) ** 2:.6f})")

print("\nSWAP-class gates:")
for mu in [(0.7, 0.3, 0.1), (0.5, 0.5, 0.5), (math.pi / 4, math.pi / 4, 0.2), (0.3, 0.1, -0.05)]:
    g = canonical_gate(mu)
    c, s = quote(g, "cnot"), quote(g, "swap")
    print(f"  mu = {mu}: p(CNOT) = {c.probability:.6f} (uncapped {c.uncapped_probability:.4f}), "
          f"p(SWAP) = {s.probability:.6f}")

print("\nCNOT -> SWAP:", quote(named_gate("cnot"), "swap").to_json())
