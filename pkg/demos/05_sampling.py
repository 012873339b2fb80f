"""Monte Carlo runs of a conversion compared with the exact branch probabilities."""

import math

from gateconv.gates import canonical_gate
from gateconv.protocols import convert_gate, verification_inputs
from gateconv.sim import sample_run

rep = convert_gate(canonical_gate((0.4, 0.0, 0.0)), "cnot", verification_inputs()[-1])
n = 100_000
res = sample_run(rep, seed=7, n=n)
p = rep.success_probability_exact
sigma = math.sqrt(p * (1 - p) / n)
print(f"exact success probability {p:.6f}")
print(f"sampled frequency         {res.success_frequency:.6f}  ({abs(res.success_frequency - p) / sigma:.2f} sigma)")
for key, count in sorted(res.counts.items()):
    print(f"  {key:36s} {count}")

# same seed, same table
print("rerun identical:", sample_run(rep, seed=7, n=n).counts == res.counts)
