"""Running the protocols on the branch-enumerating simulator.

Every measurement outcome is followed, so success probabilities are exact
and each branch's output can be compared with the target gate.
"""

import math

from gateconv.gates import canonical_gate, haar_random_gate, named_gate
from gateconv.protocols import (
    cnot_from_one_ebit,
    convert_gate,
    implement_from_choi_postselected,
    make_choi,
    run_on_inputs,
    simulate_via_two_ebits,
    ualpha_from_cnot,
    verification_inputs,
)
from gateconv.sim import KET1, PLUS

inputs = verification_inputs(n_random=4, seed=0)


def show(title, rep):
    print(f"{title:38s} p = {rep.success_probability_exact:.6f}  branches = {len(rep.branches):2d}  "
          f"bits = {rep.classical_bits_sent}  verified = {rep.verified}  min fidelity = {rep.min_fidelity:.12f}")


show("CNOT from one ebit", run_on_inputs(cnot_from_one_ebit, inputs))
show("random gate from two ebits", run_on_inputs(lambda s: simulate_via_two_ebits(haar_random_gate(5), s), inputs))
show("U(0.3) from one CNOT", run_on_inputs(lambda s: ualpha_from_cnot(0.3, s), inputs))

g = haar_random_gate(6)
show("post-selected use of the Choi state", implement_from_choi_postselected(make_choi(g), PLUS, KET1, g))

g = canonical_gate((math.pi / 6, 0, 0))
show("mu = (pi/6, 0, 0) -> CNOT", run_on_inputs(lambda s: convert_gate(g, "cnot", s), inputs))
g = canonical_gate((0.6, 0.4, 0.2))
show("mu = (0.6, 0.4, 0.2) -> CNOT", run_on_inputs(lambda s: convert_gate(g, "cnot", s), inputs))
show("mu = (0.6, 0.4, 0.2) -> SWAP", run_on_inputs(lambda s: convert_gate(g, "swap", s), inputs))
show("SWAP -> CNOT", run_on_inputs(lambda s: convert_gate(named_gate("swap"), "cnot", s), inputs))

# one conversion in detail
rep = convert_gate(canonical_gate((math.pi / 6, 0, 0)), "cnot", inputs[-1])
print("\nbranches of mu = (pi/6, 0, 0) -> CNOT:")
for b, f in zip(rep.branches, rep.fidelities):
    outcome = ", ".join(f"{name}={k}" for name, k in b.outcomes)
    print(f"  {outcome:32s} p = {b.probability:.4f}  {b.tag:8s} fidelity = {f if f is None else round(f, 12)}")
