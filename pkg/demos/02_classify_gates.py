"""Choi states and the three classes of two-qubit gates.

The Choi state of U is U applied to halves of two Bell pairs. Its Schmidt
number across Alice|Bob (1, 2 or 4 for qubits) decides what one use of U
can simulate.
"""

from collections import Counter

from gateconv.choi import choi_state
from gateconv.classify import can_simulate, classify, creates_two_ebits
from gateconv.gates import haar_random_gate, named_gate

for name in ("identity", "cnot", "cz", "iswap", "sqrt_swap", "swap"):
    g = named_gate(name)
    cs = choi_state(g)
    spectrum = ", ".join(f"{x:.4f}" for x in cs.spectrum.amplitudes)
    print(f"{name:10s} spectrum [{spectrum}] -> {classify(g).label}, two ebits: {creates_two_ebits(g)}")

print("\nSWAP can simulate CNOT:", can_simulate(named_gate("swap"), named_gate("cnot")))
print("CNOT can simulate SWAP:", can_simulate(named_gate("cnot"), named_gate("swap")))

# random gates are generic: almost all land in the top class
labels = Counter(classify(haar_random_gate(seed)).label for seed in range(2000))
print("\n2000 Haar-random gates:", dict(labels))

# qutrit gates get the generic label, with Schmidt number up to 9
print("random qutrit gate:", classify(haar_random_gate(1, d=3)))
