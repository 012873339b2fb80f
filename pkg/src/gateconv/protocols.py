"""Executable conversion and simulation protocols.

Every protocol builds a register, runs to completion on all measurement
branches and returns a :class:`ProtocolReport` whose success branches have
been checked against the target gate. Local operations go through
:func:`local`, which refuses to touch both parties at once; the only
non-local step in any protocol is the single use of the resource gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg, sim
from .choi import CHOI_CUT, PureState, choi_state, maximally_entangled, schmidt_decompose
from .convert import TARGET_RANK, build_filter
from .errors import GateUseError, InfeasibleConversionError, InputError
from .gates import Gate, named_gate, ualpha
from .sim import Branch, Register, expand

FIDELITY_TOL = 1e-9
EBIT_TOL = 1e-9

CNOT = named_gate("cnot").matrix
SWAP = named_gate("swap").matrix

#: Bell outcome i (Phi_i = (sigma_i x 1) Phi_0) -> Pauli correction on the far half.
TELEPORT_CORRECTIONS = {0: linalg.I2, 1: linalg.X, 2: linalg.Y, 3: linalg.Z}

#: One-ebit CNOT: (measurement, outcome) -> (party receiving the bit, correction).
CNOT_EBIT_CORRECTIONS = {
    ("ebit_z", 0): ("B", linalg.I2),
    ("ebit_z", 1): ("B", linalg.X),
    ("ebit_x", 0): ("A", linalg.I2),
    ("ebit_x", 1): ("A", linalg.Z),
}


class GateResource:
    """A gate that may be applied a limited number of times (once, by default)."""

    def __init__(self, gate: Gate, max_uses: int = 1):
        self.gate = gate
        self.max_uses = max_uses
        self.uses = 0

    def apply(self, reg: Register, targets) -> Register:
        if self.uses >= self.max_uses:
            raise GateUseError(f"resource gate already used {self.uses} time(s)")
        self.uses += 1
        return sim.apply(reg, self.gate, targets)


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    name: str
    target_gate: Gate
    branches: tuple[Branch, ...]
    fidelities: tuple[float | None, ...]
    test_inputs: tuple[PureState, ...]
    classical_bits_sent: int
    gate_uses: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def success_probability_exact(self) -> float:
        return math.fsum(b.probability for b in self.branches if b.success)

    @property
    def total_probability(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    @property
    def pruned_mass(self) -> float:
        return math.fsum(b.probability for b in self.branches if b.pruned)

    @property
    def verified_flags(self) -> tuple[bool | None, ...]:
        return tuple(None if f is None else f >= 1 - FIDELITY_TOL for f in self.fidelities)

    @property
    def verified(self) -> bool:
        return all(f is not False for f in self.verified_flags) and any(b.success for b in self.branches)

    @property
    def min_fidelity(self) -> float:
        fs = [f for f in self.fidelities if f is not None]
        return min(fs) if fs else float("nan")

    def to_json(self) -> dict:
        return {
            "protocol": self.name,
            "target": self.target_gate.name or "custom",
            "success_probability": self.success_probability_exact,
            "classical_bits_sent": self.classical_bits_sent,
            "gate_uses": self.gate_uses,
            "pruned_mass": self.pruned_mass,
            "verified": self.verified,
            "branches": [
                {
                    "outcomes": [[name, k] for name, k in b.outcomes],
                    "probability": b.probability,
                    "tag": b.tag,
                    "verified": flag,
                }
                for b, flag in zip(self.branches, self.verified_flags)
            ],
            **self.extra,
        }


# ---------------------------------------------------------------------------
# helpers


def local(reg: Register, op, targets) -> Register:
    """Apply a unitary that must act within a single party."""
    if isinstance(targets, str):
        targets = (targets,)
    sides = {reg.side_of(t) for t in targets}
    if len(sides) != 1 or None in sides:
        raise InputError(f"local operation spans parties: {targets}")
    return sim.apply(reg, op, targets)


def _as_two_qubit(state) -> PureState:
    if isinstance(state, PureState):
        a = state.amplitudes
    else:
        a = np.asarray(state, dtype=complex).reshape(-1)
    if a.size != 4:
        raise InputError("protocol input must be a two-qubit state")
    return PureState((2, 2), a)


def _input_register(state, qa: str = "QA", qb: str = "QB", base: Register | None = None) -> Register:
    reg = base or Register.empty()
    t = _as_two_qubit(state).tensor()
    # a general two-qubit input: add both qubits jointly, then tag sides
    reg = reg.add((qa, qb), PureState((2, 2), t.reshape(-1)), ("A", "B"))
    return reg


def _verify(branches, gate_matrix, state: PureState, out_labels) -> tuple[float | None, ...]:
    expected = PureState((2, 2), gate_matrix @ state.amplitudes)
    out = []
    for b in branches:
        if b.success and not b.pruned:
            out.append(sim.output_fidelity(b.register, out_labels, expected))
        else:
            out.append(None)
    return tuple(out)


def _tag_all(branches, tag):
    return [Branch(b.outcomes, b.probability, b.register, b.pruned, tag, b.rank_trace, b.data) for b in branches]


def random_two_qubit_state(rng: np.random.Generator) -> PureState:
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    return PureState.normalized((2, 2), v)


def random_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


_PROBES = (
    sim.KET0,
    sim.KET1,
    sim.PLUS,
    np.array([1, 1j], dtype=complex) / math.sqrt(2),
)


def verification_inputs(n_random: int = 4, seed: int = 0) -> list[PureState]:
    """Product probes ``{|0>, |1>, |+>, |+i>}^(x)2`` plus random two-qubit states.

    The 16 probes span the operator space, so a protocol that maps each of
    them correctly implements the target unitary.
    """
    rng = np.random.default_rng(seed)
    probes = [PureState((2, 2), np.kron(a, b)) for a in _PROBES for b in _PROBES]
    return probes + [random_two_qubit_state(rng) for _ in range(n_random)]


# ---------------------------------------------------------------------------
# building blocks


def make_choi(g: Gate | GateResource) -> Register:
    """Register ``A1 A2 B1 B2`` holding the Choi state, prepared with one use of the gate."""
    resource = g if isinstance(g, GateResource) else GateResource(g)
    if resource.gate.d != 2:
        raise InputError("protocols run on qubits only")
    phi = maximally_entangled(2)
    reg = Register.empty().add(("A1", "A2"), phi, "A").add(("B1", "B2"), phi, "B")
    return resource.apply(reg, ("A1", "B1"))


def _check_ebit(reg: Register, pair):
    f = sim.output_fidelity(reg, pair, PureState((2, 2), sim.BELL_BASIS[0]))
    if f < 1 - EBIT_TOL:
        raise InputError(f"ebit {pair} is not |Phi_0> (fidelity {f:.12f})")


def teleport(reg: Register, source: str, ebit: tuple[str, str], name: str | None = None) -> list[Branch]:
    """Teleport ``source`` through ``ebit = (near, far)``; ``near`` sits with the source.

    Returns four branches, each with the source's state on ``far`` after
    the Pauli correction. The caller accounts for the two classical bits.
    """
    near, far = ebit
    if reg.side_of(source) != reg.side_of(near) or reg.side_of(near) == reg.side_of(far):
        raise InputError("teleport needs source and near half on one side, far half on the other")
    _check_ebit(reg, ebit)
    name = name or f"bell({source},{near})"
    branches = sim.measure(reg, (source, near), "bell", name=name)
    out = []
    for k, b in enumerate(branches):
        if not b.pruned:
            b = Branch(b.outcomes, b.probability, local(b.register, TELEPORT_CORRECTIONS[k], far),
                       b.pruned, b.tag, b.rank_trace, b.data)
        out.append(b)
    return out


def _cnot_core(branches, qa: str, qb: str, ebit: tuple[str, str]) -> list[Branch]:
    """CNOT from ``qa`` (party A) to ``qb`` (party B) consuming ``ebit = (a_half, b_half)``."""
    ea, eb = ebit

    def step1(b):
        _check_ebit(b.register, ebit)
        reg = local(b.register, CNOT, (qa, ea))
        kids = sim.measure(reg, ea, "z", name="ebit_z")
        out = []
        for k, c in enumerate(kids):
            if not c.pruned:
                _, corr = CNOT_EBIT_CORRECTIONS[("ebit_z", k)]
                c = Branch(c.outcomes, c.probability, local(c.register, corr, eb), tag=c.tag, rank_trace=c.rank_trace)
            out.append(c)
        return out

    def step2(b):
        reg = local(b.register, CNOT, (eb, qb))
        kids = sim.measure(reg, eb, "x", name="ebit_x")
        out = []
        for k, c in enumerate(kids):
            if not c.pruned:
                _, corr = CNOT_EBIT_CORRECTIONS[("ebit_x", k)]
                c = Branch(c.outcomes, c.probability, local(c.register, corr, qa), tag=c.tag, rank_trace=c.rank_trace)
            out.append(c)
        return out

    return expand(expand(branches, step1), step2)


def _two_ebit_core(branches, gate_matrix, qa: str, qb: str, ebit1, ebit2) -> tuple[list[Branch], tuple[str, str]]:
    """Teleport ``qb`` to A through ``ebit1``, apply the gate there, teleport back through ``ebit2``.

    ``ebit1`` and ``ebit2`` are ``(a_half, b_half)`` pairs. Output sits on
    ``(qa, ebit2 b_half)``.
    """
    e1a, e1b = ebit1
    e2a, e2b = ebit2
    branches = expand(branches, lambda b: teleport(b.register, qb, (e1b, e1a), name="tele_in"))
    branches = expand(branches, lambda b: local(b.register, gate_matrix, (qa, e1a)))
    branches = expand(branches, lambda b: teleport(b.register, e1a, (e2a, e2b), name="tele_out"))
    return branches, (qa, e2b)


# ---------------------------------------------------------------------------
# protocols


def cnot_from_one_ebit(input_state) -> ProtocolReport:
    """Deterministic CNOT (A controls B) from one shared ebit and two classical bits."""
    state = _as_two_qubit(input_state)
    reg = _input_register(state).add(("EA", "EB"), sim.BELL_BASIS[0], ("A", "B"))
    branches = _tag_all(_cnot_core(sim.root(reg), "QA", "QB", ("EA", "EB")), "success")
    fids = _verify(branches, CNOT, state, ("QA", "QB"))
    return ProtocolReport("cnot_from_one_ebit", named_gate("cnot"), tuple(branches), fids, (state,), 2, gate_uses=0)


def simulate_via_two_ebits(g_target: Gate, input_state) -> ProtocolReport:
    """Any two-qubit gate from two ebits: teleport B's qubit to A and back."""
    state = _as_two_qubit(input_state)
    reg = (
        _input_register(state)
        .add(("E1A", "E1B"), sim.BELL_BASIS[0], ("A", "B"))
        .add(("E2A", "E2B"), sim.BELL_BASIS[0], ("A", "B"))
    )
    branches, out = _two_ebit_core(sim.root(reg), g_target.matrix, "QA", "QB", ("E1A", "E1B"), ("E2A", "E2B"))
    branches = _tag_all(branches, "success")
    fids = _verify(branches, g_target.matrix, state, out)
    return ProtocolReport("simulate_via_two_ebits", g_target, tuple(branches), fids, (state,), 4, gate_uses=0)


def ualpha_from_cnot(alpha: float, input_state) -> ProtocolReport:
    """``U(alpha) = exp(-i alpha Z(x)Z)`` from one CNOT use and one ancilla at B."""
    if not 0 <= alpha <= math.pi / 4:
        raise InputError(f"alpha must lie in [0, pi/4], got {alpha}")
    state = _as_two_qubit(input_state)
    target = ualpha(alpha)
    reg = Register.empty().add(("A", "B"), state, ("A", "B")).add("Bt", sim.KET0, "B")
    resource = GateResource(named_gate("cnot"))
    reg = resource.apply(reg, ("A", "Bt"))
    reg = local(reg, target, ("B", "Bt"))
    branches = sim.measure(reg, "Bt", "x", name="ancilla_x")
    out = []
    for k, b in enumerate(branches):
        if k == 1 and not b.pruned:
            r = local(b.register, linalg.Z, "A")
            r = local(r, linalg.Z, "Bt")
            b = Branch(b.outcomes, b.probability, r, rank_trace=b.rank_trace)
        out.append(b)
    out = _tag_all(out, "success")
    fids = _verify(out, target.matrix, state, ("A", "B"))
    return ProtocolReport("ualpha_from_cnot", target, tuple(out), fids, (state,), 1, gate_uses=resource.uses)


def implement_from_choi_postselected(choi: Register, input_a, input_b, gate: Gate) -> ProtocolReport:
    """Run ``gate`` on ``input_a (x) input_b`` by Bell-measuring the inputs against its Choi state.

    Succeeds (both outcomes ``Phi_0``) with probability 1/16 whatever the gate
    and input. ``gate`` is only used to check the output.
    """
    a = np.asarray(input_a.amplitudes if isinstance(input_a, PureState) else input_a, dtype=complex).reshape(-1)
    b_ = np.asarray(input_b.amplitudes if isinstance(input_b, PureState) else input_b, dtype=complex).reshape(-1)
    state = PureState((2, 2), np.kron(a, b_))
    reg = choi.add("IA", a, "A").add("IB", b_, "B")
    branches = sim.measure(reg, ("IA", "A2"), "bell", name="bell_a")
    branches = expand(branches, lambda br: sim.measure(br.register, ("IB", "B2"), "bell", name="bell_b"))
    tagged = []
    for br in branches:
        ok = all(k == 0 for _, k in br.outcomes)
        tagged.append(Branch(br.outcomes, br.probability, br.register, br.pruned,
                             "success" if ok else "failure", br.rank_trace, br.data))
    fids = _verify(tagged, gate.matrix, state, ("A1", "B1"))
    return ProtocolReport("implement_from_choi_postselected", gate, tuple(tagged), fids, (state,), 4, gate_uses=1)


def _slot_unitary(basis: np.ndarray, slots: dict[int, int]) -> np.ndarray:
    """Unitary sending Schmidt vector ``basis[:, i]`` to computational state ``slots[i]``.

    Directions not listed go to the unused computational states in order.
    """
    n = basis.shape[1]
    free = [s for s in range(n) if s not in slots.values()]
    mapping = dict(slots)
    for i in range(n):
        if i not in mapping:
            mapping[i] = free.pop(0)
    e = np.zeros((n, n), dtype=complex)
    for i, s in mapping.items():
        e[s, i] = 1.0
    return e @ basis.conj().T


def convert_gate(g: Gate, target: str, input_state, rank_tol: float = 1e-7) -> ProtocolReport:
    """Optimal conversion of one use of ``g`` into CNOT or SWAP acting on ``input_state``.

    Pipeline: prepare the Choi state of ``g`` (the single use of ``g``),
    filter it at A into a maximally entangled resource, then run the
    deterministic one- or two-ebit protocol on the input.

    Raises:
        InfeasibleConversionError: the Choi Schmidt number of ``g`` is below
            the target's.
    """
    if target not in TARGET_RANK:
        raise InputError(f"unknown conversion target {target!r}")
    if g.d != 2:
        raise InputError("protocols run on qubits only")
    state = _as_two_qubit(input_state)
    cs = choi_state(g, rank_tol)
    need = TARGET_RANK[target]
    if cs.schmidt_number < need:
        raise InfeasibleConversionError(
            cs.schmidt_number,
            need,
            f"cannot convert to {target.upper()}: source Choi Schmidt number {cs.schmidt_number} "
            f"< target Choi Schmidt number {need}",
        )
    dec = schmidt_decompose(cs.state, CHOI_CUT)
    filt = build_filter(dec.spectrum, target, rank_tol)
    phys = filt.conjugated(dec.basis_a)

    resource = GateResource(g)
    reg = _input_register(state, base=make_choi(resource))
    branches = sim.apply_filter(reg, phys, ("A1", "A2"), name="filter")
    outcome_bits = math.ceil(math.log2(len(phys.operators))) if len(phys.operators) > 1 else 0

    def to_resource(b: Branch):
        if not b.success:
            return b.register
        support = b.data["operator"].support
        if target == "cnot":
            i, j = support
            slots = {i: 0, j: 2}  # |00>, |10> on (X1, X2): the ebit lands on (A1, B1)
        else:
            slots = {i: i for i in support}
        reg = local(b.register, _slot_unitary(dec.basis_a, slots), ("A1", "A2"))
        return local(reg, _slot_unitary(dec.basis_b, slots), ("B1", "B2"))

    branches = expand(branches, to_resource)
    live = [b for b in branches if b.success]
    rest = [b for b in branches if not b.success]
    if target == "cnot":
        done = _cnot_core(live, "QA", "QB", ("A1", "B1"))
        out_labels, target_gate, bits = ("QA", "QB"), named_gate("cnot"), 2
    else:
        done, out_labels = _two_ebit_core(live, SWAP, "QA", "QB", ("A1", "B1"), ("A2", "B2"))
        target_gate, bits = named_gate("swap"), 4
    branches = done + rest
    fids = _verify(branches, target_gate.matrix, state, out_labels)
    return ProtocolReport(
        f"convert_to_{target}",
        target_gate,
        tuple(branches),
        fids,
        (state,),
        outcome_bits + bits,
        gate_uses=resource.uses,
        extra={"source_schmidt_number": cs.schmidt_number, "filter_outcomes": len(phys.operators)},
    )


def input_independence_check(protocol, inputs) -> float:
    """Largest spread of success probability of ``protocol(input)`` over ``inputs``."""
    inputs = list(inputs)
    if len(inputs) < 2:
        raise InputError("need at least two inputs")
    ps = [protocol(x).success_probability_exact for x in inputs]
    return float(max(ps) - min(ps))


def run_on_inputs(protocol, inputs) -> ProtocolReport:
    """Run ``protocol(input)`` on every input and merge the verdicts.

    The merged report keeps the branches of the first run; each success
    branch's fidelity is the worst one seen at the same outcome path across
    all inputs. Branch probabilities must agree between inputs.
    """
    inputs = list(inputs)
    if not inputs:
        raise InputError("need at least one input")
    reports = [protocol(x) for x in inputs]
    first = reports[0]
    worst: dict = {}
    probs: dict = {}
    for rep in reports:
        for b, f in zip(rep.branches, rep.fidelities):
            if b.outcomes in probs and abs(probs[b.outcomes] - b.probability) > 1e-9:
                raise InputError(f"branch {b.outcomes} probability depends on the input")
            probs.setdefault(b.outcomes, b.probability)
            if f is not None:
                worst[b.outcomes] = min(worst.get(b.outcomes, 1.0), f)
    fids = tuple(worst.get(b.outcomes) if b.success and not b.pruned else None for b in first.branches)
    return ProtocolReport(
        first.name,
        first.target_gate,
        first.branches,
        fids,
        tuple(s for rep in reports for s in rep.test_inputs),
        first.classical_bits_sent,
        first.gate_uses,
        first.extra,
    )
