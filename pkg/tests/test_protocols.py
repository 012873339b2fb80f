import math

import numpy as np
import pytest

from gateconv import linalg, protocols, sim
from gateconv.choi import PureState, choi_state, maximally_entangled
from gateconv.convert import quote
from gateconv.errors import GateUseError, InfeasibleConversionError, InputError
from gateconv.gates import canonical_gate, haar_random_gate, named_gate, ualpha
from gateconv.protocols import (
    GateResource,
    cnot_from_one_ebit,
    convert_gate,
    implement_from_choi_postselected,
    input_independence_check,
    make_choi,
    run_on_inputs,
    simulate_via_two_ebits,
    teleport,
    ualpha_from_cnot,
    verification_inputs,
)
from gateconv.sim import Register
from helpers import PI4, dressed, random_class2, random_class3, random_state

INPUTS = verification_inputs(n_random=4, seed=1)


def ket(bits):
    return PureState((2, 2), np.eye(4)[int(bits, 2)])


def check_report(rep, p=None):
    assert rep.total_probability == pytest.approx(1, abs=1e-10)
    if p is not None:
        assert rep.success_probability_exact == pytest.approx(p, abs=1e-9)
    assert rep.verified
    for b in rep.branches:
        for parent, child in b.rank_trace:
            if parent is not None and child is not None:
                assert child <= parent


# --- make_choi -------------------------------------------------------------


def test_make_choi_matches_choi_state():
    for g in [named_gate("identity"), named_gate("cnot"), haar_random_gate(3)]:
        reg = make_choi(g)
        assert reg.labels == ("A1", "A2", "B1", "B2")
        assert np.allclose(reg.state.amplitudes, choi_state(g).state.amplitudes, atol=1e-12)


def test_make_choi_examples():
    phi = maximally_entangled(2).amplitudes
    assert np.allclose(make_choi(named_gate("identity")).state.amplitudes, np.kron(phi, phi))
    assert make_choi(named_gate("cnot")).schmidt_rank() == 2
    swap = make_choi(named_gate("swap"))
    assert sim.output_fidelity(swap, ("A1", "B2"), maximally_entangled(2)) == pytest.approx(1)
    assert sim.output_fidelity(swap, ("A2", "B1"), maximally_entangled(2)) == pytest.approx(1)


def test_gate_resource_single_use():
    res = GateResource(named_gate("cnot"))
    make_choi(res)
    with pytest.raises(GateUseError):
        make_choi(res)


# --- teleport ---------------------------------------------------------------


def teleport_register(state):
    return (
        Register.empty()
        .add("S", state, "B")
        .add(("EA", "EB"), sim.BELL_BASIS[0], ("A", "B"))
    )


def test_teleport_zero_and_random():
    rng = np.random.default_rng(0)
    for state in [sim.KET0, random_state(rng, 2)]:
        branches = teleport(teleport_register(state), "S", ("EB", "EA"))
        assert len(branches) == 4
        for b in branches:
            assert b.probability == pytest.approx(0.25, abs=1e-12)
            assert sim.output_fidelity(b.register, ("EA",), PureState((2,), state)) == pytest.approx(1, abs=1e-10)


def test_teleport_entanglement_swapping():
    reg = (
        Register.empty()
        .add(("R", "S"), sim.BELL_BASIS[0], ("B", "B"))
        .add(("EA", "EB"), sim.BELL_BASIS[0], ("A", "B"))
    )
    for b in teleport(reg, "S", ("EB", "EA")):
        f = sim.output_fidelity(b.register, ("R", "EA"), PureState((2, 2), sim.BELL_BASIS[0]))
        assert f == pytest.approx(1, abs=1e-10)


def test_teleport_rejects_bad_ebit():
    reg = Register.empty().add("S", sim.KET0, "B").add(("EA", "EB"), [1, 0, 0, 0], ("A", "B"))
    with pytest.raises(InputError):
        teleport(reg, "S", ("EB", "EA"))


def test_teleport_correction_table_by_enumeration():
    # every Bell outcome needs exactly the tabulated Pauli, and no other Pauli works
    state = random_state(np.random.default_rng(2), 2)
    reg = teleport_register(state)
    raw = sim.measure(reg, ("S", "EB"), "bell")
    for k, b in enumerate(raw):
        good = [
            i
            for i, p in enumerate(linalg.PAULIS)
            if sim.output_fidelity(sim.apply(b.register, p, "EA"), ("EA",), PureState((2,), state)) > 1 - 1e-10
        ]
        assert good == [k]
        assert np.allclose(protocols.TELEPORT_CORRECTIONS[k], linalg.PAULIS[k])


# --- deterministic protocols ----------------------------------------------


def test_cnot_from_one_ebit_examples():
    rep = cnot_from_one_ebit(ket("10"))
    assert len(rep.branches) == 4
    for b in rep.branches:
        assert sim.output_fidelity(b.register, ("QA", "QB"), ket("11")) == pytest.approx(1)
    rep = cnot_from_one_ebit(PureState((2, 2), np.kron(sim.PLUS, sim.KET0)))
    for b in rep.branches:
        assert sim.output_fidelity(b.register, ("QA", "QB"), PureState((2, 2), sim.BELL_BASIS[0])) == pytest.approx(1)
    assert rep.classical_bits_sent == 2
    assert rep.gate_uses == 0


def test_cnot_from_one_ebit_random():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rep = cnot_from_one_ebit(random_state(rng))
        check_report(rep, 1.0)
        assert rep.min_fidelity >= 1 - 1e-10


def test_cnot_core_rejects_bad_resource():
    reg = Register.empty().add(("QA", "QB"), [1, 0, 0, 0], ("A", "B")).add(("EA", "EB"), [1, 0, 0, 0], ("A", "B"))
    with pytest.raises(InputError):
        protocols._cnot_core(sim.root(reg), "QA", "QB", ("EA", "EB"))


def test_cnot_correction_table_by_enumeration():
    # dropping either correction breaks the protocol on some input
    for key in protocols.CNOT_EBIT_CORRECTIONS:
        if key[1] == 1:
            saved = protocols.CNOT_EBIT_CORRECTIONS[key]
            protocols.CNOT_EBIT_CORRECTIONS[key] = (saved[0], linalg.I2)
            try:
                reps = [cnot_from_one_ebit(s) for s in INPUTS]
                assert min(r.min_fidelity for r in reps) < 0.99
            finally:
                protocols.CNOT_EBIT_CORRECTIONS[key] = saved


@pytest.mark.parametrize("target", ["swap", "cnot", "random"])
def test_simulate_via_two_ebits(target):
    g = haar_random_gate(17) if target == "random" else named_gate(target)
    rep = run_on_inputs(lambda s: simulate_via_two_ebits(g, s), INPUTS)
    check_report(rep, 1.0)
    assert len(rep.branches) == 16
    assert rep.classical_bits_sent == 4


def test_ualpha_examples():
    rep = ualpha_from_cnot(0.0, INPUTS[5])
    check_report(rep, 1.0)
    assert len(rep.branches) == 2
    assert [b.probability for b in rep.branches] == pytest.approx([0.5, 0.5])
    assert rep.classical_bits_sent == 1
    assert rep.gate_uses == 1
    rep = ualpha_from_cnot(PI4, ket("11"))
    expected = PureState((2, 2), ualpha(PI4).matrix @ ket("11").amplitudes)
    assert np.isclose(ualpha(PI4).matrix[3, 3], np.exp(-1j * PI4))
    for b in rep.branches:
        assert sim.output_fidelity(b.register, ("A", "B"), expected) == pytest.approx(1, abs=1e-12)


def test_ualpha_random_and_range():
    rng = np.random.default_rng(5)
    for _ in range(20):
        rep = ualpha_from_cnot(rng.uniform(0, PI4), random_state(rng))
        check_report(rep, 1.0)
        assert rep.min_fidelity >= 1 - 1e-10
    for bad in (-0.1, 1.0):
        with pytest.raises(InputError):
            ualpha_from_cnot(bad, INPUTS[0])


# --- post-selected implementation --------------------------------------------


def test_postselected_identity_and_random():
    rng = np.random.default_rng(6)
    a, b = random_state(rng, 2), random_state(rng, 2)
    rep = implement_from_choi_postselected(make_choi(named_gate("identity")), a, b, named_gate("identity"))
    check_report(rep, 1 / 16)
    for _ in range(5):
        g = haar_random_gate(int(rng.integers(1 << 30)))
        rep = implement_from_choi_postselected(make_choi(g), random_state(rng, 2), random_state(rng, 2), g)
        check_report(rep, 1 / 16)
        assert len(rep.branches) == 16


def test_postselected_failure_branches_hold_pauli_twisted_outputs():
    rng = np.random.default_rng(7)
    a, b = random_state(rng, 2), random_state(rng, 2)
    cnot = named_gate("cnot")
    rep = implement_from_choi_postselected(make_choi(cnot), a, b, cnot)
    for br in rep.branches:
        (_, i), (_, j) = br.outcomes
        twisted = cnot.matrix @ np.kron(linalg.PAULIS[i] @ a, linalg.PAULIS[j] @ b)
        f = sim.output_fidelity(br.register, ("A1", "B1"), PureState((2, 2), twisted))
        assert f == pytest.approx(1, abs=1e-10)


# --- convert_gate -------------------------------------------------------------


def test_convert_gate_examples():
    rep = run_on_inputs(lambda s: convert_gate(canonical_gate((math.pi / 6, 0, 0)), "cnot", s), INPUTS)
    check_report(rep, 0.5)
    rep = run_on_inputs(lambda s: convert_gate(named_gate("swap"), "cnot", s), INPUTS)
    check_report(rep, 1.0)
    with pytest.raises(InfeasibleConversionError) as info:
        convert_gate(named_gate("cnot"), "swap", INPUTS[0])
    assert (info.value.source_rank, info.value.target_rank) == (2, 4)
    assert "2" in str(info.value) and "4" in str(info.value)
    with pytest.raises(InfeasibleConversionError):
        convert_gate(named_gate("identity"), "cnot", INPUTS[0])


def test_convert_gate_random_gates_hit_quote():
    rng = np.random.default_rng(8)
    for target, make in [("cnot", random_class2), ("cnot", random_class3), ("swap", random_class3)]:
        for _ in range(5):
            _, g = make(rng)
            rep = run_on_inputs(lambda s: convert_gate(g, target, s), INPUTS[::4])
            check_report(rep, quote(g, target).probability)
            assert rep.gate_uses == 1


def test_convert_gate_deterministic_class3_to_cnot():
    rng = np.random.default_rng(9)
    g = dressed((PI4, 0.6, 0.3), rng)
    rep = convert_gate(g, "cnot", INPUTS[-1])
    check_report(rep, 1.0)


def test_local_refuses_cross_party_targets():
    reg = make_choi(named_gate("cnot"))
    with pytest.raises(InputError):
        protocols.local(reg, named_gate("cnot"), ("A1", "B1"))


def test_convert_gate_rejects_bad_target():
    with pytest.raises(InputError):
        convert_gate(named_gate("swap"), "toffoli", INPUTS[0])
    with pytest.raises(InputError):
        convert_gate(haar_random_gate(0, d=3), "cnot", INPUTS[0])


def test_report_json():
    rep = convert_gate(canonical_gate((math.pi / 6, 0, 0)), "cnot", INPUTS[0])
    js = rep.to_json()
    assert js["success_probability"] == pytest.approx(0.5)
    assert js["classical_bits_sent"] == rep.classical_bits_sent
    assert {b["verified"] for b in js["branches"]} <= {True, None}


# --- input independence --------------------------------------------------------


def test_input_independence_examples():
    rng = np.random.default_rng(10)
    states = [random_state(rng) for _ in range(10)]
    g = canonical_gate((math.pi / 6, 0, 0))
    assert input_independence_check(lambda s: convert_gate(g, "cnot", s), states) < 1e-9
    assert input_independence_check(cnot_from_one_ebit, states) < 1e-12
    h = haar_random_gate(4)
    choi = make_choi(h)
    dev = input_independence_check(
        lambda s: implement_from_choi_postselected(choi, s.amplitudes[:2] / np.linalg.norm(s.amplitudes[:2]),
                                                   sim.PLUS, h),
        [PureState((2, 2), s) for s in states],
    )
    assert dev < 1e-12
    with pytest.raises(InputError):
        input_independence_check(cnot_from_one_ebit, states[:1])


def test_verification_inputs():
    ins = verification_inputs(n_random=4, seed=0)
    assert len(ins) == 20
    # the 16 products span the full operator space on two qubits
    m = np.array([np.outer(s.amplitudes, s.amplitudes.conj()).reshape(-1) for s in ins[:16]])
    assert np.linalg.matrix_rank(m) == 16
