import math

import numpy as np
import pytest

from gateconv import linalg
from gateconv.classify import (
    CNOT_CLASS,
    GENERAL,
    LOCAL,
    SWAP_CLASS,
    can_simulate,
    class_of_rank,
    classify,
    creates_two_ebits,
    equivalent,
)
from gateconv.errors import DimensionMismatchError, ImpossibleRankError
from gateconv.gates import Gate, canonical_decompose, canonical_gate, haar_random_gate, named_gate
from helpers import PI4, dressed


@pytest.mark.parametrize(
    "name, label, n",
    [
        ("identity", LOCAL, 1),
        ("cnot", CNOT_CLASS, 2),
        ("cz", CNOT_CLASS, 2),
        ("swap", SWAP_CLASS, 4),
        ("iswap", SWAP_CLASS, 4),
        ("sqrt_swap", SWAP_CLASS, 4),
    ],
)
def test_named_classes(name, label, n):
    cls = classify(named_gate(name))
    assert cls.label == label
    assert cls.schmidt_number == n
    assert cls.to_json() == {"schmidt_number": n, "label": label}


def test_rank_three_is_rejected():
    with pytest.raises(ImpossibleRankError) as info:
        class_of_rank(3, 2, (0.8, 0.5, 0.33, 0.0))
    assert len(info.value.spectrum) == 4


def test_general_label_for_qutrits():
    cls = classify(haar_random_gate(4, d=3))
    assert cls.label == GENERAL
    assert 1 <= cls.schmidt_number <= 9


def test_mu_determines_class():
    assert classify(canonical_gate((0.3, 0, 0))).label == CNOT_CLASS
    assert classify(canonical_gate((0.3, 0.1, 0))).label == SWAP_CLASS
    assert classify(canonical_gate((0.3, 0.1, -0.05))).label == SWAP_CLASS


def test_rank_tol_changes_verdict():
    g = canonical_gate((1e-5, 0, 0))
    assert classify(g).label == CNOT_CLASS
    assert classify(g, rank_tol=1e-3).label == LOCAL


def test_can_simulate():
    swap, cnot = named_gate("swap"), named_gate("cnot")
    assert can_simulate(swap, cnot)
    assert not can_simulate(cnot, swap)
    g = haar_random_gate(1)
    assert can_simulate(g, g)
    with pytest.raises(DimensionMismatchError):
        can_simulate(cnot, haar_random_gate(0, d=3))


def test_equivalent():
    assert equivalent(named_gate("cnot"), named_gate("cz"))
    assert not equivalent(named_gate("cnot"), named_gate("swap"))
    local = Gate(2, linalg.tensor(linalg.X, linalg.Z))
    assert equivalent(named_gate("identity"), local)
    with pytest.raises(DimensionMismatchError):
        equivalent(named_gate("cnot"), haar_random_gate(0, d=3))


def test_cz_is_hadamard_conjugated_cnot():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    hh = linalg.tensor(linalg.I2, h)
    assert np.allclose(hh @ named_gate("cnot").matrix @ hh, named_gate("cz").matrix)


def test_creates_two_ebits():
    assert creates_two_ebits(named_gate("swap"))
    assert creates_two_ebits(named_gate("iswap"))
    assert not creates_two_ebits(named_gate("cnot"))
    assert not creates_two_ebits(named_gate("sqrt_swap"))
    rng = np.random.default_rng(0)
    assert creates_two_ebits(dressed((PI4, PI4, 0.2), rng))


def test_two_ebit_converse_spot_check():
    # random gates off the mu1 = mu2 = pi/4 edge never produce a flat spectrum
    for seed in range(200):
        g = haar_random_gate(seed)
        mu = canonical_decompose(g).mu
        on_edge = abs(mu[0] - PI4) < 1e-9 and abs(mu[1] - PI4) < 1e-9
        assert creates_two_ebits(g) == on_edge
