"""Interconversion classes of bipartite gates.

A gate ``U`` can be converted into ``V`` by stochastic local operations
(one use of ``U``) exactly when the Choi Schmidt number of ``U`` is at least
that of ``V``. For two qubits only the numbers 1, 2 and 4 occur.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .choi import DEFAULT_RANK_TOL, choi_spectrum, schmidt_number
from .errors import DimensionMismatchError, ImpossibleRankError, InputError
from .gates import Gate

LOCAL = "LOCAL"
CNOT_CLASS = "CNOT_CLASS"
SWAP_CLASS = "SWAP_CLASS"
GENERAL = "GENERAL"

_QUBIT_LABELS = {1: LOCAL, 2: CNOT_CLASS, 4: SWAP_CLASS}

TWO_EBIT_TOL = 1e-9


@dataclass(frozen=True)
class GateClass:
    schmidt_number: int
    label: str

    def to_json(self) -> dict:
        return {"schmidt_number": self.schmidt_number, "label": self.label}


def class_of_rank(n: int, d: int, spectrum=()) -> GateClass:
    if d == 2:
        if n not in _QUBIT_LABELS:
            raise ImpossibleRankError(spectrum)
        return GateClass(n, _QUBIT_LABELS[n])
    return GateClass(n, GENERAL)


def classify(g: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> GateClass:
    """Class of ``g``; raises :class:`ImpossibleRankError` for a two-qubit rank of 3."""
    spec = choi_spectrum(g)
    return class_of_rank(schmidt_number(spec, rank_tol), g.d, spec.amplitudes)


def _ranks(g: Gate, h: Gate, rank_tol: float) -> tuple[int, int]:
    if g.d != h.d:
        raise DimensionMismatchError(f"gates act on different local dimensions ({g.d} vs {h.d})")
    return (
        schmidt_number(choi_spectrum(g), rank_tol),
        schmidt_number(choi_spectrum(h), rank_tol),
    )


def can_simulate(g: Gate, h: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    """Whether one use of ``g`` plus SLOCC can implement ``h`` with nonzero probability."""
    ng, nh = _ranks(g, h, rank_tol)
    return ng >= nh


def equivalent(g: Gate, h: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> bool:
    ng, nh = _ranks(g, h, rank_tol)
    return ng == nh


def creates_two_ebits(g: Gate, tol: float = TWO_EBIT_TOL) -> bool:
    """True iff the Choi spectrum is flat over all four Schmidt components."""
    if g.d != 2:
        raise InputError("creates_two_ebits is defined for two qubits")
    amps = np.asarray(choi_spectrum(g).amplitudes)
    return bool(np.all(np.abs(amps - 0.5) <= tol))
