"""Gate-state isomorphism and Schmidt analysis.

The Choi state of a gate ``U`` on two ``d``-level systems lives on four
subsystems ordered ``A1, A2, B1, B2``::

    |Psi_U> = U_{A1 B1} |Phi>_{A1 A2} (x) |Phi>_{B1 B2}

Its Schmidt rank across ``{A1, A2} | {B1, B2}`` decides which gates can
simulate which.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gates import Gate

DEFAULT_RANK_TOL = 1e-7
NORM_TOL = 1e-12

#: Subsystem indices of the Choi register.
A1, A2, B1, B2 = 0, 1, 2, 3
CHOI_CUT = ((A1, A2), (B1, B2))


@dataclass(frozen=True, eq=False)
class PureState:
    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1).copy()
        if amps.size != math.prod(dims):
            raise ValueError(f"{amps.size} amplitudes do not fit dims {dims}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, dims, amplitudes) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(dims, a / np.linalg.norm(a))

    @classmethod
    def basis(cls, dims, index) -> "PureState":
        """Computational basis state; ``index`` is a flat index or a digit tuple."""
        dims = tuple(dims)
        if not isinstance(index, (int, np.integer)):
            index = int(np.ravel_multi_index(tuple(index), dims))
        a = np.zeros(math.prod(dims), dtype=complex)
        a[index] = 1.0
        return cls(dims, a)

    @property
    def num_subsystems(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def kron(self, other: "PureState") -> "PureState":
        return PureState(self.dims + other.dims, np.kron(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class SchmidtSpectrum:
    amplitudes: tuple[float, ...]
    cut: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __post_init__(self):
        amps = tuple(float(x) for x in self.amplitudes)
        if any(x < 0 for x in amps) or any(amps[i] < amps[i + 1] for i in range(len(amps) - 1)):
            raise ValueError(f"Schmidt amplitudes must be non-negative and descending: {amps}")
        if abs(sum(x * x for x in amps) - 1.0) > 1e-10:
            raise ValueError("Schmidt amplitudes are not normalised")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def squares(self) -> np.ndarray:
        return np.square(np.asarray(self.amplitudes))

    def __len__(self):
        return len(self.amplitudes)


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``state = sum_i spectrum[i] * basis_a[:, i] (x) basis_b[:, i]``."""

    spectrum: SchmidtSpectrum
    basis_a: np.ndarray
    basis_b: np.ndarray


@dataclass(frozen=True)
class ChoiState:
    state: PureState
    spectrum: SchmidtSpectrum
    schmidt_number: int


def maximally_entangled(d: int) -> PureState:
    """``(1/sqrt d) sum_k |k>|k>``."""
    if d < 2:
        raise ValueError("d must be at least 2")
    return PureState((d, d), np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d))


def uniform_spectrum(rank: int, length: int | None = None) -> SchmidtSpectrum:
    """Maximally entangled spectrum of the given rank, zero padded to ``length``."""
    length = length or rank
    amps = [1 / math.sqrt(rank)] * rank + [0.0] * (length - rank)
    return SchmidtSpectrum(tuple(amps))


def _check_cut(n: int, cut):
    side_a, side_b = (tuple(int(i) for i in side) for side in cut)
    if not side_a or not side_b:
        raise ValueError("both sides of a cut must be non-empty")
    if sorted(side_a + side_b) != list(range(n)):
        raise ValueError(f"cut {cut} is not a partition of {n} subsystems")
    return side_a, side_b


def schmidt_matrix(state: PureState, cut) -> np.ndarray:
    """Amplitudes reshaped to (side-A basis) x (side-B basis)."""
    side_a, side_b = _check_cut(state.num_subsystems, cut)
    t = state.tensor().transpose(side_a + side_b)
    rows = math.prod(state.dims[i] for i in side_a)
    return t.reshape(rows, -1)


def schmidt_decompose(state: PureState, cut) -> SchmidtDecomposition:
    side_a, side_b = _check_cut(state.num_subsystems, cut)
    res = linalg.svd(schmidt_matrix(state, cut))
    s = res.singular_values / np.linalg.norm(res.singular_values)
    return SchmidtDecomposition(
        SchmidtSpectrum(tuple(s), (side_a, side_b)),
        res.left,
        res.right_adjoint.T,
    )


def schmidt_number(spec: SchmidtSpectrum, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count of amplitudes above ``rank_tol`` times the largest one."""
    amps = spec.amplitudes
    if not amps:
        return 0
    return sum(1 for x in amps if x > rank_tol * amps[0])


def choi_amplitudes(g: Gate) -> np.ndarray:
    """Choi state amplitudes as a ``(d,)*4`` tensor indexed ``[a1, a2, b1, b2]``."""
    d = g.d
    # U_{A1 B1} acting on sum_{a,b} |a>_{A1}|a>_{A2}|b>_{B1}|b>_{B2} / d
    u = np.asarray(g.matrix).reshape(d, d, d, d)  # [a1, b1, a2_in, b2_in]
    return u.transpose(0, 2, 1, 3) / d


def choi_state(g: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> ChoiState:
    state = PureState((g.d,) * 4, choi_amplitudes(g))
    dec = schmidt_decompose(state, CHOI_CUT)
    return ChoiState(state, dec.spectrum, schmidt_number(dec.spectrum, rank_tol))


def choi_spectrum(g: Gate) -> SchmidtSpectrum:
    """Schmidt spectrum of the Choi state across ``A|B`` (no state object kept)."""
    d = g.d
    m = choi_amplitudes(g).reshape(d * d, d * d)
    s = linalg.singular_values(m)
    return SchmidtSpectrum(tuple(s / np.linalg.norm(s)), CHOI_CUT)
