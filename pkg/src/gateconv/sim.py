"""Exact pure-state simulator with measurement-branch enumeration.

A :class:`Register` is a labelled pure state; every subsystem may be tagged
with the party (``"A"`` or ``"B"``) holding it. Measurements and local
filters return one :class:`Branch` per outcome with its exact Born
probability, so protocols can be verified without statistics. Sampling is
provided on top of the enumerated branches.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import linalg
from .choi import DEFAULT_RANK_TOL, PureState, schmidt_matrix
from .convert import LocalFilter
from .errors import DimensionMismatchError, InputError, NonUnitaryError
from .gates import Gate

MAX_AMPLITUDES = 256  # 8 qubits
PRUNE_TOL = 1e-14
UNITARY_TOL = 1e-10
BASIS_TOL = 1e-10

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)

Z_BASIS = (KET0, KET1)
X_BASIS = (PLUS, MINUS)

_PHI0 = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
#: Bell basis ``Phi_i = (sigma_i (x) 1) Phi_0``.
BELL_BASIS = tuple(linalg.tensor(p, linalg.I2) @ _PHI0 for p in linalg.PAULIS)


@dataclass(frozen=True, eq=False)
class Register:
    state: PureState
    labels: tuple[str, ...]
    sides: tuple[str | None, ...] = ()

    def __post_init__(self):
        labels = tuple(self.labels)
        sides = tuple(self.sides) if self.sides else (None,) * len(labels)
        if len(set(labels)) != len(labels):
            raise InputError(f"duplicate register labels: {labels}")
        if len(labels) != self.state.num_subsystems or len(sides) != len(labels):
            raise InputError("labels/sides do not match the number of subsystems")
        if self.state.amplitudes.size > MAX_AMPLITUDES:
            raise InputError(f"register exceeds {MAX_AMPLITUDES} amplitudes")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sides", sides)

    @classmethod
    def empty(cls) -> "Register":
        return cls(PureState((), np.ones(1, dtype=complex)), (), ())

    def add(self, labels, state, sides=None) -> "Register":
        """Tensor in fresh subsystems (``state`` is a PureState or amplitude vector)."""
        if isinstance(labels, str):
            labels = (labels,)
        labels = tuple(labels)
        if not isinstance(state, PureState):
            state = PureState((2,) * len(labels), state)
        if isinstance(sides, str) or sides is None:
            sides = (sides,) * len(labels)
        return Register(self.state.kron(state), self.labels + labels, self.sides + tuple(sides))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"no subsystem labelled {label!r} in {self.labels}") from None

    def indices(self, labels) -> tuple[int, ...]:
        if isinstance(labels, str):
            labels = (labels,)
        return tuple(self.index(x) for x in labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.dims

    def side_of(self, label: str) -> str | None:
        return self.sides[self.index(label)]

    def cut(self):
        """``(A indices, B indices)`` or ``None`` when a side is empty or unknown."""
        a = tuple(i for i, s in enumerate(self.sides) if s == "A")
        b = tuple(i for i, s in enumerate(self.sides) if s == "B")
        if not a or not b or len(a) + len(b) != len(self.sides):
            return None
        return a, b

    def schmidt_rank(self, rank_tol: float = DEFAULT_RANK_TOL) -> int | None:
        cut = self.cut()
        if cut is None:
            return None
        s = linalg.singular_values(schmidt_matrix(self.state, cut))
        return int(np.sum(s > rank_tol * s[0]))

    def reduced(self, labels) -> np.ndarray:
        """Reduced density matrix on ``labels`` (in that order)."""
        idx = self.indices(labels)
        rest = tuple(i for i in range(len(self.labels)) if i not in idx)
        t = self.state.tensor().transpose(idx + rest)
        k = math.prod(self.dims[i] for i in idx)
        m = t.reshape(k, -1)
        return m @ m.conj().T


@dataclass(frozen=True, eq=False)
class Branch:
    """One outcome path.

    ``probability`` is absolute once branches are chained with :func:`expand`.
    ``rank_trace`` holds ``(parent_rank, child_rank)`` for every branching
    event on the path (Schmidt ranks across the A|B cut).
    """

    outcomes: tuple[tuple[str, int], ...]
    probability: float
    register: Register | None
    pruned: bool = False
    tag: str | None = None
    rank_trace: tuple[tuple[int | None, int | None], ...] = ()
    data: dict = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.tag == "success"


def _move(reg: Register, targets) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    idx = reg.indices(targets)
    rest = tuple(i for i in range(len(reg.labels)) if i not in idx)
    return reg.state.tensor().transpose(idx + rest), idx, rest


def _restore(t: np.ndarray, idx, rest) -> np.ndarray:
    return t.transpose(np.argsort(idx + rest))


def _apply_matrix(reg: Register, m: np.ndarray, targets) -> np.ndarray:
    t, idx, rest = _move(reg, targets)
    k = math.prod(reg.dims[i] for i in idx)
    if m.shape != (k, k):
        raise DimensionMismatchError(f"operator of shape {m.shape} on targets of dimension {k}")
    out = (m @ t.reshape(k, -1)).reshape(t.shape)
    return _restore(out, idx, rest)


def apply(reg: Register, op, targets) -> Register:
    """Apply a unitary (Gate or matrix) to the listed subsystems."""
    m = np.asarray(op.matrix if isinstance(op, Gate) else op, dtype=complex)
    res = linalg.unitarity_residual(m) if m.ndim == 2 and m.shape[0] == m.shape[1] else math.inf
    if res > UNITARY_TOL:
        raise NonUnitaryError("operator is not unitary", res)
    out = _apply_matrix(reg, m, targets)
    return Register(PureState(reg.dims, out), reg.labels, reg.sides)


def _branch(reg, new, outcome, parent_rank, tag=None) -> Branch:
    p = float(np.vdot(new, new).real)
    if p < PRUNE_TOL:
        return Branch((outcome,), p, None, pruned=True, tag=tag, rank_trace=((parent_rank, None),))
    child = Register(PureState(reg.dims, new / math.sqrt(p)), reg.labels, reg.sides)
    rank = child.schmidt_rank() if parent_rank is not None else None
    return Branch((outcome,), p, child, tag=tag, rank_trace=((parent_rank, rank),))


def _basis_matrix(basis, dim: int) -> np.ndarray:
    b = np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in basis])
    if b.shape != (dim, dim):
        raise DimensionMismatchError(f"basis of {b.shape[1]} vectors of length {b.shape[0]} for dimension {dim}")
    err = float(np.linalg.norm(b.conj().T @ b - np.eye(dim)))
    if err > BASIS_TOL:
        raise InputError(f"measurement basis is not orthonormal (error {err:.3e})")
    return b


def measure(reg: Register, targets, basis: Sequence | str = "z", name: str | None = None) -> list[Branch]:
    """Projective measurement of ``targets`` in an orthonormal basis.

    ``basis`` is a sequence of vectors or one of ``"z"``, ``"x"``, ``"bell"``.
    Post-measurement states keep the measured subsystems, collapsed onto the
    basis vector.
    """
    if isinstance(targets, str):
        targets = (targets,)
    targets = tuple(targets)
    if isinstance(basis, str):
        basis = {"z": Z_BASIS, "x": X_BASIS, "bell": BELL_BASIS}[basis]
    t, idx, rest = _move(reg, targets)
    k = math.prod(reg.dims[i] for i in idx)
    b = _basis_matrix(basis, k)
    name = name or "+".join(targets)
    parent_rank = reg.schmidt_rank()
    flat = t.reshape(k, -1)
    out = []
    for j in range(k):
        proj = np.outer(b[:, j], b[:, j].conj() @ flat).reshape(t.shape)
        out.append(_branch(reg, _restore(proj, idx, rest), (name, j), parent_rank))
    return out


def apply_filter(reg: Register, f: LocalFilter, targets, name: str = "filter") -> list[Branch]:
    """Apply every Kraus operator of ``f``; branches carry the success/failure tag."""
    err = f.completeness_error()
    if err > 1e-10:
        raise InputError(f"filter is not complete (error {err:.3e})")
    parent_rank = reg.schmidt_rank()
    out = []
    for j, op in enumerate(f.operators):
        new = _apply_matrix(reg, np.asarray(op.matrix, dtype=complex), targets)
        br = _branch(reg, new, (name, j), parent_rank, "success" if op.success else "failure")
        out.append(replace(br, data={"operator": op}))
    return out


def expand(branches: Iterable[Branch], step: Callable[[Branch], list[Branch] | Register]) -> list[Branch]:
    """Continue every live branch with ``step``.

    ``step`` gets the parent branch and returns either child branches
    (conditional probabilities) or a single new register (no branching).
    Pruned branches pass through untouched.
    """
    out = []
    for b in branches:
        if b.pruned:
            out.append(b)
            continue
        res = step(b)
        if isinstance(res, Register):
            out.append(replace(b, register=res))
            continue
        for c in res:
            out.append(
                Branch(
                    b.outcomes + c.outcomes,
                    b.probability * c.probability,
                    c.register,
                    pruned=c.pruned,
                    tag=c.tag if c.tag is not None else b.tag,
                    rank_trace=b.rank_trace + c.rank_trace,
                    data={**b.data, **c.data},
                )
            )
    return out


def root(reg: Register) -> list[Branch]:
    return [Branch((), 1.0, reg)]


def fidelity(a: PureState, b: PureState) -> float:
    if a.dims != b.dims:
        raise DimensionMismatchError(f"states have dims {a.dims} and {b.dims}")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def output_fidelity(reg: Register, labels, expected: PureState) -> float:
    """``<expected| rho |expected>`` for the reduced state of ``labels``."""
    rho = reg.reduced(labels)
    v = expected.amplitudes
    if rho.shape[0] != v.size:
        raise DimensionMismatchError("expected state does not match the selected subsystems")
    return float(min(1.0, np.vdot(v, rho @ v).real))


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SampleResult:
    seed: int
    n: int
    counts: dict[str, int]
    success_count: int
    exact_success: float

    @property
    def success_frequency(self) -> float:
        return self.success_count / self.n

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "samples": self.n,
            "counts": dict(sorted(self.counts.items())),
            "success_frequency": self.success_frequency,
            "exact_success_probability": self.exact_success,
        }


def outcome_key(outcomes) -> str:
    return ",".join(f"{name}={k}" for name, k in outcomes) or "-"


def _uniforms(seed: int, n: int, depth: int) -> np.ndarray:
    """``depth`` uniforms per sample; sample ``i`` reads Philox counter blocks ``i*B .. i*B+B-1``."""
    blocks = max(1, math.ceil(depth / 4))
    raw = np.random.Philox(key=seed).random_raw(n * blocks * 4).reshape(n, blocks * 4)
    return (raw[:, :depth] >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sample_run(protocol, seed: int, n: int) -> SampleResult:
    """Sample ``n`` runs of a protocol, outcome by outcome.

    ``protocol`` is a list of leaf branches, an object with a ``branches``
    attribute, or a zero-argument callable returning either. Each run walks
    the outcome tree, drawing the next outcome from its conditional
    probability; run ``i`` uses its own counter-based stream ``(seed, i)``,
    so the result does not depend on evaluation order.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    if callable(protocol):
        protocol = protocol()
    leaves = list(getattr(protocol, "branches", protocol))
    depth = max((len(b.outcomes) for b in leaves), default=0)

    # outcome tree: prefix -> (child outcomes, cumulative conditional probabilities)
    mass: dict[tuple, float] = Counter()
    for b in leaves:
        for k in range(len(b.outcomes) + 1):
            mass[b.outcomes[:k]] += b.probability
    children: dict[tuple, list] = {}
    for prefix in mass:
        if prefix:
            children.setdefault(prefix[:-1], []).append(prefix[-1])
    table = {}
    for prefix, kids in children.items():
        kids = sorted(kids, key=lambda o: (o[0], o[1]))
        w = np.array([mass[prefix + (o,)] for o in kids])
        table[prefix] = (kids, np.cumsum(w) / w.sum())
    leaf_by_path = {b.outcomes: b for b in leaves}

    u = _uniforms(seed, n, depth)
    counts: Counter = Counter()
    success = 0
    for i in range(n):
        path: tuple = ()
        level = 0
        while path in table:
            kids, cdf = table[path]
            j = min(int(np.searchsorted(cdf, u[i, level], side="right")), len(kids) - 1)
            path = path + (kids[j],)
            level += 1
        counts[outcome_key(path)] += 1
        if leaf_by_path[path].success:
            success += 1
    exact = sum(b.probability for b in leaves if b.success)
    return SampleResult(seed, n, dict(counts), success, exact)
