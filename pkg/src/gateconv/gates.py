"""Two-party gates, a small named-gate library and the canonical decomposition.

Any two-qubit unitary can be written as

    U = e^{i phase} (v (x) w) exp(-i sum_k mu_k sigma_k (x) sigma_k) (v~ (x) w~)

with ``pi/4 >= mu_1 >= mu_2 >= |mu_3| >= 0``. :func:`canonical_decompose`
computes this form through the magic (Bell) basis, where local unitaries
become real orthogonal matrices.
"""

from __future__ import annotations

import cmath
import hashlib
import itertools
import json
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from . import linalg
from .errors import InputError, NonUnitaryError, NumericalError

SNAP_TOL = 1e-9
UNITARY_TOL = 1e-10

PI4 = math.pi / 4


@dataclass(frozen=True, eq=False)
class Gate:
    """A unitary on two ``d``-level systems, first factor is party A."""

    d: int
    matrix: np.ndarray
    name: str | None = None

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        if self.d < 2 or m.shape != (self.d**2, self.d**2):
            raise InputError(f"gate matrix shape {m.shape} does not match local dimension d={self.d}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def check_unitary(self, tol: float = UNITARY_TOL) -> "Gate":
        res = linalg.unitarity_residual(self.matrix)
        if res > tol:
            raise NonUnitaryError("gate matrix is not unitary", res)
        return self

    @property
    def dim(self) -> int:
        return self.d * self.d

    def __repr__(self):
        label = self.name or f"<{self.dim}x{self.dim} matrix>"
        return f"Gate(d={self.d}, {label})"


@dataclass(frozen=True)
class CanonicalForm:
    v: np.ndarray
    w: np.ndarray
    v_tilde: np.ndarray
    w_tilde: np.ndarray
    mu: tuple[float, float, float]
    global_phase: float = 0.0

    @classmethod
    def from_mu(cls, mu, global_phase: float = 0.0) -> "CanonicalForm":
        """Canonical form with identity local factors."""
        i2 = np.eye(2, dtype=complex)
        return cls(i2, i2, i2, i2, tuple(float(x) for x in mu), global_phase)

    def matrix(self) -> np.ndarray:
        left = linalg.tensor(self.v, self.w)
        right = linalg.tensor(self.v_tilde, self.w_tilde)
        return cmath.exp(1j * self.global_phase) * left @ linalg.exp_interaction(self.mu) @ right


# ---------------------------------------------------------------------------
# named gates

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_ISWAP = np.array([[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex)
_SQRT_SWAP = np.array(
    [[1, 0, 0, 0], [0, (1 + 1j) / 2, (1 - 1j) / 2, 0], [0, (1 - 1j) / 2, (1 + 1j) / 2, 0], [0, 0, 0, 1]],
    dtype=complex,
)

_NAMED = {
    "identity": np.eye(4, dtype=complex),
    "cnot": _CNOT,
    "cz": _CZ,
    "swap": _SWAP,
    "iswap": _ISWAP,
    "sqrt_swap": _SQRT_SWAP,
}

#: Registry order used by the CLI and its golden files.
GATE_NAMES = ("identity", "cnot", "cz", "swap", "iswap", "sqrt_swap", "ualpha")

_UALPHA_RE = re.compile(r"^ualpha\(\s*([^)]+?)\s*\)$")


def ualpha(alpha: float) -> Gate:
    """``U(alpha) = exp(-i alpha sigma_3 (x) sigma_3)``."""
    m = np.diag(np.exp(-1j * alpha * np.array([1, -1, -1, 1]))).astype(complex)
    return Gate(2, m, name=f"ualpha({alpha!r})")


def named_gate(name: str, alpha: float | None = None) -> Gate:
    """Look up a gate by name.

    CNOT uses party A as control. ``ualpha`` takes its angle either through
    ``alpha`` or inline, as in ``"ualpha(0.3)"``.
    """
    key = name.strip().lower()
    m = _UALPHA_RE.match(key)
    if m:
        try:
            alpha = float(m.group(1))
        except ValueError:
            raise InputError(f"bad ualpha angle in {name!r}") from None
        key = "ualpha"
    if key == "ualpha":
        if alpha is None:
            raise InputError("ualpha needs an angle, e.g. 'ualpha(0.3)'")
        return ualpha(alpha)
    if key not in _NAMED:
        raise InputError(f"unknown gate name {name!r}; known: {', '.join(GATE_NAMES)}")
    return Gate(2, _NAMED[key], name=key)


def haar_random_gate(seed: int, d: int = 2) -> Gate:
    """Haar-distributed unitary on two ``d``-level systems, deterministic in ``seed``."""
    if d not in (2, 3, 4):
        raise InputError(f"haar_random_gate supports d in {{2, 3, 4}}, got {d}")
    m = unitary_group.rvs(d * d, random_state=np.random.default_rng(seed))
    return Gate(d, m)


def random_local_unitary(rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(2, random_state=rng)


# ---------------------------------------------------------------------------
# interaction coefficients


def interaction_coefficients(mu) -> np.ndarray:
    """Coefficients ``a_0..a_3`` of ``exp(-i H(mu)) = sum_k a_k sigma_k (x) sigma_k``."""
    m1, m2, m3 = (float(x) for x in mu)
    c1, c2, c3 = math.cos(m1), math.cos(m2), math.cos(m3)
    s1, s2, s3 = math.sin(m1), math.sin(m2), math.sin(m3)
    return np.array(
        [
            complex(c1 * c2 * c3, -s1 * s2 * s3),
            complex(c1 * s2 * s3, -s1 * c2 * c3),
            complex(s1 * c2 * s3, -c1 * s2 * c3),
            complex(s1 * s2 * c3, -c1 * c2 * s3),
        ]
    )


# ---------------------------------------------------------------------------
# canonical decomposition

# Columns are Bell states with phases chosen so that SU(2) (x) SU(2) maps onto SO(4).
MAGIC = np.array(
    [[1, 1j, 0, 0], [0, 0, 1j, 1], [0, 0, 1j, -1], [1, -1j, 0, 0]],
    dtype=complex,
) / math.sqrt(2)
MAGIC_DAG = MAGIC.conj().T

# exp(-i H(mu)) is diagonal in the magic basis with phases exp(-i LAMBDA @ mu).
LAMBDA = np.array(
    [[np.real((MAGIC_DAG @ linalg.pauli_pair(i) @ MAGIC)[k, k]) for i in (1, 2, 3)] for k in range(4)]
)
_LAMBDA_PINV = np.linalg.pinv(LAMBDA)


def _real_orthogonal_eigh(m2: np.ndarray, mix: float = 0.0):
    """Diagonalise a complex-symmetric unitary with a real orthogonal basis.

    Real and imaginary parts commute, so they share an eigenbasis. First
    diagonalise one real combination of them, then resolve each degenerate
    cluster with the other.
    """
    c, s = math.cos(mix), math.sin(mix)
    first = c * m2.real + s * m2.imag
    second = -s * m2.real + c * m2.imag
    first = (first + first.T) / 2
    second = (second + second.T) / 2
    vals, vecs = np.linalg.eigh(first)
    p = np.zeros((4, 4))
    k = 0
    while k < 4:
        j = k + 1
        while j < 4 and vals[j] - vals[j - 1] < 1e-6:
            j += 1
        block = vecs[:, k:j]
        if j - k > 1:
            sub = block.T @ second @ block
            _, rot = np.linalg.eigh((sub + sub.T) / 2)
            block = block @ rot
        p[:, k:j] = block
        k = j
    d = np.diag(p.T @ m2 @ p)
    residual = float(np.linalg.norm(p @ np.diag(d) @ p.T - m2))
    # deterministic ordering: descending phase, ties broken on the vector itself
    keys = [(-round(cmath.phase(d[i]), 12), tuple(np.round(p[:, i], 12))) for i in range(4)]
    order = sorted(range(4), key=lambda i: keys[i])
    return d[order], p[:, order], residual


def _fold_mu(mu) -> tuple[float, float, float]:
    """Map interaction parameters into ``pi/4 >= mu1 >= mu2 >= |mu3| >= 0``.

    Uses only moves that change the gate by local unitaries and a global phase:
    shifts of any ``mu_k`` by ``pi/2``, permutations, and sign flips of pairs.
    """
    m = [((x + PI4) % (math.pi / 2)) - PI4 for x in mu]  # into [-pi/4, pi/4)
    m = [_snap(x) for x in m]
    m = [PI4 if abs(x + PI4) <= SNAP_TOL else x for x in m]  # -pi/4 ~ pi/4
    m.sort(key=abs, reverse=True)
    if m[0] < 0:
        m[0], m[2] = -m[0], -m[2]
    if m[1] < 0:
        m[1], m[2] = -m[1], -m[2]
    if m[0] == PI4 and m[2] < 0:
        m[2] = -m[2]
    if m[2] == 0.0:
        m[2] = 0.0  # no negative zero in output
    return float(m[0]), float(m[1]), float(m[2])


def _snap(x: float) -> float:
    if abs(x) <= SNAP_TOL:
        return 0.0
    if abs(x - PI4) <= SNAP_TOL:
        return PI4
    if abs(x + PI4) <= SNAP_TOL:
        return -PI4
    return x


def _split_product(k: np.ndarray):
    """Factor a 4x4 matrix that is (numerically) ``a (x) b`` into unitaries a, b."""
    r = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    res = linalg.svd(r)
    s0 = res.singular_values[0]
    a = res.left[:, 0].reshape(2, 2) * math.sqrt(s0)
    b = res.right_adjoint[0, :].reshape(2, 2) * math.sqrt(s0)
    # fix the free scalar so that a has determinant 1
    ph = cmath.sqrt(np.linalg.det(a))
    return a / ph, b * ph


def canonical_decompose(g: Gate) -> CanonicalForm:
    """Canonical form of a two-qubit gate.

    Raises:
        InputError: ``d != 2``.
        NonUnitaryError: the matrix is not unitary within 1e-10.
        NumericalError: degenerate eigenspaces could not be resolved.
    """
    if g.d != 2:
        raise InputError("canonical form is defined for two qubits only")
    g.check_unitary()
    u = np.asarray(g.matrix)
    det = np.linalg.det(u)
    phase0 = cmath.phase(det) / 4
    u_su = u * cmath.exp(-1j * phase0)

    up = MAGIC_DAG @ u_su @ MAGIC
    m2 = up.T @ up
    for mix in (0.0, 0.4142135623730951, 1.1892071150027210, 2.2360679774997898):
        d, p, residual = _real_orthogonal_eigh(m2, mix)
        if residual < 1e-11:
            break
    else:
        raise NumericalError("could not find a real orthogonal eigenbasis of U^T U in the magic basis", residual)

    # any mu whose squared magic-basis spectrum equals d lies in the right local class
    lam = -np.angle(d) / 2
    lam[3] -= lam.sum()  # shift by a multiple of pi so the phases sum to zero
    mu = _fold_mu(_LAMBDA_PINV @ lam)

    # match the canonical spectrum against d, up to an overall sign
    canon = np.exp(-1j * (LAMBDA @ np.array(mu)))
    best = None
    for perm in itertools.permutations(range(4)):
        sq = canon[list(perm)] ** 2
        for sign in (1, -1):
            err = float(np.max(np.abs(d - sign * sq)))
            if best is None or err < best[0]:
                best = (err, perm, sign)
    err, perm, sign = best
    if err > 1e-7:
        raise NumericalError("canonical spectrum does not match gate spectrum", err)

    perm_m = np.zeros((4, 4))
    for col, row in enumerate(perm):
        perm_m[row, col] = 1.0  # column ``col`` of p is paired with canonical index ``row``
    if np.linalg.det(p) * np.linalg.det(perm_m) < 0:
        p = p.copy()
        p[:, 0] = -p[:, 0]
    o2 = perm_m @ p.T
    half = 0.0 if sign == 1 else math.pi / 2
    o1 = cmath.exp(-1j * half) * up @ o2.T @ np.diag(1 / canon)
    if np.max(np.abs(o1.imag)) > 1e-7:
        raise NumericalError("left factor is not real in the magic basis", float(np.max(np.abs(o1.imag))))
    k1 = MAGIC @ o1 @ MAGIC_DAG
    k2 = MAGIC @ o2 @ MAGIC_DAG
    v, w = _split_product(k1)
    vt, wt = _split_product(k2)

    # pick up whatever scalar the factorisation left behind
    a = linalg.exp_interaction(mu)
    recon = linalg.tensor(v, w) @ a @ linalg.tensor(vt, wt)
    idx = np.unravel_index(np.argmax(np.abs(recon)), recon.shape)
    phase = cmath.phase(u[idx] / recon[idx])
    cf = CanonicalForm(v, w, vt, wt, mu, phase % (2 * math.pi))
    residual = float(np.linalg.norm(cf.matrix() - u))
    if residual > 1e-8:
        raise NumericalError("canonical form does not reconstruct the gate", residual)
    return cf


def gate_from_canonical(cf: CanonicalForm) -> Gate:
    return Gate(2, cf.matrix())


def canonical_gate(mu) -> Gate:
    """``exp(-i H(mu))`` as a gate (identity local factors)."""
    return Gate(2, linalg.exp_interaction(mu))


def in_canonical_cell(mu, tol: float = 0.0) -> bool:
    m1, m2, m3 = mu
    return PI4 + tol >= m1 and m1 + tol >= m2 and m2 + tol >= abs(m3)


# ---------------------------------------------------------------------------
# JSON gate format


def gate_from_json(obj) -> Gate:
    """Parse the gate JSON format.

    Accepted shapes::

        {"name": "cnot"}
        {"canonical": {"mu": [m1, m2, m3]}}
        {"d": 2, "matrix": [[[re, im], ...], ...]}

    The result is *not* checked for unitarity; callers decide the tolerance.
    """
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise InputError(f"gate JSON does not parse: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError("gate JSON must be an object")
    if "name" in obj:
        if not isinstance(obj["name"], str):
            raise InputError("'name' must be a string")
        return named_gate(obj["name"], obj.get("alpha"))
    if "canonical" in obj:
        mu = obj["canonical"].get("mu") if isinstance(obj["canonical"], dict) else None
        if not (isinstance(mu, list) and len(mu) == 3 and all(_is_number(x) for x in mu)):
            raise InputError("'canonical' must be {\"mu\": [m1, m2, m3]}")
        return canonical_gate([float(x) for x in mu])
    if "matrix" in obj:
        d = obj.get("d", 2)
        if not isinstance(d, int) or isinstance(d, bool) or d < 2:
            raise InputError("'d' must be an integer >= 2")
        rows = obj["matrix"]
        n = d * d
        if not (isinstance(rows, list) and len(rows) == n):
            raise InputError(f"'matrix' must have {n} rows")
        m = np.zeros((n, n), dtype=complex)
        for i, row in enumerate(rows):
            if not (isinstance(row, list) and len(row) == n):
                raise InputError(f"matrix row {i} must have {n} entries")
            for j, entry in enumerate(row):
                if not (isinstance(entry, list) and len(entry) == 2 and all(_is_number(x) for x in entry)):
                    raise InputError(f"matrix entry ({i},{j}) must be [re, im]")
                m[i, j] = complex(entry[0], entry[1])
        if not np.all(np.isfinite(m)):
            raise InputError("matrix has non-finite entries")
        return Gate(d, m, name=obj.get("name"))
    raise InputError("gate JSON needs one of 'name', 'canonical', 'matrix'")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def gate_to_json(g: Gate) -> dict:
    return {
        "d": g.d,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(g.matrix)],
    }


def gate_digest(g: Gate) -> str:
    """Stable short identifier: the gate name, or a hash of its matrix."""
    if g.name:
        return g.name
    payload = json.dumps(gate_to_json(g), separators=(",", ":")).encode()
    return "sha256:" + hashlib.sha256(payload).hexdigest()[:16]
