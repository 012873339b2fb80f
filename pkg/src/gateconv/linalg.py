"""Small dense complex-matrix kernels.

Matrices are plain ``numpy`` arrays of ``complex128``. Everything here is
sized for the problem at hand (at most 16x16 for the SVD), so clarity wins
over speed.
"""

from __future__ import annotations

import functools

from typing import NamedTuple

import numpy as np

from .errors import NumericalError

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

#: sigma_0..sigma_3, index-aligned with the interaction coefficients a_0..a_3.
PAULIS = (I2, X, Y, Z)

SVD_MAX_SWEEPS = 100
SVD_TOL = 1e-14


class SvdResult(NamedTuple):
    left: np.ndarray
    singular_values: np.ndarray
    right_adjoint: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def tensor(*factors) -> np.ndarray:
    """Kronecker product; row index of ``tensor(a, b)`` is ``i_a * rows_b + i_b``."""
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def is_unitary(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return unitarity_residual(a) <= tol


def unitarity_residual(m: np.ndarray) -> float:
    """Frobenius norm of ``m^dagger m - I``."""
    return float(np.linalg.norm(adjoint(m) @ m - np.eye(m.shape[0])))


@functools.lru_cache(maxsize=None)
def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of ``0..n-1`` (``n`` even) in ``n - 1`` rounds of disjoint pairs, each pair once."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(a: np.ndarray, want_v: bool = True):
    """One-sided (Hestenes) Jacobi on the columns of ``a``.

    Returns ``(w, v)`` with ``a @ v == w`` and the columns of ``w`` mutually
    orthogonal. ``v`` is unitary (``None`` unless ``want_v``). Each sweep
    visits every column pair once, rotating disjoint pairs together
    (round-robin ordering).
    """
    n = a.shape[1]
    m = n + (n % 2)
    w = np.zeros((a.shape[0], m), dtype=complex)
    w[:, :n] = a
    v = np.eye(m, dtype=complex) if want_v else None
    mats = (w, v) if want_v else (w,)
    rounds = _round_robin(m) if m > 1 else []
    # columns below this squared scale are rounding noise and need no rotation
    floor = (1e-16 * np.linalg.norm(a)) ** 2
    for _ in range(SVD_MAX_SWEEPS):
        rotated = False
        for p, q in rounds:
            wp, wq = w[:, p], w[:, q]
            alpha = np.einsum("ij,ij->j", wp.conj(), wp).real
            beta = np.einsum("ij,ij->j", wq.conj(), wq).real
            gamma = np.einsum("ij,ij->j", wp.conj(), wq)
            g = np.abs(gamma)
            active = (g > floor) & (g > SVD_TOL * np.sqrt(alpha * beta))
            if not active.any():
                continue
            rotated = True
            p, q, alpha, beta, gamma, g = p[active], q[active], alpha[active], beta[active], gamma[active], g[active]
            # rotate column q onto a real inner product with column p
            phase = np.conj(gamma / g)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.copysign(1.0, zeta) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in mats:
                xp, xq = mat[:, p], mat[:, q] * phase
                mat[:, p] = c * xp - s * xq
                mat[:, q] = s * xp + c * xq
        if not rotated:
            return w[:, :n], (v[:n, :n] if want_v else None)
    off = _off_diagonal_mass(w)
    raise NumericalError(f"Jacobi SVD did not converge in {SVD_MAX_SWEEPS} sweeps", residual=off)


def _off_diagonal_mass(w: np.ndarray) -> float:
    g = adjoint(w) @ w
    return float(np.linalg.norm(g - np.diag(np.diag(g))))


def _complete_orthonormal(cols: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns not flagged in ``keep`` so the result is unitary."""
    m, k = cols.shape
    basis = [cols[:, j] for j in range(k) if keep[j]]
    out = cols.copy()
    candidates = iter(np.eye(m, dtype=complex).T)
    for j in range(k):
        if keep[j]:
            continue
        while True:
            e = next(candidates)
            for b in basis:
                e = e - np.vdot(b, e) * b
            for b in basis:  # second pass for stability
                e = e - np.vdot(b, e) * b
            nrm = np.linalg.norm(e)
            if nrm > 1e-8:
                e = e / nrm
                break
        basis.append(e)
        out[:, j] = e
    return out


def svd(m) -> SvdResult:
    """Thin SVD ``m = left @ diag(s) @ right_adjoint`` with ``s`` descending.

    ``left`` is ``rows x k`` and ``right_adjoint`` is ``k x cols`` with
    ``k = min(rows, cols)``; both have orthonormal columns/rows, so for square
    input they are unitary.

    Raises:
        NumericalError: if the Jacobi sweeps fail to converge.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if cols > rows:
        r = svd(adjoint(a))
        return SvdResult(adjoint(r.right_adjoint), r.singular_values, adjoint(r.left))

    w, v = _jacobi_columns(a)
    s = np.linalg.norm(w, axis=0)
    order = np.argsort(-s, kind="stable")
    s, w, v = s[order], w[:, order], v[:, order]
    scale = s[0] if s[0] > 0 else 1.0
    keep = s > 1e-13 * scale
    u = np.zeros((rows, cols), dtype=complex)
    u[:, keep] = w[:, keep] / s[keep]
    if not np.all(keep):
        u = _complete_orthonormal(u, keep)
    return SvdResult(u, s, adjoint(v))


def singular_values(m) -> np.ndarray:
    """Singular values of ``m`` in descending order (no singular vectors)."""
    a = as_matrix(m)
    if a.shape[1] > a.shape[0]:
        a = adjoint(a)
    w, _ = _jacobi_columns(a, want_v=False)
    return np.sort(np.linalg.norm(w, axis=0))[::-1]


def pauli_pair(i: int) -> np.ndarray:
    """``sigma_i (x) sigma_i`` for i in 0..3."""
    return tensor(PAULIS[i], PAULIS[i])


def interaction_hamiltonian(mu) -> np.ndarray:
    """``H = sum_i mu_i sigma_i (x) sigma_i`` for i = 1, 2, 3."""
    mu = np.asarray(mu, dtype=float)
    return sum(mu[i] * pauli_pair(i + 1) for i in range(3))


def exp_interaction(mu) -> np.ndarray:
    """``exp(-i H(mu))`` expanded as ``sum_k a_k sigma_k (x) sigma_k``."""
    from .gates import interaction_coefficients

    a = interaction_coefficients(mu)
    return sum(a[k] * pauli_pair(k) for k in range(4))
