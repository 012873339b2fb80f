"""Optimal conversion probabilities and the local filters that achieve them.

Targets are the class representatives: CNOT (one ebit, Choi rank 2) and
SWAP (two ebits, Choi rank 4). Filters act on party A only and are built
diagonal in the source's Schmidt basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .choi import DEFAULT_RANK_TOL, SchmidtSpectrum, choi_spectrum, schmidt_number, uniform_spectrum
from .classify import CNOT_CLASS, LOCAL, SWAP_CLASS, classify
from .errors import InfeasibleConversionError, InputError
from .gates import Gate, canonical_decompose, interaction_coefficients

COMPLETENESS_TOL = 1e-10
PROB_SNAP = 1e-14

TARGET_RANK = {"cnot": 2, "swap": 4}


@dataclass(frozen=True, eq=False)
class FilterOperator:
    """One Kraus operator of a local filter.

    ``support`` lists the Schmidt directions a success outcome leaves
    populated (with equal weight); empty for failure outcomes.
    """

    matrix: np.ndarray
    success: bool
    name: str
    support: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class LocalFilter:
    operators: tuple[FilterOperator, ...]

    def __post_init__(self):
        object.__setattr__(self, "operators", tuple(self.operators))
        err = self.completeness_error()
        if err > COMPLETENESS_TOL:
            raise InputError(f"filter is not complete: ||sum K^dag K - I|| = {err:.3e}")
        for op in self.operators:
            if np.linalg.norm(op.matrix, 2) > 1 + 1e-12:
                raise InputError(f"filter operator {op.name!r} has norm above 1")

    @property
    def dim(self) -> int:
        return self.operators[0].matrix.shape[0]

    def completeness_error(self) -> float:
        acc = sum(op.matrix.conj().T @ op.matrix for op in self.operators)
        return float(np.linalg.norm(acc - np.eye(acc.shape[0])))

    def conjugated(self, basis: np.ndarray) -> "LocalFilter":
        """Express the filter in the computational basis, given the columns of the Schmidt basis."""
        return LocalFilter(
            FilterOperator(basis @ op.matrix @ basis.conj().T, op.success, op.name, op.support)
            for op in self.operators
        )


@dataclass(frozen=True)
class ConversionQuote:
    source_mu: tuple[float, float, float]
    target: str
    probability: float
    feasible: bool
    uncapped_probability: float | None = None

    def to_json(self) -> dict:
        out = {"target": self.target, "feasible": self.feasible, "probability": self.probability}
        if self.uncapped_probability is not None:
            out["uncapped_probability"] = self.uncapped_probability
        return out


def _squares(spec) -> np.ndarray:
    amps = spec.amplitudes if isinstance(spec, SchmidtSpectrum) else spec
    return np.square(np.asarray(amps, dtype=float))


def conversion_probability(source, target) -> float:
    """Optimal probability of turning one pure bipartite state into another.

    ``min_l  sum_{i>=l} source_i^2 / sum_{i>=l} target_i^2`` over the ``l``
    with a positive denominator, for descending Schmidt amplitudes.
    """
    ls, lt = _squares(source), _squares(target)
    n = max(len(ls), len(lt))
    ls = np.pad(ls, (0, n - len(ls)))
    lt = np.pad(lt, (0, n - len(lt)))
    tail_s = np.cumsum(ls[::-1])[::-1]
    tail_t = np.cumsum(lt[::-1])[::-1]
    best = 1.0
    for num, den in zip(tail_s, tail_t):
        if den > 1e-15:
            best = min(best, num / den)
    return float(min(1.0, max(0.0, best)))


def _clean_probability(p: float) -> float:
    """Clip to [0, 1] and absorb rounding at the deterministic end (``1 - 4e-16`` -> ``1``)."""
    p = float(min(1.0, max(0.0, p)))
    return 1.0 if p > 1.0 - PROB_SNAP else p


def _infeasible(mu, target):
    return ConversionQuote(mu, target, 0.0, False, None)


def quote_to_cnot(g: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> ConversionQuote:
    if g.d != 2:
        raise InputError("conversion quotes are defined for two qubits")
    mu = canonical_decompose(g).mu
    cls = classify(g, rank_tol)
    if cls.label == LOCAL:
        return _infeasible(mu, "cnot")
    if cls.label == CNOT_CLASS:
        p = 2 * math.sin(mu[0]) ** 2
        return ConversionQuote(mu, "cnot", _clean_probability(p), True, p)
    b2 = choi_spectrum(g).squares
    raw = float(2 * b2[1:].sum())
    p = conversion_probability(np.sqrt(b2), uniform_spectrum(2))
    return ConversionQuote(mu, "cnot", _clean_probability(p), True, raw)


def quote_to_swap(g: Gate, rank_tol: float = DEFAULT_RANK_TOL) -> ConversionQuote:
    if g.d != 2:
        raise InputError("conversion quotes are defined for two qubits")
    mu = canonical_decompose(g).mu
    if classify(g, rank_tol).label != SWAP_CLASS:
        return _infeasible(mu, "swap")
    p = 4 * abs(interaction_coefficients(mu)[3]) ** 2
    return ConversionQuote(mu, "swap", _clean_probability(p), True, p)


def quote(g: Gate, target: str, rank_tol: float = DEFAULT_RANK_TOL) -> ConversionQuote:
    if target == "cnot":
        return quote_to_cnot(g, rank_tol)
    if target == "swap":
        return quote_to_swap(g, rank_tol)
    raise InputError(f"unknown conversion target {target!r}")


# ---------------------------------------------------------------------------
# filters


def pair_weights(weights, rel_tol: float = 1e-14) -> tuple[dict[tuple[int, int], float], float]:
    """Split non-negative ``weights`` into equal-weight pairs.

    Returns ``(pairs, leftover)`` where ``pairs[(i, j)] = c`` means ``c`` is
    removed from both ``weights[i]`` and ``weights[j]``. Only the largest
    weight can be left over, and only by ``max(0, 2*max - total)``, which is
    the least possible.
    """
    r = np.asarray(weights, dtype=float).copy()
    total = r.sum()
    eps = rel_tol * total
    top = int(np.argmax(r))
    leftover = max(0.0, 2 * r[top] - total)
    pairs: dict[tuple[int, int], float] = {}
    if leftover > 0:
        # the top weight dominates: pair it with every other entry, exactly
        for k in range(len(r)):
            if k != top and r[k] > eps:
                pairs[(min(top, k), max(top, k))] = float(r[k])
        return pairs, float(leftover)

    def add(i, j, c):
        if c > eps:
            key = (min(i, j), max(i, j))
            pairs[key] = pairs.get(key, 0.0) + c
        r[i] -= c
        r[j] -= c

    while True:
        live = sorted((k for k in range(len(r)) if r[k] > eps), key=lambda k: (-r[k], k))
        if len(live) < 2:
            break
        if len(live) == 2:
            i, j = live
            add(i, j, min(r[i], r[j]))
            break
        if len(live) == 3:
            i, j, k = live
            cij = (r[i] + r[j] - r[k]) / 2
            cik = (r[i] + r[k] - r[j]) / 2
            cjk = (r[j] + r[k] - r[i]) / 2
            add(i, j, cij)
            add(i, k, cik)
            add(j, k, cjk)
            break
        i, j, k = live[:3]
        t = r[live].sum()
        # never let the third weight exceed half of what remains
        add(i, j, min(r[j], (t - 2 * r[k]) / 2))
    return pairs, float(leftover)


def _failure_operator(diag_sq_used: np.ndarray) -> np.ndarray:
    return np.diag(np.sqrt(np.clip(1.0 - diag_sq_used, 0.0, 1.0))).astype(complex)


def build_filter_to_rank2(source: SchmidtSpectrum, rank_tol: float = DEFAULT_RANK_TOL) -> LocalFilter:
    """Filter turning the source into a one-ebit state with optimal probability.

    Each success outcome keeps two Schmidt directions with equal weight; the
    total success probability is ``min(1, 2 (1 - b_0^2))``.
    """
    if schmidt_number(source, rank_tol) < 2:
        raise InfeasibleConversionError(schmidt_number(source, rank_tol), 2)
    lam = source.squares
    lam = np.where(lam > (rank_tol * source.amplitudes[0]) ** 2, lam, 0.0)
    pairs, _ = pair_weights(lam)
    n = len(lam)
    keys = sorted(pairs)
    c = np.array([pairs[key] for key in keys])
    # rounding in the pair split can overshoot a direction's weight by a few
    # ulp; shrink whole pairs so each success branch stays exactly balanced
    for _ in range(2):
        used = np.zeros(n)
        for (i, j), cij in zip(keys, c):
            used[i] += cij / lam[i]
            used[j] += cij / lam[j]
        c = c / np.array([max(1.0, used[i], used[j]) for i, j in keys])
    ratio = np.zeros((len(keys), n))
    for row, (i, j) in enumerate(keys):
        ratio[row, i] = min(1.0, c[row] / lam[i])
        ratio[row, j] = min(1.0, c[row] / lam[j])
    used = np.minimum(ratio.sum(axis=0), 1.0)
    ops = [
        FilterOperator(np.diag(np.sqrt(ratio[row])).astype(complex), True, f"pair{i}{j}", (i, j))
        for row, (i, j) in enumerate(keys)
    ]
    used[lam == 0] = 0.0
    fail = _failure_operator(used)
    if np.any(np.abs(fail) > 0):
        ops.append(FilterOperator(fail, False, "fail"))
    return LocalFilter(ops)


def build_filter_to_rank4(source: SchmidtSpectrum, rank_tol: float = DEFAULT_RANK_TOL) -> LocalFilter:
    """Filter ``diag(b3/b0, b3/b1, b3/b2, 1)`` plus its completion; succeeds with ``4 b3^2``."""
    n = schmidt_number(source, rank_tol)
    if n < 4:
        raise InfeasibleConversionError(n, 4)
    b = np.asarray(source.amplitudes[:4])
    if len(source) != 4:
        raise InputError("rank-4 filter expects a spectrum of length 4")
    ratios = b[3] / b
    ok = np.diag(ratios).astype(complex)
    ops = [FilterOperator(ok, True, "flat", (0, 1, 2, 3))]
    fail = _failure_operator(ratios**2)
    if np.any(np.abs(fail) > 0):
        ops.append(FilterOperator(fail, False, "fail"))
    return LocalFilter(ops)


def build_filter(source: SchmidtSpectrum, target: str, rank_tol: float = DEFAULT_RANK_TOL) -> LocalFilter:
    if target == "cnot":
        return build_filter_to_rank2(source, rank_tol)
    if target == "swap":
        return build_filter_to_rank4(source, rank_tol)
    raise InputError(f"unknown conversion target {target!r}")


def filter_success_probability(source: SchmidtSpectrum, f: LocalFilter) -> float:
    """Exact success probability of ``f`` on ``sum_i b_i |ii>`` (filter in the Schmidt basis)."""
    b = np.asarray(source.amplitudes)
    total = 0.0
    for op in f.operators:
        if op.success:
            total += float(np.sum(np.abs(op.matrix @ np.diag(b)) ** 2))
    return total
