"""Permutation metrics and statistics.

Permutations are 0-based image arrays internally (``sigma[i]`` is the image of
``i``); every metric used here only sees differences of images, so the shift
from the 1-based convention is harmless.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from mlsiconc.finite_space import SYMMETRIC, DomainError, FiniteSpace, build_space


class NoClosedForm(DomainError):
    pass


class Metric(str, enum.Enum):
    HAMMING = "hamming"
    FOOTRULE = "footrule"
    LP = "lp"
    SPEARMAN = "spearman"
    KENDALL = "kendall"


class Stat(str, enum.Enum):
    HAMMING = "hamming"
    FOOTRULE = "footrule"
    SPEARMAN_SQ = "spearman_sq"
    KENDALL = "kendall"
    ASCENTS = "ascents"
    SUM_ASCENTS = "sum_ascents"
    DESCENTS_PLUS_INVERSE = "descents_plus_inverse"
    MATRIX = "matrix"
    FIXED_POINTS = "fixed_points"


# -- inversions --------------------------------------------------------------

def inversions(seq) -> int:
    """Inversion count by merge sort, O(n log n)."""
    arr = list(seq)

    def sort_count(a):
        if len(a) <= 1:
            return a, 0
        mid = len(a) // 2
        left, x = sort_count(a[:mid])
        right, y = sort_count(a[mid:])
        merged, count, i, j = [], x + y, 0, 0
        while i < len(left) and j < len(right):
            if left[i] <= right[j]:
                merged.append(left[i])
                i += 1
            else:
                merged.append(right[j])
                count += len(left) - i
                j += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return merged, count

    return sort_count(arr)[1]


def inversion_counts(perms: np.ndarray) -> np.ndarray:
    """Inversion counts of a batch of permutations (rows), vectorised O(n^2)."""
    perms = np.asarray(perms)
    n = perms.shape[-1]
    total = np.zeros(perms.shape[:-1], dtype=np.int64)
    for i in range(n - 1):
        total += np.sum(perms[..., i:i + 1] > perms[..., i + 1:], axis=-1)
    return total


def inverse(perms: np.ndarray) -> np.ndarray:
    perms = np.asarray(perms)
    out = np.empty_like(perms)
    idx = np.arange(perms.shape[-1])
    np.put_along_axis(out, perms, np.broadcast_to(idx, perms.shape).astype(perms.dtype), axis=-1)
    return out


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``(a b)(k) = a(b(k))``."""
    return np.take_along_axis(np.asarray(a), np.asarray(b, dtype=np.int64), axis=-1)


def kendall_bfs(pi, sigma) -> int:
    """Adjacent-transposition distance from ``sigma^{-1}`` to ``pi^{-1}`` by breadth-first search."""
    start = tuple(int(v) for v in inverse(np.asarray(sigma)))
    goal = tuple(int(v) for v in inverse(np.asarray(pi)))
    seen = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            return seen[cur]
        for k in range(len(cur) - 1):
            nxt = list(cur)
            nxt[k], nxt[k + 1] = nxt[k + 1], nxt[k]
            nxt = tuple(nxt)
            if nxt not in seen:
                seen[nxt] = seen[cur] + 1
                queue.append(nxt)
    raise AssertionError("unreachable")  # pragma: no cover


# -- metrics -----------------------------------------------------------------

def metric(kind, sigma, pi, p: float = 2.0) -> float:
    """Distance between permutations; batched over leading axes."""
    kind = Metric(kind)
    sigma = np.asarray(sigma, dtype=np.int64)
    pi = np.asarray(pi, dtype=np.int64)
    if sigma.shape[-1] != pi.shape[-1]:
        raise DomainError("permutations of different sizes")
    diff = np.abs(sigma - pi)
    if kind is Metric.HAMMING:
        out = np.sum(diff != 0, axis=-1)
    elif kind is Metric.FOOTRULE:
        out = np.sum(diff, axis=-1)
    elif kind in (Metric.LP, Metric.SPEARMAN):
        q = 2.0 if kind is Metric.SPEARMAN else float(p)
        if not 1 <= q < math.inf:
            raise DomainError("p must lie in [1, inf)")
        out = np.sum(diff.astype(float) ** q, axis=-1) ** (1.0 / q)
    else:
        rel = compose(pi, inverse(sigma))
        if rel.ndim == 1:
            return float(inversions(rel.tolist()))
        out = inversion_counts(rel)
    return float(out) if np.ndim(out) == 0 else out.astype(float)


# -- statistics --------------------------------------------------------------

def _ascents(perms: np.ndarray) -> np.ndarray:
    return np.sum(perms[..., 1:] > perms[..., :-1], axis=-1)


def statistic(kind, sigma, matrix=None) -> np.ndarray | float:
    """Value of a permutation statistic; batched over leading axes of ``sigma``."""
    kind = Stat(kind)
    s = np.asarray(sigma, dtype=np.int64)
    n = s.shape[-1]
    ident = np.arange(n)
    if kind is Stat.HAMMING:
        out = np.sum(s != ident, axis=-1)
    elif kind is Stat.FOOTRULE:
        out = np.sum(np.abs(s - ident), axis=-1)
    elif kind is Stat.SPEARMAN_SQ:
        out = np.sum((s - ident) ** 2, axis=-1)
    elif kind is Stat.KENDALL:
        out = inversion_counts(s)
    elif kind is Stat.ASCENTS:
        out = _ascents(s)
    elif kind is Stat.SUM_ASCENTS:
        out = np.sum(np.maximum(s[..., 1:] - s[..., :-1], 0), axis=-1)
    elif kind is Stat.DESCENTS_PLUS_INVERSE:
        # g counts i with sigma(i+1) > sigma(i) (ascents, as defined for this statistic)
        out = _ascents(s) + _ascents(inverse(s))
    elif kind is Stat.MATRIX:
        if matrix is None:
            raise DomainError("matrix statistic needs a matrix")
        a = np.asarray(matrix, dtype=float)
        if a.shape != (n, n) or np.any(a < 0) or np.any(a > 1):
            raise DomainError("matrix must be n x n with entries in [0, 1]")
        out = np.sum(a[ident, s], axis=-1)
    else:
        out = np.sum(s == ident, axis=-1)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def stat_table(space: FiniteSpace, kind, matrix=None) -> np.ndarray:
    if space.kind != SYMMETRIC:
        raise DomainError("permutation statistics need S_n")
    return statistic(kind, space.points, matrix)


# -- moments of distances to the identity -----------------------------------

_MOMENTS = {
    Stat.HAMMING: (lambda n: Fraction(n - 1), lambda n: Fraction(1)),
    Stat.FOOTRULE: (lambda n: Fraction(n * n - 1, 3), lambda n: Fraction((n + 1) * (2 * n * n + 7), 45)),
    Stat.SPEARMAN_SQ: (lambda n: Fraction(n * (n * n - 1), 6),
                       lambda n: Fraction(n * n * (n - 1) * (n + 1) ** 2, 36)),
    Stat.KENDALL: (lambda n: Fraction(n * (n - 1), 4), lambda n: Fraction(n * (n - 1) * (2 * n + 5), 72)),
}

INVARIANCE = {
    Stat.HAMMING: "bi-invariant",
    Stat.FOOTRULE: "right invariant",
    Stat.SPEARMAN_SQ: "right invariant",
    Stat.KENDALL: "right invariant",
}

LIMIT_THEOREM = {
    Stat.HAMMING: "n - H => Poi(1)",
    Stat.FOOTRULE: "CLT",
    Stat.SPEARMAN_SQ: "CLT",
    Stat.KENDALL: "CLT",
}


def exact_moments(kind, n: int, exact: bool = False):
    """Closed-form mean and variance of ``d(id, sigma)`` under the uniform law."""
    kind = Stat(kind)
    if kind not in _MOMENTS:
        raise DomainError(f"no moment formula for {kind.value}")
    if n < 2:
        raise DomainError("need n >= 2")
    m, v = (fn(n) for fn in _MOMENTS[kind])
    return (m, v) if exact else (float(m), float(v))


def enumerated_moments(kind, n: int, exact: bool = False, cap: int | None = None):
    """Mean and variance by enumerating ``S_n``; exact fractions when ``exact``."""
    space = build_space(SYMMETRIC, n=n, cap=cap)
    vals = stat_table(space, kind)
    if exact:
        ints = vals.astype(np.int64)
        if not np.array_equal(ints, vals):
            raise DomainError("exact mode needs integer-valued statistics")
        total = space.cardinality
        m = Fraction(int(ints.sum()), total)
        second = Fraction(int((ints * ints).sum()), total)
        return m, second - m * m
    m = float(np.mean(vals))
    return m, float(np.mean((vals - m) ** 2))


# -- observable diameter -----------------------------------------------------

def obs_diam_closed_form(kind, n: int, p: float = 2.0) -> float:
    kind = Metric(kind)
    if kind is Metric.HAMMING:
        return 4.0 * (n - 1)
    if kind in (Metric.LP, Metric.FOOTRULE, Metric.SPEARMAN):
        q = {Metric.FOOTRULE: 1.0, Metric.SPEARMAN: 2.0}.get(kind, float(p))
        return 2.0 ** (2.0 / q) / 6.0 * n * (n * n - 1)
    raise NoClosedForm(f"no closed form for ObsDiam under {kind.value}")


def kendall_obs_diam_bound(n: int) -> float:
    return 2.0 / 3.0 * n * (n * n - 1)


def _transposition_sum(kind, sigma: np.ndarray, pairs: np.ndarray, p: float) -> np.ndarray:
    """``n^{-1} sum_{i,j} d(sigma, sigma tau_ij)^2`` for a batch of sigma."""
    n = sigma.shape[-1]
    total = np.zeros(sigma.shape[:-1])
    for i, j in pairs:
        moved = sigma.copy()
        moved[..., [i, j]] = moved[..., [j, i]]
        total += 2.0 * metric(kind, sigma, moved, p) ** 2
    return total / n


def kind_invariant(kind) -> bool:
    return Metric(kind) is not Metric.LP


def obs_diam(kind, n: int, mode: str = "closed_form", p: float = 2.0, full: bool = False,
             cap: int | None = None) -> float:
    """Observable diameter ``max_sigma n^{-1} sum_{i,j} d(sigma, sigma tau_ij)^2``.

    In exhaustive mode the sum is evaluated at the identity for the four classical metrics
    (right invariant or bi-invariant) and maximised over all of ``S_n`` otherwise,
    or whenever ``full`` is set.
    """
    if mode == "closed_form":
        return obs_diam_closed_form(kind, n, p)
    if mode != "exhaustive":
        raise DomainError(f"unknown mode {mode!r}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not full and kind_invariant(kind):
        return float(_transposition_sum(kind, np.arange(n)[None, :], pairs, p)[0])
    space = build_space(SYMMETRIC, n=n, cap=cap)
    return float(np.max(_transposition_sum(kind, space.points.astype(np.int64), pairs, p)))


# -- locally Lipschitz check -------------------------------------------------

@dataclass
class LipschitzResult:
    passed: bool
    worst_sigma: list[int] | None
    worst_pair: tuple[int, int] | None
    excess: float


def lipschitz_check(space: FiniteSpace, f, kind, p: float = 2.0, tol: float = 1e-12) -> LipschitzResult:
    """Check ``|f(sigma) - f(sigma tau_ij)| <= d(sigma, sigma tau_ij)`` for all sigma, i, j."""
    if space.kind != SYMMETRIC:
        raise DomainError("locally Lipschitz check needs S_n")
    f = space.check_function(f)
    pts = space.points.astype(np.int64)
    swap = space.swap_table
    worst, where = -math.inf, None
    for t, (i, j) in enumerate(space.pairs):
        moved = pts.copy()
        moved[:, [i, j]] = moved[:, [j, i]]
        excess = np.abs(f - f[swap[:, t]]) - metric(kind, pts, moved, p)
        k = int(np.argmax(excess))
        if excess[k] > worst:
            worst, where = float(excess[k]), (k, (int(i) + 1, int(j) + 1))
    if worst <= tol:
        return LipschitzResult(True, None, None, max(worst, 0.0))
    return LipschitzResult(False, space.to_json_point(where[0]), where[1], worst)
