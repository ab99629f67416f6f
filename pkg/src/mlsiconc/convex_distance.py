"""Talagrand's convex distance on permutations and slices.

``d_T(w, A)^2 = min_nu sum_k nu(w' : w'_k != w_k)^2`` over probability measures on
``A``. The minimisation is a quadratic over the simplex, solved here by
Frank-Wolfe with away steps; a zooming grid search gives an independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from mlsiconc.config import DEFAULT
from mlsiconc.diff_ops import exchange_sq
from mlsiconc.finite_space import SLICE, SYMMETRIC, DomainError, FiniteSpace
from mlsiconc.rng import uniform_rows

KAPPA = {SYMMETRIC: 144.0, SLICE: 544.0}
LEMMA_SCALE = {SYMMETRIC: 16.0, SLICE: 32.0}
GAMMA_PLUS_CAP = {SYMMETRIC: 4.0, SLICE: 8.0}


@dataclass
class ConvexDistResult:
    value: float
    nu: np.ndarray
    gap: float
    iterations: int
    alpha: np.ndarray | None = None  # unit weights v(nu)/|v(nu)|; None at distance 0


def mismatch_matrix(omega, A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A))
    omega = np.asarray(omega)
    if A.shape[0] == 0:
        raise DomainError("A must be nonempty")
    if A.shape[1] != omega.shape[-1]:
        raise DomainError("points of A and omega differ in length")
    return (A != omega).astype(float)


def _frank_wolfe(M: np.ndarray, tol: float, max_iter: int):
    """Away-step Frank-Wolfe for ``min |M^T nu|^2`` on the simplex, uniform start."""
    m = M.shape[0]
    nu = np.full(m, 1.0 / m)
    v = M.T @ nu
    gap = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad = M @ v  # half the gradient
        vv = float(v @ v)
        s = int(np.argmin(grad))
        gap = 2.0 * (vv - float(grad[s]))
        if gap <= tol:
            break
        support = np.flatnonzero(nu > 0)
        a = int(support[np.argmax(grad[support])])
        away_gap = 2.0 * (float(grad[a]) - vv)
        if gap >= away_gap or nu[a] >= 1.0:
            u = M[s] - v
            gmax = 1.0
            step_fw = True
        else:
            u = v - M[a]
            gmax = nu[a] / (1.0 - nu[a])
            step_fw = False
        uu = float(u @ u)
        if uu == 0.0:
            break
        gamma = min(max(-float(v @ u) / uu, 0.0), gmax)
        if step_fw:
            nu *= 1.0 - gamma
            nu[s] += gamma
        else:
            nu *= 1.0 + gamma
            nu[a] -= gamma
            if gamma == gmax:
                nu[a] = 0.0
        v = v + gamma * u
    else:
        grad = M @ v
        gap = 2.0 * (float(v @ v) - float(np.min(grad)))
    v = M.T @ nu
    return nu, v, max(gap, 0.0), it


def convex_distance(omega, A, tol: float | None = None, max_iter: int = 200000) -> ConvexDistResult:
    """``d_T(omega, A)``; the duality gap refers to the squared objective."""
    tol = DEFAULT.fw_tol if tol is None else tol
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    M = mismatch_matrix(omega, A)
    m = M.shape[0]
    nu = np.zeros(m)
    hit = np.flatnonzero(~M.any(axis=1))
    if hit.size:
        nu[hit[0]] = 1.0
        return ConvexDistResult(0.0, nu, 0.0, 0)
    if m == 1:
        nu[0] = 1.0
        k = math.sqrt(M[0].sum())
        return ConvexDistResult(k, nu, 0.0, 0, M[0] / k)
    # identical rows are interchangeable; the first copy keeps the mass
    _, keep = np.unique(M, axis=0, return_index=True)
    order = np.argsort(keep)
    rows = keep[order]
    sub_nu, v, gap, it = _frank_wolfe(M[rows], tol, max_iter)
    nu[rows] = sub_nu
    return ConvexDistResult(math.sqrt(max(float(v @ v), 0.0)), nu, gap, it, v / np.linalg.norm(v))


# -- independent oracle ------------------------------------------------------

@dataclass
class OracleResult:
    value: float
    lower: float
    upper: float


def _simplex_grid(parts: int, steps: int) -> np.ndarray:
    """All compositions of ``steps`` into ``parts`` nonnegative integers, divided by ``steps``."""
    bars = np.array(list(itertools.combinations(range(steps + parts - 1), parts - 1)), dtype=np.int64)
    bars = bars.reshape(-1, parts - 1)
    edges = np.concatenate([np.full((len(bars), 1), -1), bars,
                            np.full((len(bars), 1), steps + parts - 1)], axis=1)
    return (np.diff(edges, axis=1) - 1) / steps


def convex_distance_oracle(omega, A, max_set: int = 6, floor_step: float = 1e-9) -> OracleResult:
    """Brute-force ``d_T`` by a coarse simplex grid followed by local zooming grids.

    The upper envelope is the best objective found. The lower envelope subtracts the
    convexity certificate ``max_s <grad, nu - e_s>`` at the incumbent.
    """
    M = mismatch_matrix(omega, A)
    if M.shape[0] > max_set:
        raise DomainError(f"oracle supports |A| <= {max_set}")
    if not M.any(axis=1).all():
        return OracleResult(0.0, 0.0, 0.0)
    M = np.unique(M, axis=0)
    m = M.shape[0]
    if m == 1:
        val = math.sqrt(M[0].sum())
        return OracleResult(val, val, val)

    def objective(nus):
        v = nus @ M
        return np.einsum("ij,ij->i", v, v)

    steps = 1
    while math.comb(2 * steps + m - 1, m - 1) <= 60000:
        steps *= 2
    grid = _simplex_grid(m, steps)
    vals = objective(grid)
    best = grid[int(np.argmin(vals))]
    best_val = float(vals.min())
    h = 1.0 / steps
    radius = max(2, int(round(20000 ** (1.0 / (m - 1)) - 1)) // 2)
    offsets = np.array(list(itertools.product(range(-radius, radius + 1), repeat=m - 1)), dtype=float)
    shrink = max(2.0, radius / 2.0)
    while h > floor_step:
        h /= shrink
        head = best[:-1] + offsets * h
        cand = np.concatenate([head, 1.0 - head.sum(axis=1, keepdims=True)], axis=1)
        cand = cand[np.all(cand >= -1e-15, axis=1)]
        cand = np.clip(cand, 0.0, None)
        cand /= cand.sum(axis=1, keepdims=True)
        vals = objective(cand)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best, best_val = cand[k], float(vals[k])
    v = best @ M
    grad = 2.0 * (M @ v)
    cert = max(float(grad @ best - grad.min()), 0.0)
    return OracleResult(math.sqrt(best_val), math.sqrt(max(best_val - cert, 0.0)), math.sqrt(best_val))


# -- Talagrand scans ---------------------------------------------------------

def _space_check(space: FiniteSpace) -> None:
    if space.kind not in (SYMMETRIC, SLICE):
        raise DomainError("convex distance scans need S_n or a slice")


def distance_table(space: FiniteSpace, subset, tol: float | None = None):
    """``d_T(x, A)`` at every point of the space, with the largest FW gap seen."""
    _space_check(space)
    subset = np.unique(np.asarray(subset, dtype=np.int64))
    if subset.size == 0:
        raise DomainError("A must be nonempty")
    A = space.points[subset]
    out = np.zeros(space.cardinality)
    worst_gap = 0.0
    cache = {}
    inside = np.zeros(space.cardinality, dtype=bool)
    inside[subset] = True
    for p in np.flatnonzero(~inside):
        M = np.unique(mismatch_matrix(space.points[p], A), axis=0)
        key = M.tobytes()
        if key not in cache:
            cache[key] = convex_distance(np.zeros(M.shape[1]), M, tol)
        res = cache[key]
        out[p] = res.value
        worst_gap = max(worst_gap, res.gap)
    return out, worst_gap


def talagrand_certificate(space: FiniteSpace, subset, kappa: float | None = None,
                          tol: float = 1e-8) -> float:
    """``mu(A) E_mu exp(d_T(., A)^2 / kappa)`` under the uniform law."""
    _space_check(space)
    kappa = KAPPA[space.kind] if kappa is None else float(kappa)
    if not kappa > 0:
        raise DomainError("kappa must be positive")
    subset = np.unique(np.asarray(subset, dtype=np.int64))
    dist, _ = distance_table(space, subset, tol)
    mass = subset.size / space.cardinality
    return float(mass * np.mean(np.exp(dist * dist / kappa)))


@dataclass
class TalagrandRecord:
    set_id: int
    mass: float
    certificate: float
    max_dt: float
    max_gap: float


def talagrand_scan(space: FiniteSpace, subsets, kappa: float | None = None, tol: float = 1e-8):
    _space_check(space)
    kappa = KAPPA[space.kind] if kappa is None else float(kappa)
    for sid, subset in enumerate(subsets):
        subset = np.unique(np.asarray(subset, dtype=np.int64))
        dist, gap = distance_table(space, subset, tol)
        mass = subset.size / space.cardinality
        cert = float(mass * np.mean(np.exp(dist * dist / kappa)))
        yield TalagrandRecord(sid, mass, cert, float(dist.max()), gap)


def random_subsets(size: int, count: int, seed: int, min_size: int = 1) -> list[np.ndarray]:
    """Seeded subsets of ``range(size)``: subset ``k`` keeps points whose uniform falls below its own level."""
    u = uniform_rows(seed, 0, count, size + 1, stream=1)
    out = []
    for row in u:
        level, marks = row[0], row[1:]
        pick = np.flatnonzero(marks < level)
        if pick.size < min_size:
            pick = np.sort(np.argsort(marks, kind="stable")[:min_size])
        out.append(pick)
    return out


@dataclass
class LemmaReport:
    passed: bool
    max_gamma_plus_sq: float
    max_jump: float
    worst_self_bound: float
    witnesses: dict


def dt_lemma_check(space: FiniteSpace, subset, tol: float = 1e-10, slack: float = 1e-8) -> LemmaReport:
    """Check ``Gamma+(f)^2 <= f`` and ``|f - f o tau| <= 1`` for ``f = d_T^2/16`` (``/32`` on slices),
    together with ``Gamma+(d_T)^2 <= 4`` (``<= 8`` on slices)."""
    _space_check(space)
    dist, _ = distance_table(space, subset, tol)
    f = dist * dist / LEMMA_SCALE[space.kind]
    gp_f = exchange_sq(space, f, plus=True)
    gp_d = exchange_sq(space, dist, plus=True)
    jumps = np.abs(f[:, None] - f[space.swap_table])
    self_excess = gp_f - f
    cap = GAMMA_PLUS_CAP[space.kind]
    ok = (self_excess.max() <= slack and jumps.max() <= 1.0 + slack and gp_d.max() <= cap + slack)
    witnesses = {
        "self_bound": space.to_json_point(int(np.argmax(self_excess))),
        "jump": space.to_json_point(int(np.argmax(jumps.max(axis=1)))),
        "gamma_plus": space.to_json_point(int(np.argmax(gp_d))),
    }
    return LemmaReport(bool(ok), float(gp_d.max()), float(jumps.max()), float(self_excess.max()), witnesses)


def exact_dt_tail(space: FiniteSpace, subset, grid, tol: float = 1e-10) -> np.ndarray:
    """``P(d_T(., A) >= t)`` under the uniform law for each ``t`` in ``grid``."""
    dist, _ = distance_table(space, subset, tol)
    grid = np.asarray(grid, dtype=float)
    return np.mean(dist[None, :] >= grid[:, None] - 1e-12, axis=1)
