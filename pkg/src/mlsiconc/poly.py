"""Multilinear polynomials ``f(x) = sum_e w_e prod_{v in e} x_v`` on weighted hypergraphs."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from mlsiconc.bounds import BoundSpec, Variant
from mlsiconc.config import DEFAULT
from mlsiconc.diff_ops import apply_operator_sq
from mlsiconc.finite_space import DomainError, EnumerationTooLarge, ProbabilityMeasure, hypercube

TRIANGLE = ((0, 1), (1, 2), (0, 2))


@dataclass
class Hypergraph:
    n: int
    edges: list[tuple[int, ...]]
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.edges = [tuple(sorted(int(v) for v in e)) for e in self.edges]
        if self.weights is None:
            self.weights = np.ones(len(self.edges))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.weights) != len(self.edges):
            raise DomainError("one weight per edge")
        for e in self.edges:
            if len(set(e)) != len(e):
                raise DomainError(f"repeated vertex in edge {e}")
            if e and (e[0] < 0 or e[-1] >= self.n):
                raise DomainError(f"edge {e} outside 0..{self.n - 1}")
        self._groups = None

    @property
    def k(self) -> int:
        return max((len(e) for e in self.edges), default=0)

    @property
    def nonneg_weights(self) -> bool:
        return bool(np.all(self.weights >= 0))

    def groups(self):
        """Edges bucketed by size as ``(size, vertex index array, weights)``."""
        if self._groups is None:
            out = []
            sizes = np.array([len(e) for e in self.edges], dtype=np.int64)
            for s in sorted(set(sizes.tolist())):
                pick = np.flatnonzero(sizes == s)
                idx = np.array([self.edges[i] for i in pick], dtype=np.int64).reshape(len(pick), s)
                out.append((s, idx, self.weights[pick]))
            self._groups = out
        return self._groups

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "edges": [{"v": [v + 1 for v in e], "w": float(w)}
                                                  for e, w in zip(self.edges, self.weights)]})

    @classmethod
    def from_json(cls, text: str) -> Hypergraph:
        data = json.loads(text)
        edges = [[v - 1 for v in e["v"]] for e in data["edges"]]
        return cls(int(data["n"]), edges, [float(e.get("w", 1.0)) for e in data["edges"]])


def _check_x(h: Hypergraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != h.n:
        raise DomainError(f"expected {h.n} coordinates, got {x.shape[-1]}")
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("coordinates must lie in [0, 1]")
    return x


def eval_poly(h: Hypergraph, x) -> np.ndarray | float:
    """``f(x)``; ``x`` may carry leading batch axes."""
    x = _check_x(h, x)
    out = np.zeros(x.shape[:-1])
    for s, idx, w in h.groups():
        if s == 0:
            out = out + w.sum()
        else:
            out = out + np.prod(x[..., idx], axis=-1) @ w
    return float(out) if out.ndim == 0 else out


def partials(h: Hypergraph, x) -> np.ndarray:
    """Gradient ``(d_v f(x))_v``, shape ``x.shape``."""
    x = _check_x(h, x)
    out = np.zeros(x.shape)
    for s, idx, w in h.groups():
        if s == 0:
            continue
        vals = x[..., idx]
        for j in range(s):
            others = np.prod(np.delete(vals, j, axis=-1), axis=-1) * w
            incidence = np.zeros((len(idx), h.n))
            np.add.at(incidence, (np.arange(len(idx)), idx[:, j]), 1.0)
            out = out + others @ incidence
    return out


def ml(h: Hypergraph) -> float:
    """``sup_v sup_x d_v f(x)``, attained at the all-ones point for nonnegative weights."""
    if not h.nonneg_weights:
        raise DomainError("ML closed form requires nonnegative weights")
    load = np.zeros(h.n)
    for e, w in zip(h.edges, h.weights):
        load[list(e)] += w
    return float(load.max()) if h.n else 0.0


def product_mean(h: Hypergraph, means) -> float:
    """``E f`` for independent coordinates with the given means."""
    means = _check_x(h, means)
    return float(eval_poly(h, means))


# -- self bounding -----------------------------------------------------------

@dataclass
class SelfBoundReport:
    passed: bool
    worst_point: list | None
    excess: float


def self_bounding_check(measure: ProbabilityMeasure, f, kind, a: float, b: float,
                        tol: float = 1e-10) -> SelfBoundReport:
    """Pointwise ``Gamma(f)^2 <= a f + b``."""
    f = measure.check(f)
    excess = apply_operator_sq(kind, measure, f) - (a * f + b)
    k = int(np.argmax(excess))
    worst = float(excess[k])
    ok = worst <= tol * max(1.0, abs(a * f[k] + b))
    return SelfBoundReport(bool(ok), None if ok else measure.space.to_json_point(k), worst)


@dataclass
class WeakSelfBoundReport:
    passed: bool
    lhs: np.ndarray
    middle: np.ndarray
    rhs: np.ndarray


def weak_self_bounding_check(h: Hypergraph, points=None, tol: float = 1e-10) -> WeakSelfBoundReport:
    """``sum_v (f - f_v)^2 <= ML sum_v x_v d_v f <= k ML f`` where ``f_v`` zeroes coordinate v.

    Defaults to every vertex of ``{0,1}^V``.
    """
    if points is None:
        points = hypercube(h.n).coords()
    x = _check_x(h, points)
    f = eval_poly(h, x)
    lhs = np.zeros(x.shape[:-1])
    for v in range(h.n):
        xv = x.copy()
        xv[..., v] = 0.0
        lhs = lhs + (f - eval_poly(h, xv)) ** 2
    m = ml(h)
    middle = m * np.sum(x * partials(h, x), axis=-1)
    rhs = h.k * m * f
    scale = np.maximum(1.0, np.abs(rhs))
    ok = np.all(lhs <= middle + tol * scale) and np.all(middle <= rhs + tol * scale)
    return WeakSelfBoundReport(bool(ok), lhs, middle, rhs)


def poly11_specs(h: Hypergraph, mean: float) -> tuple[BoundSpec, BoundSpec]:
    """Upper and lower tail specs for a nonnegative-weight polynomial with known mean."""
    m = ml(h)
    return (BoundSpec(Variant.POLY11_UPPER, k=h.k, ML=m, E_f=mean),
            BoundSpec(Variant.POLY11_LOWER, k=h.k, ML=m, E_f=mean))


# -- d-runs ------------------------------------------------------------------

def _check_runs(n: int, d: int) -> None:
    if not n > d >= 1:
        raise DomainError("d-runs need n > d >= 1")


def druns(x, d: int) -> np.ndarray | float:
    """``sum_i x_i x_{i+1} ... x_{i+d-1}`` with cyclic indices; batched over leading axes."""
    x = np.asarray(x, dtype=float)
    _check_runs(x.shape[-1], d)
    prod = x.copy()
    for j in range(1, d):
        prod *= np.roll(x, -j, axis=-1)
    out = prod.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def druns_hypergraph(n: int, d: int) -> Hypergraph:
    _check_runs(n, d)
    return Hypergraph(n, [[(i + j) % n for j in range(d)] for i in range(n)])


def druns_mean(n: int, d: int, eta: float) -> float:
    _check_runs(n, d)
    return n * eta ** d


def druns_bound_params(n: int, d: int, eta: float) -> BoundSpec:
    """Spec for the tail of ``(f_d - E f_d) / sqrt(n eta^d)``."""
    _check_runs(n, d)
    return BoundSpec(Variant.POLY13_DRUNS, n=n, d=d, eta=eta)


# -- subgraph counts ---------------------------------------------------------

def edge_index(n: int) -> dict[tuple[int, int], int]:
    """Edges of ``K_n`` in lexicographic order of ``(i, j)``, ``i < j``."""
    return {e: k for k, e in enumerate(itertools.combinations(range(n), 2))}


def subgraph_hypergraph(n: int, pattern=TRIANGLE, cap: int | None = None) -> Hypergraph:
    """One hyperedge per distinct edge set of a copy of ``pattern`` in ``K_n``."""
    pattern = [tuple(sorted(e)) for e in pattern]
    verts = sorted({v for e in pattern for v in e})
    relabel = {v: i for i, v in enumerate(verts)}
    pattern = [(relabel[a], relabel[b]) for a, b in pattern]
    cap = DEFAULT.enumeration_cap if cap is None else cap
    if math.perm(n, len(verts)) > cap:
        raise EnumerationTooLarge(math.perm(n, len(verts)), cap)
    index = edge_index(n)
    copies = set()
    for image in itertools.permutations(range(n), len(verts)):
        copies.add(frozenset(index[tuple(sorted((image[a], image[b])))] for a, b in pattern))
    edges = sorted(tuple(sorted(c)) for c in copies)
    return Hypergraph(len(index), edges)


def subgraph_count(x, n: int, pattern=TRIANGLE) -> np.ndarray | float:
    return eval_poly(subgraph_hypergraph(n, pattern), x)


def subgraph_ml_bound(n: int, pattern=TRIANGLE) -> float:
    """``n^(Delta - 1)`` with ``Delta`` the maximum degree of the pattern."""
    deg = {}
    for a, b in pattern:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return float(n ** (max(deg.values()) - 1))


# -- suprema of linear forms -------------------------------------------------

def sup_linear(family, x) -> np.ndarray | float:
    """``max_a <a, x>`` over a finite family (rows) with entries in ``[0, 1]``."""
    family = np.atleast_2d(np.asarray(family, dtype=float))
    if np.any(family < 0) or np.any(family > 1):
        raise DomainError("family entries must lie in [0, 1]")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("coordinates must lie in [0, 1]")
    out = np.max(x @ family.T, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def sup_linear_spec(family, mean: float) -> BoundSpec:
    family = np.atleast_2d(np.asarray(family, dtype=float))
    return BoundSpec(Variant.POLY12_SUP, a=float(np.max(np.abs(family))), E_f=mean)


def lp_norm(x, p: float) -> np.ndarray | float:
    """``|x|_p``, the supremum over the nonnegative unit ball of the dual norm."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("coordinates must lie in [0, 1]")
    if not p >= 1:
        raise DomainError("p must be >= 1")
    out = np.max(x, axis=-1) if math.isinf(p) else np.sum(x ** p, axis=-1) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def lp_norm_spec(mean: float) -> BoundSpec:
    return BoundSpec(Variant.POLY12_SUP, a=1.0, E_f=mean)
