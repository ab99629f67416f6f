"""Finite probability spaces: symmetric group, hypercube slices, finite products.

Points are stored as an ``(N, m)`` integer array in lexicographic order of their
canonical representation (image array for permutations, 0/1 vector for slice
points, digit tuple for product points). Functions on a space are plain float
arrays of length ``N`` indexed by that order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from mlsiconc.config import DEFAULT

SYMMETRIC = "sn"
SLICE = "slice"
PRODUCT = "product"


class DomainError(ValueError):
    """Raised when an object is used on a space it does not belong to."""


class EnumerationTooLarge(DomainError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"enumeration too large: {size} points exceeds cap {cap}")
        self.size = size
        self.cap = cap


class UnsupportedSection(DomainError):
    """Conditioning on an event of zero mass."""


def _lex_permutations(n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    perms = np.zeros((1, 1), dtype=np.int8)
    for m in range(2, n + 1):
        blocks = []
        for first in range(m):
            rest = perms + (perms >= first)
            head = np.full((rest.shape[0], 1), first, dtype=np.int8)
            blocks.append(np.hstack([head, rest.astype(np.int8)]))
        perms = np.vstack(blocks)
    return perms


class FiniteSpace:
    """An enumerated finite point set with an index codec.

    Use :func:`build_space` rather than calling the constructor directly.
    """

    def __init__(self, kind: str, points: np.ndarray, radix: tuple[int, ...], params: dict,
                 coord_values: tuple[np.ndarray, ...] | None = None):
        self.kind = kind
        self.points = points
        self.points.setflags(write=False)
        self.radix = radix
        self.params = params
        self.coord_values = coord_values
        weights = np.ones(len(radix), dtype=np.int64)
        for i in range(len(radix) - 2, -1, -1):
            weights[i] = weights[i + 1] * radix[i + 1]
        self._place = weights
        self._codes = points.astype(np.int64) @ weights

    def __repr__(self) -> str:
        return f"FiniteSpace({self.kind}, {self.params})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, FiniteSpace) and self.kind == other.kind
                and self.params == other.params)

    def __hash__(self) -> int:
        return hash((self.kind, tuple(sorted((k, str(v)) for k, v in self.params.items()))))

    @property
    def cardinality(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        """Number of coordinates of a point."""
        return self.points.shape[1]

    def index_of(self, pts) -> np.ndarray | int:
        pts = np.asarray(pts)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise DomainError(f"point has {pts.shape[1]} coordinates, expected {self.dim}")
        codes = pts.astype(np.int64) @ self._place
        idx = np.searchsorted(self._codes, codes)
        idx = np.minimum(idx, self.cardinality - 1)
        if not np.array_equal(self._codes[idx], codes):
            raise DomainError("point not in space")
        return int(idx[0]) if single else idx

    def point(self, index: int) -> np.ndarray:
        if not 0 <= index < self.cardinality:
            raise DomainError(f"index {index} out of range")
        return self.points[index]

    def check_function(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[-1] != self.cardinality:
            raise DomainError(f"function has {f.shape[-1]} values, space has {self.cardinality} points")
        if not np.all(np.isfinite(f)):
            raise DomainError("function values must be finite")
        return f

    def coords(self) -> np.ndarray:
        """Real coordinates of every point (product spaces map digits through ``coord_values``)."""
        if self.coord_values is None:
            return self.points.astype(float)
        out = np.empty(self.points.shape, dtype=float)
        for i, vals in enumerate(self.coord_values):
            out[:, i] = vals[self.points[:, i]]
        return out

    # -- serialization -----------------------------------------------------
    def to_json_point(self, index: int) -> list[int]:
        p = self.point(index)
        if self.kind == SYMMETRIC:
            return [int(v) + 1 for v in p]
        return [int(v) for v in p]

    def from_json_point(self, data) -> int:
        arr = np.asarray(data, dtype=np.int64)
        if self.kind == SYMMETRIC:
            arr = arr - 1
        return self.index_of(arr)

    # -- neighbourhood tables ----------------------------------------------
    @cached_property
    def pairs(self) -> np.ndarray:
        """All coordinate pairs ``(i, j)`` with ``i < j``."""
        m = self.dim
        return np.array([(i, j) for i in range(m) for j in range(i + 1, m)], dtype=np.int64).reshape(-1, 2)

    @cached_property
    def swap_table(self) -> np.ndarray:
        """``swap_table[p, t]`` is the index of point ``p`` with coordinates ``pairs[t]`` exchanged.

        On ``S_n`` this is right multiplication by the transposition; on a slice it
        is the coordinate switch.
        """
        if self.kind not in (SYMMETRIC, SLICE):
            raise DomainError("exchange neighbours exist only on S_n and slices")
        table = np.empty((self.cardinality, len(self.pairs)), dtype=np.int64)
        for t, (i, j) in enumerate(self.pairs):
            swapped = self.points.copy()
            swapped[:, [i, j]] = swapped[:, [j, i]]
            table[:, t] = self.index_of(swapped)
        return table

    @cached_property
    def fibers(self) -> tuple[np.ndarray, ...]:
        """``fibers[i][p, a]`` is the index of point ``p`` with coordinate ``i`` set to ``a``."""
        if self.kind != PRODUCT:
            raise DomainError("coordinate fibres exist only on product spaces")
        base = np.arange(self.cardinality, dtype=np.int64)
        out = []
        for i, k in enumerate(self.radix):
            digit = self.points[:, i].astype(np.int64)
            shift = (np.arange(k, dtype=np.int64)[None, :] - digit[:, None]) * self._place[i]
            out.append(base[:, None] + shift)
        return tuple(out)


def build_space(kind: str, n: int | None = None, r: int | None = None, sizes=None,
                values=None, cap: int | None = None) -> FiniteSpace:
    """Enumerate ``SymmetricGroup(n)``, ``Slice(n, r)`` or ``Product(sizes)``.

    ``values`` (product only) maps digits to reals, either one sequence shared by all
    coordinates or one per coordinate.
    """
    cap = DEFAULT.enumeration_cap if cap is None else cap
    if kind == SYMMETRIC:
        if n is None or n < 1:
            raise DomainError("SymmetricGroup needs n >= 1")
        size = math.factorial(n)
        if size > cap:
            raise EnumerationTooLarge(size, cap)
        return FiniteSpace(SYMMETRIC, _lex_permutations(n), (n,) * n, {"n": n})
    if kind == SLICE:
        if n is None or r is None or n < 1 or not 0 <= r <= n:
            raise DomainError("invalid parameters: Slice needs 0 <= r <= n")
        size = math.comb(n, r)
        if size > cap:
            raise EnumerationTooLarge(size, cap)
        pts = np.zeros((size, n), dtype=np.int8)
        for row, support in enumerate(itertools.combinations(range(n), r)):
            pts[row, list(support)] = 1
        order = np.lexsort(pts.T[::-1])
        return FiniteSpace(SLICE, pts[order], (2,) * n, {"n": n, "r": r})
    if kind == PRODUCT:
        if sizes is None or len(sizes) == 0 or any(int(k) < 1 for k in sizes):
            raise DomainError("Product needs positive alphabet sizes")
        sizes = tuple(int(k) for k in sizes)
        size = math.prod(sizes)
        if size > cap:
            raise EnumerationTooLarge(size, cap)
        grids = np.indices(sizes).reshape(len(sizes), -1).T
        dtype = np.int8 if max(sizes) < 127 else np.int32
        coord_values = None
        if values is not None:
            if np.ndim(values[0]) == 0:
                values = [values] * len(sizes)
            if len(values) != len(sizes):
                raise DomainError("one value list per coordinate expected")
            coord_values = tuple(np.asarray(v, dtype=float) for v in values)
            for v, k in zip(coord_values, sizes):
                if v.shape != (k,):
                    raise DomainError("value list length must match alphabet size")
        return FiniteSpace(PRODUCT, grids.astype(dtype), sizes, {"sizes": sizes}, coord_values)
    raise DomainError(f"unknown space kind {kind!r}")


def hypercube(n: int, values=(0, 1), cap: int | None = None) -> FiniteSpace:
    return build_space(PRODUCT, sizes=[len(values)] * n, values=list(values), cap=cap)


@dataclass(frozen=True, eq=False)
class ProbabilityMeasure:
    space: FiniteSpace
    weights: np.ndarray
    marginals: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.space.cardinality,):
            raise DomainError("weight vector does not match the space")
        if np.any(w < 0) or abs(np.sum(w) - 1.0) > DEFAULT.norm_tol:
            raise DomainError("weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, space: FiniteSpace) -> ProbabilityMeasure:
        marg = None
        if space.kind == PRODUCT:
            marg = tuple(np.full(k, 1.0 / k) for k in space.radix)
        return cls(space, np.full(space.cardinality, 1.0 / space.cardinality), marg)

    @classmethod
    def product(cls, space: FiniteSpace, marginals) -> ProbabilityMeasure:
        if space.kind != PRODUCT:
            raise DomainError("product measures live on product spaces")
        marginals = tuple(np.asarray(m, dtype=float) for m in marginals)
        if len(marginals) != space.dim:
            raise DomainError("one marginal per coordinate expected")
        w = np.ones(space.cardinality)
        for i, m in enumerate(marginals):
            if m.shape != (space.radix[i],) or np.any(m < 0) or abs(m.sum() - 1) > DEFAULT.norm_tol:
                raise DomainError(f"marginal {i} is not a distribution on {space.radix[i]} letters")
            w = w * m[space.points[:, i]]
        return cls(space, w / w.sum(), marginals)

    @property
    def is_product(self) -> bool:
        return self.marginals is not None

    def check(self, f) -> np.ndarray:
        return self.space.check_function(f)


# -- exact functionals -----------------------------------------------------

def mean(measure: ProbabilityMeasure, f) -> float:
    f = measure.check(f)
    return float(np.sum(measure.weights * f))


def covariance(measure: ProbabilityMeasure, f, g) -> float:
    f = measure.check(f)
    g = measure.check(g)
    w = measure.weights
    return float(np.sum(w * (f - np.sum(w * f)) * (g - np.sum(w * g))))


def variance(measure: ProbabilityMeasure, f) -> float:
    return covariance(measure, f, f)


def functional(measure: ProbabilityMeasure, f, g=None, kind: str = "mean") -> float:
    if kind == "mean":
        return mean(measure, f)
    if kind == "variance":
        return variance(measure, f)
    if kind == "covariance":
        if g is None:
            raise DomainError("covariance needs a second function")
        return covariance(measure, f, g)
    raise DomainError(f"unknown functional {kind!r}")


def _phi(y: np.ndarray) -> np.ndarray:
    """``1 + (y - 1) e^y``, accurate near zero."""
    y = np.asarray(y, dtype=float)
    out = 1.0 + (y - 1.0) * np.exp(y)
    small = np.abs(y) < 0.05
    if np.any(small):
        ys = y[small]
        term = ys * ys / 2.0
        acc = term.copy()
        # k-th term of the series is (k - 1) y^k / k!
        for k in range(3, 14):
            term = term * ys / k
            acc += term * (k - 1)
        out[small] = acc
    return out


def log_mean_exp(weights: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``log E_w e^f`` along the last axis."""
    m = np.max(f, axis=-1, keepdims=True)
    s = np.sum(weights * np.exp(f - m), axis=-1)
    return np.log(s) + m[..., 0]


def scaled_entropy_exp(weights: np.ndarray, f: np.ndarray, shift) -> np.ndarray:
    """``Ent_w(e^{f - shift})`` along the last axis.

    Written as ``E_w[e^{f - shift}] * sum_x w(x) phi(f(x) - log E_w e^f)``; every term of the
    sum is nonnegative, so small entropies keep their relative accuracy.
    """
    lme = log_mean_exp(weights, f)
    y = f - lme[..., None]
    return np.exp(lme - shift) * np.sum(weights * _phi(y), axis=-1)


def entropy_exp(measure: ProbabilityMeasure, f) -> float:
    """``Ent_mu(e^f) = E[f e^f] - E[e^f] log E[e^f]``."""
    f = measure.check(f)
    return float(scaled_entropy_exp(measure.weights, f, 0.0))


# -- Gibbs perturbation and conditionals -------------------------------------

@dataclass(frozen=True, eq=False)
class GibbsSpec:
    base: ProbabilityMeasure
    potential: np.ndarray
    normalizer: float
    oscillation: float


def gibbs_perturb(base: ProbabilityMeasure, potential) -> tuple[ProbabilityMeasure, GibbsSpec]:
    """The measure ``Z^{-1} e^f d(base)`` for a product measure ``base``."""
    if not base.is_product:
        raise DomainError("Gibbs perturbation needs a product base measure")
    f = base.check(potential)
    top = float(np.max(f))
    tilted = base.weights * np.exp(f - top)
    z_shifted = float(np.sum(tilted))
    measure = ProbabilityMeasure(base.space, tilted / z_shifted)
    spec = GibbsSpec(base, f, z_shifted * math.exp(top), float(top - np.min(f)))
    return measure, spec


def conditional(measure: ProbabilityMeasure, i: int, point) -> np.ndarray:
    """Law of coordinate ``i`` given the other coordinates of ``point`` (index or digits)."""
    space = measure.space
    if space.kind != PRODUCT:
        raise DomainError("conditionals are defined on product spaces")
    if not 0 <= i < space.dim:
        raise DomainError(f"coordinate {i} out of range")
    p = point if np.ndim(point) == 0 else space.index_of(point)
    fiber = space.fibers[i][int(p)]
    mass = measure.weights[fiber]
    total = float(np.sum(mass))
    if total <= 0.0:
        raise UnsupportedSection(f"conditioning event for coordinate {i} has zero mass")
    return mass / total


def conditional_table(measure: ProbabilityMeasure, i: int) -> np.ndarray:
    """Conditional laws of coordinate ``i`` for every point, shape ``(N, k_i)``."""
    mass = measure.weights[measure.space.fibers[i]]
    total = mass.sum(axis=1, keepdims=True)
    if np.any(total <= 0.0):
        raise UnsupportedSection(f"some section along coordinate {i} has zero mass")
    return mass / total
