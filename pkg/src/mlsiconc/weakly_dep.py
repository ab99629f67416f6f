"""Second-order tail bounds on small product spaces, checked against exact tails."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from mlsiconc.bounds import BoundSpec, Variant
from mlsiconc.diff_ops import apply_operator, max_hessian_norm, op_norm
from mlsiconc.finite_space import PRODUCT, DomainError, ProbabilityMeasure


@dataclass
class QuadFormFamily:
    matrices: np.ndarray  # (m, n, n)

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or len(mats) == 0:
            raise DomainError("need a nonempty list of square matrices")
        if not np.allclose(mats, np.swapaxes(mats, 1, 2), rtol=0, atol=1e-12):
            raise DomainError("matrices must be symmetric")
        if np.any(np.abs(np.diagonal(mats, axis1=1, axis2=2)) > 0):
            raise DomainError("matrices must have zero diagonal")
        self.matrices = mats

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def sigma(self) -> float:
        """``max_A |A|_op``."""
        return float(np.max(op_norm(self.matrices)))

    def h(self, x) -> np.ndarray:
        """``max_A <x, A x>``, batched over rows of ``x``."""
        x = np.asarray(x, dtype=float)
        return np.max(np.einsum("...i,aij,...j->...a", x, self.matrices, x), axis=-1)

    def f(self, x) -> np.ndarray:
        """``max_A |A x|``."""
        x = np.asarray(x, dtype=float)
        ax = np.einsum("aij,...j->...ai", self.matrices, x)
        return np.max(np.linalg.norm(ax, axis=-1), axis=-1)

    @classmethod
    def from_json(cls, text: str) -> QuadFormFamily:
        return cls(json.loads(text)["matrices"])

    def to_json(self) -> str:
        return json.dumps({"matrices": self.matrices.tolist()})


def _product(measure: ProbabilityMeasure) -> None:
    if measure.space.kind != PRODUCT:
        raise DomainError("second-order bounds need a product space")


def prop14_quantities(measure: ProbabilityMeasure, f, flavor: str) -> tuple[float, float]:
    """``(E|d f|, sup |d+ |d f||)`` for flavor d, ``(E|h f|, sup |h2 f|_op)`` for flavor h."""
    _product(measure)
    f = measure.check(f)
    if flavor == "d":
        grad = apply_operator("d", measure, f)
        b = float(np.max(apply_operator("d_plus", measure, grad)))
    elif flavor == "h":
        grad = apply_operator("h", measure, f)
        b = max_hessian_norm(measure, f) if measure.space.dim > 1 else 0.0
    else:
        raise DomainError(f"flavor must be 'd' or 'h', got {flavor!r}")
    return float(np.sum(measure.weights * grad)), b


def prop14_params(measure: ProbabilityMeasure, f, flavor: str, sigma2: float,
                  source: str = "caller") -> BoundSpec:
    """Two-sided second-order spec; ``sigma2`` is the mLSI constant and ``source`` its provenance."""
    e_g, b = prop14_quantities(measure, f, flavor)
    variant = Variant.WEAKLY_DEP_D if flavor == "d" else Variant.WEAKLY_DEP_H
    return BoundSpec(variant, E_g=e_g, b=b, sigma2=sigma2, note=f"sigma2 from {source}")


def prop15_quantities(family: QuadFormFamily, measure: ProbabilityMeasure) -> tuple[float, float]:
    """``(E f_A, Sigma)`` by enumeration."""
    _product(measure)
    coords = measure.space.coords()
    if coords.shape[1] != family.dim:
        raise DomainError("family and space dimensions differ")
    live = measure.weights > 0
    if np.any(np.abs(coords[live]) > 1):
        raise DomainError("measure must be supported in [-1, 1]^n")
    return float(np.sum(measure.weights * family.f(coords))), family.sigma


def prop15_params(family: QuadFormFamily, measure: ProbabilityMeasure, sigma2: float = 1.0,
                  source: str = "product measure") -> BoundSpec:
    e_f, sig = prop15_quantities(family, measure)
    return BoundSpec(Variant.HANSON_WRIGHT, E_f=e_f, Sigma=sig, sigma2=sigma2,
                     note=f"sigma2 from {source}")


def exact_tail(measure: ProbabilityMeasure, f, grid, two_sided: bool = False,
               atol: float = 1e-12) -> np.ndarray:
    """``P(f - E f >= t)`` (or ``P(|f - E f| >= t)``) for each grid point, by enumeration."""
    f = measure.check(f)
    w = measure.weights
    dev = f - np.sum(w * f)
    if two_sided:
        dev = np.abs(dev)
    grid = np.asarray(grid, dtype=float)
    hit = dev[None, :] >= grid[:, None] - atol * np.maximum(1.0, np.abs(grid[:, None]))
    return np.minimum(hit.astype(float) @ w, 1.0)
