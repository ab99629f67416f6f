"""Difference operators on finite spaces.

Exchange operators (``gamma``, ``gamma_plus``) live on ``S_n`` and slices; the
conditional ``L^2`` operators (``d``, ``d_plus``) and the sup operators (``h``,
``h_plus``) live on product spaces. Every operator returns the pointwise value
``Gamma(f)`` as a float array, not its square.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from mlsiconc.config import DEFAULT
from mlsiconc.finite_space import (
    PRODUCT,
    SLICE,
    SYMMETRIC,
    DomainError,
    ProbabilityMeasure,
    conditional_table,
)


class OperatorKind(str, enum.Enum):
    GAMMA = "gamma"
    GAMMA_PLUS = "gamma_plus"
    D = "d"
    D_PLUS = "d_plus"
    H = "h"
    H_PLUS = "h_plus"

    @property
    def is_plus(self) -> bool:
        return self in (OperatorKind.GAMMA_PLUS, OperatorKind.D_PLUS, OperatorKind.H_PLUS)

    @property
    def is_exchange(self) -> bool:
        return self in (OperatorKind.GAMMA, OperatorKind.GAMMA_PLUS)


def _kind(kind) -> OperatorKind:
    try:
        return OperatorKind(kind)
    except ValueError:
        raise DomainError(f"unknown operator {kind!r}") from None


def _check_space(kind: OperatorKind, measure: ProbabilityMeasure) -> None:
    sk = measure.space.kind
    if kind.is_exchange and sk not in (SYMMETRIC, SLICE):
        raise DomainError(f"operator {kind.value} needs S_n or a slice, got {sk}")
    if not kind.is_exchange and sk != PRODUCT:
        raise DomainError(f"operator {kind.value} needs a product space, got {sk}")


def exchange_sq(space, f: np.ndarray, plus: bool) -> np.ndarray:
    """Squared exchange operator; ``f`` may carry leading batch axes.

    On ``S_n`` the ordered double sum over ``(i, j)`` with normalisation ``1/n`` equals
    ``2/n`` times the sum over ``i < j``; slices use ``2/n`` over ``i < j`` directly.
    """
    n = space.dim
    diff = f[..., :, None] - f[..., space.swap_table]
    if plus:
        diff = np.maximum(diff, 0.0)
    return (2.0 / n) * np.sum(diff * diff, axis=-1)


def _coordinate_support(measure: ProbabilityMeasure) -> list[np.ndarray]:
    """Digits of positive marginal mass, per coordinate."""
    space = measure.space
    out = []
    for i, k in enumerate(space.radix):
        marg = np.bincount(space.points[:, i].astype(np.int64), weights=measure.weights, minlength=k)
        out.append(np.flatnonzero(marg > 0))
    return out


def product_sq(kind: OperatorKind, measure: ProbabilityMeasure, f: np.ndarray) -> np.ndarray:
    space = measure.space
    support = _coordinate_support(measure)
    total = np.zeros(f.shape)
    for i in range(space.dim):
        fib = space.fibers[i]
        vals = f[..., fib]
        diff = f[..., :, None] - vals
        if kind in (OperatorKind.D, OperatorKind.D_PLUS):
            cond = conditional_table(measure, i)
            if kind is OperatorKind.D_PLUS:
                diff = np.maximum(diff, 0.0)
            total += np.sum(cond * diff * diff, axis=-1)
        else:
            sv = vals[..., support[i]]
            if kind is OperatorKind.H:
                spread = np.max(sv, axis=-1) - np.min(sv, axis=-1)
            else:
                spread = np.maximum(f - np.min(sv, axis=-1), 0.0)
            total += spread * spread
    return total


def apply_operator_sq(kind, measure: ProbabilityMeasure, f) -> np.ndarray:
    """``Gamma(f)^2`` pointwise. Accepts a batch of functions along leading axes."""
    kind = _kind(kind)
    _check_space(kind, measure)
    f = measure.check(f)
    if kind.is_exchange:
        return exchange_sq(measure.space, f, kind.is_plus)
    return product_sq(kind, measure, f)


def apply_operator(kind, measure: ProbabilityMeasure, f) -> np.ndarray:
    return np.sqrt(apply_operator_sq(kind, measure, f))


def iterated_plus_of(kind_outer, measure: ProbabilityMeasure, g) -> np.ndarray:
    """Outer operator applied to an already-computed inner result ``g``, e.g. ``|d+ |d f||``."""
    return apply_operator(kind_outer, measure, g)


# -- second order ------------------------------------------------------------

@dataclass(frozen=True)
class HessianH2:
    matrix: np.ndarray
    op_norm: float


def second_differences(measure: ProbabilityMeasure, f) -> np.ndarray:
    """``h_ij f(x)`` for every point, shape ``(N, m, m)`` with zero diagonal.

    ``h_ij f(x) = sup |f(x) - f(x_i') - f(x_j') + f(x_i', x_j')|`` where the sup runs
    over ``x_i, x_i', x_j, x_j'`` in the coordinate supports and the remaining
    coordinates are those of ``x``.
    """
    space = measure.space
    if space.kind != PRODUCT:
        raise DomainError("second differences need a product space")
    f = measure.check(f)
    support = _coordinate_support(measure)
    m = space.dim
    out = np.zeros((space.cardinality, m, m))
    place = space._place
    points = space.points.astype(np.int64)
    for i in range(m):
        si = support[i]
        for j in range(i + 1, m):
            sj = support[j]
            base = (np.arange(space.cardinality)
                    - points[:, i] * place[i] - points[:, j] * place[j])
            grid = (base[:, None, None] + si[None, :, None] * place[i]
                    + sj[None, None, :] * place[j])
            vals = f[grid]
            # D[a, a', b, b'] = F[a, b] - F[a', b] - F[a, b'] + F[a', b']
            col = vals[:, :, None, :] - vals[:, None, :, :]
            dd = col[:, :, :, :, None] - col[:, :, :, None, :]
            h = np.max(np.abs(dd.reshape(space.cardinality, -1)), axis=1)
            out[:, i, j] = h
            out[:, j, i] = h
    return out


def op_norm(a: np.ndarray, rtol: float | None = None, max_iter: int = 20000) -> np.ndarray:
    """Operator norm of symmetric matrices (batched over leading axes) by power iteration on ``A^2``."""
    rtol = DEFAULT.power_iter_rtol if rtol is None else rtol
    a = np.asarray(a, dtype=float)
    single = a.ndim == 2
    a = a.reshape(-1, a.shape[-2], a.shape[-1])
    m = a.shape[-1]
    if m == 0:
        return 0.0 if single else np.zeros(a.shape[0])
    a2 = a @ a
    v = np.ones((a.shape[0], m)) + np.linspace(0.0, 0.5, m)[None, :]
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    lam = np.zeros(a.shape[0])
    active = np.ones(a.shape[0], dtype=bool)
    for _ in range(max_iter):
        w = np.einsum("bij,bj->bi", a2[active], v[active])
        new = np.einsum("bi,bi->b", v[active], w)
        nrm = np.linalg.norm(w, axis=1)
        zero = nrm == 0
        nrm[zero] = 1.0
        v[active] = w / nrm[:, None]
        old = lam[active]
        lam[active] = new
        done = np.abs(new - old) <= rtol * np.abs(new) * 1e-2
        done |= zero
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            break
    else:
        # slow spectral gap; finish with a dense solver
        rest = np.flatnonzero(active)
        lam[rest] = np.max(np.abs(np.linalg.eigvalsh(a[rest])), axis=1) ** 2
    norms = np.sqrt(np.maximum(lam, 0.0))
    return float(norms[0]) if single else norms


def hessian_h2(measure: ProbabilityMeasure, f, point: int | None = None):
    """The ``h^(2)`` matrix and its operator norm, at one point or at every point."""
    mats = second_differences(measure, f)
    if point is not None:
        return HessianH2(mats[point], op_norm(mats[point]))
    norms = op_norm(mats)
    return [HessianH2(mats[p], float(norms[p])) for p in range(len(mats))]


def max_hessian_norm(measure: ProbabilityMeasure, f) -> float:
    return float(np.max(op_norm(second_differences(measure, f))))
