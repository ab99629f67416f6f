"""Numerical checks of modified log-Sobolev inequalities.

A measure satisfies a ``Gamma``-mLSI(rho) when ``Ent(e^f) <= rho/2 E[Gamma(f)^2 e^f]``
for all f. The checks here evaluate the best constant per function,
``rho*(f) = 2 Ent(e^f) / E[Gamma(f)^2 e^f]``, over seeded families.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from mlsiconc.diff_ops import OperatorKind, apply_operator_sq
from mlsiconc.finite_space import (
    PRODUCT,
    SYMMETRIC,
    DomainError,
    GibbsSpec,
    ProbabilityMeasure,
    conditional_table,
    log_mean_exp,
    scaled_entropy_exp,
)
from mlsiconc.rng import uniform_rows

RATIO_RTOL = 1e-10


def mlsi_ratio(measure: ProbabilityMeasure, kind, f) -> float | np.ndarray:
    """``2 Ent(e^f) / E[Gamma(f)^2 e^f]``; 0 for constant f. Batched over leading axes."""
    f = measure.check(f)
    w = measure.weights
    top = np.max(f, axis=-1)
    ent = scaled_entropy_exp(w, f, top)
    energy = np.sum(w * apply_operator_sq(kind, measure, f) * np.exp(f - top[..., None]), axis=-1)
    const = top == np.min(f, axis=-1)
    ent = np.where(const, 0.0, ent)
    if np.any((energy <= 0) & (ent > 0)):
        raise AssertionError("zero energy with positive entropy")
    ratio = np.where(energy > 0, 2.0 * ent / np.where(energy > 0, energy, 1.0), 0.0)
    return float(ratio) if np.ndim(ratio) == 0 else ratio


@dataclass
class MlsiReport:
    operator: str
    rho: float
    count: int
    max_ratio: float
    argmax_seed: int
    argmax_label: str
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def random_family(space, count: int, seed: int, start: int = 0, low: float = -3.0,
                  high: float = 3.0) -> np.ndarray:
    """Functions ``start .. start+count-1`` of the seeded i.i.d.-uniform family."""
    u = uniform_rows(seed, start, count, space.cardinality)
    return low + (high - low) * u


def probe_family(space) -> tuple[np.ndarray, list[str]]:
    """Singleton spikes and +-linear statistics at scales 1 and 5."""
    n_pts = space.cardinality
    if space.kind == SYMMETRIC:
        linear = space.points.astype(float) @ np.arange(1, space.dim + 1)
    else:
        linear = space.coords() @ np.arange(1, space.dim + 1)
    funcs, labels = [], []
    for lam in (1.0, 5.0):
        for sign in (1.0, -1.0):
            spikes = sign * lam * np.eye(n_pts)
            funcs.append(spikes)
            labels += [f"spike[{p}]*{sign * lam:g}" for p in range(n_pts)]
            funcs.append((sign * lam * linear)[None, :])
            labels.append(f"linear*{sign * lam:g}")
    return np.vstack(funcs), labels


def certify_mlsi(measure: ProbabilityMeasure, kind, rho: float, count: int = 1000,
                 seed: int = 42, low: float = -3.0, high: float = 3.0, probes: bool = True,
                 chunk: int = 256) -> MlsiReport:
    if count < 1:
        raise DomainError("family count must be >= 1")
    kind = OperatorKind(kind)
    best, best_idx, best_label = -math.inf, -1, ""
    for start in range(0, count, chunk):
        size = min(chunk, count - start)
        ratios = np.atleast_1d(mlsi_ratio(measure, kind, random_family(measure.space, size, seed, start, low, high)))
        k = int(np.argmax(ratios))
        if ratios[k] > best:
            best, best_idx, best_label = float(ratios[k]), start + k, f"random[{start + k}]"
    if probes:
        funcs, labels = probe_family(measure.space)
        for start in range(0, len(funcs), chunk):
            ratios = np.atleast_1d(mlsi_ratio(measure, kind, funcs[start:start + chunk]))
            k = int(np.argmax(ratios))
            if ratios[k] > best:
                best, best_idx, best_label = float(ratios[k]), -1, f"probe:{labels[start + k]}"
    return MlsiReport(kind.value, float(rho), int(count), best, best_idx, best_label,
                      bool(best <= rho * (1.0 + RATIO_RTOL)))


def herbst_check(measure: ProbabilityMeasure, kind, f, alpha: float, rho: float):
    """Both sides of ``E e^{f - Ef} <= (E e^{alpha Gamma(f)^2})^{rho / (2 alpha - rho)}``."""
    if not alpha > rho / 2:
        raise DomainError("need alpha > rho / 2")
    f = measure.check(f)
    w = measure.weights
    centered = f - np.sum(w * f)
    log_lhs = float(log_mean_exp(w, centered))
    log_rhs = float(rho / (2 * alpha - rho) * log_mean_exp(w, alpha * apply_operator_sq(kind, measure, f)))
    lhs, rhs = math.exp(log_lhs), math.exp(log_rhs)
    return lhs, rhs, bool(log_lhs <= log_rhs + math.log1p(RATIO_RTOL))


def tensorization_constant(gibbs: GibbsSpec) -> float:
    """Holley-Stroock constant ``exp(2 osc(f))``."""
    return math.exp(2.0 * gibbs.oscillation)


def at_ratio(measure: ProbabilityMeasure, f) -> float | np.ndarray:
    """``Ent(e^f)`` over the integrated one-coordinate conditional entropies; 0 when both vanish."""
    space = measure.space
    if space.kind != PRODUCT:
        raise DomainError("approximate tensorization is defined on product spaces")
    f = measure.check(f)
    w = measure.weights
    top = np.max(f, axis=-1)
    ent = scaled_entropy_exp(w, f, top)
    local = np.zeros(np.shape(top))
    for i in range(space.dim):
        cond = conditional_table(measure, i)
        vals = f[..., space.fibers[i]]
        per_point = scaled_entropy_exp(cond, vals, top[..., None])
        local = local + np.sum(w * per_point, axis=-1)
    const = top == np.min(f, axis=-1)
    ratio = np.where((local > 0) & ~const, ent / np.where(local > 0, local, 1.0), 0.0)
    return float(ratio) if np.ndim(ratio) == 0 else ratio
