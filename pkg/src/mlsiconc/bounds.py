"""Closed-form tail bounds and the Psi_2 norm of finite distributions.

:func:`tail_bound` returns the raw right-hand side of the selected inequality,
which may exceed 1; :func:`curve` caps it. Constants that sit in the denominator of
a Gaussian term must be positive. Constants under a linear term (``K``, ``b``,
``Sigma``, ``c' * K_max``) may be 0, in which case that term is infinite and only
the Gaussian level remains.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np


class BoundError(ValueError):
    pass


class RangeError(BoundError):
    """``t`` outside the range on which a bound is stated."""


class Variant(str, enum.Enum):
    THM1_DEV = "thm1_dev"
    THM1_CONC = "thm1_conc"
    COR2 = "cor2"
    PROP3 = "prop3"
    COR4_BERNSTEIN = "cor4_bernstein"
    SELF_BOUND_UPPER = "self_bound_upper"
    SELF_BOUND_LOWER = "self_bound_lower"
    SUB_GAUSSIAN_FIRST_ORDER = "sub_gaussian_first_order"
    LOCALLY_LIPSCHITZ = "locally_lipschitz"
    TALAGRAND_TAIL_SN = "talagrand_tail_sn"
    WEAKLY_DEP_D = "weakly_dep_d"
    WEAKLY_DEP_H = "weakly_dep_h"
    HANSON_WRIGHT = "hanson_wright"
    BERNSTEIN_PSI2 = "bernstein_psi2"
    POLY11_UPPER = "poly11_upper"
    POLY11_LOWER = "poly11_lower"
    POLY12_SUP = "poly12_sup"
    POLY13_DRUNS = "poly13_druns"


# parameters each variant reads; "gauss" ones must be > 0, "linear" ones >= 0
_REQUIRED: dict[Variant, tuple[tuple[str, ...], tuple[str, ...]]] = {
    Variant.THM1_DEV: (("rho", "c"), ("K",)),
    Variant.THM1_CONC: (("rho", "c"), ("K",)),
    Variant.COR2: (("rho", "E_g"), ("b",)),
    Variant.PROP3: (("rho", "E_g2"), ("b",)),
    Variant.COR4_BERNSTEIN: (("rho", "c"), ("K",)),
    Variant.SELF_BOUND_UPPER: (("rho",), ("a", "b", "E_f")),
    Variant.SELF_BOUND_LOWER: (("rho",), ("a", "b", "E_f")),
    Variant.SUB_GAUSSIAN_FIRST_ORDER: (("rho", "c"), ()),
    Variant.LOCALLY_LIPSCHITZ: (("obs_diam",), ()),
    Variant.TALAGRAND_TAIL_SN: ((), ()),
    Variant.WEAKLY_DEP_D: (("sigma2", "E_g"), ("b",)),
    Variant.WEAKLY_DEP_H: (("sigma2", "E_g"), ("b",)),
    Variant.HANSON_WRIGHT: (("sigma2", "E_f"), ("Sigma",)),
    Variant.BERNSTEIN_PSI2: (("var",), ("K_max", "c_prime")),
    Variant.POLY11_UPPER: (("k", "ML"), ("E_f",)),
    Variant.POLY11_LOWER: (("k", "ML"), ("E_f",)),
    Variant.POLY12_SUP: (("a",), ("E_f",)),
    Variant.POLY13_DRUNS: (("n", "d", "eta"), ()),
}


@dataclass(frozen=True)
class BoundSpec:
    variant: Variant
    rho: float | None = None
    c: float | None = None
    K: float | None = None
    C: float = 1.0
    b: float | None = None
    a: float | None = None
    E_g: float | None = None
    E_g2: float | None = None
    E_f: float | None = None
    sigma2: float | None = None
    Sigma: float | None = None
    obs_diam: float | None = None
    var: float | None = None
    K_max: float | None = None
    c_prime: float = 1.0
    k: float | None = None
    ML: float | None = None
    n: float | None = None
    d: float | None = None
    eta: float | None = None
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.C < 1:
            raise BoundError("prefactor C must be >= 1")
        gauss, linear = _REQUIRED[self.variant]
        for name in gauss:
            v = getattr(self, name)
            if v is None or not v > 0 or not math.isfinite(v):
                raise BoundError(f"{self.variant.value}: {name} must be a positive number, got {v}")
        for name in linear:
            v = getattr(self, name)
            if v is None or not v >= 0 or not math.isfinite(v):
                raise BoundError(f"{self.variant.value}: {name} must be a nonnegative number, got {v}")
        if self.variant is Variant.POLY13_DRUNS and not (0 < self.eta <= 1 and self.n > self.d >= 1):
            raise BoundError("d-runs need n > d >= 1 and eta in (0, 1]")
        if self.variant is Variant.BERNSTEIN_PSI2 and not self.note:
            object.__setattr__(self, "note", "c_prime is an uncalibrated absolute constant")

    @classmethod
    def from_dict(cls, data: dict) -> BoundSpec:
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise BoundError(f"unknown BoundSpec keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> BoundSpec:
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v is not None and v != ""}
        out["variant"] = self.variant.value
        return out

    def upper_t(self) -> float:
        if self.variant in (Variant.SELF_BOUND_LOWER, Variant.POLY11_LOWER):
            return float(self.E_f)
        return math.inf


def min_form(t: float, a: float, b: float) -> float:
    """``min(t^2 / a^2, t / b)``."""
    if not (a > 0 and b > 0):
        raise BoundError("a and b must be positive")
    if t < 0:
        raise RangeError("t must be >= 0")
    return min(t * t / (a * a), t / b)


def _two_level(t: float, gauss_den: float, lin_den: float) -> float:
    """``min(t^2 / gauss_den, t / lin_den)`` with ``lin_den = 0`` meaning an infinite linear term."""
    g = t * t / gauss_den
    if lin_den == 0:
        return g
    return min(g, t / lin_den)


def tail_bound(spec: BoundSpec, t: float) -> float:
    """Raw (uncapped) value of the bound at deviation ``t``."""
    t = float(t)
    if not t >= 0:
        raise RangeError("t must be >= 0")
    if t > spec.upper_t():
        raise RangeError(f"{spec.variant.value} is stated for t in [0, E_f] = [0, {spec.E_f}]")
    v = spec.variant
    V = Variant
    if v in (V.THM1_DEV, V.THM1_CONC):
        m = _two_level(t, spec.rho * spec.c ** 2, math.sqrt(spec.rho) * spec.K)
        if v is V.THM1_DEV:
            return 4.0 * spec.C / 3.0 * math.exp(-m / 8.0)
        return 2.0 * spec.C * math.exp(-m / 12.0)
    if v is V.COR2:
        return 4.0 / 3.0 * math.exp(-_two_level(t, spec.E_g ** 2, spec.b) / (8.0 * spec.rho))
    if v is V.PROP3:
        return math.exp(-_two_level(t, 2.0 * spec.E_g2, spec.b) / (4.0 * spec.rho))
    if v is V.COR4_BERNSTEIN:
        den = 8.0 * (spec.rho * spec.c ** 2 + math.sqrt(spec.rho) * spec.K * t)
        return 4.0 * spec.C / 3.0 * math.exp(-t * t / den)
    if v in (V.SELF_BOUND_UPPER, V.SELF_BOUND_LOWER):
        den = 2.0 * spec.rho * (2.0 * spec.a * spec.E_f + 2.0 * spec.b + spec.a * t / 3.0)
        if den == 0:
            return 1.0 if t == 0 else 0.0
        return math.exp(-t * t / den)
    if v is V.SUB_GAUSSIAN_FIRST_ORDER:
        return math.exp(-t * t / (2.0 * spec.rho * spec.c ** 2))
    if v is V.LOCALLY_LIPSCHITZ:
        return 2.0 * math.exp(-t * t / (2.0 * spec.obs_diam))
    if v is V.TALAGRAND_TAIL_SN:
        return 2.0 * math.exp(-t * t / 64.0)
    if v is V.WEAKLY_DEP_D:
        return 2.0 * math.exp(-_two_level(t, spec.E_g ** 2, 2.0 * spec.b) / (12.0 * spec.sigma2))
    if v is V.WEAKLY_DEP_H:
        return 2.0 * math.exp(-_two_level(t, spec.E_g ** 2, spec.b) / (12.0 * spec.sigma2))
    if v is V.HANSON_WRIGHT:
        return 4.0 / 3.0 * math.exp(-_two_level(t, 2.0 * spec.E_f ** 2, spec.Sigma) / (128.0 * spec.sigma2))
    if v is V.BERNSTEIN_PSI2:
        return 2.0 * math.exp(-_two_level(t, 80.0 * spec.var, spec.c_prime * spec.K_max))
    if v is V.POLY11_UPPER:
        den = 2.0 * spec.k * spec.ML * (spec.E_f + t / 2.0)
        if den == 0:
            return 1.0 if t == 0 else 0.0
        return math.exp(-t * t / den)
    if v is V.POLY11_LOWER:
        return math.exp(-t * t / (2.0 * spec.k * spec.ML))
    if v is V.POLY12_SUP:
        den = 2.0 * spec.a * (spec.E_f + t / 2.0)
        if den == 0:
            return 1.0 if t == 0 else 0.0
        return math.exp(-t * t / den)
    if v is V.POLY13_DRUNS:
        scale = math.sqrt(spec.n * spec.eta ** spec.d)
        return 2.0 * math.exp(-t * t / (2.0 * spec.d ** 2 * (1.0 + t / scale)))
    raise BoundError(f"unhandled variant {v}")  # pragma: no cover


def prefactor(spec: BoundSpec) -> float:
    return tail_bound(spec, 0.0)


def adjust_constant(c1: float, c2: float, cr: float) -> float:
    """Exponent after trading prefactor ``c1`` for ``c2``: ``c1 e^{-cr} <= c2 e^{-(ln c2 / ln c1) cr}``."""
    if not c1 > c2 > 1:
        raise BoundError("need c1 > c2 > 1")
    if cr < 0:
        raise BoundError("exponent must be nonnegative")
    if c1 * math.exp(-cr) > 1:
        raise BoundError("the adjustment needs c1 * exp(-cr) <= 1")
    new = math.log(c2) / math.log(c1) * cr
    lhs, rhs = c1 * math.exp(-cr), c2 * math.exp(-new)
    if lhs > rhs * (1 + 1e-12):
        raise AssertionError(f"constant adjustment failed: {lhs} > {rhs}")
    return new


def psi2_norm(values, probs=None, rtol: float = 1e-13) -> float:
    """``inf{s > 0 : E exp(X^2 / s^2) <= 2}`` by bisection."""
    x = np.abs(np.asarray(values, dtype=float)).ravel()
    if x.size == 0:
        raise BoundError("empty support")
    p = np.full(x.size, 1.0 / x.size) if probs is None else np.asarray(probs, dtype=float).ravel()
    if p.shape != x.shape or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise BoundError("probabilities must be a distribution matching the values")
    keep = p > 0
    x, p = x[keep], p[keep]
    top = float(np.max(x))
    if top == 0:
        return 0.0
    x = x / top
    logp = np.log(p)
    log2 = math.log(2.0)

    def excess(s: float) -> float:
        z = x * x / (s * s) + logp
        m = np.max(z)
        return float(m + np.log(np.sum(np.exp(z - m)))) - log2

    hi = 1.0 / math.sqrt(log2)
    lo = math.sqrt(float(np.sum(p * x * x)) / log2)
    if excess(lo) <= 0:
        hi = lo
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi * top


@dataclass(frozen=True)
class TailCurve:
    t: np.ndarray
    raw: np.ndarray
    capped: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "raw", "capped"])
        for row in zip(self.t, self.raw, self.capped):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def curve(spec: BoundSpec, grid) -> TailCurve:
    t = np.asarray(grid, dtype=float).ravel()
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise BoundError("grid must be strictly increasing")
    raw = np.array([tail_bound(spec, s) for s in t])
    return TailCurve(t, raw, np.minimum(raw, 1.0))
