"""Seeded sampling, Monte Carlo tail estimates and bound comparisons."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from mlsiconc.bounds import BoundSpec, tail_bound
from mlsiconc.finite_space import PRODUCT, SLICE, SYMMETRIC, DomainError
from mlsiconc.rng import uniform_rows

CP_LEVEL = 0.99


class SeededSampler:
    """Sample ``k`` is a pure function of ``(seed, k)``: row ``k`` of a counter-based
    uniform matrix whose column ``j`` feeds coordinate ``j``."""

    def __init__(self, kind: str, n: int, seed: int, r: int | None = None, marginals=None,
                 values=None):
        if n < 1:
            raise DomainError("need n >= 1")
        self.kind, self.n, self.seed, self.r = kind, int(n), int(seed), r
        if kind == SYMMETRIC:
            self.width = max(self.n - 1, 1)
        elif kind == SLICE:
            if r is None or not 0 <= r <= n:
                raise DomainError("invalid parameters: Slice needs 0 <= r <= n")
            self.width = max(int(r), 1)
        elif kind == PRODUCT:
            if marginals is None:
                raise DomainError("product sampling needs marginals")
            if np.ndim(marginals[0]) == 0:
                marginals = [marginals] * self.n
            self.cdfs = []
            for m in marginals:
                m = np.asarray(m, dtype=float)
                if np.any(m < 0) or abs(m.sum() - 1) > 1e-12:
                    raise DomainError("marginal is not a distribution")
                self.cdfs.append(np.cumsum(m)[:-1])
            if len(self.cdfs) != self.n:
                raise DomainError("one marginal per coordinate expected")
            self.values = None
            if values is not None:
                if np.ndim(values[0]) == 0:
                    values = [values] * self.n
                self.values = [np.asarray(v, dtype=float) for v in values]
            self.width = self.n
        else:
            raise DomainError(f"unknown space kind {kind!r}")

    def batch(self, start: int, count: int) -> np.ndarray:
        """Samples ``start .. start+count-1`` as rows."""
        u = uniform_rows(self.seed, start, count, self.width)
        rows = np.arange(count)[:, None]
        if self.kind == SYMMETRIC:
            dtype = np.int16 if self.n < 2**15 else np.int32
            out = np.broadcast_to(np.arange(self.n, dtype=dtype), (count, self.n)).copy()
            for c, i in enumerate(range(self.n - 1, 0, -1)):
                j = np.minimum((u[:, c] * (i + 1)).astype(np.int64), i)
                tmp = out[rows[:, 0], j].copy()
                out[rows[:, 0], j] = out[:, i]
                out[:, i] = tmp
            return out
        if self.kind == SLICE:
            pos = np.broadcast_to(np.arange(self.n), (count, self.n)).copy()
            for i in range(self.r):
                j = np.minimum(i + (u[:, i] * (self.n - i)).astype(np.int64), self.n - 1)
                tmp = pos[rows[:, 0], j].copy()
                pos[rows[:, 0], j] = pos[:, i]
                pos[:, i] = tmp
            out = np.zeros((count, self.n), dtype=np.int8)
            np.put_along_axis(out, pos[:, : self.r], 1, axis=1)
            return out
        digits = np.empty((count, self.n), dtype=np.int64)
        for i, cdf in enumerate(self.cdfs):
            digits[:, i] = np.searchsorted(cdf, u[:, i], side="right")
        if self.values is None:
            return digits
        return np.stack([self.values[i][digits[:, i]] for i in range(self.n)], axis=1)

    def sample(self, index: int) -> np.ndarray:
        return self.batch(index, 1)[0]


def cp_upper(k, n: int, level: float = CP_LEVEL) -> np.ndarray:
    """One-sided Clopper-Pearson upper bound for a binomial proportion."""
    k = np.asarray(k)
    safe = np.where(k < n, k, 0)
    return np.where(k >= n, 1.0, beta.ppf(level, safe + 1, n - safe))


@dataclass
class EmpiricalTail:
    t: np.ndarray
    counts: np.ndarray
    n: int
    center: float
    center_source: str
    two_sided: bool

    @property
    def estimate(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def upper(self) -> np.ndarray:
        return cp_upper(self.counts, self.n)


def parse_grid(text: str) -> np.ndarray:
    """``"a:b:step"`` (inclusive of b up to rounding) or a comma-separated list."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        if not s > 0 or b < a:
            raise DomainError("grid needs a <= b and step > 0")
        count = int(np.floor((b - a) / s + 1e-9)) + 1
        return np.round(a + s * np.arange(count), 12)
    vals = np.array([float(v) for v in text.split(",") if v.strip()])
    if np.any(np.diff(vals) <= 0):
        raise DomainError("grid must be strictly increasing")
    return vals


def empirical_tail(statistic, sampler: SeededSampler, n_samples: int, grid, center=None,
                   two_sided: bool = False, scale: float = 1.0, chunk: int = 4096) -> EmpiricalTail:
    """Exceedance counts of ``(f - center) / scale`` (absolute value if two-sided).

    Without a supplied center the same-run sample mean is used.
    """
    if n_samples < 1:
        raise DomainError("need at least one sample")
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing")
    vals = np.empty(n_samples)
    for start in range(0, n_samples, chunk):
        size = min(chunk, n_samples - start)
        vals[start:start + size] = statistic(sampler.batch(start, size))
    if center is None:
        center, source = float(np.mean(vals)), "empirical mean"
    else:
        center, source = float(center), "exact mean"
    dev = (vals - center) / scale
    if two_sided:
        dev = np.abs(dev)
    dev.sort()
    counts = n_samples - np.searchsorted(dev, grid - 1e-12 * np.maximum(1.0, np.abs(grid)), side="left")
    return EmpiricalTail(grid, counts.astype(np.int64), n_samples, center, source, two_sided)


@dataclass
class CompareRow:
    t: float
    empirical: float
    cp_upper: float
    raw_bound: float
    capped_bound: float
    violation: bool


def compare_report(emp: EmpiricalTail, spec: BoundSpec, grid=None) -> list[CompareRow]:
    if grid is not None and not np.array_equal(np.asarray(grid, dtype=float), emp.t):
        raise DomainError("grid mismatch")
    rows = []
    est, up = emp.estimate, emp.upper
    for i, t in enumerate(emp.t):
        raw = tail_bound(spec, float(t))
        rows.append(CompareRow(float(t), float(est[i]), float(up[i]), raw, min(1.0, raw),
                               bool(up[i] > raw)))
    return rows


def violations(rows: list[CompareRow]) -> int:
    return sum(r.violation for r in rows)


def rows_to_csv(rows: list[CompareRow]) -> str:
    buf = io.StringIO()
    buf.write("t,empirical,cp_upper,raw_bound,capped_bound,violation\n")
    for r in rows:
        buf.write(f"{r.t!r},{r.empirical!r},{r.cp_upper!r},{r.raw_bound!r},{r.capped_bound!r},"
                  f"{int(r.violation)}\n")
    return buf.getvalue()
