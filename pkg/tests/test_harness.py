import numpy as np
import pytest
from scipy.stats import binom, chisquare

from mlsiconc import DomainError
from mlsiconc.bounds import BoundSpec, Variant
from mlsiconc.harness import (
    CompareRow,
    EmpiricalTail,
    SeededSampler,
    compare_report,
    cp_upper,
    empirical_tail,
    parse_grid,
    rows_to_csv,
    violations,
)

# recorded once from the sampler; any change to the stream or shuffle shows up here
GOLDEN_S3_SEED0 = [[1, 2, 0], [2, 0, 1], [1, 2, 0], [2, 0, 1], [1, 2, 0], [1, 2, 0]]
GOLDEN_SLICE52_SEED1 = [[0, 1, 0, 0, 1], [0, 1, 0, 0, 1], [0, 1, 1, 0, 0], [1, 0, 0, 1, 0]]


def test_sampler_examples():
    assert SeededSampler("sn", 1, seed=3).batch(0, 5).tolist() == [[0]] * 5
    assert np.all(SeededSampler("slice", 4, seed=3, r=4).batch(0, 10) == 1)
    assert SeededSampler("sn", 3, seed=0).batch(0, 6).tolist() == GOLDEN_S3_SEED0
    assert SeededSampler("slice", 5, seed=1, r=2).batch(0, 4).tolist() == GOLDEN_SLICE52_SEED1
    with pytest.raises(DomainError):
        SeededSampler("slice", 4, seed=0, r=5)
    with pytest.raises(DomainError):
        SeededSampler("product", 3, seed=0)
    with pytest.raises(DomainError):
        SeededSampler("product", 2, seed=0, marginals=[0.5, 0.6])
    with pytest.raises(DomainError):
        SeededSampler("torus", 3, seed=0)


@pytest.mark.parametrize("kind,kw", [("sn", {}), ("slice", {"r": 3}),
                                     ("product", {"marginals": [0.2, 0.5, 0.3], "values": [-1, 0, 4]})])
def test_sample_index_is_schedule_free(kind, kw):
    s = SeededSampler(kind, 7, seed=11, **kw)
    whole = s.batch(0, 300)
    pieces = np.vstack([s.batch(a, b - a) for a, b in [(0, 17), (17, 200), (200, 300)]])
    assert np.array_equal(whole, pieces)
    assert np.array_equal(s.sample(123), whole[123])
    assert not np.array_equal(SeededSampler(kind, 7, seed=12, **kw).batch(0, 300), whole)


def test_permutation_sampler_is_uniform():
    x = SeededSampler("sn", 4, seed=5).batch(0, 48000)
    assert np.all(np.sort(x, axis=1) == np.arange(4))
    codes = x @ (4 ** np.arange(4))
    _, counts = np.unique(codes, return_counts=True)
    assert len(counts) == 24 and chisquare(counts).pvalue > 1e-4


def test_slice_and_product_samplers_are_uniform():
    x = SeededSampler("slice", 5, seed=5, r=2).batch(0, 30000)
    assert np.all(x.sum(axis=1) == 2)
    _, counts = np.unique(x @ (2 ** np.arange(5)), return_counts=True)
    assert len(counts) == 10 and chisquare(counts).pvalue > 1e-4
    y = SeededSampler("product", 3, seed=9, marginals=[0.1, 0.6, 0.3]).batch(0, 30000)
    for j in range(3):
        counts = np.bincount(y[:, j], minlength=3)
        assert chisquare(counts, 30000 * np.array([0.1, 0.6, 0.3])).pvalue > 1e-4


def test_cp_upper_examples():
    assert cp_upper(5, 5) == 1.0
    assert float(cp_upper(0, 100)) == pytest.approx(1 - 0.01 ** (1 / 100), rel=1e-12)
    ks = np.arange(0, 50)
    up = cp_upper(ks, 50)
    assert np.all(np.diff(up) > 0) and np.all(up >= ks / 50)


def test_cp_coverage():
    rng = np.random.default_rng(2024)
    for p, n in [(0.5, 200), (0.03, 1000), (0.2, 50)]:
        k = rng.binomial(n, p, size=10_000)
        coverage = np.mean(cp_upper(k, n) >= p)
        assert coverage >= 0.985


def test_parse_grid():
    assert parse_grid("0:1:0.25").tolist() == [0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0:5:0.25").size == 21
    assert parse_grid("1, 2.5,4").tolist() == [1, 2.5, 4]
    for bad in ("1:0:1", "0:1:0", "2,1"):
        with pytest.raises(DomainError):
            parse_grid(bad)


def test_empirical_tail_examples():
    s = SeededSampler("sn", 5, seed=0)
    emp = empirical_tail(lambda x: np.zeros(len(x)), s, 1000, [0.0, 0.5, 1.0])
    assert emp.counts.tolist() == [1000, 0, 0] and emp.center_source == "empirical mean"
    with pytest.raises(DomainError):
        empirical_tail(lambda x: np.zeros(len(x)), s, 0, [1.0])
    with pytest.raises(DomainError):
        empirical_tail(lambda x: np.zeros(len(x)), s, 10, [1.0, 0.5])


def test_empirical_tail_monotone_and_chunk_free():
    s = SeededSampler("product", 30, seed=4, marginals=[0.5, 0.5], values=[-1, 1])
    grid = np.arange(-12, 13, 1.0)
    a = empirical_tail(lambda x: x.sum(axis=1), s, 5000, grid, center=0.0)
    b = empirical_tail(lambda x: x.sum(axis=1), s, 5000, grid, center=0.0, chunk=333)
    assert np.array_equal(a.counts, b.counts) and a.center_source == "exact mean"
    assert np.all(np.diff(a.counts) <= 0) and np.all(a.upper >= a.estimate)


def test_rademacher_sum_at_zero():
    n, N = 100, 100_000
    s = SeededSampler("product", n, seed=8, marginals=[0.5, 0.5], values=[-1, 1])
    emp = empirical_tail(lambda x: x.sum(axis=1), s, N, [0.0], center=0.0)
    exact = binom.sf(n // 2 - 1, n, 0.5)  # P(sum >= 0), ties included
    lo = binom.ppf(0.0005, N, exact) / N
    hi = binom.isf(0.0005, N, exact) / N
    assert lo <= emp.estimate[0] <= hi


def _fixture_tail():
    return EmpiricalTail(np.array([0.0, 1.0, 2.0]), np.array([1000, 400, 10]), 1000, 0.0, "exact mean", True)


def test_compare_report_fixtures():
    emp = _fixture_tail()
    loose = compare_report(emp, BoundSpec(Variant.LOCALLY_LIPSCHITZ, obs_diam=1e6))
    assert violations(loose) == 0 and all(r.capped_bound == 1.0 for r in loose)
    # CP bounds are about 0.437 at t = 1 and 0.0185 at t = 2; the bound is 2 exp(-t^2 / (2 D))
    crafted = compare_report(emp, BoundSpec(Variant.LOCALLY_LIPSCHITZ, obs_diam=0.25))
    assert [r.violation for r in crafted] == [False, True, True]
    crafted = compare_report(emp, BoundSpec(Variant.LOCALLY_LIPSCHITZ, obs_diam=0.4))
    assert [r.violation for r in crafted] == [False, False, True]
    assert crafted[2].raw_bound == pytest.approx(2 * np.exp(-5), rel=1e-15)
    with pytest.raises(DomainError):
        compare_report(emp, BoundSpec(Variant.LOCALLY_LIPSCHITZ, obs_diam=1.0), grid=[0.0, 1.0])
    empty = EmpiricalTail(np.array([]), np.array([], dtype=np.int64), 10, 0.0, "exact mean", False)
    assert compare_report(empty, BoundSpec(Variant.TALAGRAND_TAIL_SN)) == []


def test_rows_to_csv():
    rows = [CompareRow(0.5, 0.25, 0.3, 1.5, 1.0, False), CompareRow(1.0, 0.1, 0.2, 0.1, 0.1, True)]
    assert rows_to_csv(rows) == ("t,empirical,cp_upper,raw_bound,capped_bound,violation\n"
                                 "0.5,0.25,0.3,1.5,1.0,0\n1.0,0.1,0.2,0.1,0.1,1\n")
    assert rows_to_csv([]) == "t,empirical,cp_upper,raw_bound,capped_bound,violation\n"
