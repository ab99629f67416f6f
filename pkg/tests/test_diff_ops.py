import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlsiconc import DomainError, ProbabilityMeasure, build_space
from mlsiconc.diff_ops import (
    OperatorKind,
    apply_operator,
    apply_operator_sq,
    hessian_h2,
    iterated_plus_of,
    max_hessian_norm,
    op_norm,
    second_differences,
)
from mlsiconc.finite_space import hypercube

from oracles import exchange_sq_loops, product_ops_loops, second_difference_loops


def uniform(kind, **kw):
    return ProbabilityMeasure.uniform(build_space(kind, **kw))


def test_fixed_points_at_identity():
    mu = uniform("sn", n=3)
    f = np.sum(mu.space.points == np.arange(3), axis=1).astype(float)
    assert apply_operator_sq("gamma", mu, f)[0] == pytest.approx(8.0)


@pytest.mark.parametrize("kind,kw", [("sn", {"n": 3}), ("sn", {"n": 4}), ("slice", {"n": 5, "r": 2}),
                                     ("slice", {"n": 4, "r": 2})])
def test_exchange_matches_loops(kind, kw, rng):
    mu = uniform(kind, **kw)
    f = rng.normal(size=mu.space.cardinality)
    for plus in (False, True):
        op = "gamma_plus" if plus else "gamma"
        assert np.allclose(apply_operator_sq(op, mu, f), exchange_sq_loops(mu.space, f, plus), atol=1e-12)


def test_product_ops_match_loops(rng):
    sp = build_space("product", sizes=[2, 3, 2])
    marg = [rng.dirichlet(np.ones(k)) for k in sp.radix]
    mu = ProbabilityMeasure.product(sp, marg)
    f = rng.normal(size=sp.cardinality)
    ref = product_ops_loops(sp, mu.weights, f)
    for row, kind in enumerate(["d", "d_plus", "h", "h_plus"]):
        assert np.allclose(apply_operator_sq(kind, mu, f), ref[row], atol=1e-12)


def test_sup_operators_use_the_support():
    sp = build_space("product", sizes=[3, 2])
    mu = ProbabilityMeasure.product(sp, [[0.5, 0.5, 0.0], [0.5, 0.5]])
    f = np.array([0.0, 0.0, 1.0, 1.0, 100.0, 100.0])
    assert np.allclose(apply_operator("h", mu, f)[mu.weights > 0], 1.0)


def test_linear_sum_d_operator():
    for n in (2, 3, 5):
        mu = ProbabilityMeasure.uniform(hypercube(n))
        f = mu.space.coords().sum(axis=1)
        assert np.allclose(apply_operator_sq("d", mu, f), n / 2)
        inner = apply_operator("d", mu, f)
        assert np.allclose(iterated_plus_of("d_plus", mu, inner), 0.0)


def test_constant_gives_zero():
    for kind, mu in [("gamma", uniform("sn", n=3)), ("gamma_plus", uniform("slice", n=4, r=2)),
                     ("d", ProbabilityMeasure.uniform(hypercube(3))),
                     ("h_plus", ProbabilityMeasure.uniform(hypercube(3)))]:
        assert np.all(apply_operator(kind, mu, np.full(mu.space.cardinality, 2.5)) == 0)


def test_iterated_operator_golden():
    # |d f| = (0, 1/sqrt2, 1/sqrt2, 1) and |d+ |d f|| = (0, 1/2, 1/2, 1 - 1/sqrt2) by hand
    mu = ProbabilityMeasure.uniform(hypercube(2))
    x = mu.space.coords()
    f = x[:, 0] * x[:, 1]
    inner = apply_operator("d", mu, f)
    assert np.allclose(inner, [0, 1 / math.sqrt(2), 1 / math.sqrt(2), 1])
    outer = iterated_plus_of("d_plus", mu, inner)
    assert np.allclose(outer, [0, 0.5, 0.5, 1 - 1 / math.sqrt(2)])
    assert outer.max() == pytest.approx(0.5)


def test_space_mismatch():
    with pytest.raises(DomainError):
        apply_operator("gamma", ProbabilityMeasure.uniform(hypercube(2)), np.zeros(4))
    with pytest.raises(DomainError):
        apply_operator("d", uniform("sn", n=3), np.zeros(6))
    with pytest.raises(DomainError):
        apply_operator("nabla", uniform("sn", n=3), np.zeros(6))


def test_hessian_examples():
    mu = ProbabilityMeasure.uniform(hypercube(2))
    x = mu.space.coords()
    h = hessian_h2(mu, x[:, 0] * x[:, 1], point=0)
    assert np.array_equal(h.matrix, [[0, 1], [1, 0]]) and h.op_norm == pytest.approx(1.0, rel=1e-10)

    mu3 = ProbabilityMeasure.uniform(hypercube(3))
    x3 = mu3.space.coords()
    assert max_hessian_norm(mu3, x3 @ [1.0, -2.0, 0.5]) == pytest.approx(0.0, abs=1e-12)
    assert max_hessian_norm(mu3, x3[:, 0] * x3[:, 1] + x3[:, 0] * x3[:, 2]) == pytest.approx(math.sqrt(2), rel=1e-10)

    # on {-1, 1}^2 the second difference of x1 x2 is (a - a')(b - b'), whose sup is 4
    pm = ProbabilityMeasure.uniform(hypercube(2, values=(-1, 1)))
    y = pm.space.coords()
    assert max_hessian_norm(pm, y[:, 0] * y[:, 1]) == pytest.approx(4.0, rel=1e-10)
    with pytest.raises(DomainError):
        second_differences(uniform("sn", n=3), np.zeros(6))


def test_second_differences_match_loops(rng):
    sp = build_space("product", sizes=[2, 3, 2])
    mu = ProbabilityMeasure.uniform(sp)
    f = rng.normal(size=sp.cardinality)
    mats = second_differences(mu, f)
    for k in range(sp.cardinality):
        for i in range(3):
            assert mats[k, i, i] == 0
            for j in range(i + 1, 3):
                ref = second_difference_loops(sp, f, i, j, k)
                assert mats[k, i, j] == pytest.approx(ref) and mats[k, j, i] == mats[k, i, j]


def test_op_norm_matches_eigvalsh(rng):
    a = rng.normal(size=(40, 6, 6))
    a = a + np.swapaxes(a, 1, 2)
    ref = np.max(np.abs(np.linalg.eigvalsh(a)), axis=1)
    assert np.allclose(op_norm(a), ref, rtol=1e-9)
    # equal-magnitude eigenvalues of opposite sign stall plain power iteration on A
    assert op_norm(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_homogeneity_and_plus_split(seed, a, b):
    rng = np.random.default_rng(seed)
    mu = uniform("sn", n=4)
    f = rng.normal(size=24)
    g = apply_operator("gamma", mu, f)
    assert np.allclose(apply_operator("gamma", mu, a * f + b), abs(a) * g, rtol=1e-10, atol=1e-10)
    assert np.allclose(apply_operator("gamma_plus", mu, abs(a) * f + b),
                       abs(a) * apply_operator("gamma_plus", mu, f), rtol=1e-10, atol=1e-10)
    split = apply_operator_sq("gamma_plus", mu, f) + apply_operator_sq("gamma_plus", mu, -f)
    assert np.allclose(apply_operator_sq("gamma", mu, f), split, rtol=1e-10, atol=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_product_domination(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 4, size=rng.integers(2, 5))
    sp = build_space("product", sizes=sizes)
    mu = ProbabilityMeasure.product(sp, [rng.dirichlet(np.ones(k)) for k in sizes])
    f = rng.normal(size=sp.cardinality)
    tol = 1e-12
    assert np.all(apply_operator("d", mu, f) <= apply_operator("h", mu, f) + tol)
    assert np.all(apply_operator("d_plus", mu, f) <= apply_operator("h_plus", mu, f) + tol)


def test_product_domination_large_cube(rng):
    mu = ProbabilityMeasure.uniform(hypercube(14))
    f = rng.normal(size=mu.space.cardinality)
    assert np.all(apply_operator("d", mu, f) <= apply_operator("h", mu, f) + 1e-12)
    assert np.all(apply_operator("d_plus", mu, f) <= apply_operator("h_plus", mu, f) + 1e-12)


def test_square_chain_rule(rng):
    mu = uniform("sn", n=4)
    for _ in range(50):
        g = rng.exponential(size=24)
        lhs = apply_operator("gamma_plus", mu, g * g)
        assert np.all(lhs <= 2 * g * apply_operator("gamma_plus", mu, g) + 1e-10)


def test_operator_names_are_stable():
    assert [k.value for k in OperatorKind] == ["gamma", "gamma_plus", "d", "d_plus", "h", "h_plus"]
