import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchkrylov import (BatchDense, BatchMultiVector, BatchScalar, DimensionError, axpy,
                         copy, dot, generate_stencil_batch, norm2, scale, spmv, to_format)
from oracles import dense_of, dot_fsum, matvec_loops, random_shared_pattern


def vec(a):
    return BatchMultiVector.from_array(a)


def test_spmv_identity():
    eye = BatchDense.from_array(np.stack([np.eye(5)] * 3))
    x = vec(np.arange(15.0).reshape(3, 5))
    for fmt in ("csr", "ell", "dense"):
        np.testing.assert_array_equal(spmv(to_format(eye, fmt), x).values, x.values)


def test_spmv_stencil_ones():
    a = generate_stencil_batch(1, 4, seed=0, max_delta=0.0)
    assert spmv(a, vec([[1.0, 1.0, 1.0, 1.0]])).values.tolist() == [[1.0, 0.0, 0.0, 1.0]]


def test_spmv_dimension_errors():
    a = generate_stencil_batch(2, 4, seed=0)
    with pytest.raises(DimensionError):
        spmv(a, BatchMultiVector.zeros(2, 5))
    with pytest.raises(DimensionError):
        spmv(a, BatchMultiVector.zeros(3, 4))


def test_spmv_matches_dense_oracle(rng):
    for _ in range(20):
        m = random_shared_pattern(rng, 3, 10, 8, 0.4)
        x = rng.standard_normal((3, 8))
        dense = dense_of(m)
        expected = matvec_loops(dense, x)
        bound = 1e-13 * matvec_loops(np.abs(dense), np.abs(x))
        assert np.all(np.abs(spmv(m, vec(x)).values - expected) <= bound)


def test_dot_examples():
    ones = BatchMultiVector.full(4, 7, 1.0)
    assert dot(ones, ones).values.tolist() == [7.0] * 4
    e0 = vec([[1.0, 0.0, 0.0]])
    e1 = vec([[0.0, 1.0, 0.0]])
    assert dot(e0, e1).values.tolist() == [0.0]
    assert norm2(e1).values.tolist() == [1.0]


def test_dot_vs_compensated_sum(rng):
    x = rng.standard_normal((16, 200))
    y = rng.standard_normal((16, 200))
    expected = dot_fsum(x, y)
    bound = 1e-13 * dot_fsum(np.abs(x), np.abs(y))
    assert np.all(np.abs(dot(vec(x), vec(y)).values - expected) <= bound)


def test_dot_sequential_order():
    # (1e16 + 1) - 1e16 loses the 1 only when summed left to right
    x = vec([[1e16, 1.0, -1e16]])
    assert dot(x, BatchMultiVector.full(1, 3, 1.0)).values[0] == 0.0


def test_blas1_examples(rng):
    x = vec(rng.standard_normal((3, 5)))
    y = vec(rng.standard_normal((3, 5)))
    np.testing.assert_array_equal(axpy(BatchScalar.full(3, 0.0), x, y).values, y.values)
    np.testing.assert_array_equal(scale(BatchScalar.full(3, 1.0), x).values, x.values)
    c = copy(x)
    c.values[0, 0] += 1
    assert c.values[0, 0] != x.values[0, 0]
    alpha = BatchScalar.from_array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(axpy(alpha, x, y).values,
                                  y.values + np.array([[1.0], [-2.0], [0.5]]) * x.values)


def test_blas1_shape_errors():
    with pytest.raises(DimensionError):
        dot(BatchMultiVector.zeros(2, 3), BatchMultiVector.zeros(2, 4))
    with pytest.raises(DimensionError):
        axpy(BatchScalar.full(3, 1.0), BatchMultiVector.zeros(2, 3), BatchMultiVector.zeros(2, 3))


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 10))
def test_per_entry_independence(seed, nsys, n):
    rng = np.random.default_rng(seed)
    m = random_shared_pattern(rng, nsys + 1, n, n, 0.5)
    x = rng.standard_normal((nsys + 1, n))
    y = rng.standard_normal((nsys + 1, n))
    y0, d0 = spmv(m, vec(x)).values[0], dot(vec(x), vec(y)).values[0]
    m.values[1:] = rng.standard_normal(m.values[1:].shape)
    x[1:] = 7.0
    assert np.array_equal(spmv(m, vec(x)).values[0], y0)
    assert dot(vec(x), vec(y)).values[0] == d0


@given(st.integers(0, 2**32 - 1))
def test_spmv_linearity(seed):
    rng = np.random.default_rng(seed)
    m = random_shared_pattern(rng, 3, 9, 9, 0.4)
    x, y = rng.standard_normal((2, 3, 9))
    lhs = spmv(m, vec(x + y)).values
    rhs = spmv(m, vec(x)).values + spmv(m, vec(y)).values
    scale_ = matvec_loops(np.abs(dense_of(m)), np.abs(x) + np.abs(y))
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale_)


def test_repeat_calls_bitwise(rng):
    m = random_shared_pattern(rng, 4, 12, 12, 0.3)
    x = vec(rng.standard_normal((4, 12)))
    assert np.array_equal(spmv(m, x).values, spmv(m, x).values)
    assert np.array_equal(dot(x, x).values, dot(x, x).values)
