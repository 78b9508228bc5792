"""Tests for the ldrpy.linalg module."""

import numpy
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ldrpy.linalg import (
    batched_fft,
    dense_matvec,
    fault_injection,
    fft,
    numerical_rank,
    poly_mult,
)


def test_fft():
    """Test `fft` function."""
    assert_array_equal(fft(numpy.zeros(8)), numpy.zeros(8))
    assert_allclose(fft([1, 0, 0, 0]), numpy.ones(4), atol=1e-15)
    assert_allclose(fft([0, 1, 0, 0]), [1, -1j, -1, 1j], atol=1e-15)
    rng = numpy.random.default_rng(0)
    x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert_allclose(fft(x), numpy.fft.fft(x), atol=1e-12)
    assert_allclose(fft(x, True), numpy.fft.ifft(x), atol=1e-12)
    assert numpy.max(numpy.abs(fft(fft(x), True) - x)) < 1e-12
    # Parseval
    assert_allclose(
        numpy.sum(numpy.abs(fft(x)) ** 2),
        8 * numpy.sum(numpy.abs(x) ** 2),
        rtol=1e-10,
    )
    # axis
    y = rng.standard_normal((4, 3))
    assert_allclose(fft(y, axis=0), numpy.fft.fft(y, axis=0), atol=1e-12)
    assert fft([2.0]).tolist() == [2.0]


@pytest.mark.parametrize('n', [2, 16, 1024])
def test_fft_roundtrip(n):
    """Test `fft` inverse of transform of random buffer."""
    x = numpy.random.default_rng(n).standard_normal(n)
    result = fft(fft(x), inverse=True)
    assert numpy.max(numpy.abs(result - x)) < 1e-12 * numpy.max(numpy.abs(x))


def test_fft_exceptions():
    """Test `fft` function exceptions."""
    with pytest.raises(ValueError):
        fft(numpy.ones(6))
    with pytest.raises(ValueError):
        fft(numpy.ones(0))
    with pytest.raises(ValueError):
        fft(1.0)


def test_batched_fft():
    """Test `batched_fft` function."""
    assert_allclose(batched_fft([[1, 0, 0, 0]]), [[1, 1, 1, 1]], atol=1e-15)
    assert_allclose(
        batched_fft([[1, 0, 0, 0]] * 3), numpy.ones((3, 4)), atol=1e-15
    )
    x = numpy.random.default_rng(1).standard_normal((8, 16))
    expected = numpy.stack([fft(item) for item in x])
    assert numpy.max(numpy.abs(batched_fft(x) - expected)) < 1e-12
    assert numpy.max(numpy.abs(batched_fft(x, num_threads=4) - expected)) < (
        1e-12
    )
    assert_allclose(batched_fft(batched_fft(x), inverse=True), x, atol=1e-12)
    # leading batch dimensions
    y = x.reshape(2, 4, 16)
    assert_allclose(batched_fft(y, num_threads=2)[1], expected[4:])


def test_batched_fft_exceptions():
    """Test `batched_fft` function exceptions."""
    with pytest.raises(ValueError):
        batched_fft([[1, 0], [0, 1, 0, 0]])
    with pytest.raises(ValueError):
        batched_fft(numpy.ones((3, 6)))


def test_poly_mult():
    """Test `poly_mult` function."""
    assert_allclose(poly_mult([1, 1], [1, -1]), [1, 0, -1], atol=1e-12)
    assert_allclose(poly_mult([1, 2, 3], [1]), [1, 2, 3], atol=1e-12)
    assert_allclose(poly_mult([0, 0], [1, 2]), [0, 0, 0], atol=1e-12)
    assert poly_mult([], [1]).size == 0
    rng = numpy.random.default_rng(2)
    p = rng.standard_normal(8)
    q = rng.standard_normal(8)
    expected = numpy.convolve(p, q)
    result = poly_mult(p, q)
    assert numpy.max(numpy.abs(result - expected)) < 1e-10 * numpy.max(
        numpy.abs(expected)
    )
    # commutative and associative
    s = rng.standard_normal(16)
    assert_allclose(poly_mult(p, q), poly_mult(q, p), atol=1e-9)
    assert_allclose(
        poly_mult(poly_mult(p, q), s), poly_mult(p, poly_mult(q, s)), atol=1e-9
    )
    with pytest.raises(ValueError):
        poly_mult([[1, 2]], [1])


def test_dense_matvec():
    """Test `dense_matvec` function."""
    x = numpy.arange(4.0)
    assert_array_equal(dense_matvec(numpy.eye(4), x), x)
    assert_array_equal(dense_matvec(numpy.zeros((4, 4)), x), numpy.zeros(4))
    rng = numpy.random.default_rng(3)
    m = rng.standard_normal((16, 16))
    v = rng.standard_normal(16)
    expected = [sum(m[i, j] * v[j] for j in range(16)) for i in range(16)]
    assert_allclose(dense_matvec(m, v), expected, rtol=1e-12, atol=1e-12)
    assert dense_matvec(m, rng.standard_normal((16, 3))).shape == (16, 3)
    with pytest.raises(ValueError):
        dense_matvec(m, numpy.ones(15))
    with pytest.raises(ValueError):
        dense_matvec(numpy.ones(4), numpy.ones(4))


def test_numerical_rank():
    """Test `numerical_rank` function."""
    rng = numpy.random.default_rng(4)
    assert numerical_rank(numpy.eye(4)) == 4
    assert numerical_rank(numpy.zeros((3, 5))) == 0
    assert numerical_rank(numpy.zeros((0, 3))) == 0
    g = rng.standard_normal(8)
    h = rng.standard_normal(8)
    assert numerical_rank(numpy.outer(g, h)) == 1
    m = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 6))
    assert numerical_rank(m) == 2
    # invariant under permutations
    perm = rng.permutation(6)
    assert numerical_rank(m[perm][:, perm[::-1]]) == 2
    # absolute tolerance
    assert numerical_rank(1e-20 * numpy.eye(3), atol=1e-10) == 0
    assert numerical_rank(numpy.diag([1.0, 1e-6]), 1e-3) == 1
    with pytest.raises(ValueError):
        numerical_rank(numpy.ones(3))
    with pytest.raises(ValueError):
        numerical_rank([[1.0, numpy.nan]])


def test_fault_injection():
    """Test `fault_injection` context manager."""
    x = numpy.arange(8.0)
    expected = fft(x)
    with fault_injection('twiddle'):
        assert not numpy.allclose(fft(x), expected)
        # size 2 transforms have no affected twiddles
        assert_allclose(fft([1.0, 2.0]), [3.0, -1.0])
    assert_allclose(fft(x), expected)
    with pytest.raises(ValueError):
        with fault_injection('none'):
            pass
