"""Tests for the ldrpy.displacement module."""

import numpy
import pytest
import scipy.linalg
from numpy.testing import assert_allclose, assert_array_equal

from ldrpy.displacement import (
    Diagonal,
    LdrMatrix,
    Shift,
    Subdiagonal,
    TridiagonalCorners,
    apply_operator,
    as_tridiagonal,
    densify,
    displacement,
    displacement_rank,
    krylov,
    ldr_from_dense,
    operator_from_params,
    operator_grad,
    operator_params,
    reconstruct,
    sylvester_solve,
    transpose_operator,
)
from ldrpy.linalg import dense_matvec, numerical_rank


def random_operators(n, seed=None):
    """Return one random operator of each variant."""
    rng = numpy.random.default_rng(seed)
    return [
        Shift(rng.uniform(-1, 1), n),
        Subdiagonal(rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1)),
        TridiagonalCorners(
            rng.uniform(-1, 1, n - 1),
            rng.uniform(-1, 1, n),
            rng.uniform(-1, 1, n - 1),
            rng.uniform(-1, 1),
            rng.uniform(-1, 1),
        ),
        Diagonal(rng.uniform(-1, 1, n)),
    ]


def test_operator():
    """Test Operator variants."""
    op = Shift(1, 4)
    assert op.n == 4
    assert op.f == 1.0
    assert isinstance(op.f, float)
    assert repr(op).startswith('Shift(n=4, params=[1')
    assert Subdiagonal([1, 2]).n == 3
    assert Subdiagonal([1, 2]).corner == 0.0
    assert TridiagonalCorners([1], [1, 2], [3]).n == 2
    assert Diagonal([1, 2, 3]).n == 3
    assert not Diagonal([1, 2]).d.flags.writeable
    assert [cls.tag for cls in (Shift, Subdiagonal)] == [0, 1]
    assert [cls.tag for cls in (TridiagonalCorners, Diagonal)] == [2, 3]
    with pytest.raises(ValueError):
        Shift(0, 0)
    with pytest.raises(ValueError):
        TridiagonalCorners([1, 2], [1, 2], [3])
    with pytest.raises(ValueError):
        Diagonal([[1, 2]])


def test_densify():
    """Test `densify` function."""
    assert_array_equal(densify(Shift(0, 3)), numpy.eye(3, k=-1))
    assert_array_equal(densify(Shift(1, 2)), [[0, 1], [1, 0]])
    assert_array_equal(
        densify(Subdiagonal([2, 3], corner=5)),
        [[0, 0, 5], [2, 0, 0], [0, 3, 0]],
    )
    assert_array_equal(
        densify(TridiagonalCorners([1, 2], [3, 4, 5], [6, 7], 8, 9)),
        [[3, 6, 8], [1, 4, 7], [9, 2, 5]],
    )
    assert_array_equal(densify(Diagonal([1, 2])), [[1, 0], [0, 2]])
    # Shift(f) equals Subdiagonal(ones, f)
    assert_array_equal(
        densify(Shift(-2, 4)), densify(Subdiagonal(numpy.ones(3), -2))
    )


@pytest.mark.parametrize('n', [2, 5, 16])
def test_apply_operator(n):
    """Test `apply_operator` matches dense products."""
    rng = numpy.random.default_rng(n)
    x = rng.standard_normal(n)
    xs = rng.standard_normal((n, 3))
    for op in random_operators(n, n):
        dense = densify(op)
        assert_allclose(apply_operator(op, x), dense_matvec(dense, x))
        assert_allclose(apply_operator(op, xs), dense @ xs)
        assert_allclose(apply_operator(op, x, transpose=True), dense.T @ x)
        assert_allclose(apply_operator(op, xs, True), dense.T @ xs)
    with pytest.raises(ValueError):
        apply_operator(Shift(0, n), numpy.ones(n + 1))


def test_apply_operator_examples():
    """Test `apply_operator` on basis vectors."""
    assert_array_equal(apply_operator(Shift(0, 4), [1, 0, 0, 0]), [0, 1, 0, 0])
    assert_array_equal(
        apply_operator(Diagonal([1, 2, 3]), [4, 5, 6]), [4, 10, 18]
    )


def test_operator_params():
    """Test `operator_params` and `operator_from_params` functions."""
    for op in random_operators(5, 1):
        params = operator_params(op)
        assert params.size == {0: 1, 1: 5, 2: 15, 3: 5}[op.tag]
        params += 1.0  # copy
        assert not numpy.array_equal(params, operator_params(op))
        new = operator_from_params(op, params)
        assert type(new) is type(op)
        assert_array_equal(operator_params(new), params)
    with pytest.raises(ValueError):
        operator_from_params(Shift(0, 3), [1, 2])


def test_operator_grad():
    """Test `operator_grad` is gradient of bilinear form."""
    rng = numpy.random.default_rng(2)
    n = 5
    left = rng.standard_normal((n, 2))
    right = rng.standard_normal((n, 2))
    for op in random_operators(n, 3):
        size = operator_params(op).size
        expected = [
            numpy.sum(
                left * (densify(operator_from_params(op, unit)) @ right)
            )
            for unit in numpy.eye(size)
        ]
        assert_allclose(operator_grad(op, left, right), expected, atol=1e-12)
    assert_array_equal(
        operator_grad(Subdiagonal([1, 1]), [1, 2, 3], [4, 5, 6]), [8, 15, 6]
    )
    with pytest.raises(ValueError):
        operator_grad(Shift(0, 3), [1, 2, 3], [1, 2])


def test_as_tridiagonal_transpose():
    """Test `as_tridiagonal` and `transpose_operator` functions."""
    for op in random_operators(6, 4):
        tri = as_tridiagonal(op)
        assert isinstance(tri, TridiagonalCorners)
        assert_array_equal(densify(tri), densify(op))
        assert_array_equal(densify(transpose_operator(op)), densify(op).T)
    diag = Diagonal([1, 2])
    assert transpose_operator(diag) is diag


def test_displacement():
    """Test `displacement` function."""
    rng = numpy.random.default_rng(5)
    z1 = Shift(1, 8)
    zm1 = Shift(-1, 8)
    assert_array_equal(displacement(numpy.zeros((8, 8)), z1, zm1), 0)
    t = scipy.linalg.toeplitz(rng.standard_normal(8), rng.standard_normal(8))
    residual = displacement(t, z1, zm1)
    # nonzero only in first row and last column
    assert_allclose(residual[1:, :-1], 0, atol=1e-14)
    assert numerical_rank(residual) <= 2
    s = rng.uniform(0, 1, 8)
    v = rng.uniform(2, 3, 8)
    cauchy = 1.0 / (s[:, None] - v[None, :])
    residual = displacement(cauchy, Diagonal(s), Diagonal(v))
    assert_allclose(residual, 1.0)
    assert numerical_rank(residual) == 1
    # linear
    m = rng.standard_normal((8, 8))
    assert_allclose(
        displacement(2 * m - 3 * t, z1, zm1),
        2 * displacement(m, z1, zm1) - 3 * displacement(t, z1, zm1),
        atol=1e-12,
    )
    # dense operators and rectangular matrices
    assert_allclose(
        displacement(m, densify(z1), densify(zm1)), displacement(m, z1, zm1)
    )
    residual = displacement(numpy.ones((2, 3)), Shift(0, 2), Shift(0, 3))
    assert residual.shape == (2, 3)
    with pytest.raises(ValueError):
        displacement(m, Shift(1, 7), zm1)


def test_displacement_rank():
    """Test `displacement_rank` function."""
    rng = numpy.random.default_rng(6)
    assert displacement_rank(numpy.eye(4), Shift(1, 4), Shift(1, 4)) == 0
    zeros = numpy.zeros((4, 4))
    assert displacement_rank(zeros, Shift(1, 4), Shift(1, 4)) == 0
    t = scipy.linalg.toeplitz(rng.standard_normal(16), rng.standard_normal(16))
    assert displacement_rank(t, Shift(1, 16), Shift(-1, 16)) == 2
    m = rng.standard_normal((8, 8))
    assert displacement_rank(m, Shift(1, 8), Shift(-1, 8)) == 8


def test_krylov():
    """Test `krylov` function."""
    assert_array_equal(krylov(Shift(0, 4), [1, 0, 0, 0]), numpy.eye(4))
    assert_array_equal(krylov(Diagonal([1, 2]), [1, 1]), [[1, 1], [1, 2]])
    rng = numpy.random.default_rng(7)
    v = rng.standard_normal(8)
    for f in (0.0, 1.0, -1.0, 2.5):
        z = densify(Shift(f, 8))
        expected = numpy.stack(
            [numpy.linalg.matrix_power(z, i) @ v for i in range(8)], axis=1
        )
        assert_allclose(krylov(Shift(f, 8), v), expected, atol=1e-12)
    k = krylov(Shift(0, 8), v)
    assert_array_equal(k, numpy.tril(k))
    assert_array_equal(k, scipy.linalg.toeplitz(v, numpy.zeros(8)))
    # transpose and multiple vectors
    vs = rng.standard_normal((8, 3))
    op = random_operators(8, 8)[1]
    stack = krylov(op, vs, transpose=True)
    assert stack.shape == (3, 8, 8)
    assert_allclose(stack[2][:, 1], densify(op).T @ vs[:, 2])
    with pytest.raises(ValueError):
        krylov(Shift(0, 4), [1, 0, 0])


def test_ldr_matrix():
    """Test LdrMatrix class."""
    g = numpy.ones((4, 2))
    m = LdrMatrix(Shift(0, 4), Subdiagonal([1, 2, 3]), g, g)
    assert m.n == 4
    assert m.rank == 2
    assert not m.G.flags.writeable
    g[0, 0] = 5.0
    assert m.G[0, 0] == 1.0
    m2 = m.replace(op_a=Shift(1, 4))
    assert m2.op_a.f == 1.0
    assert m2.G is m.G or numpy.array_equal(m2.G, m.G)
    with pytest.raises(ValueError):
        LdrMatrix(Shift(0, 4), Shift(0, 3), g, g)
    with pytest.raises(ValueError):
        LdrMatrix(Shift(0, 4), Shift(0, 4), g, numpy.ones((4, 3)))
    with pytest.raises(ValueError):
        LdrMatrix(Shift(0, 4), Shift(0, 4), g[:, :0], g[:, :0])
    with pytest.raises(ValueError):
        LdrMatrix(Shift(0, 4), Shift(0, 4), g * numpy.nan, g)


def test_reconstruct():
    """Test `reconstruct` function."""
    zeros = numpy.zeros((4, 1))
    m = LdrMatrix(Shift(0, 4), Shift(0, 4), zeros, zeros)
    assert_array_equal(reconstruct(m), numpy.zeros((4, 4)))
    e0 = numpy.eye(3)[:, :1]
    expected = numpy.zeros((3, 3))
    expected[0, 0] = 1.0
    assert_array_equal(
        reconstruct(LdrMatrix(Shift(0, 3), Shift(0, 3), e0, e0)), expected
    )
    # Krylov-product and power-sum forms agree
    rng = numpy.random.default_rng(9)
    ops = random_operators(6, 9)
    for op_a in ops:
        for op_b in ops:
            g = rng.standard_normal((6, 2))
            h = rng.standard_normal((6, 2))
            a = densify(op_a)
            b = densify(op_b)
            expected = sum(
                numpy.linalg.matrix_power(a, k)
                @ g
                @ h.T
                @ numpy.linalg.matrix_power(b, k)
                for k in range(6)
            )
            assert_allclose(
                reconstruct(LdrMatrix(op_a, op_b, g, h)),
                expected,
                atol=1e-12,
            )
    # linear in G and H separately
    g1, g2, h = (rng.standard_normal((6, 1)) for _ in range(3))
    op_a, op_b = ops[1], ops[2]
    assert_allclose(
        reconstruct(LdrMatrix(op_a, op_b, g1 + 2 * g2, h)),
        reconstruct(LdrMatrix(op_a, op_b, g1, h))
        + 2 * reconstruct(LdrMatrix(op_a, op_b, g2, h)),
        atol=1e-12,
    )


@pytest.mark.parametrize('rank', [1, 2, 4])
def test_krylov_certificate_rank(rank):
    """Test residual with respect to (inv(A), B) has rank at most 2r."""
    rng = numpy.random.default_rng(rank)
    for n in (8, 16, 32):
        op_a = Subdiagonal(rng.uniform(0.5, 1.5, n - 1), rng.uniform(0.5, 1.5))
        op_b = Subdiagonal(rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1))
        m = reconstruct(
            LdrMatrix(
                op_a,
                op_b,
                rng.standard_normal((n, rank)),
                rng.standard_normal((n, rank)),
            )
        )
        inverse = numpy.linalg.inv(densify(op_a))
        assert displacement_rank(m, inverse, op_b) <= 2 * rank


def test_sylvester_solve():
    """Test `sylvester_solve` function."""
    ones = numpy.ones((2, 2))
    solution = sylvester_solve(Diagonal([1, 2]), Diagonal([3, 4]), ones)
    assert_allclose(solution, [[-0.5, -1 / 3], [-1, -0.5]])
    assert_array_equal(
        sylvester_solve(Shift(1, 4), Shift(-1, 4), numpy.zeros((4, 4))), 0
    )
    rng = numpy.random.default_rng(10)
    t = scipy.linalg.toeplitz(rng.standard_normal(8), rng.standard_normal(8))
    z1 = Shift(1, 8)
    zm1 = Shift(-1, 8)
    m = sylvester_solve(z1, zm1, displacement(t, z1, zm1))
    assert numpy.linalg.norm(m - t) < 1e-8 * numpy.linalg.norm(t)
    # round trip for random matrices
    m = rng.standard_normal((16, 16))
    a = Diagonal(rng.uniform(1, 2, 16))
    b = Diagonal(rng.uniform(-2, -1, 16))
    assert_allclose(sylvester_solve(a, b, displacement(m, a, b)), m)


def test_sylvester_solve_exceptions():
    """Test `sylvester_solve` function exceptions."""
    with pytest.raises(numpy.linalg.LinAlgError, match='condition number'):
        # nilpotent operators have overlapping spectra
        sylvester_solve(Shift(0, 4), Shift(0, 4), numpy.ones((4, 4)))
    with pytest.raises(numpy.linalg.LinAlgError):
        sylvester_solve(Shift(1, 4), Shift(1, 4), numpy.ones((4, 4)))
    with pytest.raises(ValueError):
        sylvester_solve(Shift(1, 4), Shift(-1, 4), numpy.ones((3, 3)))
    with pytest.raises(ValueError):
        sylvester_solve(Shift(1, 65), Shift(-1, 65), numpy.ones((65, 65)))


def test_ldr_from_dense():
    """Test `ldr_from_dense` function."""
    rng = numpy.random.default_rng(11)
    t = scipy.linalg.toeplitz(rng.standard_normal(8), rng.standard_normal(8))
    ldr = ldr_from_dense(t, transpose_operator(Shift(1, 8)), Shift(-1, 8))
    assert ldr.rank == 2
    assert_allclose(reconstruct(ldr), t, atol=1e-10)
    # nilpotent operators need no Stein solve
    lower = numpy.tril(scipy.linalg.toeplitz(rng.standard_normal(8)))
    ldr = ldr_from_dense(lower, Shift(0, 8), Shift(0, 8))
    assert_allclose(reconstruct(ldr), lower, atol=1e-10)
    # explicit rank
    ldr = ldr_from_dense(t, transpose_operator(Shift(1, 8)), Shift(-1, 8), 3)
    assert ldr.rank == 3
    with pytest.raises(ValueError):
        ldr_from_dense(t, Shift(1, 4), Shift(1, 4))
