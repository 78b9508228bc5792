"""Displacement operators and the Krylov-product representation.

The ``ldrpy.displacement`` module provides:

- sparse displacement operators :py:class:`Shift`, :py:class:`Subdiagonal`,
  :py:class:`TridiagonalCorners`, and :py:class:`Diagonal`
- the displacement map ``A @ M - M @ B``: :py:func:`displacement`,
  :py:func:`displacement_rank`
- Krylov matrices: :py:func:`krylov`
- the compressed representation :py:class:`LdrMatrix`, which stores
  operators `A`, `B` and generators `G`, `H` of the matrix

  .. math::

      M = \\sum_{i=1}^{r} K(A, g_i) K(B^T, h_i)^T
        = \\sum_{k=0}^{n-1} A^k G H^T B^k

- dense reconstruction oracles: :py:func:`reconstruct`,
  :py:func:`ldr_from_dense`
- recovery of matrices from residuals: :py:func:`sylvester_solve`

Operators are immutable. Their learnable entries are exposed as flat
vectors by :py:func:`operator_params` in the order listed for each
variant.

"""

from __future__ import annotations

__all__ = [
    'Diagonal',
    'LdrMatrix',
    'Operator',
    'Shift',
    'Subdiagonal',
    'TridiagonalCorners',
    'apply_operator',
    'as_tridiagonal',
    'densify',
    'displacement',
    'displacement_rank',
    'krylov',
    'ldr_from_dense',
    'operator_from_params',
    'operator_grad',
    'operator_params',
    'reconstruct',
    'sylvester_solve',
    'transpose_operator',
]

import dataclasses
import warnings
from typing import TYPE_CHECKING, ClassVar

if TYPE_CHECKING:
    from ._typing import Any, ArrayLike, NDArray

import numpy

from ._utils import as_matrix, as_square
from .linalg import numerical_rank

SYLVESTER_MAX_SIZE = 64
"""Largest matrix size for the vectorized Sylvester and Stein solvers."""

CONDITION_LIMIT = 1e12
"""Condition number above which linear systems are considered singular."""


def _vector(value: ArrayLike, name: str, size: int | None = None) -> Any:
    """Return read-only float64 vector."""
    a = numpy.array(value, dtype=numpy.float64, ndmin=1)
    if a.ndim != 1:
        raise ValueError(f'{name} is not one-dimensional, {a.shape=}')
    if size is not None and a.size != size:
        raise ValueError(f'{name} length {a.size} != {size}')
    a.flags.writeable = False
    return a


class Operator:
    """Base class of sparse displacement operators.

    Do not instantiate directly. Use one of the variants.

    """

    tag: ClassVar[int]
    """Variant identifier used in binary serialization."""

    @property
    def n(self) -> int:
        """Size of square operator."""
        raise NotImplementedError

    def __repr__(self) -> str:
        params = numpy.array2string(operator_params(self), threshold=8)
        return f'{self.__class__.__name__}(n={self.n}, params={params})'


@dataclasses.dataclass(frozen=True, eq=False, repr=False)
class Shift(Operator):
    """Unit f-circulant shift operator Z_f.

    Ones on the subdiagonal and `f` in the top-right corner.
    The learnable entry is ``[f]``.

    Parameters
    ----------
    f : float
        Corner value.
    size : int
        Size n of operator.

    """

    tag = 0

    f: float
    size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, 'f', float(self.f))
        if self.size < 1:
            raise ValueError(f'{self.size=} < 1')

    @property
    def n(self) -> int:
        return int(self.size)


@dataclasses.dataclass(frozen=True, eq=False, repr=False)
class Subdiagonal(Operator):
    """Learnable subdiagonal operator with top-right corner.

    The learnable entries are ``sub`` followed by ``corner``.

    Parameters
    ----------
    sub : array_like
        Subdiagonal entries of length n - 1.
    corner : float, optional
        Top-right corner entry.

    """

    tag = 1

    sub: Any
    corner: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'sub', _vector(self.sub, 'sub'))
        object.__setattr__(self, 'corner', float(self.corner))

    @property
    def n(self) -> int:
        return int(self.sub.size) + 1


@dataclasses.dataclass(frozen=True, eq=False, repr=False)
class TridiagonalCorners(Operator):
    """Learnable tridiagonal operator with top-right and bottom-left corners.

    The learnable entries are ``sub``, ``diag``, ``sup``, ``corner_tr``,
    and ``corner_bl``, 3n in total.
    Entries sharing a position in small matrices are added.

    Parameters
    ----------
    sub : array_like
        Subdiagonal entries of length n - 1.
    diag : array_like
        Diagonal entries of length n.
    sup : array_like
        Superdiagonal entries of length n - 1.
    corner_tr : float, optional
        Top-right corner entry at ``(0, n - 1)``.
    corner_bl : float, optional
        Bottom-left corner entry at ``(n - 1, 0)``.

    """

    tag = 2

    sub: Any
    diag: Any
    sup: Any
    corner_tr: float = 0.0
    corner_bl: float = 0.0

    def __post_init__(self) -> None:
        diag = _vector(self.diag, 'diag')
        object.__setattr__(self, 'diag', diag)
        object.__setattr__(
            self, 'sub', _vector(self.sub, 'sub', diag.size - 1)
        )
        object.__setattr__(
            self, 'sup', _vector(self.sup, 'sup', diag.size - 1)
        )
        object.__setattr__(self, 'corner_tr', float(self.corner_tr))
        object.__setattr__(self, 'corner_bl', float(self.corner_bl))

    @property
    def n(self) -> int:
        return int(self.diag.size)


@dataclasses.dataclass(frozen=True, eq=False, repr=False)
class Diagonal(Operator):
    """Diagonal operator. The learnable entries are the diagonal.

    Parameters
    ----------
    d : array_like
        Diagonal entries of length n.

    """

    tag = 3

    d: Any

    def __post_init__(self) -> None:
        object.__setattr__(self, 'd', _vector(self.d, 'd'))

    @property
    def n(self) -> int:
        return int(self.d.size)


OPERATOR_TYPES: dict[int, type[Operator]] = {
    cls.tag: cls for cls in (Shift, Subdiagonal, TridiagonalCorners, Diagonal)
}
"""Operator variants by serialization tag."""


def densify(op: Operator, /) -> NDArray[numpy.float64]:
    """Return dense matrix of displacement operator.

    Parameters
    ----------
    op : Operator
        Sparse displacement operator.

    Returns
    -------
    ndarray
        Square matrix with entries placed according to the sparsity
        pattern of `op`. All other entries are zero.

    Examples
    --------
    >>> densify(Shift(0, 3))
    array([[0, 0, 0],
           [1, 0, 0],
           [0, 1, 0]])
    >>> densify(Subdiagonal([2, 3], corner=5))
    array([[0, 0, 5],
           [2, 0, 0],
           [0, 3, 0]])

    """
    n = op.n
    m = numpy.zeros((n, n))
    i = numpy.arange(n - 1)
    if isinstance(op, Shift):
        m[i + 1, i] = 1.0
        m[0, n - 1] += op.f
    elif isinstance(op, Subdiagonal):
        m[i + 1, i] = op.sub
        m[0, n - 1] += op.corner
    elif isinstance(op, TridiagonalCorners):
        m[i + 1, i] = op.sub
        m[numpy.arange(n), numpy.arange(n)] += op.diag
        m[i, i + 1] += op.sup
        m[0, n - 1] += op.corner_tr
        m[n - 1, 0] += op.corner_bl
    elif isinstance(op, Diagonal):
        m[numpy.arange(n), numpy.arange(n)] = op.d
    else:
        raise TypeError(f'{type(op)=} is not an Operator variant')
    return m


def apply_operator(
    op: Operator, x: ArrayLike, /, transpose: bool = False
) -> NDArray[numpy.float64]:
    """Return product of displacement operator with vector or matrix.

    Parameters
    ----------
    op : Operator
        Sparse displacement operator of size n.
    x : array_like
        Vector of length n or matrix with n rows.
    transpose : bool, optional
        Multiply by the transpose of `op`.

    Returns
    -------
    ndarray
        ``densify(op) @ x`` (or ``densify(op).T @ x``) in O(n) time
        per column.

    Raises
    ------
    ValueError
        Size of `x` does not match `op`.

    Examples
    --------
    >>> apply_operator(Shift(0, 3), [1.0, 0.0, 0.0])
    array([0, 1, 0])
    >>> apply_operator(Diagonal([1, 2, 3]), [1.0, 1.0, 2.0])
    array([1, 2, 6])

    """
    v = numpy.asarray(x, dtype=numpy.float64)
    n = op.n
    if v.ndim not in {1, 2} or v.shape[0] != n:
        raise ValueError(f'{v.shape=} does not match operator size {n}')
    col = (slice(None),) + (None,) * (v.ndim - 1)
    if isinstance(op, Diagonal):
        return op.d[col] * v
    y = numpy.zeros_like(v)
    if isinstance(op, (Shift, Subdiagonal)):
        if isinstance(op, Shift):
            sub = numpy.ones(n - 1)
            corner = op.f
        else:
            sub = op.sub
            corner = op.corner
        if transpose:
            y[:-1] = sub[col] * v[1:]
            y[n - 1] += corner * v[0]
        else:
            y[1:] = sub[col] * v[:-1]
            y[0] += corner * v[n - 1]
        return y
    if isinstance(op, TridiagonalCorners):
        if transpose:
            sub, sup = op.sup, op.sub
            corner_tr, corner_bl = op.corner_bl, op.corner_tr
        else:
            sub, sup = op.sub, op.sup
            corner_tr, corner_bl = op.corner_tr, op.corner_bl
        y += op.diag[col] * v
        y[1:] += sub[col] * v[:-1]
        y[:-1] += sup[col] * v[1:]
        y[0] += corner_tr * v[n - 1]
        y[n - 1] += corner_bl * v[0]
        return y
    raise TypeError(f'{type(op)=} is not an Operator variant')


def operator_params(op: Operator, /) -> NDArray[numpy.float64]:
    """Return copy of learnable entries of operator as flat vector.

    Examples
    --------
    >>> operator_params(Subdiagonal([2, 3], corner=5))
    array([2, 3, 5])
    >>> operator_params(Shift(-1, 4))
    array([-1])

    """
    if isinstance(op, Shift):
        return numpy.array([op.f])
    if isinstance(op, Subdiagonal):
        return numpy.concatenate((op.sub, [op.corner]))
    if isinstance(op, TridiagonalCorners):
        return numpy.concatenate(
            (op.sub, op.diag, op.sup, [op.corner_tr, op.corner_bl])
        )
    if isinstance(op, Diagonal):
        return op.d.copy()
    raise TypeError(f'{type(op)=} is not an Operator variant')


def operator_from_params(op: Operator, params: ArrayLike, /) -> Operator:
    """Return operator of same variant and size with new learnable entries.

    Parameters
    ----------
    op : Operator
        Template operator.
    params : array_like
        Flat learnable entries in the order of :py:func:`operator_params`.

    Raises
    ------
    ValueError
        Number of entries does not match variant.

    Examples
    --------
    >>> operator_from_params(Subdiagonal([1, 1]), [2, 3, 5]).corner
    5.0

    """
    p = numpy.asarray(params, dtype=numpy.float64).ravel()
    size = operator_params(op).size
    if p.size != size:
        raise ValueError(f'{p.size=} != {size}')
    n = op.n
    if isinstance(op, Shift):
        return Shift(p[0], n)
    if isinstance(op, Subdiagonal):
        return Subdiagonal(p[: n - 1], p[n - 1])
    if isinstance(op, TridiagonalCorners):
        return TridiagonalCorners(
            p[: n - 1],
            p[n - 1 : 2 * n - 1],
            p[2 * n - 1 : 3 * n - 2],
            p[3 * n - 2],
            p[3 * n - 1],
        )
    return Diagonal(p)


def operator_grad(
    op: Operator, left: ArrayLike, right: ArrayLike, /
) -> NDArray[numpy.float64]:
    """Return gradient with respect to learnable entries of operator.

    For ``y = op @ right`` and upstream gradient ``left = dL/dy``, the
    dense gradient ``left @ right.T`` is projected onto the sparsity
    pattern of `op`.

    Parameters
    ----------
    op : Operator
        Operator of size n.
    left, right : array_like
        Vectors of length n or matrices with n rows and equal columns.

    Returns
    -------
    ndarray
        Gradient in the order of :py:func:`operator_params`.

    Examples
    --------
    >>> operator_grad(Subdiagonal([1, 1]), [1, 2, 3], [4, 5, 6])
    array([8, 15, 6])

    """
    u = numpy.asarray(left, dtype=numpy.float64)
    w = numpy.asarray(right, dtype=numpy.float64)
    if u.shape != w.shape or u.shape[0] != op.n:
        raise ValueError(f'{u.shape=} or {w.shape=} do not match operator')
    if u.ndim == 1:
        u = u[:, None]
        w = w[:, None]
    n = op.n
    sub = numpy.einsum('ij,ij->i', u[1:], w[:-1])
    corner_tr = float(u[0] @ w[n - 1])
    if isinstance(op, Shift):
        return numpy.array([corner_tr])
    if isinstance(op, Subdiagonal):
        return numpy.concatenate((sub, [corner_tr]))
    diag = numpy.einsum('ij,ij->i', u, w)
    if isinstance(op, Diagonal):
        return diag
    if isinstance(op, TridiagonalCorners):
        sup = numpy.einsum('ij,ij->i', u[:-1], w[1:])
        corner_bl = float(u[n - 1] @ w[0])
        return numpy.concatenate((sub, diag, sup, [corner_tr, corner_bl]))
    raise TypeError(f'{type(op)=} is not an Operator variant')


def as_tridiagonal(op: Operator, /) -> TridiagonalCorners:
    """Return operator embedded in tridiagonal-with-corners variant.

    Examples
    --------
    >>> t = as_tridiagonal(Shift(1, 3))
    >>> bool(numpy.array_equal(densify(t), densify(Shift(1, 3))))
    True

    """
    n = op.n
    zeros = numpy.zeros(n - 1)
    if isinstance(op, TridiagonalCorners):
        return op
    if isinstance(op, Shift):
        return TridiagonalCorners(
            numpy.ones(n - 1), numpy.zeros(n), zeros, op.f
        )
    if isinstance(op, Subdiagonal):
        return TridiagonalCorners(op.sub, numpy.zeros(n), zeros, op.corner)
    if isinstance(op, Diagonal):
        return TridiagonalCorners(zeros, op.d, zeros)
    raise TypeError(f'{type(op)=} is not an Operator variant')


def transpose_operator(op: Operator, /) -> Operator:
    """Return transpose of operator.

    Transposes of shift and subdiagonal operators are superdiagonal and
    returned as :py:class:`TridiagonalCorners`.

    Examples
    --------
    >>> densify(transpose_operator(Shift(0, 3)))
    array([[0, 1, 0],
           [0, 0, 1],
           [0, 0, 0]])

    """
    if isinstance(op, Diagonal):
        return op
    t = as_tridiagonal(op)
    return TridiagonalCorners(
        t.sup, t.diag, t.sub, corner_tr=t.corner_bl, corner_bl=t.corner_tr
    )


def _dense(op: Operator | ArrayLike, /) -> NDArray[numpy.float64]:
    """Return dense matrix of operator or square array."""
    if isinstance(op, Operator):
        return densify(op)
    return as_square(op, 'operator')


def displacement(
    m: ArrayLike, a: Operator | ArrayLike, b: Operator | ArrayLike, /
) -> NDArray[numpy.float64]:
    """Return residual of displacement equation ``A @ M - M @ B``.

    Parameters
    ----------
    m : array_like
        Matrix of shape (rows, cols).
    a, b : Operator or array_like
        Displacement operators, sparse or dense, of sizes rows and cols.

    Returns
    -------
    ndarray
        Residual matrix. Its rank is the displacement rank of `m`.

    Raises
    ------
    ValueError
        Sizes do not agree or operators are not square.

    Examples
    --------
    >>> t = numpy.array([[1.0, 2.0], [3.0, 1.0]])
    >>> displacement(t, Shift(1, 2), Shift(-1, 2))
    array([[1, 2],
           [0, 5]])

    """
    mat = as_matrix(m)
    da = _dense(a)
    db = _dense(b)
    rows, cols = mat.shape
    if da.shape != (rows, rows) or db.shape != (cols, cols):
        raise ValueError(
            f'{mat.shape=} does not match {da.shape=} or {db.shape=}'
        )
    return da @ mat - mat @ db


def displacement_rank(
    m: ArrayLike,
    a: Operator | ArrayLike,
    b: Operator | ArrayLike,
    /,
    rel_tol: float | None = None,
) -> int:
    """Return measured displacement rank of matrix.

    Singular values of the residual are compared to `rel_tol` times
    the largest singular value of the residual and to `rel_tol` times
    ``(norm(A) + norm(B)) * norm(M)``, the scale of rounding errors in the
    residual. Residuals vanishing up to rounding have rank 0.

    Parameters
    ----------
    m : array_like
        Matrix of shape (rows, cols).
    a, b : Operator or array_like
        Displacement operators of sizes rows and cols.
    rel_tol : float, optional
        Relative tolerance. The default is ``1e-9 * max(rows, cols)``.

    Examples
    --------
    >>> displacement_rank(numpy.eye(4), Shift(1, 4), Shift(1, 4))
    0
    >>> displacement_rank(scipy.linalg.toeplitz([1, 2, 3]), Shift(1, 3),
    ...                   Shift(-1, 3))
    2

    """
    mat = as_matrix(m)
    da = _dense(a)
    db = _dense(b)
    residual = displacement(mat, da, db)
    if rel_tol is None:
        rel_tol = 1e-9 * max(mat.shape)
    scale = (numpy.linalg.norm(da, 2) + numpy.linalg.norm(db, 2)) * (
        numpy.linalg.norm(mat, 2)
    )
    return numerical_rank(residual, rel_tol, atol=rel_tol * float(scale))


def _krylov_stack(
    op: Operator, v: NDArray[numpy.float64], transpose: bool = False
) -> NDArray[numpy.float64]:
    """Return powers ``A**k @ v`` stacked along first axis."""
    n = op.n
    result = numpy.empty((n,) + v.shape)
    w = v
    for k in range(n):
        result[k] = w
        if k < n - 1:
            w = apply_operator(op, w, transpose=transpose)
    return result


def krylov(
    op: Operator, v: ArrayLike, /, transpose: bool = False
) -> NDArray[numpy.float64]:
    """Return Krylov matrix of operator and vector.

    Parameters
    ----------
    op : Operator
        Operator `A` of size n.
    v : array_like
        Vector of length n, or matrix of shape (n, r) to compute r
        Krylov matrices.
    transpose : bool, optional
        Use the transpose of `A`.

    Returns
    -------
    ndarray
        Matrix of shape (n, n) whose column k is ``A**k @ v``,
        or array of shape (r, n, n) of Krylov matrices of columns of `v`.
        Computed by repeated :py:func:`apply_operator` in O(n**2) time.

    Examples
    --------
    >>> krylov(Diagonal([1, 2]), [1, 1])
    array([[1, 1],
           [1, 2]])
    >>> krylov(Shift(0, 3), [1, 0, 0])
    array([[1, 0, 0],
           [0, 1, 0],
           [0, 0, 1]])

    """
    w = numpy.asarray(v, dtype=numpy.float64)
    if w.ndim not in {1, 2} or w.shape[0] != op.n:
        raise ValueError(f'{w.shape=} does not match operator size {op.n}')
    stack = _krylov_stack(op, w, transpose)
    if w.ndim == 1:
        return numpy.ascontiguousarray(stack.T)
    return numpy.ascontiguousarray(stack.transpose(2, 1, 0))


@dataclasses.dataclass(frozen=True, eq=False)
class LdrMatrix:
    """Low displacement rank matrix in Krylov-product representation.

    Represents the n-by-n matrix
    ``sum(krylov(A, G[:, i]) @ krylov(B.T, H[:, i]).T for i in range(r))``.

    Parameters
    ----------
    op_a : Operator
        Operator `A` of size n.
    op_b : Operator
        Operator `B` of size n.
    G : array_like
        Generator of shape (n, r).
    H : array_like
        Generator of shape (n, r).

    Raises
    ------
    ValueError
        Sizes of operators and generators are inconsistent.

    Examples
    --------
    >>> m = LdrMatrix(Shift(0, 4), Shift(0, 4), numpy.ones((4, 2)),
    ...               numpy.ones((4, 2)))
    >>> m.n, m.rank
    (4, 2)

    """

    op_a: Operator
    op_b: Operator
    G: Any
    H: Any

    def __post_init__(self) -> None:
        g = as_matrix(self.G, 'G').copy()
        h = as_matrix(self.H, 'H').copy()
        n = self.op_a.n
        if self.op_b.n != n:
            raise ValueError(f'{self.op_a.n=} != {self.op_b.n=}')
        if g.shape != h.shape or g.shape[0] != n:
            raise ValueError(
                f'{g.shape=} or {h.shape=} do not match operator size {n}'
            )
        if g.shape[1] < 1:
            raise ValueError('displacement rank budget < 1')
        g.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, 'G', g)
        object.__setattr__(self, 'H', h)

    @property
    def n(self) -> int:
        """Size of represented square matrix."""
        return self.op_a.n

    @property
    def rank(self) -> int:
        """Displacement rank budget r, the number of generator columns."""
        return int(self.G.shape[1])

    def replace(self, **changes: Any) -> LdrMatrix:
        """Return copy with fields replaced."""
        return dataclasses.replace(self, **changes)


def reconstruct(m: LdrMatrix, /) -> NDArray[numpy.float64]:
    """Return dense matrix represented by LdrMatrix.

    This is the oracle for all fast multiplication paths.

    Parameters
    ----------
    m : LdrMatrix
        Compressed matrix.

    Returns
    -------
    ndarray
        Dense n-by-n matrix computed in O(r n**2) time from
        explicit Krylov matrices.

    Examples
    --------
    >>> e0 = [[1.0], [0.0], [0.0]]
    >>> reconstruct(LdrMatrix(Shift(0, 3), Shift(0, 3), e0, e0))
    array([[1, 0, 0],
           [0, 0, 0],
           [0, 0, 0]])

    """
    ka = _krylov_stack(m.op_a, m.G)
    kb = _krylov_stack(m.op_b, m.H, transpose=True)
    return _krylov_product(ka, kb)


def _krylov_product(
    ka: NDArray[numpy.float64], kb: NDArray[numpy.float64], /
) -> NDArray[numpy.float64]:
    """Return sum of outer products of stacked Krylov vectors.

    Parameters
    ----------
    ka, kb : ndarray
        Stacks of shape (n, n, r) of vectors ``A**k @ G`` and
        ``(B.T)**k @ H``.

    Returns
    -------
    ndarray
        ``sum(ka[k] @ kb[k].T for k in range(n))`` as one matrix product.

    """
    n = ka.shape[1]
    left = ka.transpose(1, 0, 2).reshape(n, -1)
    right = kb.transpose(1, 0, 2).reshape(kb.shape[1], -1)
    return left @ right.T


def _check_condition(
    system: NDArray[numpy.float64], what: str
) -> tuple[Any, Any]:
    """Return LU factorization of system or raise LinAlgError."""
    import scipy.linalg

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(system, check_finite=False)
    anorm = numpy.linalg.norm(system, 1)
    rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm='1')
    condition = numpy.inf if rcond == 0.0 else 1.0 / rcond
    if not numpy.isfinite(condition) or condition > CONDITION_LIMIT:
        raise numpy.linalg.LinAlgError(
            f'{what} is singular or ill-conditioned, '
            f'condition number {condition:.3g}'
        )
    return lu, piv


def sylvester_solve(
    a: Operator | ArrayLike,
    b: Operator | ArrayLike,
    r: ArrayLike,
    /,
) -> NDArray[numpy.float64]:
    """Return solution M of Sylvester equation ``A @ M - M @ B = R``.

    The equation is solved via its vectorization
    ``(I kron A - B.T kron I) vec(M) = vec(R)``, where vec stacks columns.
    This is an O(n**6) oracle for small matrices.

    Parameters
    ----------
    a, b : Operator or array_like
        Operators of size n <= 64 with disjoint spectra.
    r : array_like
        Residual matrix of shape (n, n).

    Returns
    -------
    ndarray
        Matrix M.

    Raises
    ------
    numpy.linalg.LinAlgError
        Spectra of `a` and `b` overlap, making the system singular or
        ill-conditioned. The message contains the condition estimate.
    ValueError
        Sizes do not agree or exceed 64.

    Examples
    --------
    >>> sylvester_solve(Diagonal([1, 2]), Diagonal([3, 4]), numpy.ones((2, 2)))
    array([[-0.5, -0.3333],
           [-1, -0.5]])

    """
    res = as_square(r, 'residual')
    da = _dense(a)
    db = _dense(b)
    n = res.shape[0]
    if da.shape != res.shape or db.shape != res.shape:
        raise ValueError(f'{res.shape=} does not match operators')
    if n > SYLVESTER_MAX_SIZE:
        raise ValueError(f'{n=} > {SYLVESTER_MAX_SIZE}')
    import scipy.linalg

    eye = numpy.eye(n)
    system = numpy.kron(eye, da) - numpy.kron(db.T, eye)
    lu_piv = _check_condition(system, 'Sylvester system')
    vec = scipy.linalg.lu_solve(lu_piv, res.ravel(order='F'))
    m = vec.reshape((n, n), order='F')
    error = numpy.linalg.norm(da @ m - m @ db - res)
    if error > 1e-8 * max(numpy.linalg.norm(res), 1e-300):
        raise numpy.linalg.LinAlgError(
            f'Sylvester residual check failed, relative error '
            f'{error / numpy.linalg.norm(res):.3g}'
        )
    return m


def ldr_from_dense(
    m: ArrayLike,
    op_a: Operator,
    op_b: Operator,
    /,
    rank: int | None = None,
) -> LdrMatrix:
    """Return LdrMatrix with given operators representing dense matrix.

    The generators are computed from the Stein residual
    ``S = M - A @ M @ B``. If neither ``A**n`` nor ``B**n`` vanishes, the
    product ``X = G @ H.T`` solves ``X - A**n @ X @ B**n = S`` (n <= 64).
    X is factored by singular value decomposition.

    Parameters
    ----------
    m : array_like
        Square matrix of size n.
    op_a, op_b : Operator
        Operators of the representation. The Stein operator
        ``X -> X - A**n @ X @ B**n`` must be invertible.
    rank : int, optional
        Number of generator columns. By default, the numerical rank of X.

    Returns
    -------
    LdrMatrix
        Representation whose :py:func:`reconstruct` equals `m` if `m`
        lies in the class of the operators.

    Raises
    ------
    numpy.linalg.LinAlgError
        Stein system is singular.

    Examples
    --------
    >>> t = scipy.linalg.toeplitz([1.0, 2.0, 3.0, 4.0])
    >>> ldr = ldr_from_dense(t, transpose_operator(Shift(1, 4)), Shift(-1, 4))
    >>> ldr.rank
    2
    >>> bool(numpy.allclose(reconstruct(ldr), t))
    True

    """
    mat = as_square(m)
    n = mat.shape[0]
    if op_a.n != n or op_b.n != n:
        raise ValueError(f'{mat.shape=} does not match operators')
    da = densify(op_a)
    db = densify(op_b)
    stein = mat - da @ mat @ db
    pa = numpy.linalg.matrix_power(da, n)
    pb = numpy.linalg.matrix_power(db, n)
    if not pa.any() or not pb.any():
        x = stein
    else:
        if n > SYLVESTER_MAX_SIZE:
            raise ValueError(f'{n=} > {SYLVESTER_MAX_SIZE}')
        import scipy.linalg

        system = numpy.eye(n * n) - numpy.kron(pb.T, pa)
        lu_piv = _check_condition(system, 'Stein system')
        x = scipy.linalg.lu_solve(lu_piv, stein.ravel(order='F')).reshape(
            (n, n), order='F'
        )
    u, s, vt = numpy.linalg.svd(x)
    if rank is None:
        rank = max(numerical_rank(x), 1)
    g = u[:, :rank] * s[:rank]
    h = vt[:rank].T
    return LdrMatrix(op_a, op_b, g, h)
