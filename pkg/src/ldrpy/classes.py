"""Classic structured classes, expressiveness, and closure algebra.

The ``ldrpy.classes`` module provides:

- the displacement operators of traditional structured classes:
  :py:class:`ClassicOperators`, :py:func:`classic_operators`,
  :py:func:`verify_class`
- representations of class members as :py:class:`LdrMatrix`:
  :py:func:`krylov_operators`, :py:func:`ldr_td_from_class`,
  :py:func:`toeplitz_like_ldr`, :py:func:`low_rank_ldr`
- displacement certificates of orthogonal polynomial transforms and
  ACDC layers: :py:func:`orthopoly_operators`,
  :py:func:`orthopoly_certificate`, :py:func:`acdc_rank_check`
- certificates :py:class:`GeneratorPair` and their closure under
  transposition, inversion, sums, products, and block matrices
- :py:func:`equivariance_check` of maps with displacement rank 0

Class kinds are named ``'toeplitz-like'``, ``'hankel-like'``,
``'vandermonde-like'``, and ``'cauchy-like'``.

"""

from __future__ import annotations

__all__ = [
    'CLASS_KINDS',
    'ClassicOperators',
    'GeneratorPair',
    'acdc_matrix',
    'acdc_rank_check',
    'chebyshev_recurrence',
    'classic_operators',
    'closure_block',
    'closure_inverse',
    'closure_product',
    'closure_sum',
    'closure_transpose',
    'dct_nodes',
    'equivariance_check',
    'generator_pair',
    'krylov_operators',
    'ldr_td_from_class',
    'low_rank_ldr',
    'orthopoly_certificate',
    'orthopoly_matrix',
    'orthopoly_operators',
    'random_class_member',
    'toeplitz_like_ldr',
    'verify_class',
]

import dataclasses
import math
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, ArrayLike, NDArray, Sequence

import numpy

from ._utils import as_matrix, as_square
from .displacement import (
    CONDITION_LIMIT,
    Diagonal,
    LdrMatrix,
    Operator,
    Shift,
    TridiagonalCorners,
    as_tridiagonal,
    densify,
    displacement,
    displacement_rank,
    ldr_from_dense,
    transpose_operator,
)

CLASS_KINDS: dict[str, int] = {
    'toeplitz-like': 2,
    'hankel-like': 2,
    'vandermonde-like': 1,
    'cauchy-like': 1,
}
"""Displacement rank bounds of class members by class kind."""


@dataclasses.dataclass(frozen=True, eq=False)
class ClassicOperators:
    """Traditional structured class and its displacement operators.

    Parameters
    ----------
    kind : str
        Class kind, one of :py:data:`CLASS_KINDS`.
    size : int, optional
        Matrix size of Toeplitz-like and Hankel-like classes.
    v : array_like, optional
        Nodes of Vandermonde-like class, ``M[i, j] = v[i]**j``.
    s, t : array_like, optional
        Nodes of Cauchy-like class, ``M[i, j] = 1 / (s[i] - t[j])``.

    Raises
    ------
    ValueError
        Kind is unknown or nodes are missing.
    numpy.linalg.LinAlgError
        Cauchy nodes coincide, ``s[i] == t[j]``.

    Examples
    --------
    >>> ClassicOperators('cauchy-like', s=[1, 2], t=[3, 4]).n
    2

    """

    kind: str
    size: int | None = None
    v: Any = None
    s: Any = None
    t: Any = None

    def __post_init__(self) -> None:
        if self.kind not in CLASS_KINDS:
            raise ValueError(
                f'{self.kind=!r} not in {tuple(CLASS_KINDS.keys())}'
            )
        if self.kind == 'vandermonde-like':
            if self.v is None:
                raise ValueError('Vandermonde-like class requires nodes v')
            v = _nodes(self.v, 'v')
            object.__setattr__(self, 'v', v)
            object.__setattr__(self, 'size', v.size)
        elif self.kind == 'cauchy-like':
            if self.s is None or self.t is None:
                raise ValueError('Cauchy-like class requires nodes s and t')
            s = _nodes(self.s, 's')
            t = _nodes(self.t, 't')
            if s.size != t.size:
                raise ValueError(f'{s.size=} != {t.size=}')
            gap = numpy.abs(s[:, None] - t[None, :]).min()
            if gap == 0.0:
                raise numpy.linalg.LinAlgError(
                    'Cauchy nodes coincide, spectra of operators overlap, '
                    'condition number inf'
                )
            object.__setattr__(self, 's', s)
            object.__setattr__(self, 't', t)
            object.__setattr__(self, 'size', s.size)
        elif self.size is None or self.size < 1:
            raise ValueError(f'{self.kind} class requires size >= 1')

    @property
    def n(self) -> int:
        """Matrix size."""
        assert self.size is not None
        return int(self.size)

    @property
    def rank_bound(self) -> int:
        """Displacement rank bound of class members."""
        return CLASS_KINDS[self.kind]

    def operators(self) -> tuple[Operator, Operator]:
        """Return displacement operators (A, B) of class."""
        n = self.n
        if self.kind == 'toeplitz-like':
            return Shift(1, n), Shift(-1, n)
        if self.kind == 'hankel-like':
            return Shift(1, n), transpose_operator(Shift(0, n))
        if self.kind == 'vandermonde-like':
            return Diagonal(self.v), Shift(0, n)
        return Diagonal(self.s), Diagonal(self.t)

    def krylov_operators(self) -> tuple[Operator, Operator]:
        """Return operators of Krylov-product representation of class.

        For the Toeplitz-like, Hankel-like, and Vandermonde-like classes,
        the matrices ``sum(A**k @ G @ H.T @ B**k)`` with these operators
        and r generator columns are the matrices with displacement rank r
        with respect to :py:meth:`operators`. Cauchy-like matrices are
        represented exactly, but may need more generator columns.

        Raises
        ------
        numpy.linalg.LinAlgError
            A Vandermonde or Cauchy node `v` or `s` is zero.

        """
        n = self.n
        if self.kind == 'toeplitz-like':
            return transpose_operator(Shift(1, n)), Shift(-1, n)
        if self.kind == 'hankel-like':
            return (
                transpose_operator(Shift(1, n)),
                transpose_operator(Shift(0, n)),
            )
        nodes = self.v if self.kind == 'vandermonde-like' else self.s
        if not numpy.all(nodes):
            raise numpy.linalg.LinAlgError(
                'diagonal operator is singular, condition number inf'
            )
        if self.kind == 'vandermonde-like':
            return Diagonal(1.0 / nodes), Shift(0, n)
        return Diagonal(1.0 / nodes), Diagonal(self.t)

    def matrix(self, rng: numpy.random.Generator | None = None, /) -> Any:
        """Return class member.

        Toeplitz-like and Hankel-like members are random Toeplitz and
        Hankel matrices drawn from `rng`. Vandermonde-like and Cauchy-like
        members are the Vandermonde and Cauchy matrices of the nodes.

        """
        import scipy.linalg

        if self.kind == 'vandermonde-like':
            return numpy.vander(self.v, increasing=True)
        if self.kind == 'cauchy-like':
            return 1.0 / (self.s[:, None] - self.t[None, :])
        if rng is None:
            rng = numpy.random.default_rng()
        c = rng.standard_normal(self.n)
        r = rng.standard_normal(self.n)
        if self.kind == 'toeplitz-like':
            return scipy.linalg.toeplitz(c, r)
        return scipy.linalg.hankel(c, r)


def _nodes(value: ArrayLike, name: str) -> Any:
    a = numpy.array(value, dtype=numpy.float64, ndmin=1)
    if a.ndim != 1 or a.size < 1:
        raise ValueError(f'{name} is not a non-empty vector, {a.shape=}')
    if not numpy.all(numpy.isfinite(a)):
        raise ValueError(f'{name} contains non-finite entries')
    a.flags.writeable = False
    return a


def classic_operators(
    kind: str,
    /,
    n: int | None = None,
    *,
    v: ArrayLike | None = None,
    s: ArrayLike | None = None,
    t: ArrayLike | None = None,
) -> tuple[Operator, Operator]:
    """Return displacement operators of traditional structured class.

    ========================  ======================  =========
    kind                      (A, B)                  rank
    ========================  ======================  =========
    ``'toeplitz-like'``       ``(Z_1, Z_-1)``         2
    ``'hankel-like'``         ``(Z_1, Z_0.T)``        2
    ``'vandermonde-like'``    ``(diag(v), Z_0)``      1
    ``'cauchy-like'``         ``(diag(s), diag(t))``  1
    ========================  ======================  =========

    Parameters
    ----------
    kind : str
        Class kind.
    n : int, optional
        Size of Toeplitz-like and Hankel-like operators.
    v, s, t : array_like, optional
        Nodes of Vandermonde-like and Cauchy-like classes.

    Returns
    -------
    tuple of Operator
        Operators (A, B). The transpose of ``Z_0`` is a
        :py:class:`TridiagonalCorners` with superdiagonal ones.

    Raises
    ------
    numpy.linalg.LinAlgError
        Cauchy nodes coincide.

    Examples
    --------
    >>> classic_operators('toeplitz-like', 4)
    (Shift(n=4, params=[1]), Shift(n=4, params=[-1]))
    >>> classic_operators('cauchy-like', s=[1, 2], t=[3, 4])
    (Diagonal(n=2, params=[1 2]), Diagonal(n=2, params=[3 4]))

    """
    return ClassicOperators(kind, n, v, s, t).operators()


def krylov_operators(
    kind: str,
    /,
    n: int | None = None,
    *,
    v: ArrayLike | None = None,
    s: ArrayLike | None = None,
    t: ArrayLike | None = None,
) -> tuple[Operator, Operator]:
    """Return operators representing class in Krylov-product form.

    For class operators ``(A, B)``, the returned operators are
    ``(inv(A), B)`` if `A` is invertible, else ``(A.T, B)`` for the
    permutation ``A = Z_1``.

    Examples
    --------
    >>> a, b = krylov_operators('vandermonde-like', v=[0.5, 2.0])
    >>> a
    Diagonal(n=2, params=[2 0.5])

    """
    return ClassicOperators(kind, n, v, s, t).krylov_operators()


def random_class_member(
    kind: str, n: int, /, seed: int | numpy.random.Generator | None = None
) -> tuple[NDArray[numpy.float64], ClassicOperators]:
    """Return random member of traditional structured class.

    Vandermonde nodes are drawn from [0.5, 1.5]. Cauchy nodes are drawn
    from the disjoint intervals s in [0, 1] and t in [2, 3].

    Parameters
    ----------
    kind : str
        Class kind.
    n : int
        Matrix size.
    seed : int or numpy.random.Generator, optional
        Random seed or generator.

    Returns
    -------
    matrix : ndarray
        Member of class.
    classic : ClassicOperators
        Class with nodes.

    Examples
    --------
    >>> m, classic = random_class_member('hankel-like', 8, seed=42)
    >>> verify_class(m, classic) <= classic.rank_bound
    True

    """
    rng = numpy.random.default_rng(seed)
    if kind == 'vandermonde-like':
        classic = ClassicOperators(kind, v=rng.uniform(0.5, 1.5, n))
    elif kind == 'cauchy-like':
        classic = ClassicOperators(
            kind, s=rng.uniform(0.0, 1.0, n), t=rng.uniform(2.0, 3.0, n)
        )
    else:
        classic = ClassicOperators(kind, n)
    return classic.matrix(rng), classic


def verify_class(
    m: ArrayLike,
    classic: ClassicOperators | str,
    /,
    tol: float | None = None,
) -> int:
    """Return measured displacement rank of matrix in structured class.

    Parameters
    ----------
    m : array_like
        Square matrix.
    classic : ClassicOperators or str
        Class. Kinds without nodes may be given by name.
    tol : float, optional
        Relative tolerance passed to
        :py:func:`ldrpy.displacement.displacement_rank`.

    Returns
    -------
    int
        Measured displacement rank. Class members do not exceed the
        rank bound of the class.

    Examples
    --------
    >>> verify_class(scipy.linalg.toeplitz([1, 2, 3, 4]), 'toeplitz-like')
    2
    >>> verify_class(numpy.vander([0.5, 0.9, 1.3, 2.0], increasing=True),
    ...              ClassicOperators('vandermonde-like',
    ...                               v=[0.5, 0.9, 1.3, 2.0]))
    1

    """
    mat = as_square(m)
    if isinstance(classic, str):
        classic = ClassicOperators(classic, mat.shape[0])
    a, b = classic.operators()
    return displacement_rank(mat, a, b, tol)


def ldr_td_from_class(
    m: ArrayLike, classic: ClassicOperators, /, rank: int | None = None
) -> LdrMatrix:
    """Return LdrMatrix with tridiagonal operators representing matrix.

    Members of the Toeplitz-like, Hankel-like, Vandermonde-like, and
    Cauchy-like classes are represented with the operators of
    :py:meth:`ClassicOperators.krylov_operators` embedded in
    :py:class:`TridiagonalCorners`.

    Examples
    --------
    >>> m, classic = random_class_member('toeplitz-like', 8, seed=1)
    >>> ldr = ldr_td_from_class(m, classic)
    >>> ldr.rank
    2
    >>> from ldrpy.displacement import reconstruct
    >>> bool(numpy.allclose(reconstruct(ldr), m))
    True

    """
    a, b = classic.krylov_operators()
    return ldr_from_dense(m, as_tridiagonal(a), as_tridiagonal(b), rank)


def toeplitz_like_ldr(g: ArrayLike, h: ArrayLike, /) -> LdrMatrix:
    """Return LdrMatrix of Toeplitz-like matrix given by generators.

    The represented matrix M solves ``Z_1 @ M - M @ Z_-1 = G @ H.T``,
    the matrix multiplied by
    :py:func:`ldrpy.fastmult.toeplitz_like_matvec`.

    Examples
    --------
    >>> from ldrpy.displacement import reconstruct
    >>> g = numpy.ones((4, 1))
    >>> m = reconstruct(toeplitz_like_ldr(g, g))
    >>> bool(numpy.allclose(displacement(m, Shift(1, 4), Shift(-1, 4)), 1))
    True

    """
    gen_g = as_matrix(g, 'G')
    n = gen_g.shape[0]
    # Z_1 M - M Z_-1 = G H.T  <=>  M - Z_1.T M Z_-1 = Z_1.T G H.T
    # and the Stein operator inverts to half the Krylov sum
    return LdrMatrix(
        transpose_operator(Shift(1, n)),
        Shift(-1, n),
        0.5 * numpy.roll(gen_g, -1, axis=0),
        h,
    )


def low_rank_ldr(g: ArrayLike, h: ArrayLike, /) -> LdrMatrix:
    """Return LdrMatrix of low-rank matrix ``G @ H.T``.

    Examples
    --------
    >>> from ldrpy.displacement import reconstruct
    >>> reconstruct(low_rank_ldr([[1.0], [2.0]], [[3.0], [4.0]]))
    array([[3, 4],
           [6, 8]])

    """
    n = as_matrix(g, 'G').shape[0]
    zero = Diagonal(numpy.zeros(n))
    return LdrMatrix(zero, zero, g, h)


def chebyshev_recurrence(
    n: int, /
) -> tuple[NDArray[numpy.float64], ...]:
    """Return coefficients a, b, c of Chebyshev polynomial recurrence.

    ``T_0 = 1``, ``T_1 = X``, ``T_{i+1} = 2 X T_i - T_{i-1}``.

    >>> [x.tolist() for x in chebyshev_recurrence(3)]
    [[1.0, 2.0, 2.0], [0.0, 0.0, 0.0], [0.0, -1.0, -1.0]]

    """
    a = numpy.full(n, 2.0)
    a[0] = 1.0
    c = numpy.full(n, -1.0)
    c[0] = 0.0
    return a, numpy.zeros(n), c


def dct_nodes(n: int, /) -> NDArray[numpy.float64]:
    """Return Chebyshev nodes ``cos(pi * (j + 0.5) / n)`` of DCT-II.

    >>> dct_nodes(2).round(4).tolist()
    [0.7071, -0.7071]

    """
    return numpy.cos(math.pi * (numpy.arange(n) + 0.5) / n)


def _recurrence(
    a: ArrayLike, b: ArrayLike, c: ArrayLike, nodes: ArrayLike
) -> tuple[Any, Any, Any, Any]:
    ca = numpy.asarray(a, dtype=numpy.float64)
    cb = numpy.asarray(b, dtype=numpy.float64)
    cc = numpy.asarray(c, dtype=numpy.float64)
    x = numpy.asarray(nodes, dtype=numpy.float64)
    n = x.size
    if x.ndim != 1 or n < 1:
        raise ValueError(f'nodes are not a non-empty vector, {x.shape=}')
    for name, coef in (('a', ca), ('b', cb), ('c', cc)):
        if coef.shape != (n,):
            raise ValueError(f'{name} shape {coef.shape} != {(n,)}')
    if not numpy.all(ca):
        raise ValueError(
            f'degenerate recurrence, a[{int(numpy.argmin(numpy.abs(ca)))}]=0'
        )
    return ca, cb, cc, x


def _polynomials(
    a: NDArray[Any], b: NDArray[Any], c: NDArray[Any], x: NDArray[Any]
) -> NDArray[numpy.float64]:
    """Return values of p_0 to p_n at nodes, shape (n + 1, len(x))."""
    n = a.size
    p = numpy.empty((n + 1, x.size))
    p[0] = 1.0
    previous = numpy.zeros(x.size)
    for i in range(n):
        p[i + 1] = (a[i] * x + b[i]) * p[i] + c[i] * previous
        previous = p[i]
    return p


def orthopoly_matrix(
    a: ArrayLike, b: ArrayLike, c: ArrayLike, nodes: ArrayLike, /
) -> NDArray[numpy.float64]:
    """Return transform matrix ``M[i, j] = p_i(nodes[j])``.

    The polynomials satisfy ``p_0 = 1`` and
    ``p_{i+1} = (a_i X + b_i) p_i + c_i p_{i-1}``.

    Examples
    --------
    >>> orthopoly_matrix([1, 1], [0, 0], [0, 0], [2, 3])
    array([[1, 1],
           [2, 3]])

    """
    ca, cb, cc, x = _recurrence(a, b, c, nodes)
    return _polynomials(ca, cb, cc, x)[:-1]


def orthopoly_operators(
    a: ArrayLike, b: ArrayLike, c: ArrayLike, nodes: ArrayLike, /
) -> tuple[TridiagonalCorners, Diagonal]:
    """Return displacement operators of orthogonal polynomial transform.

    Parameters
    ----------
    a, b, c : array_like
        Recurrence coefficients of length N.
        ``p_{i+1} = (a_i X + b_i) p_i + c_i p_{i-1}``.
    nodes : array_like
        Nodes of length N.

    Returns
    -------
    tuple
        Tridiagonal operator with diagonal ``-b_i / a_i``, superdiagonal
        ``1 / a_i`` and subdiagonal ``-c_i / a_i``, and the diagonal
        operator of `nodes`. The transform matrix has displacement
        rank at most 1 with respect to these operators.

    Raises
    ------
    ValueError
        A coefficient `a_i` is zero.

    Examples
    --------
    >>> n = 8
    >>> a, b, c = chebyshev_recurrence(n)
    >>> ops = orthopoly_operators(a, b, c, dct_nodes(n))
    >>> displacement_rank(orthopoly_matrix(a, b, c, dct_nodes(n)), *ops)
    0
    >>> nodes = numpy.linspace(-0.9, 0.9, n)
    >>> displacement_rank(orthopoly_matrix(a, b, c, nodes), *ops)
    1
    >>> orthopoly_operators([1, 0], [0, 0], [0, 0], [1, 2])
    Traceback (most recent call last):
     ...
    ValueError: degenerate recurrence, a[1]=0

    """
    ca, cb, cc, x = _recurrence(a, b, c, nodes)
    tridiagonal = TridiagonalCorners(
        -cc[1:] / ca[1:], -cb / ca, 1.0 / ca[:-1]
    )
    return tridiagonal, Diagonal(x)


def orthopoly_certificate(
    a: ArrayLike, b: ArrayLike, c: ArrayLike, nodes: ArrayLike, /
) -> GeneratorPair:
    """Return width-1 certificate of orthogonal polynomial transform.

    The residual of the transform matrix with respect to
    :py:func:`orthopoly_operators` is ``-e_last p_N(nodes).T / a_last``.

    Examples
    --------
    >>> a, b, c = chebyshev_recurrence(4)
    >>> pair = orthopoly_certificate(a, b, c, [0.1, 0.2, 0.3, 0.4])
    >>> pair.rank
    1
    >>> m = orthopoly_matrix(a, b, c, [0.1, 0.2, 0.3, 0.4])
    >>> bool(pair.residual_error(m) < 1e-12)
    True

    """
    ca, cb, cc, x = _recurrence(a, b, c, nodes)
    n = x.size
    tridiagonal, diagonal = orthopoly_operators(ca, cb, cc, x)
    g = numpy.zeros((n, 1))
    g[n - 1, 0] = -1.0 / ca[n - 1]
    h = _polynomials(ca, cb, cc, x)[n][:, None]
    return GeneratorPair(g, h, densify(tridiagonal), densify(diagonal))


def acdc_matrix(
    a_diag: ArrayLike, d_diag: ArrayLike, /
) -> NDArray[numpy.float64]:
    """Return ACDC layer matrix ``diag(a) @ C @ diag(d) @ inv(C)``.

    `C` is the DCT-II matrix ``C[i, j] = cos(pi * i * (j + 0.5) / N)``.
    Its inverse is computed from the orthogonality relation
    ``C @ C.T = diag(N, N / 2, ..., N / 2)``.

    >>> bool(numpy.allclose(acdc_matrix([1, 1], [1, 1]), numpy.eye(2)))
    True

    """
    a = numpy.asarray(a_diag, dtype=numpy.float64)
    d = numpy.asarray(d_diag, dtype=numpy.float64)
    n = a.size
    if a.ndim != 1 or d.shape != a.shape or n < 1:
        raise ValueError(f'{a.shape=} and {d.shape=} do not match')
    dct = orthopoly_matrix(*chebyshev_recurrence(n), dct_nodes(n))
    scale = numpy.full(n, 2.0 / n)
    scale[0] = 1.0 / n
    inverse = dct.T * scale
    return (a[:, None] * dct * d) @ inverse


def acdc_rank_check(
    a_diag: ArrayLike,
    d_diag: ArrayLike,
    /,
    rel_tol: float | None = None,
) -> int:
    """Return measured displacement rank of ACDC layer.

    The layer ``M = A @ C @ D @ inv(C)`` has displacement rank at most 2
    with respect to ``(A @ T @ inv(A), T)``, where `T` is the tridiagonal
    operator of the Chebyshev recurrence.

    Parameters
    ----------
    a_diag, d_diag : array_like
        Diagonals of `A` and `D` of length N. Entries of `a_diag`
        must be nonzero.
    rel_tol : float, optional
        Relative tolerance of measured rank.

    Raises
    ------
    numpy.linalg.LinAlgError
        `A` is singular.

    Examples
    --------
    >>> acdc_rank_check(numpy.ones(8), numpy.ones(8))
    0
    >>> rng = numpy.random.default_rng(0)
    >>> acdc_rank_check(rng.uniform(1, 2, 8), rng.uniform(1, 2, 8)) <= 2
    True

    """
    a = numpy.asarray(a_diag, dtype=numpy.float64)
    if not numpy.all(a):
        raise numpy.linalg.LinAlgError(
            'ACDC diagonal A is singular, condition number inf'
        )
    n = a.size
    m = acdc_matrix(a, d_diag)
    chebyshev = chebyshev_recurrence(n)
    tridiagonal = densify(orthopoly_operators(*chebyshev, dct_nodes(n))[0])
    s = (a[:, None] * tridiagonal) / a[None, :]
    return displacement_rank(m, s, tridiagonal, rel_tol)


@dataclasses.dataclass(frozen=True, eq=False)
class GeneratorPair:
    """Certificate ``A @ M - M @ B = G @ H.T`` of displacement rank.

    Parameters
    ----------
    G : array_like
        Generator of shape (rows, p).
    H : array_like
        Generator of shape (cols, p).
    op_a : Operator or array_like
        Operator `A` of size rows, stored dense.
    op_b : Operator or array_like
        Operator `B` of size cols, stored dense.

    Examples
    --------
    >>> pair = generator_pair(numpy.eye(3), Shift(1, 3), Shift(-1, 3))
    >>> pair.rank, pair.G.shape
    (1, (3, 1))

    """

    G: Any
    H: Any
    op_a: Any
    op_b: Any

    def __post_init__(self) -> None:
        g = as_matrix(self.G, 'G')
        h = as_matrix(self.H, 'H')
        a = _as_dense(self.op_a)
        b = _as_dense(self.op_b)
        if g.shape[1] != h.shape[1]:
            raise ValueError(f'{g.shape=} and {h.shape=} differ in width')
        if a.shape[0] != g.shape[0] or b.shape[0] != h.shape[0]:
            raise ValueError(
                f'{a.shape=} or {b.shape=} do not match '
                f'{g.shape=} or {h.shape=}'
            )
        for name, value in (('G', g), ('H', h), ('op_a', a), ('op_b', b)):
            value = value.copy()
            value.flags.writeable = False
            object.__setattr__(self, name, value)

    @property
    def rank(self) -> int:
        """Certified displacement rank, the generator width."""
        return int(self.G.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of certified matrix."""
        return int(self.G.shape[0]), int(self.H.shape[0])

    def residual(self) -> NDArray[numpy.float64]:
        """Return certified residual ``G @ H.T``."""
        return self.G @ self.H.T

    def residual_error(self, m: ArrayLike, /) -> float:
        """Return deviation of certified from actual residual of matrix.

        The Frobenius norm of the difference is relative to the norm of
        the actual residual plus the norm of ``abs(G) @ abs(H).T``, the
        scale of cancellation in the generators.

        """
        actual = displacement(m, self.op_a, self.op_b)
        error = numpy.linalg.norm(self.residual() - actual)
        scale = numpy.linalg.norm(actual) + numpy.linalg.norm(
            numpy.abs(self.G) @ numpy.abs(self.H).T
        )
        if scale == 0.0:
            return float(error)
        return float(error / scale)

    def measured_rank(self, m: ArrayLike, /) -> int:
        """Return numerical rank of actual residual of matrix."""
        return displacement_rank(m, self.op_a, self.op_b)

    def verify(self, m: ArrayLike, /, tol: float = 1e-8) -> GeneratorPair:
        """Return self if it certifies matrix, else raise LinAlgError."""
        error = self.residual_error(m)
        if not error <= tol:
            raise numpy.linalg.LinAlgError(
                f'certificate residual check failed, relative error '
                f'{error:.3g} > {tol}'
            )
        return self


def _as_dense(op: Operator | ArrayLike) -> NDArray[numpy.float64]:
    if isinstance(op, Operator):
        return densify(op)
    return as_square(op, 'operator')


def generator_pair(
    m: ArrayLike,
    a: Operator | ArrayLike,
    b: Operator | ArrayLike,
    /,
    rank: int | None = None,
) -> GeneratorPair:
    """Return certificate of matrix factored from its residual.

    The residual is factored by singular value decomposition. Its width
    is `rank` or the numerical rank of the residual.

    Examples
    --------
    >>> t = scipy.linalg.toeplitz([1.0, 2.0, 3.0, 4.0])
    >>> generator_pair(t, Shift(1, 4), Shift(-1, 4)).rank
    2

    """
    da = _as_dense(a)
    db = _as_dense(b)
    residual = displacement(m, da, db)
    if rank is None:
        rank = displacement_rank(m, da, db)
    u, s, vt = numpy.linalg.svd(residual, full_matrices=False)
    return GeneratorPair(u[:, :rank] * s[:rank], vt[:rank].T, da, db)


def closure_transpose(pair: GeneratorPair, /) -> GeneratorPair:
    """Return certificate of transposed matrix.

    ``B.T @ M.T - M.T @ A.T = -(A @ M - M @ B).T = (-H) @ G.T``.

    Examples
    --------
    >>> t = scipy.linalg.toeplitz([1.0, 2.0, 3.0], [1.0, 4.0, 5.0])
    >>> pair = closure_transpose(generator_pair(t, Shift(1, 3),
    ...                                         Shift(-1, 3)))
    >>> pair.rank, bool(pair.residual_error(t.T) < 1e-12)
    (2, True)

    """
    return GeneratorPair(-pair.H, pair.G, pair.op_b.T, pair.op_a.T)


def closure_inverse(m: ArrayLike, pair: GeneratorPair, /) -> GeneratorPair:
    """Return certificate of inverse matrix with respect to (B, A).

    ``B @ inv(M) - inv(M) @ A = -inv(M) @ G @ H.T @ inv(M)``.

    Parameters
    ----------
    m : array_like
        Invertible square matrix certified by `pair`.
    pair : GeneratorPair
        Certificate of `m` with respect to (A, B).

    Returns
    -------
    GeneratorPair
        Generators ``(-inv(M) @ G, inv(M).T @ H)`` with respect to (B, A),
        verified to 1e-6.

    Raises
    ------
    numpy.linalg.LinAlgError
        Condition number of `m` exceeds 1e12 or the certificate does
        not hold.

    Examples
    --------
    >>> pair = closure_inverse(numpy.eye(3), generator_pair(
    ...     numpy.eye(3), Shift(1, 3), Shift(1, 3)))
    >>> pair.rank, bool(pair.residual().any())
    (0, False)

    """
    mat = as_square(m)
    if mat.shape != pair.shape:
        raise ValueError(f'{mat.shape=} != {pair.shape=}')
    condition = numpy.linalg.cond(mat)
    if not numpy.isfinite(condition) or condition > CONDITION_LIMIT:
        raise numpy.linalg.LinAlgError(
            f'matrix is singular or ill-conditioned, '
            f'condition number {condition:.3g}'
        )
    inverse = numpy.linalg.inv(mat)
    result = GeneratorPair(
        -inverse @ pair.G, inverse.T @ pair.H, pair.op_b, pair.op_a
    )
    return result.verify(inverse, 1e-6)


def _same(a: NDArray[Any], b: NDArray[Any]) -> bool:
    return a.shape == b.shape and bool(numpy.array_equal(a, b))


def closure_sum(
    pair_m: GeneratorPair, pair_n: GeneratorPair, /
) -> GeneratorPair:
    """Return certificate of sum of two matrices sharing operators.

    Examples
    --------
    >>> ops = Shift(1, 3), Shift(-1, 3)
    >>> t = scipy.linalg.toeplitz([1.0, 2.0, 3.0])
    >>> closure_sum(generator_pair(t, *ops), generator_pair(t, *ops)).rank
    4

    """
    if not (
        _same(pair_m.op_a, pair_n.op_a) and _same(pair_m.op_b, pair_n.op_b)
    ):
        raise ValueError('operator mismatch, certificates of sum differ')
    return GeneratorPair(
        numpy.hstack((pair_m.G, pair_n.G)),
        numpy.hstack((pair_m.H, pair_n.H)),
        pair_m.op_a,
        pair_m.op_b,
    )


def closure_product(
    m: ArrayLike,
    n: ArrayLike,
    pair_m: GeneratorPair,
    pair_n: GeneratorPair,
    /,
) -> GeneratorPair:
    """Return certificate of product of two matrices.

    ``A @ M @ N - M @ N @ C = (A @ M - M @ B) @ N + M @ (B @ N - N @ C)``.

    Parameters
    ----------
    m, n : array_like
        Matrices certified by `pair_m` with respect to (A, B) and by
        `pair_n` with respect to (B, C).
    pair_m, pair_n : GeneratorPair
        Certificates.

    Returns
    -------
    GeneratorPair
        Generators ``([G_M, M @ G_N], [N.T @ H_M, H_N])`` with respect to
        (A, C), verified to 1e-8.

    Raises
    ------
    ValueError
        Operators do not chain.

    Examples
    --------
    >>> ops = Shift(1, 3), Shift(-1, 3)
    >>> t = scipy.linalg.toeplitz([1.0, 2.0, 3.0])
    >>> i = numpy.eye(3)
    >>> pair = closure_product(t, i, generator_pair(t, *ops),
    ...                        generator_pair(i, ops[1], ops[1]))
    >>> pair.rank
    2

    """
    mat_m = as_matrix(m, 'M')
    mat_n = as_matrix(n, 'N')
    if not _same(pair_m.op_b, pair_n.op_a):
        raise ValueError('operator chain mismatch, B of M differs from A of N')
    if mat_m.shape != pair_m.shape or mat_n.shape != pair_n.shape:
        raise ValueError(
            f'{mat_m.shape=} or {mat_n.shape=} do not match certificates'
        )
    result = GeneratorPair(
        numpy.hstack((pair_m.G, mat_m @ pair_n.G)),
        numpy.hstack((mat_n.T @ pair_m.H, pair_n.H)),
        pair_m.op_a,
        pair_n.op_b,
    )
    return result.verify(mat_m @ mat_n)


def closure_block(
    blocks: Sequence[Sequence[ArrayLike]],
    pairs: Sequence[Sequence[GeneratorPair]],
    /,
) -> tuple[NDArray[numpy.float64], GeneratorPair]:
    """Return block matrix and its certificate.

    Block ``(i, j)`` is certified with respect to ``(A_i, B_j)``.
    The block matrix is certified with respect to the block-diagonal
    operators ``diag(A_1, ..., A_k)`` and ``diag(B_1, ..., B_l)``.

    Parameters
    ----------
    blocks : sequence of sequence of array_like
        k-by-l grid of matrices.
    pairs : sequence of sequence of GeneratorPair
        Certificates of blocks.

    Returns
    -------
    matrix : ndarray
        Block matrix.
    pair : GeneratorPair
        Certificate of width equal to the sum of block widths,
        verified to 1e-8.

    Raises
    ------
    ValueError
        Grids differ in shape, or block sizes or operators are
        inconsistent within block rows or columns.

    Examples
    --------
    >>> m = numpy.ones((2, 2))
    >>> pair = generator_pair(m, Shift(0, 2), Shift(0, 2))
    >>> big, block_pair = closure_block([[m, m], [m, m]],
    ...                                 [[pair, pair], [pair, pair]])
    >>> big.shape, block_pair.rank
    ((4, 4), 4)

    """
    import scipy.linalg

    nrows = len(blocks)
    ncols = len(blocks[0]) if nrows else 0
    if (
        nrows == 0
        or ncols == 0
        or len(pairs) != nrows
        or any(len(row) != ncols for row in blocks)
        or any(len(row) != ncols for row in pairs)
    ):
        raise ValueError('blocks and certificates are not equal k-by-l grids')
    grid = [[as_matrix(blk, 'block') for blk in row] for row in blocks]
    row_ops = [pairs[i][0].op_a for i in range(nrows)]
    col_ops = [pairs[0][j].op_b for j in range(ncols)]
    for i in range(nrows):
        for j in range(ncols):
            pair = pairs[i][j]
            if grid[i][j].shape != pair.shape:
                raise ValueError(
                    f'block ({i}, {j}) shape {grid[i][j].shape} '
                    f'!= {pair.shape}'
                )
            if not _same(pair.op_a, row_ops[i]):
                raise ValueError(f'row operators differ in block ({i}, {j})')
            if not _same(pair.op_b, col_ops[j]):
                raise ValueError(
                    f'column operators differ in block ({i}, {j})'
                )
    rows = numpy.cumsum([0] + [op.shape[0] for op in row_ops])
    cols = numpy.cumsum([0] + [op.shape[0] for op in col_ops])
    g_parts = []
    h_parts = []
    for i in range(nrows):
        for j in range(ncols):
            pair = pairs[i][j]
            g = numpy.zeros((rows[-1], pair.rank))
            h = numpy.zeros((cols[-1], pair.rank))
            g[rows[i] : rows[i + 1]] = pair.G
            h[cols[j] : cols[j + 1]] = pair.H
            g_parts.append(g)
            h_parts.append(h)
    matrix = numpy.block(grid)
    result = GeneratorPair(
        numpy.hstack(g_parts),
        numpy.hstack(h_parts),
        scipy.linalg.block_diag(*row_ops),
        scipy.linalg.block_diag(*col_ops),
    )
    return matrix, result.verify(matrix)


def equivariance_check(
    phi: ArrayLike,
    a: Operator | ArrayLike,
    b: Operator | ArrayLike,
    /,
    i_max: int = 8,
) -> float:
    """Return maximum deviation of linear map from equivariance.

    Parameters
    ----------
    phi : array_like
        Linear map of shape (rows, cols).
    a, b : Operator or array_like
        Operators of sizes rows and cols.
    i_max : int, optional
        Largest power checked.

    Returns
    -------
    float
        ``max(norm(A**i @ Phi - Phi @ B**i) / norm(Phi))`` over
        ``1 <= i <= i_max`` in Frobenius norm. Maps with displacement
        rank 0 have deviation 0 up to rounding.

    Examples
    --------
    >>> equivariance_check(numpy.eye(4), Shift(1, 4), Shift(1, 4))
    0.0
    >>> equivariance_check(numpy.eye(4), Shift(1, 4), Shift(-1, 4)) > 0
    True

    """
    mat = as_matrix(phi, 'Phi')
    da = _as_dense(a)
    db = _as_dense(b)
    displacement(mat, da, db)
    norm = numpy.linalg.norm(mat)
    if norm == 0.0:
        return 0.0
    left = mat
    right = mat
    deviation = 0.0
    for _ in range(i_max):
        left = da @ left
        right = right @ db
        deviation = max(deviation, float(numpy.linalg.norm(left - right)))
    return deviation / float(norm)
