"""Near-linear time multiplication by low displacement rank matrices.

The ``ldrpy.fastmult`` module provides:

- :py:func:`krylov_transpose_multiply`, products ``K(A, v_i).T @ u_j`` for
  strictly subdiagonal `A` in O((b + r) n log**2 n + b r n log n) time
- :py:func:`krylov_multiply`, its transpose, products
  ``sum_i K(A, v_i) @ c_ij``
- :py:func:`ldr_sd_matvec`, multiplication by LDR matrices with
  subdiagonal operators
- :py:func:`ldr_td_matvec`, O(r n**2) multiplication by LDR matrices with
  tridiagonal operators
- :py:func:`circulant_matvec` and :py:func:`toeplitz_like_matvec`,
  FFT-based multiplication by f-circulant and Toeplitz-like matrices
- :py:func:`fft_accounting`, a recorder of batched FFT rounds

The Krylov products are coefficients of the polynomials
``u.T @ inv(I - A X) @ v``. For a block of width ``w`` of a subdiagonal
operator, the 2x2 polynomial matrix
``[u e_last].T @ inv(I - A X) @ [v e_first]`` is assembled bottom-up from
the matrices of its two half-width blocks. The bottom-right entry is
always a monomial ``c X**(w - 1)``, with ``c`` the product of the block's
subdiagonal entries, and is multiplied by scaling, never by FFT.
Cross terms of all blocks at one depth are summed in the frequency
domain before a single inverse transform.

"""

from __future__ import annotations

__all__ = [
    'FftRound',
    'ResolventTable',
    'circulant_matvec',
    'fft_accounting',
    'krylov_multiply',
    'krylov_transpose_multiply',
    'ldr_sd_matvec',
    'ldr_td_matvec',
    'resolvent_table',
    'toeplitz_like_matvec',
]

import contextlib
import dataclasses
import math
import warnings
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, ArrayLike, Iterator, NDArray

import numpy

from ._utils import as_matrix, check_power_of_two, is_power_of_two
from .displacement import LdrMatrix, Operator, Shift, Subdiagonal, krylov
from .linalg import batched_fft, fft


@dataclasses.dataclass(frozen=True)
class FftRound:
    """Batched FFT work performed at one depth of the fast algorithm."""

    kind: str
    """Algorithm, ``'transpose'`` or ``'multiply'``."""

    depth: int
    """Depth d, the blocks being merged have width 2**d."""

    size: int
    """Length of each transform, 2**(d + 1)."""

    items: int
    """Number of child subproblems, n / 2**d."""

    buffers: int
    """Total number of forward and inverse transforms."""


_RECORDERS: list[list[FftRound]] = []


@contextlib.contextmanager
def fft_accounting() -> Iterator[list[FftRound]]:
    """Context manager recording batched FFT rounds of the fast algorithms.

    Yields
    ------
    list of FftRound
        Rounds performed inside the context, in execution order.

    Examples
    --------
    >>> u = numpy.ones((8, 1))
    >>> with fft_accounting() as rounds:
    ...     _ = krylov_transpose_multiply(Shift(0, 8), u, u)
    >>> [(r.depth, r.size, r.items) for r in rounds]
    [(0, 2, 8), (1, 4, 4), (2, 8, 2)]

    """
    rounds: list[FftRound] = []
    _RECORDERS.append(rounds)
    try:
        yield rounds
    finally:
        for i, recorder in enumerate(_RECORDERS):
            if recorder is rounds:
                del _RECORDERS[i]
                break


def _record(kind: str, depth: int, n: int, buffers: int) -> None:
    if not _RECORDERS:
        return
    item = FftRound(kind, depth, 2 << depth, n >> depth, buffers)
    for recorder in _RECORDERS:
        recorder.append(item)


@dataclasses.dataclass(frozen=True)
class ResolventTable:
    """Per-depth data of subdiagonal resolvent that does not depend on u.

    At depth d, blocks of width ``w = 2**d`` are merged pairwise into
    ``n / (2 w)`` parent blocks.

    """

    n: int
    """Size of operator."""

    rank: int
    """Number of generator vectors v."""

    coupling: list[Any]
    """Subdiagonal entries joining the two children of each parent."""

    monomials: list[Any]
    """Coefficients c of the monomial corner entries ``c X**(w - 1)``
    of all blocks of width w."""

    spectra: list[Any]
    """FFTs of ``X * a * e_last.T @ inv(I - A_left X) @ v`` of shape
    (rank, n / (2 w), 2 w)."""


def _subdiagonal(op: Operator | ArrayLike, /) -> NDArray[numpy.float64]:
    """Return subdiagonal entries of strictly subdiagonal operator."""
    if isinstance(op, Shift):
        if op.f != 0.0:
            raise ValueError(
                f'{op.f=} != 0, use the slow Krylov path for nonzero corners'
            )
        return numpy.ones(op.n - 1)
    if isinstance(op, Subdiagonal):
        if op.corner != 0.0:
            raise ValueError(
                f'{op.corner=} != 0, '
                'use the slow Krylov path for nonzero corners'
            )
        return numpy.asarray(op.sub)
    if isinstance(op, Operator):
        raise TypeError(f'{type(op).__name__} is not a subdiagonal operator')
    sub = numpy.asarray(op, dtype=numpy.float64)
    if sub.ndim != 1:
        raise ValueError(f'{sub.ndim=} != 1')
    return sub


def _check_sizes(sub: NDArray[Any], *arrays: NDArray[Any]) -> int:
    n = sub.size + 1
    if not is_power_of_two(n):
        raise ValueError(
            f'{n=} is not a power of two, use the slow Krylov path'
        )
    for a in arrays:
        if a.shape[0] != n:
            raise ValueError(f'{a.shape=} does not match operator size {n}')
    return n


def resolvent_table(
    op: Subdiagonal | Shift | ArrayLike,
    v: ArrayLike,
    /,
    *,
    num_threads: int | None = None,
) -> ResolventTable:
    """Return per-depth resolvent data of strictly subdiagonal operator.

    Parameters
    ----------
    op : Subdiagonal, Shift, or array_like
        Strictly subdiagonal operator of power-of-two size n, or its
        n - 1 subdiagonal entries.
    v : array_like
        Generators of shape (n, r).
    num_threads : int, optional
        Number of threads for batched FFTs.

    Returns
    -------
    ResolventTable

    """
    sub = _subdiagonal(op)
    gen = as_matrix(v, 'v')
    n = _check_sizes(sub, gen)
    r = gen.shape[1]
    p10 = gen.T.reshape(r, n, 1).copy()
    c = numpy.ones(n)
    coupling = []
    monomials = []
    spectra = []
    w = 1
    while w < n:
        nodes = n // (2 * w)
        a = sub[w - 1 :: 2 * w]
        left = p10[:, 0::2]
        f10 = numpy.zeros((r, nodes, 2 * w))
        f10[:, :, 1 : w + 1] = left * a[:, None]
        coupling.append(a)
        monomials.append(c)
        spectra.append(batched_fft(f10, num_threads=num_threads))
        c_right = c[1::2]
        p10 = numpy.concatenate(
            (p10[:, 1::2], (a * c_right)[:, None] * left), axis=-1
        )
        c = c[0::2] * a * c_right
        w *= 2
    return ResolventTable(n, r, coupling, monomials, spectra)


def krylov_transpose_multiply(
    op: Subdiagonal | Shift | ArrayLike,
    v: ArrayLike,
    u: ArrayLike,
    /,
    *,
    num_threads: int | None = None,
) -> NDArray[numpy.float64]:
    """Return products of transposed Krylov matrices with vectors.

    Parameters
    ----------
    op : Subdiagonal, Shift, or array_like
        Strictly subdiagonal operator `A` of power-of-two size n, or its
        subdiagonal entries.
    v : array_like
        Generators of shape (n, r).
    u : array_like
        Inputs of shape (n, b).
    num_threads : int, optional
        Number of threads for batched FFTs.

    Returns
    -------
    ndarray
        Array of shape (r, b, n). ``result[i, j]`` equals
        ``krylov(A, v[:, i]).T @ u[:, j]``, the coefficients of the
        polynomial ``u_j.T @ inv(I - A X) @ v_i``.

    Raises
    ------
    ValueError
        n is not a power of two or the operator has a nonzero corner.
        Use :py:func:`ldr_td_matvec` or :py:func:`ldrpy.displacement.krylov`
        in these cases.

    Examples
    --------
    >>> v = numpy.array([[1.0], [2.0]])
    >>> krylov_transpose_multiply(Subdiagonal([0.0]), v, [[3.0], [4.0]])
    array([[[11, 0]]])

    """
    sub = _subdiagonal(op)
    gen = as_matrix(v, 'v')
    inputs = as_matrix(u, 'u')
    n = _check_sizes(sub, gen, inputs)
    table = resolvent_table(sub, gen, num_threads=num_threads)
    r = gen.shape[1]
    b = inputs.shape[1]
    result = numpy.zeros((r, b, n))
    result[:, :, 0] = gen.T @ inputs
    p01 = inputs.T.reshape(b, n, 1).copy()
    for depth, (a, c, spectrum) in enumerate(
        zip(table.coupling, table.monomials, table.spectra)
    ):
        w = 1 << depth
        nodes = n // (2 * w)
        f01 = numpy.zeros((b, nodes, 2 * w))
        f01[:, :, :w] = p01[:, 1::2]
        cross = numpy.einsum(
            'rpk,bpk->rbk',
            spectrum,
            batched_fft(f01, num_threads=num_threads),
        )
        result[:, :, : 2 * w] += batched_fft(
            cross, inverse=True, num_threads=num_threads
        ).real
        _record('transpose', depth, n, (r + b) * nodes + r * b)
        p01 = numpy.concatenate(
            (p01[:, 0::2], (a * c[0::2])[:, None] * p01[:, 1::2]), axis=-1
        )
    return result


def krylov_multiply(
    op: Subdiagonal | Shift | ArrayLike,
    v: ArrayLike,
    coeffs: ArrayLike,
    /,
    *,
    num_threads: int | None = None,
) -> NDArray[numpy.float64]:
    """Return sums of products of Krylov matrices with coefficient vectors.

    This is the transpose of :py:func:`krylov_transpose_multiply` in its
    `u` argument, computed by reversing its steps.

    Parameters
    ----------
    op : Subdiagonal, Shift, or array_like
        Strictly subdiagonal operator `A` of power-of-two size n, or its
        subdiagonal entries.
    v : array_like
        Generators of shape (n, r).
    coeffs : array_like
        Coefficients of shape (r, b, n).
    num_threads : int, optional
        Number of threads for batched FFTs.

    Returns
    -------
    ndarray
        Array of shape (n, b). Column j equals
        ``sum(krylov(A, v[:, i]) @ coeffs[i, j] for i in range(r))``.

    Raises
    ------
    ValueError
        n is not a power of two or the operator has a nonzero corner.

    Examples
    --------
    >>> v = numpy.array([[1.0], [2.0]])
    >>> krylov_multiply(Subdiagonal([0.0]), v, [[[3.0, 4.0]]])
    array([[3],
           [6]])

    """
    sub = _subdiagonal(op)
    gen = as_matrix(v, 'v')
    c = numpy.asarray(coeffs, dtype=numpy.float64)
    n = _check_sizes(sub, gen)
    r = gen.shape[1]
    if c.ndim != 3 or c.shape[0] != r or c.shape[2] != n:
        raise ValueError(f'{c.shape=} does not match ({r}, b, {n})')
    b = c.shape[1]
    table = resolvent_table(sub, gen, num_threads=num_threads)
    result = gen @ c[:, :, 0]
    grad = numpy.zeros((b, 1, n))
    for depth in reversed(range(len(table.spectra))):
        w = 1 << depth
        nodes = n // (2 * w)
        ac = table.coupling[depth] * table.monomials[depth][0::2]
        even = grad[:, :, :w]
        odd = ac[:, None] * grad[:, :, w:]
        cross = numpy.einsum(
            'rpk,rbk->bpk',
            table.spectra[depth].conj(),
            batched_fft(c[:, :, : 2 * w], num_threads=num_threads),
        )
        odd = (
            odd
            + batched_fft(cross, inverse=True, num_threads=num_threads).real[
                :, :, :w
            ]
        )
        _record('multiply', depth, n, (r + b) * nodes + r * b)
        grad = numpy.stack((even, odd), axis=2).reshape(b, 2 * nodes, w)
    result += grad[:, :, 0].T
    return result


def ldr_sd_matvec(
    m: LdrMatrix,
    x: ArrayLike,
    /,
    *,
    num_threads: int | None = None,
) -> NDArray[numpy.float64]:
    """Return product of LDR matrix with subdiagonal operators and inputs.

    One transpose multiplication with operator `B` and one multiplication
    with operator `A` are performed:
    ``K(B.T, h).T @ x = K(J B.T J, J h).T @ J x``, where `J` reverses the
    order of rows and ``J B.T J`` is subdiagonal.

    Parameters
    ----------
    m : LdrMatrix
        Matrix with :py:class:`Subdiagonal` or :py:class:`Shift` operators.
    x : array_like
        Vector of length n or inputs of shape (n, b).
    num_threads : int, optional
        Number of threads for batched FFTs.

    Returns
    -------
    ndarray
        ``reconstruct(m) @ x``.
        If n is not a power of two or an operator has a nonzero corner,
        the O(r n**2) Krylov path is used. A warning is issued for nonzero
        corners.

    Raises
    ------
    TypeError
        Operators are not subdiagonal.

    Examples
    --------
    >>> e0 = numpy.eye(4)[:, :1]
    >>> y = ldr_sd_matvec(LdrMatrix(Shift(0, 4), Shift(0, 4), e0, e0), e0)
    >>> bool(numpy.allclose(y, e0))
    True

    """
    for op in (m.op_a, m.op_b):
        if not isinstance(op, (Shift, Subdiagonal)):
            raise TypeError(
                f'{type(op).__name__} is not a subdiagonal operator'
            )
    inputs = numpy.asarray(x, dtype=numpy.float64)
    vector = inputs.ndim == 1
    if vector:
        inputs = inputs[:, None]
    if inputs.ndim != 2 or inputs.shape[0] != m.n:
        raise ValueError(f'{inputs.shape=} does not match {m.n=}')
    corners = [
        op.f if isinstance(op, Shift) else op.corner
        for op in (m.op_a, m.op_b)
    ]
    if any(corners):
        warnings.warn(
            'operator with nonzero corner, using O(n**2) Krylov path',
            stacklevel=2,
        )
        y = ldr_td_matvec(m, inputs)
    elif not is_power_of_two(m.n):
        y = ldr_td_matvec(m, inputs)
    else:
        sub_b = _subdiagonal(m.op_b)[::-1]
        t = krylov_transpose_multiply(
            sub_b, m.H[::-1], inputs[::-1], num_threads=num_threads
        )
        y = krylov_multiply(
            _subdiagonal(m.op_a), m.G, t, num_threads=num_threads
        )
    return y[:, 0] if vector else y


def ldr_td_matvec(m: LdrMatrix, x: ArrayLike, /) -> NDArray[numpy.float64]:
    """Return product of LDR matrix with inputs via explicit Krylov matrices.

    Parameters
    ----------
    m : LdrMatrix
        Matrix with operators of any variant, typically
        :py:class:`TridiagonalCorners`.
    x : array_like
        Vector of length n or inputs of shape (n, b).

    Returns
    -------
    ndarray
        ``reconstruct(m) @ x`` computed in O(r n**2) time.

    Examples
    --------
    >>> e0 = [[1.0], [0.0]]
    >>> m = LdrMatrix(Shift(1, 2), Shift(1, 2), e0, e0)
    >>> ldr_td_matvec(m, [1.0, 2.0])
    array([1, 2])

    """
    inputs = numpy.asarray(x, dtype=numpy.float64)
    if inputs.ndim not in {1, 2} or inputs.shape[0] != m.n:
        raise ValueError(f'{inputs.shape=} does not match {m.n=}')
    ka = krylov(m.op_a, m.G)
    kb = krylov(m.op_b, m.H, transpose=True)
    t = numpy.einsum('ink,n...->ik...', kb, inputs)
    return numpy.einsum('ink,ik...->n...', ka, t)


def circulant_matvec(
    f: float, v: ArrayLike, x: ArrayLike, /
) -> NDArray[numpy.float64]:
    """Return product of f-circulant matrix with vector.

    The f-circulant matrix ``krylov(Shift(f, n), v)`` is diagonalized by
    the FFT after scaling with the n-th roots of `f`.
    For ``f == 0``, the lower triangular Toeplitz product is computed as a
    zero-padded convolution.

    Parameters
    ----------
    f : float
        Corner value of shift operator.
    v : array_like
        First column of the f-circulant matrix, length n, power of two.
    x : array_like
        Vector of length n or matrix with n rows.

    Returns
    -------
    ndarray
        ``krylov(Shift(f, n), v) @ x``.

    Raises
    ------
    ValueError
        n is not a power of two or sizes do not match.

    Examples
    --------
    >>> circulant_matvec(1.0, [0, 1, 0, 0], [1.0, 2.0, 3.0, 4.0]).round(12)
    array([4, 1, 2, 3])

    """
    col = numpy.asarray(v, dtype=numpy.float64)
    inputs = numpy.asarray(x, dtype=numpy.float64)
    if col.ndim != 1:
        raise ValueError(f'{col.ndim=} != 1')
    n = check_power_of_two(col.size)
    if inputs.ndim not in {1, 2} or inputs.shape[0] != n:
        raise ValueError(f'{inputs.shape=} does not match {n=}')
    shape = (n,) + (1,) * (inputs.ndim - 1)
    f = float(f)
    if f == 0.0:
        pad = ((0, n),) + ((0, 0),) * (inputs.ndim - 1)
        spectrum = fft(numpy.pad(col, (0, n))).reshape((2 * n,) + shape[1:])
        y = fft(spectrum * fft(numpy.pad(inputs, pad), axis=0), True, axis=0)
        return numpy.ascontiguousarray(y[:n].real)
    index = numpy.arange(n) / n
    root = abs(f) ** index
    if f < 0.0:
        root = root * numpy.exp(1j * math.pi * index)
    spectrum = fft(root * col).reshape(shape)
    root = root.reshape(shape)
    y = fft(spectrum * fft(root * inputs, axis=0), True, axis=0) / root
    return numpy.ascontiguousarray(y.real)


def toeplitz_like_matvec(
    g: ArrayLike, h: ArrayLike, x: ArrayLike, /
) -> NDArray[numpy.float64]:
    """Return product of Toeplitz-like matrix given by generators.

    The matrix M solves ``Z_1 @ M - M @ Z_-1 = G @ H.T``. It equals
    ``0.5 * Z_1.T @ sum(C_1(g_i) @ R @ C_-1(h_i) @ P)``, where ``C_f`` are
    f-circulant matrices, ``R`` reverses entries 1 to n - 1, and ``P``
    additionally negates them. 2r circulant products are computed.

    The generators are those of the displacement residual with respect to
    ``(Z_1, Z_-1)``. They are not the generators of the Krylov product
    ``LdrMatrix(Shift(1, n), Shift(-1, n), G, H)``, which is a different
    matrix.

    Parameters
    ----------
    g, h : array_like
        Generators of shape (n, r), n a power of two.
    x : array_like
        Vector of length n or matrix with n rows.

    Returns
    -------
    ndarray
        ``M @ x``.

    See Also
    --------
    ldrpy.classes.toeplitz_like_ldr :
        LdrMatrix representing the same matrix, used as oracle.

    Examples
    --------
    >>> from ldrpy.displacement import displacement
    >>> t = scipy.linalg.toeplitz([1.0, 2.0, 3.0, 4.0], [1.0, 5.0, 6.0, 7.0])
    >>> r = displacement(t, Shift(1, 4), Shift(-1, 4))
    >>> u, s, vt = numpy.linalg.svd(r)
    >>> y = toeplitz_like_matvec(u[:, :2] * s[:2], vt[:2].T, [1, 0, 0, 0])
    >>> bool(numpy.allclose(y, t[:, 0]))
    True

    """
    gen_g = as_matrix(g, 'G')
    gen_h = as_matrix(h, 'H')
    inputs = numpy.asarray(x, dtype=numpy.float64)
    if gen_g.shape != gen_h.shape:
        raise ValueError(f'{gen_g.shape=} != {gen_h.shape=}')
    n = check_power_of_two(gen_g.shape[0])
    if inputs.ndim not in {1, 2} or inputs.shape[0] != n:
        raise ValueError(f'{inputs.shape=} does not match {n=}')
    flipped = numpy.concatenate((inputs[:1], -inputs[:0:-1]))
    y = numpy.zeros_like(inputs)
    for i in range(gen_g.shape[1]):
        t = circulant_matvec(-1.0, gen_h[:, i], flipped)
        t = numpy.concatenate((t[:1], t[:0:-1]))
        y += circulant_matvec(1.0, gen_g[:, i], t)
    return 0.5 * numpy.roll(y, -1, axis=0)
