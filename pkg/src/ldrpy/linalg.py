"""Dense linear algebra and transform primitives.

The ``ldrpy.linalg`` module provides the primitives that the structured
matrix modules build on:

- :py:func:`fft`, iterative radix-2 complex fast Fourier transform
- :py:func:`batched_fft`, many equal-size transforms in one operation
- :py:func:`poly_mult`, polynomial multiplication by convolution
- :py:func:`dense_matvec`, checked dense matrix product
- :py:func:`numerical_rank`, singular value based rank

The FFT is implemented in numpy rather than delegated to
:py:mod:`numpy.fft` so that the fast multiplication algorithms can
account for and instrument every transform they perform.

"""

from __future__ import annotations

__all__ = [
    'batched_fft',
    'dense_matvec',
    'fault_injection',
    'fft',
    'numerical_rank',
    'poly_mult',
]

import contextlib
import functools
import math
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, ArrayLike, Iterator, NDArray, Sequence

import numpy

from ._utils import check_power_of_two
from .utils import number_threads

_FAULTS: set[str] = set()
"""Names of active test faults, see :py:func:`fault_injection`."""


@contextlib.contextmanager
def fault_injection(name: str, /) -> Iterator[None]:
    """Context manager activating a deliberate numeric fault.

    Used to verify that the property suites detect corrupted kernels.

    Parameters
    ----------
    name : str
        Fault to activate. Currently only ``'twiddle'``, which perturbs
        the second twiddle factor of every FFT stage of size 4 or larger.

    Examples
    --------
    >>> x = numpy.arange(8.0)
    >>> with fault_injection('twiddle'):
    ...     bad = fft(x)
    >>> bool(numpy.allclose(bad, fft(x)))
    False

    """
    if name not in {'twiddle'}:
        raise ValueError(f'unknown fault {name!r}')
    _FAULTS.add(name)
    try:
        yield
    finally:
        _FAULTS.discard(name)


def fft(
    buf: ArrayLike, /, inverse: bool = False, *, axis: int = -1
) -> NDArray[numpy.complex128]:
    r"""Return discrete Fourier transform of complex buffer.

    The iterative radix-2 decimation-in-time algorithm is applied along
    one axis. Other axes are transformed independently.

    Parameters
    ----------
    buf : array_like
        Real or complex input. The length along `axis` must be a power
        of two.
    inverse : bool, optional
        Compute the inverse transform, which divides by the length.
    axis : int, optional
        Axis over which to compute the transform. The default is the last.

    Returns
    -------
    ndarray
        Complex transform of `buf`:

        .. math::

            X_k = \sum_j x_j e^{-2 \pi i j k / N}

    Raises
    ------
    ValueError
        Length of `buf` along `axis` is not a power of two.

    Examples
    --------
    >>> fft([1, 0, 0, 0]).real
    array([1, 1, 1, 1])
    >>> fft(fft([1.0, 2.0]), inverse=True).real
    array([1, 2])

    """
    x = numpy.asarray(buf)
    if x.ndim == 0:
        raise ValueError('buffer is not an array')
    x = numpy.moveaxis(x, axis, -1)
    n = check_power_of_two(x.shape[-1], 'len')
    fault = 'twiddle' in _FAULTS
    shape = x.shape
    # bit-reversal permutation makes a copy
    x = x.astype(numpy.complex128, copy=False)[..., _bit_reverse(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddles = _twiddles(size, inverse, fault)
        y = x.reshape(shape[:-1] + (n // size, size))
        even = y[..., :half]
        odd = y[..., half:] * twiddles
        x = numpy.concatenate((even + odd, even - odd), axis=-1)
        size *= 2
    x = x.reshape(shape)
    if inverse:
        x /= n
    return numpy.moveaxis(x, -1, axis)


def batched_fft(
    bufs: ArrayLike | Sequence[ArrayLike],
    /,
    inverse: bool = False,
    *,
    num_threads: int | None = None,
) -> NDArray[numpy.complex128]:
    """Return discrete Fourier transforms of k buffers of equal size.

    Parameters
    ----------
    bufs : array_like or sequence of array_like
        Buffers to transform. The last dimension of an array is the
        transform axis; all leading dimensions are batch dimensions.
        A sequence must contain one-dimensional buffers of equal
        power-of-two length.
    inverse : bool, optional
        Compute inverse transforms.
    num_threads : int, optional
        Number of threads used to process batch items concurrently.
        By default, multi-threading is disabled.
        If zero, up to half of logical CPUs are used.

    Returns
    -------
    ndarray
        Transforms of shape ``(k, m)`` or shape of `bufs`.
        ``result[i]`` equals ``fft(bufs[i])``.

    Raises
    ------
    ValueError
        Buffers differ in size or the size is not a power of two.

    Examples
    --------
    >>> batched_fft([[1, 0], [0, 1]]).real
    array([[1, 1],
           [1, -1]])
    >>> batched_fft([[1, 0], [0, 1, 0, 0]])
    Traceback (most recent call last):
     ...
    ValueError: buffers differ in size {2, 4}

    """
    if isinstance(bufs, numpy.ndarray):
        x = bufs
    else:
        items = [numpy.asarray(b) for b in bufs]
        sizes = {item.shape[-1] if item.ndim else 0 for item in items}
        if len(sizes) > 1:
            raise ValueError(f'buffers differ in size {sizes}')
        if any(item.ndim != 1 for item in items):
            raise ValueError('buffers are not one-dimensional')
        x = numpy.stack(items)
    if x.ndim < 2:
        return fft(x, inverse)
    num_threads = number_threads(num_threads)
    batch = x.shape[0]
    if num_threads < 2 or batch < 2:
        return fft(x, inverse)

    from concurrent.futures import ThreadPoolExecutor

    chunks = numpy.array_split(x, min(num_threads, batch), axis=0)
    with ThreadPoolExecutor(num_threads) as executor:
        results = list(
            executor.map(functools.partial(fft, inverse=inverse), chunks)
        )
    return numpy.concatenate(results, axis=0)


def poly_mult(p: ArrayLike, q: ArrayLike, /) -> NDArray[numpy.float64]:
    """Return coefficients of product of two polynomials.

    The product is computed as a zero-padded FFT convolution.

    Parameters
    ----------
    p, q : array_like
        Polynomial coefficients. Index i is the coefficient of X**i.
        Leading coefficients may be zero.

    Returns
    -------
    ndarray
        Coefficients of ``p * q`` of length ``len(p) + len(q) - 1``.

    Examples
    --------
    >>> numpy.allclose(poly_mult([1, 1], [1, -1]), [1, 0, -1])
    True
    >>> poly_mult([1, 2, 3], [1]).shape
    (3,)

    """
    a = numpy.asarray(p, dtype=numpy.float64)
    b = numpy.asarray(q, dtype=numpy.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError(f'{a.ndim=} or {b.ndim=} != 1')
    if a.size == 0 or b.size == 0:
        return numpy.zeros(0)
    length = a.size + b.size - 1
    size = 1 << (length - 1).bit_length()
    fa = fft(numpy.pad(a, (0, size - a.size)))
    fb = fft(numpy.pad(b, (0, size - b.size)))
    product = fft(fa * fb, inverse=True).real[:length]
    return numpy.ascontiguousarray(product)


def dense_matvec(m: ArrayLike, x: ArrayLike, /) -> NDArray[numpy.float64]:
    """Return product of dense matrix with vector or matrix.

    Parameters
    ----------
    m : array_like
        Matrix of shape (rows, cols).
    x : array_like
        Vector of length cols or matrix of shape (cols, b).

    Returns
    -------
    ndarray
        ``m @ x``.

    Raises
    ------
    ValueError
        Dimensions do not agree.

    Examples
    --------
    >>> dense_matvec(numpy.eye(2), [3.0, 4.0])
    array([3, 4])

    """
    a = numpy.asarray(m, dtype=numpy.float64)
    v = numpy.asarray(x, dtype=numpy.float64)
    if a.ndim != 2:
        raise ValueError(f'{a.ndim=} != 2')
    if v.ndim not in {1, 2} or v.shape[0] != a.shape[1]:
        raise ValueError(f'{a.shape=} does not match {v.shape=}')
    return a @ v


def numerical_rank(
    m: ArrayLike,
    /,
    rel_tol: float | None = None,
    *,
    atol: float = 0.0,
) -> int:
    """Return number of singular values above tolerance.

    Parameters
    ----------
    m : array_like
        Finite two-dimensional matrix.
    rel_tol : float, optional
        Tolerance relative to the largest singular value.
        The default is ``1e-9 * max(rows, cols)``.
    atol : float, optional
        Absolute tolerance. Singular values must also exceed `atol`.
        Use it to measure the rank of residuals that may vanish up to
        rounding errors.

    Returns
    -------
    int
        Count of singular values ``s > max(rel_tol * s.max(), atol)``.
        The rank of a zero matrix is 0.

    Raises
    ------
    numpy.linalg.LinAlgError
        Singular value decomposition did not converge.

    Examples
    --------
    >>> numerical_rank(numpy.eye(4))
    4
    >>> numerical_rank(numpy.outer([1, 2, 3], [4, 5, 6]))
    1
    >>> numerical_rank(numpy.zeros((3, 3)))
    0

    """
    a = numpy.asarray(m, dtype=numpy.float64)
    if a.ndim != 2:
        raise ValueError(f'{a.ndim=} != 2')
    if not numpy.all(numpy.isfinite(a)):
        raise ValueError('matrix contains non-finite entries')
    if a.size == 0:
        return 0
    if rel_tol is None:
        rel_tol = 1e-9 * max(a.shape)
    sv = numpy.linalg.svd(a, compute_uv=False)
    smax = float(sv[0])
    if smax == 0.0:
        return 0
    return int(numpy.count_nonzero(sv > max(rel_tol * smax, atol)))


@functools.lru_cache(maxsize=64)
def _bit_reverse(n: int, /) -> NDArray[numpy.intp]:
    """Return bit-reversal permutation of range(n).

    >>> _bit_reverse(8).tolist()
    [0, 4, 2, 6, 1, 5, 3, 7]

    """
    bits = n.bit_length() - 1
    index = numpy.arange(n)
    result = numpy.zeros(n, dtype=numpy.intp)
    for _ in range(bits):
        result = (result << 1) | (index & 1)
        index >>= 1
    result.flags.writeable = False
    return result


@functools.lru_cache(maxsize=128)
def _twiddles(
    size: int, inverse: bool, fault: bool, /
) -> NDArray[numpy.complex128]:
    """Return twiddle factors of butterfly stage."""
    sign = 1.0 if inverse else -1.0
    twiddles = numpy.exp(sign * 2j * math.pi * numpy.arange(size // 2) / size)
    if fault and size >= 4:
        twiddles[1] *= 1.01
    twiddles.flags.writeable = False
    return twiddles
