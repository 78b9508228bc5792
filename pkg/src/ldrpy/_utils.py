"""Private utility functions.

The ``ldrpy._utils`` module provides private auxiliary and convenience
functions.

"""

from __future__ import annotations

__all__: list[str] = [
    'is_power_of_two',
    'check_power_of_two',
    'as_matrix',
    'as_square',
    'format_float',
    'kwargs_notnone',
]

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, ArrayLike, NDArray

import numpy


def is_power_of_two(n: int, /) -> bool:
    """Return whether integer is a positive power of two.

    >>> is_power_of_two(1), is_power_of_two(12), is_power_of_two(16)
    (True, False, True)

    """
    return n > 0 and (n & (n - 1)) == 0


def check_power_of_two(n: int, /, name: str = 'n') -> int:
    """Return `n` or raise ValueError if it is not a power of two.

    >>> check_power_of_two(8)
    8
    >>> check_power_of_two(6, 'size')
    Traceback (most recent call last):
     ...
    ValueError: size=6 is not a power of two

    """
    if not is_power_of_two(n):
        raise ValueError(f'{name}={n} is not a power of two')
    return n


def as_matrix(a: ArrayLike, /, name: str = 'matrix') -> NDArray[Any]:
    """Return finite two-dimensional float64 array.

    >>> as_matrix([[1, 2], [3, 4]])
    array([[1, 2],
           [3, 4]])

    """
    m = numpy.asarray(a, dtype=numpy.float64)
    if m.ndim != 2:
        raise ValueError(f'{name} is not two-dimensional, {m.shape=}')
    if not numpy.all(numpy.isfinite(m)):
        raise ValueError(f'{name} contains non-finite entries')
    return m


def as_square(a: ArrayLike, /, name: str = 'matrix') -> NDArray[Any]:
    """Return finite square float64 array.

    >>> as_square([[1, 2]])
    Traceback (most recent call last):
     ...
    ValueError: matrix is not square, m.shape=(1, 2)

    """
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f'{name} is not square, {m.shape=}')
    return m


def format_float(value: float, /) -> str:
    """Return locale-independent shortest round-trip string of float.

    >>> format_float(0.1), format_float(numpy.float64(2)), format_float(-0.0)
    ('0.1', '2.0', '-0.0')

    """
    return repr(float(value))


def kwargs_notnone(**kwargs: Any) -> dict[str, Any]:
    """Return dict of kwargs which values are not None.

    >>> kwargs_notnone(one=1, none=None)
    {'one': 1}

    """
    return dict(item for item in kwargs.items() if item[1] is not None)
