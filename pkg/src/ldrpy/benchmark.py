"""Time matrix-vector multiplication by structured matrices.

The ``ldrpy.benchmark`` module provides:

- :py:class:`BenchConfig`, sizes, ranks, classes, and repetitions of a
  benchmark run
- :py:func:`run_benchmark`, timing rows of structured multiplication
  relative to unstructured dense multiplication
- :py:data:`REFERENCE_SPEEDUPS`, published speedups of the structured
  classes on a single CPU thread, for comparison

Each multiplication is run `trials` times in a loop, the loop is repeated
`repeats` times, and the minimum total runtime divided by `trials` is
reported. Warm-up calls preceding the timed loops are not timed.
The batch size is one.

"""

from __future__ import annotations

__all__ = [
    'BENCH_CLASSES',
    'REFERENCE_SPEEDUPS',
    'BenchConfig',
    'BenchRow',
    'reference_speedup',
    'run_benchmark',
    'time_matvec',
]

import dataclasses
import math
import time
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, Callable, Iterator, NDArray

import numpy

from ._utils import check_power_of_two
from .displacement import LdrMatrix, Subdiagonal
from .fastmult import ldr_sd_matvec, toeplitz_like_matvec
from .linalg import dense_matvec

BENCH_CLASSES = ('unstructured', 'low-rank', 'toeplitz-like', 'ldr-sd')
"""Classes that can be benchmarked."""

REFERENCE_RANKS = (1, 2, 4, 8, 16)

REFERENCE_SPEEDUPS: dict[str, dict[int, tuple[float, ...]]] = {
    'low-rank': {
        9: (51.5, 24.3, 24.6, 20.8, 18.1),
        10: (139.0, 54.1, 56.6, 46.2, 34.3),
        11: (414.0, 160.0, 171.0, 105.0, 69.0),
        12: (2380.0, 871.0, 746.0, 473.0, 359.0),
        13: (5960.0, 1750.0, 1650.0, 1130.0, 886.0),
        14: (8350.0, 3440.0, 3400.0, 2290.0, 1740.0),
        15: (17900.0, 7500.0, 7530.0, 4910.0, 3700.0),
    },
    'toeplitz-like': {
        9: (0.306, 0.260, 0.232, 0.186, 0.161),
        10: (0.734, 0.621, 0.518, 0.400, 0.328),
        11: (1.90, 1.71, 1.38, 1.08, 0.846),
        12: (12.3, 10.1, 7.92, 5.97, 4.62),
        13: (33.4, 27.3, 22.6, 15.2, 12.3),
        14: (69.6, 56.8, 41.9, 30.0, 22.6),
        15: (149.0, 119.0, 90.7, 54.6, 38.2),
    },
    'ldr-sd': {
        9: (0.0668, 0.0463, 0.0405, 0.0310, 0.0256),
        10: (0.149, 0.120, 0.0945, 0.0673, 0.0524),
        11: (0.499, 0.432, 0.302, 0.194, 0.137),
        12: (3.34, 2.57, 1.61, 1.06, 0.752),
        13: (9.71, 6.61, 4.40, 2.46, 1.68),
        14: (21.2, 14.1, 8.38, 4.35, 3.00),
        15: (46.1, 28.2, 16.0, 8.58, 5.70),
    },
}
"""Published speedups over unstructured multiplication.

Keyed by class and log2 of size. Values are for ranks
:py:data:`REFERENCE_RANKS`.

"""


def reference_speedup(kind: str, n: int, rank: int, /) -> float | None:
    """Return published speedup of class over unstructured multiplication.

    Returns None if no value is published for size and rank.

    Examples
    --------
    >>> reference_speedup('ldr-sd', 2**15, 1)
    46.1
    >>> reference_speedup('unstructured', 8, 3)
    1.0
    >>> reference_speedup('ldr-sd', 8, 1) is None
    True

    """
    if kind == 'unstructured':
        return 1.0
    table = REFERENCE_SPEEDUPS.get(kind, {})
    log2n = n.bit_length() - 1
    if (
        n < 1
        or n != 1 << log2n
        or log2n not in table
        or rank not in REFERENCE_RANKS
    ):
        return None
    return table[log2n][REFERENCE_RANKS.index(rank)]


@dataclasses.dataclass(frozen=True)
class BenchConfig:
    """Configuration of benchmark run.

    Parameters
    ----------
    sizes : sequence of int
        Matrix sizes, powers of two.
    ranks : sequence of int
        Displacement ranks of structured classes.
    classes : sequence of str
        Classes to time, subset of :py:data:`BENCH_CLASSES`.
    trials : int
        Number of multiplications per timed loop.
    repeats : int
        Number of timed loops. The minimum is reported.
    warmup : int
        Number of untimed multiplications before the timed loops.
    seed : int
        Seed of random matrix parameters and input vectors.

    """

    sizes: tuple[int, ...] = tuple(2**i for i in range(9, 16))
    ranks: tuple[int, ...] = REFERENCE_RANKS
    classes: tuple[str, ...] = BENCH_CLASSES
    trials: int = 1000
    repeats: int = 10
    warmup: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        for key in ('sizes', 'ranks', 'classes'):
            object.__setattr__(self, key, tuple(getattr(self, key)))
        if not self.sizes:
            raise ValueError('no sizes')
        for n in self.sizes:
            check_power_of_two(n)
        if not self.ranks or min(self.ranks) < 1:
            raise ValueError(f'invalid ranks={self.ranks}')
        unknown = [kind for kind in self.classes if kind not in BENCH_CLASSES]
        if not self.classes or unknown:
            raise ValueError(
                f'invalid classes {unknown or self.classes}, '
                f'expected subset of {BENCH_CLASSES}'
            )
        if self.trials < 1:
            raise ValueError(f'{self.trials=} < 1')
        if self.repeats < 1:
            raise ValueError(f'{self.repeats=} < 1')
        if self.warmup < 0:
            raise ValueError(f'{self.warmup=} < 0')


@dataclasses.dataclass(frozen=True)
class BenchRow:
    """Timing of one class, size, and rank.

    ``ns_per_matvec`` and ``speedup`` are None for skipped rows.
    ``speedup`` is also None if the unstructured baseline was skipped.

    """

    kind: str
    n: int
    rank: int
    ns_per_matvec: float | None
    speedup: float | None
    reference_speedup: float | None
    status: str = 'ok'

    FIELDS = (
        'class',
        'n',
        'r',
        'ns_per_matvec',
        'speedup',
        'reference_speedup',
        'status',
    )
    """CSV column names."""

    def values(self) -> tuple[Any, ...]:
        """Return values in order of :py:attr:`FIELDS`."""
        return (
            self.kind,
            self.n,
            self.rank,
            self.ns_per_matvec,
            self.speedup,
            self.reference_speedup,
            self.status,
        )


def time_matvec(
    func: Callable[[Any], Any],
    x: Any,
    /,
    trials: int,
    repeats: int,
    warmup: int = 0,
) -> float:
    """Return minimum over repeats of runtime per call in nanoseconds.

    Examples
    --------
    >>> time_matvec(abs, -1.0, trials=10, repeats=3) >= 0.0
    True

    """
    for _ in range(warmup):
        func(x)
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter_ns()
        for _ in range(trials):
            func(x)
        best = min(best, time.perf_counter_ns() - start)
    return best / trials


def _matvec(
    kind: str, n: int, rank: int, rng: numpy.random.Generator
) -> Callable[[NDArray[Any]], NDArray[Any]]:
    """Return multiplication by random matrix of class."""
    if kind == 'unstructured':
        dense = rng.standard_normal((n, n))
        return lambda x: dense_matvec(dense, x)
    g = rng.standard_normal((n, rank))
    h = rng.standard_normal((n, rank))
    if kind == 'low-rank':
        ht = numpy.ascontiguousarray(h.T)
        return lambda x: g @ (ht @ x)
    if kind == 'toeplitz-like':
        return lambda x: toeplitz_like_matvec(g, h, x)
    m = LdrMatrix(
        Subdiagonal(rng.uniform(-1.0, 1.0, n - 1)),
        Subdiagonal(rng.uniform(-1.0, 1.0, n - 1)),
        g,
        h,
    )
    return lambda x: ldr_sd_matvec(m, x, num_threads=1)


def run_benchmark(config: BenchConfig, /) -> Iterator[BenchRow]:
    """Yield timing rows of benchmark run.

    For each size, the unstructured baseline is timed once and shared by
    all ranks. Rows are yielded by size, then class in order of
    ``config.classes``, then rank. A size or class that runs out of memory
    yields rows with status ``'skipped: out of memory'``.

    Parameters
    ----------
    config : BenchConfig
        Benchmark configuration.

    Yields
    ------
    BenchRow
        Timing of class, size, and rank.

    Examples
    --------
    >>> config = BenchConfig([8], [1], ['unstructured', 'ldr-sd'], 2, 2)
    >>> [(row.kind, row.rank, row.speedup) for row in run_benchmark(config)]
    ... # doctest: +ELLIPSIS
    [('unstructured', 1, 1.0), ('ldr-sd', 1, ...)]

    """
    for n in config.sizes:
        rng = numpy.random.default_rng([config.seed, n])
        x = rng.standard_normal(n)
        baseline: float | None
        try:
            baseline = time_matvec(
                _matvec('unstructured', n, 1, rng),
                x,
                config.trials,
                config.repeats,
                config.warmup,
            )
        except MemoryError:
            baseline = None
        for kind in config.classes:
            if kind == 'unstructured':
                for rank in config.ranks:
                    yield _row(kind, n, rank, baseline, baseline)
                continue
            for rank in config.ranks:
                try:
                    elapsed: float | None = time_matvec(
                        _matvec(kind, n, rank, rng),
                        x,
                        config.trials,
                        config.repeats,
                        config.warmup,
                    )
                except MemoryError:
                    elapsed = None
                yield _row(kind, n, rank, elapsed, baseline)


def _row(
    kind: str,
    n: int,
    rank: int,
    elapsed: float | None,
    baseline: float | None,
) -> BenchRow:
    reference = reference_speedup(kind, n, rank)
    if elapsed is None:
        return BenchRow(
            kind, n, rank, None, None, reference, 'skipped: out of memory'
        )
    speedup = None
    if kind == 'unstructured':
        speedup = 1.0
    elif baseline is not None and elapsed > 0.0:
        speedup = baseline / elapsed
    return BenchRow(kind, n, rank, elapsed, speedup, reference)
