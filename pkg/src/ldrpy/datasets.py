"""Datasets for training structured layers.

The ``ldrpy.datasets`` module provides:

- :py:class:`Dataset`, training and validation samples of a task
- :py:func:`synth_shift_task`, a regression task whose target is a random
  Toeplitz (or Hankel) matrix
- :py:func:`load_csv_dataset` and :py:func:`write_csv_dataset`,
  classification data in CSV files, one sample per row
- :py:func:`low_rank_floor`, the best relative error of low-rank
  approximations of a target matrix

Samples are stored as rows. Features of CSV files are scaled to [0, 1] and
split into training and validation sets by a seeded shuffle.

"""

from __future__ import annotations

__all__ = [
    'Dataset',
    'load_csv_dataset',
    'low_rank_floor',
    'synth_shift_task',
    'write_csv_dataset',
]

import csv
import dataclasses
import math
import os
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, ArrayLike, Literal, NDArray, PathLike

import numpy

from ._utils import as_matrix, check_power_of_two, format_float
from .linalg import numerical_rank


@dataclasses.dataclass(frozen=True, eq=False)
class Dataset:
    """Training and validation samples of regression or classification task.

    Parameters
    ----------
    x_train, x_val : ndarray
        Input samples of shape (samples, n).
    y_train, y_val : ndarray
        Regression targets of shape (samples, n) or integer class labels
        of shape (samples,).
    task : {'regression', 'classification'}
        Kind of task.
    classes : ndarray, optional
        Original label values of classes. Label ``i`` is ``classes[i]``.
    target : ndarray, optional
        Matrix mapping inputs to regression targets, if known.

    """

    x_train: Any
    y_train: Any
    x_val: Any
    y_val: Any
    task: Literal['regression', 'classification'] = 'regression'
    classes: Any = None
    target: Any = None

    def __post_init__(self) -> None:
        if self.task not in {'regression', 'classification'}:
            raise ValueError(f'{self.task=!r} is not a valid task')
        if self.x_train.ndim != 2 or self.x_val.ndim != 2:
            raise ValueError(
                f'{self.x_train.shape=} or {self.x_val.shape=} is not 2D'
            )
        if self.x_train.shape[1] != self.x_val.shape[1]:
            raise ValueError(
                f'{self.x_train.shape=} and {self.x_val.shape=} differ '
                'in number of features'
            )
        if (
            self.y_train.shape[0] != self.x_train.shape[0]
            or self.y_val.shape[0] != self.x_val.shape[0]
        ):
            raise ValueError('number of inputs and outputs differ')

    @property
    def n(self) -> int:
        """Number of input features."""
        return int(self.x_train.shape[1])

    @property
    def n_classes(self) -> int:
        """Number of classes of classification task, else 0."""
        if self.task != 'classification':
            return 0
        return int(self.classes.size)

    def subsample(
        self, fraction: float, /, seed: int | None = None
    ) -> Dataset:
        """Return dataset with random fraction of training samples.

        At least one training sample is kept. Validation samples
        are unchanged.

        """
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f'{fraction=} not in (0, 1]')
        if fraction == 1.0:
            return self
        size = self.x_train.shape[0]
        keep = max(1, int(round(fraction * size)))
        index = numpy.sort(
            numpy.random.default_rng(seed).permutation(size)[:keep]
        )
        return dataclasses.replace(
            self, x_train=self.x_train[index], y_train=self.y_train[index]
        )


def synth_shift_task(
    n: int,
    samples: int,
    /,
    noise: float = 0.0,
    seed: int | None = None,
    *,
    flip: bool = False,
    validation_fraction: float = 0.15,
) -> Dataset:
    """Return regression dataset of random Toeplitz matrix.

    A full-rank Toeplitz matrix `T` with entries drawn from
    ``N(0, 1 / n)`` maps inputs ``x ~ N(0, I)`` to outputs
    ``T @ x + noise * e`` with ``e ~ N(0, I)``.

    Parameters
    ----------
    n : int
        Size of target matrix. Must be a power of two.
    samples : int
        Number of samples, at least 2.
    noise : float, optional
        Standard deviation of output noise.
    seed : int, optional
        Seed of random number generator. Datasets are deterministic
        in `seed`.
    flip : bool, optional
        Reverse rows of `T`, making the target a Hankel matrix.
    validation_fraction : float, optional
        Fraction of samples, rounded up, used for validation.

    Returns
    -------
    Dataset
        Regression dataset with ``target`` set to the target matrix.

    Examples
    --------
    >>> data = synth_shift_task(4, 10, seed=0)
    >>> data.x_train.shape, data.x_val.shape
    ((8, 4), (2, 4))
    >>> bool(numpy.allclose(data.x_train @ data.target.T, data.y_train))
    True

    """
    import scipy.linalg

    check_power_of_two(n)
    if samples < 2:
        raise ValueError(f'{samples=} < 2')
    if noise < 0.0:
        raise ValueError(f'{noise=} < 0')
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError(f'{validation_fraction=} not in (0, 1)')
    rng = numpy.random.default_rng(seed)
    scale = 1.0 / math.sqrt(n)
    while True:
        target = scipy.linalg.toeplitz(
            rng.normal(0.0, scale, n), rng.normal(0.0, scale, n)
        )
        if numerical_rank(target) == n:
            break
    if flip:
        target = target[::-1].copy()
    x = rng.standard_normal((samples, n))
    y = x @ target.T
    if noise > 0.0:
        y += noise * rng.standard_normal((samples, n))
    n_val = min(samples - 1, math.ceil(validation_fraction * samples))
    n_train = samples - n_val
    return Dataset(
        x[:n_train],
        y[:n_train],
        x[n_train:],
        y[n_train:],
        'regression',
        target=target,
    )


def low_rank_floor(target: ArrayLike, rank: int, /) -> float:
    """Return relative error of best rank-p approximation of matrix.

    Parameters
    ----------
    target : array_like
        Matrix.
    rank : int
        Rank p of approximation.

    Returns
    -------
    float
        ``sqrt(sum(s[p:]**2)) / norm(target)`` for singular values `s`,
        the lower bound of ``relative_error(W, target)`` over matrices `W`
        of rank at most p.

    Examples
    --------
    >>> low_rank_floor(numpy.diag([3.0, 4.0]), 1)
    0.6

    """
    t = as_matrix(target, 'target')
    if rank < 0:
        raise ValueError(f'{rank=} < 0')
    sv = numpy.linalg.svd(t, compute_uv=False)
    norm = math.sqrt(float(numpy.sum(sv**2)))
    if norm == 0.0:
        return 0.0
    return math.sqrt(float(numpy.sum(sv[rank:] ** 2))) / norm


def load_csv_dataset(
    filename: str | PathLike[Any],
    /,
    label_column: int = -1,
    *,
    header: bool = False,
    seed: int | None = 0,
    validation_fraction: float = 0.15,
    scale: bool = True,
) -> Dataset:
    """Return classification dataset from CSV file.

    Parameters
    ----------
    filename : str or path-like
        Name of comma-separated file with one sample per row.
        All cells must be numeric.
    label_column : int, optional
        Index of column containing class labels. Negative values count
        from the last column.
    header : bool, optional
        First line of file contains column names.
    seed : int, optional
        Seed of the shuffle splitting samples into training and
        validation sets.
    validation_fraction : float, optional
        Fraction of samples, rounded up, used for validation.
    scale : bool, optional
        Scale each feature to [0, 1] by its minimum and maximum.
        Constant features are set to zero.

    Returns
    -------
    Dataset
        Classification dataset.

    Raises
    ------
    ValueError
        File is empty, rows differ in length, or a cell is not numeric.
        The message contains the line number.
    IndexError
        `label_column` is out of range.

    """
    fname = os.fspath(filename)
    rows: list[list[float]] = []
    width = -1
    with open(fname, newline='', encoding='utf-8') as fh:
        reader = csv.reader(fh)
        for row in reader:
            lineno = reader.line_num
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width < 0:
                width = len(row)
            elif len(row) != width:
                raise ValueError(
                    f'{fname}:{lineno}: row has {len(row)} cells, '
                    f'expected {width}'
                )
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise ValueError(
                    f'{fname}:{lineno}: non-numeric cell, {exc}'
                ) from exc
            rows.append(values)
    if not rows:
        raise ValueError(f'{fname}:1: file contains no data')
    data = numpy.asarray(rows)
    if not numpy.all(numpy.isfinite(data)):
        raise ValueError(f'{fname}: file contains non-finite values')
    if not -width <= label_column < width:
        raise IndexError(f'{label_column=} out of range of {width} columns')
    if width < 2:
        raise ValueError(f'{fname}: file contains no feature columns')
    label_column %= width
    classes, labels = numpy.unique(data[:, label_column], return_inverse=True)
    features = numpy.delete(data, label_column, axis=1)
    if scale:
        low = features.min(axis=0)
        span = features.max(axis=0) - low
        features = numpy.divide(
            features - low,
            span,
            out=numpy.zeros_like(features),
            where=span > 0.0,
        )
    size = features.shape[0]
    if size < 2:
        raise ValueError(f'{fname}: file contains fewer than 2 samples')
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError(f'{validation_fraction=} not in (0, 1)')
    n_val = min(size - 1, math.ceil(validation_fraction * size))
    order = numpy.random.default_rng(seed).permutation(size)
    val = order[:n_val]
    train = order[n_val:]
    return Dataset(
        features[train],
        labels[train],
        features[val],
        labels[val],
        'classification',
        classes=classes,
    )


def write_csv_dataset(
    filename: str | PathLike[Any],
    features: ArrayLike,
    labels: ArrayLike,
    /,
    *,
    header: bool = False,
) -> None:
    """Write samples to CSV file readable by :py:func:`load_csv_dataset`.

    Labels are written to the last column. Values are formatted as
    shortest round-trip decimal strings.

    Parameters
    ----------
    filename : str or path-like
        Name of file to write.
    features : array_like
        Samples of shape (samples, n).
    labels : array_like
        Labels of shape (samples,).
    header : bool, optional
        Write a first line of column names ``x0, ..., label``.

    """
    x = as_matrix(features, 'features')
    y = numpy.asarray(labels, dtype=numpy.float64)
    if y.shape != (x.shape[0],):
        raise ValueError(f'{y.shape=} does not match {x.shape=}')
    with open(filename, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        if header:
            writer.writerow([f'x{i}' for i in range(x.shape[1])] + ['label'])
        for row, label in zip(x, y):
            writer.writerow(
                [format_float(v) for v in row] + [format_float(label)]
            )
