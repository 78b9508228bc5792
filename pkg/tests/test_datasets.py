"""Tests for the ldrpy.datasets module."""

import numpy
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from ldrpy.datasets import (
    Dataset,
    load_csv_dataset,
    low_rank_floor,
    synth_shift_task,
    write_csv_dataset,
)
from ldrpy.displacement import Shift, displacement_rank
from ldrpy.linalg import numerical_rank


def test_synth_shift_task():
    """Test `synth_shift_task` function."""
    data = synth_shift_task(16, 100, seed=0)
    assert data.task == 'regression'
    assert data.n == 16
    assert data.n_classes == 0
    assert data.x_train.shape == (85, 16)
    assert data.x_val.shape == (15, 16)
    target = data.target
    assert numerical_rank(target) == 16
    assert displacement_rank(target, Shift(1, 16), Shift(-1, 16)) == 2
    assert_allclose(data.x_train @ target.T, data.y_train, atol=1e-12)
    assert_allclose(data.x_val @ target.T, data.y_val, atol=1e-12)
    # deterministic in seed
    again = synth_shift_task(16, 100, seed=0)
    assert_array_equal(again.x_train, data.x_train)
    assert_array_equal(again.target, target)
    other = synth_shift_task(16, 100, seed=1)
    assert not numpy.array_equal(other.target, target)


def test_synth_shift_task_options():
    """Test `synth_shift_task` noise and flip options."""
    data = synth_shift_task(8, 50, 0.1, seed=2)
    residual = data.y_train - data.x_train @ data.target.T
    assert 0.05 < numpy.std(residual) < 0.2
    flipped = synth_shift_task(8, 50, seed=2, flip=True)
    # anti-diagonals of Hankel target are constant
    hankel = flipped.target
    assert_allclose(hankel[0, 1], hankel[1, 0])
    assert_allclose(hankel[7, 6], hankel[6, 7])
    data = synth_shift_task(8, 10, seed=3, validation_fraction=0.5)
    assert data.x_val.shape[0] == 5
    data = synth_shift_task(8, 2, seed=3, validation_fraction=0.9)
    assert data.x_train.shape[0] == 1


def test_synth_shift_task_exceptions():
    """Test `synth_shift_task` function exceptions."""
    with pytest.raises(ValueError):
        synth_shift_task(6, 10)
    with pytest.raises(ValueError):
        synth_shift_task(8, 1)
    with pytest.raises(ValueError):
        synth_shift_task(8, 10, -1.0)
    with pytest.raises(ValueError):
        synth_shift_task(8, 10, validation_fraction=1.0)


def test_dataset():
    """Test `Dataset` class."""
    x = numpy.zeros((10, 4))
    y = numpy.zeros(10, dtype=int)
    data = Dataset(x, y, x[:2], y[:2], 'classification', numpy.arange(2))
    assert data.n == 4
    assert data.n_classes == 2
    half = data.subsample(0.5, seed=1)
    assert half.x_train.shape == (5, 4)
    assert half.x_val.shape == (2, 4)
    assert data.subsample(1.0) is data
    assert data.subsample(0.01).x_train.shape == (1, 4)
    with pytest.raises(ValueError):
        data.subsample(0.0)
    with pytest.raises(ValueError):
        Dataset(x, y, x[:2], y[:2], 'clustering')
    with pytest.raises(ValueError):
        Dataset(x, y, numpy.zeros((2, 3)), y[:2])
    with pytest.raises(ValueError):
        Dataset(x, y[:5], x[:2], y[:2])


def test_low_rank_floor():
    """Test `low_rank_floor` function."""
    assert low_rank_floor(numpy.diag([3.0, 4.0]), 1) == pytest.approx(0.6)
    assert low_rank_floor(numpy.eye(4), 0) == 1.0
    assert low_rank_floor(numpy.eye(4), 4) == 0.0
    assert low_rank_floor(numpy.zeros((3, 3)), 1) == 0.0
    rng = numpy.random.default_rng(4)
    m = rng.standard_normal((8, 8))
    floors = [low_rank_floor(m, p) for p in range(9)]
    assert floors == sorted(floors, reverse=True)
    g = rng.standard_normal((8, 2))
    h = rng.standard_normal((8, 2))
    assert low_rank_floor(g @ h.T, 2) < 1e-14
    with pytest.raises(ValueError):
        low_rank_floor(m, -1)


def test_csv_dataset(tmp_path):
    """Test `write_csv_dataset` and `load_csv_dataset` functions."""
    rng = numpy.random.default_rng(5)
    features = rng.uniform(-1, 1, (40, 6))
    features[:, 2] = 3.0
    labels = rng.integers(0, 3, 40) * 2 + 1
    filename = tmp_path / 'data.csv'
    write_csv_dataset(filename, features, labels, header=True)
    lines = filename.read_text().splitlines()
    assert lines[0] == 'x0,x1,x2,x3,x4,x5,label'
    assert len(lines) == 41
    data = load_csv_dataset(filename, header=True)
    assert data.task == 'classification'
    assert data.n == 6
    assert_array_equal(data.classes, [1, 3, 5])
    assert data.n_classes == 3
    assert data.x_train.shape[0] + data.x_val.shape[0] == 40
    assert data.x_val.shape[0] == 6
    assert data.x_train.min() >= 0.0
    assert data.x_train.max() <= 1.0
    # constant feature set to zero
    assert_array_equal(data.x_train[:, 2], 0.0)
    # deterministic split
    again = load_csv_dataset(filename, header=True)
    assert_array_equal(again.y_val, data.y_val)
    # unscaled features round trip
    raw = load_csv_dataset(filename, -1, header=True, scale=False)
    rows = numpy.concatenate((raw.x_train, raw.x_val))
    assert sorted(map(tuple, rows)) == sorted(map(tuple, features))
    # label in first column
    write_csv_dataset(filename, features, labels)
    data = load_csv_dataset(filename, 0, scale=False)
    assert data.n == 6
    assert data.n_classes == 40


def test_load_csv_dataset_exceptions(tmp_path):
    """Test `load_csv_dataset` function exceptions."""
    filename = tmp_path / 'bad.csv'
    filename.write_text('1,2,0\n3,4\n')
    with pytest.raises(ValueError, match=':2:'):
        load_csv_dataset(filename)
    filename.write_text('1,2,0\n3,x,1\n')
    with pytest.raises(ValueError, match=':2:'):
        load_csv_dataset(filename)
    filename.write_text('\n')
    with pytest.raises(ValueError, match='no data'):
        load_csv_dataset(filename)
    filename.write_text('1,2,0\n3,4,1\n')
    with pytest.raises(IndexError):
        load_csv_dataset(filename, 3)
    filename.write_text('1,0\n')
    with pytest.raises(ValueError, match='fewer than 2'):
        load_csv_dataset(filename)
    filename.write_text('0\n1\n')
    with pytest.raises(ValueError, match='no feature'):
        load_csv_dataset(filename)
    with pytest.raises(OSError):
        load_csv_dataset(tmp_path / 'missing.csv')
    with pytest.raises(ValueError):
        write_csv_dataset(filename, numpy.ones((3, 2)), numpy.ones(2))
