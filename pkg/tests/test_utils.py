"""Tests for the ldrpy.utils module."""

import os

import numpy
import pytest

from ldrpy.utils import number_threads, relative_error


def test_number_threads():
    """Test `number_threads` function."""
    assert number_threads() == 1
    assert number_threads(None, 0) == 1
    assert number_threads(1) == 1
    assert number_threads(-1) == 1
    assert number_threads(-1, 2) == 1
    assert number_threads(6) == 6
    assert number_threads(100) == 100
    assert number_threads(6, 5) == 5
    num_threads = number_threads(0)
    assert num_threads >= 1
    if num_threads > 4:
        assert number_threads(0, 4) == 4
        os.environ['LDRPY_NUM_THREADS'] = '4'
        assert number_threads(0) == 4
        assert number_threads(6) == 6
        del os.environ['LDRPY_NUM_THREADS']


def test_number_threads_environ(monkeypatch):
    """Test `number_threads` function with environment variable."""
    monkeypatch.setenv('LDRPY_NUM_THREADS', '3')
    assert number_threads(0) == 3
    assert number_threads(0, 2) == 2
    assert number_threads(None) == 1
    monkeypatch.setenv('LDRPY_NUM_THREADS', '0')
    assert number_threads(0) == 1


def test_relative_error():
    """Test `relative_error` function."""
    assert relative_error([3.0, 4.0], [3.0, 4.0]) == 0.0
    assert relative_error([3.0, 4.0], [0.0, 0.0]) == 5.0
    assert relative_error([0.0, 0.0], [3.0, 4.0]) == 1.0
    assert relative_error(
        numpy.eye(2) * 1.1, numpy.eye(2)
    ) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        relative_error([1.0], [1.0, 2.0])
