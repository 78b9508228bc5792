"""Tests for the ldrpy.benchmark module."""

import math
import os

import pytest

from ldrpy.benchmark import (
    BENCH_CLASSES,
    REFERENCE_SPEEDUPS,
    BenchConfig,
    BenchRow,
    reference_speedup,
    run_benchmark,
    time_matvec,
)

# skip timing of large matrices by default
SKIP_SLOW = not bool(int(os.environ.get('LDRPY_SLOW_TESTS', 0)))


def test_reference_speedup():
    """Test `reference_speedup` function."""
    assert reference_speedup('low-rank', 2**9, 1) == 51.5
    assert reference_speedup('toeplitz-like', 2**12, 16) == 4.62
    assert reference_speedup('ldr-sd', 2**15, 2) == 28.2
    assert reference_speedup('unstructured', 2**20, 3) == 1.0
    assert reference_speedup('ldr-sd', 2**8, 1) is None
    assert reference_speedup('ldr-sd', 2**16, 1) is None
    assert reference_speedup('ldr-sd', 2**10, 3) is None
    assert reference_speedup('ldr-sd', 1000, 1) is None
    assert reference_speedup('ldr-td', 2**10, 1) is None
    for kind, table in REFERENCE_SPEEDUPS.items():
        assert kind in BENCH_CLASSES
        assert sorted(table) == list(range(9, 16))
        for values in table.values():
            assert len(values) == 5


def test_bench_config():
    """Test `BenchConfig` class."""
    config = BenchConfig()
    assert config.sizes == (512, 1024, 2048, 4096, 8192, 16384, 32768)
    assert config.ranks == (1, 2, 4, 8, 16)
    assert config.classes == BENCH_CLASSES
    assert (config.trials, config.repeats, config.warmup) == (1000, 10, 10)
    config = BenchConfig([8, 16], [1], ['ldr-sd'])
    assert config.sizes == (8, 16)
    assert config.classes == ('ldr-sd',)
    with pytest.raises(ValueError):
        BenchConfig([])
    with pytest.raises(ValueError):
        BenchConfig([12])
    with pytest.raises(ValueError):
        BenchConfig(ranks=[0])
    with pytest.raises(ValueError):
        BenchConfig(classes=['ldr-td'])
    with pytest.raises(ValueError):
        BenchConfig(classes=[])
    with pytest.raises(ValueError):
        BenchConfig(trials=0)
    with pytest.raises(ValueError):
        BenchConfig(repeats=0)
    with pytest.raises(ValueError):
        BenchConfig(warmup=-1)


def test_time_matvec():
    """Test `time_matvec` function."""
    calls = []

    def func(x):
        calls.append(x)

    elapsed = time_matvec(func, 1, trials=3, repeats=2, warmup=4)
    assert len(calls) == 4 + 3 * 2
    assert elapsed >= 0.0
    assert math.isfinite(elapsed)


def test_run_benchmark():
    """Test `run_benchmark` function."""
    config = BenchConfig([8, 16], [1, 2], trials=2, repeats=1, warmup=0)
    rows = list(run_benchmark(config))
    assert len(rows) == 2 * len(BENCH_CLASSES) * 2
    assert [(row.kind, row.n, row.rank) for row in rows[:4]] == [
        ('unstructured', 8, 1),
        ('unstructured', 8, 2),
        ('low-rank', 8, 1),
        ('low-rank', 8, 2),
    ]
    assert {row.n for row in rows[8:]} == {16}
    for row in rows:
        assert row.status == 'ok'
        assert row.ns_per_matvec >= 0.0
        assert row.reference_speedup == (
            1.0 if row.kind == 'unstructured' else None
        )
        if row.kind == 'unstructured':
            assert row.speedup == 1.0
    # unstructured baseline is shared by ranks
    assert rows[0].ns_per_matvec == rows[1].ns_per_matvec


def test_bench_row():
    """Test `BenchRow` class."""
    row = BenchRow('ldr-sd', 512, 1, 10.0, 2.0, 0.0668)
    assert len(row.values()) == len(BenchRow.FIELDS)
    assert row.values() == ('ldr-sd', 512, 1, 10.0, 2.0, 0.0668, 'ok')
    assert BenchRow.FIELDS[5] == 'reference_speedup'


@pytest.mark.skipif(SKIP_SLOW, reason='timing of large matrices')
def test_run_benchmark_scaling():
    """Test runtime of ldr-sd multiplication grows near linearly."""
    sizes = [2**12, 2**13, 2**14, 2**15]
    config = BenchConfig(
        sizes, [1], ['unstructured', 'ldr-sd'], trials=20, repeats=5
    )
    rows = [row for row in run_benchmark(config) if row.kind == 'ldr-sd']
    times = [row.ns_per_matvec for row in rows]
    for small, large in zip(times[:-1], times[1:]):
        assert large / small < 3.0
    assert rows[2].speedup > 1.0
