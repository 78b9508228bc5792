"""Tests for the ldrpy.io module."""

import struct

import numpy
import pytest
from numpy.testing import assert_array_equal

from ldrpy.displacement import (
    Diagonal,
    LdrMatrix,
    Shift,
    Subdiagonal,
    TridiagonalCorners,
    operator_params,
    reconstruct,
)
from ldrpy.io import (
    dump_rows,
    ldr_from_bytes,
    ldr_to_bytes,
    read_checkpoint,
    write_checkpoint,
)
from ldrpy.learn import MODEL_CLASSES, init_model


def random_ldr(seed=None):
    """Return LdrMatrix with operators of different variants."""
    rng = numpy.random.default_rng(seed)
    n = 5
    op_a = TridiagonalCorners(
        rng.uniform(-1, 1, n - 1),
        rng.uniform(-1, 1, n),
        rng.uniform(-1, 1, n - 1),
        0.25,
        -0.5,
    )
    op_b = Subdiagonal(rng.uniform(-1, 1, n - 1), 0.75)
    return LdrMatrix(op_a, op_b, *rng.standard_normal((2, n, 3)))


def assert_ldr_equal(a, b):
    """Assert LdrMatrix are identical."""
    assert type(a.op_a) is type(b.op_a)
    assert type(a.op_b) is type(b.op_b)
    assert_array_equal(operator_params(a.op_a), operator_params(b.op_a))
    assert_array_equal(operator_params(a.op_b), operator_params(b.op_b))
    assert_array_equal(a.G, b.G)
    assert_array_equal(a.H, b.H)


def test_ldr_bytes():
    """Test `ldr_to_bytes` and `ldr_from_bytes` functions."""
    m = random_ldr(0)
    data = ldr_to_bytes(m)
    assert data[:4] == b'LDRM'
    assert struct.unpack('<III', data[4:16]) == (1, 5, 3)
    assert (data[16], data[17]) == (2, 1)
    assert len(data) == 20 + 8 * (15 + 5 + 2 * 15)
    result, end = ldr_from_bytes(data)
    assert end == len(data)
    assert_ldr_equal(result, m)
    assert_array_equal(reconstruct(result), reconstruct(m))
    # G is stored in column-major order
    offset = 20 + 8 * 20
    assert_array_equal(
        numpy.frombuffer(data, '<f8', 5, offset), m.G[:, 0]
    )
    # read at offset
    result, end = ldr_from_bytes(b'xyz' + data + b'tail', 3)
    assert end == 3 + len(data)
    assert_ldr_equal(result, m)


def test_ldr_bytes_variants():
    """Test binary representation of Shift and Diagonal operators."""
    m = LdrMatrix(Shift(-1.5, 2), Diagonal([1, 2]), numpy.eye(2), numpy.eye(2))
    result, end = ldr_from_bytes(ldr_to_bytes(m))
    assert end == 108
    assert_ldr_equal(result, m)
    assert result.op_a.f == -1.5


@pytest.mark.parametrize(
    'position, value, offset',
    [
        (0, b'X', 0),
        (4, b'\x02', 4),
        (8, b'\x00\x00\x00\x00', 8),
        (12, b'\x00\x00\x00\x00', 12),
        (16, b'\x09', 16),
        (17, b'\x07', 17),
    ],
)
def test_ldr_from_bytes_corrupt(position, value, offset):
    """Test `ldr_from_bytes` reports byte offset of corrupt field."""
    data = bytearray(ldr_to_bytes(random_ldr(1)))
    data[position : position + len(value)] = value
    with pytest.raises(ValueError, match=f'byte offset {offset}:'):
        ldr_from_bytes(bytes(data))


def test_ldr_from_bytes_truncated():
    """Test `ldr_from_bytes` with truncated or non-finite data."""
    data = ldr_to_bytes(random_ldr(2))
    with pytest.raises(ValueError, match='byte offset 0: truncated'):
        ldr_from_bytes(data[:10])
    with pytest.raises(ValueError, match='truncated'):
        ldr_from_bytes(data[:-1])
    corrupt = bytearray(data)
    corrupt[20:28] = struct.pack('<d', numpy.nan)
    with pytest.raises(ValueError, match='byte offset 20: non-finite'):
        ldr_from_bytes(bytes(corrupt))


@pytest.mark.parametrize('kind', MODEL_CLASSES)
def test_checkpoint(tmp_path, kind):
    """Test `write_checkpoint` and `read_checkpoint` functions."""
    filename = tmp_path / 'model.ldrc'
    model = init_model(kind, 4, 2, n_classes=3, seed=3)
    write_checkpoint(filename, model)
    result = read_checkpoint(filename)
    assert result.kind == kind
    assert result.task == 'classification'
    assert_array_equal(result.dense_layer(), model.dense_layer())
    assert_array_equal(result.W2, model.W2)
    assert_array_equal(result.b2, model.b2)
    if kind != 'unstructured':
        assert_ldr_equal(result.layer, model.layer)


def test_checkpoint_regression(tmp_path):
    """Test checkpoint of regression model without output layer."""
    filename = tmp_path / 'model.ldrc'
    model = init_model('ldr-sd', 4, 1, seed=4)
    write_checkpoint(filename, model)
    data = filename.read_bytes()
    assert data[:4] == b'LDRC'
    assert data[8:10] == bytes([MODEL_CLASSES.index('ldr-sd'), 1])
    assert len(data) == 12 + 20 + 8 * 16 + 8
    assert data[-8:] == bytes(8)
    result = read_checkpoint(str(filename))
    assert result.W2 is None
    assert result.task == 'regression'
    assert_ldr_equal(result.layer, model.layer)


def test_read_checkpoint_corrupt(tmp_path):
    """Test `read_checkpoint` reports byte offsets of corrupt data."""
    filename = tmp_path / 'model.ldrc'
    write_checkpoint(filename, init_model('unstructured', 2, n_classes=2))
    data = filename.read_bytes()

    def check(corrupt, match):
        filename.write_bytes(bytes(corrupt))
        with pytest.raises(ValueError, match=match):
            read_checkpoint(filename)

    check(b'LDRX' + data[4:], 'byte offset 0: invalid magic')
    check(data[:4] + b'\x09' + data[5:], 'byte offset 4: unsupported')
    check(data[:8] + b'\xff' + data[9:], 'byte offset 8: invalid model')
    check(data[:9] + b'\x01' + data[10:], 'byte offset 9: layer kind')
    check(data[:12] + bytes(4) + data[16:], 'byte offset 12: invalid size')
    check(data[:-1], 'truncated')
    check(data + b'\x00', 'byte offset 104: 1 unexpected trailing bytes')
    check(b'', 'byte offset 0: truncated')
    # output layer columns do not match hidden layer
    head = 12 + 4 + 8 * 4
    check(
        data[:head] + struct.pack('<II', 2, 3) + data[head + 8 :],
        f'byte offset {head}: output layer shape',
    )


def test_dump_rows():
    """Test `dump_rows` function."""
    model = init_model('ldr-sd', 3, 2, seed=5)
    rows = dump_rows(model)
    assert rows == [
        ('op_a', 0, 1.0),
        ('op_a', 1, 1.0),
        ('op_a', 2, 0.0),
        ('op_b', 0, 1.0),
        ('op_b', 1, 1.0),
        ('op_b', 2, -1.0),
    ]
    rows = dump_rows(model, generators=True)
    assert len(rows) == 6 + 2 * 6
    g_rows = [row for row in rows if row[0] == 'G']
    assert [row[1] for row in g_rows] == list(range(6))
    assert [row[2] for row in g_rows] == model.layer.G.ravel().tolist()
    assert dump_rows(init_model('unstructured', 3)) == []
    model = init_model('toeplitz-like', 4, 1, seed=6)
    assert [row[0] for row in dump_rows(model)].count('op_b') == 1
