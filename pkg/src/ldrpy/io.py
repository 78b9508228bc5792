"""Read and write low displacement rank matrices and model checkpoints.

The ``ldrpy.io`` module provides:

- :py:func:`ldr_to_bytes` and :py:func:`ldr_from_bytes`, the binary layout
  of :py:class:`ldrpy.displacement.LdrMatrix`
- :py:func:`write_checkpoint` and :py:func:`read_checkpoint`, files of
  :py:class:`ldrpy.learn.ShlModel`
- :py:func:`dump_rows`, learnable entries of checkpointed models as
  ``(tensor, index, value)`` rows

All values are little-endian. An LdrMatrix is stored as:

========  ========  ====================================================
offset    type      content
========  ========  ====================================================
0         4 bytes   magic ``b'LDRM'``
4         uint32    format version, 1
8         uint32    size n
12        uint32    rank r
16        uint8     operator tag of A
17        uint8     operator tag of B
18        2 bytes   padding
20        float64   learnable entries of A, then of B
...       float64   G and H, each n x r in column-major order
========  ========  ====================================================

A checkpoint starts with magic ``b'LDRC'``, uint32 version, uint8 index
of the model class in :py:data:`ldrpy.learn.MODEL_CLASSES`, uint8 layer
kind (0 dense, 1 LdrMatrix), and 2 bytes padding. A dense layer follows as
uint32 n and n x n float64 in column-major order, else an LdrMatrix.
The output layer follows as uint32 rows and columns, ``W2`` in
column-major order, and ``b2``. Regression models have zero rows and
columns.

"""

from __future__ import annotations

__all__ = [
    'dump_rows',
    'ldr_from_bytes',
    'ldr_to_bytes',
    'read_checkpoint',
    'write_checkpoint',
]

import struct
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, NDArray, PathLike

import numpy

from .displacement import (
    OPERATOR_TYPES,
    Diagonal,
    LdrMatrix,
    Operator,
    Shift,
    Subdiagonal,
    TridiagonalCorners,
    operator_from_params,
    operator_params,
)
from .learn import MODEL_CLASSES, ShlModel

LDR_MAGIC = b'LDRM'
CHECKPOINT_MAGIC = b'LDRC'
VERSION = 1

_LDR_HEADER = struct.Struct('<4sIIIBB2x')
_CHECKPOINT_HEADER = struct.Struct('<4sIBB2x')
_UINT32 = struct.Struct('<I')
_SHAPE = struct.Struct('<II')


class _Reader:
    """Sequential reader of bytes reporting offsets in errors."""

    def __init__(self, data: bytes, offset: int = 0) -> None:
        self.data = data
        self.offset = offset

    def error(self, reason: str, offset: int | None = None) -> ValueError:
        if offset is None:
            offset = self.offset
        return ValueError(f'corrupt data at byte offset {offset}: {reason}')

    def unpack(self, fmt: struct.Struct) -> tuple[Any, ...]:
        end = self.offset + fmt.size
        if end > len(self.data):
            raise self.error(
                f'truncated, {fmt.size} bytes expected, '
                f'{len(self.data) - self.offset} available'
            )
        values = fmt.unpack_from(self.data, self.offset)
        self.offset = end
        return values

    def array(self, shape: tuple[int, ...]) -> NDArray[numpy.float64]:
        count = 1
        for dim in shape:
            count *= dim
        end = self.offset + 8 * count
        if end > len(self.data):
            raise self.error(
                f'truncated, {8 * count} bytes of float64 expected, '
                f'{len(self.data) - self.offset} available'
            )
        values = numpy.frombuffer(
            self.data, dtype='<f8', count=count, offset=self.offset
        )
        if not numpy.all(numpy.isfinite(values)):
            raise self.error('non-finite value')
        self.offset = end
        return values.astype(numpy.float64).reshape(shape, order='F')


def _param_count(cls: type[Operator], n: int) -> int:
    if cls is Shift:
        return 1
    if cls is TridiagonalCorners:
        return 3 * n
    return n


def _template(cls: type[Operator], n: int) -> Operator:
    """Return operator of variant and size with zero entries."""
    zeros = numpy.zeros(n - 1)
    if cls is Shift:
        return Shift(0.0, n)
    if cls is Subdiagonal:
        return Subdiagonal(zeros)
    if cls is TridiagonalCorners:
        return TridiagonalCorners(zeros, numpy.zeros(n), zeros)
    return Diagonal(numpy.zeros(n))


def ldr_to_bytes(m: LdrMatrix, /) -> bytes:
    """Return binary representation of LdrMatrix.

    Examples
    --------
    >>> m = LdrMatrix(Shift(1, 2), Diagonal([1, 2]), numpy.eye(2),
    ...               numpy.eye(2))
    >>> data = ldr_to_bytes(m)
    >>> data[:4], len(data)
    (b'LDRM', 108)

    """
    header = _LDR_HEADER.pack(
        LDR_MAGIC, VERSION, m.n, m.rank, m.op_a.tag, m.op_b.tag
    )
    values = numpy.concatenate(
        (
            operator_params(m.op_a),
            operator_params(m.op_b),
            m.G.ravel(order='F'),
            m.H.ravel(order='F'),
        )
    )
    return header + values.astype('<f8').tobytes()


def ldr_from_bytes(
    data: bytes, /, offset: int = 0
) -> tuple[LdrMatrix, int]:
    """Return LdrMatrix read from bytes and offset of following byte.

    Raises
    ------
    ValueError
        Data is truncated or invalid. The message contains the byte
        offset of the error.

    Examples
    --------
    >>> m = LdrMatrix(Shift(1, 2), Diagonal([1, 2]), numpy.eye(2),
    ...               numpy.eye(2))
    >>> m2, end = ldr_from_bytes(ldr_to_bytes(m))
    >>> m2.op_b, end
    (Diagonal(n=2, params=[1 2]), 108)
    >>> ldr_from_bytes(b'LDRX' + bytes(16))
    Traceback (most recent call last):
     ...
    ValueError: corrupt data at byte offset 0: invalid magic b'LDRX'

    """
    return _read_ldr(_Reader(bytes(data), offset))


def _read_ldr(reader: _Reader) -> tuple[LdrMatrix, int]:
    start = reader.offset
    magic, version, n, rank, tag_a, tag_b = reader.unpack(_LDR_HEADER)
    if magic != LDR_MAGIC:
        raise reader.error(f'invalid magic {magic!r}', start)
    if version != VERSION:
        raise reader.error(f'unsupported version {version}', start + 4)
    if n < 1:
        raise reader.error(f'invalid size {n=}', start + 8)
    if rank < 1:
        raise reader.error(f'invalid {rank=}', start + 12)
    ops = []
    for tag, tag_offset in ((tag_a, start + 16), (tag_b, start + 17)):
        if tag not in OPERATOR_TYPES:
            raise reader.error(f'invalid operator tag {tag}', tag_offset)
        cls = OPERATOR_TYPES[tag]
        params = reader.array((_param_count(cls, n),))
        ops.append(operator_from_params(_template(cls, n), params))
    g = reader.array((n, rank))
    h = reader.array((n, rank))
    return LdrMatrix(ops[0], ops[1], g, h), reader.offset


def write_checkpoint(
    filename: str | PathLike[Any], model: ShlModel, /
) -> None:
    """Write model to checkpoint file.

    Parameters
    ----------
    filename : str or path-like
        Name of file to write.
    model : ShlModel
        Model to save.

    """
    kind = 1 if isinstance(model.layer, LdrMatrix) else 0
    parts = [
        _CHECKPOINT_HEADER.pack(
            CHECKPOINT_MAGIC, VERSION, MODEL_CLASSES.index(model.kind), kind
        )
    ]
    if kind:
        parts.append(ldr_to_bytes(model.layer))
    else:
        parts.append(_UINT32.pack(model.n))
        parts.append(model.layer.ravel(order='F').astype('<f8').tobytes())
    if model.W2 is None:
        parts.append(_SHAPE.pack(0, 0))
    else:
        parts.append(_SHAPE.pack(*model.W2.shape))
        parts.append(model.W2.ravel(order='F').astype('<f8').tobytes())
        parts.append(model.b2.astype('<f8').tobytes())
    with open(filename, 'wb') as fh:
        fh.write(b''.join(parts))


def read_checkpoint(filename: str | PathLike[Any], /) -> ShlModel:
    """Return model read from checkpoint file.

    Parameters
    ----------
    filename : str or path-like
        Name of checkpoint file written by :py:func:`write_checkpoint`.

    Raises
    ------
    ValueError
        File is not a valid checkpoint. The message contains the byte
        offset of the error.

    """
    with open(filename, 'rb') as fh:
        data = fh.read()
    reader = _Reader(data)
    magic, version, class_index, kind = reader.unpack(_CHECKPOINT_HEADER)
    if magic != CHECKPOINT_MAGIC:
        raise reader.error(f'invalid magic {magic!r}', 0)
    if version != VERSION:
        raise reader.error(f'unsupported version {version}', 4)
    if class_index >= len(MODEL_CLASSES):
        raise reader.error(f'invalid model class {class_index}', 8)
    model_class = MODEL_CLASSES[class_index]
    if kind != (model_class != 'unstructured'):
        raise reader.error(
            f'layer kind {kind} does not match model {model_class!r}', 9
        )
    layer: Any
    if kind:
        layer, _ = _read_ldr(reader)
    else:
        (n,) = reader.unpack(_UINT32)
        if n < 1:
            raise reader.error(f'invalid size {n=}', reader.offset - 4)
        layer = reader.array((n, n))
    head_offset = reader.offset
    rows, cols = reader.unpack(_SHAPE)
    w2 = b2 = None
    if rows or cols:
        n = layer.n if kind else layer.shape[0]
        if cols != n or rows < 1:
            raise reader.error(
                f'output layer shape ({rows}, {cols}) does not match {n=}',
                head_offset,
            )
        w2 = reader.array((rows, cols))
        b2 = reader.array((rows,))
    if reader.offset != len(data):
        raise reader.error(
            f'{len(data) - reader.offset} unexpected trailing bytes'
        )
    return ShlModel(model_class, layer, w2, b2)


def dump_rows(
    model: ShlModel, /, generators: bool = False
) -> list[tuple[str, int, float]]:
    """Return learnable operator entries of model as rows.

    Parameters
    ----------
    model : ShlModel
        Model.
    generators : bool, optional
        Also return entries of generators `G` and `H` in row-major order.

    Returns
    -------
    list of tuple
        Rows ``(tensor, index, value)``, where tensor is ``'op_a'``,
        ``'op_b'``, ``'G'``, or ``'H'``. Empty for unstructured models.

    Examples
    --------
    >>> from ldrpy.learn import init_model
    >>> dump_rows(init_model('ldr-sd', 3, seed=0))[:3]
    [('op_a', 0, 1.0), ('op_a', 1, 1.0), ('op_a', 2, 0.0)]

    """
    if not isinstance(model.layer, LdrMatrix):
        return []
    tensors = [
        ('op_a', operator_params(model.layer.op_a)),
        ('op_b', operator_params(model.layer.op_b)),
    ]
    if generators:
        tensors.append(('G', model.layer.G.ravel()))
        tensors.append(('H', model.layer.H.ravel()))
    return [
        (name, index, float(value))
        for name, values in tensors
        for index, value in enumerate(values)
    ]
