"""Learn structured layers.

The ``ldrpy.learn`` module provides:

- reverse-mode gradients of products with :py:class:`LdrMatrix` with
  respect to operators, generators, and inputs: :py:func:`matvec_backward`,
  :py:func:`reconstruct_backward`, checked by :py:func:`finite_diff_grad`
- single hidden layer models :py:class:`ShlModel` with a structured or
  unstructured hidden layer: :py:func:`init_model`,
  :py:func:`shl_forward`, :py:func:`shl_backward`
- stochastic gradient descent with momentum: :py:func:`sgd_step`
- a deterministic training loop configured by :py:class:`TrainConfig`:
  :py:func:`train`

Products are computed by the Krylov recurrences

.. math::

    Y = \\sum_{k=0}^{n-1} A^k G H^T B^k X

in O(r n**2) time per column, which are differentiated in closed form.
Models build the dense hidden layer once per batch from the same Krylov
stacks and differentiate through it.

Model classes are:

====================  ==========================  =========================
class                 operators (A, B)            learned entries
====================  ==========================  =========================
``unstructured``      none                        dense matrix
``low-rank``          zero                        G, H
``toeplitz-like``     ``(Z_1.T, Z_-1)``           G, H
``hankel-like``       ``(Z_1.T, Z_0.T)``          G, H
``vandermonde-like``  ``(diag(nodes), Z_0)``      G, H
``ldr-sd``            subdiagonal with corner     A, B, G, H
``ldr-td``            tridiagonal with corners    A, B, G, H
====================  ==========================  =========================

"""

from __future__ import annotations

__all__ = [
    'MODEL_CLASSES',
    'Gradients',
    'HistoryRow',
    'ShlCache',
    'ShlModel',
    'TrainConfig',
    'TrainResult',
    'finite_diff_grad',
    'init_model',
    'ldr_forward',
    'load_dataset',
    'matvec_backward',
    'model_from_params',
    'model_params',
    'reconstruct_backward',
    'sgd_step',
    'shl_backward',
    'shl_forward',
    'train',
]

import dataclasses
import json
import math
import os
import warnings
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import (
        Any,
        ArrayLike,
        Callable,
        Iterator,
        Mapping,
        NDArray,
        PathLike,
    )

import numpy
from tqdm import tqdm

from .classes import ClassicOperators, dct_nodes
from .datasets import Dataset, load_csv_dataset, synth_shift_task
from .displacement import (
    Diagonal,
    LdrMatrix,
    Shift,
    Subdiagonal,
    _krylov_product,
    _krylov_stack,
    apply_operator,
    as_tridiagonal,
    operator_from_params,
    operator_grad,
    operator_params,
    reconstruct,
)
from .utils import relative_error

MODEL_CLASSES = (
    'unstructured',
    'low-rank',
    'toeplitz-like',
    'hankel-like',
    'vandermonde-like',
    'ldr-sd',
    'ldr-td',
)
"""Names of hidden layer classes."""


@dataclasses.dataclass(frozen=True, eq=False)
class Gradients:
    """Gradients with respect to all parameters of product with LdrMatrix.

    Parameters
    ----------
    op_a, op_b : ndarray
        Gradients of learnable entries of operators, in the order of
        :py:func:`ldrpy.displacement.operator_params`.
    G, H : ndarray
        Gradients of generators of shape (n, r).
    X : ndarray, optional
        Gradient of inputs. None if the gradient was computed with
        respect to the dense matrix.

    """

    op_a: Any
    op_b: Any
    G: Any
    H: Any
    X: Any = None

    def as_dict(self) -> dict[str, NDArray[numpy.float64]]:
        """Return gradients by parameter name."""
        return {
            field.name: getattr(self, field.name)
            for field in dataclasses.fields(self)
            if getattr(self, field.name) is not None
        }


def _inputs(m: LdrMatrix, x: ArrayLike, name: str = 'X') -> Any:
    v = numpy.asarray(x, dtype=numpy.float64)
    if v.ndim not in {1, 2} or v.shape[0] != m.n:
        raise ValueError(f'{name} shape {v.shape} does not match {m.n=}')
    return v


def ldr_forward(m: LdrMatrix, x: ArrayLike, /) -> NDArray[numpy.float64]:
    """Return product of LdrMatrix with vector or matrix by recurrences.

    The projections ``H.T @ B**k @ X`` are accumulated by repeated
    application of ``B.T`` to `H`, and the sum over powers of `A` is
    evaluated by Horner's scheme. Operators may be of any variant.

    Parameters
    ----------
    m : LdrMatrix
        Matrix of size n and rank r.
    x : array_like
        Vector of length n or matrix with n rows.

    Returns
    -------
    ndarray
        ``reconstruct(m) @ x`` in O(r n**2) time per column.

    Examples
    --------
    >>> m = LdrMatrix(Shift(0, 3), Shift(0, 3), [[1], [0], [0]],
    ...               [[1], [1], [1]])
    >>> ldr_forward(m, [1.0, 2.0, 3.0])
    array([6, 3, 1])

    """
    inputs = _inputs(m, x)
    n = m.n
    w = m.H
    t = numpy.empty((n, m.rank) + inputs.shape[1:])
    for k in range(n):
        t[k] = w.T @ inputs
        if k < n - 1:
            w = apply_operator(m.op_b, w, transpose=True)
    z = m.G @ t[n - 1]
    for k in range(n - 2, -1, -1):
        z = m.G @ t[k] + apply_operator(m.op_a, z)
    return z


def matvec_backward(
    m: LdrMatrix, x: ArrayLike, dy: ArrayLike, /
) -> Gradients:
    """Return gradients of product with LdrMatrix.

    For ``Y = reconstruct(m) @ X`` and the upstream gradient ``dY`` of a
    scalar loss with respect to `Y`, return the gradients of the loss
    with respect to the learnable entries of both operators, the
    generators, and `X`. The recurrences of :py:func:`ldr_forward` are
    differentiated in reverse order.

    Parameters
    ----------
    m : LdrMatrix
        Matrix of size n and rank r.
    x : array_like
        Inputs, vector of length n or matrix of shape (n, b).
    dy : array_like
        Upstream gradient of same shape as `x`.

    Returns
    -------
    Gradients
        Exact gradients. Memory use is O(n**2 (r + b)).

    Raises
    ------
    ValueError
        Shapes do not match.

    Examples
    --------
    >>> m = LdrMatrix(Subdiagonal([1, 1, 1]), Subdiagonal([1, 1, 1]),
    ...               numpy.ones((4, 1)), numpy.ones((4, 1)))
    >>> grads = matvec_backward(m, numpy.ones(4), numpy.zeros(4))
    >>> bool(grads.op_a.any() or grads.G.any() or grads.X.any())
    False

    """
    inputs = _inputs(m, x)
    upstream = numpy.asarray(dy, dtype=numpy.float64)
    if upstream.shape != inputs.shape:
        raise ValueError(f'{upstream.shape=} != {inputs.shape=}')
    vector = inputs.ndim == 1
    if vector:
        inputs = inputs[:, None]
        upstream = upstream[:, None]
    n = m.n
    # forward pass, w[k] = (B.T)**k @ H, z[k] = sum_{j>=k} A**(j-k) G t[j]
    w = numpy.empty((n,) + m.H.shape)
    w[0] = m.H
    for k in range(1, n):
        w[k] = apply_operator(m.op_b, w[k - 1], transpose=True)
    t = numpy.einsum('kni,nb->kib', w, inputs)
    z = numpy.empty((n,) + inputs.shape)
    z[n - 1] = m.G @ t[n - 1]
    for k in range(n - 2, -1, -1):
        z[k] = m.G @ t[k] + apply_operator(m.op_a, z[k + 1])
    # backward through Horner scheme
    d_g = numpy.zeros_like(m.G)
    d_a = numpy.zeros_like(operator_params(m.op_a))
    dt = numpy.empty_like(t)
    dz = upstream
    for k in range(n):
        d_g += dz @ t[k].T
        dt[k] = m.G.T @ dz
        if k < n - 1:
            d_a += operator_grad(m.op_a, dz, z[k + 1])
            dz = apply_operator(m.op_a, dz, transpose=True)
    # backward through projections and powers of B.T
    dw = numpy.einsum('nb,kib->kni', inputs, dt)
    d_x = numpy.einsum('kni,kib->nb', w, dt)
    d_b = numpy.zeros_like(operator_params(m.op_b))
    adjoint = dw[n - 1]
    for k in range(n - 2, -1, -1):
        d_b += operator_grad(m.op_b, w[k], adjoint)
        adjoint = dw[k] + apply_operator(m.op_b, adjoint)
    return Gradients(d_a, d_b, d_g, adjoint, d_x[:, 0] if vector else d_x)


def reconstruct_backward(m: LdrMatrix, d_dense: ArrayLike, /) -> Gradients:
    """Return gradients of LdrMatrix parameters from dense gradient.

    For a scalar loss of ``M = reconstruct(m)`` and its gradient
    `d_dense` with respect to `M`, return the gradients of the loss with
    respect to the learnable entries of both operators and the
    generators. For a batch ``Y = M @ X``, the dense gradient is
    ``dY @ X.T``, so the cost does not depend on the batch size.

    Parameters
    ----------
    m : LdrMatrix
        Matrix of size n and rank r.
    d_dense : array_like
        Gradient of shape (n, n) with respect to the dense matrix.

    Returns
    -------
    Gradients
        Exact gradients without gradient of inputs, computed from the
        Krylov stacks of `m` in O(r n**3) time.

    Raises
    ------
    ValueError
        Shape of `d_dense` does not match `m`.

    Examples
    --------
    >>> m = LdrMatrix(Shift(0, 2), Shift(0, 2), [[1.0], [0.0]],
    ...               [[1.0], [0.0]])
    >>> reconstruct_backward(m, numpy.eye(2)).G.tolist()
    [[1.0], [0.0]]

    """
    upstream = numpy.asarray(d_dense, dtype=numpy.float64)
    if upstream.shape != (m.n, m.n):
        raise ValueError(f'{upstream.shape=} does not match {m.n=}')
    return _dense_backward(m, *_krylov_stacks(m), upstream)


def _krylov_stacks(m: LdrMatrix) -> tuple[Any, Any]:
    """Return stacks of ``A**k @ G`` and ``(B.T)**k @ H``."""
    return (
        _krylov_stack(m.op_a, m.G),
        _krylov_stack(m.op_b, m.H, transpose=True),
    )


def _flat(stack: NDArray[Any]) -> NDArray[Any]:
    """Return stack of shape (k, n, r) as matrix of shape (n, k r)."""
    return stack.transpose(1, 0, 2).reshape(stack.shape[1], -1)


def _dense_backward(
    m: LdrMatrix, ka: NDArray[Any], kb: NDArray[Any], d_dense: NDArray[Any]
) -> Gradients:
    n = m.n
    # M = sum_k ka[k] @ kb[k].T
    d_ka = (d_dense @ _flat(kb)).reshape(n, n, -1).transpose(1, 0, 2)
    d_kb = (d_dense.T @ _flat(ka)).reshape(n, n, -1).transpose(1, 0, 2)
    d_a, d_g = _stack_backward(m.op_a, ka, d_ka, transpose=False)
    d_b, d_h = _stack_backward(m.op_b, kb, d_kb, transpose=True)
    return Gradients(d_a, d_b, d_g, d_h)


def _stack_backward(
    op: Any, stack: NDArray[Any], d_stack: NDArray[Any], transpose: bool
) -> tuple[NDArray[Any], NDArray[Any]]:
    """Return gradients of operator and start vectors of Krylov stack."""
    n = op.n
    adjoint = numpy.empty_like(d_stack)
    adjoint[n - 1] = d_stack[n - 1]
    for k in range(n - 1, 0, -1):
        adjoint[k - 1] = d_stack[k - 1] + apply_operator(
            op, adjoint[k], transpose=not transpose
        )
    # stack[k] = op @ stack[k - 1], or op.T @ stack[k - 1]
    if transpose:
        d_op = operator_grad(op, _flat(stack[:-1]), _flat(adjoint[1:]))
    else:
        d_op = operator_grad(op, _flat(adjoint[1:]), _flat(stack[:-1]))
    return d_op, adjoint[0]


def finite_diff_grad(
    m: LdrMatrix,
    x: ArrayLike,
    loss: Callable[[NDArray[numpy.float64]], float],
    /,
    step: float = 1e-5,
) -> Gradients:
    """Return central finite difference gradients of loss of product.

    Parameters
    ----------
    m : LdrMatrix
        Matrix.
    x : array_like
        Inputs.
    loss : callable
        Scalar function of the product ``reconstruct(m) @ x``.
    step : float, optional
        Step size of central differences.

    Returns
    -------
    Gradients
        Approximate gradients with respect to every learnable entry.
        The product is evaluated by the dense :py:func:`reconstruct`
        oracle.

    Examples
    --------
    >>> m = LdrMatrix(Shift(0, 2), Shift(0, 2), [[1.0], [0.0]],
    ...               [[1.0], [0.0]])
    >>> grads = finite_diff_grad(m, [2.0, 0.0], lambda y: y[0] ** 2)
    >>> round(float(grads.G[0, 0]), 6)
    8.0

    """
    if not step > 0.0:
        raise ValueError(f'{step=} <= 0')
    inputs = numpy.array(_inputs(m, x), dtype=numpy.float64)
    values = [
        operator_params(m.op_a),
        operator_params(m.op_b),
        numpy.array(m.G),
        numpy.array(m.H),
        inputs,
    ]

    def evaluate() -> float:
        matrix = LdrMatrix(
            operator_from_params(m.op_a, values[0]),
            operator_from_params(m.op_b, values[1]),
            values[2],
            values[3],
        )
        return float(loss(reconstruct(matrix) @ values[4]))

    grads = []
    for value in values:
        flat = value.reshape(-1)
        grad = numpy.zeros(flat.size)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            plus = evaluate()
            flat[j] = orig - step
            minus = evaluate()
            flat[j] = orig
            grad[j] = (plus - minus) / (2.0 * step)
        grads.append(grad.reshape(value.shape))
    return Gradients(*grads)


@dataclasses.dataclass(frozen=True, eq=False)
class ShlModel:
    """Single hidden layer model.

    Classification models compute ``W2 @ relu(W1 @ x) + b2``.
    Regression models, without output layer, compute ``W1 @ x``.
    The hidden layer has no bias.

    Parameters
    ----------
    kind : str
        Class of hidden layer, one of :py:data:`MODEL_CLASSES`.
    layer : LdrMatrix or ndarray
        Hidden layer `W1` of size n.
    W2 : ndarray, optional
        Output layer of shape (classes, n).
    b2 : ndarray, optional
        Output bias of shape (classes,).

    """

    kind: str
    layer: Any
    W2: Any = None
    b2: Any = None

    def __post_init__(self) -> None:
        if self.kind not in MODEL_CLASSES:
            raise ValueError(f'{self.kind=!r} not in {MODEL_CLASSES}')
        if self.kind == 'unstructured':
            layer = numpy.array(self.layer, dtype=numpy.float64)
            if layer.ndim != 2 or layer.shape[0] != layer.shape[1]:
                raise ValueError(f'{layer.shape=} is not square')
            object.__setattr__(self, 'layer', layer)
        elif not isinstance(self.layer, LdrMatrix):
            raise TypeError(
                f'{type(self.layer)=} is not LdrMatrix for {self.kind=!r}'
            )
        if (self.W2 is None) != (self.b2 is None):
            raise ValueError('W2 and b2 must both be given or both be None')
        if self.W2 is not None:
            w2 = numpy.array(self.W2, dtype=numpy.float64)
            b2 = numpy.array(self.b2, dtype=numpy.float64)
            if w2.ndim != 2 or w2.shape[1] != self.n:
                raise ValueError(f'{w2.shape=} does not match {self.n=}')
            if b2.shape != (w2.shape[0],):
                raise ValueError(f'{b2.shape=} does not match {w2.shape=}')
            object.__setattr__(self, 'W2', w2)
            object.__setattr__(self, 'b2', b2)

    @property
    def n(self) -> int:
        """Size of hidden layer."""
        if isinstance(self.layer, LdrMatrix):
            return self.layer.n
        return int(self.layer.shape[0])

    @property
    def rank(self) -> int:
        """Displacement rank budget of hidden layer, 0 if unstructured."""
        if isinstance(self.layer, LdrMatrix):
            return self.layer.rank
        return 0

    @property
    def task(self) -> str:
        """``'classification'`` if model has output layer."""
        return 'regression' if self.W2 is None else 'classification'

    def dense_layer(self) -> NDArray[numpy.float64]:
        """Return hidden layer as dense matrix."""
        if isinstance(self.layer, LdrMatrix):
            return reconstruct(self.layer)
        return numpy.array(self.layer)


@dataclasses.dataclass(frozen=True, eq=False)
class ShlCache:
    """Activations of :py:func:`shl_forward` retained for backward pass.

    `stacks` holds the Krylov stacks of structured hidden layers.

    """

    x: Any
    pre: Any
    hidden: Any
    vector: bool
    stacks: Any = None


def init_model(
    kind: str,
    n: int,
    /,
    rank: int = 1,
    *,
    n_classes: int = 0,
    seed: int | numpy.random.Generator | None = None,
) -> ShlModel:
    """Return randomly initialized model.

    Structured operators start at fixed operators: subdiagonal operators
    at ``Z_0`` for `A` and ``Z_-1`` for `B`, tridiagonal operators at
    ``(Z_1.T, Z_-1)``. Generators are drawn from ``N(0, 1 / (n r))``,
    dense layers from ``N(0, 1 / n)``.
    The output layer is drawn from ``N(0, 1 / n)`` with zero bias.

    Parameters
    ----------
    kind : str
        Class of hidden layer, one of :py:data:`MODEL_CLASSES`.
    n : int
        Size of hidden layer.
    rank : int, optional
        Displacement rank budget of structured classes.
    n_classes : int, optional
        Number of classes. If 0, return a regression model.
    seed : int or numpy.random.Generator, optional
        Random seed or generator.

    Examples
    --------
    >>> model = init_model('ldr-sd', 4, 2, seed=0)
    >>> model.layer.op_b.sub.tolist(), model.layer.op_b.corner
    ([1.0, 1.0, 1.0], -1.0)

    """
    if kind not in MODEL_CLASSES:
        raise ValueError(f'{kind=!r} not in {MODEL_CLASSES}')
    if n < 1 or rank < 1 or n_classes < 0:
        raise ValueError(f'invalid {n=}, {rank=}, or {n_classes=}')
    rng = numpy.random.default_rng(seed)
    layer: Any
    if kind == 'unstructured':
        layer = rng.normal(0.0, 1.0 / math.sqrt(n), (n, n))
    else:
        op_a: Any
        op_b: Any
        if kind == 'low-rank':
            op_a = op_b = Diagonal(numpy.zeros(n))
        elif kind in {'toeplitz-like', 'hankel-like'}:
            op_a, op_b = ClassicOperators(kind, n).krylov_operators()
        elif kind == 'vandermonde-like':
            op_a, op_b = Diagonal(dct_nodes(n)), Shift(0, n)
        elif kind == 'ldr-sd':
            op_a = Subdiagonal(numpy.ones(n - 1))
            op_b = Subdiagonal(numpy.ones(n - 1), -1.0)
        else:
            ops = ClassicOperators('toeplitz-like', n).krylov_operators()
            op_a, op_b = (as_tridiagonal(op) for op in ops)
        scale = 1.0 / math.sqrt(n * rank)
        layer = LdrMatrix(
            op_a,
            op_b,
            rng.normal(0.0, scale, (n, rank)),
            rng.normal(0.0, scale, (n, rank)),
        )
    if n_classes == 0:
        return ShlModel(kind, layer)
    return ShlModel(
        kind,
        layer,
        rng.normal(0.0, 1.0 / math.sqrt(n), (n_classes, n)),
        numpy.zeros(n_classes),
    )


def shl_forward(
    model: ShlModel, x: ArrayLike, /
) -> tuple[NDArray[numpy.float64], ShlCache]:
    """Return output of model and activations.

    Parameters
    ----------
    model : ShlModel
        Model of size n.
    x : array_like
        Input vector of length n or batch of shape (n, b), one sample
        per column.

    Returns
    -------
    output : ndarray
        Logits ``W2 @ relu(W1 @ x) + b2`` of classification models,
        or ``W1 @ x`` of regression models.
    cache : ShlCache
        Activations for :py:func:`shl_backward`.

    Raises
    ------
    ValueError
        Size of `x` does not match model.

    Examples
    --------
    >>> model = ShlModel('unstructured', numpy.eye(2), numpy.eye(2),
    ...                  [0.5, 0.5])
    >>> shl_forward(model, [-1.0, 2.0])[0]
    array([0.5, 2.5])

    """
    inputs = numpy.asarray(x, dtype=numpy.float64)
    if inputs.ndim not in {1, 2} or inputs.shape[0] != model.n:
        raise ValueError(f'{inputs.shape=} does not match {model.n=}')
    vector = inputs.ndim == 1
    if vector:
        inputs = inputs[:, None]
    stacks: tuple[Any, Any] | None = None
    if isinstance(model.layer, LdrMatrix):
        # one dense matrix per batch
        stacks = _krylov_stacks(model.layer)
        pre = _krylov_product(*stacks) @ inputs
    else:
        pre = model.layer @ inputs
    if model.W2 is None:
        hidden = pre
        output = pre
    else:
        hidden = numpy.maximum(pre, 0.0)
        output = model.W2 @ hidden + model.b2[:, None]
    cache = ShlCache(inputs, pre, hidden, vector, stacks)
    return (output[:, 0] if vector else output), cache


def shl_backward(
    model: ShlModel, cache: ShlCache, d_output: ArrayLike, /
) -> dict[str, NDArray[numpy.float64]]:
    """Return gradients of model parameters.

    Parameters
    ----------
    model : ShlModel
        Model evaluated by :py:func:`shl_forward`.
    cache : ShlCache
        Activations returned by :py:func:`shl_forward`.
    d_output : array_like
        Gradient of loss with respect to model output.

    Returns
    -------
    dict
        Gradients keyed like :py:func:`model_params`.

    """
    upstream = numpy.asarray(d_output, dtype=numpy.float64)
    if cache.vector:
        upstream = upstream[:, None]
    grads: dict[str, NDArray[numpy.float64]] = {}
    if model.W2 is None:
        d_pre = upstream
    else:
        if upstream.shape != (model.W2.shape[0], cache.x.shape[1]):
            raise ValueError(f'{upstream.shape=} does not match output')
        grads['W2'] = upstream @ cache.hidden.T
        grads['b2'] = upstream.sum(axis=1)
        d_pre = (model.W2.T @ upstream) * (cache.pre > 0.0)
    if d_pre.shape != cache.pre.shape:
        raise ValueError(f'{d_pre.shape=} does not match output')
    if isinstance(model.layer, LdrMatrix):
        stacks = cache.stacks
        if stacks is None:
            stacks = _krylov_stacks(model.layer)
        layer_grads = _dense_backward(
            model.layer, *stacks, d_pre @ cache.x.T
        )
        grads['op_a'] = layer_grads.op_a
        grads['op_b'] = layer_grads.op_b
        grads['G'] = layer_grads.G
        grads['H'] = layer_grads.H
    else:
        grads['W1'] = d_pre @ cache.x.T
    return grads


def model_params(model: ShlModel, /) -> dict[str, NDArray[numpy.float64]]:
    """Return copies of all model parameters by name.

    Names are ``W1`` or ``op_a``, ``op_b``, ``G``, ``H`` for the hidden
    layer, and ``W2``, ``b2`` for the output layer.

    Examples
    --------
    >>> list(model_params(init_model('toeplitz-like', 4, 1, seed=0)))
    ['op_a', 'op_b', 'G', 'H']

    """
    params: dict[str, NDArray[numpy.float64]] = {}
    if isinstance(model.layer, LdrMatrix):
        params['op_a'] = operator_params(model.layer.op_a)
        params['op_b'] = operator_params(model.layer.op_b)
        params['G'] = numpy.array(model.layer.G)
        params['H'] = numpy.array(model.layer.H)
    else:
        params['W1'] = numpy.array(model.layer)
    if model.W2 is not None:
        params['W2'] = numpy.array(model.W2)
        params['b2'] = numpy.array(model.b2)
    return params


def model_from_params(
    model: ShlModel, params: Mapping[str, ArrayLike], /
) -> ShlModel:
    """Return model with parameters replaced.

    Parameters missing from `params` are kept.

    """
    unknown = set(params) - set(model_params(model))
    if unknown:
        raise ValueError(f'unknown parameters {sorted(unknown)}')
    layer = model.layer
    if isinstance(layer, LdrMatrix):
        changes: dict[str, Any] = {}
        for name in ('op_a', 'op_b'):
            if name in params:
                changes[name] = operator_from_params(
                    getattr(layer, name), params[name]
                )
        for name in ('G', 'H'):
            if name in params:
                changes[name] = params[name]
        if changes:
            layer = layer.replace(**changes)
    elif 'W1' in params:
        layer = params['W1']
    return ShlModel(
        model.kind,
        layer,
        params.get('W2', model.W2),
        params.get('b2', model.b2),
    )


def sgd_step(
    params: Mapping[str, ArrayLike],
    grads: Mapping[str, ArrayLike],
    /,
    learning_rate: float,
    momentum: float = 0.9,
    velocity: Mapping[str, ArrayLike] | None = None,
) -> tuple[dict[str, NDArray[Any]], dict[str, NDArray[Any]]]:
    """Return parameters and velocity after one step of SGD with momentum.

    Classical momentum: ``v = momentum * v - learning_rate * g`` and
    ``p = p + v``. Parameters without gradient are not changed.

    Parameters
    ----------
    params : mapping of str to array_like
        Parameters by name.
    grads : mapping of str to array_like
        Gradients of parameters by name.
    learning_rate : float
        Step size.
    momentum : float, optional
        Momentum factor.
    velocity : mapping of str to array_like, optional
        Velocity of previous step. Missing entries are zero.

    Returns
    -------
    params : dict
        Updated parameters.
    velocity : dict
        Updated velocity of parameters with gradient.

    Examples
    --------
    >>> p, v = sgd_step({'w': 1.0}, {'w': 1.0}, 0.1, 0.9)
    >>> p, v = sgd_step(p, {'w': 1.0}, 0.1, 0.9, v)
    >>> round(float(p['w']), 12), round(float(v['w']), 12)
    (0.71, -0.19)

    """
    velocity = {} if velocity is None else velocity
    new_params: dict[str, NDArray[Any]] = {}
    new_velocity: dict[str, NDArray[Any]] = {}
    for name, value in params.items():
        p = numpy.asarray(value, dtype=numpy.float64)
        if name not in grads:
            new_params[name] = p
            continue
        g = numpy.asarray(grads[name], dtype=numpy.float64)
        if g.shape != p.shape:
            raise ValueError(f'{name}: {g.shape=} != {p.shape=}')
        v = momentum * numpy.asarray(velocity.get(name, 0.0)) - (
            learning_rate * g
        )
        new_params[name] = p + v
        new_velocity[name] = v
    return new_params, new_velocity


def _learned(model: ShlModel) -> frozenset[str]:
    """Return names of parameters updated by training."""
    names = set(model_params(model))
    if model.kind not in {'ldr-sd', 'ldr-td'}:
        # fixed operators
        names -= {'op_a', 'op_b'}
    return frozenset(names)


_CONFIG_TYPES: dict[str, tuple[type, ...]] = {
    'model': (str,),
    'rank': (int,),
    'learning_rate': (int, float),
    'momentum': (int, float),
    'epochs': (int,),
    'batch_size': (int,),
    'seed': (int,),
    'dataset': (str,),
    'label_column': (int,),
    'csv_header': (bool,),
    'n': (int,),
    'samples': (int,),
    'noise': (int, float),
    'flip': (bool,),
    'validation_fraction': (int, float),
    'train_fraction': (int, float),
    'learning_rates': (list,),
    'trials': (int,),
}


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    """Configuration of training run.

    Parameters
    ----------
    model : str
        Class of hidden layer, one of :py:data:`MODEL_CLASSES`.
    rank : int, optional
        Displacement rank budget. Required for structured classes.
    learning_rate : float, optional
        Step size of SGD.
    momentum : float, optional
        Momentum factor of SGD.
    epochs : int, optional
        Number of passes over the training samples.
    batch_size : int, optional
        Number of samples per step.
    seed : int, optional
        Seed of datasets, initialization, and shuffling.
    dataset : str, optional
        ``'synthetic'`` for :py:func:`ldrpy.datasets.synth_shift_task`,
        else name of CSV file for
        :py:func:`ldrpy.datasets.load_csv_dataset`.
    label_column : int, optional
        Label column of CSV file.
    csv_header : bool, optional
        CSV file has header line.
    n : int, optional
        Size of synthetic task.
    samples : int, optional
        Number of samples of synthetic task.
    noise : float, optional
        Output noise of synthetic task.
    flip : bool, optional
        Use Hankel target in synthetic task.
    validation_fraction : float, optional
        Fraction of samples used for validation.
    train_fraction : float, optional
        Fraction of training samples used.
    learning_rates : list of float, optional
        Learning rates to sweep instead of `learning_rate`.
    trials : int, optional
        Number of differently seeded runs per learning rate.

    Raises
    ------
    ValueError
        A value is invalid or `rank` is missing for structured classes.

    """

    model: str
    rank: int | None = None
    learning_rate: float = 1e-3
    momentum: float = 0.9
    epochs: int = 10
    batch_size: int = 50
    seed: int = 0
    dataset: str = 'synthetic'
    label_column: int = -1
    csv_header: bool = False
    n: int = 64
    samples: int = 2000
    noise: float = 0.0
    flip: bool = False
    validation_fraction: float = 0.15
    train_fraction: float = 1.0
    learning_rates: tuple[float, ...] | None = None
    trials: int = 1

    def __post_init__(self) -> None:
        if self.model not in MODEL_CLASSES:
            raise ValueError(f'model={self.model!r} not in {MODEL_CLASSES}')
        if self.rank is None:
            if self.model != 'unstructured':
                raise ValueError(
                    f"missing key 'rank' for model={self.model!r}"
                )
        elif self.rank < 1:
            raise ValueError(f'rank={self.rank} < 1')
        if self.learning_rates is not None:
            rates = tuple(float(lr) for lr in self.learning_rates)
            if not rates:
                raise ValueError('learning_rates is empty')
            object.__setattr__(self, 'learning_rates', rates)
        for lr in self.sweep():
            if not lr >= 0.0:
                raise ValueError(f'learning_rate={lr} < 0')
        checks = (
            ('momentum', 0.0 <= self.momentum < 1.0),
            ('epochs', self.epochs >= 0),
            ('batch_size', self.batch_size >= 1),
            ('n', self.n >= 1),
            ('samples', self.samples >= 2),
            ('noise', self.noise >= 0.0),
            ('validation_fraction', 0.0 < self.validation_fraction < 1.0),
            ('train_fraction', 0.0 < self.train_fraction <= 1.0),
            ('trials', self.trials >= 1),
        )
        for key, valid in checks:
            if not valid:
                raise ValueError(f'invalid {key}={getattr(self, key)!r}')

    @classmethod
    def from_dict(cls, values: Mapping[str, Any], /) -> TrainConfig:
        """Return configuration from mapping of field names to values.

        Raises
        ------
        ValueError
            A key is unknown or missing, or a value has the wrong type.
            The message names the key.

        Examples
        --------
        >>> TrainConfig.from_dict({'model': 'ldr-sd', 'rank': 2}).momentum
        0.9
        >>> TrainConfig.from_dict({'model': 'ldr-sd'})
        Traceback (most recent call last):
         ...
        ValueError: missing key 'rank' for model='ldr-sd'

        """
        unknown = sorted(set(values) - set(_CONFIG_TYPES))
        if unknown:
            raise ValueError(f'unknown config keys {unknown}')
        if 'model' not in values:
            raise ValueError("missing key 'model'")
        for key, value in values.items():
            types = _CONFIG_TYPES[key]
            if key == 'rank' and value is None:
                continue
            if (
                isinstance(value, bool) and bool not in types
            ) or not isinstance(value, types):
                raise ValueError(
                    f'config key {key!r} has invalid type '
                    f'{type(value).__name__}'
                )
            if key == 'learning_rates' and not all(
                isinstance(lr, (int, float)) and not isinstance(lr, bool)
                for lr in value
            ):
                raise ValueError(
                    "config key 'learning_rates' is not a list of numbers"
                )
        return cls(**values)

    @classmethod
    def from_json(cls, filename: str | PathLike[Any], /) -> TrainConfig:
        """Return configuration from flat JSON document.

        A relative CSV `dataset` path is resolved against the directory
        of the configuration file.

        Raises
        ------
        ValueError
            The document is not a valid configuration.

        """
        fname = os.fspath(filename)
        with open(fname, encoding='utf-8') as fh:
            try:
                values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f'{fname}: invalid JSON, {exc}') from exc
        if not isinstance(values, dict):
            raise ValueError(f'{fname}: config is not a JSON object')
        dataset = values.get('dataset')
        if (
            isinstance(dataset, str)
            and dataset != 'synthetic'
            and not os.path.isabs(dataset)
        ):
            values['dataset'] = os.path.join(
                os.path.dirname(os.path.abspath(fname)), dataset
            )
        return cls.from_dict(values)

    def sweep(self) -> tuple[float, ...]:
        """Return learning rates to train with."""
        if self.learning_rates is None:
            return (self.learning_rate,)
        return self.learning_rates

    def replace(self, **changes: Any) -> TrainConfig:
        """Return copy with fields replaced."""
        return dataclasses.replace(self, **changes)


def load_dataset(config: TrainConfig, /) -> Dataset:
    """Return dataset of training configuration."""
    if config.dataset == 'synthetic':
        data = synth_shift_task(
            config.n,
            config.samples,
            config.noise,
            config.seed,
            flip=config.flip,
            validation_fraction=config.validation_fraction,
        )
    else:
        data = load_csv_dataset(
            config.dataset,
            config.label_column,
            header=config.csv_header,
            seed=config.seed,
            validation_fraction=config.validation_fraction,
        )
    return data.subsample(config.train_fraction, config.seed)


@dataclasses.dataclass(frozen=True)
class HistoryRow:
    """Metrics of model after epoch of training run.

    ``val_metric`` and ``train_metric`` are relative errors for regression
    and accuracies for classification. Epoch 0 is the initial model.

    """

    epoch: int
    train_loss: float
    train_metric: float
    val_metric: float
    learning_rate: float
    trial: int


@dataclasses.dataclass(frozen=True, eq=False)
class TrainResult:
    """Result of :py:func:`train`.

    Parameters
    ----------
    history : list of HistoryRow
        Metrics of all epochs of all runs in order.
    model : ShlModel
        Model with best validation metric.
    best : HistoryRow
        Metrics of best model.
    target_error : float or None
        Relative error of hidden layer of best model to target matrix of
        regression datasets with known target.

    """

    history: list[HistoryRow]
    model: ShlModel
    best: HistoryRow
    target_error: float | None = None


def _evaluate(
    model: ShlModel, x: NDArray[Any], y: NDArray[Any]
) -> tuple[float, float]:
    """Return loss and metric of model on samples stored as rows."""
    output, _ = shl_forward(model, x.T)
    if model.W2 is None:
        diff = output - y.T
        loss = 0.5 * float(numpy.sum(diff * diff)) / x.shape[0]
        return loss, relative_error(output, y.T)
    log_p = _log_softmax(output)
    loss = -float(numpy.mean(log_p[y, numpy.arange(y.size)]))
    accuracy = float(numpy.mean(numpy.argmax(output, axis=0) == y))
    return loss, accuracy


def _log_softmax(logits: NDArray[Any]) -> NDArray[Any]:
    shifted = logits - logits.max(axis=0, keepdims=True)
    return shifted - numpy.log(numpy.sum(numpy.exp(shifted), axis=0))


def _loss_grads(
    model: ShlModel, x: NDArray[Any], y: NDArray[Any]
) -> tuple[float, dict[str, NDArray[Any]]]:
    """Return loss and gradients on batch of samples stored as rows."""
    output, cache = shl_forward(model, x.T)
    batch = x.shape[0]
    if model.W2 is None:
        diff = output - y.T
        loss = 0.5 * float(numpy.sum(diff * diff)) / batch
        d_output = diff / batch
    else:
        log_p = _log_softmax(output)
        loss = -float(numpy.mean(log_p[y, numpy.arange(batch)]))
        d_output = numpy.exp(log_p)
        d_output[y, numpy.arange(batch)] -= 1.0
        d_output /= batch
    return loss, shl_backward(model, cache, d_output)


def _improved(metric: float, best: float | None, task: str) -> bool:
    if best is None:
        return True
    if task == 'regression':
        return metric < best
    return metric > best


def train(
    config: TrainConfig,
    /,
    dataset: Dataset | None = None,
    *,
    progress: bool = False,
) -> TrainResult:
    """Train single hidden layer model.

    For each learning rate of the sweep and each trial, a model is
    initialized by :py:func:`init_model` and trained by minibatch SGD
    with momentum on shuffled training samples. The loss is half the mean
    squared error for regression and the mean softmax cross-entropy for
    classification. Only learnable entries of the model class are updated.
    The model with the best validation metric over all epochs, learning
    rates, and trials is returned.
    In sweeps of several runs, a diverging run is reported by a
    ``RuntimeWarning`` and ends early, keeping its epochs so far.

    Parameters
    ----------
    config : TrainConfig
        Training configuration.
    dataset : Dataset, optional
        Dataset. By default, :py:func:`load_dataset` of `config`.
    progress : bool, optional
        Show progress bar on standard error.

    Returns
    -------
    TrainResult
        History and best model. Results are deterministic in
        ``config.seed``.

    Raises
    ------
    RuntimeError
        Loss became non-finite in the only run, or in all runs of a
        sweep. The message names learning rate, trial, and epoch.

    Examples
    --------
    >>> config = TrainConfig('toeplitz-like', rank=2, n=8, samples=100,
    ...                      epochs=2, learning_rate=0.01, seed=1)
    >>> result = train(config)
    >>> [row.epoch for row in result.history]
    [0, 1, 2]

    """
    data = load_dataset(config) if dataset is None else dataset
    history: list[HistoryRow] = []
    best_row: HistoryRow | None = None
    best_model: ShlModel | None = None
    rates = config.sweep()
    runs = len(rates) * config.trials
    diverged = 0
    total = runs * config.epochs
    with (
        numpy.errstate(all='ignore'),
        tqdm(
            total=total,
            disable=not progress,
            desc=config.model,
            unit='epoch',
        ) as bar,
    ):
        for rate_index, lr in enumerate(rates):
            for trial in range(config.trials):
                try:
                    for row, model in _train_run(
                        config, data, lr, rate_index, trial, bar
                    ):
                        history.append(row)
                        if _improved(
                            row.val_metric,
                            None if best_row is None else best_row.val_metric,
                            data.task,
                        ):
                            best_row = row
                            best_model = model
                except RuntimeError as exc:
                    diverged += 1
                    if diverged == runs:
                        raise
                    warnings.warn(str(exc), RuntimeWarning, stacklevel=2)
    assert best_row is not None and best_model is not None
    target_error = None
    if data.target is not None and data.target.shape == (data.n, data.n):
        target_error = relative_error(best_model.dense_layer(), data.target)
    return TrainResult(history, best_model, best_row, target_error)


def _train_run(
    config: TrainConfig,
    data: Dataset,
    lr: float,
    rate_index: int,
    trial: int,
    bar: Any,
) -> Iterator[tuple[HistoryRow, ShlModel]]:
    """Yield metrics and model after each epoch of one training run."""
    rng = numpy.random.default_rng([config.seed, rate_index, trial])
    model = init_model(
        config.model,
        data.n,
        1 if config.rank is None else config.rank,
        n_classes=data.n_classes,
        seed=rng,
    )
    learned = _learned(model)
    velocity: dict[str, NDArray[Any]] = {}
    for epoch in range(config.epochs + 1):
        if epoch > 0:
            model, velocity = _train_epoch(
                model, data, config, lr, learned, velocity, rng
            )
            bar.update(1)
        loss, metric = _evaluate(model, data.x_train, data.y_train)
        _, val_metric = _evaluate(model, data.x_val, data.y_val)
        if not (math.isfinite(loss) and math.isfinite(val_metric)):
            raise RuntimeError(
                f'training diverged, learning_rate={lr}, '
                f'{trial=}, {epoch=}, train_loss={loss}'
            )
        bar.set_postfix(loss=f'{loss:.4g}', refresh=False)
        yield HistoryRow(epoch, loss, metric, val_metric, lr, trial), model


def _train_epoch(
    model: ShlModel,
    data: Dataset,
    config: TrainConfig,
    lr: float,
    learned: frozenset[str],
    velocity: dict[str, NDArray[Any]],
    rng: numpy.random.Generator,
) -> tuple[ShlModel, dict[str, NDArray[Any]]]:
    """Return model and velocity after one pass over training samples."""
    size = data.x_train.shape[0]
    order = rng.permutation(size)
    for start in range(0, size, config.batch_size):
        index = order[start : start + config.batch_size]
        loss, grads = _loss_grads(
            model, data.x_train[index], data.y_train[index]
        )
        if not math.isfinite(loss):
            raise RuntimeError(
                f'training diverged, learning_rate={lr}, '
                f'batch at sample {start}, train_loss={loss}'
            )
        grads = {
            name: grad for name, grad in grads.items() if name in learned
        }
        params, velocity = sgd_step(
            model_params(model), grads, lr, config.momentum, velocity
        )
        model = model_from_params(model, params)
    return model, velocity
