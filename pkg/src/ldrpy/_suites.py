"""Property suites run by the ``check`` command.

Each suite draws seeded random instances, evaluates a property on each,
and reports the worst value per property compared to its limit.

"""

from __future__ import annotations

__all__ = ['SUITES', 'PropertyResult', 'run_suites']

import dataclasses
import math
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._typing import Any, Callable, Iterable, Sequence

import numpy

from .classes import (
    CLASS_KINDS,
    acdc_rank_check,
    chebyshev_recurrence,
    closure_block,
    closure_inverse,
    closure_product,
    closure_sum,
    closure_transpose,
    dct_nodes,
    equivariance_check,
    generator_pair,
    orthopoly_certificate,
    orthopoly_matrix,
    random_class_member,
    toeplitz_like_ldr,
    verify_class,
)
from .displacement import (
    LdrMatrix,
    Shift,
    Subdiagonal,
    TridiagonalCorners,
    densify,
    displacement,
    displacement_rank,
    krylov,
    operator_from_params,
    operator_params,
    reconstruct,
)
from .fastmult import (
    circulant_matvec,
    fft_accounting,
    krylov_multiply,
    krylov_transpose_multiply,
    ldr_sd_matvec,
    ldr_td_matvec,
    toeplitz_like_matvec,
)
from .learn import (
    MODEL_CLASSES,
    finite_diff_grad,
    init_model,
    matvec_backward,
    reconstruct_backward,
)
from .utils import relative_error


@dataclasses.dataclass(frozen=True)
class PropertyResult:
    """Worst value of property over instances of suite."""

    suite: str
    name: str
    value: float
    limit: float
    instances: int

    FIELDS = ('suite', 'property', 'value', 'limit', 'instances', 'status')
    """CSV column names."""

    @property
    def passed(self) -> bool:
        """Value does not exceed limit. NaN values fail."""
        return bool(self.value <= self.limit)

    def values(self) -> tuple[Any, ...]:
        """Return values in order of :py:attr:`FIELDS`."""
        return (
            self.suite,
            self.name,
            self.value,
            self.limit,
            self.instances,
            'pass' if self.passed else 'FAIL',
        )


class _Worst:
    """Accumulator of worst value per property."""

    def __init__(self, suite: str) -> None:
        self.suite = suite
        self.values: dict[str, list[float]] = {}
        self.limits: dict[str, float] = {}

    def add(self, name: str, value: float, limit: float) -> None:
        self.values.setdefault(name, []).append(float(value))
        self.limits[name] = limit

    def results(self) -> list[PropertyResult]:
        results = []
        for name, values in self.values.items():
            # NaN propagates as worst value
            worst = max(
                values, key=lambda v: math.inf if math.isnan(v) else v
            )
            results.append(
                PropertyResult(
                    self.suite, name, worst, self.limits[name], len(values)
                )
            )
        return results


def _subdiagonal(
    rng: numpy.random.Generator, n: int, corner: float = 0.0
) -> Subdiagonal:
    return Subdiagonal(rng.uniform(-1.0, 1.0, n - 1), corner)


def _perturbed(rng: numpy.random.Generator, op: Any) -> Any:
    params = operator_params(op)
    return operator_from_params(
        op, params + 0.05 * rng.standard_normal(params.size)
    )


def _ldr(
    rng: numpy.random.Generator, op_a: Any, op_b: Any, rank: int
) -> LdrMatrix:
    n = op_a.n
    return LdrMatrix(
        op_a,
        op_b,
        rng.standard_normal((n, rank)),
        rng.standard_normal((n, rank)),
    )


def oracle_suite(
    rng: numpy.random.Generator, instances: int, tol: float | None
) -> list[PropertyResult]:
    """Fast multiplication algorithms agree with dense reconstruction."""
    tol = 1e-8 if tol is None else tol
    worst = _Worst('oracle')
    for _ in range(instances):
        for n in (4, 8, 16, 32, 64, 128, 256):
            for rank in (1, 2, 4):
                for b in (1, 3):
                    x = rng.standard_normal((n, b))
                    m = _ldr(
                        rng, _subdiagonal(rng, n), _subdiagonal(rng, n), rank
                    )
                    worst.add(
                        'ldr_sd_matvec',
                        relative_error(
                            ldr_sd_matvec(m, x), reconstruct(m) @ x
                        ),
                        tol,
                    )
                    ka = krylov(m.op_a, m.G)
                    worst.add(
                        'krylov_transpose_multiply',
                        relative_error(
                            krylov_transpose_multiply(m.op_a, m.G, x),
                            numpy.einsum('ink,nb->ibk', ka, x),
                        ),
                        tol,
                    )
                    coeffs = rng.standard_normal((rank, b, n))
                    worst.add(
                        'krylov_multiply',
                        relative_error(
                            krylov_multiply(m.op_a, m.G, coeffs),
                            numpy.einsum('ink,ibk->nb', ka, coeffs),
                        ),
                        tol,
                    )
                    worst.add(
                        'toeplitz_like_matvec',
                        relative_error(
                            toeplitz_like_matvec(m.G, m.H, x),
                            reconstruct(toeplitz_like_ldr(m.G, m.H)) @ x,
                        ),
                        tol,
                    )
                    f = float(rng.choice([0.0, 1.0, -1.0, 2.0]))
                    worst.add(
                        'circulant_matvec',
                        relative_error(
                            circulant_matvec(f, m.G[:, 0], x),
                            krylov(Shift(f, n), m.G[:, 0]) @ x,
                        ),
                        tol,
                    )
                    td = [
                        TridiagonalCorners(
                            0.5 * rng.uniform(-1.0, 1.0, n - 1),
                            0.5 * rng.uniform(-1.0, 1.0, n),
                            0.5 * rng.uniform(-1.0, 1.0, n - 1),
                            *(0.5 * rng.uniform(-1.0, 1.0, 2)),
                        )
                        for _ in range(2)
                    ]
                    m = _ldr(rng, td[0], td[1], rank)
                    worst.add(
                        'ldr_td_matvec',
                        relative_error(
                            ldr_td_matvec(m, x), reconstruct(m) @ x
                        ),
                        tol,
                    )
    return worst.results()


def ranks_suite(
    rng: numpy.random.Generator, instances: int, tol: float | None
) -> list[PropertyResult]:
    """Measured displacement ranks do not exceed certified bounds.

    Properties with integer limits are not affected by `tol`.

    """
    worst = _Worst('ranks')
    for _ in range(instances):
        for kind, bound in CLASS_KINDS.items():
            for n in (8, 16, 32):
                m, classic = random_class_member(kind, n, rng)
                worst.add(kind, verify_class(m, classic), bound)
        for n in (4, 8, 16):
            recurrence = chebyshev_recurrence(n)
            pair = orthopoly_certificate(*recurrence, dct_nodes(n))
            dct = orthopoly_matrix(*recurrence, dct_nodes(n))
            # the residual vanishes at Chebyshev nodes, compare to the matrix
            error = numpy.linalg.norm(
                displacement(dct, pair.op_a, pair.op_b) - pair.residual()
            ) / numpy.linalg.norm(dct)
            worst.add('dct_certificate_width', pair.rank, 1)
            worst.add(
                'dct_certificate_error', error, 1e-8 if tol is None else tol
            )
        worst.add(
            'acdc',
            acdc_rank_check(
                rng.uniform(0.5, 2.0, 8) * rng.choice([-1.0, 1.0], 8),
                rng.uniform(-2.0, 2.0, 8),
            ),
            2,
        )
        for rank in (1, 2, 4):
            for n in (8, 16, 32):
                op_a = Subdiagonal(
                    rng.uniform(0.5, 1.5, n - 1), float(rng.uniform(0.5, 1.5))
                )
                op_b = _subdiagonal(rng, n, float(rng.uniform(-1.0, 1.0)))
                m = reconstruct(_ldr(rng, op_a, op_b, rank))
                measured = displacement_rank(
                    m, numpy.linalg.inv(densify(op_a)), op_b
                )
                worst.add(
                    'krylov_certificate_excess', measured - 2 * rank, 0
                )
        for nrows, ncols in ((2, 2), (2, 3)):
            blocks = [
                [
                    reconstruct(
                        toeplitz_like_ldr(
                            rng.standard_normal((8, 1)),
                            rng.standard_normal((8, 1)),
                        )
                    )
                    for _ in range(ncols)
                ]
                for _ in range(nrows)
            ]
            measured = displacement_rank(
                numpy.block(blocks), Shift(1, 8 * nrows), Shift(-1, 8 * ncols)
            )
            worst.add(
                f'block_toeplitz_{nrows}x{ncols}',
                measured,
                nrows * ncols + 2 * nrows + 2 * ncols,
            )
    return worst.results()


def closure_suite(
    rng: numpy.random.Generator, instances: int, tol: float | None
) -> list[PropertyResult]:
    """Certificates of closure operations reproduce actual residuals."""
    tol = 1e-8 if tol is None else tol
    worst = _Worst('closure')
    n = 8
    z1 = Shift(1, n)
    zm1 = Shift(-1, n)
    for _ in range(instances):
        m, _ = random_class_member('toeplitz-like', n, rng)
        t, _ = random_class_member('toeplitz-like', n, rng)
        pair_m = generator_pair(m, z1, zm1)
        pair_t = generator_pair(t, z1, zm1)
        pair_n = generator_pair(t, zm1, z1)
        checks: list[tuple[str, Callable[[], tuple[Any, Any]]]] = [
            ('transpose', lambda: (m.T, closure_transpose(pair_m))),
            (
                'inverse',
                lambda: (numpy.linalg.inv(m), closure_inverse(m, pair_m)),
            ),
            ('sum', lambda: (m + t, closure_sum(pair_m, pair_t))),
            (
                'product',
                lambda: (m @ t, closure_product(m, t, pair_m, pair_n)),
            ),
            (
                'block',
                lambda: closure_block(
                    [[m, t], [t, m]], [[pair_m, pair_t], [pair_t, pair_m]]
                ),
            ),
        ]
        for name, check in checks:
            try:
                matrix, pair = check()
            except numpy.linalg.LinAlgError:
                worst.add(name, math.inf, tol)
                continue
            worst.add(name, pair.residual_error(matrix), tol)
            excess = pair.measured_rank(matrix) - pair.rank
            worst.add(f'{name}_rank', excess, 0)
    return worst.results()


def gradient_suite(
    rng: numpy.random.Generator, instances: int, tol: float | None
) -> list[PropertyResult]:
    """Analytic gradients agree with central finite differences."""
    tol = 1e-5 if tol is None else tol
    worst = _Worst('gradient')
    for _ in range(instances):
        for kind in MODEL_CLASSES[1:]:
            n = int(rng.choice([8, 16, 32]))
            rank = int(rng.choice([1, 2]))
            layer = init_model(kind, n, rank, seed=rng).layer
            if kind in {'ldr-sd', 'ldr-td'}:
                # all learnable entries nonzero, corners included
                layer = layer.replace(
                    op_a=_perturbed(rng, layer.op_a),
                    op_b=_perturbed(rng, layer.op_b),
                )
            x = rng.standard_normal(n)
            target = rng.standard_normal(n)
            y = reconstruct(layer) @ x
            analytic = matvec_backward(layer, x, y - target)
            numeric = finite_diff_grad(
                layer, x, lambda v: 0.5 * float(numpy.sum((v - target) ** 2))
            )
            expected = numeric.as_dict()
            error = max(
                relative_error(value, expected[name])
                for name, value in analytic.as_dict().items()
            )
            worst.add(kind, error, tol)
            dense = reconstruct_backward(layer, numpy.outer(y - target, x))
            error = max(
                relative_error(value, expected[name])
                for name, value in dense.as_dict().items()
            )
            worst.add(f'{kind}_dense', error, tol)
    return worst.results()


def equivariance_suite(
    rng: numpy.random.Generator, instances: int, tol: float | None
) -> list[PropertyResult]:
    """Maps of displacement rank 0 commute with operator powers."""
    tol = 1e-8 if tol is None else tol
    worst = _Worst('equivariance')
    n = 16
    for _ in range(instances):
        circulant = krylov(Shift(1, n), rng.standard_normal(n))
        worst.add(
            'circulant',
            equivariance_check(circulant, Shift(1, n), Shift(1, n)),
            tol,
        )
        worst.add(
            'circulant_rank',
            displacement_rank(circulant, Shift(1, n), Shift(1, n)),
            0,
        )
        q, _ = numpy.linalg.qr(rng.standard_normal((n, n)))
        op_b = densify(_subdiagonal(rng, n, float(rng.uniform(-1.0, 1.0))))
        op_a = q @ op_b @ q.T
        worst.add('similarity', equivariance_check(q, op_a, op_b), tol)
        worst.add('similarity_rank', displacement_rank(q, op_a, op_b), 0)
    return worst.results()


def accounting_suite(
    rng: numpy.random.Generator, instances: int, tol: float | None
) -> list[PropertyResult]:
    """Fast transpose multiplication performs log2(n) batched FFT rounds.

    At depth d, transforms have size 2**(d + 1) and there are n / 2**d
    subproblems.

    """
    worst = _Worst('accounting')
    for n in (8, 64, 1024):
        op = _subdiagonal(rng, n)
        with fft_accounting() as rounds:
            krylov_transpose_multiply(
                op, rng.standard_normal((n, 2)), rng.standard_normal((n, 1))
            )
        expected = [
            (d, 2 << d, n >> d) for d in range(n.bit_length() - 1)
        ]
        actual = [
            (item.depth, item.size, item.items)
            for item in rounds
            if item.kind == 'transpose'
        ]
        mismatch = sum(e != a for e, a in zip(expected, actual))
        worst.add(
            f'rounds_n{n}', mismatch + abs(len(expected) - len(actual)), 0
        )
    return worst.results()


SUITES: dict[
    str,
    Callable[
        [numpy.random.Generator, int, float | None], list[PropertyResult]
    ],
] = {
    'oracle': oracle_suite,
    'ranks': ranks_suite,
    'closure': closure_suite,
    'gradient': gradient_suite,
    'equivariance': equivariance_suite,
    'accounting': accounting_suite,
}
"""Property suites by name."""


def run_suites(
    only: Iterable[str] | None = None,
    /,
    tol: float | None = None,
    *,
    seed: int = 0,
    instances: int = 2,
) -> list[PropertyResult]:
    """Return results of property suites.

    Parameters
    ----------
    only : iterable of str, optional
        Names of suites to run. By default, all :py:data:`SUITES`.
    tol : float, optional
        Tolerance replacing the default relative error limits.
    seed : int, optional
        Seed of random instances.
    instances : int, optional
        Number of random instances per configuration.

    Raises
    ------
    ValueError
        A suite name is unknown.

    """
    names: Sequence[str] = tuple(SUITES) if only is None else tuple(only)
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise ValueError(f'unknown suites {unknown}, expected {tuple(SUITES)}')
    if instances < 1:
        raise ValueError(f'{instances=} < 1')
    results = []
    for name in names:
        rng = numpy.random.default_rng([seed, list(SUITES).index(name)])
        with numpy.errstate(all='ignore'):
            results.extend(SUITES[name](rng, instances, tol))
    return results
