"""LdrPy package command line interface.

Invoke the command line application with::

    $ python -m ldrpy --help

Commands write comma-separated values with a header row to standard
output and diagnostics to standard error.
The exit code is 0 on success, 1 if a property check fails or training
diverges, and 2 for usage and configuration errors.

"""

from __future__ import annotations

import csv
import io
import sys

import click

from . import version
from ._utils import format_float


class ConfigError(click.ClickException):
    """Invalid configuration file or dataset."""

    exit_code = 2


def _cell(value, /):
    if value is None:
        return ''
    if isinstance(value, float):
        return format_float(value)
    return value


def _echo_csv(values, /):
    """Write values as line of comma-separated values to stdout."""
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator='').writerow(map(_cell, values))
    click.echo(buffer.getvalue())


def _int_list(ctx, param, value):
    """Parse comma-separated list of integers."""
    if value is None:
        return None
    try:
        return tuple(int(item) for item in value.split(',') if item.strip())
    except ValueError:
        raise click.BadParameter(f'{value!r} is not a list of integers')


def _str_list(ctx, param, value):
    """Parse comma-separated list of names."""
    if value is None:
        return None
    return tuple(item.strip() for item in value.split(',') if item.strip())


@click.group(help='LdrPy package command line interface.')
@click.version_option(version=version.__version__)
def main() -> int:
    """LdrPy command line interface."""
    return 0


@main.command(help='Show runtime versions.')
@click.option(
    '--verbose',
    default=False,
    is_flag=True,
    type=click.BOOL,
    help='Show module paths.',
)
def versions(verbose):
    """Versions command group."""
    click.echo(version.versions(verbose=verbose))


@main.command(help='Run property suites of structured matrix algorithms.')
@click.option(
    '--only',
    multiple=True,
    type=click.Choice(
        [
            'oracle',
            'ranks',
            'closure',
            'gradient',
            'equivariance',
            'accounting',
        ]
    ),
    help='Run only this suite. Can be repeated.',
)
@click.option(
    '--tol',
    default=None,
    type=click.FloatRange(min=0.0, min_open=True),
    help='Relative error limit replacing the defaults of suites.',
)
@click.option(
    '--seed',
    default=0,
    type=int,
    envvar='LDR_SEED',
    show_default=True,
    help='Seed of random instances.',
)
@click.option(
    '--instances',
    default=2,
    type=click.IntRange(min=1),
    show_default=True,
    help='Number of random instances per configuration.',
)
@click.option(
    '--inject-fault',
    default=None,
    type=click.Choice(['twiddle']),
    hidden=True,
    help='Corrupt FFT twiddle factors.',
)
def check(only, tol, seed, instances, inject_fault):
    """Check command group."""
    import contextlib

    from ._suites import PropertyResult, run_suites
    from .linalg import fault_injection

    context = (
        fault_injection(inject_fault)
        if inject_fault
        else contextlib.nullcontext()
    )
    with context:
        results = run_suites(
            only or None, tol, seed=seed, instances=instances
        )
    _echo_csv(PropertyResult.FIELDS)
    for result in results:
        _echo_csv(result.values())
    failed = [result for result in results if not result.passed]
    if failed:
        suites = sorted({result.suite for result in failed})
        click.echo(
            f'{len(failed)} of {len(results)} properties failed '
            f'in suites {", ".join(suites)}',
            err=True,
        )
        sys.exit(1)
    click.echo(f'{len(results)} properties passed', err=True)


@main.command(help='Time structured matrix-vector multiplication.')
@click.option(
    '--sizes',
    default=None,
    callback=_int_list,
    help='Comma-separated matrix sizes, powers of two.',
)
@click.option(
    '--ranks',
    default=None,
    callback=_int_list,
    help='Comma-separated displacement ranks.',
)
@click.option(
    '--classes',
    default=None,
    callback=_str_list,
    help='Comma-separated classes: unstructured, low-rank, '
    'toeplitz-like, ldr-sd.',
)
@click.option(
    '--trials',
    default=None,
    type=click.IntRange(min=1),
    help='Multiplications per timed loop.  [default: 1000]',
)
@click.option(
    '--repeats',
    default=None,
    type=click.IntRange(min=1),
    help='Timed loops, the minimum is reported.  [default: 10]',
)
@click.option(
    '--warmup',
    default=None,
    type=click.IntRange(min=0),
    help='Untimed multiplications per matrix.  [default: 10]',
)
@click.option(
    '--seed',
    default=None,
    type=int,
    envvar='LDR_SEED',
    help='Seed of random matrices.',
)
def bench(sizes, ranks, classes, trials, repeats, warmup, seed):
    """Bench command group."""
    from ._utils import kwargs_notnone
    from .benchmark import BenchConfig, BenchRow, run_benchmark

    try:
        config = BenchConfig(
            **kwargs_notnone(
                sizes=sizes,
                ranks=ranks,
                classes=classes,
                trials=trials,
                repeats=repeats,
                warmup=warmup,
                seed=seed,
            )
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(
        f'# warmup={config.warmup} trials={config.trials} '
        f'repeats={config.repeats} batch=1'
    )
    _echo_csv(BenchRow.FIELDS)
    for row in run_benchmark(config):
        _echo_csv(row.values())


@main.command(help='Train single hidden layer model.')
@click.option(
    '--config',
    'config_file',
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help='JSON file of training configuration.',
)
@click.option(
    '--save',
    default=None,
    type=click.Path(dir_okay=False, writable=True),
    help='Write checkpoint of best model to file.',
)
@click.option(
    '--seed',
    default=None,
    type=int,
    envvar='LDR_SEED',
    help='Seed overriding configuration.',
)
@click.option(
    '--hideprogress',
    default=False,
    is_flag=True,
    type=click.BOOL,
    help='Hide progressbar.',
)
def train(config_file, save, seed, hideprogress):
    """Train command group."""
    from . import learn
    from .io import write_checkpoint

    try:
        config = learn.TrainConfig.from_json(config_file)
        if seed is not None:
            config = config.replace(seed=seed)
        data = learn.load_dataset(config)
    except (ValueError, IndexError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    try:
        result = learn.train(config, data, progress=not hideprogress)
    except RuntimeError as exc:
        click.echo(f'Error: {exc}', err=True)
        sys.exit(1)
    _echo_csv(
        (
            'epoch',
            'train_loss',
            'train_metric',
            'val_metric',
            'learning_rate',
            'trial',
        )
    )
    for row in result.history:
        _echo_csv(
            (
                row.epoch,
                row.train_loss,
                row.train_metric,
                row.val_metric,
                row.learning_rate,
                row.trial,
            )
        )
    best = result.best
    message = (
        f'best val_metric={best.val_metric:.6g} at epoch={best.epoch} '
        f'learning_rate={best.learning_rate:g} trial={best.trial}'
    )
    if result.target_error is not None:
        message += f' target_error={result.target_error:.6g}'
    click.echo(message, err=True)
    if save is not None:
        write_checkpoint(save, result.model)


@main.command(help='Print learnable operator entries of checkpoint.')
@click.argument(
    'checkpoint', type=click.Path(exists=True, dir_okay=False)
)
@click.option(
    '--generators',
    default=False,
    is_flag=True,
    type=click.BOOL,
    help='Also print entries of generators G and H.',
)
def dump(checkpoint, generators):
    """Dump command group."""
    from .io import dump_rows, read_checkpoint

    try:
        model = read_checkpoint(checkpoint)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint='CHECKPOINT') from exc
    rows = dump_rows(model, generators)
    if not rows:
        click.echo(
            f'{model.kind} model has no structured operators', err=True
        )
        return
    _echo_csv(('tensor', 'index', 'value'))
    for row in rows:
        _echo_csv(row)


if __name__ == '__main__':
    sys.exit(main())  # pylint: disable=no-value-for-parameter
