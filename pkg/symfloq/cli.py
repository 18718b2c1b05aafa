import logging
import sys
from itertools import product

import click
import numpy as np

from symfloq.dynamics.entangle import DEFAULT_LONG_WINDOW, entanglement_series, series_period, time_average
from symfloq.dynamics.floquet import (
    DEFAULT_PERIOD_HORIZON,
    DEFAULT_TAU,
    FloquetParams,
    build_floquet,
    operator_period,
    projective_period,
    spectrum,
)
from symfloq.dynamics.symbasis import CoherentParams
from symfloq.errors import InvalidParamsError, SymfloqError
from symfloq.harness.sweep import (
    AVERAGING_MODES,
    BACKENDS,
    MEASURES,
    SweepSpec,
    dip_report,
    extrema_report,
    grid_tasks,
    int_range,
    rows_to_frame,
    run_tasks,
    state_tasks,
    value_range,
)
from symfloq.harness.utils import (
    companion_path,
    parse_angle,
    read_config,
    split_values,
    worker_count,
    write_json,
    write_table,
)
from symfloq.harness.validate import SUITES, run_validation

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(levelname)s %(name)s: %(message)s'
EXIT_NUMERIC_FAILURE = 3


class AngleType(click.ParamType):
    """Radians, or multiples of pi such as 2pi/3 or -pi/12"""
    name = 'angle'

    def convert(self, value, param, ctx):
        try:
            return parse_angle(value)
        except InvalidParamsError as e:
            self.fail(str(e), param, ctx)


class StateType(click.ParamType):
    """Initial state as "theta0,phi0", each an angle"""
    name = 'state'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        parts = str(value).split(',')
        if len(parts) != 2:
            self.fail(f"expected theta0,phi0, got {value!r}", param, ctx)
        try:
            return parse_angle(parts[0]), parse_angle(parts[1])
        except InvalidParamsError as e:
            self.fail(str(e), param, ctx)


ANGLE = AngleType()
STATE = StateType()


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format=LOG_FORMAT,
                        stream=sys.stderr, force=True)


def _options(*decorators):
    def apply(fn):
        for decorator in reversed(decorators):
            fn = decorator(fn)
        return fn
    return apply


def _out_path(out, stem, fmt):
    return out or f"{stem}.{fmt}"


_tau_option = click.option('--tau', type=ANGLE, default=DEFAULT_TAU, show_default=False,
                           help='Kick period tau (radians or pi expression). Default is pi/4.')
_format_option = click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default='csv',
                              help='Output format. Default is csv.')
_verbose_option = click.option('--verbose', '-v', is_flag=True, help='Enable verbose output.')

sweep_options = _options(
    _tau_option,
    click.option('--averaging', type=click.Choice(AVERAGING_MODES), default='auto',
                 help='Time-averaging policy: exact period when one is found (auto), exact period only, '
                      'or a long window. Default is auto.'),
    click.option('--window', type=click.IntRange(min=1), default=DEFAULT_LONG_WINDOW,
                 help=f'Long-window length in steps. Default is {DEFAULT_LONG_WINDOW}.'),
    click.option('--horizon', type=click.IntRange(min=1), default=DEFAULT_PERIOD_HORIZON,
                 help=f'Largest operator period searched. Default is {DEFAULT_PERIOD_HORIZON}.'),
    click.option('--backend', type=click.Choice(BACKENDS), default='symmetric',
                 help='Evolution backend; brute uses the full 2^N state (N <= 12). Default is symmetric.'),
    click.option('--workers', type=int, default=None,
                 help='Worker processes, capped by SYMFLOQ_THREADS. Default is all cores.'),
    click.option('--no-progress', is_flag=True, help='Hide the progress bar.'),
    _format_option,
    _verbose_option,
)


@click.group()
@click.option('--config', '-c', type=click.Path(exists=True, dir_okay=False), default=None,
              help='key=value file with option defaults; command-line flags override it.')
@click.pass_context
def cli(ctx, config):
    """symfloq - symmetry-reduced kicked Ising dynamics and entanglement"""
    if not config:
        return
    try:
        values = read_config(config)
    except InvalidParamsError as e:
        raise click.UsageError(str(e), ctx=ctx)
    default_map = {}
    known = set()
    for name, command in cli.commands.items():
        default_map[name] = {}
        for param in command.params:
            spellings = {param.name} | {opt.lstrip('-').replace('-', '_') for opt in param.opts}
            known |= spellings
            for key in spellings & set(values):
                default_map[name][param.name] = split_values(values[key]) if param.multiple else values[key]
    for key in sorted(set(values) - known):
        logger.warning("ignoring unknown config key %r in %s", key, config)
    ctx.default_map = default_map


def _resolve_workers(workers):
    try:
        return worker_count(workers)
    except InvalidParamsError as e:
        raise click.BadParameter(str(e), param_hint='--workers')


@cli.command('simulate')
@click.option('--n-qubits', '-n', type=int, default=4, help='Number of qubits N. Default is 4.')
@click.option('--j', 'ising_strength', type=float, default=1.0, help='Ising strength J. Default is 1.')
@_tau_option
@click.option('--theta0', type=ANGLE, default=0.0, help='Polar angle of the initial state. Default is 0.')
@click.option('--phi0', type=ANGLE, default=0.0, help='Azimuthal angle of the initial state. Default is 0.')
@click.option('--steps', type=click.IntRange(min=0), default=100, help='Number of Floquet periods. Default is 100.')
@click.option('--out', '-o', default=None, help='Series output file. Default is series.<format>.')
@_format_option
@_verbose_option
@click.pass_context
def simulate(ctx, n_qubits, ising_strength, tau, theta0, phi0, steps, out, fmt, verbose):
    """Entanglement time series of one coherent initial state"""
    _configure_logging(verbose)
    try:
        f = FloquetParams(n_qubits, ising_strength, tau)
        p = CoherentParams.from_bloch(n_qubits, theta0, phi0)
    except InvalidParamsError as e:
        raise click.BadParameter(str(e))
    out = _out_path(out, 'series', fmt)
    try:
        u = build_floquet(f)
        exact = operator_period(u)
        projective = projective_period(u)
        series = entanglement_series(p, f, steps, u=u, period_hint=projective, detect_period=False)
        period = series_period(series)
        record = time_average(series, 'exact-period', period=period) if period else time_average(series, 'long-window')
        spectral = spectrum(u)
        write_table(series.to_frame(), out, fmt)
        summary_path = write_json({
            'n': n_qubits, 'j': ising_strength, 'tau': tau, 'theta0': p.theta0, 'phi0': p.phi0, 'steps': steps,
            'operator_period': exact, 'projective_period': projective, 'entanglement_period': period,
            'averaging': record.mode, 'avg_s_lin': record.s_lin, 'avg_s_vn': record.s_vn, 'avg_conc': record.conc,
            'drift': record.drift,
            'eigenphases': spectral.phases, 'blocks': list(spectral.block_labels),
            'degeneracies': [{'phase': k, 'multiplicity': v} for k, v in spectral.degeneracies.items()],
        }, companion_path(out, 'summary'))
    except SymfloqError as e:
        click.echo(f"Error simulating: {str(e)}", err=True)
        ctx.exit(EXIT_NUMERIC_FAILURE)

    click.echo(f"➜ operator period: {exact if exact else 'none'} (projective {projective if projective else 'none'})")
    click.echo(f"➜ entanglement period: {period if period else 'none'}")
    click.echo(f"➜ averages ({record.mode}): s_lin={record.s_lin:.10g} s_vn={record.s_vn:.10g} conc={record.conc:.10g}")
    click.echo(f"➜ {out} written, summary in {summary_path}")


def _emit_rows(rows, out, fmt):
    frame = rows_to_frame(rows, with_vn_ratio=(fmt == 'json'))
    write_table(frame, out, fmt)
    return rows_to_frame(rows)


@cli.command('sweep-grid')
@click.option('--n-qubits', '-n', type=int, multiple=True, default=(4,),
              help='Number of qubits N; repeat for several. Default is 4.')
@click.option('--j', 'ising_strengths', type=float, multiple=True, default=(1.0,),
              help='Ising strength J; repeat for several. Default is 1.')
@click.option('--grid-theta', type=int, default=101, help='theta0 grid points over [0, pi]. Default is 101.')
@click.option('--grid-phi', type=int, default=101, help='phi0 grid points over [-pi, pi]. Default is 101.')
@click.option('--measures', type=click.Choice(MEASURES), multiple=True, default=MEASURES,
              help='Measures in the extrema report; repeat for several. Default is all three.')
@click.option('--out', '-o', default=None, help='Output file. Default is sweep_grid.<format>.')
@sweep_options
@click.pass_context
def sweep_grid(ctx, n_qubits, ising_strengths, grid_theta, grid_phi, measures, out, tau, averaging, window,
               horizon, backend, workers, no_progress, fmt, verbose):
    """Time-averaged measures over a (theta0, phi0) grid of initial states, for every (N, J)"""
    _configure_logging(verbose)
    workers = _resolve_workers(workers)
    out = _out_path(out, 'sweep_grid', fmt)
    try:
        spec = SweepSpec(tuple(n_qubits), tuple(ising_strengths), kick_period=tau, grid_theta=grid_theta,
                         grid_phi=grid_phi, averaging=averaging, window=window, period_horizon=horizon,
                         backend=backend, measures=tuple(measures))
        for n, j in product(spec.n_qubits, spec.ising_strengths):
            FloquetParams(n, j, tau)
    except InvalidParamsError as e:
        raise click.BadParameter(str(e))
    try:
        rows = run_tasks(grid_tasks(spec), workers=workers, progress=not no_progress)
        frame = _emit_rows(rows, out, fmt)
        extrema_path = write_json(extrema_report(frame, spec.measures), companion_path(out, 'extrema'))
    except SymfloqError as e:
        click.echo(f"Error sweeping grid: {str(e)}", err=True)
        ctx.exit(EXIT_NUMERIC_FAILURE)

    click.echo(f"➜ {len(rows)} grid points written to {out}")
    for (n, j), group in frame.groupby(['n', 'j'], sort=False):
        best = group['avg_s_lin'].idxmax()
        click.echo(f"➜ N={n} J={j:g}: avg_s_lin in [{group['avg_s_lin'].min():.6g}, {group.at[best, 'avg_s_lin']:.6g}], "
                   f"max at |{group.at[best, 'theta0']:.6g}, {group.at[best, 'phi0']:.6g}>")
    click.echo(f"➜ extrema report in {extrema_path}")


_state_option = click.option('--state', 'states', type=STATE, multiple=True,
                             help='Initial state theta0,phi0; repeat for several. Overrides --theta0/--phi0.')


def _run_state_sweep(ctx, n_values, j_values, states, tau, averaging, window, horizon, backend, workers,
                     no_progress, out, fmt, label):
    workers = _resolve_workers(workers)
    try:
        for n, (theta0, phi0) in product(n_values, states):
            CoherentParams.from_bloch(n, theta0, phi0)
        tasks = state_tasks(n_values, j_values, states, kick_period=tau, averaging=averaging,
                            window=window, period_horizon=horizon, backend=backend)
    except InvalidParamsError as e:
        raise click.BadParameter(str(e))
    try:
        rows = run_tasks(tasks, workers=workers, progress=not no_progress)
        frame = _emit_rows(rows, out, fmt)
    except SymfloqError as e:
        click.echo(f"Error running {label}: {str(e)}", err=True)
        ctx.exit(EXIT_NUMERIC_FAILURE)
    click.echo(f"➜ {len(rows)} points written to {out}")
    return frame


@cli.command('sweep-j')
@click.option('--n-qubits', '-n', type=int, multiple=True, default=(12,),
              help='Number of qubits N; repeat for several. Default is 12.')
@click.option('--j-min', type=float, default=0.1, help='Smallest J. Default is 0.1.')
@click.option('--j-max', type=float, default=1.5, help='Largest J (inclusive). Default is 1.5.')
@click.option('--j-step', type=float, default=0.05, help='J increment. Default is 0.05.')
@click.option('--theta0', type=ANGLE, default=0.0, help='Polar angle of the initial state. Default is 0.')
@click.option('--phi0', type=ANGLE, default=0.0, help='Azimuthal angle of the initial state. Default is 0.')
@_state_option
@click.option('--out', '-o', default=None, help='Output file. Default is sweep_j.<format>.')
@sweep_options
@click.pass_context
def sweep_j(ctx, n_qubits, j_min, j_max, j_step, theta0, phi0, states, out, tau, averaging, window, horizon,
            backend, workers, no_progress, fmt, verbose):
    """Normalised averaged linear entropy as a function of J, for every N and initial state"""
    _configure_logging(verbose)
    try:
        j_values = value_range(j_min, j_max, j_step)
    except InvalidParamsError as e:
        raise click.BadParameter(str(e))
    out = _out_path(out, 'sweep_j', fmt)
    frame = _run_state_sweep(ctx, list(n_qubits), j_values, list(states) or [(theta0, phi0)], tau, averaging,
                             window, horizon, backend, workers, no_progress, out, fmt, 'J sweep')
    dips_path = write_json(dip_report(frame), companion_path(out, 'dips'))
    click.echo(f"➜ dip report in {dips_path}")


@cli.command('sweep-n')
@click.option('--n-min', type=int, default=2, help='Smallest N. Default is 2.')
@click.option('--n-max', type=int, default=12, help='Largest N (inclusive). Default is 12.')
@click.option('--n-step', type=int, default=1, help='N increment. Default is 1.')
@click.option('--j', 'ising_strength', type=float, default=1.0, help='Ising strength J. Default is 1.')
@click.option('--theta0', type=ANGLE, default=0.0, help='Polar angle of the initial state. Default is 0.')
@click.option('--phi0', type=ANGLE, default=0.0, help='Azimuthal angle of the initial state. Default is 0.')
@_state_option
@click.option('--out', '-o', default=None, help='Output file. Default is sweep_n.<format>.')
@sweep_options
@click.pass_context
def sweep_n(ctx, n_min, n_max, n_step, ising_strength, theta0, phi0, states, out, tau, averaging, window, horizon,
            backend, workers, no_progress, fmt, verbose):
    """Normalised averaged linear entropy as a function of N"""
    _configure_logging(verbose)
    try:
        n_values = int_range(n_min, n_max, n_step)
    except InvalidParamsError as e:
        raise click.BadParameter(str(e))
    out = _out_path(out, 'sweep_n', fmt)
    frame = _run_state_sweep(ctx, n_values, [ising_strength], list(states) or [(theta0, phi0)], tau, averaging,
                             window, horizon, backend, workers, no_progress, out, fmt, 'N sweep')
    for parity, group in frame.groupby(frame['n'] % 2):
        click.echo(f"➜ {'odd' if parity else 'even'} N: mean ratio {np.mean(group['ratio']):.6g}")


@cli.command('validate')
@click.option('--suite', type=click.Choice(SUITES + ('all',)), default='all',
              help='Validation suite to run. Default is all.')
@click.option('--seed', type=int, default=7, help='Seed for the random crosscheck draws. Default is 7.')
@click.option('--draws', type=click.IntRange(min=1), default=50, help='Random crosschecks. Default is 50.')
@click.option('--grid', type=click.IntRange(min=2), default=25,
              help='Grid size per angle for formula agreement. Default is 25.')
@click.option('--out', '-o', default='validation.json', help='Report file. Default is validation.json.')
@_verbose_option
@click.pass_context
def validate(ctx, suite, seed, draws, grid, out, verbose):
    """Check the numeric pipeline against tabulated results and the brute-force oracle"""
    _configure_logging(verbose)
    suites = SUITES if suite == 'all' else (suite,)
    try:
        report = run_validation(suites, seed=seed, draws=draws, grid=grid)
        write_json(report.to_dict(), out)
    except SymfloqError as e:
        click.echo(f"Error validating: {str(e)}", err=True)
        ctx.exit(EXIT_NUMERIC_FAILURE)

    for check in report.failures():
        click.echo(f"✗ {check.suite}: {check.name}", err=True)
    click.echo(f"➜ {len(report.checks) - len(report.failures())}/{len(report.checks)} checks passed, report in {out}")
    if not report.passed:
        ctx.exit(1)


if __name__ == "__main__":
    cli()
