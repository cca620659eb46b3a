"""Command-line entry point: ``einsteinflow <subcommand> ...``.

Exit codes: 0 success, 1 a verification or non-positivity check failed,
2 a run aborted, 3 the configuration was rejected.
"""
from __future__ import print_function

import argparse
import logging
import math
import os
import sys

from . import __version__
from .config import load_config
from .core import ConfigParse, EinsteinFlowException, RunAborted
from .diagnostics import Monitor, audit_energy_identity, fit_decay, weyl_nonpositivity
from .flow import Formulation, Trajectory, load_state, run
from .initial_data import initial_flow, initial_reduced
from .oracle import merge, run_algebraic_suite, run_differential_suite
from .output import (plot_series, read_series, report_row, write_manifest, write_series,
                     write_summary)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ABORTED = 2
EXIT_CONFIG = 3


def _error(e):
    print('error[{}]: {}'.format(getattr(e, 'reason', 'error'), e), file=sys.stderr)


def _rows(trajectory):
    return [report_row(sample.step, sample.reports[0]) for sample in trajectory.samples
            if sample.reports]


def _summary(trajectory, reports, aborted=None):
    summary = {'steps': trajectory.steps, 'samples': len(trajectory.samples)}
    if trajectory.samples:
        summary['t_final'] = float(trajectory.samples[-1].t)
    if reports:
        peaks = {}
        for report in reports:
            for key, value in report.norms.items():
                if key != 'gap':
                    peaks[key] = max(peaks.get(key, 0.0), float(value))
        summary['peak_norms'] = peaks
        summary['norm_order_gap'] = int(reports[-1].norms.get('gap', 0))
        audit = audit_energy_identity(reports)
        if audit:
            summary['energy_audit_max'] = float(max(audit))
    summary['aborted'] = aborted
    return summary


def simulate(args):
    config = load_config(args.config)
    grid = config.chart.build()
    chart = config.chart.module
    integrator = config.integrator()
    if args.resume:
        initial = load_state(args.resume)
        logger.info('resuming from %s at t = %.6f', args.resume, initial.t)
    elif integrator.formulation is Formulation.REDUCED:
        initial = initial_reduced(grid, chart, config.perturbation, config.t_start)
    else:
        initial = initial_flow(grid, chart, config.perturbation, config.t_start,
                               w_sector=config.w_sector)
    directory = args.out or config.output_dir
    checkpoints = os.path.join(directory, 'checkpoints')
    os.makedirs(checkpoints, exist_ok=True)
    write_manifest(directory, config, __version__,
                   {'resumed_from': args.resume} if args.resume else None)
    monitor = Monitor(chart, config.norm_order, config.norm_order_cap)
    aborted = None
    try:
        trajectory = run(initial, integrator, [monitor], checkpoints, chart)
    except RunAborted as e:
        _error(e)
        aborted = e.reason
        trajectory = e.trajectory or Trajectory()
    reports = [s.reports[0] for s in trajectory.samples if s.reports]
    write_series(os.path.join(directory, 'series.csv'), _rows(trajectory))
    write_summary(directory, _summary(trajectory, reports, aborted))
    return EXIT_ABORTED if aborted else EXIT_OK


def verify(args):
    reports = []
    if args.suite in ('algebraic', 'all'):
        reports.append(run_algebraic_suite(seed=args.seed))
    if args.suite in ('differential', 'all'):
        reports.append(run_differential_suite(seed=args.seed, stencil_order=args.stencil_order))
    report = merge(*reports)
    text = report.render()
    if args.report:
        with open(args.report, 'w') as f:
            f.write(text)
    else:
        print(text, end='')
    for case in report.failures():
        logger.warning('failed: %s (%s)', case.name, case.identity)
    return EXIT_OK if report.passed else EXIT_FAILED


def nonpositivity(args):
    config = load_config(args.config)
    grid = config.chart.build()
    chart = config.chart.module
    gamma = chart.background_metric(grid)
    w_gamma = chart.background_curvature(grid).weyl
    samples = args.samples or config.nonpositivity_samples
    verdict = weyl_nonpositivity(gamma, w_gamma, samples=samples, seed=config.perturbation.seed)
    print('nonpositive: {}'.format(str(verdict.nonpositive).lower()))
    print('worst: {:.6g}'.format(verdict.worst))
    print('worst_index: {}'.format(verdict.worst_index))
    print('samples: {}'.format(len(verdict.values)))
    return EXIT_OK if verdict.nonpositive else EXIT_FAILED


def fit(args):
    series = read_series(args.csv)
    if args.column not in series:
        raise ValueError('no column {!r} in {}'.format(args.column, args.csv))
    points = [(tau, value) for tau, value in zip(series['tau'], series[args.column])
              if not math.isnan(value)]
    result = fit_decay(points, args.window, args.column)
    print('name: {}'.format(result.name))
    print('window: [{:.6g}, {:.6g}]'.format(*result.window))
    print('exponent: {:.6g}'.format(result.exponent))
    print('intercept: {:.6g}'.format(result.intercept))
    print('residual: {:.6g}'.format(result.residual))
    print('delta: {:.6g}'.format(result.delta))
    print('samples: {}'.format(result.samples))
    return EXIT_OK


def plot(args):
    series = read_series(args.csv)
    directory = args.out or os.path.dirname(os.path.abspath(args.csv))
    for path in plot_series(series, directory, args.format):
        print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog='einsteinflow',
        description='Rescaled vacuum Einstein flow in Gaussian normal gauge.')
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='more logging (-v info, -vv debug)')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    p = commands.add_parser('simulate', help='evolve perturbed background data')
    p.add_argument('config')
    p.add_argument('--resume', metavar='CHECKPOINT')
    p.add_argument('--out', metavar='DIR', help='overrides output_dir')
    p.set_defaults(func=simulate)

    p = commands.add_parser('verify', help='run the oracle suites')
    p.add_argument('--suite', choices=('algebraic', 'differential', 'all'), default='all')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--stencil-order', type=int, choices=(2, 4, 6), default=4)
    p.add_argument('--report', metavar='PATH')
    p.set_defaults(func=verify)

    p = commands.add_parser('nonpositivity', help='sample the Weyl quadratic form')
    p.add_argument('config')
    p.add_argument('--samples', type=int)
    p.set_defaults(func=nonpositivity)

    p = commands.add_parser('fit', help='fit a power-law decay to a series column')
    p.add_argument('csv')
    p.add_argument('--column', required=True)
    p.add_argument('--window', type=float, nargs=2, metavar=('TAU1', 'TAU2'))
    p.set_defaults(func=fit)

    p = commands.add_parser('plot', help='static plots of a series')
    p.add_argument('csv')
    p.add_argument('--out', metavar='DIR')
    p.add_argument('--format', choices=('png', 'svg'), default='png')
    p.set_defaults(func=plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except ConfigParse as e:
        _error(e)
        return EXIT_CONFIG
    except RunAborted as e:
        _error(e)
        return EXIT_ABORTED
    except EinsteinFlowException as e:
        _error(e)
        return EXIT_FAILED
    except (OSError, ValueError) as e:
        print('error: {}'.format(e), file=sys.stderr)
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
