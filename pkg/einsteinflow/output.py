"""Run directory contents: CSV series, manifest, summary and plots.
"""
from __future__ import division

import csv
import logging
import os
import subprocess

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import yaml  # noqa: E402

logger = logging.getLogger(__name__)

THREADS_VARIABLE = 'EINSTEINFLOW_THREADS'

CSV_COLUMNS = (
    'step', 't', 'tau', 'modified_energy', 'electric', 'magnetic', 'weyl_correction',
    'weyl_quadratic_form', 'energy_identity_rhs', 'trace_monitor', 'support',
    'gauss_l2', 'gauss_sup', 'codazzi_l2', 'codazzi_sup',
)

# norm columns drawn in the decay plot
PLOT_NORMS = ('sigma_H', 'E_H', 'H_H', 'W_Wgamma_H', 'g_gamma_H')


def report_row(step, report):
    """Flatten one EnergyReport to a column -> value mapping."""
    row = {
        'step': step,
        't': report.t,
        'tau': report.tau,
        'modified_energy': report.modified_energy,
        'electric': report.energy_terms.electric,
        'magnetic': report.energy_terms.magnetic,
        'weyl_correction': report.energy_terms.weyl_correction,
        'weyl_quadratic_form': report.weyl_quadratic_form,
        'energy_identity_rhs': report.energy_identity_rhs,
        'trace_monitor': report.trace_monitor,
        'support': report.support,
    }
    row.update(report.constraints)
    row.update(report.norms)
    return row


def columns_for(rows):
    extra = set()
    for row in rows:
        extra.update(k for k in row if k not in CSV_COLUMNS)
    return list(CSV_COLUMNS) + sorted(extra)


def _format(value):
    if isinstance(value, int):
        return str(value)
    return '%.17g' % value


def write_series(path, rows):
    columns = columns_for(rows)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row[c]) if c in row else '' for c in columns])
    logger.info('wrote %d rows to %s', len(rows), path)
    return columns


def read_series(path):
    """Column name -> list of floats (missing cells become NaN)."""
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        columns = {name: [] for name in header}
        for record in reader:
            for name, cell in zip(header, record):
                columns[name].append(float(cell) if cell else float('nan'))
    return columns


def build_id(version):
    """``git describe`` of the working tree, or v<version> outside a checkout."""
    try:
        out = subprocess.run(['git', 'describe', '--always', '--dirty'],
                             cwd=os.path.dirname(os.path.abspath(__file__)),
                             stdout=subprocess.PIPE, stderr=subprocess.DEVNULL,
                             check=True, timeout=10)
        described = out.stdout.decode().strip()
        if described:
            return described
    except (OSError, subprocess.SubprocessError):
        pass
    return 'v{}'.format(version)


def thread_count():
    return os.environ.get(THREADS_VARIABLE, 'unset')


def write_manifest(directory, config, version, extra=None):
    manifest = {'config': config.as_dict(), 'version': version,
                'build': build_id(version), 'threads': thread_count()}
    manifest.update(extra or {})
    path = os.path.join(directory, 'manifest.yaml')
    with open(path, 'w') as f:
        yaml.safe_dump(manifest, f, sort_keys=True, default_flow_style=False)
    return path


def write_summary(directory, summary):
    path = os.path.join(directory, 'summary.yaml')
    with open(path, 'w') as f:
        yaml.safe_dump(summary, f, sort_keys=True, default_flow_style=False)
    return path


def plot_series(series, directory, fmt='png'):
    """Energy, constraint and norm panels against tau; returns the written paths."""
    if fmt not in ('png', 'svg'):
        raise ValueError('plot format must be png or svg')
    os.makedirs(directory, exist_ok=True)
    tau = series['tau']
    panels = (
        ('energy', 'energy', [c for c in ('modified_energy', 'electric', 'magnetic',
                                          'weyl_correction') if c in series]),
        ('constraints', 'residual', [c for c in ('gauss_l2', 'codazzi_l2') if c in series]),
        ('norms', 'norm', sorted(c for c in series if c.startswith(PLOT_NORMS))),
    )
    paths = []
    for name, ylabel, columns in panels:
        if not columns:
            continue
        fig = plt.figure(figsize=(6.0, 6.0 * 0.618))
        ax = fig.add_subplot(1, 1, 1)
        for column in columns:
            values = [abs(v) for v in series[column]]
            if any(v > 0.0 for v in values):
                ax.semilogy(tau, values, label=column)
        ax.set_xlabel('tau')
        ax.set_ylabel(ylabel)
        ax.spines['right'].set_visible(False)
        ax.spines['top'].set_visible(False)
        if ax.lines:
            ax.legend(fontsize='small')
        path = os.path.join(directory, '{}.{}'.format(name, fmt))
        fig.savefig(path, bbox_inches='tight')
        plt.close(fig)
        paths.append(path)
    return paths
