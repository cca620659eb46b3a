"""Run configuration: a YAML file with a fixed schema.

Unknown keys are rejected with the line they appear on.
"""
from __future__ import division

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import yaml

from .base import build_chart, chart_module
from .core import ConfigParse
from .flow import Formulation, IntegratorConfig, MagneticTransport
from .initial_data import MODES

logger = logging.getLogger(__name__)

MAX_AMPLITUDE = 0.1
STENCIL_ORDERS = (2, 4, 6)


@dataclass(frozen=True)
class ChartSpec:
    kind: str = 'cusp'
    extent: tuple = None
    length: float = 1.0
    y_range: tuple = (1.0, 2.0)
    stencil_order: int = 4
    collar: int = None

    def build(self):
        return build_chart(self.kind, self.extent, self.stencil_order, self.length,
                           self.y_range, self.collar)

    @property
    def module(self):
        return chart_module(self.kind)


@dataclass(frozen=True)
class PerturbationSpec:
    amplitude: float = 1e-3
    support_radius: float = 0.25
    mode: str = 'bump'
    wavenumber: int = 1
    seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    chart: ChartSpec = field(default_factory=ChartSpec)
    dimension: int = 4
    formulation: str = 'first_order'
    w_sector: bool = True
    magnetic_transport: str = 'maxwell'
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    t_start: float = 1.0
    t_end: float = math.e
    cfl: float = 0.25
    monitor_every: int = 1
    checkpoint_every: int = 0
    norm_order: int = 2
    norm_order_cap: int = 2
    nonpositivity_samples: int = 64
    support_fraction: float = 1e-3
    validator_budget_factor: float = 10.0
    output_dir: str = 'runs/default'

    def integrator(self):
        return IntegratorConfig(cfl=self.cfl, t_start=self.t_start, t_end=self.t_end,
                                formulation=self.formulation, w_sector=self.w_sector,
                                magnetic_transport=self.magnetic_transport,
                                monitor_every=self.monitor_every,
                                checkpoint_every=self.checkpoint_every,
                                validator_budget_factor=self.validator_budget_factor,
                                support_fraction=self.support_fraction)

    def as_dict(self):
        out = asdict(self)
        if self.chart.extent is not None:
            out['chart']['extent'] = list(self.chart.extent)
        out['chart']['y_range'] = list(self.chart.y_range)
        return out


def default_extent(kind, dimension):
    if chart_module(kind).__name__.endswith('cusp'):
        return [12] * (dimension - 1) + [24]
    return [16] * dimension


def _key_lines(node, prefix=()):
    """Map key paths to 1-based line numbers from the composed YAML tree."""
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = prefix + (key_node.value,)
            lines[path] = key_node.start_mark.line + 1
            lines.update(_key_lines(value_node, path))
    return lines


def _check_keys(mapping, allowed, prefix, lines):
    if not isinstance(mapping, dict):
        path = '.'.join(prefix) or 'document'
        raise ConfigParse('{} must be a mapping'.format(path), lines.get(prefix), path)
    for key in mapping:
        if key not in allowed:
            path = prefix + (str(key),)
            raise ConfigParse('unknown key', lines.get(path), '.'.join(path))


def _names(cls):
    return [f.name for f in fields(cls)]


def _coerce(value, kind, path, lines):
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError(value)
            return value
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError(value)
            return int(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigParse('expected {}, got {!r}'.format(kind.__name__, value),
                          lines.get(path), '.'.join(path))


TYPES = {
    'dimension': int, 'formulation': str, 'w_sector': bool, 'magnetic_transport': str,
    't_start': float, 't_end': float, 'cfl': float, 'monitor_every': int,
    'checkpoint_every': int, 'norm_order': int, 'norm_order_cap': int,
    'nonpositivity_samples': int, 'support_fraction': float,
    'validator_budget_factor': float, 'output_dir': str,
}
CHART_TYPES = {'kind': str, 'length': float, 'stencil_order': int, 'collar': int}
PERTURBATION_TYPES = {'amplitude': float, 'support_radius': float, 'mode': str,
                      'wavenumber': int, 'seed': int}


def parse_config(text, source='<string>'):
    """RunConfig from YAML text; raises ConfigParse on any schema violation."""
    try:
        document = yaml.safe_load(text)
        tree = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigParse('{}: malformed YAML: {}'.format(source, getattr(e, 'problem', e)),
                          None if mark is None else mark.line + 1)
    document = {} if document is None else document
    lines = _key_lines(tree) if tree is not None else {}
    _check_keys(document, _names(RunConfig), (), lines)

    top = {}
    for key, kind in TYPES.items():
        if key in document:
            top[key] = _coerce(document[key], kind, (key,), lines)

    chart_doc = document.get('chart', {}) or {}
    _check_keys(chart_doc, _names(ChartSpec), ('chart',), lines)
    chart = {}
    for key, kind in CHART_TYPES.items():
        if key in chart_doc and chart_doc[key] is not None:
            chart[key] = _coerce(chart_doc[key], kind, ('chart', key), lines)
    for key, length in (('extent', None), ('y_range', 2)):
        if key in chart_doc:
            value = chart_doc[key]
            if not isinstance(value, list) or (length and len(value) != length):
                raise ConfigParse('{} must be a list'.format(key) if length is None else
                                  '{} must be a list of {}'.format(key, length),
                                  lines.get(('chart', key)), 'chart.' + key)
            kind = int if key == 'extent' else float
            chart[key] = tuple(_coerce(v, kind, ('chart', key), lines) for v in value)

    pert_doc = document.get('perturbation', {}) or {}
    _check_keys(pert_doc, _names(PerturbationSpec), ('perturbation',), lines)
    perturbation = {}
    for key, kind in PERTURBATION_TYPES.items():
        if key in pert_doc:
            perturbation[key] = _coerce(pert_doc[key], kind, ('perturbation', key), lines)

    config = _validated(top, chart, perturbation, lines)
    logger.debug('parsed %s: %s', source, config)
    return config


def _fail(msg, path, lines):
    raise ConfigParse(msg, lines.get(path), '.'.join(path))


def _validated(top, chart, perturbation, lines):
    dimension = top.get('dimension', 4)
    if dimension < 3:
        _fail('dimension must be at least 3', ('dimension',), lines)
    kind = chart.get('kind', 'cusp')
    try:
        chart_module(kind)
    except NotImplementedError as e:
        _fail(str(e), ('chart', 'kind'), lines)
    if 'extent' not in chart:
        chart['extent'] = tuple(default_extent(kind, dimension))
    if len(chart['extent']) != dimension:
        _fail('extent has {} axes, dimension is {}'.format(len(chart['extent']), dimension),
              ('chart', 'extent'), lines)
    if chart.get('stencil_order', 4) not in STENCIL_ORDERS:
        _fail('stencil_order must be one of {}'.format(STENCIL_ORDERS),
              ('chart', 'stencil_order'), lines)

    w_sector = top.get('w_sector', dimension >= 4)
    top['w_sector'] = w_sector
    if dimension == 3 and w_sector:
        _fail('the W sector vanishes in dimension 3; set w_sector: false', ('w_sector',), lines)
    for key, enum in (('formulation', Formulation), ('magnetic_transport', MagneticTransport)):
        if key in top:
            try:
                enum(top[key])
            except ValueError:
                _fail('{} must be one of {}'.format(key, [m.value for m in enum]), (key,), lines)
    if top.get('magnetic_transport') == 'weyl' and dimension < 4:
        _fail('weyl magnetic transport needs dimension >= 4', ('magnetic_transport',), lines)

    if perturbation.get('amplitude', 1e-3) > MAX_AMPLITUDE:
        _fail('amplitude must not exceed {}'.format(MAX_AMPLITUDE),
              ('perturbation', 'amplitude'), lines)
    if perturbation.get('mode', 'bump') not in MODES:
        _fail('mode must be one of {}'.format(MODES), ('perturbation', 'mode'), lines)
    if not 0.0 < perturbation.get('support_radius', 0.25) <= 0.5:
        _fail('support_radius must lie in (0, 0.5]', ('perturbation', 'support_radius'), lines)

    if top.get('t_start', 1.0) < 1.0:
        _fail('t_start must be at least 1', ('t_start',), lines)
    if top.get('t_end', math.e) <= top.get('t_start', 1.0):
        _fail('t_end must exceed t_start', ('t_end',), lines)
    if not 0.0 < top.get('cfl', 0.25) < 1.0:
        _fail('cfl must lie in (0, 1)', ('cfl',), lines)
    for key in ('monitor_every', 'norm_order_cap', 'nonpositivity_samples'):
        if key in top and top[key] < 1:
            _fail('{} must be positive'.format(key), (key,), lines)
    for key in ('checkpoint_every', 'norm_order'):
        if key in top and top[key] < 0:
            _fail('{} must not be negative'.format(key), (key,), lines)

    return RunConfig(chart=ChartSpec(**chart), perturbation=PerturbationSpec(**perturbation),
                     **top)


def load_config(path):
    with open(path) as f:
        return parse_config(f.read(), path)


def dump_config(config):
    return yaml.safe_dump(config.as_dict(), sort_keys=True, default_flow_style=False)
