"""Chart backgrounds, looked up by name.
"""
from . import chart_cusp
from . import chart_torus

CHART_CLASSES = {
    'torus': chart_torus,
    'flat_torus': chart_torus,
    'cusp': chart_cusp,
    'hyperbolic_cusp': chart_cusp,
}


def chart_module(kind='cusp'):
    kind = getattr(kind, 'value', kind)
    # try the full name first
    if kind not in CHART_CLASSES:
        # then try the last word
        kind = kind.rsplit('_', 1)[-1]
    if kind not in CHART_CLASSES:
        raise NotImplementedError('no chart named {!r}'.format(kind))
    return CHART_CLASSES[kind]


def build_chart(kind, extent, stencil_order=4, length=1.0, y_range=(1.0, 2.0), collar=None):
    """ChartGrid for a chart family; the torus ignores ``y_range`` and ``collar``."""
    chart = chart_module(kind)
    if chart is chart_cusp:
        return chart.build(extent, y_range=y_range, length=length,
                           stencil_order=stencil_order, collar=collar)
    return chart.build(extent, length=length, stencil_order=stencil_order)
