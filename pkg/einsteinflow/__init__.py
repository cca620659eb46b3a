from .base import (build_chart, chart_module)
from .core import (EinsteinFlowException, ConfigParse, RunAborted)
from .grid import ChartGrid, Topology, ChartKind
from .tensor import Symmetry, TensorField
from .curvature import curvature_from_metric
from .split import FlowState, ReducedState, gauss_codazzi_split, rescale, unrescale
from .flow import IntegratorConfig, Formulation, rhs_first_order, rhs_reduced, step, run
from .diagnostics import (modified_energy, weyl_nonpositivity, div_curl_identity, fit_decay,
                          norms_report)
from .oracle import run_algebraic_suite, run_differential_suite
__version__ = '0.1.0'
