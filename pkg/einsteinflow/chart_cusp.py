"""Hyperbolic half-space cusp: gamma = y^-2 delta with periodic transverse axes.

The half-space coordinate y is the last axis.  Its collar is frozen at the
background value, so the rescaled background (g, Sigma, eta, E, H, W) =
(gamma, 0, 0, 0, 0, 0) is stationary and the reduced background is the
Lorentz cone g~ = t^2 gamma, k~ = -t gamma, h = -n / t.
"""
from __future__ import division

import numpy as np

from .curvature import curvature_from_metric
from .grid import ChartGrid, ChartKind, Topology
from .split import FlowState, ReducedState
from .tensor import Symmetry, TensorField, identity


def build(extent, y_range=(1.0, 2.0), length=1.0, stencil_order=4, collar=None):
    dim = len(extent)
    y0, y1 = float(y_range[0]), float(y_range[1])
    if not 0.0 < y0 < y1:
        raise ValueError('y range must satisfy 0 < y0 < y1, got {}'.format(y_range))
    spacing = [length / n for n in extent[:-1]] + [(y1 - y0) / (extent[-1] - 1)]
    topology = [Topology.PERIODIC] * (dim - 1) + [Topology.TRUNCATED]
    origin = [0.0] * (dim - 1) + [y0]
    collar = stencil_order // 2 if collar is None else collar
    return ChartGrid(tuple(extent), tuple(spacing), tuple(topology), stencil_order,
                     ChartKind.HYPERBOLIC_CUSP, tuple(origin), collar)


def einstein_constant(dim):
    return -(dim - 1.0)


def height(grid):
    """y broadcast over the grid."""
    y = grid.coordinates(grid.dim - 1)
    return np.broadcast_to(y.reshape((1,) * (grid.dim - 1) + (-1,)), grid.shape)


def background_metric(grid):
    y = height(grid)
    return TensorField(identity(grid.dim, grid.shape) / y ** 2, grid, Symmetry.METRIC)


def _bracket(grid):
    """delta^a_i delta_jy + delta^a_j delta_iy - delta_ij delta^a_y."""
    n = grid.dim
    eye = np.eye(n)
    e_y = eye[n - 1]
    return (np.einsum('ai,j->aij', eye, e_y) + np.einsum('aj,i->aij', eye, e_y)
            - np.einsum('ij,a->aij', eye, e_y))


def background_christoffel(grid):
    """Exact Gamma and d_c Gamma of the conformally flat metric y^-2 delta."""
    n = grid.dim
    y = height(grid)
    bracket = _bracket(grid).reshape((n, n, n) + (1,) * n)
    gam = -bracket / y
    dgam = np.zeros((n,) + gam.shape)
    dgam[n - 1] = bracket / y ** 2
    return gam, dgam


def background_curvature(grid, t=1.0):
    """Curvature of gamma; the rescaled cusp background does not depend on t."""
    gam, dgam = background_christoffel(grid)
    return curvature_from_metric(background_metric(grid), gam, dgam)


def background_flow(grid, t):
    n = grid.dim
    g = background_metric(grid)
    zeros = np.zeros
    return FlowState(t, g,
                     TensorField(zeros((n, n) + grid.shape), grid, Symmetry.SYM2_TRACE_FREE),
                     TensorField(zeros(grid.shape), grid),
                     TensorField(zeros((n, n) + grid.shape), grid, Symmetry.SYM2_TRACE_FREE),
                     TensorField(zeros((n,) * 3 + grid.shape), grid, Symmetry.H_TYPE),
                     TensorField(zeros((n,) * 4 + grid.shape), grid, Symmetry.WEYL_TYPE))


def background_reduced(grid, t):
    n = grid.dim
    gamma = background_metric(grid).data
    return ReducedState.from_arrays(t, grid, (t ** 2 * gamma, np.full(grid.shape, -n / t),
                                              -t * gamma, -gamma))


def background_flow_rates(grid, t):
    """tau-derivatives of the rescaled background."""
    return tuple(np.zeros_like(a) for a in background_flow(grid, t).arrays())


def background_reduced_rates(grid, t):
    """t-derivatives of the reduced background."""
    n = grid.dim
    gamma = background_metric(grid).data
    return (2.0 * t * gamma, np.full(grid.shape, n / t ** 2), -gamma, np.zeros_like(gamma))
