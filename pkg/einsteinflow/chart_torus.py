"""Flat torus with every axis periodic.

The reference solution is flat static spacetime: g~ = delta, k~ = 0.  In
rescaled variables that is g = t^-2 delta, eta = 1 and all other fields
zero.  It is a vacuum solution but not a cone over a negative Einstein
metric, so it serves the wave and convergence checks only.
"""
from __future__ import division

import numpy as np

from .curvature import curvature_from_metric
from .grid import ChartGrid, ChartKind, Topology
from .split import FlowState, ReducedState
from .tensor import Symmetry, TensorField, identity


def build(extent, length=1.0, stencil_order=4):
    dim = len(extent)
    spacing = tuple(length / n for n in extent)
    return ChartGrid(tuple(extent), spacing, (Topology.PERIODIC,) * dim, stencil_order,
                     ChartKind.FLAT_TORUS)


def einstein_constant(dim):
    return 0.0


def background_metric(grid):
    return TensorField(identity(grid.dim, grid.shape), grid, Symmetry.METRIC)


def background_christoffel(grid):
    n = grid.dim
    gam = np.zeros((n,) * 3 + grid.shape)
    return gam, np.zeros((n,) + gam.shape)


def background_curvature(grid, t=1.0):
    gam, dgam = background_christoffel(grid)
    return curvature_from_metric(background_metric(grid) * t ** -2, gam, dgam)


def background_flow(grid, t):
    n = grid.dim
    zeros = np.zeros
    return FlowState(t, background_metric(grid) * t ** -2,
                     TensorField(zeros((n, n) + grid.shape), grid, Symmetry.SYM2_TRACE_FREE),
                     TensorField(np.ones(grid.shape), grid),
                     TensorField(zeros((n, n) + grid.shape), grid, Symmetry.SYM2_TRACE_FREE),
                     TensorField(zeros((n,) * 3 + grid.shape), grid, Symmetry.H_TYPE),
                     TensorField(zeros((n,) * 4 + grid.shape), grid, Symmetry.WEYL_TYPE))


def background_reduced(grid, t):
    n = grid.dim
    zeros = np.zeros((n, n) + grid.shape)
    return ReducedState.from_arrays(t, grid, (identity(n, grid.shape), np.zeros(grid.shape),
                                              zeros, zeros))


def background_flow_rates(grid, t):
    """tau-derivatives of the rescaled background."""
    rates = [np.zeros_like(a) for a in background_flow(grid, t).arrays()]
    rates[0] = -2.0 * background_metric(grid).data * t ** -2
    return tuple(rates)


def background_reduced_rates(grid, t):
    """t-derivatives of the reduced background."""
    return tuple(np.zeros_like(a) for a in background_reduced(grid, t).arrays())
