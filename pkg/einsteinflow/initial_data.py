"""Small-data perturbations of the background.

The perturbation is added to Sigma only, in the (x1, x2) block, with a profile
that depends on the remaining axes.  On a metric conformal to delta such a
tensor is exactly trace-free and divergence-free, so the momentum constraint
holds and the Gauss constraint is violated at second order in the amplitude.
"""
from __future__ import division

import logging
import math

import numpy as np

from .grid import Topology
from .split import FlowState, gauss_codazzi_split, reduced_from_flow
from .tensor import Symmetry, TensorField

logger = logging.getLogger(__name__)

MODES = ('bump', 'fourier', 'none')


def smooth_bump(r):
    """exp(1 - 1/(1 - r^2)) inside the unit ball, 0 outside."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def _axis_distance(grid, axis, center):
    x = grid.coordinates(axis)
    d = x - center
    if grid.topology[axis] is Topology.PERIODIC:
        period = grid.extent[axis] * grid.spacing[axis]
        d = (d + 0.5 * period) % period - 0.5 * period
    return d


def active_range(grid, axis):
    """Coordinate interval of the active region along ``axis``."""
    x = grid.coordinates(axis)
    if grid.topology[axis] is Topology.PERIODIC:
        return x[0], x[0] + grid.extent[axis] * grid.spacing[axis]
    return x[grid.collar], x[-1 - grid.collar]


def bump(grid, center, radius, axes=None):
    """Compactly supported bump in the given axes (all by default)."""
    axes = range(grid.dim) if axes is None else axes
    r2 = np.zeros(grid.shape)
    for axis in axes:
        d = _axis_distance(grid, axis, center[axis]) / radius[axis]
        shape = [1] * grid.dim
        shape[axis] = -1
        r2 = r2 + d.reshape(shape) ** 2
    return smooth_bump(np.sqrt(r2))


def centre(grid):
    return [0.5 * (lo + hi) for lo, hi in (active_range(grid, a) for a in range(grid.dim))]


def profile(grid, perturbation):
    """Scalar profile f of the transverse axes 2..n-1, scaled by the amplitude."""
    mode = perturbation.mode
    if mode not in MODES:
        raise ValueError('perturbation mode must be one of {}'.format(MODES))
    amplitude = perturbation.amplitude
    if mode == 'none' or amplitude == 0.0:
        return np.zeros(grid.shape)
    axes = list(range(2, grid.dim))
    mid = centre(grid)
    radius = []
    for axis in range(grid.dim):
        lo, hi = active_range(grid, axis)
        radius.append(perturbation.support_radius * (hi - lo))
    truncated = [a for a in axes if grid.topology[a] is Topology.TRUNCATED]
    periodic = [a for a in axes if grid.topology[a] is Topology.PERIODIC]
    if mode == 'bump':
        f = bump(grid, mid, radius, axes)
    else:
        if not periodic:
            raise ValueError('a fourier profile needs a periodic transverse axis')
        axis = periodic[0]
        lo, hi = active_range(grid, axis)
        phase = 2.0 * math.pi * perturbation.wavenumber * (grid.coordinates(axis) - lo) / (hi - lo)
        shape = [1] * grid.dim
        shape[axis] = -1
        f = np.broadcast_to(np.cos(phase).reshape(shape), grid.shape)
        if truncated:
            f = f * bump(grid, mid, radius, truncated)
    return amplitude * f


def polarization(dim, seed):
    """Seeded unit combination of the two transverse-traceless directions in (x1, x2)."""
    angle = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi)
    p = np.zeros((dim, dim))
    p[0, 1] = p[1, 0] = math.cos(angle) / math.sqrt(2.0)
    p[0, 0] = math.sin(angle) / math.sqrt(2.0)
    p[1, 1] = -p[0, 0]
    return p


def sigma_perturbation(grid, perturbation, background_metric):
    """delta Sigma_ij = g_11 f P_ij, with |delta Sigma|_g = |f|."""
    n = grid.dim
    f = profile(grid, perturbation)
    scale = background_metric.data[0, 0]
    p = polarization(n, perturbation.seed).reshape((n, n) + (1,) * n)
    return TensorField(p * (scale * f), grid, Symmetry.SYM2_TRACE_FREE)


def initial_flow(grid, chart, perturbation, t_start=1.0, w_sector=True):
    """Perturbed background as a FlowState; E, H, W from the split on analytic curvature."""
    background = chart.background_flow(grid, t_start)
    sigma = background.sigma + sigma_perturbation(grid, perturbation, background.g)
    pack = chart.background_curvature(grid, t_start)
    e, h, _, w = gauss_codazzi_split(background.g, sigma, background.eta, pack)
    if not w_sector:
        w = w * 0.0
    logger.info('initial data: mode %s, amplitude %.3e on %s',
                perturbation.mode, perturbation.amplitude, grid.extent)
    return FlowState(t_start, background.g, sigma, background.eta, e, h, w)


def initial_reduced(grid, chart, perturbation, t_start=1.0):
    """The same data in reduced variables; d_t k~ uses the background Ricci tensor."""
    state = initial_flow(grid, chart, perturbation, t_start, w_sector=False)
    pack = chart.background_curvature(grid, t_start)
    return reduced_from_flow(state, ricci=pack.ricci)
