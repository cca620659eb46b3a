"""Discrete charts, finite-difference derivatives and volume integration.

Fields live on a ``ChartGrid`` as component-major arrays: the leading axes
index tensor components, the trailing ``grid.dim`` axes index grid points.
Periodic axes use centered stencils applied with ``np.roll``; truncated axes
use a sparse derivative matrix whose first and last rows carry one-sided
closures of the same order.
"""
from __future__ import division

import enum
import functools
import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import factorial

from .core import AxisOutOfRange, GridMismatch

logger = logging.getLogger(__name__)


class Topology(enum.Enum):
    PERIODIC = 'periodic'
    TRUNCATED = 'truncated'


class ChartKind(enum.Enum):
    FLAT_TORUS = 'flat_torus'
    HYPERBOLIC_CUSP = 'hyperbolic_cusp'


CENTERED = {
    2: (-1.0 / 2.0, 0.0, 1.0 / 2.0),
    4: (1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0),
    6: (-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0,
        1.0 / 60.0),
}

# Euler-Maclaurin endpoint terms B_2k / (2k)!
_BERNOULLI = ((1, 1.0 / 12.0), (3, -1.0 / 720.0))


@dataclass(frozen=True)
class ChartGrid:
    extent: tuple
    spacing: tuple
    topology: tuple
    stencil_order: int
    chart_kind: ChartKind
    origin: tuple = None
    collar: int = 0

    def __post_init__(self):
        dim = len(self.extent)
        if dim < 2:
            raise ValueError('a chart needs at least two axes')
        if len(self.spacing) != dim or len(self.topology) != dim:
            raise ValueError('extent, spacing and topology disagree in length')
        if self.origin is None:
            object.__setattr__(self, 'origin', (0.0,) * dim)
        object.__setattr__(self, 'extent', tuple(int(n) for n in self.extent))
        object.__setattr__(self, 'spacing', tuple(float(h) for h in self.spacing))
        object.__setattr__(self, 'topology', tuple(Topology(t) for t in self.topology))
        object.__setattr__(self, 'origin', tuple(float(o) for o in self.origin))
        object.__setattr__(self, 'chart_kind', ChartKind(self.chart_kind))
        if self.stencil_order not in CENTERED:
            raise ValueError('stencil order must be one of {}'.format(sorted(CENTERED)))
        if min(self.spacing) <= 0.0:
            raise ValueError('spacings must be strictly positive')
        width = self.stencil_order + 1
        for axis, n in enumerate(self.extent):
            if n < width:
                raise ValueError('axis {} has {} points, stencil needs {}'.format(axis, n, width))
            if self.topology[axis] is Topology.TRUNCATED and n - 2 * self.collar < width:
                raise ValueError('collar leaves fewer than {} active points on axis {}'.format(width, axis))
        truncated = [a for a, t in enumerate(self.topology) if t is Topology.TRUNCATED]
        if self.chart_kind is ChartKind.FLAT_TORUS and truncated:
            raise ValueError('a flat torus is periodic on every axis')
        if self.chart_kind is ChartKind.HYPERBOLIC_CUSP:
            if len(truncated) != 1:
                raise ValueError('a cusp chart has exactly one truncated axis')
            y0 = self.origin[truncated[0]]
            if y0 <= 0.0:
                raise ValueError('the half-space coordinate must stay in (0, inf)')

    @property
    def dim(self):
        return len(self.extent)

    @property
    def shape(self):
        return self.extent

    @property
    def truncated_axes(self):
        return tuple(a for a, t in enumerate(self.topology) if t is Topology.TRUNCATED)

    def coordinates(self, axis):
        return self.origin[axis] + self.spacing[axis] * np.arange(self.extent[axis])

    def mesh(self):
        return np.meshgrid(*[self.coordinates(a) for a in range(self.dim)], indexing='ij')

    def active_mask(self):
        """Points outside the frozen collar."""
        mask = np.ones(self.shape, dtype=bool)
        for axis in self.truncated_axes:
            index = np.arange(self.extent[axis])
            inside = (index >= self.collar) & (index <= self.extent[axis] - 1 - self.collar)
            mask &= _along(inside, axis, self.dim)
        return mask

    def guard_mask(self):
        """Active points within one stencil width of the collar."""
        guard = np.zeros(self.shape, dtype=bool)
        width = self.stencil_order
        for axis in self.truncated_axes:
            index = np.arange(self.extent[axis])
            last = self.extent[axis] - 1 - self.collar
            band = ((index >= self.collar) & (index < self.collar + width)) | \
                   ((index <= last) & (index > last - width))
            guard |= _along(band, axis, self.dim)
        return guard & self.active_mask()

    def interior_mask(self, margin=None):
        """Points at least ``margin`` (default p) away from truncated edges."""
        margin = self.stencil_order if margin is None else margin
        mask = np.ones(self.shape, dtype=bool)
        for axis in self.truncated_axes:
            index = np.arange(self.extent[axis])
            mask &= _along((index >= margin) & (index <= self.extent[axis] - 1 - margin),
                           axis, self.dim)
        return mask

    def refine(self):
        """Same chart with every spacing halved."""
        extent = tuple(2 * n if t is Topology.PERIODIC else 2 * n - 1
                       for n, t in zip(self.extent, self.topology))
        spacing = tuple(h / 2.0 for h in self.spacing)
        return replace(self, extent=extent, spacing=spacing)

    def check(self, *fields):
        for field in fields:
            other = getattr(field, 'grid', self)
            if other != self:
                raise GridMismatch('field sampled on {} used with {}'.format(other, self))


def _along(vector, axis, dim):
    shape = [1] * dim
    shape[axis] = len(vector)
    return np.reshape(vector, shape)


def fd_weights(offsets, derivative=1):
    """Taylor-table weights for ``derivative`` on unit spacing at ``offsets``."""
    offsets = np.asarray(offsets, dtype=float)
    powers = np.arange(len(offsets))
    table = offsets[np.newaxis, :] ** powers[:, np.newaxis] / factorial(powers)[:, np.newaxis]
    rhs = np.zeros(len(offsets))
    rhs[derivative] = 1.0
    return np.linalg.solve(table, rhs)


@functools.lru_cache(maxsize=64)
def _truncated_matrix(n, h, p):
    m = p // 2
    centered = CENTERED[p]
    rows, cols, vals = [], [], []
    for i in range(n):
        if i < m:
            offsets = np.arange(-i, p - i + 1)
            weights = fd_weights(offsets)
        elif i > n - 1 - m:
            r = n - 1 - i
            offsets = np.arange(-(p - r), r + 1)
            weights = fd_weights(offsets)
        else:
            offsets = np.arange(-m, m + 1)
            weights = centered
        for o, w in zip(offsets, weights):
            if w != 0.0:
                rows.append(i)
                cols.append(i + int(o))
                vals.append(w / h)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def derivative(grid, data, axis):
    """d/dx^axis of a component-major array sampled on ``grid``."""
    if not 0 <= axis < grid.dim:
        raise AxisOutOfRange('axis {} outside 0..{}'.format(axis, grid.dim - 1))
    data = np.asarray(data, dtype=float)
    where = data.ndim - grid.dim + axis
    h = grid.spacing[axis]
    if grid.topology[axis] is Topology.PERIODIC:
        m = grid.stencil_order // 2
        out = np.zeros_like(data)
        for k, w in zip(range(-m, m + 1), CENTERED[grid.stencil_order]):
            if w != 0.0:
                out += w * np.roll(data, -k, axis=where)
        return out / h
    matrix = _truncated_matrix(grid.extent[axis], h, grid.stencil_order)
    moved = np.moveaxis(data, where, 0)
    flat = moved.reshape(moved.shape[0], -1)
    return np.moveaxis(np.asarray(matrix @ flat).reshape(moved.shape), 0, where)


def gradient(grid, data):
    """All partials stacked on a new leading axis: out[c, ...] = d_c data."""
    return np.stack([derivative(grid, data, a) for a in range(grid.dim)])


def partial_derivative(field, axis):
    grid = field.grid
    return field.with_data(derivative(grid, field.data, axis), symmetry=None)


@functools.lru_cache(maxsize=64)
def _axis_weights(n, h, topology, p, collar):
    if topology is Topology.PERIODIC:
        return np.full(n, h)
    weights = np.zeros(n)
    first, last = collar, n - 1 - collar
    weights[first:last + 1] = h
    weights[first] = weights[last] = h / 2.0
    width = np.arange(p + 1)
    for order, coefficient in _BERNOULLI:
        if order >= p:
            break
        left = fd_weights(width, order)
        right = fd_weights(width - p, order)
        scale = coefficient * h
        weights[first:first + p + 1] += scale * left
        weights[last - p:last + 1] -= scale * right
    return weights


def quadrature_weights(grid):
    """Tensor-product quadrature weights over the active region."""
    weights = np.ones(grid.shape)
    for axis in range(grid.dim):
        w = _axis_weights(grid.extent[axis], grid.spacing[axis], grid.topology[axis],
                          grid.stencil_order, grid.collar)
        weights = weights * _along(w, axis, grid.dim)
    return weights


def integrate_array(grid, values, volume):
    return float(np.sum(values * volume * quadrature_weights(grid)))


def integrate(scalar_field, volume_element):
    """Sum of f * sqrt(det g) * cell weights over the active region."""
    grid = scalar_field.grid
    grid.check(volume_element)
    return integrate_array(grid, scalar_field.data, volume_element.data)
