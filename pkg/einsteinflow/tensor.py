"""Tensor fields, symmetry classes and index algebra.

Array helpers such as ``kn`` and ``project_weyl`` work on raw
component-major arrays (components first, grid last) so the flow kernels can
chain them without wrapping.  The ``TensorField`` entry points check grids
and symmetry tags and then defer to those array routines.
"""
from __future__ import division

import enum
import logging
import struct
from dataclasses import dataclass

import numpy as np

from .core import (GridMismatch, IndexOutOfRange, MetricNotPositiveDefinite,
                   SymmetryViolation, relative_deviation)
from .grid import ChartGrid, ChartKind, Topology

logger = logging.getLogger(__name__)

ALGEBRAIC_TOLERANCE = 1e-12


class Symmetry(enum.Enum):
    GENERAL = 0
    METRIC = 1
    SYM2 = 2
    SYM2_TRACE_FREE = 3
    H_TYPE = 4
    WEYL_TYPE = 5
    RIEM = 6


RANKS = {
    Symmetry.METRIC: 2,
    Symmetry.SYM2: 2,
    Symmetry.SYM2_TRACE_FREE: 2,
    Symmetry.H_TYPE: 3,
    Symmetry.WEYL_TYPE: 4,
    Symmetry.RIEM: 4,
}


def ein(spec, *operands):
    """``np.einsum`` with the grid axes carried along as a trailing ellipsis."""
    inputs, output = spec.split('->')
    spec = ','.join(term + '...' for term in inputs.split(',')) + '->' + output + '...'
    return np.einsum(spec, *operands, optimize=len(operands) > 2)


# -- metric ---------------------------------------------------------------

def _matrix_view(g):
    return np.moveaxis(g, (0, 1), (-2, -1))


def cholesky_check(g):
    try:
        np.linalg.cholesky(_matrix_view(g))
    except np.linalg.LinAlgError:
        raise MetricNotPositiveDefinite('metric fails Cholesky at some grid point')


def inverse(g):
    cholesky_check(g)
    return np.moveaxis(np.linalg.inv(_matrix_view(g)), (-2, -1), (0, 1))


def sqrt_det(g):
    return np.sqrt(np.linalg.det(_matrix_view(g)))


def identity(dim, shape):
    eye = np.eye(dim).reshape((dim, dim) + (1,) * len(shape))
    return np.broadcast_to(eye, (dim, dim) + tuple(shape)).copy()


# -- contractions ---------------------------------------------------------

def sym(a):
    return 0.5 * (a + np.swapaxes(a, 0, 1))


def trace(a, g_inv):
    return ein('ij,ij->', g_inv, a)


def trace_free(a, g, g_inv):
    n = g.shape[0]
    return a - trace(a, g_inv) / n * g


def mixed(a, g_inv):
    """A_i^j."""
    return ein('ia,aj->ij', a, g_inv)


def dot(a, b, g_inv):
    """(A.B)_ij = A_ip g^pq B_jq."""
    return ein('ip,jp->ij', mixed(a, g_inv), b)


def double_dot(a, b, g_inv):
    """A^ij B_ij."""
    return ein('ij,ij->', dot(a, b, g_inv), g_inv)


def raise_all(t, g_inv):
    """Raise every slot of a covariant array."""
    rank = t.ndim - g_inv.ndim + 2
    for slot in range(rank):
        t = np.moveaxis(ein('ab,b' + 'cdefgh'[:rank - 1] + '->a' + 'cdefgh'[:rank - 1],
                            g_inv, np.moveaxis(t, slot, 0)), 0, slot)
    return t


def norm_sq(t, g_inv):
    """|T|_g^2 at every point."""
    rank = t.ndim - g_inv.ndim + 2
    if rank == 0:
        return t * t
    return np.sum(raise_all(t, g_inv) * t, axis=tuple(range(rank)))


def kn(x, z):
    """Kulkarni-Nomizu product (x o z)_imjn = x_ij z_mn - x_jm z_in + z_ij x_mn - z_jm x_in."""
    return (ein('ij,mn->imjn', x, z) - ein('jm,in->imjn', x, z)
            + ein('ij,mn->imjn', z, x) - ein('jm,in->imjn', z, x))


def ricci_trace(x, g_inv):
    """g^mn X_imjn."""
    return ein('mn,imjn->ij', g_inv, x)


# -- projectors -----------------------------------------------------------

def project_sym2(a, g=None, g_inv=None):
    return sym(a)


def project_sym2_trace_free(a, g, g_inv):
    return trace_free(sym(a), g, g_inv)


def h_trace(h, g_inv):
    """v_i = g^jl H_ijl."""
    return ein('jl,ijl->i', g_inv, h)


def h_trace_part(v, g):
    """T_ijl = g_il v_j - g_jl v_i, whose trace is -(n-1) v."""
    return ein('il,j->ijl', g, v) - ein('jl,i->ijl', g, v)


def project_h(h, g, g_inv):
    n = g.shape[0]
    a = 0.5 * (h - np.swapaxes(h, 0, 1))
    cyclic = a + np.transpose(a, (1, 2, 0) + tuple(range(3, a.ndim))) \
        + np.transpose(a, (2, 0, 1) + tuple(range(3, a.ndim)))
    b = a - cyclic / 3.0
    return b + h_trace_part(h_trace(b, g_inv), g) / (n - 1)


def _perm(x, order):
    return np.transpose(x, tuple(order) + tuple(range(4, x.ndim)))


def project_riem(x, g=None, g_inv=None):
    x = 0.5 * (x - _perm(x, (1, 0, 2, 3)))
    x = 0.5 * (x - _perm(x, (0, 1, 3, 2)))
    x = 0.5 * (x + _perm(x, (2, 3, 0, 1)))
    # X_acdb and X_adbc as arrays indexed [a,b,c,d]
    return x - (x + _perm(x, (0, 3, 1, 2)) + _perm(x, (0, 2, 3, 1))) / 3.0


def weyl_parts(x, g, g_inv):
    """Split an algebraic curvature tensor into (W, S, scalar)."""
    n = g.shape[0]
    ric = ricci_trace(x, g_inv)
    scalar = trace(ric, g_inv)
    s = ric - scalar / n * g
    w = x - kn(s, g) / (n - 2) - scalar / (2 * n * (n - 1)) * kn(g, g)
    return w, s, scalar


def project_weyl(x, g, g_inv):
    return weyl_parts(project_riem(x), g, g_inv)[0]


PROJECTORS = {
    Symmetry.METRIC: project_sym2,
    Symmetry.SYM2: project_sym2,
    Symmetry.SYM2_TRACE_FREE: project_sym2_trace_free,
    Symmetry.H_TYPE: project_h,
    Symmetry.WEYL_TYPE: project_weyl,
    Symmetry.RIEM: project_riem,
}


# -- tangent projections --------------------------------------------------
# A rate dA of a trace-free field A keeps it trace-free along a moving metric
# when g^{ij} dA_ij = -(d g^{ij}) A_ij; the same holds slot-wise for H and W.

def inverse_rate(dg, g_inv):
    """d(g^ij) = -g^ia dg_ab g^bj."""
    return -ein('ia,ab,bj->ij', g_inv, dg, g_inv)


def tangent_sym2(rate, a, g, g_inv, dg_inv):
    n = g.shape[0]
    target = -ein('ij,ij->', dg_inv, a)
    return trace_free(sym(rate), g, g_inv) + target / n * g


def tangent_h(rate, h, g, g_inv, dg_inv):
    n = g.shape[0]
    target = -ein('jl,ijl->i', dg_inv, h)
    return project_h(rate, g, g_inv) - h_trace_part(target, g) / (n - 1)


def tangent_weyl(rate, w, g, g_inv, dg_inv):
    n = g.shape[0]
    target = -ein('pq,ipjq->ij', dg_inv, w)
    correction = kn(target, g) / (n - 2) \
        - trace(target, g_inv) / (2.0 * (n - 1) * (n - 2)) * kn(g, g)
    return project_weyl(rate, g, g_inv) + correction


# -- fields ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TensorField:
    data: np.ndarray
    grid: ChartGrid
    symmetry: Symmetry = Symmetry.GENERAL

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        dim = self.grid.dim
        rank = data.ndim - dim
        if rank < 0 or data.shape[rank:] != self.grid.shape or \
                any(n != dim for n in data.shape[:rank]):
            raise GridMismatch('array of shape {} does not sample {}'.format(data.shape, self.grid))
        symmetry = Symmetry(self.symmetry)
        if symmetry in RANKS and RANKS[symmetry] != rank:
            raise SymmetryViolation('{} needs rank {}, got {}'.format(symmetry.name, RANKS[symmetry], rank))
        data.flags.writeable = False
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'symmetry', symmetry)

    @property
    def rank(self):
        return self.data.ndim - self.grid.dim

    def with_data(self, data, symmetry=None):
        return TensorField(data, self.grid, symmetry or Symmetry.GENERAL)

    def _combine(self, other, op):
        if isinstance(other, TensorField):
            self.grid.check(other)
            kept = self.symmetry if other.symmetry is self.symmetry else None
            return self.with_data(op(self.data, other.data), kept)
        return self.with_data(op(self.data, other), self.symmetry)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, scale):
        return self.with_data(self.data * scale, self.symmetry)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_data(-self.data, self.symmetry)


def scalar_field(values, grid):
    return TensorField(np.broadcast_to(np.asarray(values, dtype=float), grid.shape), grid)


def project(field, symmetry, g=None):
    """Project ``field`` into ``symmetry``; trace-aware classes need ``g``."""
    g_data = None if g is None else g.data
    g_inv = None if g is None else inverse(g.data)
    return field.with_data(PROJECTORS[symmetry](field.data, g_data, g_inv), symmetry)


def symmetry_deviation(field, g=None):
    """Relative distance between ``field`` and its own symmetry class."""
    if field.symmetry is Symmetry.GENERAL:
        return 0.0
    g_data = None if g is None else g.data
    g_inv = None if g is None else inverse(g.data)
    if g is None and field.symmetry in (Symmetry.SYM2_TRACE_FREE, Symmetry.H_TYPE,
                                        Symmetry.WEYL_TYPE):
        raise ValueError('{} validation needs the metric'.format(field.symmetry.name))
    projected = PROJECTORS[field.symmetry](field.data, g_data, g_inv)
    return relative_deviation(projected, field.data)


def validate(field, g=None, tolerance=ALGEBRAIC_TOLERANCE):
    if field.symmetry is Symmetry.METRIC:
        cholesky_check(field.data)
    deviation = symmetry_deviation(field, g)
    if deviation > tolerance:
        raise SymmetryViolation('{} field off its class by {:.3e} (tolerance {:.1e})'.format(
            field.symmetry.name, deviation, tolerance))
    return deviation


def kulkarni_nomizu(xi, zeta):
    xi.grid.check(zeta)
    for field in (xi, zeta):
        if field.rank != 2 or relative_deviation(sym(field.data), field.data) > ALGEBRAIC_TOLERANCE:
            raise SymmetryViolation('Kulkarni-Nomizu factors must be symmetric 2-tensors')
    return xi.with_data(kn(xi.data, zeta.data), Symmetry.RIEM)


def contract(field, g_inverse, index_pairs):
    """Contract each pair of slots of ``field`` with the inverse metric."""
    field.grid.check(g_inverse)
    rank = field.rank
    used = [i for pair in index_pairs for i in pair]
    if any(not 0 <= i < rank for i in used) or len(set(used)) != len(used):
        raise IndexOutOfRange('index pairs {} invalid for rank {}'.format(index_pairs, rank))
    letters = 'abcdefghijklmnop'[:rank]
    operands = [field.data]
    terms = [letters]
    for i, j in index_pairs:
        terms.append(letters[i] + letters[j])
        operands.append(g_inverse.data)
    out = ''.join(c for k, c in enumerate(letters) if k not in used)
    result = ein(','.join(terms) + '->' + out, *operands)
    return field.with_data(result)


def _contract_slot(field, metric, slot):
    """Contract one slot of ``field`` with a symmetric 2-tensor."""
    field.grid.check(metric)
    if not 0 <= slot < field.rank:
        raise IndexOutOfRange('slot {} invalid for rank {}'.format(slot, field.rank))
    moved = np.moveaxis(field.data, slot, 0)
    rest = 'cdefgh'[:field.rank - 1]
    contracted = ein('ab,b' + rest + '->a' + rest, metric.data, moved)
    return field.with_data(np.moveaxis(contracted, 0, slot))


def raise_index(field, g_inverse, slot):
    return _contract_slot(field, g_inverse, slot)


def lower_index(field, g, slot):
    return _contract_slot(field, g, slot)


def pointwise_norm(field, g):
    """Squared norm |field|_g^2 as a scalar field."""
    field.grid.check(g)
    return field.with_data(norm_sq(field.data, inverse(g.data)))


def inner(a, b, g):
    a.grid.check(b, g)
    g_inv = inverse(g.data)
    return a.with_data(np.sum(raise_all(a.data, g_inv) * b.data, axis=tuple(range(a.rank))))


# -- binary container -----------------------------------------------------

MAGIC = b'EFT1'
_KINDS = {kind: code for code, kind in enumerate(ChartKind)}
_TOPOLOGIES = {topology: code for code, topology in enumerate(Topology)}


def _pack_field(field):
    grid = field.grid
    dim = grid.dim
    head = struct.pack('<BBBBBi', field.rank, field.symmetry.value, dim, grid.stencil_order,
                       _KINDS[grid.chart_kind], grid.collar)
    head += struct.pack('<{}i'.format(dim), *grid.extent)
    head += struct.pack('<{}d'.format(dim), *grid.spacing)
    head += struct.pack('<{}d'.format(dim), *grid.origin)
    head += struct.pack('<{}B'.format(dim), *[_TOPOLOGIES[t] for t in grid.topology])
    return head + np.ascontiguousarray(field.data, dtype='<f8').tobytes()


def _unpack_field(buffer, offset):
    fixed = struct.calcsize('<BBBBBi')
    rank, tag, dim, order, kind, collar = struct.unpack_from('<BBBBBi', buffer, offset)
    offset += fixed
    extent = struct.unpack_from('<{}i'.format(dim), buffer, offset)
    offset += 4 * dim
    spacing = struct.unpack_from('<{}d'.format(dim), buffer, offset)
    offset += 8 * dim
    origin = struct.unpack_from('<{}d'.format(dim), buffer, offset)
    offset += 8 * dim
    topology = struct.unpack_from('<{}B'.format(dim), buffer, offset)
    offset += dim
    grid = ChartGrid(extent, spacing, [list(Topology)[t] for t in topology], order,
                     list(ChartKind)[kind], origin, collar)
    shape = (dim,) * rank + tuple(extent)
    count = int(np.prod(shape))
    data = np.frombuffer(buffer, dtype='<f8', count=count, offset=offset).reshape(shape)
    return TensorField(data, grid, Symmetry(tag)), offset + 8 * count


def save_fields(path, fields, t=0.0):
    """Write named fields and a time stamp into one container file."""
    chunks = [MAGIC, struct.pack('<dI', float(t), len(fields))]
    for name, field in fields.items():
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<H', len(encoded)) + encoded)
        chunks.append(_pack_field(field))
    with open(path, 'wb') as f:
        f.write(b''.join(chunks))
    logger.debug('wrote %d fields to %s', len(fields), path)


def load_fields(path):
    with open(path, 'rb') as f:
        buffer = f.read()
    if buffer[:4] != MAGIC:
        raise ValueError('{} is not a field container'.format(path))
    t, count = struct.unpack_from('<dI', buffer, 4)
    offset = 4 + struct.calcsize('<dI')
    fields = {}
    for _ in range(count):
        (length,) = struct.unpack_from('<H', buffer, offset)
        offset += 2
        name = buffer[offset:offset + length].decode('utf-8')
        offset += length
        fields[name], offset = _unpack_field(buffer, offset)
    return fields, t
