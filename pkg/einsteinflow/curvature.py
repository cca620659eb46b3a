"""Christoffel symbols, covariant derivatives, curvature and Sobolev norms.

Conventions: Gamma[a, i, j] = Gamma^a_ij, derivative indices are prepended,
R^a_bcd = d_c Gamma^a_bd - d_d Gamma^a_bc + Gamma^a_ce Gamma^e_bd
- Gamma^a_de Gamma^e_bc, R_abcd = g_ae R^e_bcd and Ric_ij = g^mn R_imjn,
so the unit sphere has R_abcd = g_ac g_bd - g_ad g_bc.
"""
from __future__ import division

import logging
from dataclasses import dataclass

import numpy as np

from .core import OrderTooHigh
from .grid import gradient, integrate_array
from .tensor import (Symmetry, TensorField, ein, inverse, kn, norm_sq, project_riem,
                     ricci_trace, sqrt_det, weyl_parts)

logger = logging.getLogger(__name__)

MAX_SOBOLEV_ORDER = 4
_SLOTS = 'ijklmnstuvw'


def christoffel_array(grid, g, g_inv=None):
    g_inv = inverse(g) if g_inv is None else g_inv
    dg = gradient(grid, g)
    lowered = 0.5 * (ein('ijb->bij', dg) + ein('jib->bij', dg) - dg)
    return ein('ab,bij->aij', g_inv, lowered)


def riemann_array(g, gam, dgam):
    """Covariant Riemann tensor projected onto its algebraic class."""
    up = (ein('cabd->abcd', dgam) - ein('dabc->abcd', dgam)
          + ein('ace,ebd->abcd', gam, gam) - ein('ade,ebc->abcd', gam, gam))
    return project_riem(ein('ae,ebcd->abcd', g, up))


def nabla(grid, t, gam):
    """(nabla T)_{c i1..ir} = d_c T - sum over slots of Gamma^d_{c i_k} T_{..d..}."""
    rank = t.ndim - grid.dim
    out = gradient(grid, t)
    letters = _SLOTS[:rank]
    for k in range(rank):
        swapped = letters[:k] + 'y' + letters[k + 1:]
        out = out - ein('yz' + letters[k] + ',' + swapped + '->z' + letters, gam, t)
    return out


def laplacian_array(grid, t, gam, g_inv):
    rank = t.ndim - grid.dim
    letters = _SLOTS[:rank]
    second = nabla(grid, nabla(grid, t, gam), gam)
    return ein('ab,ab' + letters + '->' + letters, g_inv, second)


def divergence_array(grid, t, gam, g_inv):
    """g^ab nabla_a T_b..."""
    rank = t.ndim - grid.dim
    letters = _SLOTS[:rank - 1]
    return ein('ab,ab' + letters + '->' + letters, g_inv, nabla(grid, t, gam))


@dataclass(frozen=True, eq=False)
class CurvaturePack:
    metric: TensorField
    christoffel: TensorField
    riemann: TensorField
    ricci: TensorField
    scalar: TensorField
    weyl: TensorField
    traceless_ricci: TensorField

    @property
    def grid(self):
        return self.metric.grid

    @property
    def dim(self):
        return self.metric.grid.dim

    @property
    def o_tensor(self):
        """R + 1/2 g o g, the deviation from constant curvature -1."""
        g = self.metric.data
        return self.riemann.with_data(self.riemann.data + 0.5 * kn(g, g), Symmetry.RIEM)


def pack_from_arrays(metric, gam, riemann):
    grid = metric.grid
    g = metric.data
    g_inv = inverse(g)
    w, s, scalar = weyl_parts(riemann, g, g_inv)
    ricci = ricci_trace(riemann, g_inv)
    return CurvaturePack(
        metric=metric,
        christoffel=TensorField(gam, grid),
        riemann=TensorField(riemann, grid, Symmetry.RIEM),
        ricci=TensorField(ricci, grid, Symmetry.SYM2),
        scalar=TensorField(scalar, grid),
        weyl=TensorField(w, grid, Symmetry.WEYL_TYPE),
        traceless_ricci=TensorField(s, grid, Symmetry.SYM2_TRACE_FREE),
    )


def curvature_from_metric(g, christoffel=None, dchristoffel=None):
    """Curvature of ``g``; analytic Christoffels and their partials may be supplied."""
    grid = g.grid
    if grid.dim < 3:
        raise ValueError('curvature decomposition needs at least three dimensions')
    g_inv = inverse(g.data)
    gam = christoffel_array(grid, g.data, g_inv) if christoffel is None else np.asarray(christoffel)
    dgam = gradient(grid, gam) if dchristoffel is None else np.asarray(dchristoffel)
    return pack_from_arrays(g, gam, riemann_array(g.data, gam, dgam))


def _christoffel_for(g, christoffel):
    if christoffel is None:
        return christoffel_array(g.grid, g.data)
    return getattr(christoffel, 'data', christoffel)


def covariant_derivative(field, g, christoffel=None):
    field.grid.check(g)
    return field.with_data(nabla(field.grid, field.data, _christoffel_for(g, christoffel)))


def laplacian(field, g, christoffel=None):
    field.grid.check(g)
    gam = _christoffel_for(g, christoffel)
    return field.with_data(laplacian_array(field.grid, field.data, gam, inverse(g.data)))


def divergence(field, g, christoffel=None):
    field.grid.check(g)
    gam = _christoffel_for(g, christoffel)
    return field.with_data(divergence_array(field.grid, field.data, gam, inverse(g.data)))


def l2_norm_array(grid, t, g, g_inv=None, volume=None):
    g_inv = inverse(g) if g_inv is None else g_inv
    volume = sqrt_det(g) if volume is None else volume
    return np.sqrt(max(integrate_array(grid, norm_sq(t, g_inv), volume), 0.0))


def sobolev_terms(grid, t, g, k, primed=False, gam=None):
    """The summands of H_k (or H'_k) of a component-major array."""
    if k < 0 or k > MAX_SOBOLEV_ORDER:
        raise OrderTooHigh('Sobolev order {} outside 0..{}'.format(k, MAX_SOBOLEV_ORDER))
    g_inv = inverse(g)
    volume = sqrt_det(g)
    gam = christoffel_array(grid, g, g_inv) if gam is None else gam
    terms = []
    if primed:
        for order in range(k + 1):
            u = t
            for _ in range(order // 2):
                u = laplacian_array(grid, u, gam, g_inv)
            if order % 2:
                u = nabla(grid, u, gam)
            terms.append(l2_norm_array(grid, u, g, g_inv, volume))
    else:
        u = t
        for order in range(k + 1):
            if order:
                u = nabla(grid, u, gam)
            terms.append(l2_norm_array(grid, u, g, g_inv, volume))
    return terms


def sobolev_norm(field, g, k, primed=False, christoffel=None):
    """Sum of L^2 norms of nabla^j field for j <= k; primed uses nabla^(j mod 2) Laplacian^(j//2)."""
    field.grid.check(g)
    gam = None if christoffel is None else _christoffel_for(g, christoffel)
    return float(sum(sobolev_terms(field.grid, field.data, g.data, k, primed, gam)))


def bianchi_residual(pack):
    """Cyclic sum nabla_p R_imjn + nabla_i R_mpjn + nabla_m R_pijn."""
    grid = pack.grid
    d_r = nabla(grid, pack.riemann.data, pack.christoffel.data)
    return ein('pimjn->pimjn', d_r) + ein('impjn->pimjn', d_r) + ein('mpijn->pimjn', d_r)


def contracted_bianchi_residual(pack):
    """nabla^a Ric_ab - 1/2 d_b R."""
    grid = pack.grid
    g_inv = inverse(pack.metric.data)
    div = divergence_array(grid, pack.ricci.data, pack.christoffel.data, g_inv)
    return div - 0.5 * gradient(grid, pack.scalar.data)


def commutator_residual(field, pack):
    """nabla_a Lap T - Lap nabla_a T minus the curvature terms of the commuting formula."""
    grid = pack.grid
    g_inv = inverse(pack.metric.data)
    gam = pack.christoffel.data
    t = field.data
    rank = field.rank
    letters = _SLOTS[:rank]
    lhs = nabla(grid, laplacian_array(grid, t, gam, g_inv), gam) - \
        laplacian_array(grid, nabla(grid, t, gam), gam, g_inv)
    riemann = pack.riemann.data
    ricci_mixed = ein('ad,dp->ap', pack.ricci.data, g_inv)
    grad = nabla(grid, t, gam)
    grad_up = ein('pq,q' + letters + '->p' + letters, g_inv, grad)
    # R_{ap i}^d and nabla^p R_{ap i}^d
    r_mixed = ein('apie,ed->apid', riemann, g_inv)
    d_r = ein('qp,qapie,ed->aid', g_inv, nabla(grid, riemann, gam), g_inv)
    rhs = -ein('ap,p' + letters + '->a' + letters, ricci_mixed, grad)
    for k in range(rank):
        swapped = letters[:k] + 'd' + letters[k + 1:]
        rhs = rhs + 2.0 * ein('ap' + letters[k] + 'd,p' + swapped + '->a' + letters, r_mixed, grad_up)
        rhs = rhs + ein('a' + letters[k] + 'd,' + swapped + '->a' + letters, d_r, t)
    return lhs - rhs


def volume_element(g):
    return g.with_data(sqrt_det(g.data))
