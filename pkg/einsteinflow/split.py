"""Rescaling map and the 1+n split of the rescaled Einstein flow.

The Gauss equation is used in the form

    R = -1/2 g o g + J + 1/(n-2) E o g + (1 - eta) Sigma o g
        - 1/2 eta (eta - 2) g o g - 1/2 Sigma o Sigma,

whose Ricci contraction gives the electric field and whose Weyl part gives
the relation W = J + Phi(Sigma, g) with

    Phi = -1/2 Sigma o Sigma - 1/(n-2) (Sigma.Sigma) o g
          + |Sigma|^2 / (2 (n-1)(n-2)) g o g.
"""
from __future__ import division

import logging
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .core import NonpositiveTime
from .curvature import curvature_from_metric, divergence_array, nabla
from .grid import gradient, integrate_array
from .tensor import (Symmetry, TensorField, dot, double_dot, ein, inverse, kn, mixed,
                     norm_sq, project_h, project_weyl, raise_all, sqrt_det, sym, trace,
                     trace_free, validate)

logger = logging.getLogger(__name__)

SPLIT_TOLERANCE = 1e-8

RescaledFields = namedtuple('RescaledFields', 'g sigma eta')
SplitFields = namedtuple('SplitFields', 'E H J W')


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    g: TensorField
    sigma: TensorField
    eta: TensorField
    E: TensorField
    H: TensorField
    W: TensorField

    def __post_init__(self):
        if not self.t > 0.0:
            raise NonpositiveTime('physical time must be positive, got {}'.format(self.t))
        self.g.grid.check(self.sigma, self.eta, self.E, self.H, self.W)

    @property
    def tau(self):
        return math.log(self.t)

    @property
    def grid(self):
        return self.g.grid

    @property
    def dim(self):
        return self.g.grid.dim

    def arrays(self):
        return (self.g.data, self.sigma.data, self.eta.data, self.E.data, self.H.data, self.W.data)

    @classmethod
    def from_arrays(cls, t, grid, arrays):
        g, sigma, eta, e, h, w = arrays
        return cls(t,
                   TensorField(g, grid, Symmetry.METRIC),
                   TensorField(sigma, grid, Symmetry.SYM2_TRACE_FREE),
                   TensorField(eta, grid),
                   TensorField(e, grid, Symmetry.SYM2_TRACE_FREE),
                   TensorField(h, grid, Symmetry.H_TYPE),
                   TensorField(w, grid, Symmetry.WEYL_TYPE))

    def fields(self):
        return {'g': self.g, 'sigma': self.sigma, 'eta': self.eta,
                'E': self.E, 'H': self.H, 'W': self.W}

    def symmetry_deviation(self):
        """Worst relative distance of the evolved fields from their classes."""
        worst = 0.0
        for field in (self.g, self.sigma, self.E, self.H, self.W):
            worst = max(worst, validate(field, self.g, tolerance=np.inf))
        return worst


@dataclass(frozen=True, eq=False)
class ReducedState:
    t: float
    g_tilde: TensorField
    h: TensorField
    k_tilde: TensorField
    k_tilde_dot: TensorField

    @property
    def grid(self):
        return self.g_tilde.grid

    def arrays(self):
        return (self.g_tilde.data, self.h.data, self.k_tilde.data, self.k_tilde_dot.data)

    @classmethod
    def from_arrays(cls, t, grid, arrays):
        g_tilde, h, k_tilde, k_dot = arrays
        return cls(t,
                   TensorField(g_tilde, grid, Symmetry.METRIC),
                   TensorField(h, grid),
                   TensorField(k_tilde, grid, Symmetry.SYM2),
                   TensorField(k_dot, grid, Symmetry.SYM2))

    def fields(self):
        return {'g_tilde': self.g_tilde, 'h': self.h,
                'k_tilde': self.k_tilde, 'k_tilde_dot': self.k_tilde_dot}

    def trace_monitor(self):
        """tr_g~ k~ - h at every point."""
        return trace(self.k_tilde.data, inverse(self.g_tilde.data)) - self.h.data


# -- rescaling ------------------------------------------------------------

def rescale_arrays(t, g_tilde, k_tilde):
    if not t > 0.0:
        raise NonpositiveTime('rescaling needs t > 0, got {}'.format(t))
    n = g_tilde.shape[0]
    g = g_tilde / t ** 2
    k = k_tilde / t
    mean = trace(k, inverse(g)) / n
    return g, k - mean * g, mean + 1.0


def rescale(reduced):
    """g = t^-2 g~, k = t^-1 k~, eta = tr_g k / n + 1, Sigma = k - (tr_g k / n) g."""
    grid = reduced.grid
    g, sigma, eta = rescale_arrays(reduced.t, reduced.g_tilde.data, reduced.k_tilde.data)
    return RescaledFields(TensorField(g, grid, Symmetry.METRIC),
                          TensorField(sigma, grid, Symmetry.SYM2_TRACE_FREE),
                          TensorField(eta, grid))


def unrescale_arrays(t, g, sigma, eta):
    if not t > 0.0:
        raise NonpositiveTime('rescaling needs t > 0, got {}'.format(t))
    return t ** 2 * g, t * (sigma + (eta - 1.0) * g)


def unrescale(t, g, sigma, eta):
    """Inverse of ``rescale``: returns (g~, k~)."""
    grid = g.grid
    g_tilde, k_tilde = unrescale_arrays(t, g.data, sigma.data, eta.data)
    return TensorField(g_tilde, grid, Symmetry.METRIC), TensorField(k_tilde, grid, Symmetry.SYM2)


def structure_rate(ricci, g_tilde_inv, k_tilde, h):
    """d_t k~ = Ric~ - 2 k~_i^p k~_jp + h k~ (unit lapse, zero shift)."""
    return ricci - 2.0 * dot(k_tilde, k_tilde, g_tilde_inv) + h * k_tilde


def reduced_from_flow(state, ricci=None):
    """Reduced variables at the same instant; d_t k~ from the structure equation."""
    grid = state.grid
    g_tilde, k_tilde = unrescale_arrays(state.t, state.g.data, state.sigma.data, state.eta.data)
    g_tilde_inv = inverse(g_tilde)
    h = trace(k_tilde, g_tilde_inv)
    if ricci is None:
        ricci = curvature_from_metric(state.g).ricci.data
    ricci = getattr(ricci, 'data', ricci)
    k_dot = structure_rate(ricci, g_tilde_inv, k_tilde, h)
    return ReducedState.from_arrays(state.t, grid, (g_tilde, h, k_tilde, k_dot))


def flow_from_reduced(reduced, pack=None):
    """Rescale and split; curvature of the rescaled metric from stencils unless given."""
    g, sigma, eta = rescale(reduced)
    pack = curvature_from_metric(g) if pack is None else pack
    e, h, _, w = gauss_codazzi_split(g, sigma, eta, pack)
    return FlowState(reduced.t, g, sigma, eta, e, h, w)


# -- algebraic pieces -----------------------------------------------------

def electric_array(ricci, g, g_inv, sigma, eta):
    """E = tracefree(Ric + (n-1) g - (n-1)(2 eta - eta^2) g - Sigma.Sigma - (n-2)(1-eta) Sigma)."""
    n = g.shape[0]
    raw = (ricci + (n - 1) * g - (n - 1) * (2.0 * eta - eta ** 2) * g
           - dot(sigma, sigma, g_inv) - (n - 2) * (1.0 - eta) * sigma)
    return trace_free(sym(raw), g, g_inv)


def magnetic_raw(grid, sigma, eta, g, gam):
    """-(nabla_i Sigma_jm - nabla_j Sigma_im + d_i eta g_jm - d_j eta g_im)."""
    d_sigma = nabla(grid, sigma, gam)
    d_eta = gradient(grid, eta)
    curl = d_sigma - ein('jim->ijm', d_sigma)
    return -(curl + ein('i,jm->ijm', d_eta, g) - ein('j,im->ijm', d_eta, g))


def magnetic_array(grid, sigma, eta, g, g_inv, gam):
    return project_h(magnetic_raw(grid, sigma, eta, g, gam), g, g_inv)


def weyl_minus_j_array(sigma, g, g_inv):
    n = g.shape[0]
    square = dot(sigma, sigma, g_inv)
    norm = double_dot(sigma, sigma, g_inv)
    return (-0.5 * kn(sigma, sigma) - kn(square, g) / (n - 2)
            + norm / (2.0 * (n - 1) * (n - 2)) * kn(g, g))


def gauss_riemann_array(j, e, sigma, eta, g, g_inv):
    n = g.shape[0]
    gg = kn(g, g)
    return (-0.5 * gg + j + kn(e, g) / (n - 2) + (1.0 - eta) * kn(sigma, g)
            - 0.5 * eta * (eta - 2.0) * gg - 0.5 * kn(sigma, sigma))


def gauss_ricci_array(e, sigma, eta, g, g_inv):
    n = g.shape[0]
    return (-(n - 1) * g + e + (n - 1) * (2.0 * eta - eta ** 2) * g
            + dot(sigma, sigma, g_inv) + (n - 2) * (1.0 - eta) * sigma)


def j_array(riemann, e, sigma, eta, g, g_inv):
    """Weyl part of R + 1/2 g o g - E o g/(n-2) - (1-eta) Sigma o g + 1/2 eta(eta-2) g o g + 1/2 Sigma o Sigma."""
    n = g.shape[0]
    gg = kn(g, g)
    raw = (riemann + 0.5 * gg - kn(e, g) / (n - 2) - (1.0 - eta) * kn(sigma, g)
           + 0.5 * eta * (eta - 2.0) * gg + 0.5 * kn(sigma, sigma))
    return project_weyl(raw, g, g_inv)


def k_array(j, e, g):
    n = g.shape[0]
    return j + kn(e, g) / (n - 2)


def gauss_codazzi_split(g, sigma, eta, pack, tolerance=SPLIT_TOLERANCE):
    """Solve the Gauss-Codazzi equations for (E, H, J, W)."""
    grid = g.grid
    grid.check(sigma, eta, pack.metric)
    validate(sigma, g, tolerance=tolerance)
    g_data, s, h_eta = g.data, sigma.data, eta.data
    g_inv = inverse(g_data)
    e = electric_array(pack.ricci.data, g_data, g_inv, s, h_eta)
    h = magnetic_array(grid, s, h_eta, g_data, g_inv, pack.christoffel.data)
    j = j_array(pack.riemann.data, e, s, h_eta, g_data, g_inv)
    w = j + weyl_minus_j_array(s, g_data, g_inv)
    return SplitFields(TensorField(e, grid, Symmetry.SYM2_TRACE_FREE),
                       TensorField(h, grid, Symmetry.H_TYPE),
                       TensorField(j, grid, Symmetry.WEYL_TYPE),
                       TensorField(w, grid, Symmetry.WEYL_TYPE))


def weyl_minus_j(sigma, g):
    """Phi = W - J as a Weyl-type field."""
    return sigma.with_data(weyl_minus_j_array(sigma.data, g.data, inverse(g.data)), Symmetry.WEYL_TYPE)


def j_from_weyl(w, sigma, g):
    return w - weyl_minus_j(sigma, g)


def weyl_from_j(j, sigma, g):
    return j + weyl_minus_j(sigma, g)


def k_tensor(j, e, g):
    return j.with_data(k_array(j.data, e.data, g.data), Symmetry.RIEM)


def riemann_from_state(state):
    """Riemann tensor of g reassembled from (Sigma, eta, E, W)."""
    g = state.g.data
    g_inv = inverse(g)
    j = state.W.data - weyl_minus_j_array(state.sigma.data, g, g_inv)
    return state.g.with_data(gauss_riemann_array(j, state.E.data, state.sigma.data,
                                                 state.eta.data, g, g_inv), Symmetry.RIEM)


def ricci_from_state(state):
    g = state.g.data
    return state.g.with_data(gauss_ricci_array(state.E.data, state.sigma.data, state.eta.data,
                                               g, inverse(g)), Symmetry.SYM2)


# -- constraints ----------------------------------------------------------

def gauss_residual_array(scalar, sigma, eta, g_inv, n):
    """R + n(n-1) - (2n(n-1) eta - n(n-1) eta^2 + |Sigma|^2)."""
    return scalar + n * (n - 1) - (2 * n * (n - 1) * eta - n * (n - 1) * eta ** 2
                                   + double_dot(sigma, sigma, g_inv))


def electric_curl_array(g, g_inv, sigma, eta, h, div_j):
    """nabla_p E_ij - nabla_i E_pj from div_j[p, i, j] = nabla^l J_ljpi, H and Sigma (n >= 4)."""
    n = g.shape[0]
    a = (n - 2.0) / (n - 3.0)
    sh = ein('ql,pql->p', raise_all(sigma, g_inv), h)
    s_mix = mixed(sigma, g_inv)
    quadratic = (ein('jl,pil->pij', s_mix, h) + ein('pl,lij->pij', s_mix, h)
                 + ein('il,plj->pij', s_mix, h))
    return (a * div_j - (ein('ij,p->pij', g, sh) - ein('pj,i->pij', g, sh)) / (n - 3.0)
            + (n - 2.0) * (1.0 - eta) * h + a * quadratic)


def electric_curl_from_weyl(grid, g, g_inv, sigma, eta, h, j, gam):
    div_j = ein('al,aljpi->pij', g_inv, nabla(grid, j, gam))
    return electric_curl_array(g, g_inv, sigma, eta, h, div_j)


def codazzi_residual_array(grid, sigma, eta, g_inv, gam):
    """nabla^j Sigma_ij - (n-1) d_i eta."""
    n = g_inv.shape[0]
    return divergence_array(grid, sigma, gam, g_inv) - (n - 1) * gradient(grid, eta)


@dataclass(frozen=True)
class ConstraintReport:
    gauss_l2: float
    gauss_sup: float
    codazzi_l2: float
    codazzi_sup: float

    def as_dict(self):
        return {'gauss_l2': self.gauss_l2, 'gauss_sup': self.gauss_sup,
                'codazzi_l2': self.codazzi_l2, 'codazzi_sup': self.codazzi_sup}


def residual_norms(grid, residual, g, g_inv):
    """(L^2, sup) of a residual tensor over the active region."""
    pointwise = norm_sq(residual, g_inv)
    l2 = math.sqrt(max(integrate_array(grid, pointwise, sqrt_det(g)), 0.0))
    sup = math.sqrt(float(np.max(pointwise[grid.active_mask()])))
    return l2, sup


def constraint_residuals(state, pack=None):
    """L^2 and sup norms of the scalar Gauss and the Codazzi residuals."""
    grid = state.grid
    g = state.g.data
    g_inv = inverse(g)
    pack = curvature_from_metric(state.g) if pack is None else pack
    gauss = gauss_residual_array(pack.scalar.data, state.sigma.data, state.eta.data,
                                 g_inv, state.dim)
    codazzi = codazzi_residual_array(grid, state.sigma.data, state.eta.data, g_inv,
                                     pack.christoffel.data)
    gauss_l2, gauss_sup = residual_norms(grid, gauss, g, g_inv)
    codazzi_l2, codazzi_sup = residual_norms(grid, codazzi, g, g_inv)
    return ConstraintReport(gauss_l2, gauss_sup, codazzi_l2, codazzi_sup)
