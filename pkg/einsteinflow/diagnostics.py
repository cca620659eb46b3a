"""Monitored functionals: Sobolev norms, energies, constraint and elliptic
residuals, the Weyl non-positivity form and decay-rate fits.
"""
from __future__ import division

import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .core import NonpositiveValues, WindowTooSmall
from .curvature import (MAX_SOBOLEV_ORDER, curvature_from_metric, divergence_array, nabla,
                        sobolev_terms)
from .grid import integrate_array
from .initial_data import active_range, bump
from .split import (ReducedState, constraint_residuals, electric_curl_from_weyl,
                    flow_from_reduced, gauss_ricci_array, gauss_riemann_array,
                    residual_norms, weyl_minus_j_array)
from .tensor import (Symmetry, ein, inverse, inverse_rate, norm_sq, raise_all, ricci_trace,
                     sqrt_det, sym, trace_free, validate)

logger = logging.getLogger(__name__)

# Largest component rank formed while taking norms; higher orders of
# high-rank fields are dropped and recorded in the ``gap`` entry.
MAX_NORM_RANK = 4
MIN_FIT_SAMPLES = 10

EnergyTerms = namedtuple('EnergyTerms', 'electric magnetic weyl_correction total')
DivCurlResidual = namedtuple('DivCurlResidual', 'integrated sup divergence_integral')


@dataclass
class EnergyReport:
    t: float
    tau: float
    norms: dict
    modified_energy: float
    energy_terms: EnergyTerms
    weyl_quadratic_form: float
    constraints: dict
    energy_identity_rhs: float
    trace_monitor: float = 0.0
    support: float = 0.0


@dataclass(frozen=True)
class DecayFit:
    name: str
    window: tuple
    exponent: float
    intercept: float
    residual: float
    delta: float
    samples: int


@dataclass
class NonpositivityVerdict:
    nonpositive: bool
    worst: float
    worst_index: int
    values: list = field(default_factory=list)


# -- helpers --------------------------------------------------------------

def _volume(g):
    return sqrt_det(g)


def _l2_sq(grid, t, g_inv, volume):
    return integrate_array(grid, norm_sq(t, g_inv), volume)


def c0_norm(field, g):
    """Sup over the active region of |field|_g."""
    pointwise = norm_sq(field.data, inverse(g.data))
    return math.sqrt(float(np.max(pointwise[field.grid.active_mask()])))


def support_extent(grid, perturbation):
    """Share of the perturbation peak found in the guard band next to the collar."""
    rank = perturbation.ndim - grid.dim
    magnitude = np.sqrt(np.sum(perturbation ** 2, axis=tuple(range(rank))))
    active = grid.active_mask()
    peak = float(np.max(magnitude[active], initial=0.0))
    if peak == 0.0:
        return 0.0
    return float(np.max(magnitude[grid.guard_mask()], initial=0.0)) / peak


# -- Weyl quadratic form ----------------------------------------------------

def quadratic_form_array(grid, w, a, g_inv, volume):
    a_up = raise_all(a, g_inv)
    return integrate_array(grid, ein('ij,pq,ipjq->', a_up, a_up, w), volume)


def weyl_quadratic_form(W, A, g):
    """Integral of A^ij A^pq W_ipjq."""
    W.grid.check(A, g)
    return quadratic_form_array(W.grid, W.data, A.data, inverse(g.data), _volume(g.data))


def _random_fields(grid, g, g_inv, count, rng):
    n = grid.dim
    for _ in range(count):
        center, radius = [], []
        for axis in range(n):
            lo, hi = active_range(grid, axis)
            if axis in grid.truncated_axes:
                r = rng.uniform(0.15, 0.45) * (hi - lo)
                center.append(rng.uniform(lo + r, hi - r))
                radius.append(r)
            else:
                center.append(rng.uniform(lo, hi))
                radius.append(rng.uniform(0.15, 0.35) * (hi - lo))
        amplitude = rng.standard_normal((n, n)).reshape((n, n) + (1,) * n)
        yield trace_free(sym(amplitude * bump(grid, center, radius)), g, g_inv)


def _basis_fields(grid, g, g_inv):
    n = grid.dim
    center, radius = [], []
    for axis in range(n):
        lo, hi = active_range(grid, axis)
        center.append(0.5 * (lo + hi))
        radius.append(0.3 * (hi - lo))
    profile = bump(grid, center, radius)
    directions = []
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            directions.append(e)
    for i in range(n - 1):
        e = np.zeros((n, n))
        e[i, i], e[i + 1, i + 1] = 1.0, -1.0
        directions.append(e)
    for e in directions:
        yield trace_free(e.reshape((n, n) + (1,) * n) * profile, g, g_inv)


def weyl_nonpositivity(gamma, W_gamma, samples=64, seed=0, tolerance=1e-10, candidates=()):
    """Sample the Weyl quadratic form over trace-free symmetric fields.

    Values are normalised by the L^2 norm of A, so the verdict is
    nonpositive iff every sampled value is at most ``tolerance``.  A
    sampling falsifies; it never proves.
    """
    grid = gamma.grid
    grid.check(W_gamma)
    g = gamma.data
    g_inv = inverse(g)
    volume = _volume(g)
    rng = np.random.default_rng(seed)
    fields = [getattr(c, 'data', c) for c in candidates]
    fields += list(_random_fields(grid, g, g_inv, samples, rng))
    fields += list(_basis_fields(grid, g, g_inv))
    values = []
    for a in fields:
        scale = _l2_sq(grid, a, g_inv, volume)
        if scale == 0.0:
            values.append(0.0)
        else:
            values.append(quadratic_form_array(grid, W_gamma.data, a, g_inv, volume) / scale)
    worst_index = int(np.argmax(values))
    worst = float(values[worst_index])
    verdict = NonpositivityVerdict(worst <= tolerance, worst, worst_index, values)
    logger.info('non-positivity: %d fields, worst %.3e', len(values), worst)
    return verdict


# -- energies ---------------------------------------------------------------

def modified_energy(state):
    """2 t^2 ||E||^2 + t^2 ||H||^2 minus the Weyl correction t^2 (Sigma Sigma W)."""
    grid = state.grid
    g = state.g.data
    g_inv = inverse(g)
    volume = _volume(g)
    t2 = state.t ** 2
    electric = 2.0 * t2 * _l2_sq(grid, state.E.data, g_inv, volume)
    magnetic = t2 * _l2_sq(grid, state.H.data, g_inv, volume)
    correction = t2 * quadratic_form_array(grid, state.W.data, state.sigma.data, g_inv, volume)
    return EnergyTerms(electric, magnetic, correction, electric + magnetic - correction)


def _norm_rate(t, dt, g_inv, dg_inv):
    """tau-derivative of |T|_g^2 given the rates of T and of g^-1."""
    rank = t.ndim - g_inv.ndim + 2
    total = 2.0 * np.sum(raise_all(t, g_inv) * dt, axis=tuple(range(rank)))
    letters = 'abcdef'[:rank]
    upper = 'ghijkl'[:rank]
    for slot in range(rank):
        specs, operands = [], []
        for k in range(rank):
            specs.append(letters[k] + upper[k])
            operands.append(dg_inv if k == slot else g_inv)
        spec = ','.join(specs + [letters, upper]) + '->'
        total = total + ein(spec, *(operands + [t, t]))
    return total


def energy_rate(state, bundle):
    """d/dt of 2 t^2 ||E||^2 + t^2 ||H||^2 from the tau-rates in ``bundle``."""
    grid = state.grid
    g = state.g.data
    g_inv = inverse(g)
    dg = bundle.dg.data
    dg_inv = inverse_rate(dg, g_inv)
    volume = _volume(g)
    d_volume = 0.5 * ein('ij,ij->', g_inv, dg) * volume
    e, h = state.E.data, state.H.data
    base = (2.0 * integrate_array(grid, norm_sq(e, g_inv), volume)
            + integrate_array(grid, norm_sq(h, g_inv), volume))
    rate = (2.0 * integrate_array(grid, _norm_rate(e, bundle.dE.data, g_inv, dg_inv), volume)
            + integrate_array(grid, _norm_rate(h, bundle.dH.data, g_inv, dg_inv), volume)
            + 2.0 * integrate_array(grid, norm_sq(e, g_inv), d_volume)
            + integrate_array(grid, norm_sq(h, g_inv), d_volume))
    t = state.t
    # d/dt = t^-1 d/dtau and d(t^2)/dtau = 2 t^2
    return (2.0 * t * t * base + t * t * rate) / t


def energy_identity_rhs(state, weyl_weight=1.0):
    """-4(n-3) t ||E||^2 + weyl_weight * integral of 2 t Sigma_pq W^piqj E_ij."""
    grid = state.grid
    n = state.dim
    g = state.g.data
    g_inv = inverse(g)
    volume = _volume(g)
    t = state.t
    e = state.E.data
    coupling = ein('pq,ij,piqj->', raise_all(state.sigma.data, g_inv), raise_all(e, g_inv),
                   state.W.data)
    return (-4.0 * (n - 3) * t * _l2_sq(grid, e, g_inv, volume)
            + weyl_weight * 2.0 * t * integrate_array(grid, coupling, volume))


def audit_energy_identity(reports, modified=False):
    """Relative mismatch between the differenced energy and the identity's right side.

    One entry per interior sample; ``modified`` differentiates the
    Weyl-corrected energy instead of 2 t^2 ||E||^2 + t^2 ||H||^2.
    """
    residuals = []
    for before, here, after in zip(reports, reports[1:], reports[2:]):
        def energy(r):
            if modified:
                return r.energy_terms.total
            return r.energy_terms.electric + r.energy_terms.magnetic
        slope = (energy(after) - energy(before)) / (after.t - before.t)
        rhs = here.energy_identity_rhs
        scale = max(abs(slope), abs(rhs), 1e-300)
        residuals.append(abs(slope - rhs) / scale)
    return residuals


# -- elliptic residuals -----------------------------------------------------

def elliptic_residuals(state, pack=None):
    """L^2 norms of the div-E, curl-W, div-W and (n >= 4) curl-E relations."""
    grid = state.grid
    n = state.dim
    g = state.g.data
    g_inv = inverse(g)
    pack = curvature_from_metric(state.g) if pack is None else pack
    gam = pack.christoffel.data
    s, eta, e, h, w = (state.sigma.data, state.eta.data, state.E.data, state.H.data,
                       state.W.data)
    j = w - weyl_minus_j_array(s, g, g_inv)
    q = gauss_riemann_array(j, e, s, eta, g, g_inv) - w
    ric = gauss_ricci_array(e, s, eta, g, g_inv)

    out = {}
    div_e = divergence_array(grid, e, gam, g_inv) + ein('qp,jqp->j', raise_all(s, g_inv), h)
    out['div_E'] = residual_norms(grid, div_e, g, g_inv)[0]

    d_r = nabla(grid, w + q, gam)
    curl_w = d_r + ein('impjn->pimjn', d_r) + ein('mpijn->pimjn', d_r)
    out['curl_W'] = residual_norms(grid, curl_w, g, g_inv)[0]

    div_w = ein('al,aljpi->jpi', g_inv, nabla(grid, w, gam))
    div_q = ein('al,aljpi->jpi', g_inv, nabla(grid, q, gam))
    d_ric = nabla(grid, ric, gam)
    div_w_res = div_w - (ein('pji->jpi', d_ric) - ein('ijp->jpi', d_ric) - div_q)
    out['div_W'] = residual_norms(grid, div_w_res, g, g_inv)[0]

    if n >= 4:
        d_e = nabla(grid, e, gam)
        curl_e = d_e - ein('ipj->pij', d_e)
        res = curl_e - electric_curl_from_weyl(grid, g, g_inv, s, eta, h, j, gam)
        out['div_J'] = residual_norms(grid, res, g, g_inv)[0]
    return out


# -- div-curl identity ------------------------------------------------------

def _curvature_terms(x, g_inv, e, h, d_e_up, d_h_up):
    """Commutator terms of the first-order identity for a curvature-type X."""
    ric_mixed = ein('ae,ed->ad', ricci_trace(x, g_inv), g_inv)
    x_up = ein('abje,bp,ed->apjd', x, g_inv, g_inv)
    x_mixed = ein('apie,ed->apid', x, g_inv)
    first = (-ein('ad,dji->aji', ric_mixed, h) + ein('apjd,pdi->aji', x_up, h)
             + ein('apid,pjd->aji', x_up, h))
    second = ein('apid,dj->apij', x_mixed, e) + ein('apjd,id->apij', x_mixed, e)
    return ein('aji,aij->', first, d_e_up) + ein('apij,apij->', second, d_h_up)


def div_curl_identity(E, H, g, k=0, pack=None, tolerance=1e-10, margin=None):
    """Residual of the div-curl identity pairing E and H at order ``k``.

    k = 0:  nabla^p H_pji E^ij + nabla_p E_ij H^pij = nabla^p (H_p(ij) E^ij).
    k = 1:  the once-differentiated form, whose commutator remainders are
            evaluated through O = R + 1/2 g o g.
    """
    if k not in (0, 1):
        raise ValueError('the identity is implemented for k = 0 and k = 1')
    grid = g.grid
    grid.check(E, H)
    validate(E.with_data(E.data, Symmetry.SYM2_TRACE_FREE), g, tolerance)
    validate(H.with_data(H.data, Symmetry.H_TYPE), g, tolerance)
    n = grid.dim
    g_data = g.data
    g_inv = inverse(g_data)
    volume = _volume(g_data)
    if pack is None:
        pack = curvature_from_metric(g)
    gam = pack.christoffel.data
    e, h = E.data, H.data
    e_up = raise_all(e, g_inv)
    d_h = nabla(grid, h, gam)
    d_e = nabla(grid, e, gam)
    div_hp = ein('ap,apji,ij->', g_inv, d_h, e_up)
    flux = ein('pij,ij->p', h, e_up)
    div_flux = divergence_array(grid, flux, gam, g_inv)
    if k == 0:
        density = div_hp + ein('pij,pij->', d_e, raise_all(h, g_inv)) - div_flux
        divergence = div_flux
    else:
        d_e_up = raise_all(d_e, g_inv)
        d_h_up = raise_all(d_h, g_inv)
        lhs = (ein('bp,abpji,aij->', g_inv, nabla(grid, d_h, gam), d_e_up)
               + ein('apij,apij->', nabla(grid, d_e, gam), d_h_up))
        flux1 = ein('apij,aij->p', d_h, d_e_up)
        div_flux1 = divergence_array(grid, flux1, gam, g_inv)
        rhs = (div_flux1 + (n - 2) * div_flux - (n - 3) * div_hp
               + _curvature_terms(pack.o_tensor.data, g_inv, e, h, d_e_up, d_h_up))
        density = lhs - rhs
        divergence = div_flux1 + (n - 2) * div_flux
    where = grid.active_mask() if margin is None else grid.interior_mask(margin)
    sup = float(np.max(np.abs(density[where])))
    return DivCurlResidual(integrate_array(grid, density, volume), sup,
                           integrate_array(grid, divergence, volume))


# -- norms ------------------------------------------------------------------

NORM_TARGETS = (
    ('sigma', 1, 'sigma'),
    ('eta', 2, 'eta'),
    ('E', 0, 'E'),
    ('H', 0, 'H'),
    ('g_gamma', 2, 'g'),
    ('W_Wgamma', 0, 'W'),
    ('ricci_einstein', 0, None),
)


def norms_report(state, chart, order=2, cap=2, pack=None):
    """Sobolev norms of the perturbation; key ``<name>_H<j>`` for each achieved j.

    ``<name>_C0`` holds the sup of the pointwise norm over the active region.
    """
    grid = state.grid
    g = state.g.data
    pack = curvature_from_metric(state.g) if pack is None else pack
    gam = pack.christoffel.data
    background = chart.background_flow(grid, state.t)
    ricci_gap = pack.ricci.data - chart.einstein_constant(grid.dim) * g
    norms = {}
    gap = 0
    for name, extra, slot in NORM_TARGETS:
        if slot is None:
            data = ricci_gap
        else:
            data = getattr(state, slot).data - getattr(background, slot).data
        rank = data.ndim - grid.dim
        target = order + extra
        achieved = min(target, cap, MAX_SOBOLEV_ORDER, max(MAX_NORM_RANK - rank, 0))
        gap = max(gap, target - achieved)
        terms = sobolev_terms(grid, data, g, achieved, gam=gam)
        for j in range(achieved + 1):
            norms['{}_H{}'.format(name, j)] = float(sum(terms[:j + 1]))
        norms['{}_C0'.format(name)] = c0_norm(state.g.with_data(data), state.g)
    norms['gap'] = float(gap)
    return norms


# -- decay fits -------------------------------------------------------------

def fit_decay(series, window=None, name='value'):
    """Least-squares line through (tau, ln value); exponent of the model c t^alpha."""
    points = np.asarray([(float(tau), float(v)) for tau, v in series])
    if points.size == 0:
        raise WindowTooSmall('empty series')
    tau, values = points[:, 0], points[:, 1]
    if window is None:
        window = (float(tau.min()), float(tau.max()))
    window = (float(window[0]), float(window[1]))
    inside = (tau >= window[0]) & (tau <= window[1])
    if inside.sum() < MIN_FIT_SAMPLES or window[1] - window[0] < 1.0:
        raise WindowTooSmall('{} samples over a window of {:.3g} tau units'.format(
            int(inside.sum()), window[1] - window[0]))
    tau, values = tau[inside], values[inside]
    if np.any(values <= 0.0):
        raise NonpositiveValues('{} has nonpositive values in the window'.format(name))
    logs = np.log(values)
    slope, intercept = np.polyfit(tau, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * tau + intercept)) ** 2)))
    return DecayFit(name, window, float(slope), float(intercept), residual,
                    1.0 + float(slope), int(inside.sum()))


# -- per-sample monitor -----------------------------------------------------

class Monitor(object):
    """Builds one EnergyReport per sampled state."""

    def __init__(self, chart, norm_order=2, norm_order_cap=2, weyl_weight=1.0, elliptic=False):
        self.chart = chart
        self.norm_order = norm_order
        self.norm_order_cap = norm_order_cap
        self.weyl_weight = weyl_weight
        self.elliptic = elliptic

    def __call__(self, state):
        trace_monitor = 0.0
        if isinstance(state, ReducedState):
            trace_monitor = float(np.max(np.abs(state.trace_monitor()[state.grid.active_mask()])))
            state = flow_from_reduced(state)
        pack = curvature_from_metric(state.g)
        terms = modified_energy(state)
        constraints = constraint_residuals(state, pack).as_dict()
        if self.elliptic:
            constraints.update(elliptic_residuals(state, pack))
        return EnergyReport(
            t=state.t,
            tau=state.tau,
            norms=norms_report(state, self.chart, self.norm_order, self.norm_order_cap, pack),
            modified_energy=terms.total,
            energy_terms=terms,
            weyl_quadratic_form=weyl_quadratic_form(state.W, state.sigma, state.g),
            constraints=constraints,
            energy_identity_rhs=energy_identity_rhs(state, self.weyl_weight),
            trace_monitor=trace_monitor,
            support=support_extent(state.grid, state.sigma.data)
            if state.grid.truncated_axes else 0.0,
        )
