"""Right-hand sides of the rescaled Einstein flow and the method-of-lines driver.

Two formulations share one driver:

* ``first_order``: (g, Sigma, eta, E, H, W) advanced in tau = ln t;
* ``reduced``: (g~, h, k~, d_t k~) advanced in t, with the wave equation for
  k~ carried as a first-order pair.

Gaussian normal gauge has no shift, so every Lie derivative along the time
direction is a plain partial derivative of the coordinate components.
"""
from __future__ import division

import enum
import logging
import math
import os
from collections import namedtuple
from dataclasses import dataclass, field, replace

import numpy as np

from .base import chart_module
from .core import (CflViolation, MetricNotPositiveDefinite, SupportEscaped,
                   ValidatorBlowup)
from .curvature import christoffel_array, laplacian_array, nabla, riemann_array
from .diagnostics import support_extent
from .grid import gradient
from .split import (FlowState, ReducedState, electric_curl_from_weyl, rescale_arrays,
                    weyl_minus_j_array)
from .tensor import (Symmetry, TensorField, dot, double_dot, ein, inverse, inverse_rate,
                     kn, load_fields, mixed, raise_all, ricci_trace, save_fields, sym,
                     tangent_h, tangent_sym2, tangent_weyl, trace)

logger = logging.getLogger(__name__)


class Scheme(enum.Enum):
    RK4 = 'rk4'


class Formulation(enum.Enum):
    FIRST_ORDER = 'first_order'
    REDUCED = 'reduced'


class MagneticTransport(enum.Enum):
    MAXWELL = 'maxwell'
    WEYL = 'weyl'


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = Scheme.RK4
    cfl: float = 0.25
    t_start: float = 1.0
    t_end: float = math.e
    formulation: Formulation = Formulation.FIRST_ORDER
    w_sector: bool = True
    magnetic_transport: MagneticTransport = MagneticTransport.MAXWELL
    monitor_every: int = 1
    checkpoint_every: int = 0
    validator_budget_factor: float = 10.0
    support_fraction: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, 'scheme', Scheme(self.scheme))
        object.__setattr__(self, 'formulation', Formulation(self.formulation))
        object.__setattr__(self, 'magnetic_transport', MagneticTransport(self.magnetic_transport))
        if not 0.0 < self.cfl < 1.0:
            raise ValueError('cfl must lie in (0, 1), got {}'.format(self.cfl))
        if self.t_start < 1.0:
            raise ValueError('t_start must be at least 1, got {}'.format(self.t_start))
        if not self.t_end > self.t_start:
            raise ValueError('t_end must exceed t_start')
        if self.monitor_every < 1:
            raise ValueError('monitor_every must be positive')


RhsBundle = namedtuple('RhsBundle', 'dg dsigma deta dE dH dW')
ReducedRates = namedtuple('ReducedRates', 'dg_tilde dh dk_tilde dk_tilde_dot trace_monitor')


# -- first-order system ---------------------------------------------------

def metric_rate_array(g, sigma, eta):
    return -2.0 * eta * g - 2.0 * sigma


def eta_rate_array(g_inv, sigma, eta):
    n = g_inv.shape[0]
    return -eta + eta ** 2 + double_dot(sigma, sigma, g_inv) / n


def sigma_rate_array(g, g_inv, sigma, eta, e):
    """-Sigma + E - Sigma_ip Sigma_j^p - |Sigma|^2 g / n, before projection."""
    n = g.shape[0]
    return -sigma + e - dot(sigma, sigma, g_inv) - double_dot(sigma, sigma, g_inv) / n * g


def electric_rate_array(g, g_inv, sigma, eta, e, j, div_h):
    """Electric rate with the divergence sym nabla^p H_p(ij) supplied."""
    n = g.shape[0]
    c = 1.0 / (n - 2)
    s_up = raise_all(sigma, g_inv)
    se = double_dot(sigma, e, g_inv)
    mixed_se = sym(dot(sigma, e, g_inv))
    return (-(n - 2) * e - div_h + ein('pq,piqj->ij', s_up, j) + (n - 2) * eta * e
            + c * se * g - (3.0 + 2.0 * c) * mixed_se)


def magnetic_quadratic_array(g_inv, sigma, h):
    """Sigma_j^l H_pil + Sigma_p^l H_jli + Sigma_i^l H_ljp."""
    s_mix = mixed(sigma, g_inv)
    return (ein('jl,pil->pij', s_mix, h) + ein('pl,jli->pij', s_mix, h)
            + ein('il,ljp->pij', s_mix, h))


def weyl_j_rate_array(g, g_inv, sigma, eta, e, j, d_h, div_h):
    """Rate of J with every quadratic term written out."""
    n = g.shape[0]
    c = 1.0 / (n - 2)
    s_up = raise_all(sigma, g_inv)
    s_mix = mixed(sigma, g_inv)
    a = ein('il,jl->ij', e, s_mix)
    t_a = (ein('ij,pq->ipjq', a, g) - ein('pj,iq->ipjq', a, g)
           + ein('ij,pq->ipjq', g, a) - ein('jp,iq->ipjq', g, a))
    s_dot_j = ein('kl,ikjl->ij', s_up, j)
    se = double_dot(sigma, e, g_inv)
    mixed_se = sym(dot(sigma, e, g_inv))
    return (-ein('ijqp->ipjq', d_h) + ein('pjqi->ipjq', d_h) + c * kn(div_h, g)
            - ein('jl,iplq->ipjq', s_mix, j) + ein('ql,iplj->ipjq', s_mix, j)
            - 2.0 * eta * j - c * kn(s_dot_j, g) + (1.0 + c) * kn(e, sigma) - c * t_a
            - c * c * se * kn(g, g) + (3.0 * c + 2.0 * c * c) * kn(mixed_se, g))


def weyl_minus_j_rate_array(g, g_inv, dg, dg_inv, sigma, dsigma):
    """Product-rule rate of Phi(Sigma, g)."""
    n = g.shape[0]
    c = 1.0 / (n - 2)
    square = dot(sigma, sigma, g_inv)
    norm = double_dot(sigma, sigma, g_inv)
    d_square = (dot(dsigma, sigma, g_inv) + dot(sigma, dsigma, g_inv)
                + ein('ip,pq,jq->ij', sigma, dg_inv, sigma))
    d_norm = 2.0 * double_dot(dsigma, sigma, g_inv) + 2.0 * ein('ia,jb,ij,ab->', dg_inv, g_inv,
                                                               sigma, sigma)
    scale = 2.0 * (n - 1) * (n - 2)
    return (-kn(sigma, dsigma) - c * kn(d_square, g) - c * kn(square, dg)
            + d_norm / scale * kn(g, g) + 2.0 * norm / scale * kn(g, dg))


def first_order_rates(grid, arrays, w_sector=True, magnetic=MagneticTransport.MAXWELL, gam=None):
    """tau-derivatives of (g, Sigma, eta, E, H, W) as raw arrays."""
    g, sigma, eta, e, h, w = arrays
    n = g.shape[0]
    if n < 4 and w_sector:
        raise ValueError('the W sector needs n >= 4')
    g_inv = inverse(g)
    gam = christoffel_array(grid, g, g_inv) if gam is None else gam
    phi = weyl_minus_j_array(sigma, g, g_inv)
    j = w - phi if w_sector else np.zeros_like(w)

    dg = metric_rate_array(g, sigma, eta)
    dg_inv = inverse_rate(dg, g_inv)
    deta = eta_rate_array(g_inv, sigma, eta)
    dsigma = tangent_sym2(sigma_rate_array(g, g_inv, sigma, eta, e), sigma, g, g_inv, dg_inv)

    d_h = nabla(grid, h, gam)
    div_h = sym(ein('ap,apij->ij', g_inv, d_h))
    de = tangent_sym2(electric_rate_array(g, g_inv, sigma, eta, e, j, div_h), e, g, g_inv, dg_inv)

    if MagneticTransport(magnetic) is MagneticTransport.WEYL:
        curl_e = electric_curl_from_weyl(grid, g, g_inv, sigma, eta, h, j, gam)
    else:
        d_e = nabla(grid, e, gam)
        curl_e = d_e - ein('ipj->pij', d_e)
    dh = tangent_h(-h - curl_e - magnetic_quadratic_array(g_inv, sigma, h), h, g, g_inv, dg_inv)

    if w_sector:
        dw = (weyl_j_rate_array(g, g_inv, sigma, eta, e, j, d_h, div_h)
              + weyl_minus_j_rate_array(g, g_inv, dg, dg_inv, sigma, dsigma))
        dw = tangent_weyl(dw, w, g, g_inv, dg_inv)
    else:
        dw = np.zeros_like(w)
    return dg, dsigma, deta, de, dh, dw


def rhs_first_order(state, w_sector=None, magnetic=MagneticTransport.MAXWELL, christoffel=None):
    """tau-derivatives of every FlowState slot."""
    grid = state.grid
    w_sector = state.dim >= 4 if w_sector is None else w_sector
    gam = None if christoffel is None else getattr(christoffel, 'data', christoffel)
    rates = first_order_rates(grid, state.arrays(), w_sector, magnetic, gam)
    # rates are tangent to the constraint sets, not members of them
    tags = (Symmetry.SYM2, Symmetry.SYM2, Symmetry.GENERAL, Symmetry.SYM2,
            Symmetry.GENERAL, Symmetry.GENERAL)
    return RhsBundle(*[TensorField(r, grid, tag) for r, tag in zip(rates, tags)])


def rhs_h_from_weyl(state):
    """Magnetic rate driven by the curl of E written through J."""
    return rhs_first_order(state, magnetic=MagneticTransport.WEYL).dH


# -- reduced system -------------------------------------------------------

def reduced_rates(grid, arrays):
    """t-derivatives of (g~, h, k~, d_t k~) and the trace monitor tr k~ - h."""
    g, h, k, k_dot = arrays
    g_inv = inverse(g)
    gam = christoffel_array(grid, g, g_inv)
    riemann = riemann_array(g, gam, gradient(grid, gam))
    ricci = ricci_trace(riemann, g_inv)
    k_up = raise_all(k, g_inv)
    norm_k = ein('ij,ij->', k_up, k)

    hess_h = nabla(grid, gradient(grid, h), gam)
    cubic = ein('pq,ip,jq->ij', k_up, k, k)
    mixed_rate = dot(k_dot, k, g_inv) + dot(k, k_dot, g_inv)
    k_ddot = (laplacian_array(grid, k, gam, g_inv) - hess_h
              + 2.0 * ein('iajb,ab->ij', riemann, k_up)
              - 2.0 * sym(dot(ricci, k, g_inv))
              - 2.0 * (2.0 * cubic + mixed_rate)
              + norm_k * k + h * k_dot)
    monitor = trace(k, g_inv) - h
    return (-2.0 * k, norm_k, k_dot.copy(), sym(k_ddot)), monitor


def rhs_reduced(state):
    grid = state.grid
    (dg, dh, dk, dk_dot), monitor = reduced_rates(grid, state.arrays())
    return ReducedRates(TensorField(dg, grid, Symmetry.SYM2), TensorField(dh, grid),
                        TensorField(dk, grid, Symmetry.SYM2),
                        TensorField(dk_dot, grid, Symmetry.SYM2),
                        TensorField(monitor, grid))


# -- time stepping --------------------------------------------------------

class RK4(object):
    """Classical fourth-order Runge-Kutta over tuples of arrays."""

    def __init__(self, rhs_func):
        self.rhs_func = rhs_func

    def step(self, U, time, dt):
        ki = [dt / 6, dt / 3, dt / 3]
        hi = [dt / 2, dt / 2, dt]
        ti = [0.0, dt / 2, dt / 2]

        U1 = tuple(np.zeros_like(f) for f in U)
        stage = U
        for h, k, s in zip(hi, ki, ti):
            rhs = self.rhs_func(stage, time + s)
            U1 = tuple(f1 + k * r for f1, r in zip(U1, rhs))
            stage = tuple(f0 + h * r for f0, r in zip(U, rhs))

        rhs = self.rhs_func(stage, time + dt)
        return tuple(f0 + f1 + dt / 6 * r for f0, f1, r in zip(U, U1, rhs))


SCHEMES = {
    Scheme.RK4: RK4,
}


def _signal_speed(g_inv):
    diagonal = np.einsum('aa...->a...', g_inv)
    return math.sqrt(float(np.max(diagonal)))


class _System(object):
    """Shared plumbing: collar handling, CFL bound, array/state conversion."""

    def __init__(self, grid, config, chart):
        self.grid = grid
        self.config = config
        self.chart = chart_module(grid.chart_kind) if chart is None else chart
        self.frozen = ~grid.active_mask() if grid.collar and grid.truncated_axes else None

    def _mask(self, arrays, reference):
        if self.frozen is None:
            return arrays
        out = []
        for a, b in zip(arrays, reference):
            a = np.array(a)
            a[..., self.frozen] = np.broadcast_to(b, a.shape)[..., self.frozen]
            out.append(a)
        return tuple(out)

    def rates(self, arrays, time):
        rates = self._raw_rates(arrays)
        if self.frozen is None:
            return rates
        return self._mask(rates, self._background_rates(self.physical_time(time)))

    def restore_collar(self, arrays, time):
        if self.frozen is None:
            return arrays
        return self._mask(arrays, self._background(self.physical_time(time)).arrays())

    def max_step(self, arrays):
        return self.config.cfl * min(self.grid.spacing) / _signal_speed(inverse(arrays[0]))


class FirstOrderSystem(_System):
    """(g, Sigma, eta, E, H, W) in tau = ln t."""

    def start_time(self, state):
        return state.tau

    @property
    def end_time(self):
        return math.log(self.config.t_end)

    def physical_time(self, time):
        return math.exp(time)

    def to_arrays(self, state):
        return state.arrays()

    def to_state(self, arrays, time):
        return FlowState.from_arrays(self.physical_time(time), self.grid, arrays)

    def sigma(self, arrays, time):
        return arrays[1]

    def _raw_rates(self, arrays):
        w_sector = self.config.w_sector and self.grid.dim >= 4
        return first_order_rates(self.grid, arrays, w_sector, self.config.magnetic_transport)

    def _background(self, t):
        return self.chart.background_flow(self.grid, t)

    def _background_rates(self, t):
        return self.chart.background_flow_rates(self.grid, t)


class ReducedSystem(_System):
    """(g~, h, k~, d_t k~) in t."""

    def start_time(self, state):
        return state.t

    @property
    def end_time(self):
        return self.config.t_end

    def physical_time(self, time):
        return time

    def to_arrays(self, state):
        return state.arrays()

    def to_state(self, arrays, time):
        return ReducedState.from_arrays(time, self.grid, arrays)

    def sigma(self, arrays, time):
        return rescale_arrays(time, arrays[0], arrays[2])[1]

    def _raw_rates(self, arrays):
        return reduced_rates(self.grid, arrays)[0]

    def _background(self, t):
        return self.chart.background_reduced(self.grid, t)

    def _background_rates(self, t):
        return self.chart.background_reduced_rates(self.grid, t)


FORMULATIONS = {
    Formulation.FIRST_ORDER: FirstOrderSystem,
    Formulation.REDUCED: ReducedSystem,
}


def make_system(grid, config, chart=None):
    return FORMULATIONS[config.formulation](grid, config, chart)


def step(state, config, dt=None, chart=None):
    """Advance one RK step; ``dt`` is in the formulation's clock (tau or t)."""
    system = make_system(state.grid, config, chart)
    arrays = system.to_arrays(state)
    time = system.start_time(state)
    bound = system.max_step(arrays)
    if dt is None:
        dt = bound
    elif dt > bound * (1.0 + 1e-12):
        raise CflViolation('step {:.6g} exceeds the CFL bound {:.6g}'.format(dt, bound))
    integrator = SCHEMES[config.scheme](system.rates)
    arrays = system.restore_collar(integrator.step(arrays, time, dt), time + dt)
    return system.to_state(arrays, time + dt)


# -- runs -----------------------------------------------------------------

Sample = namedtuple('Sample', 'step t reports')


@dataclass
class Trajectory:
    samples: list = field(default_factory=list)
    final: object = None
    steps: int = 0
    checkpoints: list = field(default_factory=list)

    def times(self):
        return [s.t for s in self.samples]


def validator_budget(grid, config):
    return config.validator_budget_factor * max(grid.spacing) ** grid.stencil_order


def _self_check(system, arrays, time, budget, support_limit, trajectory):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValidatorBlowup('non-finite values at t = {:.6g}'.format(
                system.physical_time(time)), trajectory)
    try:
        state = system.to_state(arrays, time)
        if isinstance(state, FlowState):
            deviation = state.symmetry_deviation()
        else:
            inverse(arrays[0])
            deviation = 0.0
    except MetricNotPositiveDefinite as e:
        raise ValidatorBlowup(str(e), trajectory)
    if deviation > budget:
        raise ValidatorBlowup('symmetry deviation {:.3e} exceeds budget {:.3e}'.format(
            deviation, budget), trajectory)
    if system.grid.truncated_axes:
        fraction = support_extent(system.grid, system.sigma(arrays, time))
        if fraction > support_limit:
            raise SupportEscaped('perturbation reached the collar guard band '
                                 '({:.3e} of its peak)'.format(fraction), trajectory)
    return state


def _checkpoint(directory, state, number):
    path = os.path.join(directory, 'checkpoint_{:06d}.eft'.format(number))
    save_fields(path, state.fields(), t=state.t)
    return path


def load_state(path):
    """FlowState or ReducedState from a checkpoint container."""
    fields, t = load_fields(path)
    if 'W' in fields:
        return FlowState(t, fields['g'], fields['sigma'], fields['eta'],
                         fields['E'], fields['H'], fields['W'])
    return ReducedState(t, fields['g_tilde'], fields['h'], fields['k_tilde'],
                        fields['k_tilde_dot'])


def run(initial, config, monitors=(), checkpoint_dir=None, chart=None):
    """Integrate from ``initial`` to ``config.t_end`` sampling ``monitors``.

    Aborts raise ``SupportEscaped`` or ``ValidatorBlowup`` carrying the
    trajectory recorded so far.
    """
    grid = initial.grid
    system = make_system(grid, config, chart)
    integrator = SCHEMES[config.scheme](system.rates)
    budget = validator_budget(grid, config)
    arrays = system.to_arrays(initial)
    time = system.start_time(initial)
    end = system.end_time
    trajectory = Trajectory()

    def sample(state, number):
        reports = [m(state) for m in monitors]
        trajectory.samples.append(Sample(number, state.t, reports))
        logger.info('step %d: t = %.6f, tau = %.6f', number, state.t, math.log(state.t))

    state = initial
    sample(state, 0)
    number = 0
    while time < end - 1e-12 * max(1.0, abs(end)):
        dt = min(system.max_step(arrays), end - time)
        try:
            arrays = integrator.step(arrays, time, dt)
        except MetricNotPositiveDefinite as e:
            logger.warning('run aborted in step %d: %s', number + 1, e)
            trajectory.steps = number + 1
            raise ValidatorBlowup(str(e), trajectory)
        time = end if end - (time + dt) < 1e-12 * max(1.0, abs(end)) else time + dt
        arrays = system.restore_collar(arrays, time)
        number += 1
        trajectory.steps = number
        try:
            state = _self_check(system, arrays, time, budget, config.support_fraction, trajectory)
        except (SupportEscaped, ValidatorBlowup) as e:
            logger.warning('run aborted at step %d: %s', number, e)
            raise
        trajectory.final = state
        done = time >= end - 1e-12 * max(1.0, abs(end))
        if number % config.monitor_every == 0 or done:
            sample(state, number)
        if checkpoint_dir and config.checkpoint_every and number % config.checkpoint_every == 0:
            trajectory.checkpoints.append(_checkpoint(checkpoint_dir, state, number))
    trajectory.final = state
    return trajectory


def with_formulation(config, formulation):
    return replace(config, formulation=Formulation(formulation))
