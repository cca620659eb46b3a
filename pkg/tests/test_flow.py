import math
import os
import shutil
import tempfile
import unittest

import numpy as np

from einsteinflow import chart_cusp, chart_torus
from einsteinflow.config import PerturbationSpec
from einsteinflow.core import CflViolation, ValidatorBlowup
from einsteinflow.curvature import curvature_from_metric
from einsteinflow.flow import (Formulation, IntegratorConfig, MagneticTransport,
                               eta_rate_array, load_state, rhs_first_order, rhs_h_from_weyl,
                               rhs_reduced, run, step, with_formulation)
from einsteinflow.initial_data import initial_flow, polarization
from einsteinflow.split import (FlowState, ReducedState, gauss_codazzi_split,
                                gauss_residual_array, reduced_from_flow, rescale_arrays)
from einsteinflow.tensor import Symmetry, TensorField, identity, inverse, sym, trace_free


def split_at(grid, g, sigma, eta):
    """Trace-free Sigma and the split fields of (g, Sigma, eta) on stencil curvature."""
    metric = TensorField(g, grid, Symmetry.METRIC)
    sigma = trace_free(sym(sigma), g, inverse(g))
    fields = gauss_codazzi_split(metric, TensorField(sigma, grid, Symmetry.SYM2_TRACE_FREE),
                                 TensorField(eta, grid), curvature_from_metric(metric))
    return sigma, fields


def rate_mismatch(extent, order, amplitude, step_size=1e-4):
    """RMS gap between (dE, dW) and a centred tau difference of the split, mid-cusp."""
    grid = chart_cusp.build(extent, stencil_order=order)
    background = chart_cusp.background_flow(grid, 1.0)
    g, eta = background.g.data, background.eta.data
    x = grid.coordinates(2).reshape((1, 1, -1, 1))
    p = polarization(4, 3).reshape((4, 4) + (1,) * 4)
    sigma, fields = split_at(grid, g, p * g[0, 0] * amplitude * np.cos(2 * math.pi * x), eta)
    state = FlowState(1.0, background.g, TensorField(sigma, grid, Symmetry.SYM2_TRACE_FREE),
                      background.eta, fields.E, fields.H, fields.W)
    bundle = rhs_first_order(state)
    moved = []
    for sign in (1.0, -1.0):
        shift = sign * step_size
        moved.append(split_at(grid, g + shift * bundle.dg.data,
                              sigma + shift * bundle.dsigma.data,
                              eta + shift * bundle.deta.data)[1])
    y = chart_cusp.height(grid)
    region = (y >= 1.25) & (y <= 1.75)
    gaps = []
    for name in ('E', 'W'):
        numeric = (getattr(moved[0], name).data - getattr(moved[1], name).data) / (2 * step_size)
        gap = (numeric - getattr(bundle, 'd' + name).data)[..., region]
        gaps.append(math.sqrt(float(np.mean(gap ** 2))))
    return gaps


class TestRates(unittest.TestCase):
    """Right-hand sides of the two formulations.
    """

    def test_eta_rate(self):
        """d eta = -eta + eta^2 + |Sigma|^2 / n.
        """
        g_inv = identity(3, (1,))
        sigma = np.zeros((3, 3, 1))
        np.testing.assert_allclose(eta_rate_array(g_inv, sigma, np.array([0.1])), [-0.09])
        sigma[0, 1, 0] = sigma[1, 0, 0] = 0.3
        np.testing.assert_allclose(eta_rate_array(g_inv, sigma, np.array([0.0])), [0.06])

    def test_cusp_background_is_stationary(self):
        """Every first-order rate vanishes at the hyperbolic background.
        """
        grid = chart_cusp.build((5, 5, 5, 9))
        state = chart_cusp.background_flow(grid, 1.0)
        gam, _ = chart_cusp.background_christoffel(grid)
        for magnetic in MagneticTransport:
            with self.subTest(magnetic=magnetic.value):
                bundle = rhs_first_order(state, magnetic=magnetic, christoffel=gam)
                for name, rate in zip(bundle._fields, bundle):
                    self.assertLess(np.max(np.abs(rate.data)), 1e-12,
                                    msg='{} rate {:.3e}'.format(name, np.max(np.abs(rate.data))))

    def test_magnetic_rate_through_weyl(self):
        """The magnetic rate written through J vanishes at the background too.
        """
        grid = chart_cusp.build((5, 5, 5, 9))
        state = chart_cusp.background_flow(grid, 1.0)
        self.assertLess(np.max(np.abs(rhs_h_from_weyl(state).data)), 1e-8)

    def test_w_sector_needs_four_dimensions(self):
        """In dimension 3 the W sector is refused.
        """
        grid = chart_torus.build((5, 5, 5))
        state = chart_torus.background_flow(grid, 1.0)
        with self.assertRaises(ValueError):
            rhs_first_order(state, w_sector=True)
        bundle = rhs_first_order(state)
        np.testing.assert_allclose(bundle.dg.data, -2.0 * state.g.data)
        self.assertLess(np.max(np.abs(bundle.deta.data)), 1e-15)

    def test_reduced_flat_background(self):
        """Flat static spacetime is a fixed point of the reduced system.
        """
        grid = chart_torus.build((5, 5, 5))
        rates = rhs_reduced(chart_torus.background_reduced(grid, 1.0))
        for name, rate in zip(rates._fields, rates):
            with self.subTest(rate=name):
                self.assertLess(np.max(np.abs(rate.data)), 1e-12)

    def test_config_validation(self):
        """Out-of-range settings are rejected.
        """
        for kwargs in (dict(cfl=1.5), dict(cfl=0.0), dict(t_start=0.5),
                       dict(t_start=2.0, t_end=1.5), dict(monitor_every=0),
                       dict(formulation='wave_sigma')):
            with self.subTest(**kwargs):
                with self.assertRaises(ValueError):
                    IntegratorConfig(**kwargs)
        config = with_formulation(IntegratorConfig(), 'reduced')
        self.assertIs(config.formulation, Formulation.REDUCED)


class TestRatesAgainstSplit(unittest.TestCase):
    """First-order rates compared with the fields of a moved state.
    """

    def test_electric_and_weyl_rates_converge(self):
        """Off the background, dE and dW match the differenced split at the stencil order.

        Sigma-only data miss the Gauss constraint at second order in the
        amplitude, so the amplitude stays small enough for that floor to sit
        below the truncation gap.
        """
        order = 2
        coarse = rate_mismatch((3, 3, 16, 25), order, 1e-5)
        fine = rate_mismatch((3, 3, 32, 49), order, 1e-5)
        for name, c, f in zip(('E', 'W'), coarse, fine):
            with self.subTest(field=name):
                self.assertGreater(c, 0.0)
                self.assertGreaterEqual(math.log(c / f, 2.0), order - 0.5,
                                        msg='{}: {:.3e} -> {:.3e}'.format(name, c, f))

    def test_first_order_and_reduced_rates_agree(self):
        """Both formulations give the same g and Sigma rates; eta rates differ by Gauss / n.
        """
        grid = chart_cusp.build((5, 5, 8, 13))
        n = grid.dim
        perturbation = PerturbationSpec(amplitude=1e-3, support_radius=0.4, mode='fourier')
        state = initial_flow(grid, chart_cusp, perturbation, t_start=1.5)
        pack = chart_cusp.background_curvature(grid)
        reduced = reduced_from_flow(state, ricci=pack.ricci)
        g_tilde, _, k_tilde, k_dot = reduced.arrays()
        t = state.t
        delta = 1e-5 * t
        plus = rescale_arrays(t + delta, g_tilde - 2.0 * delta * k_tilde, k_tilde + delta * k_dot)
        minus = rescale_arrays(t - delta, g_tilde + 2.0 * delta * k_tilde, k_tilde - delta * k_dot)
        dg, dsigma, deta = [t * (a - b) / (2 * delta) for a, b in zip(plus, minus)]

        gam, _ = chart_cusp.background_christoffel(grid)
        bundle = rhs_first_order(state, christoffel=gam)
        gauss = gauss_residual_array(pack.scalar.data, state.sigma.data, state.eta.data,
                                     inverse(state.g.data), n)
        self.assertGreater(np.max(np.abs(gauss)), 1e-8)
        self.assertGreater(np.max(np.abs(bundle.dsigma.data)), 1e-4)
        np.testing.assert_allclose(dg, bundle.dg.data, atol=1e-8)
        np.testing.assert_allclose(dsigma, bundle.dsigma.data, atol=1e-8)
        np.testing.assert_allclose(deta - bundle.deta.data, gauss / n, atol=1e-9)


class TestRuns(unittest.TestCase):
    """Stepping and whole runs.
    """

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_cfl_violation(self):
        """A step above the CFL bound is refused.
        """
        grid = chart_torus.build((5, 5, 5))
        state = chart_torus.background_flow(grid, 1.0)
        config = IntegratorConfig(w_sector=False)
        with self.assertRaises(CflViolation):
            step(state, config, dt=1.0)
        later = step(state, config, dt=0.01)
        self.assertAlmostEqual(later.t, math.exp(0.01))

    def test_torus_background_run(self):
        """The rescaled flat background follows g = t^-2 delta.
        """
        grid = chart_torus.build((5, 5, 5))
        config = IntegratorConfig(w_sector=False, t_end=1.5, checkpoint_every=4)
        trajectory = run(chart_torus.background_flow(grid, 1.0), config,
                         checkpoint_dir=self.directory)
        final = trajectory.final
        self.assertIsInstance(final, FlowState)
        self.assertAlmostEqual(final.t, 1.5, places=12)
        np.testing.assert_allclose(final.g.data, identity(3, grid.shape) / 1.5 ** 2, rtol=1e-8)
        np.testing.assert_allclose(final.eta.data, 1.0, rtol=1e-12)
        self.assertTrue(trajectory.checkpoints)
        restored = load_state(trajectory.checkpoints[0])
        self.assertIsInstance(restored, FlowState)
        self.assertEqual(restored.grid, grid)
        self.assertTrue(os.path.exists(trajectory.checkpoints[-1]))

    def test_reduced_linear_wave(self):
        """A small transverse-traceless k~ oscillates like cos(2 pi x) cos(2 pi (t - 1)).
        """
        grid = chart_torus.build((16, 5, 5))
        epsilon = 1e-6
        x = grid.mesh()[0]
        k = np.zeros((3, 3) + grid.shape)
        k[1, 2] = k[2, 1] = epsilon * np.cos(2 * math.pi * x)
        initial = ReducedState.from_arrays(1.0, grid, (identity(3, grid.shape),
                                                       np.zeros(grid.shape), k,
                                                       np.zeros_like(k)))
        config = IntegratorConfig(formulation='reduced', w_sector=False, t_end=1.1, cfl=0.1)
        final = run(initial, config).final
        expected = epsilon * np.cos(2 * math.pi * x) * math.cos(2 * math.pi * 0.1)
        error = np.max(np.abs(final.k_tilde.data[1, 2] - expected))
        self.assertLess(error, 1e-3 * epsilon, msg='wave error {:.3e}'.format(error))
        self.assertLess(np.max(np.abs(final.h.data)), 1e-10)

    def test_blowup_aborts_with_partial_trajectory(self):
        """Non-finite data stops the run and keeps what was recorded.
        """
        grid = chart_torus.build((5, 5, 5))
        background = chart_torus.background_flow(grid, 1.0)
        eta = np.ones(grid.shape)
        eta[0, 0, 0] = np.nan
        state = FlowState(1.0, background.g, background.sigma, background.eta.with_data(eta),
                          background.E, background.H, background.W)
        with self.assertRaises(ValidatorBlowup) as raised:
            run(state, IntegratorConfig(w_sector=False))
        self.assertEqual(raised.exception.reason, 'validator_blowup')
        self.assertEqual(raised.exception.trajectory.steps, 1)


if __name__ == '__main__':
    unittest.main()
