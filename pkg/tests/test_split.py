import unittest

import numpy as np

from einsteinflow import chart_cusp
from einsteinflow.config import PerturbationSpec
from einsteinflow.core import NonpositiveTime
from einsteinflow.initial_data import initial_flow
from einsteinflow.split import (FlowState, constraint_residuals, gauss_codazzi_split,
                                j_from_weyl, k_tensor, reduced_from_flow, rescale, rescale_arrays,
                                ricci_from_state, riemann_from_state, unrescale, weyl_from_j)
from einsteinflow.tensor import Symmetry, identity, inverse, ricci_trace, validate


class TestSplit(unittest.TestCase):
    """Rescaling and the Gauss-Codazzi split.
    """

    def setUp(self):
        self.grid = chart_cusp.build((8, 8, 17))
        self.pack = chart_cusp.background_curvature(self.grid)

    def test_background_split(self):
        """The hyperbolic background has vanishing E, H and W.
        """
        background = chart_cusp.background_flow(self.grid, 1.0)
        e, h, j, w = gauss_codazzi_split(background.g, background.sigma, background.eta,
                                         self.pack)
        for name, field in (('E', e), ('H', h), ('J', j), ('W', w)):
            with self.subTest(field=name):
                self.assertLess(np.max(np.abs(field.data)), 1e-10)
        report = constraint_residuals(background, self.pack)
        self.assertLess(report.gauss_sup, 1e-9)
        self.assertLess(report.codazzi_sup, 1e-12)

    def test_rescaling_of_the_cone(self):
        """The Lorentz cone t^2 gamma rescales to (gamma, 0, 0) at any t.
        """
        for t in (1.0, 2.0, 5.0):
            with self.subTest(t=t):
                reduced = chart_cusp.background_reduced(self.grid, t)
                g, sigma, eta = rescale(reduced)
                np.testing.assert_allclose(g.data, chart_cusp.background_metric(self.grid).data,
                                           rtol=1e-13)
                self.assertLess(np.max(np.abs(sigma.data)), 1e-12)
                self.assertLess(np.max(np.abs(eta.data)), 1e-12)
                g_tilde, k_tilde = unrescale(t, g, sigma, eta)
                np.testing.assert_allclose(g_tilde.data, reduced.g_tilde.data, rtol=1e-13)
                np.testing.assert_allclose(k_tilde.data, reduced.k_tilde.data, rtol=1e-13,
                                           atol=1e-13)

    def test_nonpositive_time(self):
        """Rescaling and states refuse t <= 0.
        """
        g = identity(3, (2,))
        with self.assertRaises(NonpositiveTime):
            rescale_arrays(0.0, g, g)
        background = chart_cusp.background_flow(self.grid, 1.0)
        with self.assertRaises(NonpositiveTime):
            FlowState(-1.0, background.g, background.sigma, background.eta,
                      background.E, background.H, background.W)

    def test_perturbed_data(self):
        """The Sigma perturbation keeps the momentum constraint and breaks Gauss at second order.
        """
        amplitude = 1e-3
        spec = PerturbationSpec(amplitude=amplitude, support_radius=0.25)
        state = initial_flow(self.grid, chart_cusp, spec, 1.0, w_sector=False)
        self.assertLess(validate(state.sigma, state.g), 1e-12)
        self.assertGreater(np.max(np.abs(state.sigma.data)), 0.0)
        report = constraint_residuals(state, self.pack)
        self.assertLess(report.codazzi_sup, 1e-10)
        self.assertGreater(report.gauss_sup, 0.0)
        self.assertLessEqual(report.gauss_sup, 1.01 * amplitude ** 2)

    def test_gauss_form_contracts_to_ricci_form(self):
        """Contracting the reassembled Riemann tensor gives the Ricci form of the state.
        """
        spec = PerturbationSpec(amplitude=0.05)
        state = initial_flow(self.grid, chart_cusp, spec, 1.0, w_sector=False)
        g_inv = inverse(state.g.data)
        np.testing.assert_allclose(ricci_trace(riemann_from_state(state).data, g_inv),
                                   ricci_from_state(state).data, atol=1e-10)

    def test_weyl_and_j(self):
        """W and J differ by a Weyl-type field of Sigma.
        """
        spec = PerturbationSpec(amplitude=0.05)
        state = initial_flow(self.grid, chart_cusp, spec, 1.0, w_sector=False)
        j = j_from_weyl(state.W, state.sigma, state.g)
        self.assertLess(validate(j.with_data(j.data, Symmetry.WEYL_TYPE), state.g), 1e-10)
        np.testing.assert_allclose(weyl_from_j(j, state.sigma, state.g).data, state.W.data,
                                   atol=1e-14)

    def test_k_tensor_traces_to_electric_field(self):
        """K = J + E o g / (n - 2) has Riemann symmetries and Ricci trace E.
        """
        state = initial_flow(self.grid, chart_cusp, PerturbationSpec(amplitude=0.05), 1.0)
        k = k_tensor(j_from_weyl(state.W, state.sigma, state.g), state.E, state.g)
        self.assertEqual(k.symmetry, Symmetry.RIEM)
        self.assertLess(validate(k, state.g), 1e-12)
        self.assertGreater(np.max(np.abs(state.E.data)), 1e-3)
        np.testing.assert_allclose(ricci_trace(k.data, inverse(state.g.data)), state.E.data,
                                   atol=1e-12)

    def test_reduced_from_flow(self):
        """At the background the reduced variables are the cone and its rates.
        """
        background = chart_cusp.background_flow(self.grid, 2.0)
        reduced = reduced_from_flow(background, ricci=self.pack.ricci)
        expected = chart_cusp.background_reduced(self.grid, 2.0)
        for name in ('g_tilde', 'h', 'k_tilde', 'k_tilde_dot'):
            with self.subTest(field=name):
                np.testing.assert_allclose(getattr(reduced, name).data,
                                           getattr(expected, name).data, rtol=1e-12, atol=1e-12)
        self.assertLess(np.max(np.abs(reduced.trace_monitor())), 1e-12)


if __name__ == '__main__':
    unittest.main()
