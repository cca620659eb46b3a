import math
import unittest

import numpy as np

from einsteinflow import chart_cusp, chart_torus
from einsteinflow.core import OrderTooHigh
from einsteinflow.curvature import (christoffel_array, commutator_residual,
                                    curvature_from_metric, sobolev_norm)
from einsteinflow.tensor import Symmetry, TensorField, identity, kn, scalar_field


class TestCurvature(unittest.TestCase):
    """Discrete curvature on the two chart families.
    """

    def test_flat_metric(self):
        """A constant metric has vanishing Christoffels and curvature.
        """
        grid = chart_torus.build((6, 6, 6))
        g = TensorField(identity(3, grid.shape) * 2.0, grid, Symmetry.METRIC)
        pack = curvature_from_metric(g)
        self.assertLess(np.max(np.abs(pack.christoffel.data)), 1e-12)
        self.assertLess(np.max(np.abs(pack.riemann.data)), 1e-12)

    def test_hyperbolic_background(self):
        """With exact Christoffels the cusp metric has constant curvature -1.
        """
        for n in (3, 4):
            with self.subTest(n=n):
                grid = chart_cusp.build((5,) * (n - 1) + (9,))
                pack = chart_cusp.background_curvature(grid)
                g = pack.metric.data
                np.testing.assert_allclose(pack.riemann.data, -0.5 * kn(g, g), atol=1e-10)
                np.testing.assert_allclose(pack.ricci.data, -(n - 1) * g, atol=1e-10)
                np.testing.assert_allclose(pack.scalar.data, -n * (n - 1.0), atol=1e-9)
                self.assertLess(np.max(np.abs(pack.weyl.data)), 1e-10)
                self.assertLess(np.max(np.abs(pack.o_tensor.data)), 1e-10)

    def test_stencil_christoffels_converge(self):
        """Stencil Christoffels of y^-2 delta approach the exact ones.
        """
        errors = []
        for points in (17, 33):
            grid = chart_cusp.build((5, points), stencil_order=4)
            g = chart_cusp.background_metric(grid)
            exact, _ = chart_cusp.background_christoffel(grid)
            errors.append(np.max(np.abs(christoffel_array(grid, g.data) - exact)))
        order = math.log(errors[0] / errors[1], 2.0)
        self.assertGreater(order, 3.0, msg='errors {}'.format(errors))

    def test_sobolev_norm(self):
        """H_k of the constant 1 on the unit torus is 1 for every k; k = 5 is refused.
        """
        grid = chart_torus.build((6, 6, 6))
        g = chart_torus.background_metric(grid)
        one = scalar_field(1.0, grid)
        for k in range(5):
            with self.subTest(k=k):
                self.assertAlmostEqual(sobolev_norm(one, g, k), 1.0, places=10)
                self.assertAlmostEqual(sobolev_norm(one, g, k, primed=True), 1.0, places=10)
        with self.assertRaises(OrderTooHigh):
            sobolev_norm(one, g, 5)

    def test_sobolev_norm_of_a_mode(self):
        """||sin(2 pi x)||_H1 = (1 + 2 pi) / sqrt(2) on the unit torus.
        """
        grid = chart_torus.build((32, 5, 5))
        g = chart_torus.background_metric(grid)
        f = scalar_field(np.sin(2 * math.pi * grid.mesh()[0]), grid)
        expected = (1.0 + 2.0 * math.pi) / math.sqrt(2.0)
        self.assertAlmostEqual(sobolev_norm(f, g, 1), expected, delta=1e-3)

    def test_primed_norm_on_a_plane_wave(self):
        """For a wave along one axis of a flat torus H'_2 and H_2 agree.
        """
        grid = chart_torus.build((16, 5, 5))
        g = chart_torus.background_metric(grid)
        f = scalar_field(np.cos(2 * math.pi * grid.mesh()[0]), grid)
        self.assertAlmostEqual(sobolev_norm(f, g, 2, primed=True), sobolev_norm(f, g, 2),
                               places=10)

    def test_flat_commutator(self):
        """On a flat periodic chart nabla and the Laplacian commute.
        """
        grid = chart_torus.build((8, 8, 8))
        pack = chart_torus.background_curvature(grid)
        x, y, z = grid.mesh()
        v = np.stack([np.sin(2 * math.pi * x) * np.cos(2 * math.pi * z),
                      np.cos(2 * math.pi * y), np.sin(2 * math.pi * (x + z))])
        residual = commutator_residual(TensorField(v, grid), pack)
        self.assertLess(np.max(np.abs(residual)), 1e-8)


if __name__ == '__main__':
    unittest.main()
