import math
import unittest

import numpy as np

from einsteinflow import chart_cusp, chart_torus
from einsteinflow.core import AxisOutOfRange
from einsteinflow.grid import (ChartGrid, ChartKind, Topology, derivative, fd_weights,
                               integrate, integrate_array, partial_derivative)
from einsteinflow.tensor import TensorField, scalar_field


class TestGrid(unittest.TestCase):
    """Chart grids, stencils and quadrature.
    """

    def test_periodic_derivative(self):
        """Centered stencils differentiate sin(2 pi x) to the expected accuracy.
        """
        grid = chart_torus.build((32, 4), stencil_order=4)
        x = grid.mesh()[0]
        error = np.max(np.abs(derivative(grid, np.sin(2 * math.pi * x), 0)
                              - 2 * math.pi * np.cos(2 * math.pi * x)))
        self.assertLess(error, 1e-3, msg='periodic derivative error {:.3e}'.format(error))

    def test_truncated_derivative_is_exact_on_quartics(self):
        """One-sided closures reproduce the derivative of a quartic in y.
        """
        for p in (2, 4):
            with self.subTest(stencil_order=p):
                grid = chart_cusp.build((p + 1, 9), stencil_order=p, collar=0)
                y = chart_cusp.height(grid)
                f = y ** p
                error = np.max(np.abs(derivative(grid, f, 1) - p * y ** (p - 1)))
                self.assertLess(error, 1e-9, msg='order {} error {:.3e}'.format(p, error))

    def test_axis_out_of_range(self):
        """Differentiating along a nonexistent axis fails.
        """
        grid = chart_torus.build((8, 8))
        field = scalar_field(1.0, grid)
        with self.assertRaises(AxisOutOfRange):
            partial_derivative(field, 2)

    def test_fd_weights(self):
        """Three-point first derivative weights.
        """
        np.testing.assert_allclose(fd_weights([-1, 0, 1], 1), [-0.5, 0.0, 0.5], atol=1e-14)

    def test_integrate_constant(self):
        """The unit torus has volume one.
        """
        grid = chart_torus.build((8, 8, 8))
        one = scalar_field(1.0, grid)
        self.assertAlmostEqual(integrate(one, one), 1.0, places=12)

    def test_integrate_half_plane(self):
        """Integral of y^-2 over [0, 1) x [1, 2] is one half.
        """
        grid = chart_cusp.build((8, 17), collar=0)
        y = chart_cusp.height(grid)
        value = integrate_array(grid, np.ones(grid.shape), y ** -2.0)
        self.assertAlmostEqual(value, 0.5, delta=1e-4)

    def test_refine(self):
        """Refinement doubles periodic axes and halves truncated spacings.
        """
        grid = chart_cusp.build((8, 17))
        fine = grid.refine()
        self.assertEqual(fine.extent, (16, 33))
        self.assertAlmostEqual(fine.spacing[1], grid.spacing[1] / 2.0)
        self.assertEqual(fine.coordinates(1)[-1], grid.coordinates(1)[-1])

    def test_invalid_grids(self):
        """Too few points, or a truncated axis on a torus, are rejected.
        """
        cases = (
            dict(extent=(3, 8), spacing=(0.3, 0.1), topology=(Topology.PERIODIC,) * 2,
                 stencil_order=4, chart_kind=ChartKind.FLAT_TORUS),
            dict(extent=(8, 8), spacing=(0.1, 0.1),
                 topology=(Topology.PERIODIC, Topology.TRUNCATED),
                 stencil_order=4, chart_kind=ChartKind.FLAT_TORUS),
            dict(extent=(8, 8), spacing=(0.1, 0.1),
                 topology=(Topology.PERIODIC, Topology.TRUNCATED), stencil_order=4,
                 chart_kind=ChartKind.HYPERBOLIC_CUSP, origin=(0.0, 1.0), collar=2),
        )
        for case in cases:
            with self.subTest(case=case):
                with self.assertRaises(ValueError):
                    ChartGrid(**case)

    def test_masks(self):
        """The collar is excluded from the active region and the guard band sits inside it.
        """
        grid = chart_cusp.build((5, 13), stencil_order=4)
        active = grid.active_mask()
        self.assertFalse(active[:, :2].any())
        self.assertTrue(active[:, 2:11].all())
        guard = grid.guard_mask()
        self.assertTrue(np.all(active[guard]))
        self.assertTrue(guard[:, 2].all())
        self.assertFalse(guard[:, 6].any())

    def test_field_shape_checked(self):
        """A field whose array does not sample the grid is rejected.
        """
        from einsteinflow.core import GridMismatch
        grid = chart_torus.build((8, 8))
        with self.assertRaises(GridMismatch):
            TensorField(np.zeros((2, 8, 7)), grid)


if __name__ == '__main__':
    unittest.main()
