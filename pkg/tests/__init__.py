import unittest
import einsteinflow
from einsteinflow import chart_cusp, chart_torus
from einsteinflow.core import ConfigParse, EinsteinFlowException, ValidatorBlowup


class TestPackage(unittest.TestCase):
    """Chart lookup and the exception tree.
    """

    def test_chart_lookup(self):
        """Chart names resolve with a fallback to their last word.
        """
        try:
            einsteinflow.chart_module('sphere')
            assert False, "exception not raised for an unknown chart"
        except NotImplementedError:
            pass

        for kind, module in (('cusp', chart_cusp), ('hyperbolic_cusp', chart_cusp),
                             ('torus', chart_torus), ('periodic_torus', chart_torus)):
            assert einsteinflow.chart_module(kind) is module, \
                "wrong chart for: {0}".format(kind)

        grid = einsteinflow.build_chart('cusp', (5, 5, 9), stencil_order=2)
        assert grid.truncated_axes, "cusp chart without a truncated axis"

    def test_failure(self):
        """Every error carries a reason code; config errors carry their position.
        """
        error = ConfigParse('unknown key', 4, 'chart.colour')
        self.assertIsInstance(error, EinsteinFlowException)
        self.assertEqual((error.line, error.key), (4, 'chart.colour'))
        self.assertEqual(str(error), "unknown key (line 4, key 'chart.colour')")

        blowup = ValidatorBlowup('non-finite values', trajectory=[])
        self.assertEqual(blowup.reason, 'validator_blowup')
        self.assertEqual(blowup.trajectory, [])


if __name__ == '__main__':
    unittest.main()
