import os
import unittest

from einsteinflow.config import RunConfig, dump_config, load_config, parse_config
from einsteinflow.core import ConfigParse
from einsteinflow.flow import Formulation

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


class TestDefaults(unittest.TestCase):
    """An empty document is a complete configuration.
    """

    def test_empty_document(self):
        """Defaults: a four-dimensional cusp with the W sector on.
        """
        config = parse_config('')
        self.assertIsInstance(config, RunConfig)
        self.assertEqual(config.dimension, 4)
        self.assertEqual(config.chart.kind, 'cusp')
        self.assertEqual(config.chart.extent, (12, 12, 12, 24))
        self.assertTrue(config.w_sector)
        self.assertEqual(config.integrator().formulation, Formulation.FIRST_ORDER)

    def test_dimension_three(self):
        """Dimension 3 turns the W sector off and builds three axes.
        """
        config = parse_config('dimension: 3\n')
        self.assertFalse(config.w_sector)
        self.assertEqual(len(config.chart.extent), 3)
        self.assertEqual(config.chart.build().dim, 3)

    def test_dump_round_trip(self):
        """A dumped configuration parses back to the same values.
        """
        config = load_config(os.path.join(FIXTURES, 'example.yaml'))
        self.assertEqual(parse_config(dump_config(config)), config)


class TestRejections(unittest.TestCase):
    """Schema violations carry the line and the key.
    """

    def test_unknown_key(self):
        """A misspelt top-level key is reported on its line.
        """
        with self.assertRaises(ConfigParse) as context:
            parse_config('dimension: 4\nbogus: 1\n')
        self.assertEqual(context.exception.line, 2)
        self.assertEqual(context.exception.key, 'bogus')
        self.assertIn('line 2', str(context.exception))

    def test_unknown_nested_key(self):
        """Nested keys are reported with their dotted path.
        """
        text = 'chart:\n  kind: cusp\n  colour: red\n'
        with self.assertRaises(ConfigParse) as context:
            parse_config(text)
        self.assertEqual(context.exception.line, 3)
        self.assertEqual(context.exception.key, 'chart.colour')

    def test_invalid_values(self):
        """Values outside their ranges are refused.
        """
        cases = [
            ('perturbation:\n  amplitude: 0.5\n', 'perturbation.amplitude'),
            ('dimension: 3\nw_sector: true\n', 'w_sector'),
            ('chart:\n  extent: [8, 8, 16]\n', 'chart.extent'),
            ('dimension: 2\n', 'dimension'),
            ('chart:\n  stencil_order: 3\n', 'chart.stencil_order'),
            ('chart:\n  kind: sphere\n', 'chart.kind'),
            ('formulation: implicit\n', 'formulation'),
            ('dimension: 3\nw_sector: false\nmagnetic_transport: weyl\n',
             'magnetic_transport'),
            ('perturbation:\n  mode: noise\n', 'perturbation.mode'),
            ('t_start: 0.5\n', 't_start'),
            ('t_end: 1.0\n', 't_end'),
            ('cfl: 1.5\n', 'cfl'),
            ('dimension: four\n', 'dimension'),
        ]
        for text, key in cases:
            with self.subTest(text=text):
                with self.assertRaises(ConfigParse) as context:
                    parse_config(text)
                self.assertEqual(context.exception.key, key)

    def test_malformed_yaml(self):
        """Broken YAML is a parse error, not a crash.
        """
        with self.assertRaises(ConfigParse):
            parse_config('chart: [unclosed\n')


class TestFixture(unittest.TestCase):
    """The example configuration shipped with the tests.
    """

    def test_load(self):
        """The torus fixture loads with its own values.
        """
        config = load_config(os.path.join(FIXTURES, 'example.yaml'))
        self.assertEqual(config.chart.kind, 'torus')
        self.assertEqual(config.chart.extent, (5, 5, 5, 5))
        self.assertEqual(config.perturbation.mode, 'fourier')
        self.assertEqual(config.perturbation.seed, 7)
        self.assertEqual(config.nonpositivity_samples, 2)
        integrator = config.integrator()
        self.assertEqual(integrator.t_end, 1.05)
        self.assertEqual(integrator.cfl, 0.2)


if __name__ == '__main__':
    unittest.main()
