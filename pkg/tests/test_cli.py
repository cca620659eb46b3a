import contextlib
import io
import os
import shutil
import tempfile
import unittest

import yaml

from einsteinflow.cli import EXIT_CONFIG, EXIT_OK, main
from einsteinflow.flow import load_state
from einsteinflow.output import read_series

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestCli(unittest.TestCase):
    """Subcommands end to end on the test fixtures.
    """

    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_fit(self):
        """The fixture decays like t^-0.9.
        """
        code, out, _ = run_cli('fit', os.path.join(FIXTURES, 'decay.csv'),
                               '--column', 'sigma_H2')
        self.assertEqual(code, EXIT_OK)
        self.assertIn('exponent: -0.9\n', out)
        self.assertIn('delta: 0.1\n', out)
        self.assertIn('samples: 41\n', out)

    def test_fit_window(self):
        """A window restricts the samples.
        """
        code, out, _ = run_cli('fit', os.path.join(FIXTURES, 'decay.csv'),
                               '--column', 'sigma_H2', '--window', '0.49', '2.01')
        self.assertEqual(code, EXIT_OK)
        self.assertIn('samples: 31\n', out)

    def test_fit_unknown_column(self):
        """A missing column is an error.
        """
        code, _, err = run_cli('fit', os.path.join(FIXTURES, 'decay.csv'), '--column', 'E_H2')
        self.assertNotEqual(code, EXIT_OK)
        self.assertIn('E_H2', err)

    def test_bad_config(self):
        """Schema violations exit with the configuration code.
        """
        path = os.path.join(self.directory, 'bad.yaml')
        with open(path, 'w') as f:
            f.write('dimension: 4\nbogus: 1\n')
        for command in ('simulate', 'nonpositivity'):
            with self.subTest(command=command):
                code, _, err = run_cli(command, path)
                self.assertEqual(code, EXIT_CONFIG)
                self.assertIn('error[config_parse]', err)
                self.assertIn('line 2', err)

    def test_nonpositivity(self):
        """The flat torus has no Weyl curvature to be positive.
        """
        code, out, _ = run_cli('nonpositivity', os.path.join(FIXTURES, 'example.yaml'),
                               '--samples', '2')
        self.assertEqual(code, EXIT_OK)
        self.assertIn('nonpositive: true\n', out)
        self.assertIn('samples: 11\n', out)

    def test_plot(self):
        """Norm columns are drawn into the requested directory.
        """
        code, out, _ = run_cli('plot', os.path.join(FIXTURES, 'decay.csv'),
                               '--out', self.directory, '--format', 'svg')
        self.assertEqual(code, EXIT_OK)
        path = os.path.join(self.directory, 'norms.svg')
        self.assertEqual(out.split(), [path])
        self.assertTrue(os.path.exists(path))

    def test_simulate(self):
        """A short torus run writes the manifest, series and summary.
        """
        code, _, _ = run_cli('simulate', os.path.join(FIXTURES, 'example.yaml'),
                             '--out', self.directory)
        self.assertEqual(code, EXIT_OK)
        for name in ('manifest.yaml', 'series.csv', 'summary.yaml'):
            with self.subTest(name=name):
                self.assertTrue(os.path.exists(os.path.join(self.directory, name)))
        series = read_series(os.path.join(self.directory, 'series.csv'))
        self.assertAlmostEqual(series['t'][0], 1.0)
        self.assertAlmostEqual(series['t'][-1], 1.05)
        self.assertIn('sigma_H0', series)

    def test_simulate_resume(self):
        """A run resumed from a checkpoint starts at the checkpoint time and records it.
        """
        with open(os.path.join(FIXTURES, 'example.yaml')) as f:
            text = f.read()
        config = os.path.join(self.directory, 'checkpointed.yaml')
        with open(config, 'w') as f:
            f.write(text + 'checkpoint_every: 1\n')
        first = os.path.join(self.directory, 'first')
        code, _, _ = run_cli('simulate', config, '--out', first)
        self.assertEqual(code, EXIT_OK)
        checkpoint = os.path.join(first, 'checkpoints', 'checkpoint_000001.eft')
        self.assertTrue(os.path.exists(checkpoint))

        second = os.path.join(self.directory, 'second')
        code, _, _ = run_cli('simulate', config, '--resume', checkpoint, '--out', second)
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(second, 'manifest.yaml')) as f:
            manifest = yaml.safe_load(f)
        self.assertEqual(manifest['resumed_from'], checkpoint)
        series = read_series(os.path.join(second, 'series.csv'))
        self.assertAlmostEqual(series['t'][0], load_state(checkpoint).t, places=12)
        self.assertGreater(series['t'][0], 1.0)
        self.assertAlmostEqual(series['t'][-1], 1.05)


if __name__ == '__main__':
    unittest.main()
