import math
import unittest

import yaml

from einsteinflow.oracle import (ALGEBRAIC_CASES, DIFFERENTIAL_CASES, EXACT_CASES, OracleCase,
                                 OracleReport, convergence_order, merge, run_algebraic_suite,
                                 run_differential_suite)


class TestAlgebraicSuite(unittest.TestCase):
    """Pointwise identities on random and exact data.
    """

    @classmethod
    def setUpClass(cls):
        cls.report = run_algebraic_suite(seed=0, points=10)

    def test_every_case_passes(self):
        """No algebraic identity fails.
        """
        for case in self.report.cases:
            with self.subTest(case=case.name):
                self.assertTrue(case.passed, msg='{} measured {}'.format(case.name,
                                                                         case.measured))
        self.assertTrue(self.report.passed)

    def test_exact_cases_included(self):
        """The exact cases follow the floating-point ones.
        """
        self.assertEqual(len(self.report.cases), len(ALGEBRAIC_CASES) + len(EXACT_CASES))
        for case in self.report.cases[len(ALGEBRAIC_CASES):]:
            with self.subTest(case=case.name):
                self.assertEqual(case.measured['nonzero_entries'], 0)

    def test_seeds_are_reproducible(self):
        """The same seed measures the same residuals.
        """
        again = run_algebraic_suite(seed=0, points=10, exact=False)
        for first, second in zip(self.report.cases, again.cases):
            self.assertEqual(first.measured, second.measured)


class TestDifferentialSuite(unittest.TestCase):
    """Convergence of discrete identities.
    """

    def test_selected_cases(self):
        """An order case and an exact case both pass.
        """
        names = ['derivative_periodic', 'flat_laplacian_commutator']
        report = run_differential_suite(seed=0, stencil_order=4, cases=names)
        self.assertEqual([case.name for case in report.cases], names)
        for case in report.cases:
            with self.subTest(case=case.name):
                self.assertTrue(case.passed, msg='measured {}'.format(case.measured))
        self.assertGreater(report.cases[0].measured['order'], 3.5)

    def test_every_case_passes(self):
        """Each differential identity converges or sits below its floor.
        """
        for name, _, _, _, _ in DIFFERENTIAL_CASES:
            with self.subTest(case=name):
                report = run_differential_suite(seed=0, stencil_order=4, cases=[name])
                self.assertEqual(len(report.cases), 1)
                case = report.cases[0]
                self.assertTrue(case.passed, msg='measured {}'.format(case.measured))

    def test_convergence_order(self):
        """Halving h with a 16-fold drop is order 4.
        """
        self.assertAlmostEqual(convergence_order(1.6e-3, 1e-4), 4.0)
        self.assertEqual(convergence_order(1e-3, 0.0), math.inf)
        self.assertEqual(convergence_order(0.0, 1e-3), 0.0)


class TestReport(unittest.TestCase):
    """Rendering of oracle reports.
    """

    def test_render(self):
        """The YAML report carries coverage and the pass flag.
        """
        first = OracleReport('algebraic', 3, [
            OracleCase('a', 'identity one', 'recipe', 'exact', 3, {'relative_residual': 1e-15},
                       True)])
        second = OracleReport('differential', 3, [
            OracleCase('b', 'identity two', 'recipe', 'O(h^4)', 4, {'order': math.inf}, False)],
            stencil_order=4)
        report = merge(first, second)
        text = report.render()
        self.assertIn('coverage', text)
        document = yaml.safe_load(text)
        self.assertEqual(document['suite'], 'algebraic+differential')
        self.assertEqual(document['coverage'], ['identity one', 'identity two'])
        self.assertFalse(document['passed'])
        self.assertEqual(document['stencil_order'], 4)
        self.assertEqual(document['cases'][1]['measured']['order'], 'inf')
        self.assertEqual([case.name for case in report.failures()], ['b'])


if __name__ == '__main__':
    unittest.main()
