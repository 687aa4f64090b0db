"""
Tests for the speed curve and critical speeds.
"""

import math
import unittest

import numpy as np

from jumpsync.dist import DeterministicOne, EmpiricalCdf, ExponentialMeanOne, UniformZeroTwo
from jumpsync.errors import UnboundedSpeed
from jumpsync.speed import (critical, exponential_critical, golden_section, speed_curve,
                            v_of_zeta, zeta_of_v)
from jumpsync.tables import EXPONENTIAL_TABLE, UNIFORM_TABLE


class _NoExponentialMoment(ExponentialMeanOne):
    """Stand-in for a heavy-tailed law: only the tail exponent matters here."""

    @property
    def tail_exponent(self) -> float:
        return 0.0


class TestSpeedCurve(unittest.TestCase):
    """v(zeta) values and shape."""

    def setUp(self):
        self.exp = ExponentialMeanOne()
        self.uniform = UniformZeroTwo()

    def test_examples(self):
        self.assertAlmostEqual(v_of_zeta(self.exp, 1.0, 1.0, 0.5), 4.0, places=12)
        self.assertAlmostEqual(v_of_zeta(self.uniform, 0.45, 0.1, 0.5), 0.846453646, places=8)
        for law in (self.exp, self.uniform, DeterministicOne()):
            with self.subTest(law=law):
                self.assertAlmostEqual(v_of_zeta(law, 0.0, 1.0, 0.25), 4.0, places=12)

    def test_divergent_transform_gives_inf(self):
        self.assertEqual(v_of_zeta(self.exp, 1.0, 1.0, 1.0), math.inf)
        self.assertEqual(v_of_zeta(self.exp, 1.0, 1.0, 3.0), math.inf)

    def test_rejects_nonpositive_zeta(self):
        for zeta in (0.0, -1.0):
            with self.subTest(zeta=zeta):
                with self.assertRaises(ValueError):
                    v_of_zeta(self.exp, 1.0, 1.0, zeta)

    def test_rejects_bad_rates(self):
        with self.assertRaises(ValueError):
            v_of_zeta(self.exp, -1.0, 1.0, 0.5)
        with self.assertRaises(ValueError):
            v_of_zeta(self.exp, 1.0, 0.0, 0.5)

    def test_convexity(self):
        """Midpoint convexity on 100-point grids."""
        cases = [(self.exp, np.linspace(0.01, 0.99, 100)),
                 (self.uniform, np.linspace(0.01, 5.0, 100)),
                 (DeterministicOne(), np.linspace(0.01, 5.0, 100))]
        for law, grid in cases:
            with self.subTest(law=law):
                values = np.array([v_of_zeta(law, 0.7, 0.4, z) for z in grid])
                mids = np.array([v_of_zeta(law, 0.7, 0.4, z)
                                 for z in 0.5 * (grid[:-2] + grid[2:])])
                self.assertTrue(np.all(mids <= 0.5 * (values[:-2] + values[2:]) + 1e-9))

    def test_speed_curve_points(self):
        points = speed_curve(self.exp, 1.0, 1.0, [0.25, 0.5])
        self.assertEqual([p.zeta for p in points], [0.25, 0.5])
        self.assertAlmostEqual(points[1].speed, 4.0)


class TestGoldenSection(unittest.TestCase):

    def test_brackets_minimum(self):
        c, d = golden_section(lambda x: (x - 2.0) ** 2, 0.0, 5.0, tol=1e-8)
        self.assertLessEqual(d - c, 1e-8)
        self.assertLessEqual(c, 2.0 + 1e-8)
        self.assertGreaterEqual(d, 2.0 - 1e-8)

    def test_reversed_interval(self):
        c, d = golden_section(lambda x: abs(x + 1.0), 3.0, -4.0, tol=1e-6)
        self.assertAlmostEqual(0.5 * (c + d), -1.0, places=5)


class TestCriticalSpeed(unittest.TestCase):
    """Minimizer of the speed curve."""

    def test_exponential_table(self):
        """Closed form reproduces every exponential table row."""
        for lam, mu, _, v_star in EXPONENTIAL_TABLE:
            with self.subTest(lam=lam, mu=mu):
                self.assertAlmostEqual(critical(ExponentialMeanOne(), lam, mu).v_star,
                                       v_star, delta=1e-6)

    def test_uniform_table(self):
        """Numeric minimizer reproduces every uniform table row."""
        for lam, mu, _, v_star in UNIFORM_TABLE:
            with self.subTest(lam=lam, mu=mu):
                self.assertAlmostEqual(critical(UniformZeroTwo(), lam, mu).v_star,
                                       v_star, delta=1e-3)

    def test_closed_form_matches_numeric(self):
        law = ExponentialMeanOne()
        for lam, mu in [(1.0, 1.0), (0.45, 0.1), (0.05, 0.9), (4.0, 1.0)]:
            with self.subTest(lam=lam, mu=mu):
                closed = critical(law, lam, mu)
                numeric = critical(law, lam, mu, closed_form=False)
                self.assertAlmostEqual(numeric.v_star / closed.v_star, 1.0, delta=1e-8)
                self.assertAlmostEqual(numeric.zeta_star, closed.zeta_star, delta=1e-5)

    def test_exponential_closed_form(self):
        zeta, v = exponential_critical(1.0, 1.0)
        self.assertEqual((zeta, v), (0.5, 4.0))
        result = critical(ExponentialMeanOne(), 1.0 / 6.0, 2.0 / 3.0)
        self.assertAlmostEqual(result.v_star, 1.5, places=12)

    def test_local_minimality(self):
        laws = [ExponentialMeanOne(), UniformZeroTwo(), DeterministicOne(),
                EmpiricalCdf([[0.0, 0.0], [1.0, 0.4], [1.0, 0.6], [2.0, 1.0]])]
        for law in laws:
            with self.subTest(law=law):
                result = critical(law, 0.3, 0.4)
                self.assertFalse(result.at_tail_boundary)
                for delta in (1e-4, 1e-2):
                    for zeta in (result.zeta_star - delta, result.zeta_star + delta):
                        self.assertGreaterEqual(v_of_zeta(law, 0.3, 0.4, zeta),
                                                result.v_star - 1e-12)

    def test_rescaling(self):
        """v**(lambda, mu) = mu v**(lambda/mu, 1)."""
        rng = np.random.default_rng(11)
        for law in (ExponentialMeanOne(), UniformZeroTwo()):
            for lam, mu in rng.uniform(0.05, 3.0, size=(20, 2)):
                with self.subTest(law=law, lam=lam, mu=mu):
                    direct = critical(law, lam, mu).v_star
                    scaled = mu * critical(law, lam / mu, 1.0).v_star
                    self.assertAlmostEqual(direct / scaled, 1.0, delta=1e-9)

    def test_speed_exceeds_mu_over_alpha(self):
        for lam, mu in [(0.1, 0.9), (1.0, 1.0), (3.0, 0.2)]:
            with self.subTest(lam=lam, mu=mu):
                self.assertGreater(critical(ExponentialMeanOne(), lam, mu).v_star, mu)

    def test_unbounded_speed(self):
        with self.assertRaises(UnboundedSpeed):
            critical(_NoExponentialMoment(), 1.0, 1.0)

    def test_needs_positive_lambda(self):
        with self.assertRaises(ValueError):
            critical(ExponentialMeanOne(), 0.0, 1.0)


class TestInverseBranch(unittest.TestCase):
    """zeta(v) on the decreasing branch."""

    def test_examples(self):
        law = ExponentialMeanOne()
        self.assertAlmostEqual(zeta_of_v(law, 4.0, 1.0, 10.0), 0.2, places=12)
        self.assertAlmostEqual(zeta_of_v(law, 1.0, 1.0, 4.0), 0.5, places=12)

    def test_at_critical_speed(self):
        for law in (ExponentialMeanOne(), UniformZeroTwo()):
            with self.subTest(law=law):
                result = critical(law, 0.3, 0.4)
                self.assertAlmostEqual(zeta_of_v(law, 0.3, 0.4, result.v_star),
                                       result.zeta_star, places=12)

    def test_rejects_subcritical_speed(self):
        with self.assertRaises(ValueError):
            zeta_of_v(ExponentialMeanOne(), 1.0, 1.0, 3.9)

    def test_round_trip(self):
        """zeta(v(zeta)) = zeta away from the minimum."""
        for law in (ExponentialMeanOne(), UniformZeroTwo()):
            zeta_star = critical(law, 0.3, 0.4).zeta_star
            for zeta in np.linspace(0.05, 0.9, 8) * zeta_star:
                with self.subTest(law=law, zeta=zeta):
                    v = v_of_zeta(law, 0.3, 0.4, zeta)
                    self.assertAlmostEqual(zeta_of_v(law, 0.3, 0.4, v), zeta, delta=1e-9)

    def test_mu_scaling(self):
        """The exponential closed form honours mu != 1."""
        law = ExponentialMeanOne()
        self.assertAlmostEqual(zeta_of_v(law, 8.0, 2.0, 20.0), 0.2, places=12)


if __name__ == '__main__':
    unittest.main()
