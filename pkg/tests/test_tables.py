"""
Tests for reference-table reproduction.
"""

import unittest

from jumpsync.dist import ExponentialMeanOne, UniformZeroTwo
from jumpsync.tables import EXPONENTIAL_TABLE, UNIFORM_TABLE, reproduce_table, table_law


class TestReferenceTables(unittest.TestCase):

    def test_budget_line(self):
        """Every listed pair spends the budget 2 lambda + mu = 1."""
        for rows in (EXPONENTIAL_TABLE, UNIFORM_TABLE):
            for lam, mu, v_n, v_star in rows:
                with self.subTest(lam=lam, mu=mu):
                    self.assertAlmostEqual(2 * lam + mu, 1.0, places=12)
                    self.assertLess(v_n, v_star)

    def test_table_law(self):
        self.assertIsInstance(table_law(1), ExponentialMeanOne)
        self.assertIsInstance(table_law(2), UniformZeroTwo)
        with self.assertRaises(ValueError):
            table_law(3)


class TestReproduceTable(unittest.TestCase):
    """Small-n reproduction runs."""

    def setUp(self):
        self.kwargs = dict(n=20, seed=5, jumps_per_particle=40)

    def test_rows_in_table_order(self):
        rows = reproduce_table(1, workers=1, **self.kwargs)
        self.assertEqual(len(rows), len(EXPONENTIAL_TABLE))
        for row, (lam, mu, v_n, v_star) in zip(rows, EXPONENTIAL_TABLE):
            self.assertEqual((row.lambda_, row.mu), (lam, mu))
            self.assertEqual(row.v_n_reference, v_n)
            self.assertAlmostEqual(row.v_star_star, v_star, delta=1e-6)
            self.assertGreater(row.v_n_stderr, 0.0)

    def test_independent_of_worker_count(self):
        serial = reproduce_table(2, workers=1, **self.kwargs)
        parallel = reproduce_table(2, workers=2, **self.kwargs)
        self.assertEqual([r.v_n_sim for r in serial], [r.v_n_sim for r in parallel])

    def test_seed_changes_result(self):
        a = reproduce_table(1, workers=1, **self.kwargs)
        b = reproduce_table(1, workers=1, n=20, seed=6, jumps_per_particle=40)
        self.assertNotEqual([r.v_n_sim for r in a], [r.v_n_sim for r in b])


if __name__ == '__main__':
    unittest.main()
