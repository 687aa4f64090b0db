"""
Tests for the mean-field dynamics on a grid.
"""

import math
import os
import tempfile
import unittest

import numpy as np
from scipy.special import expit

from jumpsync.brw import leading_cdf
from jumpsync.dist import ExponentialMeanOne, UniformZeroTwo
from jumpsync.errors import MassLeak
from jumpsync.io_utils import GRID_COLUMNS, write_csv
from jumpsync.mfl import (GridCdf, RecenterPolicy, avg_speed, bmfl, freeze_transform,
                          frozen_lower_bound, integrate, quantile, rhs, wave_grid)
from jumpsync.models import BoundarySpec
from jumpsync.speed import critical, v_of_zeta
from jumpsync.tws import logistic_tws, tws_original, wave_profile
from tests import SLOW


class TestGridCdf(unittest.TestCase):
    """Construction and validation of grid states."""

    def test_dirac(self):
        f = GridCdf.dirac(-1.0, 1.0, 0.5)
        np.testing.assert_array_equal(f.x, [-1.0, -0.5, 0.0, 0.5, 1.0])
        np.testing.assert_array_equal(f.values, [0.0, 0.0, 1.0, 1.0, 1.0])
        f.check()
        with self.assertRaises(ValueError):
            GridCdf.dirac(-1.0, 1.0, 0.5, at=3.0)

    def test_check_rejects_invalid_states(self):
        bad = [[0.0, 0.6, 0.5, 1.0], [0.0, 0.5, 1.2], [0.0, 0.5, 0.9], [0.0, math.nan, 1.0]]
        for values in bad:
            with self.subTest(values=values):
                with self.assertRaises(ValueError):
                    GridCdf(0.0, 1.0, values).check()

    def test_rejects_bad_geometry(self):
        with self.assertRaises(ValueError):
            GridCdf(0.0, 0.0, [0.0, 1.0])
        with self.assertRaises(ValueError):
            GridCdf(0.0, 1.0, [1.0])

    def test_value_at_outside_grid(self):
        f = GridCdf(0.0, 1.0, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(f.value_at([-3.0, 0.5, 1.5, 9.0]), [0.0, 0.25, 0.75, 1.0])

    def test_exponential_tail(self):
        f = GridCdf.exponential_tail(0.5, -2.0, 60.0, 0.5)
        self.assertEqual(f.values[0], 0.0)
        self.assertAlmostEqual(f.value_at(2.0), 1.0 - math.exp(-1.0), places=12)
        f.check()

    def test_from_samples_resamples(self):
        f = GridCdf.from_samples([0.0, 1.0, 4.0], [0.0, 0.5, 1.0], h=0.5)
        self.assertEqual(f.n, 9)
        self.assertAlmostEqual(f.value_at(2.5), 0.75)
        with self.assertRaises(ValueError):
            GridCdf.from_samples([0.0, 0.0], [0.0, 1.0])

    def test_from_csv(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            path = os.path.join(temp_dir, "grid.csv")
            write_csv(path, GRID_COLUMNS, [(x, min(max(x, 0.0), 1.0)) for x in np.linspace(-1, 2, 13)])
            f = GridCdf.from_csv(path)
            self.assertAlmostEqual(f.h, 0.25)
            self.assertAlmostEqual(f.value_at(0.5), 0.5)


class TestRhs(unittest.TestCase):
    """The right-hand side of the dynamics."""

    def test_sign_and_range(self):
        for law in (ExponentialMeanOne(), UniformZeroTwo()):
            f = GridCdf.exponential_tail(0.5, -5.0, 60.0, 0.02)
            with self.subTest(law=law):
                out = rhs(f, law, 1.0, 1.0)
                self.assertTrue(np.all(out <= 1e-12))
                self.assertTrue(np.all(out >= -2.0 - 1e-9))

    def test_pure_synchronization(self):
        f = GridCdf.exponential_tail(0.5, -5.0, 60.0, 0.1)
        np.testing.assert_allclose(rhs(f, ExponentialMeanOne(), 0.0, 2.0),
                                   -2.0 * f.values * (1.0 - f.values))

    def test_step_jump_flux(self):
        """From a step at 0 the flux is lambda (1 - J) up to cell averaging."""
        h = 0.01
        f = GridCdf.dirac(-1.0, 30.0, h)
        out = rhs(f, ExponentialMeanOne(), 1.0, 0.0)
        ahead = f.values > 0
        distance = f.x[ahead] - f.x[ahead][0]
        expected = -(-np.expm1(-h) / h) * np.exp(-distance)
        np.testing.assert_allclose(out[ahead], expected, rtol=1e-9, atol=1e-15)
        self.assertTrue(np.all(out[~ahead] == 0.0))

    def test_right_boundary_freezes_nodes(self):
        f = GridCdf.exponential_tail(0.5, -5.0, 60.0, 0.5)
        out = rhs(f, ExponentialMeanOne(), 1.0, 1.0, BoundarySpec.fixed_right(3.0))
        self.assertTrue(np.all(out[f.x >= 3.0] == 0.0))
        self.assertTrue(np.all(out[(f.x > 0) & (f.x < 3.0)] < 0.0))


class TestQuantile(unittest.TestCase):

    def test_dirac_quantile_within_one_cell(self):
        h = 0.02
        f = GridCdf.dirac(-1.0, 1.0, h)
        for nu in (0.01, 0.5, 0.99):
            with self.subTest(nu=nu):
                self.assertLessEqual(abs(quantile(f, nu)), h)

    def test_interpolates(self):
        f = GridCdf(0.0, 1.0, [0.0, 0.2, 0.6, 1.0])
        self.assertAlmostEqual(quantile(f, 0.4), 1.5)
        self.assertAlmostEqual(quantile(f, 0.6), 2.0)

    def test_rejects_levels(self):
        for nu in (0.0, 1.0):
            with self.subTest(nu=nu):
                with self.assertRaises(ValueError):
                    quantile(GridCdf.dirac(-1.0, 1.0, 0.5), nu)


class TestIntegrate(unittest.TestCase):
    """Time stepping, projections and boundaries."""

    def setUp(self):
        self.law = ExponentialMeanOne()

    def test_rejects_large_step(self):
        with self.assertRaises(ValueError):
            integrate(GridCdf.dirac(-1.0, 20.0, 0.1), self.law, 1.0, 1.0, dt=0.25)

    def test_short_grid_leaks_mass(self):
        with self.assertRaises(MassLeak):
            integrate(GridCdf.dirac(-1.0, 2.0, 0.02), self.law, 1.0, 1.0, t_end=2.0)

    def test_step_is_stationary_without_jumps(self):
        f0 = GridCdf.dirac(-1.0, 1.0, 0.02)
        traj = integrate(f0, self.law, 0.0, 1.0, t_end=2.0)
        np.testing.assert_array_equal(traj.final.values, f0.values)
        self.assertAlmostEqual(traj.final.time, 2.0)

    def test_logistic_wave_is_rigid(self):
        """At lambda = 0 the logistic profile translates at speed v."""
        v = 2.0
        wave = logistic_tws(v)
        f0 = wave_grid(lambda x: wave_profile(wave, x), -80.0, 120.0, 0.05)
        traj = integrate(f0, self.law, 0.0, 1.0, t_end=5.0, dt=0.01)
        expected = expit((traj.final.x - v * 5.0) / v)
        self.assertLess(np.max(np.abs(traj.final.values - expected)), 1e-3)

    def test_exponential_wave_is_rigid(self):
        """A wave above v** keeps its shape while moving at v."""
        v, t_end = 5.0, 4.0
        wave = tws_original(1.0, 1.0, v)
        f0 = wave_grid(lambda x: wave_profile(wave, x), -100.0, 100.0, 0.02)
        traj = integrate(f0, self.law, 1.0, 1.0, t_end=t_end, dt=0.01, track=(0.5,))
        expected = wave_profile(wave, traj.final.x - v * t_end)
        self.assertLess(np.max(np.abs(traj.final.values - expected)), 5e-3)
        self.assertAlmostEqual(avg_speed(traj, 0.5, (0.0, t_end)), v, delta=0.05)

    def test_comparison_principle(self):
        """Ordered initial states stay ordered."""
        rng = np.random.default_rng(23)
        for k in range(20):
            zeta_low, zeta_up = np.sort(rng.uniform(0.3, 1.5, 2))
            shift = rng.uniform(0.0, 3.0)
            lower = GridCdf.from_function(
                lambda x: np.where(x >= shift, -np.expm1(-zeta_low * (x - shift)), 0.0),
                -5.0, 100.0, 0.05)
            upper = GridCdf.exponential_tail(zeta_up, -5.0, 100.0, 0.05)
            with self.subTest(pair=k):
                self.assertTrue(np.all(lower.values <= upper.values))
                a = integrate(lower, self.law, 1.0, 1.0, t_end=1.0, dt=0.01)
                b = integrate(upper, self.law, 1.0, 1.0, t_end=1.0, dt=0.01)
                self.assertTrue(np.all(a.final.values <= b.final.values + 1e-9))

    def test_fixed_boundary_collects_mass(self):
        traj = integrate(GridCdf.dirac(-5.0, 10.0, 0.02), self.law, 1.0, 1.0,
                         boundary=BoundarySpec.fixed_right(3.0), t_end=20.0, dt=0.01)
        self.assertTrue(np.all(traj.final.values[traj.final.x >= 3.0] == 1.0))
        median = quantile(traj.final, 0.5)
        self.assertLessEqual(median, 3.0 + 0.02)
        self.assertGreater(median, 2.5)

    def test_moving_left_boundary_pushes_front(self):
        """A left boundary faster than v** sets the speed."""
        traj = integrate(GridCdf.dirac(-5.0, 100.0, 0.02), self.law, 1.0, 1.0,
                         boundary=BoundarySpec.moving_left(0.0, 5.0), t_end=6.0, dt=0.01)
        self.assertAlmostEqual(avg_speed(traj, 0.5, (3.0, 6.0)), 5.0, delta=0.5)

    def test_values_fall_slowly_at_every_node(self):
        """Each step lowers f pointwise, by at most (lambda + mu) dt."""
        lam, mu, dt = 1.0, 1.0, 0.01
        starts = {"dirac": GridCdf.dirac(-5.0, 40.0, 0.02),
                  "exp-tail": GridCdf.exponential_tail(0.5, -5.0, 80.0, 0.02)}
        for law in (self.law, UniformZeroTwo()):
            for name, f0 in starts.items():
                with self.subTest(law=law, start=name):
                    traj = integrate(f0, law, lam, mu, t_end=1.0, dt=dt,
                                     snapshot_times=np.arange(101) * dt)
                    self.assertEqual(len(traj.snapshots), 101)
                    frames = np.array([s.values for s in traj.snapshots])
                    steps = np.diff(frames, axis=0)
                    self.assertLessEqual(np.max(steps), 1e-12)
                    self.assertLessEqual(np.max(np.abs(steps)), (lam + mu) * dt)

    def test_snapshots_and_series(self):
        traj = integrate(GridCdf.dirac(-5.0, 40.0, 0.05), self.law, 1.0, 1.0, t_end=1.0,
                         dt=0.01, snapshot_times=[0.0, 0.5, 1.0], track=(0.1, 0.9))
        self.assertEqual(len(traj.snapshots), 3)
        self.assertAlmostEqual(traj.snapshots[1].time, 0.5)
        self.assertEqual(len(traj.times), 101)
        _, low = traj.quantile_series(0.1)
        _, high = traj.quantile_series(0.9)
        self.assertTrue(np.all(low <= high))
        with self.assertRaises(ValueError):
            traj.quantile_series(0.5)
        with self.assertRaises(ValueError):
            avg_speed(traj, 0.1, (0.5, 2.0))

    def test_recentering_matches_wide_window(self):
        policy = RecenterPolicy(nu=0.5, trigger=0.3, shift_fraction=0.1)
        narrow = integrate(GridCdf.dirac(-5.0, 55.0, 0.02), self.law, 1.0, 1.0,
                           t_end=8.0, recenter=policy)
        wide = integrate(GridCdf.dirac(-5.0, 90.0, 0.02), self.law, 1.0, 1.0, t_end=8.0)
        self.assertGreater(narrow.final.offset, 0.0)
        self.assertAlmostEqual(quantile(narrow.final, 0.5), quantile(wide.final, 0.5), delta=0.01)


class TestFrozenBound(unittest.TestCase):
    """Freezing part of the mass slows the front down."""

    def setUp(self):
        self.law = ExponentialMeanOne()

    def test_freeze_transform(self):
        f = GridCdf(0.0, 1.0, [0.0, 0.5, 1.0])
        np.testing.assert_allclose(freeze_transform(f, 0.2).values, [0.2, 0.6, 1.0])
        np.testing.assert_array_equal(f.values, [0.0, 0.5, 1.0])
        with self.assertRaises(ValueError):
            freeze_transform(f, 1.0)

    def test_lags_the_free_front(self):
        f0 = GridCdf.dirac(-5.0, 40.0, 0.02)
        free = integrate(f0, self.law, 1.0, 1.0, t_end=4.0, track=(0.5, 0.9))
        frozen = frozen_lower_bound(f0, self.law, 1.0, 1.0, 0.3, t_end=4.0, track=(0.5, 0.9))
        for beta in (0.5, 0.9):
            with self.subTest(beta=beta):
                _, q_free = free.quantile_series(beta)
                _, q_frozen = frozen.quantile_series(beta)
                self.assertTrue(np.all(q_frozen <= q_free + 0.02))
        self.assertTrue(np.all(frozen.final.values >= 0.3))

    def test_rejects_low_levels(self):
        with self.assertRaises(ValueError):
            frozen_lower_bound(GridCdf.dirac(-1.0, 20.0, 0.1), self.law, 1.0, 1.0, 0.5,
                               t_end=1.0, track=(0.4,))


@unittest.skipUnless(SLOW, "acceptance-scale run; set JUMPSYNC_SLOW_TESTS=1")
class TestFrontSpeeds(unittest.TestCase):
    """Long integrations against the speed curve and the branching walk."""

    def setUp(self):
        self.law = ExponentialMeanOne()

    def test_benchmark_speed_below_critical(self):
        """The median of the benchmark front approaches v** from below."""
        h = 0.02
        traj = bmfl(self.law, 1.0, 1.0, t_end=40.0, h=h)
        v_star = critical(self.law, 1.0, 1.0).v_star
        speed = avg_speed(traj, 0.5, (20.0, 40.0))
        self.assertGreaterEqual(speed, 3.5)
        self.assertLessEqual(speed, 4.02)
        windows = [avg_speed(traj, 0.5, w) for w in ((10.0, 20.0), (20.0, 30.0), (30.0, 40.0))]
        for earlier, later in zip(windows, windows[1:]):
            self.assertLessEqual(earlier, later + 1e-9)
        self.assertLessEqual(max(windows), v_star + h / 10.0)

    def test_slow_tail_sets_speed(self):
        """An initial tail exp(-x/4) is slower than exp(-x/2) and moves at v(1/4)."""
        f0 = GridCdf.exponential_tail(0.25, -10.0, 130.0, 0.05)
        traj = integrate(f0, self.law, 1.0, 1.0, t_end=6.0, dt=0.01)
        expected = v_of_zeta(self.law, 1.0, 1.0, 0.25)
        self.assertAlmostEqual(avg_speed(traj, 0.5, (3.0, 6.0)) / expected, 1.0, delta=0.10)

    def test_critical_tail_runs_near_critical_speed(self):
        """An initial tail exp(-x/2) sits at zeta** and moves like the step start."""
        f0 = GridCdf.exponential_tail(0.5, -5.0, 200.0, 0.02)
        traj = integrate(f0, self.law, 1.0, 1.0, t_end=40.0, dt=0.01)
        speed = avg_speed(traj, 0.5, (20.0, 40.0))
        self.assertGreaterEqual(speed, 3.5)
        self.assertLessEqual(speed, 4.02)

    def test_benchmark_matches_leading_particle(self):
        """The benchmark CDF is the law of the leading walker."""
        t = 2.0
        traj = bmfl(self.law, 1.0, 1.0, t_end=t)
        grid = np.linspace(-1.0, 15.0, 81)
        mc = leading_cdf(self.law, 1.0, 1.0, t, 100_000, grid, seed=3)
        self.assertLess(np.max(np.abs(traj.final.value_at(grid) - mc.values)), 0.02)


if __name__ == '__main__':
    unittest.main()
