"""
Unit tests for interferer fields, pathloss and shot-noise interference.
"""
import math
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from femtonet.errors import DomainError
from femtonet.models import PathlossParams, SystemParams
from femtonet.services.geometry import (
    InterfererField,
    campbell_mean_interference,
    density_for_count,
    dump_field_csv,
    empirical_laplace,
    empirical_void_fraction,
    estimate_rho_bar,
    interference_power,
    interference_power_batch,
    link_budget,
    noise_to_signal,
    pathloss_ratio,
    rho_bar_from_mean,
    sample_ppp_annulus_batch,
    sample_ppp_disc,
    void_probability,
)


class TestSampling(unittest.TestCase):
    """Test cases for Poisson interferer fields."""

    def setUp(self):
        """Set up a generator and the 95-femtocell reference density."""
        self.rng = np.random.default_rng(17)
        self.density = density_for_count(95, 1000.0)

    def test_zero_density_gives_empty_field(self):
        """Test that zero density yields no interferers and no interference."""
        # Act
        field = sample_ppp_disc(0.0, 1000.0, 1.0, self.rng)

        # Assert
        self.assertEqual(field.size, 0)
        self.assertEqual(interference_power(field, 3.8), 0.0)

    def test_points_stay_in_annulus(self):
        """Test that interferers fall between the exclusion radius and the cell edge."""
        # Act
        field = sample_ppp_disc(self.density, 1000.0, 1.0, self.rng)

        # Assert
        self.assertTrue(np.all((field.distances > 1.0 - 1e-9) & (field.distances <= 1000.0 + 1e-9)))
        self.assertTrue(np.all(field.fading_marks >= 0))

    def test_poisson_count_statistics(self):
        """Test that interferer counts have equal mean and variance of 95."""
        # Act
        batch = sample_ppp_annulus_batch(10000, self.density, 1000.0, 1.0, self.rng)

        # Assert
        self.assertAlmostEqual(float(batch.counts.mean()), 95.0, delta=1.0)
        self.assertAlmostEqual(float(batch.counts.var()) / float(batch.counts.mean()), 1.0, delta=0.05)
        self.assertEqual(batch.n_trials, 10000)

    def test_void_probability(self):
        """Test that an annulus holding one expected point is empty with probability 1/e."""
        # Arrange
        area = math.pi * (100.0 ** 2 - 1.0)
        density = 1.0 / area

        # Act
        expected = void_probability(density, area)
        fraction = empirical_void_fraction(density, 1000.0, 100.0, 10000, self.rng)

        # Assert
        self.assertAlmostEqual(expected, math.exp(-1.0), places=12)
        self.assertAlmostEqual(fraction, expected, delta=0.02)

    def test_invalid_geometry(self):
        """Test that negative density and an exclusion radius beyond the cell are rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            sample_ppp_disc(-1.0, 1000.0, 1.0, self.rng)
        with self.assertRaises(DomainError):
            sample_ppp_disc(1e-5, 1.0, 2.0, self.rng)

    def test_field_validation(self):
        """Test that mismatched marks and negative marks are rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            InterfererField(positions=np.zeros((2, 2)), fading_marks=np.ones(3))
        with self.assertRaises(DomainError):
            InterfererField(positions=np.ones((1, 2)), fading_marks=-np.ones(1))


class TestPathloss(unittest.TestCase):
    """Test cases for the pathloss ratio and SNR helpers."""

    def test_equal_gains_without_wall(self):
        """Test that Q_D is 1 at unit distance without wall loss."""
        # Arrange
        p = PathlossParams(wall_loss_db=0.0)

        # Act & Assert
        self.assertAlmostEqual(pathloss_ratio(1.0, p), 1.0, places=12)

    def test_doubling_distance(self):
        """Test that doubling the distance scales Q_D by 2^alpha_m."""
        # Arrange
        p = PathlossParams()

        # Act
        ratio = pathloss_ratio(200.0, p) / pathloss_ratio(100.0, p)

        # Assert
        self.assertAlmostEqual(ratio, 2 ** 3.8, places=9)

    def test_reference_value(self):
        """Test Q_D at 100 m with the default 5 dB wall loss."""
        # Act
        value = pathloss_ratio(100.0, PathlossParams())

        # Assert
        self.assertAlmostEqual(value, 1.256e7, delta=0.01 * value)

    def test_non_positive_distance(self):
        """Test that a zero distance is rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            pathloss_ratio(0.0, PathlossParams())

    def test_cell_edge_snr(self):
        """Test that the cell edge has unit noise-to-signal ratio."""
        # Arrange
        p = SystemParams(user_distance=1000.0)

        # Act & Assert
        self.assertAlmostEqual(noise_to_signal(p), 1.0, places=9)


class TestInterference(unittest.TestCase):
    """Test cases for aggregate interference and rho_bar."""

    def test_single_interferer(self):
        """Test the interference of a single interferer at distances 1 and 2."""
        # Arrange
        near = InterfererField(positions=[[1.0, 0.0]], fading_marks=[1.0])
        far = InterfererField(positions=[[0.0, 2.0]], fading_marks=[1.0])

        # Act & Assert
        self.assertEqual(interference_power(near, 4.0), 1.0)
        self.assertAlmostEqual(interference_power(far, 4.0), 1 / 16, places=15)
        self.assertAlmostEqual(rho_bar_from_mean(1 / 16, 8.0), 2.0, places=12)

    def test_adding_interferer_increases_power(self):
        """Test that adding an interferer raises the interference."""
        # Arrange
        field = InterfererField(positions=[[3.0, 4.0]], fading_marks=[0.5])
        more = InterfererField(positions=[[3.0, 4.0], [10.0, 0.0]], fading_marks=[0.5, 0.1])

        # Act & Assert
        self.assertGreater(interference_power(more, 3.8), interference_power(field, 3.8))

    def test_scale_equivariance(self):
        """Test that scaling every position by 3 scales the interference by 3^-alpha_f."""
        # Arrange
        rng = np.random.default_rng(4)
        field = sample_ppp_disc(1e-3, 100.0, 1.0, rng)
        scaled = InterfererField(positions=field.positions * 3.0, fading_marks=field.fading_marks)

        # Act
        ratio = interference_power(scaled, 3.8) / interference_power(field, 3.8)

        # Assert
        self.assertAlmostEqual(ratio, 3.0 ** -3.8, places=12)

    def test_batch_matches_per_trial_sum(self):
        """Test that batch interference equals the per-trial sums."""
        # Arrange
        rng = np.random.default_rng(6)
        batch = sample_ppp_annulus_batch(50, 1e-4, 300.0, 1.0, rng)

        # Act
        totals = interference_power_batch(batch, 3.8)

        # Assert
        start = 0
        for trial, count in enumerate(batch.counts):
            chunk = slice(start, start + count)
            expected = np.sum(batch.fading_marks[chunk] * batch.distances[chunk] ** -3.8)
            self.assertAlmostEqual(totals[trial], expected, places=12)
            start += count

    def test_campbell_matches_monte_carlo(self):
        """Test that the Monte Carlo mean interference matches Campbell's theorem."""
        # Arrange
        # A larger exclusion radius keeps the per-trial variance moderate
        p = SystemParams(pathloss=PathlossParams(d_min=50.0))

        # Act
        estimate = estimate_rho_bar(p, 40000, np.random.default_rng(12))

        # Assert
        self.assertAlmostEqual(estimate.mean_interference / estimate.mean_interference_campbell, 1.0, delta=0.05)

    def test_no_femtocells(self):
        """Test that an empty network falls back to the noise-limited rho_bar."""
        # Arrange
        p = SystemParams(density=0.0)

        # Act
        estimate = estimate_rho_bar(p, 10, np.random.default_rng(0))

        # Assert
        self.assertTrue(estimate.interference_free)
        self.assertAlmostEqual(estimate.rho_bar, 1.0 / noise_to_signal(p), places=6)
        self.assertTrue(link_budget(p).interference_free)

    def test_campbell_closed_form(self):
        """Test the Campbell mean on an annulus from 1 to 10 with alpha_f = 4."""
        # Act
        value = campbell_mean_interference(1e-3, 4.0, 1.0, 10.0)

        # Assert
        self.assertAlmostEqual(value, 2 * math.pi * 1e-3 * (1 - 0.01) / 2, places=15)


class TestLaplace(unittest.TestCase):
    """Test cases for the empirical interference Laplace transform."""

    def test_matches_closed_form(self):
        """Test that the empirical transform matches exp(-lambda C_f sqrt(theta)) for alpha_f = 4."""
        # Arrange
        rng = np.random.default_rng(31)
        density = 0.01
        c_f = math.pi ** 2 / 2

        for theta in (0.1, 1.0, 10.0):
            # Act
            expected = math.exp(-density * c_f * math.sqrt(theta))
            measured = empirical_laplace(theta, density, 4.0, 20000, rng)

            # Assert
            self.assertAlmostEqual(measured / expected, 1.0, delta=0.05)

    def test_degenerate_arguments(self):
        """Test that theta = 0 and zero density both give 1."""
        # Arrange
        rng = np.random.default_rng(0)

        # Act & Assert
        self.assertEqual(empirical_laplace(0.0, 0.01, 4.0, 10, rng), 1.0)
        self.assertEqual(empirical_laplace(1.0, 0.0, 4.0, 10, rng), 1.0)


class TestFieldDump(unittest.TestCase):
    """Test cases for dumping an interferer field."""

    def test_dump_field_csv(self):
        """Test that a dumped field has one x, y, mark row per interferer."""
        # Arrange
        field = sample_ppp_disc(1e-4, 200.0, 1.0, np.random.default_rng(2))

        # Act
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'field.csv')
            dump_field_csv(field, path)
            frame = pd.read_csv(path)

        # Assert
        self.assertEqual(list(frame.columns), ['x', 'y', 'mark'])
        self.assertEqual(len(frame), field.size)


if __name__ == '__main__':
    unittest.main()
