"""
Unit tests for the closed-form link analytics.
"""
import math
import unittest

import numpy as np
from scipy import integrate

from femtonet.errors import DomainError
from femtonet.models import PathlossParams, SystemParams
from femtonet.services.analytics import (
    avg_goodput_analytic,
    ccdf_no_interference,
    derive_constants,
    distance_for_snr,
    effective_power_cdf,
    effective_power_mean,
    effective_power_pdf,
    effective_power_quantile,
    expansion_valid,
    fit_scale_convention,
    ks_distance,
    laplace_interference,
    max_density,
    sample_effective_power_model,
    shot_noise_constant,
    snr_db,
    success_probability,
    success_probability_detail,
    success_probability_slope,
    truncation_estimate,
)

SIR_THRESHOLD = 10 ** 0.5


def delay_only_params(snr: float = 10.0, n_b: int = 2, bits: int = 3) -> SystemParams:
    return SystemParams(n_b=n_b, bits=bits, density=0.0,
                        user_distance=distance_for_snr(snr, PathlossParams()))


class TestDerivedConstants(unittest.TestCase):
    """Test cases for the derived constant bundle."""

    def test_reference_configuration(self):
        """Test that N_b = 4 and B = 6 give delta 1/4, c2 = 64 and c1 = 48."""
        # Act
        k = derive_constants(SystemParams(n_b=4, bits=6))

        # Assert
        self.assertEqual(k.delta, 0.25)
        self.assertAlmostEqual(k.c2, 64.0, places=9)
        self.assertAlmostEqual(k.c1, 48.0, places=9)
        self.assertAlmostEqual(k.kappa2, k.eta ** 2, places=15)
        self.assertAlmostEqual(k.kappa1, 0.75 * k.eta ** 2, places=15)

    def test_shot_noise_constant(self):
        """Test that C_f is pi^2 / 2 at path-loss exponent 4 and undefined at 2."""
        # Act & Assert
        self.assertAlmostEqual(shot_noise_constant(4.0), math.pi ** 2 / 2, places=12)
        with self.assertRaises(DomainError):
            shot_noise_constant(2.0)

    def test_normalization_identity(self):
        """Test that A2 + c2 = 1 across antenna counts and codebook sizes."""
        for n_b, bits in ((2, 1), (2, 3), (3, 4), (4, 5), (4, 8), (6, 10)):
            # Act
            k = derive_constants(SystemParams(n_b=n_b, bits=bits))

            # Assert
            self.assertAlmostEqual((k.a2 + k.c2) / k.c2, 1.0 / k.c2, places=12)

    def test_first_order_coefficient(self):
        """Test that A1 vanishes for two antennas and is negative for four."""
        # Act
        two = derive_constants(SystemParams(n_b=2, bits=3))
        four = derive_constants(SystemParams(n_b=4, bits=5))

        # Assert
        self.assertEqual(two.a1, 0.0)
        self.assertLess(four.a1, 0.0)

    def test_second_order_coefficient(self):
        """Test that the dropped coefficient is -c1 (delta^2 / 2) delta_f^2 for N_b = 4 and zero below."""
        # Arrange
        k = derive_constants(SystemParams(n_b=4, bits=5))
        expected = -k.c1 * (k.delta ** 2 / 2) * k.delta_f ** 2

        # Act & Assert
        self.assertAlmostEqual(k.a3, expected, places=12)
        self.assertLess(k.a3, 0.0)
        self.assertEqual(derive_constants(SystemParams(n_b=2, bits=3)).a3, 0.0)
        self.assertEqual(derive_constants(SystemParams(n_b=3, bits=4)).a3, 0.0)

    def test_delta_override(self):
        """Test that an explicit quantization delta replaces the codebook value."""
        # Act
        k = derive_constants(SystemParams(quantization_delta=0.5))

        # Assert
        self.assertEqual(k.delta, 0.5)

    def test_degenerate_inputs(self):
        """Test that eta = 0 and a zero-bit codebook are rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            derive_constants(SystemParams(), eta=0.0)
        with self.assertRaises(DomainError):
            derive_constants(SystemParams(bits=0))


class TestEffectivePowerDistribution(unittest.TestCase):
    """Test cases for the effective channel power distribution."""

    def setUp(self):
        """Set up constants for N_b = 4 and B = 6."""
        self.k = derive_constants(SystemParams(n_b=4, bits=6))

    def test_boundary_values(self):
        """Test that the CDF starts at 0 and saturates at 1."""
        # Act & Assert
        self.assertEqual(effective_power_cdf(0.0, self.k), 0.0)
        self.assertEqual(effective_power_cdf(1000.0, self.k), 1.0)
        self.assertEqual(ccdf_no_interference(0.0, self.k), 1.0)

    def test_monotone(self):
        """Test that the CDF never decreases."""
        # Arrange
        z = np.linspace(0.0, 20.0, 2001)

        # Act
        cdf = effective_power_cdf(z, self.k)

        # Assert
        self.assertTrue(np.all(np.diff(cdf) >= -1e-12))

    def test_complement(self):
        """Test that CDF and CCDF sum to one."""
        # Arrange
        rng = np.random.default_rng(0)

        for z in rng.uniform(0.0, 10.0, 100):
            # Act
            total = ccdf_no_interference(z, self.k) + effective_power_cdf(z, self.k)

            # Assert
            self.assertAlmostEqual(total, 1.0, places=15)

    def test_pdf_integrates_to_cdf(self):
        """Test that the density integrates to one and to the CDF on [0, 2]."""
        # Act
        total, _ = integrate.quad(lambda z: effective_power_pdf(z, self.k), 0.0, np.inf)
        partial, _ = integrate.quad(lambda z: effective_power_pdf(z, self.k), 0.0, 2.0)

        # Assert
        self.assertAlmostEqual(total, 1.0, places=6)
        self.assertAlmostEqual(partial, effective_power_cdf(2.0, self.k), places=8)

    def test_mean_and_quantile(self):
        """Test the closed-form mean and that the quantile inverts the CDF."""
        # Act
        mean = effective_power_mean(self.k)
        q = effective_power_quantile(0.9, self.k)

        # Assert
        self.assertAlmostEqual(mean, 3 * self.k.kappa1 + self.k.kappa2, places=15)
        self.assertAlmostEqual(effective_power_cdf(q, self.k), 0.9, places=9)
        self.assertEqual(effective_power_quantile(0.0, self.k), 0.0)

    def test_model_samples_match_cdf(self):
        """Test that mixture samples reproduce the closed-form CDF."""
        # Arrange
        samples = sample_effective_power_model(self.k, 100000, np.random.default_rng(5))

        # Act
        distance = ks_distance(samples, lambda z: effective_power_cdf(z, self.k))

        # Assert
        self.assertLess(distance, 0.01)

    def test_scale_convention_recovered(self):
        """Test that the scale fit picks 0.5 for data drawn under that convention."""
        # Arrange
        p = SystemParams(n_b=4, bits=6)
        samples = sample_effective_power_model(derive_constants(p), 50000, np.random.default_rng(6))

        # Act
        best, distances = fit_scale_convention(samples, p)

        # Assert
        self.assertEqual(best, 0.5)
        self.assertLess(distances[0.5], distances[1.0])

    def test_wrong_antenna_count(self):
        """Test that an antenna count different from the constants is rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            effective_power_cdf(1.0, self.k, n_b=2)

    def test_negative_argument(self):
        """Test that a negative power is rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            effective_power_cdf(-1.0, self.k)


class TestSuccessProbability(unittest.TestCase):
    """Test cases for the success probability under femtocell interference."""

    def setUp(self):
        """Set up the reference network with the user 50 m from the base station."""
        self.p = SystemParams(user_distance=50.0)

    def test_no_femtocells(self):
        """Test that an empty network always succeeds."""
        # Act
        value = success_probability(SIR_THRESHOLD, self.p.evolve(density=0.0))

        # Assert
        self.assertEqual(value, 1.0)

    def test_nonincreasing_in_threshold(self):
        """Test that a stricter SIR threshold never raises the success probability."""
        # Act
        values = success_probability(np.geomspace(0.1, 10.0, 50), self.p)

        # Assert
        self.assertTrue(np.all(np.diff(values) <= 1e-12))
        self.assertLess(success_probability(10.0, self.p), success_probability(1.0, self.p))

    def test_nonincreasing_in_distance(self):
        """Test that moving away from the base station never raises the success probability."""
        # Act
        values = [success_probability(SIR_THRESHOLD, self.p.evolve(distance=d)) for d in np.linspace(10, 60, 11)]

        # Assert
        self.assertTrue(np.all(np.diff(values) <= 1e-12))

    def test_nonincreasing_in_density(self):
        """Test that more femtocells never raise the success probability."""
        # Act
        values = [success_probability(SIR_THRESHOLD, self.p.evolve(density=count / (math.pi * 1e6)))
                  for count in np.linspace(0, 200, 21)]

        # Assert
        self.assertTrue(np.all(np.diff(values) <= 1e-12))

    def test_slope_matches_finite_difference(self):
        """Test that the analytic slope matches a central difference."""
        # Arrange
        h = 1e-6 * SIR_THRESHOLD

        # Act
        numeric = (success_probability(SIR_THRESHOLD + h, self.p) - success_probability(SIR_THRESHOLD - h, self.p)) / (2 * h)
        analytic = success_probability_slope(SIR_THRESHOLD, self.p)

        # Assert
        self.assertAlmostEqual(analytic / numeric, 1.0, delta=1e-5)

    def test_expansion_validity(self):
        """Test that the validity flag tracks the size of the dropped second-order term."""
        # Arrange
        near = self.p.evolve(distance=20.0)
        far = self.p.evolve(distance=300.0)

        # Act
        detail = success_probability_detail(SIR_THRESHOLD, near)

        # Assert
        self.assertTrue(detail.expansion_valid)
        self.assertLess(detail.truncation, 0.02)
        self.assertAlmostEqual(detail.probability, success_probability(SIR_THRESHOLD, near), places=15)
        self.assertLess(detail.omega2, detail.omega1)
        self.assertLess(detail.omega1, 1.0)
        self.assertFalse(expansion_valid(SIR_THRESHOLD, self.p))
        self.assertGreater(truncation_estimate(SIR_THRESHOLD, self.p), 0.02)
        self.assertFalse(expansion_valid(SIR_THRESHOLD, far))
        with self.assertLogs(level='WARNING'):
            success_probability_detail(SIR_THRESHOLD, far)

    def test_truncation_grows_with_distance(self):
        """Test that the dropped term grows with distance while omega1 stays below 1."""
        # Arrange
        distances = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0)

        # Act
        terms = [truncation_estimate(SIR_THRESHOLD, self.p.evolve(distance=d)) for d in distances]

        # Assert
        self.assertTrue(np.all(np.diff(terms) > 0))
        self.assertLess(terms[0], 1e-3)
        self.assertGreater(terms[-1], 0.05)

    def test_truncation_vanishes_for_three_antennas(self):
        """Test that the first-order expansion is exact below four antennas."""
        # Arrange
        p = self.p.evolve(n_b=3, bits=4)

        # Act
        term = truncation_estimate(SIR_THRESHOLD, p)

        # Assert
        self.assertEqual(term, 0.0)

    def test_laplace_closed_form(self):
        """Test the interference Laplace transform at its trivial and unit-exponent points."""
        # Act & Assert
        self.assertEqual(laplace_interference(0.0, 0.01, 4.0), 1.0)
        self.assertEqual(laplace_interference(1.0, 0.0, 4.0), 1.0)
        self.assertAlmostEqual(laplace_interference(1.0, 1 / shot_noise_constant(4.0), 4.0), math.exp(-1.0), places=12)


class TestMaxDensity(unittest.TestCase):
    """Test cases for the largest admissible femtocell density."""

    def setUp(self):
        """Set up a two-antenna link 50 m from the base station."""
        self.p = SystemParams(n_b=2, bits=3, user_distance=50.0)

    def test_exact_meets_target(self):
        """Test that the exact density lands on the outage target."""
        for epsilon in (0.05, 0.1, 0.2):
            # Act
            result = max_density(epsilon, SIR_THRESHOLD, self.p)
            achieved = success_probability(SIR_THRESHOLD, self.p.evolve(density=result.exact))

            # Assert
            self.assertFalse(result.capped)
            self.assertAlmostEqual(achieved, 1 - epsilon, places=6)

    def test_closed_form_is_conservative(self):
        """Test that the closed form never exceeds the exact density."""
        for n_b, bits in ((2, 3), (4, 5), (4, 8)):
            # Arrange
            p = SystemParams(n_b=n_b, bits=bits, user_distance=50.0)

            # Act
            result = max_density(0.1, SIR_THRESHOLD, p)

            # Assert
            self.assertLessEqual(result.closed_form, result.exact * (1 + 1e-9))
            self.assertTrue(result.closed_form_valid)
        self.assertEqual(max_density(0.1, SIR_THRESHOLD, self.p).branch, 'none')

    def test_closed_form_gap_widens_with_bits(self):
        """Test that the closed form falls short of the exact density by over 99% for large codebooks."""
        # Arrange
        p = SystemParams(user_distance=50.0)

        # Act
        results = [max_density(0.1, SIR_THRESHOLD, p.evolve(bits=b)) for b in (8, 10, 12)]
        gaps = [1.0 - r.closed_form / r.exact for r in results]

        # Assert
        for result in results:
            self.assertTrue(result.closed_form_valid)
            self.assertLessEqual(result.closed_form, result.exact)
        self.assertGreater(min(gaps), 0.99)
        self.assertTrue(np.all(np.diff(gaps) > 0))

    def test_increases_with_feedback_bits(self):
        """Test that more feedback bits admit more femtocells."""
        # Act
        counts = [max_density(0.1, SIR_THRESHOLD, self.p.evolve(bits=b)).femtocells(1000.0) for b in range(2, 7)]

        # Assert
        self.assertTrue(np.all(np.diff(counts) > 0))

    def test_vacuous_constraint_is_capped(self):
        """Test that a near-certain outage budget returns the density cap."""
        # Act
        result = max_density(0.999999, SIR_THRESHOLD, self.p.evolve(distance=1.0))

        # Assert
        self.assertTrue(result.capped)
        self.assertEqual(result.exact, 1.0)

    def test_invalid_arguments(self):
        """Test that epsilon = 0 and a zero threshold are rejected."""
        # Act & Assert
        with self.assertRaises(DomainError):
            max_density(0.0, SIR_THRESHOLD, self.p)
        with self.assertRaises(DomainError):
            max_density(0.1, 0.0, self.p)


class TestAverageGoodput(unittest.TestCase):
    """Test cases for the analytic average goodput."""

    def setUp(self):
        """Set up a delay-only two-antenna link at 10 dB."""
        self.p = delay_only_params()

    def test_zero_backoff(self):
        """Test that zero backoff yields zero goodput."""
        # Act
        value = avg_goodput_analytic(self.p, use_backoff=0.0)

        # Assert
        self.assertEqual(value, 0.0)

    def test_forced_success_matches_monte_carlo(self):
        """Test that forced-success goodput equals the Monte Carlo mean rate."""
        # Arrange
        rho = 10.0
        z = sample_effective_power_model(derive_constants(self.p, eta=1.0), 200000, np.random.default_rng(13))
        expected = float(np.mean(np.log2(1 + rho * z)))

        # Act
        value = avg_goodput_analytic(self.p, force_success=True)

        # Assert
        self.assertAlmostEqual(value / expected, 1.0, delta=0.01)

    def test_outage_lowers_goodput(self):
        """Test that outage lowers the goodput below forced success."""
        # Act
        with_outage = avg_goodput_analytic(self.p)
        forced = avg_goodput_analytic(self.p, force_success=True)

        # Assert
        self.assertLess(with_outage, forced)

    def test_constant_and_callable_backoff_agree(self):
        """Test that a constant backoff and the equivalent callable give the same goodput."""
        # Act
        constant = avg_goodput_analytic(self.p, use_backoff=0.5)
        callable_ = avg_goodput_analytic(self.p, use_backoff=lambda z: 0.5)

        # Assert
        self.assertAlmostEqual(constant, callable_, places=9)


class TestSnrHelpers(unittest.TestCase):
    """Test cases for the SNR and distance conversions."""

    def test_cell_edge(self):
        """Test that the cell edge sits at 0 dB."""
        # Act & Assert
        self.assertAlmostEqual(snr_db(SystemParams(user_distance=1000.0)), 0.0, places=9)
        self.assertAlmostEqual(distance_for_snr(0.0, PathlossParams()), 1000.0, delta=1e-6)

    def test_inverse(self):
        """Test that distance_for_snr inverts snr_db."""
        for snr in (10.0, 40.0, 80.0):
            # Arrange
            p = SystemParams(user_distance=distance_for_snr(snr, PathlossParams()))

            # Act
            value = snr_db(p)

            # Assert
            self.assertAlmostEqual(value, snr, places=9)


if __name__ == '__main__':
    unittest.main()
