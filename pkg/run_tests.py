#!/usr/bin/env python3
"""
Run the femtonet unit suite with unittest discovery.

Covers the closed forms, the backoff solvers, the Monte Carlo simulator and the
experiment drivers. The suite runs under the quick configuration (small trial
counts) unless FEMTONET_ENV is already set; exits non-zero on any failure.
"""
import os
import sys
import unittest


def run_tests():
    """Discover every tests/unit module and run it; return the process exit code."""
    # Add the project root to the path
    sys.path.insert(0, os.path.abspath(os.path.dirname(__file__)))

    # Unit tests use the small trial counts
    os.environ.setdefault('FEMTONET_ENV', 'quick')

    # Discover all tests in the tests directory
    test_loader = unittest.TestLoader()
    test_suite = test_loader.discover('tests', pattern='test_*.py', top_level_dir='.')

    # Run the tests
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(test_suite)

    # Return exit code based on test results
    return 0 if result.wasSuccessful() else 1


if __name__ == '__main__':
    sys.exit(run_tests())
