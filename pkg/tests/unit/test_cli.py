"""
Unit tests for the command-line front end.
"""
import json
import os
import tempfile
import unittest
from unittest.mock import patch

import pandas as pd

from femtonet import cli
from femtonet.errors import ConfigError, NumericError


class TestResolveConfig(unittest.TestCase):
    """Test cases for merging config files and flags."""

    def setUp(self):
        """Set up a scratch directory and the argument parser."""
        self.tmp = tempfile.TemporaryDirectory()
        self.parser = cli.build_parser()

    def tearDown(self):
        """Remove the scratch directory."""
        self.tmp.cleanup()

    def _write(self, name, text):
        path = os.path.join(self.tmp.name, name)
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(text)
        return path

    def test_file_values(self):
        """Test that key=value files set seed, trials, params and sweep."""
        # Arrange
        path = self._write('run.env', 'seed=9\ntrials=300\nparams.n_b=2\nsweep.axis=snr\nsweep.values=0,10\n')

        # Act
        cfg = cli.resolve_config(self.parser.parse_args(['fig5_goodput_delay', '--config', path]))

        # Assert
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.trials, 300)
        self.assertEqual(cfg.params, {'n_b': '2'})
        self.assertEqual(cfg.sweep.values, (0.0, 10.0))
        self.assertEqual(cfg.trials_per_point, 300)

    def test_flags_override_file(self):
        """Test that command-line flags win over file values."""
        # Arrange
        path = self._write('run.env', 'seed=9\nformat=json\n')
        args = self.parser.parse_args(['fig3_outage', '--config', path, '--seed', '5', '--format', 'csv',
                                       '--out', self.tmp.name])

        # Act
        cfg = cli.resolve_config(args)

        # Assert
        self.assertEqual(cfg.seed, 5)
        self.assertEqual(cfg.format, 'csv')
        self.assertEqual(cfg.output_dir, self.tmp.name)

    def test_unknown_key(self):
        """Test that an unknown key raises ConfigError naming the key."""
        # Arrange
        path = self._write('run.env', 'colour=blue\n')

        # Act
        with self.assertRaises(ConfigError) as ctx:
            cli.resolve_config(self.parser.parse_args(['fig3_outage', '--config', path]))

        # Assert
        self.assertEqual(ctx.exception.field, 'colour')

    def test_manifest_config_block(self):
        """Test that a manifest's config block is accepted as a config file."""
        # Arrange
        path = self._write('manifest.json', json.dumps({'config': {'seed': 3, 'params.bits': 4}}))

        # Act
        cfg = cli.resolve_config(self.parser.parse_args(['fig3_outage', '--config', path]))

        # Assert
        self.assertEqual(cfg.seed, 3)
        self.assertEqual(cfg.params, {'bits': 4})

    def test_missing_file(self):
        """Test that a missing config file raises ConfigError."""
        # Act & Assert
        with self.assertRaises(ConfigError):
            cli.load_config_file(os.path.join(self.tmp.name, 'absent.env'))

    def test_bad_parameter_exits_with_config_code(self):
        """Test that an invalid parameter exits with the config status."""
        # Arrange
        path = self._write('run.env', 'params.n_b=1\n')

        # Act
        status = cli.main(['fig3_outage', '--config', path])

        # Assert
        self.assertEqual(status, cli.EXIT_CONFIG)


class TestRunExperiment(unittest.TestCase):
    """Test cases for running an experiment and mapping failures to exit codes."""

    def setUp(self):
        """Set up a resolved fig3_outage config writing to a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        args = cli.build_parser().parse_args(['fig3_outage', '--out', self.tmp.name, '--seed', '1'])
        self.cfg = cli.resolve_config(args)
        self.frame = pd.DataFrame({'distance_m': [10.0], 'empirical_outage': [0.1]})

    def tearDown(self):
        """Remove the scratch directory."""
        self.tmp.cleanup()

    @patch('femtonet.cli.run_named')
    def test_writes_outputs(self, mock_run):
        """Test that a run writes its dataset, report and manifest."""
        # Arrange
        mock_run.return_value = ({'fig3_outage': self.frame}, {'max_abs_error': 0.01}, None)

        # Act
        status = cli.run_experiment(self.cfg)

        # Assert
        self.assertEqual(status, cli.EXIT_OK)
        written = set(os.listdir(self.tmp.name))
        self.assertEqual(written, {'fig3_outage.csv', 'fig3_outage_report.json', 'manifest.json'})

    @patch('femtonet.cli.run_named')
    def test_manifest_reproduces_config(self, mock_run):
        """Test that feeding the manifest back resolves to the same config."""
        # Arrange
        mock_run.return_value = ({'fig3_outage': self.frame}, {}, None)
        cli.run_experiment(self.cfg)
        manifest = os.path.join(self.tmp.name, 'manifest.json')

        # Act
        args = cli.build_parser().parse_args(['fig3_outage', '--config', manifest])

        # Assert
        self.assertEqual(cli.resolve_config(args), self.cfg)

    @patch('femtonet.cli.run_named')
    def test_failed_acceptance(self, mock_run):
        """Test that a failed criterion exits with the acceptance status."""
        # Arrange
        report = {'criteria': [{'criterion': 3, 'passed': False}], 'passed': False}
        mock_run.return_value = ({}, report, None)
        cfg = cli.resolve_config(cli.build_parser().parse_args(['validate_all', '--out', self.tmp.name]))

        # Act
        status = cli.run_experiment(cfg)

        # Assert
        self.assertEqual(status, cli.EXIT_ACCEPTANCE)

    @patch('femtonet.cli.run_named')
    def test_numeric_error(self, mock_run):
        """Test that a NumericError exits with the numeric status."""
        # Arrange
        mock_run.side_effect = NumericError('quadrature diverged', state={'upper': 1.0})

        # Act
        status = cli.run_experiment(self.cfg)

        # Assert
        self.assertEqual(status, cli.EXIT_NUMERIC)

    @patch('femtonet.cli.run_named')
    def test_non_finite_dataset(self, mock_run):
        """Test that a dataset with NaN exits with the numeric status."""
        # Arrange
        mock_run.return_value = ({'bad': self.frame.assign(empirical_outage=[float('nan')])}, {}, None)

        # Act
        status = cli.run_experiment(self.cfg)

        # Assert
        self.assertEqual(status, cli.EXIT_NUMERIC)


if __name__ == '__main__':
    unittest.main()
