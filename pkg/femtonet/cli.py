"""
Command-line front end: `femtonet <experiment> [--config FILE] [--seed N] [--trials N] [--out DIR] [--format csv|json]`.

Exit codes: 0 success, 2 configuration error, 3 acceptance failure,
4 numeric error, 1 anything else (including unwritable output).
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values

from femtonet.config import get_config
from femtonet.errors import ConfigError, DomainError, FemtonetError, NumericError
from femtonet.models import EXPERIMENTS, ExperimentConfig, SweepSpec
from femtonet.services.export_service import ExportService
from femtonet.tasks.experiments import resolved_params, run_named

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_ACCEPTANCE = 3
EXIT_NUMERIC = 4

_TOP_LEVEL_KEYS = {'experiment', 'output_dir', 'format', 'seed', 'trials', 'threads'}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='femtonet',
                                     description='Femtocell downlink limited-feedback experiments.')
    parser.add_argument('experiment', choices=EXPERIMENTS, help='experiment to run')
    parser.add_argument('--config', help='flat key=value config file or a JSON run manifest')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--trials', type=int, help='Monte Carlo trials per sweep point')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('--format', choices=('csv', 'json'), help='dataset format')
    parser.add_argument('--threads', type=int, help='worker threads (default FEMTONET_THREADS)')
    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """Flat dotted keys from a key=value file, or the `config` block of a JSON manifest."""
    if not os.path.isfile(path):
        raise ConfigError('config', f"no such file: {path}")
    if path.endswith('.json'):
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError('config', f"invalid JSON in {path}: {e}")
        return dict(payload.get('config', payload))
    return {k: v for k, v in dotenv_values(path).items() if v is not None}


def _as_int(flat: Dict[str, Any], key: str, default: int) -> int:
    if key not in flat:
        return default
    try:
        return int(flat[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got '{flat[key]}'")


def _sweep_values(raw) -> tuple:
    items = raw if isinstance(raw, (list, tuple)) else str(raw).split(',')
    try:
        return tuple(float(v) for v in items if str(v).strip())
    except ValueError:
        raise ConfigError('sweep.values', f"expected comma-separated numbers, got '{raw}'")


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge defaults, the config file and command-line flags (flags win).

    Raises:
        ConfigError: naming the offending field
    """
    settings = get_config()
    flat = load_config_file(args.config) if args.config else {}

    unknown = [k for k in flat if k not in _TOP_LEVEL_KEYS and not k.startswith(('params.', 'sweep.'))]
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    if 'experiment' in flat and flat['experiment'] != args.experiment:
        logging.warning(f"Config file names '{flat['experiment']}'; running '{args.experiment}' as requested")

    seed = args.seed if args.seed is not None else _as_int(flat, 'seed', settings.SEED)
    trials = args.trials if args.trials is not None else _as_int(flat, 'trials', settings.TRIALS)
    threads = args.threads if args.threads is not None else _as_int(flat, 'threads', settings.THREADS)

    sweep = None
    if 'sweep.axis' in flat:
        sweep = SweepSpec(
            axis=str(flat['sweep.axis']),
            values=_sweep_values(flat.get('sweep.values', '')),
            trials_per_point=trials if args.trials is not None else _as_int(flat, 'sweep.trials_per_point', trials),
            seed=seed,
        )

    cfg = ExperimentConfig(
        experiment=args.experiment,
        params={k[len('params.'):]: v for k, v in flat.items() if k.startswith('params.')},
        sweep=sweep,
        output_dir=args.out or flat.get('output_dir', settings.OUTPUT_DIR),
        format=args.format or flat.get('format', settings.OUTPUT_FORMAT),
        seed=seed,
        trials=trials,
        threads=threads,
    )
    # Surface bad parameter overrides before any work starts
    resolved_params(cfg)
    return cfg


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment, write its datasets, report and manifest, and return the exit code."""
    try:
        datasets, report, params = run_named(cfg)
    except ConfigError as e:
        logging.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericError as e:
        logging.error(f"Numeric error: {e} (state: {e.state})", exc_info=True)
        return EXIT_NUMERIC
    except DomainError as e:
        logging.error(f"Invalid parameters: {e}", exc_info=True)
        return EXIT_CONFIG
    except FemtonetError as e:
        logging.error(f"Experiment failed: {e}", exc_info=True)
        return EXIT_NUMERIC

    try:
        exporter = ExportService(cfg.output_dir, cfg.format)
        files = {name: exporter.write_dataset(name, frame) for name, frame in sorted(datasets.items())}
        files['report'] = exporter.write_report(cfg.experiment, report)
        exporter.write_manifest(cfg, params, files)
    except NumericError as e:
        logging.error(f"Refusing to write non-finite data: {e}")
        return EXIT_NUMERIC
    except OSError as e:
        logging.error(f"Cannot write output to {cfg.output_dir}: {e}", exc_info=True)
        return EXIT_ERROR

    if cfg.experiment == 'validate_all' and not report.get('passed', False):
        failed = [r['criterion'] for r in report['criteria'] if not r['passed']]
        logging.error(f"Acceptance failure: criteria {failed}")
        return EXIT_ACCEPTANCE
    logging.info(f"{cfg.experiment}: wrote {len(datasets)} dataset(s) to {cfg.output_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as e:
        logging.error(f"Configuration error in {e.field}: {e}")
        return EXIT_CONFIG
    return run_experiment(cfg)


if __name__ == '__main__':
    sys.exit(main())
