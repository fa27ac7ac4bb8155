#!/usr/bin/env python
"""Entry point script for running a named femtonet experiment.

Usage: python run_experiment.py <experiment> [--config FILE] [--seed N] [--trials N] [--out DIR] [--format csv|json]
"""

import logging
import os
import sys

# Add project root to path to allow imports like 'from femtonet.cli import main'
project_root = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, project_root)

# Configure logging early
logging.basicConfig(
    level=os.environ.get('FEMTONET_LOG_LEVEL', 'INFO'),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    stream=sys.stdout
)

logging.info("run_experiment.py: Script started.")

try:
    from femtonet.cli import main
except ImportError as e:
    logging.error(f"run_experiment.py: Failed to import required modules: {e}", exc_info=True)
    sys.exit(1)

if __name__ == '__main__':
    try:
        status = main()
    except Exception as e:
        logging.error(f"run_experiment.py: Unhandled exception during experiment: {e}", exc_info=True)
        sys.exit(1)

    if status == 0:
        logging.info("run_experiment.py: Experiment completed. Exiting with success code 0.")
    else:
        logging.error(f"run_experiment.py: Experiment reported failure. Exiting with code {status}.")
    sys.exit(status)
