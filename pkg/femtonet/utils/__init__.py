# Utils package initialization
import logging
import os
import sys


def configure_logging(level=None):
    """
    Configure logging for the simulator and return the package logger.
    """
    level = level or os.environ.get('FEMTONET_LOG_LEVEL', 'INFO')
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        stream=sys.stdout
    )

    # Keep third-party chatter out of experiment logs
    logging.getLogger('numexpr').setLevel(logging.WARNING)
    logging.getLogger('concurrent.futures').setLevel(logging.WARNING)

    logger = logging.getLogger('femtonet')
    logger.setLevel(level)
    return logger
