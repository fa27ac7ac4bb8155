"""
Femtocell downlink simulator: limited-feedback beamforming under feedback
delay and Poisson femtocell interference.
"""
import logging

__version__ = '1.0.0'


def create_runner(config_name=None, seed=None, threads=None):
    """
    Select the configuration, set up logging and return a SweepRunner for it.

    Args:
        config_name: 'quick', 'full' or 'default' (falls back to FEMTONET_ENV)
        seed: master seed, defaults to the configuration's SEED
        threads: worker cap, defaults to the configuration's THREADS
    """
    from femtonet.config import get_config
    from femtonet.services.simulator import SweepRunner
    from femtonet.utils import configure_logging

    settings = get_config(config_name)
    configure_logging(settings.LOG_LEVEL)
    logging.info(f"femtonet {__version__}: using {settings.__name__} "
                 f"(trials={settings.TRIALS}, threads={settings.THREADS})")
    return SweepRunner(seed if seed is not None else settings.SEED,
                       threads=threads or settings.THREADS,
                       block_size=settings.BLOCK_SIZE)
