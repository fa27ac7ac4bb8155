"""
Rayleigh MISO channel draws and Gauss-Markov aging under the Clarke model.

Channel entries are circularly symmetric CN(0, 1): real and imaginary parts
each have variance 1/2, so E[|h_i|^2] = 1.
"""
import math

import numpy as np

from femtonet.config import Config
from femtonet.errors import DomainError
from femtonet.models import MobilityParams
from femtonet.utils.mathkit import bessel_j0

# A ChannelVector is a 1-D complex array of length N_b; batches are (trials, N_b)
ChannelVector = np.ndarray

_HALF_SQRT = math.sqrt(0.5)


def kmh_to_ms(velocity_kmh: float) -> float:
    return velocity_kmh / 3.6


def sample_channels(n_trials: int, n_antennas: int, rng: np.random.Generator) -> np.ndarray:
    """(n_trials, n_antennas) i.i.d. CN(0, 1) entries."""
    if n_antennas < 1:
        raise DomainError(f"n_antennas must be at least 1, got {n_antennas}")
    if n_trials < 0:
        raise DomainError(f"n_trials must be non-negative, got {n_trials}")
    shape = (n_trials, n_antennas)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * _HALF_SQRT


def sample_channel(n_antennas: int, rng: np.random.Generator) -> ChannelVector:
    return sample_channels(1, n_antennas, rng)[0]


def doppler_frequency(m: MobilityParams, speed_of_light: float = Config.SPEED_OF_LIGHT) -> float:
    """Maximum Doppler shift v * f_c / c in Hz."""
    return m.velocity * m.carrier_freq / speed_of_light


def correlation_coefficient(m: MobilityParams, speed_of_light: float = Config.SPEED_OF_LIGHT) -> float:
    """Clarke temporal correlation J0(2 pi d f_d T_s) across the feedback delay."""
    argument = 2 * math.pi * m.delay_frames * doppler_frequency(m, speed_of_light) * m.symbol_duration
    return bessel_j0(argument)


def _check_eta(eta: float):
    if not (0.0 <= eta <= 1.0):
        raise DomainError(f"eta must lie in [0, 1], got {eta}")


def evolve_gauss_markov_batch(h_old: np.ndarray, eta: float, rng: np.random.Generator) -> np.ndarray:
    """eta * h_old + sqrt(1 - eta^2) * e for a batch of channels, e fresh CN(0, 1)."""
    _check_eta(eta)
    h_old = np.atleast_2d(h_old)
    innovation = sample_channels(h_old.shape[0], h_old.shape[1], rng)
    return eta * h_old + math.sqrt(1.0 - eta * eta) * innovation


def evolve_gauss_markov(h_old: ChannelVector, eta: float, rng: np.random.Generator) -> ChannelVector:
    h_old = np.asarray(h_old, dtype=complex)
    if h_old.ndim != 1:
        raise DomainError("evolve_gauss_markov expects a single channel vector")
    return evolve_gauss_markov_batch(h_old[np.newaxis, :], eta, rng)[0]


def effective_power_batch(h: np.ndarray, f: np.ndarray) -> np.ndarray:
    """
    |h^H f|^2 row by row.

    `f` is either one beamformer shared by every row of `h` or a batch of the
    same shape as `h`.
    """
    h = np.atleast_2d(h)
    f = np.asarray(f)
    if f.shape[-1] != h.shape[-1]:
        raise DomainError(f"dimension mismatch: channel has {h.shape[-1]} entries, beamformer {f.shape[-1]}")
    return np.abs(np.sum(np.conj(h) * f, axis=-1)) ** 2


def effective_power(h: ChannelVector, f: ChannelVector) -> float:
    h = np.asarray(h, dtype=complex)
    f = np.asarray(f, dtype=complex)
    if h.shape != f.shape or h.ndim != 1:
        raise DomainError(f"length mismatch: {h.shape} vs {f.shape}")
    if abs(np.linalg.norm(f) - 1.0) > 1e-9:
        raise DomainError("beamformer must have unit norm")
    return float(np.abs(np.vdot(h, f)) ** 2)
