"""
Random vector quantization codebooks and the max-gain quantizer.
"""
import json
import logging
from dataclasses import dataclass

import numpy as np

from femtonet.errors import DomainError
from femtonet.services.channel import ChannelVector, sample_channels

MAX_BITS = 16


@dataclass(frozen=True)
class Codebook:
    """2^bits unit-norm beamforming vectors, one per row."""
    vectors: np.ndarray
    bits: int

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=complex)
        if vectors.ndim != 2:
            raise DomainError("codebook vectors must form a 2-D array")
        if vectors.shape[0] != 2 ** self.bits:
            raise DomainError(f"codebook with {self.bits} bits needs {2 ** self.bits} vectors, got {vectors.shape[0]}")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise DomainError("codebook vectors must have unit norm")
        vectors.setflags(write=False)
        object.__setattr__(self, 'vectors', vectors)

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.vectors.shape[1]


def _normalize_rows(g: np.ndarray) -> np.ndarray:
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def generate_rvq(n_antennas: int, bits: int, rng: np.random.Generator) -> Codebook:
    """Independent vectors uniform on the complex unit sphere (normalized Gaussian draws)."""
    if n_antennas < 1:
        raise DomainError(f"n_antennas must be at least 1, got {n_antennas}")
    if not (1 <= bits <= MAX_BITS):
        raise DomainError(f"bits must lie in [1, {MAX_BITS}], got {bits}")
    vectors = _normalize_rows(sample_channels(2 ** bits, n_antennas, rng))
    logging.debug(f"Codebook: generated RVQ codebook N_b={n_antennas}, B={bits}")
    return Codebook(vectors=vectors, bits=bits)


def random_beamformers(n_trials: int, n_antennas: int, rng: np.random.Generator) -> np.ndarray:
    """Isotropic unit vectors drawn independently of any channel (open-loop baseline)."""
    return _normalize_rows(sample_channels(n_trials, n_antennas, rng))


def random_beamformer(n_antennas: int, rng: np.random.Generator) -> ChannelVector:
    return random_beamformers(1, n_antennas, rng)[0]


def quantize_batch(h: np.ndarray, cb: Codebook) -> np.ndarray:
    """Index maximizing |h^H f_k|^2 for each row of `h`; ties go to the lowest index."""
    h = np.atleast_2d(h)
    if h.shape[1] != cb.n_antennas:
        raise DomainError(f"dimension mismatch: channel has {h.shape[1]} entries, codebook {cb.n_antennas}")
    gains = np.abs(np.conj(h) @ cb.vectors.T) ** 2
    # Gains equal up to rounding count as ties
    best = gains.max(axis=1, keepdims=True)
    return np.argmax(gains >= best * (1.0 - 1e-12), axis=1)


def quantize(h: ChannelVector, cb: Codebook) -> int:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 1:
        raise DomainError("quantize expects a single channel vector")
    return int(quantize_batch(h[np.newaxis, :], cb)[0])


def quantization_error(h: np.ndarray, cb: Codebook) -> np.ndarray:
    """sin^2 of the angle between each channel direction and its chosen codeword."""
    h = np.atleast_2d(h)
    chosen = cb.vectors[quantize_batch(h, cb)]
    directions = _normalize_rows(h)
    return 1.0 - np.abs(np.sum(np.conj(directions) * chosen, axis=1)) ** 2


def gersho_delta(n_antennas: int, bits: int) -> float:
    """Quantization cell loss 2^(-B/(N_b-1))."""
    if n_antennas < 2:
        raise DomainError(f"gersho_delta needs at least 2 antennas, got {n_antennas}")
    if bits < 0:
        raise DomainError(f"bits must be non-negative, got {bits}")
    return 2.0 ** (-bits / (n_antennas - 1))


def save_codebook(cb: Codebook, path: str):
    """Write the codebook as JSON: one list of [re, im] pairs per vector."""
    payload = {
        'bits': cb.bits,
        'n_antennas': cb.n_antennas,
        'vectors': [[[float(z.real), float(z.imag)] for z in row] for row in cb.vectors],
    }
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(payload, fh)
    logging.info(f"Codebook: saved {cb.size} vectors to {path}")


def load_codebook(path: str) -> Codebook:
    with open(path, 'r', encoding='utf-8') as fh:
        payload = json.load(fh)
    try:
        pairs = np.asarray(payload['vectors'], dtype=float)
        bits = int(payload['bits'])
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"malformed codebook file {path}: {e}")
    if pairs.ndim != 3 or pairs.shape[-1] != 2:
        raise DomainError(f"malformed codebook file {path}: expected [re, im] pairs")
    return Codebook(vectors=pairs[..., 0] + 1j * pairs[..., 1], bits=bits)
