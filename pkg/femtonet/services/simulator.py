"""
Monte Carlo engine for the macrocell downlink.

Each trial: draw h[n-d], quantize to a codeword f, age the channel to h[n],
draw an independent femtocell field, then compare the rate the transmitter
picks from its estimate rho_bar |h[n-d]^H f|^2 (times beta) with the rate the
channel supports at SINR |h[n]^H f|^2 / (Q_D I_f + N0/S).

Trials run in fixed-size blocks. Block b of sweep point i draws from
SeedSequence(seed, spawn_key=(i, b)), and block results are combined in block
order, so results do not depend on the number of worker threads.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from femtonet.config import Config
from femtonet.errors import DomainError
from femtonet.models import SystemParams
from femtonet.services.backoff import BackoffTable
from femtonet.services.channel import (
    correlation_coefficient,
    effective_power_batch,
    evolve_gauss_markov_batch,
    sample_channels,
)
from femtonet.services.codebook import Codebook, generate_rvq, quantize_batch, random_beamformers
from femtonet.services.geometry import (
    LinkBudget,
    interference_power_batch,
    link_budget,
    sample_ppp_annulus_batch,
)

MODES = ('no_backoff', 'backoff_exact', 'backoff_poly', 'random_beamforming', 'throughput')

# Spawn key of the stream behind the fixed "deployed" codebook
CODEBOOK_STREAM = 0xC0DE

BetaSpec = Union[None, float, BackoffTable, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class TrialResult:
    sir_tx: float
    sir_rx: float
    rate_tx: float
    rate_supported: float
    goodput: float
    outage: bool


@dataclass(frozen=True)
class TrialBatch:
    """Column arrays for a block of trials."""
    sir_tx: np.ndarray
    sir_rx: np.ndarray
    rate_tx: np.ndarray
    rate_supported: np.ndarray
    goodput: np.ndarray
    outage: np.ndarray

    def __len__(self):
        return self.sir_rx.shape[0]

    def result(self, i: int) -> TrialResult:
        return TrialResult(
            sir_tx=float(self.sir_tx[i]),
            sir_rx=float(self.sir_rx[i]),
            rate_tx=float(self.rate_tx[i]),
            rate_supported=float(self.rate_supported[i]),
            goodput=float(self.goodput[i]),
            outage=bool(self.outage[i]),
        )


@dataclass(frozen=True)
class LinkState:
    """Channel powers and interference for a block, before any rate decision."""
    z_tx: np.ndarray
    z_rx: np.ndarray
    interference: np.ndarray
    z_rx_random: Optional[np.ndarray] = None


def fixed_codebook(p: SystemParams, seed: int) -> Codebook:
    """The seeded codebook a deployed system would use for every trial."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(CODEBOOK_STREAM,)))
    return generate_rvq(p.n_b, p.bits, rng)


def sample_link_state(p: SystemParams, cb: Optional[Codebook], n_trials: int, rng: np.random.Generator,
                      perfect_csi: bool = False, with_random: bool = False) -> LinkState:
    """
    Draw one block of channel and interference realizations.

    perfect_csi replaces the codeword with the exact channel direction; with_random
    also evaluates an isotropic beamformer on the same channels.
    """
    eta = correlation_coefficient(p.mobility)
    if eta < 0:
        raise DomainError(f"Gauss-Markov aging needs eta >= 0, got {eta:.4f}")
    h_old = sample_channels(n_trials, p.n_b, rng)
    if perfect_csi:
        f = h_old / np.linalg.norm(h_old, axis=1, keepdims=True)
    else:
        if cb is None:
            raise DomainError("a codebook is required unless perfect_csi is set")
        f = cb.vectors[quantize_batch(h_old, cb)]
    h_now = evolve_gauss_markov_batch(h_old, eta, rng)

    if p.density > 0:
        field = sample_ppp_annulus_batch(n_trials, p.density, p.cell_radius, p.pathloss.d_min, rng)
        interference = interference_power_batch(field, p.pathloss.alpha_f)
    else:
        interference = np.zeros(n_trials)

    z_rx_random = None
    if with_random:
        z_rx_random = effective_power_batch(h_now, random_beamformers(n_trials, p.n_b, rng))

    return LinkState(
        z_tx=effective_power_batch(h_old, f),
        z_rx=effective_power_batch(h_now, f),
        interference=interference,
        z_rx_random=z_rx_random,
    )


def _beta_values(beta: BetaSpec, z_tx: np.ndarray) -> np.ndarray:
    if beta is None:
        return np.ones_like(z_tx)
    if callable(beta):
        return np.asarray(beta(z_tx), dtype=float)
    if not (0.0 <= float(beta) <= 1.0):
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    return np.full_like(z_tx, float(beta))


def evaluate_trials(state: LinkState, budget: LinkBudget, beta: BetaSpec = None,
                    random_beamforming: bool = False) -> TrialBatch:
    """Rate decisions for a block; random beamforming assumes full rate knowledge."""
    z_rx = state.z_rx_random if random_beamforming else state.z_rx
    if z_rx is None:
        raise DomainError("link state was sampled without the random beamforming baseline")
    sir_rx = z_rx / (budget.q_d * state.interference + budget.noise_to_signal)
    rate_supported = np.log2(1.0 + sir_rx)

    if random_beamforming:
        return TrialBatch(sir_tx=sir_rx, sir_rx=sir_rx, rate_tx=rate_supported, rate_supported=rate_supported,
                          goodput=rate_supported, outage=np.zeros(sir_rx.shape, dtype=bool))

    # Same expression as sir_rx so that a noiseless perfect-CSI link compares equal bit for bit
    sir_tx = _beta_values(beta, state.z_tx) * state.z_tx / (
        budget.q_d * budget.mean_interference + budget.noise_to_signal)
    rate_tx = np.log2(1.0 + sir_tx)
    success = rate_tx <= rate_supported
    goodput = np.where(success, rate_tx, 0.0)
    return TrialBatch(sir_tx=sir_tx, sir_rx=sir_rx, rate_tx=rate_tx, rate_supported=rate_supported,
                      goodput=goodput, outage=(~success) & (rate_tx > 0))


def run_trials(p: SystemParams, cb: Optional[Codebook], n_trials: int, rng: np.random.Generator,
               beta: BetaSpec = None, perfect_csi: bool = False,
               budget: Optional[LinkBudget] = None) -> TrialBatch:
    state = sample_link_state(p, cb, n_trials, rng, perfect_csi=perfect_csi)
    return evaluate_trials(state, budget or link_budget(p), beta)


def run_trial(p: SystemParams, cb: Optional[Codebook], beta: Optional[float], rng: np.random.Generator,
              perfect_csi: bool = False) -> TrialResult:
    """One end-to-end trial."""
    return run_trials(p, cb, 1, rng, beta=beta, perfect_csi=perfect_csi).result(0)


class SweepRunner:
    """Splits a sweep point's trials into seeded blocks and runs them on a thread pool."""

    def __init__(self, seed: int = Config.SEED, threads: Optional[int] = None, block_size: Optional[int] = None):
        self.seed = int(seed)
        self.threads = max(1, int(threads or Config.THREADS))
        self.block_size = int(block_size or Config.BLOCK_SIZE)
        if self.block_size < 1:
            raise DomainError(f"block_size must be at least 1, got {self.block_size}")

    def block_rng(self, point: int, block: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(point, block)))

    def block_sizes(self, trials: int) -> List[int]:
        if trials < 1:
            raise DomainError(f"trials must be at least 1, got {trials}")
        full, rest = divmod(trials, self.block_size)
        return [self.block_size] * full + ([rest] if rest else [])

    def map_blocks(self, point: int, trials: int, fn: Callable[[np.random.Generator, int], object]) -> list:
        """fn(rng, n) for every block of the point, results in block order."""
        sizes = self.block_sizes(trials)
        task = lambda b: fn(self.block_rng(point, b), sizes[b])
        workers = min(self.threads, len(sizes))
        if workers == 1:
            return [task(b) for b in range(len(sizes))]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(task, range(len(sizes))))


@dataclass(frozen=True)
class OutageEstimate:
    outage: float
    half_width: float
    trials: int


def binomial_half_width(p_hat: float, trials: int, z: float = 1.96) -> float:
    """Normal-approximation confidence half-width for a proportion."""
    return z * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)


def estimate_outage(p: SystemParams, upsilon: float, trials: int, seed: int = Config.SEED, point: int = 0,
                    runner: Optional[SweepRunner] = None, codebook: Optional[Codebook] = None) -> OutageEstimate:
    """Fraction of trials with received SINR below upsilon, with a 95% half-width."""
    if not upsilon >= 0:
        raise DomainError(f"upsilon must be non-negative, got {upsilon}")
    runner = runner or SweepRunner(seed)
    cb = codebook or fixed_codebook(p, runner.seed)
    budget = link_budget(p)

    def block(rng, n):
        state = sample_link_state(p, cb, n, rng)
        sinr = state.z_rx / (budget.q_d * state.interference + budget.noise_to_signal)
        return int(np.count_nonzero(sinr < upsilon))

    failures = sum(runner.map_blocks(point, trials, block))
    outage = failures / trials
    return OutageEstimate(outage=outage, half_width=binomial_half_width(outage, trials), trials=trials)


def estimate_goodput_modes(p: SystemParams, trials: int, modes: Sequence[str] = MODES, seed: int = Config.SEED,
                           point: int = 0, runner: Optional[SweepRunner] = None,
                           codebook: Optional[Codebook] = None,
                           tables: Optional[Dict[str, BackoffTable]] = None) -> Dict[str, float]:
    """
    Mean per-trial rate for several modes on common channel draws.

    no_backoff / backoff_* report goodput, throughput reports the supported
    rate of the fed-back beamformer, random_beamforming the supported rate of
    an isotropic one.
    """
    unknown = [m for m in modes if m not in MODES]
    if unknown:
        raise DomainError(f"unknown goodput mode(s): {', '.join(unknown)}")
    runner = runner or SweepRunner(seed)
    cb = codebook or fixed_codebook(p, runner.seed)
    budget = link_budget(p)
    tables = dict(tables or {})
    if 'backoff_exact' in modes and 'backoff_exact' not in tables:
        tables['backoff_exact'] = BackoffTable(p, 'exact', budget.rho_bar)
    if 'backoff_poly' in modes and 'backoff_poly' not in tables:
        tables['backoff_poly'] = BackoffTable(p, 'approx', budget.rho_bar)
    with_random = 'random_beamforming' in modes

    def block(rng, n):
        state = sample_link_state(p, cb, n, rng, with_random=with_random)
        sums = {}
        base = evaluate_trials(state, budget)
        for mode in modes:
            if mode == 'no_backoff':
                sums[mode] = float(np.sum(base.goodput))
            elif mode == 'throughput':
                sums[mode] = float(np.sum(base.rate_supported))
            elif mode == 'random_beamforming':
                sums[mode] = float(np.sum(evaluate_trials(state, budget, random_beamforming=True).rate_supported))
            else:
                sums[mode] = float(np.sum(evaluate_trials(state, budget, tables[mode]).goodput))
        return sums

    blocks = runner.map_blocks(point, trials, block)
    return {mode: sum(b[mode] for b in blocks) / trials for mode in modes}


def estimate_goodput(p: SystemParams, trials: int, mode: str, seed: int = Config.SEED, point: int = 0,
                     runner: Optional[SweepRunner] = None, codebook: Optional[Codebook] = None) -> float:
    return estimate_goodput_modes(p, trials, (mode,), seed, point, runner, codebook)[mode]


def empirical_effective_power(p: SystemParams, trials: int, seed: int = Config.SEED, point: int = 0,
                              runner: Optional[SweepRunner] = None):
    """
    Samples of eta^2 |h[n-d]^H f|^2 and of |h[n]^H f|^2, with a fresh RVQ
    codebook drawn for every trial.

    Returns:
        (proxy, delayed): two arrays of length `trials`
    """
    runner = runner or SweepRunner(seed)
    eta = correlation_coefficient(p.mobility)
    size = 2 ** p.bits

    def block(rng, n):
        h_old = sample_channels(n, p.n_b, rng)
        words = sample_channels(n * size, p.n_b, rng).reshape(n, size, p.n_b)
        words /= np.linalg.norm(words, axis=2, keepdims=True)
        gains = np.abs(np.einsum('tk,tck->tc', np.conj(h_old), words)) ** 2
        best = np.argmax(gains, axis=1)
        f = words[np.arange(n), best]
        h_now = evolve_gauss_markov_batch(h_old, max(eta, 0.0), rng)
        return eta ** 2 * gains[np.arange(n), best], effective_power_batch(h_now, f)

    blocks = runner.map_blocks(point, trials, block)
    return np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])


def empirical_cdf(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    ordered = np.sort(np.asarray(samples, dtype=float))
    return np.searchsorted(ordered, grid, side='right') / ordered.size


def rate_gap_db(snr_db: Sequence[float], rate_ref: Sequence[float], rate_other: Sequence[float],
                levels: int = 5) -> float:
    """
    Mean horizontal distance (dB) from the reference rate curve to the other
    one, taken at rates in the middle half of the range both curves cover.
    """
    snr = np.asarray(snr_db, dtype=float)
    ref = np.maximum.accumulate(np.asarray(rate_ref, dtype=float))
    other = np.maximum.accumulate(np.asarray(rate_other, dtype=float))
    lo, hi = max(ref[0], other[0]), min(ref[-1], other[-1])
    if not hi > lo:
        raise DomainError("rate curves do not overlap; widen the SNR grid")
    targets = lo + (hi - lo) * np.linspace(0.25, 0.75, levels)
    gap = np.interp(targets, other, snr) - np.interp(targets, ref, snr)
    logging.debug(f"Simulator: rate gap by level {np.round(gap, 3).tolist()}")
    return float(np.mean(gap))
