"""
Femtocell interferer fields: Poisson sampling, pathloss and shot-noise interference.

Positions are relative to the macrocell user at the origin. Points closer than
the exclusion radius d_min are removed (the field is a PPP on the annulus
d_min < r <= radius), which keeps the mean interference finite.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from femtonet.config import Config
from femtonet.errors import DomainError
from femtonet.models import PathlossParams, SystemParams

# Trials per chunk when sampling large batches
_CHUNK_TRIALS = 10000


@dataclass(frozen=True)
class InterfererField:
    positions: np.ndarray
    fading_marks: np.ndarray

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        marks = np.asarray(self.fading_marks, dtype=float).reshape(-1)
        if positions.shape[0] != marks.shape[0]:
            raise DomainError(f"{positions.shape[0]} positions but {marks.shape[0]} fading marks")
        if np.any(marks < 0):
            raise DomainError("fading marks must be non-negative")
        object.__setattr__(self, 'positions', positions)
        object.__setattr__(self, 'fading_marks', marks)

    @property
    def distances(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @property
    def size(self) -> int:
        return self.fading_marks.shape[0]


@dataclass(frozen=True)
class FieldBatch:
    """Fields for many trials at once, flattened; `owner[i]` is the trial of point i."""
    counts: np.ndarray
    distances: np.ndarray
    fading_marks: np.ndarray
    owner: np.ndarray

    @property
    def n_trials(self) -> int:
        return self.counts.shape[0]


def density_for_count(count: float, radius: float) -> float:
    """Density giving `count` points on average inside a disc of the given radius."""
    return count / (math.pi * radius ** 2)


def _check_geometry(density: float, radius: float, d_min: float):
    if density < 0 or not math.isfinite(density):
        raise DomainError(f"density must be finite and non-negative, got {density}")
    if not (radius > d_min > 0):
        raise DomainError(f"need radius > d_min > 0, got radius={radius}, d_min={d_min}")


def _annulus_radii(n: int, radius: float, d_min: float, rng: np.random.Generator) -> np.ndarray:
    # Inverse-CDF draw of the radial coordinate, uniform over the annulus area
    return np.sqrt(d_min ** 2 + rng.random(n) * (radius ** 2 - d_min ** 2))


def sample_ppp_disc(density: float, radius: float, d_min: float, rng: np.random.Generator) -> InterfererField:
    """One homogeneous PPP realization on the annulus, with Exp(1) fading marks."""
    _check_geometry(density, radius, d_min)
    count = rng.poisson(density * math.pi * (radius ** 2 - d_min ** 2))
    r = _annulus_radii(count, radius, d_min, rng)
    phi = rng.random(count) * 2 * math.pi
    marks = rng.exponential(1.0, count)
    return InterfererField(positions=np.column_stack([r * np.cos(phi), r * np.sin(phi)]), fading_marks=marks)


def sample_ppp_annulus_batch(n_trials: int, density: float, radius: float, d_min: float,
                             rng: np.random.Generator) -> FieldBatch:
    """Independent PPP realizations for `n_trials` trials; angles are not drawn."""
    _check_geometry(density, radius, d_min)
    counts = rng.poisson(density * math.pi * (radius ** 2 - d_min ** 2), size=n_trials)
    total = int(counts.sum())
    distances = _annulus_radii(total, radius, d_min, rng)
    marks = rng.exponential(1.0, total)
    owner = np.repeat(np.arange(n_trials), counts)
    return FieldBatch(counts=counts, distances=distances, fading_marks=marks, owner=owner)


def pathloss_ratio(distance: float, p: PathlossParams) -> float:
    """Q_D = rho_f D^alpha_m / rho_m, with rho_f after wall loss."""
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance}")
    return p.rho_f_effective * distance ** p.alpha_m / p.rho_m


def noise_to_signal(p: SystemParams) -> float:
    """N0 / (rho_m D^-alpha_m): the inverse of the user's SNR."""
    return p.noise_power * p.user_distance ** p.pathloss.alpha_m / p.pathloss.rho_m


def interference_power(field: InterfererField, alpha_f: float) -> float:
    """Shot noise sum of D_i^-alpha_f |g_i^H w_i|^2."""
    if field.size == 0:
        return 0.0
    return float(np.sum(field.fading_marks * field.distances ** (-alpha_f)))


def interference_power_batch(batch: FieldBatch, alpha_f: float) -> np.ndarray:
    weights = batch.fading_marks * batch.distances ** (-alpha_f)
    return np.bincount(batch.owner, weights=weights, minlength=batch.n_trials)


def campbell_mean_interference(density: float, alpha_f: float, d_min: float, radius: float,
                               mark_mean: float = 1.0) -> float:
    """Closed-form E[I_f] over the annulus (Campbell's theorem)."""
    if alpha_f <= 2:
        raise DomainError(f"alpha_f must exceed 2, got {alpha_f}")
    _check_geometry(density, radius, d_min)
    return 2 * math.pi * density * mark_mean * (d_min ** (2 - alpha_f) - radius ** (2 - alpha_f)) / (alpha_f - 2)


def rho_bar_from_mean(mean_interference: float, q_d: float, noise_to_signal: float = 0.0) -> float:
    """Transmitter SIR scale 1 / (Q_D E[I_f] + N0/S)."""
    denominator = q_d * mean_interference + noise_to_signal
    if denominator <= 0:
        raise DomainError("rho_bar needs interference or noise; both are zero")
    return 1.0 / denominator


@dataclass(frozen=True)
class LinkBudget:
    q_d: float
    noise_to_signal: float
    mean_interference: float

    @property
    def rho_bar(self) -> float:
        return rho_bar_from_mean(self.mean_interference, self.q_d, self.noise_to_signal)

    @property
    def interference_free(self) -> bool:
        return self.mean_interference == 0.0


def link_budget(p: SystemParams) -> LinkBudget:
    """Pathloss ratio, noise level and Campbell mean interference at the user's distance."""
    mean = 0.0
    if p.density > 0:
        mean = campbell_mean_interference(p.density, p.pathloss.alpha_f, p.pathloss.d_min, p.cell_radius)
    return LinkBudget(
        q_d=pathloss_ratio(p.user_distance, p.pathloss),
        noise_to_signal=noise_to_signal(p),
        mean_interference=mean,
    )


@dataclass(frozen=True)
class RhoBarEstimate:
    rho_bar: float
    rho_bar_campbell: float
    mean_interference: float
    mean_interference_campbell: float
    trials: int

    @property
    def interference_free(self) -> bool:
        return self.mean_interference_campbell == 0.0


def estimate_rho_bar(p: SystemParams, trials: int, rng: np.random.Generator) -> RhoBarEstimate:
    """
    Monte Carlo estimate of rho_bar beside its Campbell closed form.

    With no femtocells the interference-free reference (the user's SNR) is
    returned for both values.
    """
    if trials < 1:
        raise DomainError(f"trials must be at least 1, got {trials}")
    budget = link_budget(p)
    if p.density == 0:
        rho = rho_bar_from_mean(0.0, budget.q_d, budget.noise_to_signal)
        logging.info("Geometry: no femtocells, rho_bar falls back to the noise reference")
        return RhoBarEstimate(rho, rho, 0.0, 0.0, trials)

    total = 0.0
    done = 0
    while done < trials:
        n = min(_CHUNK_TRIALS, trials - done)
        batch = sample_ppp_annulus_batch(n, p.density, p.cell_radius, p.pathloss.d_min, rng)
        total += float(interference_power_batch(batch, p.pathloss.alpha_f).sum())
        done += n
    mean = total / trials

    estimate = RhoBarEstimate(
        rho_bar=rho_bar_from_mean(mean, budget.q_d, budget.noise_to_signal),
        rho_bar_campbell=budget.rho_bar,
        mean_interference=mean,
        mean_interference_campbell=budget.mean_interference,
        trials=trials,
    )
    logging.info(f"Geometry: E[I_f] Monte Carlo {mean:.4e} vs Campbell {budget.mean_interference:.4e} "
                 f"({trials} trials)")
    return estimate


def proxy_radius(density: float, alpha_f: float, theta: float, tolerance: float) -> float:
    """
    Disc radius whose far-field truncation changes -log E[exp(-theta I_f)] by at most `tolerance`.
    """
    if density <= 0 or theta <= 0:
        raise DomainError("proxy_radius needs positive density and theta")
    return (tolerance * (alpha_f - 2) / (2 * math.pi * density * theta)) ** (1.0 / (2 - alpha_f))


def empirical_laplace(theta: float, density: float, alpha_f: float, trials: int,
                      rng: np.random.Generator, d_min: float = 1e-9, tolerance: float = 0.01) -> float:
    """E[exp(-theta I_f)] on a disc large enough to stand in for the infinite plane."""
    if theta < 0:
        raise DomainError(f"theta must be non-negative, got {theta}")
    if theta == 0 or density == 0:
        return 1.0
    radius = max(proxy_radius(density, alpha_f, theta, tolerance), 10 * d_min)
    total = 0.0
    done = 0
    while done < trials:
        n = min(_CHUNK_TRIALS, trials - done)
        batch = sample_ppp_annulus_batch(n, density, radius, d_min, rng)
        total += float(np.exp(-theta * interference_power_batch(batch, alpha_f)).sum())
        done += n
    logging.debug(f"Geometry: Laplace proxy radius {radius:.3g} m for theta={theta}, alpha_f={alpha_f}")
    return total / trials


def void_probability(density: float, area: float) -> float:
    """P(no points in a region of the given area) = exp(-density * area)."""
    if density < 0 or area < 0:
        raise DomainError("density and area must be non-negative")
    return math.exp(-density * area)


def empirical_void_fraction(density: float, radius: float, sub_radius: float, trials: int,
                            rng: np.random.Generator, d_min: float = Config.EXCLUSION_RADIUS) -> float:
    """Fraction of sampled fields with no point in the annulus d_min < r <= sub_radius."""
    if not (d_min < sub_radius <= radius):
        raise DomainError("sub_radius must lie in (d_min, radius]")
    batch = sample_ppp_annulus_batch(trials, density, radius, d_min, rng)
    inside = np.bincount(batch.owner, weights=(batch.distances <= sub_radius).astype(float), minlength=trials)
    return float(np.mean(inside == 0))


def dump_field_csv(field: InterfererField, path: str):
    """Write a sampled field as CSV rows (x, y, mark)."""
    frame = pd.DataFrame({
        'x': field.positions[:, 0],
        'y': field.positions[:, 1],
        'mark': field.fading_marks,
    })
    frame.to_csv(path, index=False)
    logging.info(f"Geometry: wrote {field.size} interferers to {path}")
