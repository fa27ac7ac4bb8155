"""
Parameter types shared by the channel, geometry and analytics services.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

from femtonet.errors import ConfigError, DomainError


@dataclass(frozen=True)
class MobilityParams:
    """Relative velocity, carrier and feedback delay behind the Clarke correlation."""
    velocity: float = 20 / 3.6       # m/s
    carrier_freq: float = 2e9        # Hz
    symbol_duration: float = 1e-3    # s
    delay_frames: int = 2

    def __post_init__(self):
        if not (self.velocity > 0 and self.carrier_freq > 0 and self.symbol_duration > 0):
            raise DomainError("velocity, carrier_freq and symbol_duration must be strictly positive")
        if self.delay_frames < 0 or int(self.delay_frames) != self.delay_frames:
            raise DomainError(f"delay_frames must be a non-negative integer, got {self.delay_frames}")


@dataclass(frozen=True)
class PathlossParams:
    alpha_m: float = 3.8
    alpha_f: float = 3.8
    rho_m: float = 1.0
    rho_f: float = 1.0
    wall_loss_db: float = 5.0
    d_min: float = 1.0

    def __post_init__(self):
        if self.alpha_m <= 2 or self.alpha_f <= 2:
            raise DomainError(f"pathloss exponents must exceed 2 (alpha_m={self.alpha_m}, alpha_f={self.alpha_f})")
        if self.rho_m <= 0 or self.rho_f <= 0:
            raise DomainError("composite gains rho_m and rho_f must be positive")
        if self.d_min <= 0:
            raise DomainError(f"exclusion radius must be positive, got {self.d_min}")

    @property
    def rho_f_effective(self) -> float:
        """Femtocell gain after the indoor-to-outdoor wall partition loss."""
        return self.rho_f * 10 ** (-self.wall_loss_db / 10)


@dataclass(frozen=True)
class SystemParams:
    """The full link and network configuration of one operating point."""
    n_b: int = 4
    n_f: int = 4
    bits: int = 5
    pathloss: PathlossParams = field(default_factory=PathlossParams)
    mobility: MobilityParams = field(default_factory=MobilityParams)
    density: float = 95 / (math.pi * 1000.0 ** 2)   # femtocells per m^2
    cell_radius: float = 1000.0
    user_distance: float = 100.0
    sir_threshold: float = 10 ** 0.5
    noise_power: float = 10 ** (-11.4)
    # Overrides 2^(-B/(N_b-1)) when set (used for delta sweeps)
    quantization_delta: Optional[float] = None

    def __post_init__(self):
        if self.n_b < 2:
            raise DomainError(f"n_b must be at least 2, got {self.n_b}")
        if self.n_f < 1:
            raise DomainError(f"n_f must be at least 1, got {self.n_f}")
        if self.bits < 0:
            raise DomainError(f"bits must be non-negative, got {self.bits}")
        if self.sir_threshold <= 0:
            raise DomainError(f"sir_threshold must be positive, got {self.sir_threshold}")
        if self.density < 0:
            raise DomainError(f"density must be non-negative, got {self.density}")
        if not (0 < self.user_distance <= self.cell_radius):
            raise DomainError(f"user_distance must lie in (0, {self.cell_radius}], got {self.user_distance}")
        if self.cell_radius <= self.pathloss.d_min:
            raise DomainError("cell_radius must exceed the exclusion radius")
        if self.noise_power <= 0:
            raise DomainError("noise_power must be positive")
        if self.quantization_delta is not None and not (0 < self.quantization_delta < 1):
            raise DomainError(f"quantization_delta must lie in (0, 1), got {self.quantization_delta}")

    @property
    def femtocells_per_cell(self) -> float:
        return self.density * math.pi * self.cell_radius ** 2

    def evolve(self, **changes) -> 'SystemParams':
        """Copy with top-level fields replaced; `velocity`/`distance` shortcuts accepted."""
        if 'velocity' in changes:
            changes['mobility'] = replace(self.mobility, velocity=changes.pop('velocity'))
        if 'distance' in changes:
            changes['user_distance'] = changes.pop('distance')
        return replace(self, **changes)



SWEEP_AXES = ('distance', 'snr', 'velocity', 'delta', 'density', 'bits')

EXPERIMENTS = (
    'fig2_cdf',
    'fig3_outage',
    'fig4_density',
    'fig5_goodput_delay',
    'fig6_goodput_interference',
    'fig7_beta_surface',
    'validate_all',
)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: Tuple[float, ...]
    trials_per_point: int = 20000
    seed: int = 42

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError('sweep.axis', f"must be one of {', '.join(SWEEP_AXES)}, got '{self.axis}'")
        if not self.values:
            raise ConfigError('sweep.values', "must not be empty")
        if self.trials_per_point < 1:
            raise ConfigError('sweep.trials_per_point', f"must be at least 1, got {self.trials_per_point}")


@dataclass(frozen=True)
class ExperimentConfig:
    """A resolved experiment request: what to run, with which overrides, and where to write."""
    experiment: str
    params: Dict[str, Any] = field(default_factory=dict)
    sweep: Optional[SweepSpec] = None
    output_dir: str = 'results'
    format: str = 'csv'
    seed: int = 42
    trials: int = 20000
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError('experiment', f"unknown experiment '{self.experiment}'")
        if self.format not in ('csv', 'json'):
            raise ConfigError('format', f"must be csv or json, got '{self.format}'")
        if self.trials < 1:
            raise ConfigError('trials', f"must be at least 1, got {self.trials}")
        if self.threads < 1:
            raise ConfigError('threads', f"must be at least 1, got {self.threads}")

    def sweep_values(self, axis: str, default):
        """Values for `axis`: the configured sweep when it targets this axis, else `default`."""
        if self.sweep is not None and self.sweep.axis == axis:
            return list(self.sweep.values)
        return list(default)

    @property
    def trials_per_point(self) -> int:
        if self.sweep is not None:
            return self.sweep.trials_per_point
        return self.trials

    def to_flat(self) -> Dict[str, Any]:
        """Flat dotted keys, the same shape a config file uses."""
        flat = {
            'experiment': self.experiment,
            'output_dir': self.output_dir,
            'format': self.format,
            'seed': self.seed,
            'trials': self.trials,
            'threads': self.threads,
        }
        for key, value in sorted(self.params.items()):
            flat[f'params.{key}'] = value
        if self.sweep is not None:
            flat['sweep.axis'] = self.sweep.axis
            flat['sweep.values'] = ','.join(repr(float(v)) for v in self.sweep.values)
            flat['sweep.trials_per_point'] = self.sweep.trials_per_point
            flat['sweep.seed'] = self.sweep.seed
        return flat


# Override keys accepted under `params.`; nested fields use their dotted path
_PARAM_CASTS = {
    'n_b': int,
    'n_f': int,
    'bits': int,
    'density': float,
    'femtocells_per_cell': float,
    'cell_radius': float,
    'user_distance': float,
    'sir_threshold': float,
    'sir_threshold_db': float,
    'noise_power': float,
    'quantization_delta': float,
    'pathloss.alpha_m': float,
    'pathloss.alpha_f': float,
    'pathloss.rho_m': float,
    'pathloss.rho_f': float,
    'pathloss.wall_loss_db': float,
    'pathloss.d_min': float,
    'mobility.velocity': float,
    'mobility.velocity_kmh': float,
    'mobility.carrier_freq': float,
    'mobility.symbol_duration': float,
    'mobility.delay_frames': int,
}


def apply_overrides(params: SystemParams, overrides: Dict[str, Any]) -> SystemParams:
    """
    Apply flat `params.*` overrides (without the prefix) to a parameter set.

    Raises:
        ConfigError: unknown key or a value that does not parse.
    """
    top, pathloss, mobility = {}, {}, {}
    for key, raw in overrides.items():
        if key not in _PARAM_CASTS:
            raise ConfigError(f'params.{key}', "unknown parameter")
        try:
            value = _PARAM_CASTS[key](float(raw)) if _PARAM_CASTS[key] is int else float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f'params.{key}', f"cannot parse '{raw}'")
        if key.startswith('pathloss.'):
            pathloss[key.split('.', 1)[1]] = value
        elif key == 'mobility.velocity_kmh':
            mobility['velocity'] = value / 3.6
        elif key.startswith('mobility.'):
            mobility[key.split('.', 1)[1]] = value
        elif key == 'sir_threshold_db':
            top['sir_threshold'] = 10 ** (value / 10)
        elif key == 'femtocells_per_cell':
            top['_count'] = value
        else:
            top[key] = value

    count = top.pop('_count', None)
    try:
        if pathloss:
            top['pathloss'] = replace(params.pathloss, **pathloss)
        if mobility:
            top['mobility'] = replace(params.mobility, **mobility)
        resolved = replace(params, **top)
        if count is not None:
            resolved = replace(resolved, density=count / (math.pi * resolved.cell_radius ** 2))
    except DomainError as e:
        raise ConfigError('params', str(e))
    return resolved
