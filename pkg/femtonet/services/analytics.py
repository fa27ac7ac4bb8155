"""
Closed forms for the macrocell link: effective channel power distribution,
success probability under Poisson femtocell interference, maximum femtocell
density and the average goodput integral.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, stats

from femtonet.config import Config
from femtonet.errors import DomainError, InfeasibleError, NumericError
from femtonet.models import PathlossParams, SystemParams
from femtonet.services.channel import correlation_coefficient
from femtonet.services.codebook import gersho_delta
from femtonet.services.geometry import link_budget, noise_to_signal, pathloss_ratio
from femtonet.utils.mathkit import find_root_bracketed, gamma_fn, lambert_w

ArrayLike = Union[float, np.ndarray]

LN2 = math.log(2.0)

# Upper quadrature limit for the goodput integral, as a CDF level
GOODPUT_QUANTILE = 1 - 1e-8
GOODPUT_EPSREL = 1e-6


@dataclass(frozen=True)
class DerivedConstants:
    """Every constant the closed forms need for one operating point."""
    n_b: int
    eta: float
    delta: float
    delta_f: float
    q_d: float
    kappa1: float
    kappa2: float
    c1: float
    c2: float
    a1: float
    a2: float
    c_f: float
    series: Tuple[float, ...]
    # Coefficient of the omega1^2 e^-omega1 term the first-order expansion drops
    a3: float = 0.0

    @property
    def ratio(self) -> float:
        """omega2 / omega1 = (kappa1 / kappa2)^delta_f."""
        return (1.0 - self.delta) ** self.delta_f


def _falling(x: float, j: int) -> float:
    """x (x-1) ... (x-j+1)."""
    out = 1.0
    for i in range(j):
        out *= x - i
    return out


def _pair_moment(x: float, j: int) -> float:
    """Two-block part of the j-th shot-noise moment: 1/2 sum_i C(j, i) (x)_i (x)_(j-i)."""
    return 0.5 * sum(math.comb(j, i) * _falling(x, i) * _falling(x, j - i) for i in range(1, j))


def shot_noise_constant(alpha_f: float) -> float:
    """C_f = (2 pi / alpha_f) Gamma(2/alpha_f) Gamma(1 - 2/alpha_f)."""
    if alpha_f <= 2:
        raise DomainError(f"alpha_f must exceed 2, got {alpha_f}")
    delta_f = 2.0 / alpha_f
    return 2 * math.pi / alpha_f * gamma_fn(delta_f) * gamma_fn(1 - delta_f)


@lru_cache(maxsize=1024)
def derive_constants(p: SystemParams, eta: Optional[float] = None,
                     scale: float = Config.KAPPA_SCALE) -> DerivedConstants:
    """
    Constant bundle for `p`; `eta` overrides the Clarke correlation (eta=1 gives
    the transmitter-side, undelayed distribution).
    """
    eta = correlation_coefficient(p.mobility) if eta is None else float(eta)
    if eta == 0:
        raise DomainError("eta = 0 leaves no channel knowledge; the power distribution degenerates")
    delta = p.quantization_delta if p.quantization_delta is not None else gersho_delta(p.n_b, p.bits)
    if delta >= 1:
        raise DomainError(f"quantization loss delta must be below 1 (bits={p.bits})")

    m = p.n_b - 1
    delta_f = 2.0 / p.pathloss.alpha_f
    kappa1 = 2 * eta ** 2 * (1 - delta) * scale
    kappa2 = 2 * eta ** 2 * scale
    c2 = delta ** (-m)
    c1 = (1 - delta) * c2

    # S(u) = sum_j coef_j u^j with coef_j = (sum_{i=j}^{m-1} delta^i) / j!
    series = tuple(sum(delta ** i for i in range(j, m)) / math.factorial(j) for j in range(m))
    a2 = -c1 * series[0]
    a1 = c1 * sum(series[j] * (-1) ** j * _falling(delta_f, j) for j in range(1, m))
    a3 = -c1 * sum(series[j] * (-1) ** j * _pair_moment(delta_f, j) for j in range(2, m))

    if abs(a2 + c2 - 1.0) > 1e-9 * c2:
        raise NumericError("A2 + c2 deviates from 1", state={'a2': a2, 'c2': c2})

    return DerivedConstants(
        n_b=p.n_b,
        eta=eta,
        delta=delta,
        delta_f=delta_f,
        q_d=pathloss_ratio(p.user_distance, p.pathloss),
        kappa1=kappa1,
        kappa2=kappa2,
        c1=c1,
        c2=c2,
        a1=a1,
        a2=a2,
        c_f=shot_noise_constant(p.pathloss.alpha_f),
        series=series,
        a3=a3,
    )


def _as_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must be non-negative")
    return arr


def _scalar_or_array(arr: np.ndarray, like) -> ArrayLike:
    return float(arr) if np.ndim(like) == 0 else arr


def _check_n_b(k: DerivedConstants, n_b: Optional[int]):
    if n_b is not None and n_b != k.n_b:
        raise DomainError(f"constants were derived for N_b={k.n_b}, not {n_b}")


def _raw_cdf(z: np.ndarray, k: DerivedConstants) -> np.ndarray:
    u = z / k.kappa1
    return 1.0 - k.c2 * np.exp(-z / k.kappa2) + k.c1 * np.exp(-u) * npoly.polyval(u, k.series)


def effective_power_cdf(z: ArrayLike, k: DerivedConstants, n_b: Optional[int] = None) -> ArrayLike:
    """Mixture CDF F_Z(z) of the delayed, quantized effective channel power."""
    _check_n_b(k, n_b)
    zz = _as_array(z, 'z')
    out = np.clip(_raw_cdf(zz, k), 0.0, 1.0)
    out = np.where(zz == 0, 0.0, out)
    return _scalar_or_array(out, z)


def ccdf_no_interference(z: ArrayLike, k: DerivedConstants, n_b: Optional[int] = None) -> ArrayLike:
    """1 - F_Z(z): the success probability of the interference-free link at power threshold z."""
    _check_n_b(k, n_b)
    zz = _as_array(z, 'z')
    out = 1.0 - np.clip(_raw_cdf(zz, k), 0.0, 1.0)
    out = np.where(zz == 0, 1.0, out)
    return _scalar_or_array(out, z)


def effective_power_pdf(z: ArrayLike, k: DerivedConstants) -> ArrayLike:
    zz = _as_array(z, 'z')
    u = zz / k.kappa1
    series_d = npoly.polyder(k.series) if len(k.series) > 1 else [0.0]
    out = (k.c2 / k.kappa2) * np.exp(-zz / k.kappa2) + \
        (k.c1 / k.kappa1) * np.exp(-u) * (npoly.polyval(u, series_d) - npoly.polyval(u, k.series))
    return _scalar_or_array(np.maximum(out, 0.0), z)


def effective_power_mean(k: DerivedConstants) -> float:
    return (k.n_b - 1) * k.kappa1 + k.kappa2


def effective_power_quantile(q: float, k: DerivedConstants) -> float:
    """Inverse of F_Z by bracketed root finding."""
    if not (0 <= q < 1):
        raise DomainError(f"quantile level must lie in [0, 1), got {q}")
    if q == 0:
        return 0.0
    hi = max(effective_power_mean(k), 1e-12)
    while effective_power_cdf(hi, k) < q:
        hi *= 2.0
    return find_root_bracketed(lambda z: effective_power_cdf(z, k) - q, 0.0, hi)


def sample_effective_power_model(k: DerivedConstants, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws whose CDF is exactly F_Z: Gamma(N_b-1, kappa1) plus Exp(kappa2)."""
    return rng.gamma(k.n_b - 1, k.kappa1, size) + rng.exponential(k.kappa2, size)


def laplace_interference(theta: ArrayLike, density: float, alpha_f: float) -> ArrayLike:
    """E[exp(-theta I_f)] = exp(-density C_f theta^(2/alpha_f)) over the infinite plane."""
    th = _as_array(theta, 'theta')
    if density < 0:
        raise DomainError(f"density must be non-negative, got {density}")
    out = np.exp(-density * shot_noise_constant(alpha_f) * th ** (2.0 / alpha_f))
    return _scalar_or_array(out, theta)


def _omega_per_density(upsilon, k: DerivedConstants):
    return k.c_f * (upsilon * k.q_d / k.kappa1) ** k.delta_f


def _success_from_omega(w1, k: DerivedConstants):
    # 1 + A2 (e^-w1 - 1) + c2 (e^-w2 - 1) + A1 w1 e^-w1 ; uses A2 + c2 = 1
    w2 = k.ratio * w1
    return 1.0 + k.a2 * np.expm1(-w1) + k.c2 * np.expm1(-w2) + k.a1 * w1 * np.exp(-w1)


def _success_slope_from_omega(w1, k: DerivedConstants):
    r = k.ratio
    return k.a1 * (1.0 - w1) * np.exp(-w1) - k.a2 * np.exp(-w1) - k.c2 * r * np.exp(-r * w1)


@dataclass(frozen=True)
class SuccessDetail:
    probability: float
    omega1: float
    omega2: float
    truncation: float
    expansion_valid: bool


def success_probability(upsilon: ArrayLike, p: SystemParams,
                        k: Optional[DerivedConstants] = None) -> ArrayLike:
    """P[SIR >= upsilon] under the first-order shot-noise expansion, clipped to [0, 1]."""
    k = k or derive_constants(p)
    ups = _as_array(upsilon, 'upsilon')
    w1 = p.density * _omega_per_density(ups, k)
    out = np.clip(_success_from_omega(w1, k), 0.0, 1.0)
    return _scalar_or_array(out, upsilon)


def success_probability_slope(upsilon: ArrayLike, p: SystemParams,
                              k: Optional[DerivedConstants] = None) -> ArrayLike:
    """d/d(upsilon) of success_probability; zero where the result is clipped."""
    k = k or derive_constants(p)
    ups = _as_array(upsilon, 'upsilon')
    w1 = p.density * _omega_per_density(ups, k)
    raw = _success_from_omega(w1, k)
    with np.errstate(divide='ignore', invalid='ignore'):
        slope = _success_slope_from_omega(w1, k) * k.delta_f * w1 / ups
    slope = np.where((ups > 0) & (raw > 0) & (raw < 1), slope, 0.0)
    return _scalar_or_array(slope, upsilon)


def truncation_estimate(upsilon: ArrayLike, p: SystemParams, k: Optional[DerivedConstants] = None) -> ArrayLike:
    """
    Size of the leading term the first-order expansion drops, |A3| omega1^2 e^-omega1.

    Zero for N_b <= 3, where the expansion is exact; for N_b = 4 it is the
    whole truncation error.
    """
    k = k or derive_constants(p)
    ups = _as_array(upsilon, 'upsilon')
    w1 = p.density * _omega_per_density(ups, k)
    return _scalar_or_array(abs(k.a3) * w1 ** 2 * np.exp(-w1), upsilon)


def expansion_valid(upsilon: float, p: SystemParams, k: Optional[DerivedConstants] = None,
                    tolerance: float = Config.EXPANSION_TOLERANCE) -> bool:
    """True while omega1 <= 1 and the dropped second-order term stays within `tolerance`."""
    k = k or derive_constants(p)
    w1 = p.density * _omega_per_density(upsilon, k)
    return bool(w1 <= 1.0 and truncation_estimate(upsilon, p, k) <= tolerance)


def success_probability_detail(upsilon: float, p: SystemParams) -> SuccessDetail:
    k = derive_constants(p)
    w1 = p.density * _omega_per_density(upsilon, k)
    detail = SuccessDetail(
        probability=float(success_probability(upsilon, p, k)),
        omega1=float(w1),
        omega2=float(k.ratio * w1),
        truncation=float(truncation_estimate(upsilon, p, k)),
        expansion_valid=expansion_valid(upsilon, p, k),
    )
    if not detail.expansion_valid:
        logging.warning(f"Analytics: omega1={w1:.3f} at D={p.user_distance:.1f} m drops a second-order term "
                        f"of {detail.truncation:.3f}; first-order expansion outside its validity range")
    return detail


@dataclass(frozen=True)
class DensityResult:
    """Largest admissible femtocell density, exact and Lambert-W closed form."""
    exact: float
    closed_form: float
    closed_form_valid: bool
    capped: bool
    omega: float
    branch: str

    def femtocells(self, cell_radius: float, closed_form: bool = False) -> float:
        density = self.closed_form if closed_form else self.exact
        return density * math.pi * cell_radius ** 2


def _closed_form_omegas(epsilon: float, a1: float) -> Dict[str, float]:
    """omega solving (A1 omega + 1) e^-omega = 1 - epsilon, keyed by Lambert W branch."""
    target = 1.0 - epsilon
    if a1 == 0:
        return {'none': -math.log(target)}
    try:
        x = -target / (a1 * math.exp(1.0 / a1))
    except OverflowError:
        x = math.inf
    if not math.isfinite(x):
        # exp(1/A1) underflows for tiny |A1|; solve the same approximate equation directly
        f = lambda w: (a1 * w + 1.0) * math.exp(-w) - target
        return {'numeric': find_root_bracketed(f, 0.0, -math.log(target) + 1.0)}
    branches = ['principal'] if x >= 0 else ['principal', 'lower']
    out = {}
    for branch in branches:
        try:
            out[branch] = -lambert_w(x, branch) - 1.0 / a1
        except DomainError:
            continue
    return out


def max_density(epsilon: float, upsilon: float, p: SystemParams,
                cap: float = Config.DENSITY_CAP, scan_points: int = 4001) -> DensityResult:
    """
    Largest density with success probability at least 1 - epsilon.

    The exact value is the last downward crossing of 1 - epsilon by the
    success probability (scanned in omega, refined by Brent). The closed form
    sets kappa1 = kappa2 and inverts with Lambert W; among the branch
    candidates only nonnegative densities meeting the target under the exact
    expression survive, and the largest is kept.

    Raises:
        DomainError: epsilon outside (0, 1) or upsilon not positive
        InfeasibleError: the target fails even without femtocells
    """
    if not (0 < epsilon < 1):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not upsilon > 0:
        raise DomainError(f"upsilon must be positive, got {upsilon}")
    k = derive_constants(p)
    target = 1.0 - epsilon
    per_density = float(_omega_per_density(upsilon, k))

    exact_p = lambda w: float(np.clip(_success_from_omega(w, k), 0.0, 1.0))
    if exact_p(0.0) < target:
        raise InfeasibleError(f"success target {target:.4f} unreachable even with no femtocells")

    # Beyond omega_hi the success probability is below c2 e^(-r omega) < target
    omega_hi = 1.01 * math.log(k.c2 / target) / k.ratio + 1e-9
    grid = np.linspace(0.0, omega_hi, scan_points)
    gaps = np.clip(_success_from_omega(grid, k), 0.0, 1.0) - target
    above = np.nonzero(gaps >= 0)[0]
    last = int(above[-1])
    if last == len(grid) - 1:
        omega = float(grid[-1])
    else:
        omega = find_root_bracketed(lambda w: exact_p(w) - target, grid[last], grid[last + 1])

    exact = omega / per_density
    capped = exact > cap
    if capped:
        logging.info(f"Analytics: density {exact:.3e} above cap, returning {cap}")
        exact = cap

    survivors = []
    for branch, w in _closed_form_omegas(epsilon, k.a1).items():
        if w < 0 or exact_p(w) < target - 1e-9:
            continue
        survivors.append((w, branch))
    if survivors:
        w_closed, branch = max(survivors)
        closed = min(w_closed / per_density, cap)
    else:
        logging.warning(f"Analytics: no Lambert W branch meets the target at epsilon={epsilon}")
        w_closed, branch, closed = 0.0, 'none', 0.0

    return DensityResult(
        exact=exact,
        closed_form=closed,
        closed_form_valid=bool(survivors),
        capped=capped,
        omega=omega,
        branch=branch,
    )


BackoffSpec = Union[None, float, Callable[[np.ndarray], np.ndarray]]


def avg_goodput_analytic(p: SystemParams, use_backoff: BackoffSpec = None, force_success: bool = False,
                         rho_bar: Optional[float] = None) -> float:
    """
    Average goodput: integral of rate times success probability over the
    transmitter-side effective power density (eta = 1).

    Args:
        p: operating point
        use_backoff: None (no backoff), a constant beta, or a callable beta(z)
        force_success: treat every transmission as successful
        rho_bar: transmitter SIR scale; defaults to the Campbell link budget

    Raises:
        NumericError: the quadrature did not reach the requested tolerance
    """
    if use_backoff is not None and not callable(use_backoff) and float(use_backoff) == 0:
        return 0.0
    k_tx = derive_constants(p, eta=1.0)
    k = derive_constants(p)
    rho = rho_bar if rho_bar is not None else link_budget(p).rho_bar
    interference = p.density > 0

    def beta_of(z):
        if use_backoff is None:
            return 1.0
        if callable(use_backoff):
            return float(use_backoff(z))
        return float(use_backoff)

    def integrand(z):
        beta = beta_of(z)
        rate = math.log2(1.0 + beta * rho * z)
        if force_success:
            prob = 1.0
        elif interference:
            prob = success_probability(beta * rho * z, p, k)
        else:
            prob = ccdf_no_interference(beta * z, k)
        return rate * prob * effective_power_pdf(z, k_tx)

    upper = effective_power_quantile(GOODPUT_QUANTILE, k_tx)
    result = integrate.quad(integrand, 0.0, upper, epsrel=GOODPUT_EPSREL, limit=200, full_output=1)
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > 1e-4 * max(abs(value), 1e-12):
        raise NumericError(f"goodput quadrature did not converge: {result[3]}",
                           state={'value': value, 'abserr': abserr, 'upper': upper})
    return float(value)


def snr_db(p: SystemParams) -> float:
    """User SNR rho_m D^-alpha_m / N0 in dB."""
    return -10 * math.log10(noise_to_signal(p))


def distance_for_snr(snr_db_value: float, pathloss: PathlossParams,
                     noise_power: float = Config.NOISE_POWER) -> float:
    """User distance D at which rho_m D^-alpha_m / N0 equals the given SNR."""
    return (pathloss.rho_m / (noise_power * 10 ** (snr_db_value / 10))) ** (1.0 / pathloss.alpha_m)


def ks_distance(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov distance between samples and an analytic CDF."""
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)


def fit_scale_convention(samples: np.ndarray, p: SystemParams,
                         scales: Sequence[float] = (0.5, 1.0)) -> Tuple[float, Dict[float, float]]:
    """
    Pick the kappa scale whose F_Z best fits empirical eta^2 |h^H f|^2 samples.

    Returns:
        (best scale, KS distance per scale)
    """
    distances = {}
    for scale in scales:
        k = derive_constants(p, scale=scale)
        distances[scale] = ks_distance(samples, lambda z, k=k: effective_power_cdf(z, k))
    best = min(distances, key=distances.get)
    logging.info(f"Analytics: KS by kappa scale {distances}; best {best}")
    return best, distances
