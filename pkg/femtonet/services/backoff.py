"""
Optimal rate backoff: the beta in [0, 1] maximizing rate times success probability
for a given transmitter-side effective channel power.

`upsilon` throughout is that power z = |h[n-d]^H f|^2. The transmitted SIR is
beta * rho_bar * z. Without interference success means the delayed power
exceeds beta * z; with interference the shot-noise success probability at
beta * rho_bar * z applies.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize

from femtonet.errors import BracketError, DomainError
from femtonet.models import SystemParams
from femtonet.services.analytics import (
    LN2,
    DerivedConstants,
    ccdf_no_interference,
    derive_constants,
    effective_power_pdf,
    effective_power_quantile,
    success_probability,
    success_probability_slope,
)
from femtonet.services.geometry import link_budget
from femtonet.utils.mathkit import find_root_bracketed, find_sign_change_roots, poly_real_roots

METHODS = ('exact_root', 'polynomial_approx', 'quadratic_approx', 'grid_oracle')

# Stationary-point scan: dense near zero where the interference objective is steep
_SCAN_GRID = np.unique(np.concatenate([np.geomspace(1e-6, 1e-2, 60), np.linspace(1e-2, 1.0, 300)]))


@dataclass(frozen=True)
class BackoffSolution:
    beta_star: float
    method: str
    objective_value: float
    fallback: bool = False

    def __post_init__(self):
        if not (0.0 <= self.beta_star <= 1.0):
            raise DomainError(f"beta_star must lie in [0, 1], got {self.beta_star}")
        if self.method not in METHODS:
            raise DomainError(f"unknown backoff method '{self.method}'")


def _rho(p: SystemParams, rho_bar: Optional[float]) -> float:
    return rho_bar if rho_bar is not None else link_budget(p).rho_bar


def _check(beta, upsilon):
    b = np.asarray(beta, dtype=float)
    if np.any(b < 0) or np.any(b > 1):
        raise DomainError("beta must lie in [0, 1]")
    if not upsilon > 0:
        raise DomainError(f"upsilon must be positive, got {upsilon}")
    return b


def objective(beta, upsilon: float, p: SystemParams, interference: bool,
              rho_bar: Optional[float] = None, k: Optional[DerivedConstants] = None):
    """log2(1 + beta rho_bar z) times the success probability at that backoff."""
    b = _check(beta, upsilon)
    k = k or derive_constants(p)
    rho = _rho(p, rho_bar)
    sir = b * rho * upsilon
    rate = np.log1p(sir) / LN2
    if interference:
        prob = success_probability(sir, p, k)
    else:
        prob = ccdf_no_interference(b * upsilon, k)
    out = rate * prob
    return float(out) if np.ndim(beta) == 0 else out


def objective_derivative(beta, upsilon: float, p: SystemParams, interference: bool,
                         rho_bar: Optional[float] = None, k: Optional[DerivedConstants] = None):
    """Analytic d(objective)/d(beta)."""
    b = _check(beta, upsilon)
    k = k or derive_constants(p)
    rho = _rho(p, rho_bar)
    sir = b * rho * upsilon
    rate = np.log1p(sir) / LN2
    rate_slope = rho * upsilon / (LN2 * (1.0 + sir))
    if interference:
        prob = success_probability(sir, p, k)
        prob_slope = success_probability_slope(sir, p, k) * rho * upsilon
    else:
        prob = ccdf_no_interference(b * upsilon, k)
        prob_slope = -effective_power_pdf(b * upsilon, k) * upsilon
    out = rate_slope * prob + rate * prob_slope
    return float(out) if np.ndim(beta) == 0 else out


def beta_star_grid_oracle(upsilon: float, p: SystemParams, interference: bool, grid_points: int = 400,
                          rho_bar: Optional[float] = None) -> BackoffSolution:
    """Uniform-grid maximization refined by bounded scalar search around the best point."""
    if grid_points < 100:
        raise DomainError(f"grid_points must be at least 100, got {grid_points}")
    k = derive_constants(p)
    rho = _rho(p, rho_bar)
    grid = np.linspace(0.0, 1.0, grid_points)
    values = objective(grid, upsilon, p, interference, rho, k)
    i = int(np.argmax(values))
    best_beta, best_value = float(grid[i]), float(values[i])

    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    refined = optimize.minimize_scalar(
        lambda b: -objective(b, upsilon, p, interference, rho, k),
        bounds=(lo, hi), method='bounded', options={'xatol': 1e-8},
    )
    if refined.success and -refined.fun > best_value:
        best_beta, best_value = float(refined.x), float(-refined.fun)
    return BackoffSolution(beta_star=best_beta, method='grid_oracle', objective_value=best_value)


def _solve_stationary(upsilon: float, p: SystemParams, interference: bool,
                      rho_bar: Optional[float]) -> BackoffSolution:
    # Every stationary point plus the no-backoff boundary; the global maximizer wins
    k = derive_constants(p)
    rho = _rho(p, rho_bar)
    roots = find_sign_change_roots(
        lambda b: objective_derivative(b, upsilon, p, interference, rho, k), _SCAN_GRID)
    candidates = [min(max(r, 0.0), 1.0) for r in roots] + [1.0]
    values = [objective(b, upsilon, p, interference, rho, k) for b in candidates]
    i = int(np.argmax(values))
    return BackoffSolution(beta_star=candidates[i], method='exact_root', objective_value=values[i])


def beta_star_delay(upsilon: float, p: SystemParams, rho_bar: Optional[float] = None) -> BackoffSolution:
    """Exact optimal backoff without interference (stationarity solved by bracketing)."""
    return _solve_stationary(upsilon, p, False, rho_bar)


def _delay_poly_parts(upsilon: float, p: SystemParams, k: DerivedConstants, s: float):
    # kappa2 -> kappa1 turns the success probability into exp(-scale beta) T(beta)
    scale = upsilon / k.kappa1
    t = Polynomial([k.c2 + k.a2] + [-k.c1 * k.series[j] * scale ** j for j in range(1, p.n_b - 1)])
    return s * t, Polynomial([1.0, s]) * (t.deriv() - scale * t)


def beta_star_delay_poly(upsilon: float, p: SystemParams, rho_bar: Optional[float] = None) -> BackoffSolution:
    """
    Large-codebook approximation of the delay-only backoff (kappa2 -> kappa1).

    The success probability becomes exp(-k beta) T(beta) with k = z / kappa1 and
    T a polynomial of degree N_b - 2. With s = rho_bar z and L = ln(1 + beta s)
    the stationarity condition reads

        s T(beta) + L (1 + beta s) (T'(beta) - k T(beta)) = 0,

    a polynomial of degree N_b - 1 in beta for fixed L. Its largest positive root
    is taken and L is matched to that root by a scalar bracket search. The
    approximate success probability falls faster than the exact one, so for
    N_b = 2 the result never exceeds the exact beta*.
    """
    if not upsilon > 0:
        raise DomainError(f"upsilon must be positive, got {upsilon}")
    k = derive_constants(p)
    rho = _rho(p, rho_bar)
    s = rho * upsilon
    rate_free, rate_scaled = _delay_poly_parts(upsilon, p, k, s)

    def root_for(level: float) -> Optional[float]:
        roots = [r for r in poly_real_roots(rate_free + level * rate_scaled, window=None) if r > 0]
        return min(max(roots), 1.0) if roots else None

    def mismatch(level: float) -> float:
        beta = root_for(level)
        return (math.log1p(beta * s) if beta is not None else 0.0) - level

    # mismatch(hi) <= 0 always; a missing root at hi still closes the bracket
    hi = math.log1p(s)
    beta = root_for(hi)
    if beta is None or beta < 1.0:
        lo = hi
        for _ in range(80):
            lo *= 0.5
            if mismatch(lo) > 0:
                break
        try:
            beta = root_for(find_root_bracketed(mismatch, lo, hi))
        except BracketError:
            beta = None

    if beta is None:
        logging.warning(f"Backoff: no usable polynomial root at z={upsilon:.4g}; using grid oracle")
        oracle = beta_star_grid_oracle(upsilon, p, False, rho_bar=rho)
        return BackoffSolution(oracle.beta_star, 'grid_oracle', oracle.objective_value, fallback=True)
    return BackoffSolution(beta_star=beta, method='polynomial_approx',
                           objective_value=objective(beta, upsilon, p, False, rho, k))


def _quadratic_candidates(upsilon: float, p: SystemParams, k: DerivedConstants, rho: float):
    # A1 d w^2 + d (c2 - A1 (1 + ln 2) + A2) w - (A2 + c2) / ln 2 = 0, w = omega1 at the backed-off SIR
    coefficients = [
        -(k.a2 + k.c2) / LN2,
        k.delta_f * (k.c2 - k.a1 * (1 + LN2) + k.a2),
        k.a1 * k.delta_f,
    ]
    betas = []
    for w in poly_real_roots(coefficients, window=None):
        if w <= 0:
            continue
        beta = (w / (p.density * k.c_f)) ** (1.0 / k.delta_f) * k.kappa1 / (rho * upsilon * k.q_d)
        if 0 < beta <= 1:
            betas.append(beta)
    return betas


def beta_star_interference(upsilon: float, p: SystemParams, rho_bar: Optional[float] = None,
                           method: str = 'exact') -> BackoffSolution:
    """
    Optimal backoff under femtocell interference.

    method='exact' brackets the stationarity condition of the full objective;
    method='quadratic' solves the second-order condition in omega1 and maps it
    back to beta, falling back to the grid oracle when no root is feasible.
    """
    if p.density <= 0:
        raise DomainError("beta_star_interference needs a positive femtocell density")
    if not upsilon > 0:
        raise DomainError(f"upsilon must be positive, got {upsilon}")
    if method == 'exact':
        return _solve_stationary(upsilon, p, True, rho_bar)
    if method != 'quadratic':
        raise DomainError(f"unknown method '{method}'")

    k = derive_constants(p)
    rho = _rho(p, rho_bar)
    betas = _quadratic_candidates(upsilon, p, k, rho)
    if not betas:
        logging.warning(f"Backoff: quadratic roots infeasible at z={upsilon:.4g}; using grid oracle")
        oracle = beta_star_grid_oracle(upsilon, p, True, rho_bar=rho)
        return BackoffSolution(oracle.beta_star, 'grid_oracle', oracle.objective_value, fallback=True)
    values = [objective(b, upsilon, p, True, rho, k) for b in betas]
    i = int(np.argmax(values))
    return BackoffSolution(beta_star=betas[i], method='quadratic_approx', objective_value=values[i])


def solve_beta_star(upsilon: float, p: SystemParams, method: str = 'exact',
                    rho_bar: Optional[float] = None) -> BackoffSolution:
    """Dispatch on interference: 'exact' or 'approx' (polynomial / quadratic)."""
    if method not in ('exact', 'approx'):
        raise DomainError(f"method must be 'exact' or 'approx', got '{method}'")
    if p.density > 0:
        return beta_star_interference(upsilon, p, rho_bar, 'exact' if method == 'exact' else 'quadratic')
    if method == 'exact':
        return beta_star_delay(upsilon, p, rho_bar)
    return beta_star_delay_poly(upsilon, p, rho_bar)


# CDF levels of the transmitter-side power at which beta*(z) is tabulated
_TABLE_LEVELS = np.concatenate([
    np.geomspace(1e-4, 0.05, 12),
    np.linspace(0.08, 0.92, 25),
    1.0 - np.geomspace(0.05, 1e-6, 12),
])


class BackoffTable:
    """beta*(z) tabulated on quantiles of the transmitter-side power, linearly interpolated."""

    def __init__(self, p: SystemParams, method: str = 'exact', rho_bar: Optional[float] = None):
        self.method = method
        self.rho_bar = _rho(p, rho_bar)
        k_tx = derive_constants(p, eta=1.0)
        self.z = np.array([effective_power_quantile(q, k_tx) for q in _TABLE_LEVELS])
        solutions = [solve_beta_star(z, p, method, self.rho_bar) for z in self.z]
        self.beta = np.array([s.beta_star for s in solutions])
        self.fallbacks = sum(s.fallback for s in solutions)
        if self.fallbacks:
            logging.warning(f"BackoffTable: {self.fallbacks} of {len(solutions)} points fell back to the grid oracle")
        logging.debug(f"BackoffTable: {method} table over z in [{self.z[0]:.3g}, {self.z[-1]:.3g}]")

    def __call__(self, z):
        out = np.interp(z, self.z, self.beta)
        return float(out) if np.ndim(z) == 0 else out
