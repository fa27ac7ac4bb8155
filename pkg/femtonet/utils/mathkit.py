"""
Special functions and scalar solvers used by the closed forms.

Thin, validated wrappers over scipy.special / scipy.optimize and numpy's
polynomial class. Every wrapper rejects inputs outside its domain with
DomainError instead of returning nan.
"""
import logging
import math
from typing import Callable, List, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize, special

from femtonet.errors import BracketError, DomainError, NumericError

# Tolerances (overridable per call)
ROOT_FTOL = 1e-10
ROOT_XTOL = 1e-12
IMAG_TOL = 1e-8
ROOT_WINDOW = 10.0
LAMBERT_TOL = 1e-12

_INV_E = math.exp(-1.0)

PolynomialLike = Union[Polynomial, Sequence[float]]


def bessel_j0(x: float) -> float:
    """Bessel function of the first kind, order zero."""
    if not math.isfinite(x):
        raise DomainError(f"bessel_j0 requires a finite argument, got {x}")
    return float(special.j0(x))


def gamma_fn(x: float) -> float:
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"gamma_fn is defined here for x > 0 only, got {x}")
    return float(special.gamma(x))


def lambert_w(x: float, branch: str = 'principal', tol: float = LAMBERT_TOL) -> float:
    """
    Real Lambert W: the w with w * exp(w) = x.

    Args:
        x: argument, at least -1/e
        branch: 'principal' (W0, w >= -1) or 'lower' (W-1, w <= -1, needs x < 0)
        tol: residual target for the Halley polish

    Returns:
        float: W(x) on the requested branch
    """
    if branch not in ('principal', 'lower'):
        raise DomainError(f"unknown Lambert W branch '{branch}'")
    if not math.isfinite(x):
        raise DomainError(f"lambert_w requires a finite argument, got {x}")
    if x < -_INV_E:
        # Rounding of -1/e itself lands a hair below the branch point
        if x < -_INV_E - 1e-15:
            raise DomainError(f"lambert_w undefined for x < -1/e, got {x}")
        return -1.0
    if branch == 'lower' and x >= 0:
        raise DomainError(f"lower Lambert W branch requires -1/e <= x < 0, got {x}")

    w = float(special.lambertw(x, k=0 if branch == 'principal' else -1).real)

    # Halley steps, skipped at the branch point where the derivative vanishes
    for _ in range(4):
        ew = math.exp(w)
        residual = w * ew - x
        if abs(residual) <= tol or abs(w + 1.0) < 1e-7:
            break
        wp1 = w + 1.0
        w -= residual / (ew * wp1 - (w + 2.0) * residual / (2.0 * wp1))
    return w


def make_polynomial(coefficients: Sequence[float]) -> Polynomial:
    """Polynomial from ascending-degree coefficients, trailing zeros trimmed."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.ndim != 1 or coefficients.size == 0:
        raise DomainError("polynomial coefficients must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(coefficients)):
        raise DomainError("polynomial coefficients must be finite")
    return Polynomial(coefficients).trim()


def poly_real_roots(p: PolynomialLike, window: float = ROOT_WINDOW,
                    imag_tol: float = IMAG_TOL) -> List[float]:
    """
    Real roots of a polynomial, ascending.

    Complex roots with |Im| <= imag_tol (relative to the root size) are kept as
    real and polished with a few Newton steps. Pass window=None to keep roots
    of any magnitude.
    """
    poly = p.trim() if isinstance(p, Polynomial) else make_polynomial(p)
    if poly.degree() < 1:
        raise DomainError("poly_real_roots requires degree >= 1")

    deriv = poly.deriv()
    roots = []
    for r in np.atleast_1d(poly.roots()):
        if abs(r.imag) > imag_tol * max(1.0, abs(r)):
            continue
        x = float(r.real)
        for _ in range(3):
            slope = deriv(x)
            if slope == 0:
                break
            step = poly(x) / slope
            x -= step
            if abs(step) <= 1e-15 * max(1.0, abs(x)):
                break
        if window is None or abs(x) <= window:
            roots.append(x)
    return sorted(roots)


def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float,
                        xtol: float = ROOT_XTOL, maxiter: int = 200) -> float:
    """
    Root of a continuous scalar function inside a sign-changing bracket (Brent).

    Raises:
        BracketError: f(lo) and f(hi) have the same strict sign
        NumericError: Brent's method did not converge; `state` holds the bracket
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        raise BracketError(f"non-finite function value on bracket [{lo}, {hi}]")
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}")

    root, info = optimize.brentq(f, lo, hi, xtol=xtol, maxiter=maxiter,
                                 full_output=True, disp=False)
    if not info.converged:
        raise NumericError(f"brentq did not converge on [{lo}, {hi}]",
                           state={'lo': lo, 'hi': hi, 'iterations': info.iterations, 'flag': info.flag})
    return float(root)


def find_sign_change_roots(f: Callable[[float], float], grid: Sequence[float]) -> List[float]:
    """
    Every root of f bracketed by consecutive grid points, ascending.

    Roots between two grid points that do not change sign are missed; the grid
    must be fine enough for the function at hand.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.array([f(x) for x in grid])
    roots = []
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(find_root_bracketed(f, grid[i], grid[i + 1]))
    if values[-1] == 0:
        roots.append(float(grid[-1]))
    logging.debug(f"mathkit: {len(roots)} sign change(s) on a {len(grid)}-point grid")
    return roots
