"""Closed-form and numerical stationary-book results.

The mean latent-volume density rho(u) at distance u from the price obeys

    0.5 * d^2/du^2 [ D(u) rho(u) ] - nu(u) rho(u) + lambda(u) = 0,
    rho(0) = 0,

with D(u) the total reshuffling-plus-price variance per unit time.  For
constant coefficients the solution is rho_inf * (1 - exp(-u/u_star)) with
rho_inf = lambda/nu and u_star = sqrt(D / (2 nu)); the profile is locally
linear with slope b = 2 J / D(0) where J is the executed-volume rate.  These
functions serve as oracles for the simulation measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainTooSmallError, ParameterError
from .io_utils import write_columns_csv, write_json

CoefficientLike = Union[float, Callable[[np.ndarray], np.ndarray]]


def _as_function(c: CoefficientLike) -> Callable[[np.ndarray], np.ndarray]:
    if callable(c):
        return c
    value = float(c)
    return lambda u: np.full_like(np.asarray(u, dtype=float), value)


@dataclass
class ProfileCoefficients:
    """Coefficients of the stationary equation (constants or callables of u).

    ``d`` must stay positive near u = 0 and ``nu`` positive on the domain.
    """

    d: CoefficientLike
    lam: CoefficientLike
    nu: CoefficientLike

    def on_grid(self, u: np.ndarray):
        d = _as_function(self.d)(u)
        lam = _as_function(self.lam)(u)
        nu = _as_function(self.nu)(u)
        if np.any(d <= 0):
            raise ParameterError("D(u) must be positive on the domain")
        if np.any(nu <= 0):
            raise ParameterError("nu(u) must be positive on the domain")
        if np.any(lam < 0):
            raise ParameterError("lambda(u) must be non-negative")
        return d, lam, nu


def stationary_profile_closed_form(u, lam: float, nu: float, d: float):
    """rho_inf * (1 - exp(-u/u_star)) with rho_inf = lam/nu, u_star = sqrt(d/2nu)."""
    if lam <= 0 or nu <= 0 or d <= 0:
        raise ParameterError("lam, nu and d must be positive")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ParameterError("u must be non-negative")
    u_star = math.sqrt(d / (2.0 * nu))
    return (lam / nu) * (1.0 - np.exp(-u / u_star))


def transaction_rate(u: np.ndarray, rho: np.ndarray, d0: float) -> float:
    """Executed-volume rate J = 0.5 * d[D rho]/du at u = 0.

    With rho(0) = 0 this reduces to 0.5 * D(0) * rho'(0); the derivative uses
    the second-order one-sided difference on the first two interior nodes of
    a uniform grid starting at u[0] = 0.
    """
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if u.size < 3:
        raise ParameterError("need at least 3 grid points for the one-sided slope")
    h = u[1] - u[0]
    if h <= 0 or abs(u[0]) > 1e-12:
        raise ParameterError("grid must be uniform and start at u = 0")
    slope = (4.0 * rho[1] - rho[2]) / (2.0 * h)
    return 0.5 * d0 * slope


def linear_slope_b(j: float, d0: float) -> float:
    """Local book slope b = 2 J / D(0)."""
    if d0 <= 0:
        raise ParameterError("d0 must be positive")
    return 2.0 * j / d0


def naive_impact(q, b: float):
    """Price move needed to absorb volume q against a linear profile b*u."""
    if b <= 0:
        raise ParameterError("b must be positive")
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ParameterError("q must be non-negative")
    out = np.sqrt(2.0 * q / b)
    return float(out) if out.ndim == 0 else out


def sqrt_law(q, v: float, sigma: float, y: float = 1.0, delta: float = 0.5):
    """Impact law  Y * sigma * (q/v)^delta  (delta = 1/2 is the square root)."""
    if v <= 0 or sigma <= 0:
        raise ParameterError("v and sigma must be positive")
    q = np.asarray(q, dtype=float)
    out = y * sigma * (q / v) ** delta
    return float(out) if out.ndim == 0 else out


def naive_impact_from_profile(q, u: np.ndarray, rho: np.ndarray):
    """Invert the cumulative book volume: smallest du with int_0^du rho = q.

    This is the naive impact computed from an arbitrary measured mean
    profile rather than its linear approximation.
    """
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(u))])
    q = np.atleast_1d(np.asarray(q, dtype=float))
    out = np.interp(q, cum, u)
    if np.any(q > cum[-1]):
        raise ParameterError("profile does not hold enough volume for q")
    return out if out.size > 1 else float(out[0])


def solve_stationary_numeric(coeffs: ProfileCoefficients, u_max: float,
                             n_cells: int):
    """Finite-difference solve of the stationary equation on [0, u_max].

    Second-order central differences on a uniform grid, Dirichlet rho(0) = 0
    and far-field rho(u_max) = lam(u_max)/nu(u_max).  Returns (u, rho).
    Raises DomainTooSmallError when the solution is not flat near u_max.
    """
    if n_cells < 8:
        raise ParameterError("n_cells must be at least 8")
    if u_max <= 0:
        raise ParameterError("u_max must be positive")
    u = np.linspace(0.0, u_max, n_cells + 1)
    h = u[1] - u[0]
    d, lam, nu = coeffs.on_grid(u)

    rho_far = lam[-1] / nu[-1]
    # interior unknowns rho_1 .. rho_{n-1}
    a = d[:-2] / (2.0 * h * h)          # sub-diagonal coefficients
    b = -d[1:-1] / (h * h) - nu[1:-1]   # diagonal
    c = d[2:] / (2.0 * h * h)           # super-diagonal
    rhs = -lam[1:-1]
    rhs[-1] -= c[-1] * rho_far

    n = n_cells - 1
    banded = np.zeros((3, n))
    banded[0, 1:] = c[:-1]
    banded[1, :] = b
    banded[2, :-1] = a[1:]
    interior = solve_banded((1, 1), banded, rhs)

    rho = np.empty(n_cells + 1)
    rho[0] = 0.0
    rho[1:-1] = interior
    rho[-1] = rho_far

    scale = max(np.max(np.abs(rho)), 1e-300)
    tail = rho[int(0.95 * n_cells):]
    if np.max(np.abs(tail - rho_far)) / scale > 1e-3:
        raise DomainTooSmallError(
            f"solution varies by {np.max(np.abs(tail - rho_far)) / scale:.2e} "
            f"relative over the last 5% of [0, {u_max}]; enlarge u_max"
        )
    return u, rho


def stationary_residual(coeffs: ProfileCoefficients, u: np.ndarray,
                        rho: np.ndarray) -> np.ndarray:
    """Discrete residual of the stationary equation at interior nodes,
    relative to the deposition scale."""
    h = u[1] - u[0]
    d, lam, nu = coeffs.on_grid(u)
    g = d * rho
    res = 0.5 * (g[:-2] - 2.0 * g[1:-1] + g[2:]) / (h * h) - nu[1:-1] * rho[1:-1] + lam[1:-1]
    scale = max(np.max(np.abs(lam)), np.max(np.abs(nu * rho)), 1e-300)
    return res / scale


def absorbed_flux(u: np.ndarray, rho: np.ndarray,
                  lam: CoefficientLike, nu: CoefficientLike) -> float:
    """Independent route to J: stationarity balance J = int (lam - nu rho) du."""
    lam_g = _as_function(lam)(u)
    nu_g = _as_function(nu)(u)
    return float(np.trapezoid(lam_g - nu_g * rho, u))


def export_profile(path_csv, u: np.ndarray, rho: np.ndarray,
                   params: dict, path_json=None) -> None:
    """Profile CSV ``u,rho`` plus a JSON sidecar echoing the parameters."""
    write_columns_csv(path_csv, ["u", "rho"], [u, rho])
    if path_json is not None:
        write_json(path_json, params)
