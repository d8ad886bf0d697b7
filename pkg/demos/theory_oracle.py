"""Stationary-profile theory: closed form vs finite-difference solve.

The mean latent volume rho(u) at distance u from the price solves
0.5 (D rho)'' - nu rho + lambda = 0 with rho(0) = 0.  For constant
coefficients the solution is rho_inf (1 - exp(-u/u*)); the numeric
boundary-value solver reproduces it and the near-price slope matches
b = 2 J / D at second order in the grid spacing.
"""

import numpy as np

from latentbook import (
    ProfileCoefficients,
    linear_slope_b,
    solve_stationary_numeric,
    stationary_profile_closed_form,
    transaction_rate,
)

lam, nu = 0.5, 1e-4
u_star = 0.49
d0 = 2.0 * nu * u_star**2
rho_inf = lam / nu

coeffs = ProfileCoefficients(d=d0, lam=lam, nu=nu)
u, rho = solve_stationary_numeric(coeffs, 12 * u_star, 10_000)
exact = stationary_profile_closed_form(u, lam, nu, d0)

print(f"rho_inf = {rho_inf:.0f}, u* = {u_star}")
print(f"max |numeric - closed form| / rho_inf = "
      f"{np.max(np.abs(rho - exact)) / rho_inf:.2e}")

j = transaction_rate(u, rho, d0)
b = linear_slope_b(j, d0)
print(f"transaction rate J = {j:.4g} (exact {0.5 * d0 * rho_inf / u_star:.4g})")
print(f"local slope b = {b:.4g} (exact rho_inf/u* = {rho_inf / u_star:.4g})")

# the slope error decays at second order with the cell size
for n in (1000, 2000, 4000):
    ug, rg = solve_stationary_numeric(coeffs, 12 * u_star, n)
    err = abs(linear_slope_b(transaction_rate(ug, rg, d0), d0) - rho_inf / u_star)
    print(f"  n={n:5d}: slope error {err:.3e}")
