"""Measure the stationary book profile and compare to the closed form.

Runs the market at the deep/slow parameters (lambda=0.5, mu=0.1, nu=1e-4,
gamma=0.8, zeta=0.65), pools snapshots taken every thousand steps, fits the
exponential profile, and writes CSVs that bookfigs can render as the
profile figure.  A short horizon keeps the demo around a minute; increase
``horizon_steps`` tenfold for publication-quality statistics.
"""

import os

import numpy as np

from latentbook import (
    FlowParams,
    SimParams,
    derived_quantities,
    fit_exponential_profile,
    mean_book_profile,
    run,
    stationary_profile_closed_form,
)
from latentbook.io_utils import write_columns_csv

out = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out, exist_ok=True)

params = SimParams(
    flow=FlowParams(lam=0.5, mu=0.1, nu=1e-4, zeta=0.65),
    alpha=1.8,                 # sign memory gamma = 0.8
    halfwidth=500,
    horizon_steps=300_000,
    seed=1,
    snapshot_interval=1000,
    record_trades=False,
)
print("running", params.horizon_steps, "steps after a",
      params.warmup_steps, "step warmup ...")
res = run(params)
d = derived_quantities(res)
print(f"J = {d.j_rate:.3f} volume/step, D = {d.d_step:.3g} ticks^2/step, "
      f"u* = sqrt(D/2nu) = {d.u_star:.2f} ticks")

profile = mean_book_profile(res.snapshots)
rho_inf, u_star, err = fit_exponential_profile(profile.u, profile.rho)
print(f"fit: rho_inf = {rho_inf:.0f} (+-{err[0]:.0f}), "
      f"u* = {u_star:.2f} (+-{err[1]:.2f})")
far = profile.rho[profile.u > 8 * d.u_star].mean()
print(f"far field: {far:.0f} vs lambda/nu = {params.flow.rho_inf:.0f}")

profile.to_csv(os.path.join(out, "profile_measured.csv"))
write_columns_csv(
    os.path.join(out, "profile_theory.csv"), ["u", "rho"],
    [profile.u, stationary_profile_closed_form(
        profile.u, params.flow.lam, params.flow.nu, d.d_step)])
print("wrote", os.path.join(out, "profile_measured.csv"))
print("render with: render --figure fig3 --in demos/out --out demos/out/fig3.png")
