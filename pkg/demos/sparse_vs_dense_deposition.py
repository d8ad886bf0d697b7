"""Dense vs sparse deposition: two very different liquidity regimes.

With deposition lambda per tick per step (dense, the package default) the
book near the price holds tens of units per level and refills faster than
unit orders can eat, so unit-volume flow cannot move the price at all.
With the same total deposition spread over the whole axis (sparse,
lambda/K per tick) levels hold a few units, unit orders grind them down,
prices move tick by tick, and the classic zero-intelligence phenomenology
appears: a strongly subdiffusive unit-volume baseline and a best-quote
volume around a thousandth of the lifetime traded volume.
"""

import numpy as np

from latentbook import (
    FlowParams,
    SimParams,
    derived_quantities,
    diffusivity_ratio,
    run,
)

WIDTH = 1001  # deposition support, ticks

for label, lam_tick in (("dense  (0.5 per tick)", 0.5),
                        ("sparse (0.5 total)", 0.5 / WIDTH)):
    flow = FlowParams(lam=lam_tick, mu=0.1, nu=1e-4, zeta=0.65)
    print(f"\n--- {label}: far-field depth {flow.rho_inf:g} per tick ---")

    # unit-volume, uncorrelated-sign baseline
    p = SimParams(flow=flow, alpha=1.5, sign_mode="iid", unit_volume=True,
                  halfwidth=WIDTH // 2, horizon_steps=400_000, seed=3,
                  record_trades=False, drop_budget=1.0)
    res = run(p)
    if res.tx_mid.size and np.ptp(res.tx_mid) == 0.0:
        print("unit/iid baseline: price frozen (no level ever emptied)")
    else:
        print(f"unit/iid baseline: sigma(10)/sigma(1000) = "
              f"{diffusivity_ratio(res.tx_mid):.2f}")

    # background flow scales
    p2 = SimParams(flow=flow, alpha=1.8, halfwidth=WIDTH // 2,
                   horizon_steps=400_000, seed=4, record_trades=True,
                   drop_budget=1.0)
    d = derived_quantities(run(p2))
    print(f"mean order volume = {d.j_rate / flow.mu:6.2f} units, "
          f"V = {d.v_life:8.0f}, q_best/V ~ {d.j_rate / flow.mu / d.v_life:.1e}")
    print(f"u* = sqrt(D/2nu) = {d.u_star:7.2f} ticks")
