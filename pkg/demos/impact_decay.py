"""Impact decay after metaorder completion.

Unit-execution metaorders at participation 0.5; after the last child order
the trade-direction displacement relaxes toward a plateau that is a
fraction of the peak impact.  Trajectories are recorded to five completion
times and averaged as a ratio of means (identically 1 at tau/T = 1).
"""

import os

import numpy as np

from latentbook import (
    FlowParams,
    MetaorderSpec,
    SimParams,
    decay_curve,
    metaorder_batch,
)

out = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out, exist_ok=True)

gamma, zeta = 0.5, 0.95
flow = FlowParams(lam=0.5, mu=0.1, nu=1e-4, zeta=zeta)
q = 125  # completion takes Q/(mu*phi) = 2500 steps, a quarter lifetime

records = []
for rep in range(2):
    params = SimParams(flow=flow, alpha=1 + gamma, halfwidth=300,
                       horizon_steps=120_000, seed=300 + rep,
                       drop_budget=0.1, record_tx=False)
    specs = [MetaorderSpec(q=q, sign=1, phi=0.5, style="unit_execution")
             for _ in range(60)]
    print(f"replica {rep}: 60 antithetic pairs ...")
    records.extend(metaorder_batch(params, specs, twin=False,
                                   antithetic=True))

dc = decay_curve(records, use_twin=False, pair_average=True)
print(f"plateau (tau/T in [3,5]) = {dc.plateau:.2f} +- {dc.plateau_se:.2f}")
print(f"execution-price ratio    = {dc.exec_ratio:.2f} +- {dc.exec_ratio_se:.2f}")
for g in (0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0):
    k = int(np.argmin(np.abs(dc.tau_over_t - g)))
    print(f"  tau/T = {g:3.1f}: {dc.curve[k]:6.3f} +- {dc.se[k]:.3f}")

dc.to_csv(os.path.join(out, f"decay_g{gamma}.csv"),
          os.path.join(out, f"decay_fit_g{gamma}.json"))
print("wrote decay CSVs into demos/out")
