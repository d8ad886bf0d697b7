"""Same-seed price paths with and without a sell metaorder.

Both runs share every background random draw, so the paths are identical
until the metaorder's first child order executes and deviate afterwards,
the with-metaorder price pushed down by the extra sell pressure.
"""

import os

import numpy as np

from latentbook import FlowParams, MetaorderSpec, SimParams, run_with_metaorder
from latentbook.io_utils import write_columns_csv

out = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out, exist_ok=True)

flow = FlowParams(lam=0.5, mu=0.1, nu=1e-4, zeta=0.65)
params = SimParams(flow=flow, alpha=1.8, halfwidth=400,
                   horizon_steps=60_000, seed=12, drop_budget=0.1,
                   record_tx=False)
spec = MetaorderSpec(q=400, sign=-1, phi=0.05, style="zeta_execution")

res = run_with_metaorder(params, spec, twin=True)
m = res.meta
print(f"metaorder: Q={m.executed} in {m.n_children} child orders, "
      f"T={m.duration} steps, completed={m.completed}")
k = m.t_first - params.warmup_steps
same = np.array_equal(res.mid[:k], res.twin_mid[:k])
print(f"paths identical until the first child order: {same}")
print(f"final displacement: with={res.mid[-1]:.1f}, "
      f"without={res.twin_mid[-1]:.1f} ticks")

steps = np.arange(res.mid.size)
write_columns_csv(os.path.join(out, "prices_with.csv"),
                  ["step", "midpoint"], [steps, res.mid])
write_columns_csv(os.path.join(out, "prices_without.csv"),
                  ["step", "midpoint"],
                  [np.arange(res.twin_mid.size), res.twin_mid])
write_columns_csv(os.path.join(out, "trades_with.csv"),
                  ["step", "sign", "volume", "vwap", "is_metaorder"],
                  [res.trades[k] for k in
                   ("step", "sign", "volume", "vwap", "is_metaorder")])
print("wrote price-path CSVs into demos/out")
print("render with: render --figure appendix --in demos/out "
      "--out demos/out/price_path.png")
