"""Diffusivity ratio across the (gamma, zeta) plane, at sketch scale.

sigma(l) is the lag-normalized price variance in transaction time;
sigma(10)/sigma(1000) above one means subdiffusion (mean reversion from
the V-shaped book wins), below one superdiffusion (order-flow persistence
wins).  The full map at publication statistics is `latentbook
diffusion-map`; this sketch uses short runs and a coarse grid.
"""

import os
import time

import numpy as np

from latentbook import FlowParams, SimParams, diffusivity_ratio, run
from latentbook.io_utils import write_csv

out = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out, exist_ok=True)

rows = []
t0 = time.time()
for gamma in (0.3, 0.5, 0.8):
    for zeta in (0.5, 1.0, 2.0, 4.0):
        ratios = []
        for seed in (1, 2):
            flow = FlowParams(lam=0.5, mu=0.1, nu=1e-4, zeta=zeta)
            p = SimParams(flow=flow, alpha=1 + gamma, halfwidth=500,
                          warmup_steps=20_000, horizon_steps=120_000,
                          seed=seed, drop_budget=0.1, record_trades=False)
            try:
                ratios.append(diffusivity_ratio(run(p).tx_mid))
            except Exception:
                pass
        mean = float(np.mean(ratios)) if ratios else float("nan")
        se = (float(np.std(ratios) / np.sqrt(len(ratios)))
              if len(ratios) > 1 else float("nan"))
        regime = "sub" if mean > 1 else "super"
        print(f"gamma={gamma} zeta={zeta}: ratio={mean:.3f} ({regime})"
              f"  [{time.time() - t0:.0f}s]")
        rows.append([gamma, zeta, mean, se, 12000 * len(ratios), 0])

write_csv(os.path.join(out, "diffusion_map.csv"),
          ["gamma", "zeta", "ratio", "ratio_se", "n_transactions", "flagged"],
          rows)
print("wrote", os.path.join(out, "diffusion_map.csv"))
print("render with: render --figure fig2 --in demos/out --out demos/out/fig2.png")
