"""Experiment harness: replica orchestration and the headline studies.

Each experiment derives per-task seeds from (master seed, experiment kind,
cell coordinates, replica index), so outputs are reproducible regardless of
worker scheduling; results merge deterministically by task order and every
run writes a ``manifest.json`` with the config hash and seeds.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .analytics import (
    decay_curve,
    derived_quantities,
    diffusivity_ratio,
    fit_exponential_profile,
    global_imbalance_impact,
    impact_curve,
    mean_book_profile,
)
from .config import ExperimentConfig
from .errors import (
    BracketError,
    DegenerateBookError,
    DropBudgetError,
    FitError,
    InsufficientDataError,
)
from .io_utils import write_columns_csv, write_csv, write_json
from .orderflow import FlowParams, derive_seed_sequence
from .sim import (
    MetaorderSpec,
    SimParams,
    SnapshotSet,
    metaorder_batch,
    run,
    save_metaorders,
)
from .theory import stationary_profile_closed_form

#: efficient-market line from the diffusivity map, used as the default
#: zeta(gamma) when an experiment does not pin zeta explicitly
DIFFUSION_LINE_ZETA = {0.3: 2.5, 0.5: 0.95, 0.8: 0.65}


def cell_seed(master_seed: int, kind: str, *scope) -> int:
    seq = derive_seed_sequence(master_seed, kind, *scope)
    return int(seq.generate_state(1, np.uint64)[0])


def zeta_for(cfg: ExperimentConfig, gamma: float) -> float:
    if cfg.sweep.zeta:
        if cfg.sweep.gamma and len(cfg.sweep.zeta) == len(cfg.sweep.gamma):
            return float(cfg.sweep.zeta[list(cfg.sweep.gamma).index(gamma)])
        return float(cfg.sweep.zeta[0])
    if gamma in DIFFUSION_LINE_ZETA:
        return DIFFUSION_LINE_ZETA[gamma]
    return cfg.flow.zeta


def base_params(cfg: ExperimentConfig, gamma: float, zeta: float,
                seed: int, **overrides) -> SimParams:
    flow = replace(cfg.flow, zeta=zeta)
    kw = dict(
        flow=flow, alpha=gamma + 1.0, sign_mode=cfg.sign_mode,
        halfwidth=cfg.halfwidth, warmup_steps=cfg.warmup_steps,
        horizon_steps=cfg.horizon_steps, seed=seed,
        drop_budget=cfg.drop_budget,
    )
    kw.update(overrides)
    return SimParams(**kw)


def _pool_map(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks))


def write_manifest(outdir, cfg: ExperimentConfig, kind: str, seeds,
                   wall_time: float, extra=None) -> None:
    payload = {
        "experiment": kind,
        "config": cfg.as_dict(),
        "config_sha256": cfg.digest(),
        "seeds": list(map(int, seeds)),
        "code_version": __version__,
        "wall_time_seconds": wall_time,
    }
    if extra:
        payload.update(extra)
    write_json(os.path.join(outdir, "manifest.json"), payload)


# ---------------------------------------------------------------------------
# diffusivity map and diffusion line


def _diffusivity_task(params: SimParams) -> dict:
    try:
        res = run(params)
    except (DegenerateBookError, DropBudgetError) as exc:
        return {"ratio": math.nan, "n_tx": 0, "flagged": True,
                "seed": params.seed, "error": str(exc)}
    try:
        ratio = diffusivity_ratio(res.tx_mid)
    except InsufficientDataError as exc:
        if res.tx_mid.size >= 2000 and np.ptp(res.tx_mid) == 0.0:
            # frozen price: orders too small to ever empty a level; the
            # limit of extreme subdiffusion for bracketing purposes
            return {"ratio": math.inf, "n_tx": int(res.tx_mid.size),
                    "flagged": False, "seed": params.seed}
        return {"ratio": math.nan, "n_tx": 0, "flagged": True,
                "seed": params.seed, "error": str(exc)}
    return {"ratio": ratio, "n_tx": int(res.tx_mid.size),
            "flagged": False, "seed": params.seed}


def measure_diffusivity(cfg: ExperimentConfig, gamma: float, zeta: float,
                        kind: str = "diffusivity",
                        unit_volume: bool = False,
                        sign_mode: str = None) -> dict:
    """Replica-averaged diffusivity ratio sigma(10)/sigma(1000) at one cell."""
    tasks = []
    for rep in range(cfg.replicas):
        seed = cell_seed(cfg.seed, kind, gamma, zeta, rep)
        tasks.append(base_params(
            cfg, gamma, zeta, seed, record_trades=False,
            unit_volume=unit_volume,
            sign_mode=sign_mode or cfg.sign_mode,
        ))
    results = _pool_map(_diffusivity_task, tasks, cfg.threads)
    ratios = np.array([r["ratio"] for r in results if not r["flagged"]])
    flagged = sum(r["flagged"] for r in results)
    if ratios.size == 0:
        return {"gamma": gamma, "zeta": zeta, "ratio": math.nan,
                "ratio_se": math.nan, "n_tx": 0, "flagged": flagged,
                "seeds": [r["seed"] for r in results]}
    frozen = np.isinf(ratios)
    if frozen.sum() * 2 > ratios.size:
        ratio, se = math.inf, math.nan
    else:
        finite = ratios[~frozen]
        ratio = float(finite.mean())
        se = (float(finite.std(ddof=1) / math.sqrt(finite.size))
              if finite.size > 1 else math.nan)
    return {
        "gamma": gamma, "zeta": zeta,
        "ratio": ratio, "ratio_se": se,
        "n_tx": int(sum(r["n_tx"] for r in results)),
        "flagged": flagged,
        "seeds": [r["seed"] for r in results],
    }


def run_diffusion_map(cfg: ExperimentConfig, outdir=None) -> list:
    """Grid of diffusivity ratios over (gamma, zeta)."""
    t0 = time.time()
    gammas = cfg.sweep.gamma or [cfg.gamma]
    zetas = cfg.sweep.zeta or [cfg.flow.zeta]
    tasks, keys = [], []
    for g in gammas:
        for z in zetas:
            for rep in range(cfg.replicas):
                seed = cell_seed(cfg.seed, "diffusion_map", g, z, rep)
                tasks.append(base_params(cfg, g, z, seed, record_trades=False))
                keys.append((g, z))
    results = _pool_map(_diffusivity_task, tasks, cfg.threads)
    rows = []
    for g in gammas:
        for z in zetas:
            cell = [r for k, r in zip(keys, results) if k == (g, z)]
            ratios = np.array([c["ratio"] for c in cell if not c["flagged"]])
            rows.append({
                "gamma": g, "zeta": z,
                "ratio": float(ratios.mean()) if ratios.size else math.nan,
                "ratio_se": (float(ratios.std(ddof=1) / math.sqrt(ratios.size))
                             if ratios.size > 1 else math.nan),
                "n_tx": int(sum(c["n_tx"] for c in cell)),
                "flagged": sum(c["flagged"] for c in cell),
            })
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        write_csv(
            os.path.join(outdir, "diffusion_map.csv"),
            ["gamma", "zeta", "ratio", "ratio_se", "n_transactions", "flagged"],
            [[r["gamma"], r["zeta"], r["ratio"], r["ratio_se"], r["n_tx"],
              r["flagged"]] for r in rows],
        )
        write_manifest(outdir, cfg, "diffusion_map",
                       [t.seed for t in tasks], time.time() - t0)
    return rows


def find_diffusion_line(cfg: ExperimentConfig, tolerance: float = 0.02,
                        outdir=None, bracket=(0.25, 6.0)) -> list:
    """Bisect zeta(gamma) so that sigma(10)/sigma(1000) = 1.

    The ratio increases with zeta (larger zeta means smaller market orders,
    hence subdiffusion); the bracket must straddle 1, and is widened once
    before failing.
    """
    t0 = time.time()
    gammas = cfg.sweep.gamma or [cfg.gamma]
    rows = []
    all_seeds = []

    def ratio_at(gamma, z):
        r = measure_diffusivity(cfg, gamma, z, kind="diffusion_line")
        all_seeds.extend(r["seeds"])
        return r

    for gamma in gammas:
        lo, hi = bracket
        r_lo = ratio_at(gamma, lo)
        r_hi = ratio_at(gamma, hi)
        if not (r_lo["ratio"] < 1.0 < r_hi["ratio"]):
            lo, hi = lo / 2.0, hi * 2.0
            r_lo = ratio_at(gamma, lo)
            r_hi = ratio_at(gamma, hi)
            if not (r_lo["ratio"] < 1.0 < r_hi["ratio"]):
                raise BracketError(
                    f"no diffusive crossing for gamma={gamma} in "
                    f"zeta [{lo}, {hi}]: ratios "
                    f"{r_lo['ratio']:.3f}, {r_hi['ratio']:.3f}"
                )
        iterations = 0
        best = r_lo if abs(r_lo["ratio"] - 1) < abs(r_hi["ratio"] - 1) else r_hi
        while hi - lo > 0.01:
            mid = 0.5 * (lo + hi)
            r_mid = ratio_at(gamma, mid)
            iterations += 1
            if abs(r_mid["ratio"] - 1.0) < abs(best["ratio"] - 1.0):
                best = r_mid
            if abs(r_mid["ratio"] - 1.0) < tolerance:
                break
            if r_mid["ratio"] < 1.0:
                lo = mid
            else:
                hi = mid
        rows.append({
            "gamma": gamma, "zeta_star": best["zeta"],
            "ratio": best["ratio"], "ratio_se": best["ratio_se"],
            "tolerance": tolerance, "iterations": iterations,
        })
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        write_csv(
            os.path.join(outdir, "diffusion_line.csv"),
            ["gamma", "zeta_star", "ratio", "ratio_se", "tolerance",
             "iterations"],
            [[r["gamma"], r["zeta_star"], r["ratio"], r["ratio_se"],
              r["tolerance"], r["iterations"]] for r in rows],
        )
        write_manifest(outdir, cfg, "diffusion_line", all_seeds,
                       time.time() - t0)
    return rows


# ---------------------------------------------------------------------------
# stationary profile


def _profile_task(params: SimParams):
    res = run(params)
    return res.snapshots, derived_quantities(res)


def _combine_snapshots(parts) -> SnapshotSet:
    return SnapshotSet(
        halfwidth=parts[0].halfwidth,
        steps=np.concatenate([p.steps for p in parts]),
        mids=np.concatenate([p.mids for p in parts]),
        centers=np.concatenate([p.centers for p in parts]),
        bid=np.concatenate([p.bid for p in parts]),
        ask=np.concatenate([p.ask for p in parts]),
    )


def run_profile_experiment(cfg: ExperimentConfig, outdir=None) -> dict:
    """Measured mean book profile vs the closed-form shape at measured D."""
    t0 = time.time()
    gamma = cfg.sweep.gamma[0] if cfg.sweep.gamma else cfg.gamma
    zeta = zeta_for(cfg, gamma)
    tasks = []
    for rep in range(cfg.replicas):
        seed = cell_seed(cfg.seed, "profile", gamma, zeta, rep)
        tasks.append(base_params(cfg, gamma, zeta, seed,
                                 snapshot_interval=cfg.snapshot_interval,
                                 record_trades=False))
    results = _pool_map(_profile_task, tasks, cfg.threads)
    snaps = _combine_snapshots([r[0] for r in results])
    derived = [r[1] for r in results]
    d_step = float(np.mean([d.d_step for d in derived]))
    j_rate = float(np.mean([d.j_rate for d in derived]))
    sigma_life = float(np.mean([d.sigma_life for d in derived]))
    nu = cfg.flow.nu
    u_star_theory = math.sqrt(d_step / (2.0 * nu))

    profile = mean_book_profile(snaps)
    rho_inf_fit, u_star_fit, fit_err = fit_exponential_profile(
        profile.u, profile.rho)
    theory_rho = stationary_profile_closed_form(
        profile.u, cfg.flow.lam, nu, d_step)

    out = {
        "gamma": gamma, "zeta": zeta,
        "rho_inf_fit": rho_inf_fit, "u_star_fit": u_star_fit,
        "fit_se": fit_err,
        "u_star_theory": u_star_theory,
        "rho_inf_theory": cfg.flow.rho_inf,
        "d_step": d_step, "j_rate": j_rate, "sigma_life": sigma_life,
        "far_field_mean": float(np.mean(profile.rho[profile.u >
                                                    8 * max(u_star_theory, 1.0)])),
        "profile": profile,
    }
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        profile.to_csv(
            os.path.join(outdir, "profile_measured.csv"),
            os.path.join(outdir, "profile_fit.json"),
            fit={
                "rho_inf_fit": rho_inf_fit, "u_star_fit": u_star_fit,
                "rho_inf_se": fit_err[0], "u_star_se": fit_err[1],
                "u_star_theory": u_star_theory,
                "d_step": d_step, "j_rate": j_rate,
                "sigma_life": sigma_life,
            })
        write_columns_csv(os.path.join(outdir, "profile_theory.csv"),
                          ["u", "rho"], [profile.u, theory_rho])
        write_manifest(outdir, cfg, "profile", [t.seed for t in tasks],
                       time.time() - t0)
    return out


# ---------------------------------------------------------------------------
# metaorder experiments


def _calibration(cfg: ExperimentConfig, gamma: float, zeta: float,
                 kind: str) -> dict:
    """Background run measuring V, sigma, D and the mean profile."""
    seed = cell_seed(cfg.seed, kind, gamma, zeta, "calibration")
    params = base_params(
        cfg, gamma, zeta, seed,
        horizon_steps=cfg.metaorder.calibration_steps,
        snapshot_interval=cfg.snapshot_interval or 1000,
    )
    res = run(params)
    d = derived_quantities(res)
    prof = mean_book_profile(res.snapshots)
    rho_inf_fit, u_star_fit, _ = fit_exponential_profile(prof.u, prof.rho)
    return {
        "derived": d,
        "profile": prof,
        "rho_inf_fit": rho_inf_fit,
        "u_star_fit": u_star_fit,
        "b_fit": rho_inf_fit / u_star_fit,
        "trades": res.trades,
        "mid": res.mid,
        "seed": seed,
    }


def _metaorder_task(args) -> list:
    params, qs, signs, phis, style, rewarm, twin, segment_horizon, anti = args
    specs = [MetaorderSpec(q=int(q), sign=int(s), phi=float(f), style=style)
             for q, s, f in zip(qs, signs, phis)]
    return metaorder_batch(params, specs, rewarm_steps=rewarm, twin=twin,
                           segment_horizon=segment_horizon, antithetic=anti)


def run_metaorder_set(cfg: ExperimentConfig, gamma: float, zeta: float,
                      style: str, phi: float, v_life: float,
                      kind: str, qv_range=None, n_metaorders=None) -> list:
    """Run a set of metaorders at one flow cell, split over replicas.

    Q is drawn log-uniformly over the configured Q/V range; signs are fair
    coins.  Each replica warms once and re-warms one lifetime between
    metaorders.
    """
    mo = cfg.metaorder
    n = n_metaorders if n_metaorders is not None else mo.n_metaorders
    qv_lo, qv_hi = qv_range if qv_range is not None else (mo.qv_min, mo.qv_max)
    rng = np.random.Generator(np.random.PCG64(
        derive_seed_sequence(cfg.seed, kind, gamma, zeta, style, phi, "draws")))
    if mo.q_fixed is not None:
        qs = np.full(n, mo.q_fixed, dtype=np.int64)
    else:
        qs = np.maximum(1, np.round(
            10 ** rng.uniform(math.log10(qv_lo), math.log10(qv_hi), n)
            * v_life).astype(np.int64))
    signs = np.where(rng.random(n) < 0.5, 1, -1)
    if mo.duration_target is not None:
        # constant-duration execution: pace each metaorder so its expected
        # completion time is duration_target lifetimes
        tau = cfg.flow.tau_life
        t_steps = mo.duration_target * tau
        child = 1.0 if style == "unit_execution" else max(
            v_life * cfg.flow.nu / cfg.flow.mu, 1.0)
        phis = np.clip((qs / child) / (cfg.flow.mu * t_steps), 1e-4, 1.0)
    else:
        phis = np.full(n, phi)

    tasks = []
    per = int(math.ceil(n / cfg.replicas))
    for rep in range(cfg.replicas):
        sl = slice(rep * per, min((rep + 1) * per, n))
        if sl.start >= n:
            break
        seed = cell_seed(cfg.seed, kind, gamma, zeta, style, phi, rep)
        params = base_params(cfg, gamma, zeta, seed, meta_tail=mo.tail,
                             horizon_steps=cfg.horizon_steps)
        tasks.append((params, qs[sl], signs[sl], phis[sl], style,
                      mo.rewarm_steps, mo.twin, mo.segment_horizon,
                      mo.antithetic))
    batches = _pool_map(_metaorder_task, tasks, cfg.threads)
    records = [r for batch in batches for r in batch]
    return records


def run_impact_experiment(cfg: ExperimentConfig, outdir=None,
                          convention: str = "vwap_mid") -> dict:
    """Impact curves per (gamma, style, phi) with naive and imbalance overlays."""
    t0 = time.time()
    gammas = cfg.sweep.gamma or [cfg.gamma]
    styles = cfg.sweep.style or [cfg.metaorder.style]
    phis = cfg.sweep.phi or [cfg.metaorder.phi]
    curves, calib_cache = {}, {}
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    for gamma in gammas:
        zeta = zeta_for(cfg, gamma)
        cal_key = (gamma, zeta)
        if cal_key not in calib_cache:
            calib_cache[cal_key] = _calibration(cfg, gamma, zeta, "impact")
        cal = calib_cache[cal_key]
        d = cal["derived"]
        for style in styles:
            for phi in phis:
                records = run_metaorder_set(
                    cfg, gamma, zeta, style, phi, d.v_life, "impact")
                n_excluded = sum(not r.completed for r in records)
                try:
                    curve = impact_curve(
                        records, d.v_life, d.sigma_life,
                        convention=convention, use_twin=cfg.metaorder.twin,
                        pair_average=cfg.metaorder.antithetic)
                except (InsufficientDataError, FitError):
                    curve = None
                key = (gamma, style, phi)
                curves[key] = {
                    "curve": curve, "records": records,
                    "n_excluded": n_excluded,
                    "calibration": cal,
                }
                if outdir:
                    tag = f"g{gamma}_{style}_phi{phi}"
                    save_metaorders(
                        os.path.join(outdir, f"metaorders_{tag}.csv"), records)
                    if curve is not None:
                        curve.to_csv(
                            os.path.join(outdir, f"impact_curve_{tag}.csv"),
                            os.path.join(outdir, f"impact_fit_{tag}.json"))
    first_cal = next(iter(calib_cache.values()))
    naive = None
    imb = None
    if outdir:
        d = first_cal["derived"]
        qv = np.geomspace(cfg.metaorder.qv_min, cfg.metaorder.qv_max, 25)
        b_fit = first_cal["b_fit"]
        naive = np.sqrt(2.0 * qv * d.v_life / b_fit) / d.sigma_life
        write_columns_csv(os.path.join(outdir, "naive_impact.csv"),
                          ["qv", "impact"], [qv, naive])
        try:
            imb = global_imbalance_impact(
                first_cal["trades"], first_cal["mid"],
                window=max(10, int(d.tau_life / 10)))
            imb.to_csv(os.path.join(outdir, "imbalance.csv"),
                       os.path.join(outdir, "imbalance_fit.json"),
                       v_life=d.v_life, sigma_life=d.sigma_life)
        except InsufficientDataError:
            imb = None
        write_manifest(outdir, cfg, "impact",
                       [c["seed"] for c in calib_cache.values()],
                       time.time() - t0)
    return {"curves": curves, "naive": naive, "imbalance": imb,
            "calibrations": calib_cache}


def run_decay_experiment(cfg: ExperimentConfig, outdir=None) -> dict:
    """Post-completion decay per gamma (unit execution)."""
    t0 = time.time()
    gammas = cfg.sweep.gamma or [cfg.gamma]
    phi = cfg.sweep.phi[0] if cfg.sweep.phi else cfg.metaorder.phi
    rows = {}
    seeds = []
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    for gamma in gammas:
        zeta = zeta_for(cfg, gamma)
        cal = _calibration(cfg, gamma, zeta, "decay")
        seeds.append(cal["seed"])
        d = cal["derived"]
        records = run_metaorder_set(
            cfg, gamma, zeta, "unit_execution", phi, d.v_life, "decay")
        curve = decay_curve(records, use_twin=cfg.metaorder.twin,
                            pair_average=cfg.metaorder.antithetic)
        rows[gamma] = {"decay": curve, "records": records, "derived": d}
        if outdir:
            tag = f"g{gamma}"
            save_metaorders(os.path.join(outdir, f"metaorders_decay_{tag}.csv"),
                            records)
            curve.to_csv(os.path.join(outdir, f"decay_{tag}.csv"),
                         os.path.join(outdir, f"decay_fit_{tag}.json"))
    if outdir:
        write_manifest(outdir, cfg, "decay", seeds, time.time() - t0)
    return rows


def run_imbalance_experiment(cfg: ExperimentConfig, outdir=None) -> dict:
    """Window price change vs signed market-order imbalance."""
    t0 = time.time()
    gamma = cfg.sweep.gamma[0] if cfg.sweep.gamma else cfg.gamma
    zeta = zeta_for(cfg, gamma)
    seed = cell_seed(cfg.seed, "imbalance", gamma, zeta, 0)
    params = base_params(cfg, gamma, zeta, seed)
    res = run(params)
    window = max(10, int(params.flow.tau_life / 10))
    imb = global_imbalance_impact(res.trades, res.mid, window=window)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        imb.to_csv(os.path.join(outdir, "imbalance.csv"),
                   os.path.join(outdir, "imbalance_fit.json"))
        write_manifest(outdir, cfg, "imbalance", [seed], time.time() - t0)
    return {"imbalance": imb, "window": window, "gamma": gamma, "zeta": zeta}


def run_simulate(cfg: ExperimentConfig, outdir=None) -> dict:
    """Plain background run(s): price series, trade log, snapshots."""
    t0 = time.time()
    gamma = cfg.sweep.gamma[0] if cfg.sweep.gamma else cfg.gamma
    zeta = zeta_for(cfg, gamma)
    seeds = []
    results = []
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    for rep in range(cfg.replicas):
        seed = cell_seed(cfg.seed, "simulate", gamma, zeta, rep)
        seeds.append(seed)
        params = base_params(cfg, gamma, zeta, seed,
                             snapshot_interval=cfg.snapshot_interval)
        res = run(params)
        results.append(res)
        if outdir:
            res.save(outdir, prefix=f"replica{rep}")
    if outdir:
        write_manifest(outdir, cfg, "simulate", seeds, time.time() - t0)
    return {"results": results, "seeds": seeds}


def run_illustration(cfg: ExperimentConfig, outdir=None) -> dict:
    """Same-seed price paths with and without one metaorder, plus its trades.

    Produces the inputs of the price-path illustration figure:
    ``prices_with.csv``, ``prices_without.csv`` and ``trades_with.csv``.
    """
    from .sim import run_with_metaorder, MetaorderSpec
    from .io_utils import write_columns_csv

    t0 = time.time()
    gamma = cfg.sweep.gamma[0] if cfg.sweep.gamma else cfg.gamma
    zeta = zeta_for(cfg, gamma)
    seed = cell_seed(cfg.seed, "illustration", gamma, zeta, 0)
    params = base_params(cfg, gamma, zeta, seed, record_tx=False)
    q = cfg.metaorder.q_fixed if cfg.metaorder.q_fixed else 100
    spec = MetaorderSpec(q=q, sign=-1, phi=cfg.metaorder.phi,
                         style=cfg.metaorder.style)
    res = run_with_metaorder(params, spec, twin=True)
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        steps = np.arange(res.mid.size)
        write_columns_csv(os.path.join(outdir, "prices_with.csv"),
                          ["step", "midpoint"], [steps, res.mid])
        write_columns_csv(os.path.join(outdir, "prices_without.csv"),
                          ["step", "midpoint"],
                          [np.arange(res.twin_mid.size), res.twin_mid])
        write_columns_csv(
            os.path.join(outdir, "trades_with.csv"),
            ["step", "sign", "volume", "vwap", "is_metaorder"],
            [res.trades[k] for k in
             ("step", "sign", "volume", "vwap", "is_metaorder")])
        write_manifest(outdir, cfg, "illustration", [seed], time.time() - t0)
    return {"result": res, "spec": spec, "seed": seed}
