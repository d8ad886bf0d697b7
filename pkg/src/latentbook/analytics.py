"""Statistical estimators turning recorded runs into measured quantities.

All functions are pure (no hidden randomness; bootstrap helpers take an
explicit seed) and operate on arrays produced by the simulator: transaction-
indexed midpoints, per-step midpoints, trade logs, book snapshots and
metaorder records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitError, InsufficientDataError, ParameterError
from .io_utils import write_columns_csv, write_json
from .sim import TAU_GRID, MetaorderRecord, RunResult

#: index of tau/T = 1.0 on the trajectory grid
_K_ONE = int(np.argmin(np.abs(TAU_GRID - 1.0)))


# ---------------------------------------------------------------------------
# price diffusion


def diffusion_constant(prices: np.ndarray, lag: int) -> float:
    """sigma^2(lag) = <(p_{t+lag} - p_t)^2> / lag over overlapping windows.

    ``prices`` is indexed by transaction count (midpoint after each trade).
    """
    prices = np.asarray(prices, dtype=float)
    if lag < 1:
        raise ParameterError("lag must be >= 1")
    if prices.size < 2 * lag:
        raise InsufficientDataError(
            f"need at least {2 * lag} prices for lag {lag}, got {prices.size}"
        )
    d = prices[lag:] - prices[:-lag]
    return float(np.mean(d * d) / lag)


def diffusivity_ratio(prices: np.ndarray, lag_short: int = 10,
                      lag_long: int = 1000) -> float:
    """sigma(lag_short)/sigma(lag_long); 1 is diffusive.

    Values above 1 mean the lag-normalized variance decays with lag, i.e.
    subdiffusion (mean reversion); below 1 superdiffusion (persistence).
    """
    s1 = diffusion_constant(prices, lag_short)
    s2 = diffusion_constant(prices, lag_long)
    if s2 <= 0:
        raise InsufficientDataError("degenerate long-lag variance")
    return math.sqrt(s1 / s2)


# ---------------------------------------------------------------------------
# sign autocorrelation


@dataclass
class SignAutocorrelation:
    lags: np.ndarray
    c: np.ndarray
    gamma: float
    gamma_se: float
    fit_lags: tuple

    def to_csv(self, path, json_path=None):
        write_columns_csv(path, ["lag", "c"], [self.lags, self.c])
        if json_path:
            write_json(json_path, {
                "gamma": self.gamma, "gamma_se": self.gamma_se,
                "fit_lo": self.fit_lags[0], "fit_hi": self.fit_lags[1],
            })


def sign_autocorrelation(signs: np.ndarray, lag_max: int,
                         n_lags: int = 40) -> SignAutocorrelation:
    """C(l) = <s_t s_{t+l}> on log-spaced lags, with a power-law fit.

    The decay exponent gamma comes from OLS on log C vs log l over
    l in [10, lag_max/10]; lags with C <= 0 are excluded, and a fit with
    fewer than 4 usable points is refused (no power law).
    """
    signs = np.asarray(signs, dtype=np.float64)
    if signs.size < 10 * lag_max:
        raise InsufficientDataError(
            f"need >= {10 * lag_max} signs for lag_max {lag_max}"
        )
    lags = np.unique(np.geomspace(1, lag_max, n_lags).astype(np.int64))
    c = np.empty(lags.size)
    for i, lag in enumerate(lags):
        c[i] = np.mean(signs[:-lag] * signs[lag:])

    lo, hi = 10, max(20, lag_max // 10)
    noise_floor = 3.0 / math.sqrt(signs.size)  # 3 sigma of <s_t s_{t+l}> under iid
    sel = (lags >= lo) & (lags <= hi) & (c > noise_floor)
    if sel.sum() < 4:
        raise FitError("autocorrelation is not a measurable power law")
    x = np.log(lags[sel].astype(float))
    y = np.log(c[sel])
    A = np.vstack([np.ones_like(x), x]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(x.size - 2, 1)
    resid = y - A @ coef
    var = float(resid @ resid) / dof
    cov = var * np.linalg.inv(A.T @ A)
    return SignAutocorrelation(
        lags=lags, c=c, gamma=-float(coef[1]),
        gamma_se=float(np.sqrt(cov[1, 1])), fit_lags=(lo, hi),
    )


def block_bootstrap_se(x: np.ndarray, n_blocks: int = 50,
                       n_boot: int = 200, seed: int = 0) -> float:
    """Standard error of the mean of a long-memory series via block bootstrap."""
    x = np.asarray(x, dtype=float)
    if x.size < n_blocks * 2:
        raise InsufficientDataError("series too short for block bootstrap")
    block = x.size // n_blocks
    means = np.array([
        x[i * block:(i + 1) * block].mean() for i in range(n_blocks)
    ])
    rng = np.random.Generator(np.random.PCG64(seed))
    boots = np.array([
        means[rng.integers(0, n_blocks, n_blocks)].mean()
        for _ in range(n_boot)
    ])
    return float(boots.std(ddof=1))


# ---------------------------------------------------------------------------
# run-level derived quantities


@dataclass
class DerivedQuantities:
    """Bridge between one background run and the theory formulas."""

    rho_inf: float
    r: float
    tau_life: float
    j_rate: float        # executed volume per step
    v_life: float        # J * tau_life
    sigma_life: float    # rms midpoint change over tau_life (ticks)
    d_step: float        # midpoint variance per step
    u_star: float        # sqrt(d_step / (2 nu))
    b_slope: float       # 2 J / d_step
    n_transactions: int
    steps: int
    sigma_rel_se: float = 0.0  # relative uncertainty of sigma_life
    v_rel_se: float = 0.0      # relative uncertainty of v_life

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def norm_rel_se(self, delta: float = 0.75) -> float:
        """Relative uncertainty of a Delta/sigma vs Q/V curve level coming
        from this calibration's V and sigma estimates (a V error shifts the
        level through the fitted exponent)."""
        return math.sqrt(self.sigma_rel_se ** 2 + (delta * self.v_rel_se) ** 2)


def derived_quantities(result: RunResult) -> DerivedQuantities:
    """Measure J, V, sigma, D and u* from a metaorder-free recorded run.

    D per step is the transaction-lag diffusion constant averaged over lags
    10..100 transactions, converted to steps through the measured
    transaction rate.
    """
    flow = result.params.flow
    if flow.nu <= 0:
        raise ParameterError("derived quantities need nu > 0")
    steps = result.steps_run
    if steps == 0 or result.tx_mid.size < 300:
        raise InsufficientDataError("run too short to derive quantities")
    tau = 1.0 / flow.nu
    j_rate = result.post_counters["executed"] / steps
    n_tx = result.tx_mid.size
    lags = np.unique(np.geomspace(10, 100, 8).astype(int))
    sig2 = np.array([diffusion_constant(result.tx_mid, int(l)) for l in lags])
    tx_rate = n_tx / steps
    d_step = float(np.mean(sig2) * tx_rate)

    lag_life = int(round(tau))
    if result.mid.size > 2 * lag_life:
        d = result.mid[lag_life:] - result.mid[:-lag_life]
        sigma_life = float(np.sqrt(np.mean(d * d)))
    else:
        sigma_life = float(np.sqrt(d_step * tau))

    # normalization uncertainties: sigma over ~steps/tau independent
    # lifetime windows; J from the spread of per-lifetime executed volume
    n_eff = max(steps / tau, 2.0)
    sigma_rel_se = 1.0 / math.sqrt(2.0 * n_eff)
    v_rel_se = 0.0
    t_steps = result.trades.get("step") if result.trades else None
    if t_steps is not None and len(t_steps) > 10:
        vols = result.trades["volume"]
        which = (t_steps // lag_life).astype(np.int64)
        n_win = int(which.max()) + 1
        if n_win > 3:
            per = np.zeros(n_win)
            np.add.at(per, which, vols)
            v_rel_se = float(per.std(ddof=1) / max(per.mean(), 1e-300)
                             / math.sqrt(n_win))

    return DerivedQuantities(
        rho_inf=flow.rho_inf,
        r=flow.mu / flow.nu,
        tau_life=tau,
        j_rate=j_rate,
        v_life=j_rate * tau,
        sigma_life=sigma_life,
        d_step=d_step,
        u_star=math.sqrt(d_step / (2.0 * flow.nu)),
        b_slope=2.0 * j_rate / d_step,
        n_transactions=n_tx,
        steps=steps,
        sigma_rel_se=sigma_rel_se,
        v_rel_se=v_rel_se,
    )


# ---------------------------------------------------------------------------
# mean book profile


@dataclass
class BookProfile:
    u: np.ndarray
    rho: np.ndarray
    n_sides: np.ndarray  # side-snapshots contributing per point

    def to_csv(self, path, json_path=None, fit=None):
        write_columns_csv(path, ["u", "rho"], [self.u, self.rho])
        if json_path:
            write_json(json_path, fit or {})


def mean_book_profile(snapshots) -> BookProfile:
    """Time-and-side averaged volume vs distance from the midpoint.

    Buy and sell sides are pooled by symmetry on the half-tick grid
    u = 0.5, 1.0, 1.5, ... Each snapshot contributes only to its own parity
    class (integer u for even spreads, half-odd u for odd spreads); points
    beyond any snapshot's window coverage are trimmed.
    """
    if snapshots is None or len(snapshots) == 0:
        raise InsufficientDataError("no snapshots")
    width = snapshots.bid.shape[1]
    h = snapshots.halfwidth
    acc = np.zeros(2 * width + 2)
    n_par = np.zeros(2, dtype=np.int64)     # [even-parity, odd-parity] counts
    cover = [np.inf, np.inf]
    idx = np.arange(width)
    for s in range(len(snapshots)):
        mid = snapshots.mids[s]
        lo = snapshots.centers[s] - h
        two_d_bid = np.round(2 * (mid - (lo + idx))).astype(np.int64)
        two_d_ask = np.round(2 * ((lo + idx) - mid)).astype(np.int64)
        parity = int(round(2 * mid)) & 1
        n_par[parity] += 1
        cover[parity] = min(cover[parity],
                            2 * (mid - lo), 2 * (lo + width - 1 - mid))
        bsel = two_d_bid > 0
        np.add.at(acc, two_d_bid[bsel], snapshots.bid[s][bsel])
        asel = two_d_ask > 0
        np.add.at(acc, two_d_ask[asel], snapshots.ask[s][asel])

    us, rhos, ns = [], [], []
    for j in range(1, acc.size):
        parity = j & 1
        if n_par[parity] == 0 or j > cover[parity]:
            continue
        us.append(0.5 * j)
        rhos.append(acc[j] / (2.0 * n_par[parity]))
        ns.append(2 * n_par[parity])
    return BookProfile(u=np.array(us), rho=np.array(rhos),
                       n_sides=np.array(ns, dtype=np.int64))


def fit_exponential_profile(u: np.ndarray, rho: np.ndarray):
    """Least-squares fit of rho_inf * (1 - exp(-u/u_star)).

    Returns (rho_inf, u_star, (se_rho_inf, se_u_star)).
    """
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if u.size < 10:
        raise InsufficientDataError("need at least 10 profile points")

    def model(x, a, b):
        return a * (1.0 - np.exp(-x / b))

    a0 = float(np.max(rho))
    half = np.nonzero(rho >= 0.632 * a0)[0]
    b0 = float(u[half[0]]) if half.size else float(u[-1] / 3.0)
    try:
        popt, pcov = curve_fit(model, u, rho, p0=(a0, max(b0, 1e-6)),
                               maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"exponential profile fit failed: {exc}") from exc
    if not np.all(np.isfinite(popt)) or popt[0] <= 0 or popt[1] <= 0:
        raise FitError(f"exponential profile fit returned {popt}")
    perr = np.sqrt(np.abs(np.diag(pcov)))
    return float(popt[0]), float(popt[1]), (float(perr[0]), float(perr[1]))


# ---------------------------------------------------------------------------
# metaorder impact


def _impact_values(records, convention: str, use_twin: bool) -> np.ndarray:
    """Trade-direction impact per record, in ticks.

    Conventions: 'vwap_mid' (midpoint-marked execution average, the paper-
    comparable choice), 'midpoint' (displacement at completion), 'vwap'
    (trade-price execution average; carries the half-spread).  With
    ``use_twin`` the same-seed no-agent baseline is subtracted (references
    taken at the end of step t0-1 on both paths; mean-zero, variance-
    reducing).
    """
    out = np.empty(len(records))
    for i, r in enumerate(records):
        eps = r.spec.sign
        if convention == "vwap_mid":
            raw = eps * (r.vwap_mid - r.p_start)
            bg = r.bg_vwap_mid
        elif convention == "midpoint":
            raw = r.delta_T
            bg = (r.bg_trajectory[_K_ONE]
                  if r.bg_trajectory is not None else math.nan)
        elif convention == "vwap":
            raw = eps * (r.vwap_exec - r.p_start)
            bg = r.bg_vwap_mid
        else:
            raise ParameterError(f"unknown impact convention {convention!r}")
        if use_twin:
            shift = eps * (r.p_start - r.ref_prev)
            if math.isnan(bg) or math.isnan(shift):
                out[i] = math.nan
            else:
                out[i] = raw + shift - bg
        else:
            out[i] = raw
    return out


def _pair_groups(records) -> list:
    """Group antithetic pair members; singles stay alone.

    Returns a list of lists of record indices.  Pairs with an incomplete
    member are dropped entirely (the pair average needs both sides).
    """
    groups = {}
    singles = []
    for i, r in enumerate(records):
        if r.pair_id >= 0:
            groups.setdefault((r.seed, r.pair_id), []).append(i)
        else:
            singles.append([i])
    out = []
    for members in groups.values():
        if len(members) == 2:
            out.append(members)
        else:
            out.extend([m] for m in members)
    return out + singles


@dataclass
class ImpactCurve:
    """Binned impact vs metaorder size with a power-law fit Delta/sigma = Y (Q/V)^delta."""

    qv: np.ndarray
    impact: np.ndarray
    se: np.ndarray
    n: np.ndarray
    y_fit: float
    delta_fit: float
    y_se: float
    delta_se: float
    convention: str
    n_records: int

    def to_csv(self, path, json_path=None):
        write_columns_csv(path, ["qv", "impact", "se", "n"],
                          [self.qv, self.impact, self.se, self.n])
        if json_path:
            write_json(json_path, {
                "y": self.y_fit, "delta": self.delta_fit,
                "y_se": self.y_se, "delta_se": self.delta_se,
                "convention": self.convention, "n_records": self.n_records,
            })


def _fit_bins(qv, means) -> tuple:
    sel = means > 0
    if sel.sum() < 3:
        return math.nan, math.nan
    x = np.log(qv[sel])
    y = np.log(means[sel])
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return math.exp(coef[0]), coef[1]


def impact_curve(records, v_life: float, sigma_life: float,
                 convention: str = "vwap_mid", use_twin: bool = False,
                 pair_average: bool = True, n_bins: int = 12,
                 min_per_bin: int = 3, n_boot: int = 200,
                 seed: int = 0) -> ImpactCurve:
    """Bin records geometrically in Q/V and fit Delta/sigma = Y (Q/V)^delta.

    Antithetic pair members are averaged into one sample each when
    ``pair_average`` is set (cancels the common background displacement).
    Standard errors of (Y, delta) come from a within-bin bootstrap; fewer
    than 3 populated bins refuses the fit.
    """
    records = [r for r in records if r.completed]
    if not records:
        raise InsufficientDataError("no completed metaorders")
    raw = _impact_values(records, convention, use_twin) / sigma_life
    if pair_average:
        groups = _pair_groups(records)
        qv = np.array([records[g[0]].spec.q / v_life for g in groups])
        vals = np.array([np.mean([raw[i] for i in g]) for g in groups])
    else:
        qv = np.array([r.spec.q / v_life for r in records])
        vals = raw
    keep = ~np.isnan(vals)
    qv, vals = qv[keep], vals[keep]
    if qv.size == 0:
        raise InsufficientDataError("no usable impact values")

    edges = np.geomspace(qv.min() * 0.999, qv.max() * 1.001, n_bins + 1)
    which = np.digitize(qv, edges) - 1
    centers, means, ses, ns, members = [], [], [], [], []
    for b in range(n_bins):
        sel = which == b
        if sel.sum() < min_per_bin:
            continue
        centers.append(math.sqrt(edges[b] * edges[b + 1]))
        means.append(float(vals[sel].mean()))
        ses.append(float(vals[sel].std(ddof=1) / math.sqrt(sel.sum()))
                   if sel.sum() > 1 else math.nan)
        ns.append(int(sel.sum()))
        members.append(vals[sel])
    if len(centers) < 3:
        raise FitError("fewer than 3 populated bins; fit refused")
    centers = np.array(centers)
    means = np.array(means)

    y_fit, delta_fit = _fit_bins(centers, means)
    rng = np.random.Generator(np.random.PCG64(seed))
    ys, ds = [], []
    for _ in range(n_boot):
        boot_means = np.array([
            m[rng.integers(0, m.size, m.size)].mean() for m in members
        ])
        yy, dd = _fit_bins(centers, boot_means)
        if not math.isnan(dd):
            ys.append(yy)
            ds.append(dd)
    y_se = float(np.std(ys, ddof=1)) if len(ys) > 2 else math.nan
    delta_se = float(np.std(ds, ddof=1)) if len(ds) > 2 else math.nan
    return ImpactCurve(
        qv=centers, impact=means, se=np.array(ses), n=np.array(ns, dtype=int),
        y_fit=y_fit, delta_fit=delta_fit, y_se=y_se, delta_se=delta_se,
        convention=convention, n_records=len(records),
    )


# ---------------------------------------------------------------------------
# impact decay after completion


@dataclass
class DecayCurve:
    tau_over_t: np.ndarray
    curve: np.ndarray          # <Delta_tau>/<Delta_T> (ratio of means)
    se: np.ndarray
    plateau: float             # mean of the curve over tau/T in [3, 5]
    plateau_se: float
    exec_ratio: float          # <eps(exec price - start)>/<Delta_T>
    exec_ratio_se: float
    n_records: int

    def to_csv(self, path, json_path=None):
        write_columns_csv(path, ["tau_over_T", "decay", "se"],
                          [self.tau_over_t, self.curve, self.se])
        if json_path:
            write_json(json_path, {
                "plateau": self.plateau, "plateau_se": self.plateau_se,
                "exec_ratio": self.exec_ratio,
                "exec_ratio_se": self.exec_ratio_se,
                "n_records": self.n_records,
            })


def decay_curve(records, use_twin: bool = False, pair_average: bool = True,
                n_boot: int = 200, seed: int = 0) -> DecayCurve:
    """Average rescaled post-completion trajectory.

    The curve is the ratio of means <Delta_tau>/<Delta_T> (identically 1 at
    tau/T = 1); the plateau averages it over tau/T in [3, 5].  Antithetic
    pair members are averaged into one trajectory each when
    ``pair_average`` is set; ``use_twin`` subtracts the same-seed no-agent
    baseline instead.
    """
    complete = []
    rows, execs = [], []
    for r in records:
        if not r.completed:
            continue
        eps = r.spec.sign
        traj = r.trajectory.copy()
        exec_disp = eps * (r.vwap_mid - r.p_start)
        if use_twin:
            if r.bg_trajectory is None or math.isnan(r.bg_ref_prev):
                continue
            shift = eps * (r.p_start - r.ref_prev)
            traj = traj + shift - r.bg_trajectory
            exec_disp = exec_disp + shift - r.bg_vwap_mid
        if np.isnan(traj).any():
            continue
        complete.append(r)
        rows.append(traj)
        execs.append(exec_disp)
    if len(rows) < 2:
        raise InsufficientDataError("not enough complete trajectories")
    if pair_average:
        groups = _pair_groups(complete)
        mat = np.vstack([np.mean([rows[i] for i in g], axis=0) for g in groups])
        execs = np.array([np.mean([execs[i] for i in g]) for g in groups])
    else:
        mat = np.vstack(rows)
        execs = np.array(execs)

    plateau_sel = (TAU_GRID >= 3.0) & (TAU_GRID <= 5.0)

    def stats(m, e):
        mean = m.mean(axis=0)
        norm = mean[_K_ONE]
        if norm == 0.0:
            norm = math.nan
        curve = mean / norm
        return curve, float(curve[plateau_sel].mean()), float(e.mean() / norm)

    curve, plateau, exec_ratio = stats(mat, execs)
    rng = np.random.Generator(np.random.PCG64(seed))
    curves, plats, exrs = [], [], []
    for _ in range(n_boot):
        pick = rng.integers(0, mat.shape[0], mat.shape[0])
        c, p, e = stats(mat[pick], execs[pick])
        curves.append(c)
        plats.append(p)
        exrs.append(e)
    return DecayCurve(
        tau_over_t=TAU_GRID.copy(),
        curve=curve,
        se=np.std(curves, axis=0, ddof=1),
        plateau=plateau,
        plateau_se=float(np.std(plats, ddof=1)),
        exec_ratio=exec_ratio,
        exec_ratio_se=float(np.std(exrs, ddof=1)),
        n_records=mat.shape[0],
    )


# ---------------------------------------------------------------------------
# global imbalance impact


@dataclass
class ImbalanceResult:
    q_centers: np.ndarray
    dp_means: np.ndarray
    dp_ses: np.ndarray
    n: np.ndarray
    slope: float
    slope_se: float
    intercept: float
    curvature: float
    curvature_se: float

    @property
    def curvature_z(self) -> float:
        if self.curvature_se == 0:
            return math.inf
        return abs(self.curvature) / self.curvature_se

    def linear_accepted(self, z: float = 2.0) -> bool:
        return self.curvature_z < z

    def to_csv(self, path, json_path=None, v_life=None, sigma_life=None):
        header = ["q_imbalance", "dp_mean", "dp_se", "n"]
        cols = [self.q_centers, self.dp_means, self.dp_ses, self.n]
        if v_life and sigma_life:
            header += ["qv", "dp_over_sigma"]
            cols += [self.q_centers / v_life, self.dp_means / sigma_life]
        write_columns_csv(path, header, cols)
        if json_path:
            write_json(json_path, {
                "slope": self.slope, "slope_se": self.slope_se,
                "intercept": self.intercept,
                "curvature": self.curvature,
                "curvature_se": self.curvature_se,
                "curvature_z": self.curvature_z,
            })


def global_imbalance_impact(trades: dict, mid: np.ndarray, window: int,
                            n_bins: int = 13,
                            fit_quantile: float = 0.95,
                            n_boot: int = 200, seed: int = 0) -> ImbalanceResult:
    """Conditional mean window price change vs signed volume imbalance.

    Windows are disjoint spans of ``window`` steps of a metaorder-free log;
    the quadratic term of a weighted polynomial fit measures curvature.
    The fit covers the bulk |imbalance| <= ``fit_quantile`` quantile: the
    linearity of the global response holds for small imbalances, while the
    rare heavy-tailed windows bend away and are reported in the bins but
    excluded from the curvature test.  Slope and curvature standard errors
    come from a circular block bootstrap over contiguous windows, since
    long-memory order flow correlates neighbouring windows and per-bin
    standard errors would otherwise be understated.
    """
    steps = mid.size
    n_win = steps // window
    if n_win < 5 * n_bins:
        raise InsufficientDataError(
            f"only {n_win} windows of {window} steps; need >= {5 * n_bins}"
        )
    if trades.get("is_metaorder") is not None and len(trades["is_metaorder"]):
        if np.any(trades["is_metaorder"] == 1):
            raise ParameterError("imbalance impact needs a metaorder-free log")
    t_step = trades["step"]
    signed = trades["sign"] * trades["volume"]
    which = t_step // window
    q_w = np.zeros(n_win)
    np.add.at(q_w, which[which < n_win], signed[which < n_win])
    starts = np.arange(n_win) * window
    ends = starts + window - 1
    dp_w = mid[ends] - mid[starts]

    def summarize(qs, dps_w):
        order = np.argsort(qs)
        q_sorted, dp_sorted = qs[order], dps_w[order]
        m = qs.size
        edges = np.linspace(0, m, n_bins + 1).astype(int)
        qc, dpm, dpse, ns = [], [], [], []
        for b in range(n_bins):
            lo, hi = edges[b], edges[b + 1]
            if hi - lo < 2:
                continue
            qc.append(q_sorted[lo:hi].mean())
            dpm.append(dp_sorted[lo:hi].mean())
            dpse.append(dp_sorted[lo:hi].std(ddof=1) / math.sqrt(hi - lo))
            ns.append(hi - lo)
        return (np.array(qc), np.array(dpm),
                np.maximum(np.array(dpse), 1e-300), np.array(ns, dtype=int))

    def fits(qs, dps_w):
        # equal-count bins make the bin means near-homoskedastic, so plain
        # OLS is used (bootstrap resamples can zero out within-bin spreads,
        # which would blow up inverse-variance weights)
        qc, dpm, _, _ = summarize(qs, dps_w)
        q_cut = np.quantile(np.abs(qs), fit_quantile)
        bulk = np.abs(qc) <= q_cut
        if bulk.sum() < 5:
            bulk = np.ones_like(qc, dtype=bool)
        qc_f, dpm_f = qc[bulk], dpm[bulk]
        beta1, *_ = np.linalg.lstsq(
            np.vstack([np.ones_like(qc_f), qc_f]).T, dpm_f, rcond=None)
        beta2, *_ = np.linalg.lstsq(
            np.vstack([np.ones_like(qc_f), qc_f, qc_f * qc_f]).T, dpm_f,
            rcond=None)
        return beta1, beta2

    qc, dpm, dps, ns = summarize(q_w, dp_w)
    beta1, beta2 = fits(q_w, dp_w)

    # block bootstrap over contiguous windows (long-memory flow correlates
    # neighbours; iid errors would understate the fit uncertainties)
    n_blocks = max(20, n_win // 50)
    block = n_win // n_blocks
    rng = np.random.Generator(np.random.PCG64(seed))
    slopes, curvs = [], []
    for _ in range(n_boot):
        picks = rng.integers(0, n_blocks, n_blocks)
        idx = np.concatenate([
            np.arange(p * block, min((p + 1) * block, n_win)) for p in picks
        ])
        try:
            b1, b2 = fits(q_w[idx], dp_w[idx])
        except np.linalg.LinAlgError:
            continue
        slopes.append(b1[1])
        curvs.append(b2[2])
    slope_se = float(np.std(slopes, ddof=1)) if len(slopes) > 2 else math.nan
    curv_se = float(np.std(curvs, ddof=1)) if len(curvs) > 2 else math.nan

    return ImbalanceResult(
        q_centers=qc, dp_means=dpm, dp_ses=dps, n=ns,
        slope=float(beta1[1]), slope_se=slope_se,
        intercept=float(beta1[0]),
        curvature=float(beta2[2]), curvature_se=curv_se,
    )
