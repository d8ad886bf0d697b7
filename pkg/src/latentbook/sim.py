"""Simulation driver: warmup, recorded runs, and metaorder injection.

``run`` and ``run_with_metaorder`` advance the compiled kernel in chunks and
assemble a :class:`RunResult`.  ``Simulation.step`` is a pure-Python
reference implementation of one step built from the book operations; it
consumes the background random stream in exactly the same order as the
kernel, so the two paths produce bit-identical runs from the same seed
(tested).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernel, samplers
from .book import Book, initial_book
from .errors import DegenerateBookError, DropBudgetError, ParameterError
from .io_utils import f17, write_columns_csv, write_csv
from .orderflow import (
    FlowParams,
    SignProcessState,
    market_order_volume,
    next_sign,
    replica_generators,
)

#: tau/T grid for metaorder trajectories (columns d_0.1 ... d_5.0)
TAU_GRID = np.round(np.arange(1, 51) * 0.1, 10)


@dataclass
class SimParams:
    """Everything one replica needs.

    ``alpha`` is the run-length tail exponent (sign autocorrelation exponent
    gamma = alpha - 1).  ``sign_mode`` 'iid' replaces the run-length process
    with fair coins; ``unit_volume`` forces unit market orders (the
    zeta -> infinity limit).  ``warmup_steps`` defaults to 5 order lifetimes.
    """

    flow: FlowParams = field(default_factory=FlowParams)
    alpha: float = 1.5
    sign_mode: str = "lmf"
    run_length_mode: str = "zeta_pmf"
    unit_volume: bool = False
    halfwidth: int = 500
    warmup_steps: Optional[int] = None
    horizon_steps: int = 100_000
    seed: int = 0
    snapshot_interval: int = 0
    start_price: int = 0
    drop_budget: float = 1e-6
    record_tx: bool = True
    record_trades: bool = True
    meta_tail: float = 4.0  # record the trajectory to (1 + meta_tail) * T

    def __post_init__(self):
        if self.sign_mode not in ("lmf", "iid"):
            raise ParameterError("sign_mode must be 'lmf' or 'iid'")
        if self.run_length_mode not in ("zeta_pmf", "pareto_ceil"):
            raise ParameterError(
                "run_length_mode must be 'zeta_pmf' or 'pareto_ceil'")
        if self.sign_mode == "lmf" and self.alpha <= 1.0:
            raise ParameterError("alpha must exceed 1")
        if self.halfwidth < 4:
            raise ParameterError("halfwidth must be at least 4 ticks")
        if self.warmup_steps is None:
            if self.flow.nu > 0:
                self.warmup_steps = int(round(5.0 / self.flow.nu))
            else:
                self.warmup_steps = 0

    @property
    def drift_limit(self) -> int:
        # recenter when the midpoint drifts more than K/8 = halfwidth/4
        return max(1, self.halfwidth // 4)


@dataclass
class TradeRecord:
    step: int
    sign: int
    volume: int
    vwap: float
    is_metaorder: bool = False


@dataclass
class MetaorderSpec:
    """One metaorder: total size q, direction, participation and style."""

    q: int
    sign: int = 1
    phi: float = 0.3
    style: str = "zeta_execution"
    start_step: Optional[int] = None  # absolute step; default = end of warmup

    def __post_init__(self):
        if self.q < 1:
            raise ParameterError("metaorder size must be >= 1")
        if not 0.0 < self.phi <= 1.0:
            raise ParameterError("participation phi must be in (0, 1]")
        if self.sign not in (1, -1):
            raise ParameterError("sign must be +1 or -1")
        if self.style not in ("zeta_execution", "unit_execution"):
            raise ParameterError("style must be zeta_execution or unit_execution")


@dataclass
class MetaorderRecord:
    """Measured outcome of one metaorder (all prices in ticks).

    ``trajectory`` holds the trade-direction midpoint displacement
    sign*(mid(t0 + g*T) - p_start) on the TAU_GRID, NaN where the run ended
    first.  Twin-baseline fields hold the same quantities measured on a
    no-metaorder run from the identical state and background stream
    (references taken at the end of step t0-1 on both paths).  Records from
    antithetic (+/-) pairs share a ``pair_id``; averaging the trade-direction
    quantities over a pair cancels the common background displacement
    exactly while both members remain valid metaorder samples.
    """

    spec: MetaorderSpec
    seed: int
    gamma: float
    zeta: float
    completed: bool
    executed: int
    n_children: int
    p_start: float
    p_first_trade: float
    vwap_exec: float
    vwap_mid: float
    t_first: int
    completion_step: int
    duration: int
    delta_T: float
    trajectory: np.ndarray
    ref_prev: float
    bg_ref_prev: float = math.nan
    bg_vwap_mid: float = math.nan
    bg_trajectory: Optional[np.ndarray] = None
    pair_id: int = -1


@dataclass
class SnapshotSet:
    """Book snapshots in absolute coordinates (midpoints carried alongside)."""

    halfwidth: int
    steps: np.ndarray
    mids: np.ndarray
    centers: np.ndarray
    bid: np.ndarray  # (n_snapshots, width)
    ask: np.ndarray

    def __len__(self):
        return len(self.steps)


@dataclass
class RunResult:
    params: SimParams
    mid: np.ndarray                    # post-warmup midpoint per step
    tx_mid: np.ndarray                 # midpoint after each post-warmup trade
    trades: dict                       # columnar post-warmup trade log
    snapshots: Optional[SnapshotSet]
    counters: dict                     # cumulative counts incl. warmup
    post_counters: dict                # post-warmup deltas
    steps_run: int                     # post-warmup steps actually executed
    meta: Optional[MetaorderRecord] = None
    twin_mid: Optional[np.ndarray] = None

    def save(self, outdir, prefix="run") -> None:
        """Write price series and trade log CSVs."""
        import os

        mid_path = os.path.join(outdir, f"{prefix}_prices.csv")
        write_columns_csv(
            mid_path, ["step", "midpoint"],
            [np.arange(self.mid.size), self.mid],
        )
        trades_path = os.path.join(outdir, f"{prefix}_trades.csv")
        write_columns_csv(
            trades_path,
            ["step", "sign", "volume", "vwap", "is_metaorder"],
            [self.trades["step"], self.trades["sign"], self.trades["volume"],
             self.trades["vwap"], self.trades["is_metaorder"]],
        )


# ---------------------------------------------------------------------------
# kernel-state plumbing


class _State:
    """Mutable kernel state for one replica."""

    def __init__(self, params: SimParams):
        self.params = params
        self.sgen, self.fgen, self.agent = replica_generators(params.seed)
        book = initial_book(params.start_price, params.halfwidth,
                            params.flow.rho_inf if params.flow.nu > 0 else 0.0,
                            self.fgen)
        self.bid = book.bid
        self.ask = book.ask
        self.sti = np.zeros(kernel.STATE_I_SIZE, dtype=np.int64)
        self.stf = np.zeros(kernel.STATE_F_SIZE, dtype=np.float64)
        self.sti[kernel.I_CENTER] = params.start_price
        self.sti[kernel.I_BEST_BID] = book.best_bid()
        self.sti[kernel.I_BEST_ASK] = book.best_ask()
        self.sti[kernel.I_META_FIRST] = -1
        self.sti[kernel.I_META_DONE] = -1
        self.initial_volume = int(self.bid.sum() + self.ask.sum())
        if params.run_length_mode == "zeta_pmf" and params.sign_mode == "lmf":
            self.run_pmf = 1
            self.rl_cdf, self.rl_ctail = samplers.run_length_pmf_table(
                max(params.alpha, 1.000001))
        else:
            self.run_pmf = 0
            self.rl_cdf = np.zeros(1)
            self.rl_ctail = 0.0
        nu = params.flow.nu
        self.nu_zero = 1 if nu == 0.0 else 0
        if 0.0 < nu <= 0.5:
            self.btable, self.b_nsafe, self.b_odds = samplers.binomial_table(nu)
        elif nu == 0.0:
            self.btable, self.b_nsafe, self.b_odds = samplers.binomial_table(0.0)
        else:
            raise ParameterError(
                "the simulation kernel supports nu <= 0.5 (model regime nu << 1)"
            )

    def clone_background(self) -> "_State":
        """Deep copy sharing nothing; agent stream state is not preserved."""
        twin = object.__new__(_State)
        twin.params = self.params
        twin.bid = self.bid.copy()
        twin.ask = self.ask.copy()
        twin.sti = self.sti.copy()
        twin.stf = self.stf.copy()
        twin.sgen = np.random.Generator(np.random.PCG64())
        twin.sgen.bit_generator.state = self.sgen.bit_generator.state
        twin.fgen = np.random.Generator(np.random.PCG64())
        twin.fgen.bit_generator.state = self.fgen.bit_generator.state
        twin.agent = np.random.Generator(np.random.PCG64())
        twin.run_pmf = self.run_pmf
        twin.rl_cdf = self.rl_cdf
        twin.rl_ctail = self.rl_ctail
        twin.nu_zero = self.nu_zero
        twin.btable = self.btable
        twin.b_nsafe = self.b_nsafe
        twin.b_odds = self.b_odds
        twin.initial_volume = self.initial_volume
        return twin

    def counters(self) -> dict:
        sti = self.sti
        return {
            "deposited": int(sti[kernel.I_DEPOSITED]),
            "cancelled": int(sti[kernel.I_CANCELLED]),
            "executed": int(sti[kernel.I_EXECUTED]),
            "dropped": int(sti[kernel.I_DROPPED]),
            "recenters": int(sti[kernel.I_RECENTERS]),
            "partial_fills": int(sti[kernel.I_PARTIAL_FILLS]),
            "step": int(sti[kernel.I_STEP]),
        }

    def book_volume(self) -> int:
        return int(self.bid.sum() + self.ask.sum())


_NO_META = dict(meta_on=0, meta_start=0, meta_sign=1, meta_q=0,
                meta_phi=0.0, meta_unit=0, meta_zeta=1.0)


def _advance(state: _State, n_steps: int, *, record_tx: bool,
             collect_mid: Optional[list] = None,
             collect_trades: Optional[dict] = None,
             collect_tx: Optional[list] = None,
             meta: Optional[dict] = None,
             chunk_size: int = 50_000,
             snapshot_interval: int = 0,
             snapshots: Optional[list] = None) -> int:
    """Run up to ``n_steps``; returns steps actually executed.

    Stops early when a metaorder finished its post-completion trajectory.
    Raises DegenerateBookError if the book loses a side.
    """
    p = state.params
    m = meta if meta is not None else _NO_META
    done = 0
    next_snap = None
    if snapshot_interval > 0:
        base = int(state.sti[kernel.I_STEP])
        next_snap = base + snapshot_interval
    while done < n_steps:
        chunk = min(chunk_size, n_steps - done)
        if next_snap is not None:
            until = next_snap - int(state.sti[kernel.I_STEP])
            if 0 < until < chunk:
                chunk = until
        mid_buf = np.empty(chunk, dtype=np.float64)
        cap_tr = int(chunk * max(p.flow.mu, 0.01) * 3) + 2 * kernel._HEADROOM
        tr_step = np.empty(cap_tr, dtype=np.int64)
        tr_sign = np.empty(cap_tr, dtype=np.int64)
        tr_vol = np.empty(cap_tr, dtype=np.int64)
        tr_vwap = np.empty(cap_tr, dtype=np.float64)
        tr_meta = np.empty(cap_tr, dtype=np.int64)
        cap_tx = cap_tr if record_tx else 2 * kernel._HEADROOM
        tx_buf = np.empty(cap_tx, dtype=np.float64)

        offset = 0
        while offset < chunk:
            steps, n_tr, n_tx, status = kernel.run_chunk(
                state.sgen, state.fgen, state.agent, state.bid, state.ask,
                state.sti, state.stf,
                chunk - offset,
                p.flow.lam, p.flow.mu, max(p.alpha, 1.000001), p.flow.zeta,
                1 if p.sign_mode == "iid" else 0,
                1 if p.unit_volume else 0,
                state.run_pmf, state.rl_cdf, state.rl_ctail,
                p.halfwidth, p.drift_limit,
                state.btable, state.b_nsafe, state.b_odds, state.nu_zero,
                m["meta_on"], m["meta_start"], m["meta_sign"], m["meta_q"],
                m["meta_phi"], m["meta_unit"], m["meta_zeta"], p.meta_tail,
                1 if record_tx else 0,
                mid_buf[offset:],
                tr_step, tr_sign, tr_vol, tr_vwap, tr_meta,
                tx_buf,
            )
            if collect_mid is not None and steps > 0:
                collect_mid.append(mid_buf[offset:offset + steps].copy())
            if collect_trades is not None and n_tr > 0:
                collect_trades["step"].append(tr_step[:n_tr].copy())
                collect_trades["sign"].append(tr_sign[:n_tr].copy())
                collect_trades["volume"].append(tr_vol[:n_tr].copy())
                collect_trades["vwap"].append(tr_vwap[:n_tr].copy())
                collect_trades["is_metaorder"].append(tr_meta[:n_tr].copy())
            if collect_tx is not None and n_tx > 0:
                collect_tx.append(tx_buf[:n_tx].copy())
            offset += steps
            done += steps
            if status == kernel.OK:
                break
            if status == kernel.BUFFER_FULL:
                continue  # stream is at a step boundary; rerun remaining steps
            if status == kernel.META_DONE:
                return done
            if status == kernel.DEGENERATE:
                raise DegenerateBookError(
                    f"book lost a side at step {int(state.sti[kernel.I_STEP])}"
                )
            raise RuntimeError(f"kernel returned unexpected status {status}")
        if next_snap is not None and int(state.sti[kernel.I_STEP]) == next_snap:
            mid = 0.5 * (state.sti[kernel.I_BEST_BID] + state.sti[kernel.I_BEST_ASK])
            snapshots.append((next_snap, mid, int(state.sti[kernel.I_CENTER]),
                              state.bid.copy(), state.ask.copy()))
            next_snap += snapshot_interval
    return done


def _merge_trades(collect: dict) -> dict:
    out = {}
    for k, parts in collect.items():
        out[k] = (np.concatenate(parts) if parts
                  else np.empty(0, dtype=np.float64 if k == "vwap" else np.int64))
    return out


def _empty_trade_collector() -> dict:
    return {k: [] for k in ("step", "sign", "volume", "vwap", "is_metaorder")}


def _check_drop_budget(state: _State) -> None:
    c = state.counters()
    deposited = max(c["deposited"], 1)
    if c["dropped"] / deposited > state.params.drop_budget:
        raise DropBudgetError(
            f"dropped {c['dropped']} of {deposited} deposited orders exceeds "
            f"budget {state.params.drop_budget:g}; widen the window"
        )


def run(params: SimParams) -> RunResult:
    """Warm up (unrecorded) then run the horizon, recording per-step mids,
    trades, per-transaction mids and book snapshots."""
    state = _State(params)
    if params.warmup_steps > 0:
        _advance(state, params.warmup_steps, record_tx=False)
    at_warmup = state.counters()

    mids, tx, snaps = [], [], []
    trades = _empty_trade_collector() if params.record_trades else None
    steps = _advance(
        state, params.horizon_steps,
        record_tx=params.record_tx,
        collect_mid=mids, collect_trades=trades, collect_tx=tx,
        snapshot_interval=params.snapshot_interval,
        snapshots=snaps,
    )
    _check_drop_budget(state)
    totals = state.counters()
    post = {k: totals[k] - at_warmup[k] for k in totals}
    merged = _merge_trades(trades) if trades is not None else {}
    if merged:
        merged["step"] = merged["step"] - params.warmup_steps

    snapshot_set = None
    if snaps:
        snapshot_set = SnapshotSet(
            halfwidth=params.halfwidth,
            steps=np.array([s[0] for s in snaps], dtype=np.int64),
            mids=np.array([s[1] for s in snaps], dtype=np.float64),
            centers=np.array([s[2] for s in snaps], dtype=np.int64),
            bid=np.stack([s[3] for s in snaps]) if snaps else None,
            ask=np.stack([s[4] for s in snaps]) if snaps else None,
        )
    return RunResult(
        params=params,
        mid=np.concatenate(mids) if mids else np.empty(0),
        tx_mid=np.concatenate(tx) if tx else np.empty(0),
        trades=merged,
        snapshots=snapshot_set,
        counters=totals,
        post_counters=post,
        steps_run=steps,
        meta=None,
    )


def _reset_meta_slots(state: _State) -> None:
    state.sti[kernel.I_META_EXEC] = 0
    state.sti[kernel.I_META_CHILDREN] = 0
    state.sti[kernel.I_META_FIRST] = -1
    state.sti[kernel.I_META_DONE] = -1
    state.sti[kernel.I_META_STOP] = 0
    state.stf[:] = 0.0


def _run_meta_segment(state: _State, spec: MetaorderSpec, start: int,
                      horizon: int, twin: bool):
    """Run one metaorder segment from the current state.

    Returns (record, mid, trades, tx, twin_mid, steps).  ``start`` is the
    absolute step at which the agent becomes eligible; recording starts at
    the current state step (the segment base).
    """
    params = state.params
    base = int(state.sti[kernel.I_STEP])
    ref0 = 0.5 * float(state.sti[kernel.I_BEST_BID] + state.sti[kernel.I_BEST_ASK])
    _reset_meta_slots(state)
    twin_state = state.clone_background() if twin else None

    meta = dict(
        meta_on=1, meta_start=start, meta_sign=spec.sign, meta_q=spec.q,
        meta_phi=spec.phi,
        meta_unit=1 if spec.style == "unit_execution" else 0,
        meta_zeta=params.flow.zeta,
    )
    mids, tx = [], []
    trades = _empty_trade_collector()
    steps = _advance(
        state, horizon, record_tx=params.record_tx,
        collect_mid=mids, collect_trades=trades, collect_tx=tx, meta=meta,
    )
    mid = np.concatenate(mids) if mids else np.empty(0)
    trades = _merge_trades(trades)
    trades["step"] = trades["step"] - base

    twin_mid = None
    if twin:
        twin_mids = []
        _advance(twin_state, steps, record_tx=False, collect_mid=twin_mids)
        twin_mid = np.concatenate(twin_mids) if twin_mids else np.empty(0)

    record = _build_metaorder_record(params, spec, state, mid, trades,
                                     twin_mid, base, ref0)
    return record, mid, trades, tx, twin_mid, steps


def run_with_metaorder(params: SimParams, spec: Optional[MetaorderSpec],
                       twin: bool = False) -> RunResult:
    """Inject one metaorder into the background flow.

    With ``spec=None`` this is bit-identical to :func:`run` (the agent stream
    is never consumed).  With ``twin=True`` the same post-warmup span is
    re-run without the agent from an identical state snapshot, and the
    twin-baseline fields of the record are filled.
    """
    if spec is None:
        return run(params)
    state = _State(params)
    if params.warmup_steps > 0:
        _advance(state, params.warmup_steps, record_tx=False)
    at_warmup = state.counters()
    start = spec.start_step if spec.start_step is not None else params.warmup_steps
    if start < params.warmup_steps:
        raise ParameterError("metaorder start_step must be >= warmup_steps")

    record, mid, trades, tx, twin_mid, steps = _run_meta_segment(
        state, spec, start, params.horizon_steps, twin)
    _check_drop_budget(state)
    totals = state.counters()
    post = {k: totals[k] - at_warmup[k] for k in totals}
    return RunResult(
        params=params, mid=mid,
        tx_mid=np.concatenate(tx) if tx else np.empty(0),
        trades=trades, snapshots=None,
        counters=totals, post_counters=post, steps_run=steps,
        meta=record, twin_mid=twin_mid,
    )


def metaorder_batch(params: SimParams, specs, rewarm_steps: Optional[int] = None,
                    twin: bool = True, segment_horizon: Optional[int] = None,
                    antithetic: bool = False):
    """Run many metaorders on one replica, re-warming between them.

    The replica warms up once, then alternates unrecorded re-warm spans of
    ``rewarm_steps`` (default one order lifetime) with recorded metaorder
    segments; the book is reused so the per-metaorder cost is one lifetime
    rather than a full warmup.  With ``antithetic=True`` every spec runs
    twice from an identical snapshot (same streams) with opposite signs,
    tagged with a shared pair_id; the trade-direction pair average cancels
    the common background displacement.  Returns a list of MetaorderRecord.
    """
    state = _State(params)
    if params.warmup_steps > 0:
        _advance(state, params.warmup_steps, record_tx=False)
    if rewarm_steps is None:
        rewarm_steps = int(round(params.flow.tau_life)) if params.flow.nu > 0 else 0
    horizon = segment_horizon if segment_horizon is not None else params.horizon_steps
    records = []
    for i, spec in enumerate(specs):
        if spec.start_step is not None:
            raise ParameterError("batch metaorders must not set start_step")
        if i > 0 and rewarm_steps > 0:
            _advance(state, rewarm_steps, record_tx=False)
        start = int(state.sti[kernel.I_STEP])
        if antithetic:
            snap = state.clone_background()
            snap_agent_state = state.agent.bit_generator.state
            rec_a, *_ = _run_meta_segment(state, spec, start, horizon, twin)
            rec_a.pair_id = i
            flipped = replace(spec, sign=-spec.sign)
            snap.agent.bit_generator.state = snap_agent_state
            rec_b, *_ = _run_meta_segment(snap, flipped, start, horizon, twin)
            rec_b.pair_id = i
            records.append(rec_a)
            records.append(rec_b)
            # continue from the +run's end state (the agent's perturbation
            # is erased by the next re-warm span either way)
        else:
            record, *_ = _run_meta_segment(state, spec, start, horizon, twin)
            records.append(record)
    _check_drop_budget(state)
    return records


def _build_metaorder_record(params, spec, state, mid, trades, twin_mid,
                            base_step=None, ref0=None):
    sti, stf = state.sti, state.stf
    wu = params.warmup_steps if base_step is None else base_step
    executed = int(sti[kernel.I_META_EXEC])
    n_children = int(sti[kernel.I_META_CHILDREN])
    completed = executed >= spec.q
    eps = spec.sign
    t_first = int(sti[kernel.I_META_FIRST])
    t_done = int(sti[kernel.I_META_DONE])
    p_start = float(stf[kernel.F_META_PSTART])
    gamma = params.alpha - 1.0

    if n_children == 0:
        return MetaorderRecord(
            spec=spec, seed=params.seed, gamma=gamma, zeta=params.flow.zeta,
            completed=False, executed=0, n_children=0,
            p_start=math.nan, p_first_trade=math.nan, vwap_exec=math.nan,
            vwap_mid=math.nan, t_first=-1, completion_step=-1, duration=0,
            delta_T=math.nan, trajectory=np.full(TAU_GRID.size, np.nan),
            ref_prev=math.nan,
        )

    duration = max(1, (t_done if t_done >= 0 else int(sti[kernel.I_STEP])) - t_first)
    vwap_exec = float(stf[kernel.F_META_VWAP_NUM]) / executed
    vwap_mid = float(stf[kernel.F_META_VWAPMID_NUM]) / executed

    def displaced(series, ref):
        out = np.full(TAU_GRID.size, np.nan)
        for k, g in enumerate(TAU_GRID):
            idx = t_first - wu + int(round(g * duration))
            if 0 <= idx < series.size:
                out[k] = eps * (series[idx] - ref)
        return out

    ref_idx = t_first - wu - 1
    if ref_idx >= 0:
        ref_prev = float(mid[ref_idx])
    else:
        ref_prev = ref0 if ref0 is not None else p_start
    trajectory = displaced(mid, p_start)
    delta_T = math.nan
    if completed and t_done - wu < mid.size:
        delta_T = eps * (float(mid[t_done - wu]) - p_start)

    bg_ref_prev = math.nan
    bg_vwap_mid = math.nan
    bg_trajectory = None
    if twin_mid is not None and twin_mid.size:
        if ref_idx >= 0:
            bg_ref_prev = float(twin_mid[ref_idx])
        else:
            # before the first recorded step the paths share the same state
            bg_ref_prev = ref_prev
        if not math.isnan(bg_ref_prev):
            bg_trajectory = displaced(twin_mid, bg_ref_prev)
            child = trades["is_metaorder"] == 1
            c_steps = trades["step"][child]  # already post-warmup relative
            c_vols = trades["volume"][child]
            ok = c_steps < twin_mid.size
            if ok.all() and executed > 0:
                bg_vwap_mid = eps * float(
                    np.sum((twin_mid[c_steps] - bg_ref_prev) * c_vols)
                ) / executed

    return MetaorderRecord(
        spec=spec, seed=params.seed, gamma=gamma, zeta=params.flow.zeta,
        completed=completed, executed=executed, n_children=n_children,
        p_start=p_start, p_first_trade=float(stf[kernel.F_META_P1]),
        vwap_exec=vwap_exec, vwap_mid=vwap_mid,
        t_first=t_first, completion_step=t_done, duration=duration,
        delta_T=delta_T, trajectory=trajectory, ref_prev=ref_prev,
        bg_ref_prev=bg_ref_prev, bg_vwap_mid=bg_vwap_mid,
        bg_trajectory=bg_trajectory,
    )


# ---------------------------------------------------------------------------
# metaorder record CSV

_D_COLS = [f"d_{g:.1f}" for g in TAU_GRID]
_T_COLS = [f"t_{g:.1f}" for g in TAU_GRID]
METAORDER_HEADER = (
    ["seed", "Q", "phi", "style", "gamma", "zeta",
     "p_start", "vwap", "T", "delta_T"]
    + _D_COLS
    + ["p_first_trade", "vwap_mid", "ref_prev", "executed", "n_children",
       "completed", "bg_ref_prev", "bg_vwap_mid", "pair_id"]
    + _T_COLS
)


def metaorder_rows(records) -> list:
    rows = []
    for r in records:
        bg_traj = (r.bg_trajectory if r.bg_trajectory is not None
                   else np.full(TAU_GRID.size, np.nan))
        row = ([r.seed, r.spec.q, r.spec.phi, r.spec.style, r.gamma, r.zeta,
                r.p_start, r.vwap_exec, r.duration, r.delta_T]
               + [float(x) for x in r.trajectory]
               + [r.p_first_trade, r.vwap_mid, r.ref_prev, r.executed,
                  r.n_children, r.completed, r.bg_ref_prev, r.bg_vwap_mid,
                  r.pair_id]
               + [float(x) for x in bg_traj])
        rows.append(row)
    return rows


def save_metaorders(path, records) -> None:
    write_csv(path, METAORDER_HEADER, metaorder_rows(records))


# ---------------------------------------------------------------------------
# pure-Python reference implementation of one step


class Simulation:
    """Step-wise reference simulator over the Book operations.

    Consumes the sign and flow streams in the same order as the kernel:
    deposits (total count then uniform bins from the flow stream), then per
    market order a sign (sign stream) and a volume fraction (flow stream),
    then per-level cancellation binomials (flow stream; bid side ascending,
    ask side ascending).  Used for unit tests and the kernel equivalence
    check; metaorders are only supported by the compiled path.
    """

    def __init__(self, params: SimParams):
        self.params = params
        self.flow = params.flow
        self.sgen, self.fgen, self.agent = replica_generators(params.seed)
        self.book = initial_book(
            params.start_price, params.halfwidth,
            self.flow.rho_inf if self.flow.nu > 0 else 0.0, self.fgen)
        self.sign_state = SignProcessState(alpha=max(params.alpha, 1.000001))
        if params.run_length_mode == "zeta_pmf":
            self.rl_cdf, self.rl_ctail = samplers.run_length_pmf_table(
                self.sign_state.alpha)
        else:
            self.rl_cdf, self.rl_ctail = None, None
        self.step_count = 0
        self.dropped = 0
        self.deposited = 0
        self.executed = 0
        self.cancelled = 0

    def _next_sign(self) -> int:
        if self.rl_cdf is None:
            return next_sign(self.sign_state, self.sgen)
        state = self.sign_state
        if state.remaining == 0:
            state.current_sign = samplers.sign_draw(self.sgen)
            state.remaining = samplers.run_length_pmf_draw(
                self.sgen, state.alpha, self.rl_cdf, self.rl_ctail)
        state.remaining -= 1
        return state.current_sign

    def midpoint(self):
        return self.book.midpoint()

    def step(self) -> list:
        """Advance one step; returns the step's trades."""
        p = self.params
        book = self.book
        bb, ba = book.best_bid(), book.best_ask()
        if bb is None or ba is None:
            raise DegenerateBookError("book lost a side")
        mid2 = bb + ba
        width = len(book.bid)
        lo = book.lo

        n_dep = samplers.poisson_draw(self.fgen, self.flow.lam * width)
        for _ in range(n_dep):
            i = samplers.uniform_bin(self.fgen, width)
            p2 = 2 * (lo + i)
            if p2 < mid2:
                book.bid[i] += 1
                self.deposited += 1
            elif p2 > mid2:
                book.ask[i] += 1
                self.deposited += 1

        trades = []
        n_mk = samplers.poisson_draw(self.fgen, self.flow.mu)
        for _ in range(n_mk):
            if p.sign_mode == "iid":
                sgn = samplers.sign_draw(self.sgen)
            else:
                sgn = self._next_sign()
            if p.unit_volume:
                vol = 1
            else:
                f = samplers.fraction_draw(self.fgen, self.flow.zeta)
                q_best = (book.ask[book.index_of(book.best_ask())] if sgn == 1
                          else book.bid[book.index_of(book.best_bid())])
                vol = market_order_volume(f, int(q_best))
            report = book.execute_market_order(sgn, vol)
            if report.executed == 0 or book.best_bid() is None or book.best_ask() is None:
                raise DegenerateBookError("book lost a side")
            self.executed += report.executed
            trades.append(TradeRecord(
                step=self.step_count, sign=sgn, volume=report.executed,
                vwap=report.vwap, is_metaorder=False))

        self.cancelled += book.cancellation_sweep(self.flow.nu, self.fgen)
        if book.best_bid() is None or book.best_ask() is None:
            raise DegenerateBookError("book lost a side")

        mid = book.midpoint()
        if abs(mid - book.center) > p.drift_limit:
            new_center = (int(round(2 * mid)) + 1) >> 1
            self.dropped += book.recenter(new_center)
        self.step_count += 1
        return trades
