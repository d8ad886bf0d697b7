"""Compiled simulation inner loop.

One step applies, in order: limit-order deposits, market-order executions,
cancellations, and a window recenter check.  The chunk runner advances many
steps per call and records per-step midpoints, trades, and per-transaction
midpoints into caller-provided buffers.

Randomness comes from three generators: the sign stream (market-order signs
and run lengths), the flow stream (deposits, volume fractions and
cancellations) and the agent stream (metaorder attribution coins and agent
volume fractions).  Every market-order event advances the sign process and
consumes a flow fraction even when the event is attributed to the agent
(whose values replace the discarded background ones), so the background
streams stay aligned with a no-metaorder run of the same seed until the
first executed child order.

Deposits are drawn as a total Poisson(lam * width) count plus uniform bins
(exact Poissonization of independent Poisson(lam) per bin); an order landing
on an integral midpoint tick is skipped.  Cancellation thins every level by
an exact Binomial(volume, nu) draw, bid side low-to-high then ask side.

A recenter shifts the window toward the midpoint and drops volume falling
off the trailing edge; the vacated leading edge starts empty and refills at
the deposition rate (callers keep the window wide enough that recentring is
rare and the dropped fraction negligible, enforced by the run drop budget).
"""

import math

import numpy as np
from numba import njit

from .samplers import (
    binomial_draw,
    fraction_draw,
    poisson_draw,
    run_length_draw,
    run_length_pmf_draw,
    sign_draw,
    uniform_bin,
)

# int64 state-vector slots
I_CENTER = 0        # window center (absolute tick)
I_BEST_BID = 1      # absolute tick of the best bid (always a populated level)
I_BEST_ASK = 2
I_SIGN = 3          # current sign of the run-length process
I_REMAINING = 4     # market orders left in the current run
I_STEP = 5          # global step counter
I_DEPOSITED = 6     # cumulative placed limit-order volume
I_CANCELLED = 7
I_EXECUTED = 8
I_DROPPED = 9       # cumulative volume dropped by recentring
I_RECENTERS = 10
I_PARTIAL_FILLS = 11  # market orders that exhausted the opposite side
I_META_EXEC = 12
I_META_CHILDREN = 13
I_META_FIRST = 14   # step of the first child order (-1 before)
I_META_DONE = 15    # step of completion (-1 before)
I_META_STOP = 16    # last step needed for the post-completion trajectory
STATE_I_SIZE = 17

# float64 state-vector slots
F_META_PSTART = 0      # midpoint immediately before the first child
F_META_P1 = 1          # trade vwap of the first child
F_META_VWAP_NUM = 2    # sum(price * volume) over child fills
F_META_VWAPMID_NUM = 3  # sum(post-child midpoint * volume) over children
STATE_F_SIZE = 4

# chunk exit codes
OK = 0
META_DONE = 1
DEGENERATE = 2
BUFFER_FULL = 3
CORRUPT = 5

_HEADROOM = 512


@njit(cache=True)
def run_chunk(sgen, fgen, agent,
              bid, ask, sti, stf,
              n_steps,
              lam, mu, alpha, zeta,
              sign_iid, unit_volume,
              run_pmf, rl_cdf, rl_ctail,
              halfwidth, drift_limit,
              btable, b_nsafe, b_odds, nu_zero,
              meta_on, meta_start, meta_sign, meta_q, meta_phi,
              meta_unit, meta_zeta, meta_tail,
              record_tx,
              mid_out,
              tr_step, tr_sign, tr_vol, tr_vwap, tr_meta,
              tx_mid):
    """Advance up to ``n_steps`` steps; returns (steps_done, n_trades, n_tx, status).

    Chunk boundaries are always step boundaries, so a resumed chunk consumes
    the random streams exactly as an uninterrupted run would.
    """
    width = bid.shape[0]
    lam_tot = lam * width
    tr_cap = tr_step.shape[0]
    tx_cap = tx_mid.shape[0]
    n_trades = 0
    n_tx = 0

    for s in range(n_steps):
        step = sti[I_STEP]

        if meta_on == 1 and sti[I_META_DONE] >= 0 and step > sti[I_META_STOP]:
            return s, n_trades, n_tx, META_DONE
        if n_trades + _HEADROOM > tr_cap:
            return s, n_trades, n_tx, BUFFER_FULL
        if record_tx == 1 and n_tx + _HEADROOM > tx_cap:
            return s, n_trades, n_tx, BUFFER_FULL

        center = sti[I_CENTER]
        lo = center - halfwidth
        hi = center + halfwidth
        best_bid = sti[I_BEST_BID]
        best_ask = sti[I_BEST_ASK]
        mid2 = best_bid + best_ask  # twice the midpoint; exact integer

        # -- phase 1: limit-order deposits --------------------------------
        n_dep = poisson_draw(fgen, lam_tot)
        for _ in range(n_dep):
            i = uniform_bin(fgen, width)
            p2 = 2 * (lo + i)
            if p2 < mid2:
                bid[i] += 1
                if lo + i > best_bid:
                    best_bid = lo + i
                sti[I_DEPOSITED] += 1
            elif p2 > mid2:
                ask[i] += 1
                if lo + i < best_ask:
                    best_ask = lo + i
                sti[I_DEPOSITED] += 1
            # an integral-midpoint tick receives no deposit

        # -- phase 2: market orders ----------------------------------------
        n_mk = poisson_draw(fgen, mu)
        for _ in range(n_mk):
            # background sign process always advances
            if sign_iid == 1:
                sgn = sign_draw(sgen)
            else:
                if sti[I_REMAINING] == 0:
                    sti[I_SIGN] = sign_draw(sgen)
                    if run_pmf == 1:
                        sti[I_REMAINING] = run_length_pmf_draw(
                            sgen, alpha, rl_cdf, rl_ctail)
                    else:
                        sti[I_REMAINING] = run_length_draw(sgen, alpha)
                sgn = sti[I_SIGN]
                sti[I_REMAINING] -= 1
            # background volume fraction always drawn in zeta mode
            if unit_volume == 0:
                f_bg = fraction_draw(fgen, zeta)
            else:
                f_bg = 0.0

            is_meta = False
            if (meta_on == 1 and step >= meta_start
                    and sti[I_META_EXEC] < meta_q):
                if agent.random() < meta_phi:
                    is_meta = True

            if is_meta:
                side = meta_sign
            else:
                side = sgn

            mid2_pre = best_bid + best_ask
            if side == 1:
                q_best = ask[best_ask - lo]
            else:
                q_best = bid[best_bid - lo]

            if is_meta:
                if meta_unit == 1:
                    vol = 1
                else:
                    vol = int(fraction_draw(agent, meta_zeta) * q_best)
                    if vol < 1:
                        vol = 1
                rem_q = meta_q - sti[I_META_EXEC]
                if vol > rem_q:
                    vol = rem_q
            else:
                if unit_volume == 1:
                    vol = 1
                else:
                    vol = int(f_bg * q_best)
                    if vol < 1:
                        vol = 1

            filled = 0
            notional = 0.0
            if side == 1:
                i = best_ask - lo
                while filled < vol and i < width:
                    a = ask[i]
                    if a == 0:
                        i += 1
                        continue
                    take = vol - filled
                    if take > a:
                        take = a
                    ask[i] = a - take
                    filled += take
                    notional += (lo + i) * take
                    if ask[i] == 0:
                        i += 1
                j = i
                while j < width and ask[j] == 0:
                    j += 1
                if j >= width:
                    sti[I_STEP] = step
                    return s, n_trades, n_tx, DEGENERATE
                best_ask = lo + j
            else:
                i = best_bid - lo
                while filled < vol and i >= 0:
                    a = bid[i]
                    if a == 0:
                        i -= 1
                        continue
                    take = vol - filled
                    if take > a:
                        take = a
                    bid[i] = a - take
                    filled += take
                    notional += (lo + i) * take
                    if bid[i] == 0:
                        i -= 1
                j = i
                while j >= 0 and bid[j] == 0:
                    j -= 1
                if j < 0:
                    sti[I_STEP] = step
                    return s, n_trades, n_tx, DEGENERATE
                best_bid = lo + j

            if filled == 0:
                sti[I_STEP] = step
                return s, n_trades, n_tx, DEGENERATE
            if filled < vol:
                sti[I_PARTIAL_FILLS] += 1
            sti[I_EXECUTED] += filled
            mid2 = best_bid + best_ask
            vwap = notional / filled

            if n_trades >= tr_cap:
                return s, n_trades, n_tx, CORRUPT
            tr_step[n_trades] = step
            tr_sign[n_trades] = side
            tr_vol[n_trades] = filled
            tr_vwap[n_trades] = vwap
            tr_meta[n_trades] = 1 if is_meta else 0
            n_trades += 1
            if record_tx == 1:
                if n_tx >= tx_cap:
                    return s, n_trades, n_tx, CORRUPT
                tx_mid[n_tx] = 0.5 * mid2
                n_tx += 1

            if is_meta:
                if sti[I_META_CHILDREN] == 0:
                    stf[F_META_PSTART] = 0.5 * mid2_pre
                    stf[F_META_P1] = vwap
                    sti[I_META_FIRST] = step
                sti[I_META_CHILDREN] += 1
                sti[I_META_EXEC] += filled
                stf[F_META_VWAP_NUM] += notional
                stf[F_META_VWAPMID_NUM] += 0.5 * mid2 * filled
                if sti[I_META_EXEC] >= meta_q:
                    sti[I_META_DONE] = step
                    t_exec = step - sti[I_META_FIRST]
                    if t_exec < 1:
                        t_exec = 1
                    sti[I_META_STOP] = step + int(math.ceil(meta_tail * t_exec))

        # -- phase 3: cancellations ----------------------------------------
        if nu_zero == 0:
            cancelled = 0
            for i in range(width):
                v = bid[i]
                if v > 0:
                    c = binomial_draw(fgen, v, btable, b_nsafe, b_odds)
                    bid[i] = v - c
                    cancelled += c
            for i in range(width):
                v = ask[i]
                if v > 0:
                    c = binomial_draw(fgen, v, btable, b_nsafe, b_odds)
                    ask[i] = v - c
                    cancelled += c
            sti[I_CANCELLED] += cancelled
            if cancelled > 0:
                j = best_bid - lo
                while j >= 0 and bid[j] == 0:
                    j -= 1
                if j < 0:
                    sti[I_STEP] = step
                    return s, n_trades, n_tx, DEGENERATE
                best_bid = lo + j
                j = best_ask - lo
                while j < width and ask[j] == 0:
                    j += 1
                if j >= width:
                    sti[I_STEP] = step
                    return s, n_trades, n_tx, DEGENERATE
                best_ask = lo + j
                mid2 = best_bid + best_ask

        # -- phase 4: recenter check ---------------------------------------
        if abs(mid2 - 2 * center) > 2 * drift_limit:
            new_center = (mid2 + 1) >> 1
            shift = new_center - center
            dropped = 0
            if shift > 0:
                k = shift if shift < width else width
                for i in range(k):
                    dropped += bid[i] + ask[i]
                if shift < width:
                    for i in range(width - shift):
                        bid[i] = bid[i + shift]
                        ask[i] = ask[i + shift]
                    for i in range(width - shift, width):
                        bid[i] = 0
                        ask[i] = 0
                else:
                    bid[:] = 0
                    ask[:] = 0
            else:
                k = -shift if -shift < width else width
                for i in range(width - k, width):
                    dropped += bid[i] + ask[i]
                if -shift < width:
                    for i in range(width - 1, k - 1, -1):
                        bid[i] = bid[i + shift]
                        ask[i] = ask[i + shift]
                    for i in range(k):
                        bid[i] = 0
                        ask[i] = 0
                else:
                    bid[:] = 0
                    ask[:] = 0
            sti[I_DROPPED] += dropped
            sti[I_RECENTERS] += 1
            sti[I_CENTER] = new_center
            center = new_center
            lo = center - halfwidth
            hi = center + halfwidth
            # a dropped best cannot survive; rescan defensively
            if best_bid < lo or bid[best_bid - lo] == 0:
                j = best_bid - lo if best_bid >= lo else -1
                if j >= width:
                    j = width - 1
                while j >= 0 and bid[j] == 0:
                    j -= 1
                if j < 0:
                    sti[I_STEP] = step
                    return s, n_trades, n_tx, DEGENERATE
                best_bid = lo + j
            if best_ask > hi or ask[best_ask - lo] == 0:
                j = best_ask - lo if best_ask <= hi else width
                if j < 0:
                    j = 0
                while j < width and ask[j] == 0:
                    j += 1
                if j >= width:
                    sti[I_STEP] = step
                    return s, n_trades, n_tx, DEGENERATE
                best_ask = lo + j
            mid2 = best_bid + best_ask

        sti[I_BEST_BID] = best_bid
        sti[I_BEST_ASK] = best_ask
        mid_out[s] = 0.5 * mid2
        sti[I_STEP] = step + 1

    return n_steps, n_trades, n_tx, OK
