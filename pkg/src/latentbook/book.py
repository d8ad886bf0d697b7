"""Latent order book on a discrete price grid.

Volumes are non-negative integer unit-order counts stored densely over an
active window ``[center - halfwidth, center + halfwidth]`` (flat arrays with
an offset; the hot loops touch contiguous levels).  Prices are integer ticks
with unit tick size.  Buy volume lives strictly below the midpoint at
deposit time, sell volume strictly above, which together with executions
preserves the no-crossing invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import samplers
from .errors import CrossedDepositError, WindowViolationError


@dataclass
class Fill:
    """One price level consumed by a market order."""

    price: int
    volume: int


@dataclass
class ExecutionReport:
    """Outcome of one market order walking the opposite side of the book."""

    fills: list
    requested: int
    executed: int
    vwap: float
    exhausted: bool


@dataclass
class Book:
    """Two-sided latent book over an active price window.

    ``bid[i]``/``ask[i]`` hold the volume at price ``center - halfwidth + i``.
    """

    center: int
    halfwidth: int
    bid: np.ndarray = field(default=None)
    ask: np.ndarray = field(default=None)

    def __post_init__(self):
        width = 2 * self.halfwidth + 1
        if self.bid is None:
            self.bid = np.zeros(width, dtype=np.int64)
        if self.ask is None:
            self.ask = np.zeros(width, dtype=np.int64)
        if len(self.bid) != width or len(self.ask) != width:
            raise ValueError("volume arrays must have length 2*halfwidth + 1")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_dicts(cls, bids: dict, asks: dict, center: int = None, halfwidth: int = None) -> "Book":
        """Build a book from {price: volume} mappings (testing convenience)."""
        prices = [p for p in bids] + [p for p in asks]
        if center is None:
            center = int(round(np.mean(prices))) if prices else 0
        if halfwidth is None:
            span = max((abs(p - center) for p in prices), default=0)
            halfwidth = max(span + 2, 4)
        book = cls(center=center, halfwidth=halfwidth)
        for p, v in bids.items():
            book.bid[book.index_of(p)] = v
        for p, v in asks.items():
            book.ask[book.index_of(p)] = v
        return book

    # -- geometry -------------------------------------------------------------

    @property
    def lo(self) -> int:
        return self.center - self.halfwidth

    @property
    def hi(self) -> int:
        return self.center + self.halfwidth

    def index_of(self, price: int) -> int:
        if price < self.lo or price > self.hi:
            raise WindowViolationError(
                f"price {price} outside window [{self.lo}, {self.hi}]"
            )
        return price - self.lo

    # -- quotes ---------------------------------------------------------------

    def best_bid(self) -> Optional[int]:
        """Highest price with bid volume > 0, or None if the side is empty."""
        nz = np.flatnonzero(self.bid)
        if nz.size == 0:
            return None
        return int(self.lo + nz[-1])

    def best_ask(self) -> Optional[int]:
        nz = np.flatnonzero(self.ask)
        if nz.size == 0:
            return None
        return int(self.lo + nz[0])

    def midpoint(self) -> Optional[float]:
        """(best_bid + best_ask)/2 when both sides are non-empty, else None."""
        bb = self.best_bid()
        ba = self.best_ask()
        if bb is None or ba is None:
            return None
        return 0.5 * (bb + ba)

    def total_volume(self) -> int:
        return int(self.bid.sum() + self.ask.sum())

    def is_crossed(self) -> bool:
        bb = self.best_bid()
        ba = self.best_ask()
        return bb is not None and ba is not None and bb >= ba

    # -- mutations ------------------------------------------------------------

    def apply_deposit(self, side: str, price: int, volume: int) -> "Book":
        """Add a limit order strictly below (buy) / above (sell) the midpoint.

        Crossing deposits and out-of-window prices are rejected.  When one or
        both sides are empty the midpoint constraint degenerates to not
        crossing the surviving best quote.
        """
        if volume < 1:
            raise ValueError("deposit volume must be >= 1")
        if side not in ("buy", "sell"):
            raise ValueError(f"side must be 'buy' or 'sell', got {side!r}")
        i = self.index_of(price)
        mid = self.midpoint()
        if side == "buy":
            limit = mid if mid is not None else self.best_ask()
            if limit is not None and price >= limit:
                raise CrossedDepositError(
                    f"buy deposit at {price} crosses midpoint {limit}"
                )
            self.bid[i] += volume
        else:
            limit = mid if mid is not None else self.best_bid()
            if limit is not None and price <= limit:
                raise CrossedDepositError(
                    f"sell deposit at {price} crosses midpoint {limit}"
                )
            self.ask[i] += volume
        return self

    def execute_market_order(self, sign: int, volume: int) -> ExecutionReport:
        """Consume the opposite side from the best level inward.

        sign=+1 buys against the ask side, sign=-1 sells against the bid
        side.  Fills stop when the requested volume is reached or the side is
        exhausted (`exhausted=True`, remainder discarded).
        """
        if volume < 1:
            raise ValueError("market order volume must be >= 1")
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        levels = self.ask if sign == 1 else self.bid
        order = range(len(levels)) if sign == 1 else range(len(levels) - 1, -1, -1)
        fills = []
        remaining = volume
        notional = 0.0
        for i in order:
            if remaining == 0:
                break
            avail = int(levels[i])
            if avail == 0:
                continue
            take = min(avail, remaining)
            levels[i] = avail - take
            price = self.lo + i
            fills.append(Fill(price=price, volume=take))
            notional += price * take
            remaining -= take
        executed = volume - remaining
        vwap = notional / executed if executed > 0 else math.nan
        return ExecutionReport(
            fills=fills,
            requested=volume,
            executed=executed,
            vwap=vwap,
            exhausted=executed < volume,
        )

    def cancellation_sweep(self, nu: float, rng: np.random.Generator) -> int:
        """Thin every level by Binomial(volume, nu); returns total cancelled.

        Exact per-order independent cancellation: unit orders are
        exchangeable, so the level count is binomially thinned.  Levels are
        visited bid side low-to-high then ask side low-to-high (the compiled
        kernel consumes uniforms in the same order).
        """
        if not 0.0 <= nu <= 1.0:
            raise ValueError("cancellation probability must be in [0, 1]")
        if nu == 0.0:
            return 0
        if nu == 1.0:
            count = self.total_volume()
            self.bid[:] = 0
            self.ask[:] = 0
            return count
        flip = nu > 0.5
        p = 1.0 - nu if flip else nu
        table, n_safe, odds = samplers.binomial_table(p)
        count = 0
        for levels in (self.bid, self.ask):
            for i in range(len(levels)):
                v = int(levels[i])
                if v == 0:
                    continue
                c = samplers.binomial_draw(rng, v, table, n_safe, odds)
                if flip:
                    c = v - c
                levels[i] = v - c
                count += c
        return count

    def recenter(self, new_center: int) -> int:
        """Shift the active window; volume falling outside is dropped.

        Returns the dropped volume (callers enforce the run-level drop
        budget).
        """
        shift = new_center - self.center
        if shift == 0:
            return 0
        dropped = 0
        width = len(self.bid)
        for levels in (self.bid, self.ask):
            if shift > 0:
                dropped += int(levels[: min(shift, width)].sum())
                if shift < width:
                    levels[:-shift] = levels[shift:]
                    levels[-shift:] = 0
                else:
                    levels[:] = 0
            else:
                k = -shift
                dropped += int(levels[max(width - k, 0):].sum())
                if k < width:
                    levels[k:] = levels[:-k]
                    levels[:k] = 0
                else:
                    levels[:] = 0
        self.center = new_center
        return dropped

    # -- export ---------------------------------------------------------------

    def snapshot_rows(self):
        """Ordered (side, price, volume) records: bids descending, asks ascending."""
        rows = []
        for i in range(len(self.bid) - 1, -1, -1):
            if self.bid[i] > 0:
                rows.append(("bid", self.lo + i, int(self.bid[i])))
        for i in range(len(self.ask)):
            if self.ask[i] > 0:
                rows.append(("ask", self.lo + i, int(self.ask[i])))
        return rows

    def to_csv(self, path) -> None:
        """Write the snapshot with header ``side,price,volume``."""
        with open(path, "w") as fh:
            fh.write("side,price,volume\n")
            for side, price, volume in self.snapshot_rows():
                fh.write(f"{side},{price},{volume}\n")


def initial_book(center: int, halfwidth: int, depth_mean: float,
                 rng: np.random.Generator) -> Book:
    """Flat warm-start book: Poisson(depth_mean) per level on each side.

    Bids fill ticks below ``center``, asks above; the tick at ``center``
    stays empty so the starting midpoint is ``center``.  The warmup phase
    relaxes this flat state to the carved stationary profile.
    """
    book = Book(center=center, halfwidth=halfwidth)
    width = 2 * halfwidth + 1
    mid_i = halfwidth
    if depth_mean > 0:
        draws = rng.poisson(depth_mean, size=2 * width)
        book.bid[:mid_i] = draws[:mid_i]
        book.ask[mid_i + 1:] = draws[width + mid_i + 1: 2 * width]
    # guarantee both sides are non-empty so the midpoint exists
    if book.bid[:mid_i].sum() == 0:
        book.bid[mid_i - 1] = 1
    if book.ask[mid_i + 1:].sum() == 0:
        book.ask[mid_i + 1] = 1
    return book
