"""Book operations: quotes, deposits, executions, cancellation, recentring."""

import numpy as np
import pytest

from latentbook import (
    Book,
    CrossedDepositError,
    WindowViolationError,
    initial_book,
)


def gen(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


class TestQuotes:
    def test_best_bid_direct_max(self):
        book = Book.from_dicts({100: 2, 98: 1}, {})
        assert book.best_bid() == 100

    def test_best_bid_empty(self):
        book = Book.from_dicts({}, {105: 1})
        assert book.best_bid() is None

    def test_best_bid_ignores_zero_level(self):
        book = Book.from_dicts({100: 0, 98: 1}, {})
        assert book.best_bid() == 98

    def test_midpoint_even(self):
        book = Book.from_dicts({100: 1}, {102: 1})
        assert book.midpoint() == 101.0

    def test_midpoint_half_tick(self):
        book = Book.from_dicts({100: 1}, {101: 1})
        assert book.midpoint() == 100.5

    def test_midpoint_one_side_empty(self):
        book = Book.from_dicts({100: 1}, {})
        assert book.midpoint() is None


class TestDeposit:
    def test_buy_below_midpoint(self):
        book = Book.from_dicts({98: 1}, {103: 1})  # midpoint 100.5
        book.apply_deposit("buy", 99, 1)
        assert book.bid[book.index_of(99)] == 1

    def test_additivity(self):
        book = Book.from_dicts({98: 1}, {103: 1})
        book.apply_deposit("sell", 103, 2)
        assert book.ask[book.index_of(103)] == 3

    def test_crossing_buy_rejected(self):
        book = Book.from_dicts({98: 1}, {103: 1})  # midpoint 100.5
        with pytest.raises(CrossedDepositError):
            book.apply_deposit("buy", 101, 1)

    def test_at_midpoint_rejected(self):
        book = Book.from_dicts({99: 1}, {103: 1})  # midpoint 101
        with pytest.raises(CrossedDepositError):
            book.apply_deposit("buy", 101, 1)
        with pytest.raises(CrossedDepositError):
            book.apply_deposit("sell", 101, 1)

    def test_out_of_window_rejected(self):
        book = Book(center=100, halfwidth=5)
        with pytest.raises(WindowViolationError):
            book.apply_deposit("buy", 90, 1)


class TestExecution:
    def test_walk_two_levels(self):
        book = Book.from_dicts({95: 5}, {101: 3, 102: 5})
        rep = book.execute_market_order(1, 4)
        assert rep.executed == 4
        assert [(f.price, f.volume) for f in rep.fills] == [(101, 3), (102, 1)]
        assert rep.vwap == pytest.approx(101.25)
        assert not rep.exhausted
        assert book.ask[book.index_of(102)] == 4

    def test_partial_fill_flags_exhausted(self):
        book = Book.from_dicts({95: 5}, {101: 3})
        rep = book.execute_market_order(1, 5)
        assert rep.executed == 3
        assert rep.exhausted

    def test_sell_side_mirrors(self):
        book = Book.from_dicts({99: 3, 98: 5}, {105: 5})
        rep = book.execute_market_order(-1, 4)
        assert [(f.price, f.volume) for f in rep.fills] == [(99, 3), (98, 1)]
        assert rep.vwap == pytest.approx(98.75)

    def test_empty_side_zero_fill(self):
        book = Book.from_dicts({99: 1}, {})
        rep = book.execute_market_order(1, 3)
        assert rep.executed == 0 and rep.exhausted

    def test_conserves_volume(self):
        book = Book.from_dicts({99: 4, 97: 2}, {101: 3, 104: 9})
        before = book.total_volume()
        rep = book.execute_market_order(1, 7)
        assert before - book.total_volume() == rep.executed

    def test_round_trip_restores_level(self):
        book = Book.from_dicts({95: 1}, {105: 1})
        book.apply_deposit("sell", 103, 4)
        rep = book.execute_market_order(1, 4)
        assert rep.executed == 4
        assert book.ask[book.index_of(103)] == 0
        book.apply_deposit("sell", 103, 4)
        assert book.ask[book.index_of(103)] == 4


class TestCancellation:
    def test_nu_zero_is_identity(self):
        book = Book.from_dicts({99: 4}, {101: 5})
        assert book.cancellation_sweep(0.0, gen()) == 0
        assert book.total_volume() == 9

    def test_nu_one_empties(self):
        book = Book.from_dicts({99: 4}, {101: 5})
        assert book.cancellation_sweep(1.0, gen()) == 9
        assert book.total_volume() == 0

    def test_counts_match_volume_change(self):
        rng = gen(1)
        book = Book.from_dicts({99: 400, 98: 100}, {101: 300})
        before = book.total_volume()
        count = book.cancellation_sweep(0.25, rng)
        assert before - book.total_volume() == count

    def test_flipped_probability(self):
        # nu > 0.5 goes through the complement path
        rng = gen(2)
        kept = []
        for _ in range(3000):
            book = Book.from_dicts({99: 20}, {101: 20})
            book.cancellation_sweep(0.9, rng)
            kept.append(book.total_volume())
        assert abs(np.mean(kept) - 4.0) < 0.3  # 40 * 0.1 survivors


class TestRecenter:
    def test_identity(self):
        book = Book.from_dicts({99: 1}, {101: 1}, center=100, halfwidth=10)
        assert book.recenter(100) == 0

    def test_no_drop_when_inside(self):
        book = Book.from_dicts({99: 1}, {101: 1}, center=100, halfwidth=10)
        assert book.recenter(102) == 0
        assert book.best_bid() == 99 and book.best_ask() == 101

    def test_boundary_level_dropped_and_counted(self):
        book = Book(center=100, halfwidth=5)
        book.bid[book.index_of(95)] = 7  # exactly at the lower edge
        book.ask[book.index_of(104)] = 1
        assert book.recenter(101) == 7
        assert book.ask[book.index_of(104)] == 1

    def test_preserves_prices(self):
        book = Book.from_dicts({97: 3}, {103: 4}, center=100, halfwidth=10)
        book.recenter(103)
        assert book.bid[book.index_of(97)] == 3
        assert book.ask[book.index_of(103)] == 4


class TestInvariantsUnderRandomOps:
    def test_random_operation_sequences(self):
        # 100k随 operations across many small books: the no-crossing
        # invariant and the volume accounting hold throughout
        rng = gen(42)
        ops_total = 0
        books = 0
        while ops_total < 100_000:
            books += 1
            book = initial_book(0, 12, 3.0, rng)
            deposited = executed = cancelled = dropped = 0
            start_volume = book.total_volume()
            for _ in range(500):
                ops_total += 1
                u = rng.random()
                mid = book.midpoint()
                if mid is None:
                    break
                if u < 0.45:
                    side = "buy" if rng.random() < 0.5 else "sell"
                    off = 1 + int(rng.random() * 6)
                    price = (int(np.floor(mid - off)) if side == "buy"
                             else int(np.ceil(mid + off)))
                    if book.lo <= price <= book.hi:
                        vol = 1 + int(rng.random() * 3)
                        try:
                            book.apply_deposit(side, price, vol)
                            deposited += vol
                        except CrossedDepositError:
                            pass
                elif u < 0.8:
                    sign = 1 if rng.random() < 0.5 else -1
                    rep = book.execute_market_order(sign, 1 + int(rng.random() * 5))
                    executed += rep.executed
                elif u < 0.95:
                    cancelled += book.cancellation_sweep(0.05, rng)
                else:
                    dropped += book.recenter(book.center + int(rng.random() * 5) - 2)
                assert not book.is_crossed()
                assert (book.bid >= 0).all() and (book.ask >= 0).all()
                assert book.total_volume() == (
                    start_volume + deposited - executed - cancelled - dropped
                )
        assert ops_total >= 100_000


class TestSnapshot:
    def test_csv_header_and_order(self, tmp_path):
        book = Book.from_dicts({99: 2, 98: 1}, {101: 3})
        path = tmp_path / "snap.csv"
        book.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "side,price,volume"
        assert lines[1] == "bid,99,2"      # bids descending
        assert lines[2] == "bid,98,1"
        assert lines[3] == "ask,101,3"     # asks ascending
