"""Simulator driver tests: kernel/reference equivalence, event ordering,
conservation, determinism and metaorder mechanics."""

import math

import numpy as np
import pytest

from latentbook import (
    DegenerateBookError,
    DropBudgetError,
    FlowParams,
    MetaorderSpec,
    ParameterError,
    SimParams,
    Simulation,
    run,
    run_with_metaorder,
)

MINI = dict(lam=0.5, mu=0.5, nu=1e-2, zeta=1.0)


def mini_params(**kw):
    flow_kw = {k: kw.pop(k) for k in list(kw) if k in MINI}
    base = dict(MINI)
    base.update(flow_kw)
    defaults = dict(alpha=1.5, halfwidth=30, warmup_steps=300,
                    horizon_steps=2000, seed=5, drop_budget=1.0)
    defaults.update(kw)
    return SimParams(flow=FlowParams(**base), **defaults)


class TestKernelReferenceEquivalence:
    def test_bit_identical_paths(self):
        # the compiled kernel and the Book-operations reference implement
        # the same step and consume the same uniform stream
        p = mini_params(warmup_steps=0, horizon_steps=400, seed=17)
        sim = Simulation(p)
        mids_py = []
        trades_py = []
        for _ in range(p.horizon_steps):
            trades_py.extend(sim.step())
            mids_py.append(sim.book.midpoint())
        res = run(p)
        assert np.array_equal(np.array(mids_py), res.mid)
        assert len(trades_py) == len(res.trades["step"])
        for i, t in enumerate(trades_py):
            assert t.step == res.trades["step"][i]
            assert t.sign == res.trades["sign"][i]
            assert t.volume == res.trades["volume"][i]
            assert t.vwap == pytest.approx(res.trades["vwap"][i], rel=1e-12)
        assert sim.deposited == res.counters["deposited"]
        assert sim.executed == res.counters["executed"]
        assert sim.cancelled == res.counters["cancelled"]
        assert sim.dropped == res.counters["dropped"]

    def test_equivalence_unit_volume_iid(self):
        p = mini_params(warmup_steps=0, horizon_steps=300, seed=23,
                        sign_mode="iid", unit_volume=True)
        sim = Simulation(p)
        mids_py = [None] * p.horizon_steps
        for i in range(p.horizon_steps):
            sim.step()
            mids_py[i] = sim.book.midpoint()
        res = run(p)
        assert np.array_equal(np.array(mids_py), res.mid)


class TestNullAndDegenerateDynamics:
    def test_null_dynamics(self):
        p = mini_params(lam=0.0, mu=0.0, nu=0.0, warmup_steps=0,
                        horizon_steps=50)
        res = run(p)
        assert len(res.trades["step"]) == 0
        assert res.counters["deposited"] == 0
        assert np.all(res.mid == res.mid[0])

    def test_deposition_only_grows_linearly(self):
        p = mini_params(mu=0.0, nu=0.0, warmup_steps=0, horizon_steps=400,
                        seed=3)
        res = run(p)
        width = 2 * p.halfwidth + 1
        expected = p.flow.lam * width * p.horizon_steps
        assert res.counters["deposited"] == pytest.approx(expected, rel=0.05)
        assert np.all(res.mid == res.mid[0])  # midpoint stationary

    def test_degenerate_book_raises(self):
        p = mini_params(lam=0.0, nu=0.0, mu=20.0, unit_volume=True,
                        warmup_steps=0, horizon_steps=5000)
        with pytest.raises(DegenerateBookError):
            run(p)

    def test_drop_budget_enforced(self):
        p = mini_params(drop_budget=1e-9, horizon_steps=4000, seed=8)
        with pytest.raises(DropBudgetError):
            run(p)

    def test_kernel_rejects_large_nu(self):
        with pytest.raises(ParameterError):
            run(mini_params(nu=0.7, warmup_steps=0, horizon_steps=5))


class TestConservation:
    def test_volume_conservation(self):
        p = mini_params(horizon_steps=1500, seed=11)
        from latentbook.sim import _State, _advance
        state = _State(p)
        start = state.book_volume()
        _advance(state, 2000, record_tx=False)
        c = state.counters()
        assert state.book_volume() == (
            start + c["deposited"] - c["executed"] - c["cancelled"] - c["dropped"]
        )


class TestEventOrderContract:
    def test_same_step_deposits_are_executable(self):
        # start with only far quotes; in a single step with huge mu the
        # market orders must consume volume deposited that same step
        flow = FlowParams(lam=2.0, mu=40.0, nu=0.0, zeta=1.0)
        p = SimParams(flow=flow, alpha=1.5, halfwidth=20, warmup_steps=0,
                      horizon_steps=1, seed=2, drop_budget=1.0)
        sim = Simulation(p)
        sim.book.bid[:] = 0
        sim.book.ask[:] = 0
        sim.book.bid[sim.book.index_of(-15)] = 10_000
        sim.book.ask[sim.book.index_of(15)] = 10_000
        trades = sim.step()
        inner = [t for t in trades if -15 < t.vwap < 15]
        assert inner, "no trade touched same-step deposits"

    def test_cancellation_runs_after_execution(self):
        # nu = 0.5 thins the best level every step; if cancellation ran
        # before execution, executed volumes would track the thinned level.
        # One step from a fixed state, many seeds; zeta -> f ~ U(0,1); with
        # q_best = 400 the mean executed volume per order is ~200 if
        # execution comes first, ~100 if cancellation came first.
        vols = []
        for seed in range(300):
            flow = FlowParams(lam=0.0, mu=1.0, nu=0.5, zeta=1.0)
            p = SimParams(flow=flow, alpha=1.5, halfwidth=20, warmup_steps=0,
                          horizon_steps=1, seed=seed, drop_budget=1.0)
            sim = Simulation(p)
            sim.book.bid[:] = 0
            sim.book.ask[:] = 0
            sim.book.bid[sim.book.index_of(-1)] = 400
            sim.book.bid[sim.book.index_of(-2)] = 400
            sim.book.ask[sim.book.index_of(1)] = 400
            sim.book.ask[sim.book.index_of(2)] = 400
            for t in sim.step():
                vols.append(t.volume)
        assert np.mean(vols) > 150  # cancellation-first would give ~100

    def test_phase_order_in_reference_path(self, monkeypatch):
        # instrument the Book methods to record the within-step phase order
        calls = []
        p = mini_params(warmup_steps=0, horizon_steps=1, mu=5.0, seed=4)
        sim = Simulation(p)
        orig_exec = sim.book.execute_market_order
        orig_cancel = sim.book.cancellation_sweep

        def spy_exec(*a, **k):
            calls.append("execute")
            return orig_exec(*a, **k)

        def spy_cancel(*a, **k):
            calls.append("cancel")
            return orig_cancel(*a, **k)

        monkeypatch.setattr(sim.book, "execute_market_order", spy_exec)
        monkeypatch.setattr(sim.book, "cancellation_sweep", spy_cancel)
        sim.step()
        assert calls[-1] == "cancel" and calls.count("cancel") == 1
        assert all(c == "execute" for c in calls[:-1])


class TestDeterminism:
    def test_same_seed_identical(self):
        p = mini_params(seed=31, snapshot_interval=500)
        a, b = run(p), run(p)
        assert np.array_equal(a.mid, b.mid)
        assert np.array_equal(a.tx_mid, b.tx_mid)
        for k in a.trades:
            assert np.array_equal(a.trades[k], b.trades[k])
        assert np.array_equal(a.snapshots.bid, b.snapshots.bid)

    def test_different_seed_differs(self):
        a = run(mini_params(seed=1))
        b = run(mini_params(seed=2))
        assert not np.array_equal(a.mid, b.mid)

    def test_metaorder_disabled_equals_plain_run(self):
        p = mini_params(seed=13)
        a = run(p)
        b = run_with_metaorder(p, None)
        assert np.array_equal(a.mid, b.mid)
        for k in a.trades:
            assert np.array_equal(a.trades[k], b.trades[k])


class TestSnapshots:
    def test_cadence_and_shape(self):
        p = mini_params(seed=6, snapshot_interval=250, horizon_steps=1000)
        res = run(p)
        assert len(res.snapshots) == 4
        steps = res.snapshots.steps
        assert np.all(np.diff(steps) == 250)
        assert res.snapshots.bid.shape == (4, 2 * p.halfwidth + 1)
        # snapshot mids agree with the recorded series
        for i, s in enumerate(steps):
            assert res.snapshots.mids[i] == res.mid[s - p.warmup_steps - 1]


class TestMetaorder:
    def test_single_unit_child(self):
        p = mini_params(seed=40, horizon_steps=4000)
        spec = MetaorderSpec(q=1, sign=1, phi=1.0, style="unit_execution")
        res = run_with_metaorder(p, spec)
        m = res.meta
        assert m.completed and m.executed == 1 and m.n_children == 1
        assert m.duration >= 1
        assert not math.isnan(m.delta_T)

    def test_exact_volume_on_completion(self):
        for style in ("unit_execution", "zeta_execution"):
            p = mini_params(seed=41, horizon_steps=6000)
            spec = MetaorderSpec(q=57, sign=-1, phi=0.8, style=style)
            res = run_with_metaorder(p, spec)
            assert res.meta.completed
            assert res.meta.executed == 57  # final child clamped

    def test_phi_one_duration(self):
        # with phi = 1 and unit execution the agent takes every slot:
        # T ~ Q/mu in expectation
        durations = []
        for seed in range(25):
            p = mini_params(seed=100 + seed, horizon_steps=8000, mu=0.5)
            spec = MetaorderSpec(q=40, phi=1.0, style="unit_execution")
            res = run_with_metaorder(p, spec)
            assert res.meta.completed
            durations.append(res.meta.duration)
        expected = 40 / 0.5
        assert abs(np.mean(durations) - expected) < 0.35 * expected

    def test_incomplete_flag_when_horizon_short(self):
        p = mini_params(seed=42, horizon_steps=30)
        spec = MetaorderSpec(q=10_000, phi=0.05, style="unit_execution")
        res = run_with_metaorder(p, spec)
        assert not res.meta.completed
        assert res.meta.executed < 10_000

    def test_start_before_warmup_rejected(self):
        p = mini_params(seed=43)
        spec = MetaorderSpec(q=5, start_step=0)
        with pytest.raises(ParameterError):
            run_with_metaorder(p, spec)

    def test_twin_identical_until_first_child(self):
        p = mini_params(seed=44, horizon_steps=5000)
        spec = MetaorderSpec(q=30, phi=0.3, style="zeta_execution")
        res = run_with_metaorder(p, spec, twin=True)
        m = res.meta
        assert res.twin_mid is not None
        k = m.t_first - p.warmup_steps
        assert np.array_equal(res.mid[:k], res.twin_mid[:k])
        # and they deviate afterwards (the agent removed volume)
        assert not np.array_equal(res.mid[k:], res.twin_mid[k:])

    def test_trajectory_normalization_point(self):
        p = mini_params(seed=45, horizon_steps=6000)
        spec = MetaorderSpec(q=25, phi=0.5, style="zeta_execution")
        res = run_with_metaorder(p, spec, twin=True)
        m = res.meta
        # d at tau/T = 1 equals the completion displacement
        from latentbook import TAU_GRID
        k1 = int(np.argmin(np.abs(TAU_GRID - 1.0)))
        assert m.trajectory[k1] == pytest.approx(m.delta_T, abs=1e-12)

    def test_metaorder_csv_roundtrip(self, tmp_path):
        from latentbook import save_metaorders
        from latentbook.sim import METAORDER_HEADER
        p = mini_params(seed=46, horizon_steps=5000)
        spec = MetaorderSpec(q=12, phi=0.5)
        res = run_with_metaorder(p, spec, twin=True)
        path = tmp_path / "meta.csv"
        save_metaorders(path, [res.meta])
        lines = path.read_text().strip().split("\n")
        assert lines[0].split(",")[:10] == [
            "seed", "Q", "phi", "style", "gamma", "zeta",
            "p_start", "vwap", "T", "delta_T"]
        assert lines[0] == ",".join(METAORDER_HEADER)
        assert len(lines) == 2

    def test_trade_log_flags_children(self):
        p = mini_params(seed=47, horizon_steps=5000)
        spec = MetaorderSpec(q=20, sign=1, phi=0.9, style="unit_execution")
        res = run_with_metaorder(p, spec)
        child = res.trades["is_metaorder"] == 1
        assert child.sum() == res.meta.n_children
        assert np.all(res.trades["sign"][child] == 1)
        assert res.trades["volume"][child].sum() == res.meta.executed


class TestRunCsv:
    def test_price_and_trade_csv(self, tmp_path):
        p = mini_params(seed=48, horizon_steps=500)
        res = run(p)
        res.save(tmp_path)
        prices = (tmp_path / "run_prices.csv").read_text().split("\n")
        assert prices[0] == "step,midpoint"
        assert len(prices) == res.mid.size + 2  # header + rows + newline
        trades = (tmp_path / "run_trades.csv").read_text().split("\n")
        assert trades[0] == "step,sign,volume,vwap,is_metaorder"
