"""Event-engine behavior: determinism, workload statistics, node death."""

import dataclasses
import math
import random

import numpy as np
import pytest

from backoffsim.engine import Simulator, replay_metrics, run_sim
from backoffsim.medium import Topology
from backoffsim.metrics import ConfigError, Metrics, SimConfig


SMALL = SimConfig(n_nodes=25, area=120.0, range_m=50.0, total_events=30, lam=3.0)


def line_topology(spacing, count, range_m):
    pos = np.array([(i * spacing, 0.0) for i in range(count)])
    return Topology(positions=pos, range_m=range_m)


class TestDeterminism:
    @pytest.mark.parametrize("protocol", ["arbp", "ibsp", "daibsp"])
    def test_identical_runs_bit_identical(self, protocol):
        cfg = dataclasses.replace(SMALL, protocol=protocol, seed=7)
        a = run_sim(cfg)
        b = run_sim(cfg)
        assert a == b

    def test_different_seeds_differ(self):
        a = run_sim(dataclasses.replace(SMALL, seed=1))
        b = run_sim(dataclasses.replace(SMALL, seed=2))
        assert a != b

    @pytest.mark.parametrize("protocol", ["arbp", "ibsp", "daibsp"])
    def test_trace_replay_reproduces_metrics(self, protocol, tmp_path):
        cfg = dataclasses.replace(SMALL, protocol=protocol, seed=3)
        trace = tmp_path / "run.trace"
        live = run_sim(cfg, trace_path=str(trace))
        replayed = replay_metrics(str(trace))
        assert replayed.data_sent == live.data_sent
        assert replayed.data_delivered == live.data_delivered
        assert replayed.tx_count == live.tx_count
        assert replayed.drops == live.drops
        assert replayed.fallback_count == live.fallback_count
        assert replayed.delays == pytest.approx(live.delays, abs=1e-6)


class TestPathEquivalence:
    """Tracing switches the engine to a per-reception Python handler; the
    compiled batch path must produce byte-identical metrics."""

    @pytest.mark.parametrize("protocol", ["arbp", "ibsp", "daibsp"])
    def test_traced_and_untraced_runs_agree(self, protocol, tmp_path):
        cfg = dataclasses.replace(
            SMALL, protocol=protocol, n_nodes=60, area=180.0,
            total_events=80, lam=8.0, seed=5,
        )
        fast = run_sim(cfg)
        slow = run_sim(cfg, trace_path=str(tmp_path / "t.trace"))
        assert fast.data_sent == slow.data_sent
        assert fast.data_delivered == slow.data_delivered
        assert fast.delays == slow.delays
        assert fast.tx_count == slow.tx_count
        assert fast.drops == slow.drops
        assert fast.fallback_count == slow.fallback_count


class TestWorkload:
    def test_event_count_exact(self):
        m = run_sim(dataclasses.replace(SMALL, total_events=50))
        assert m.data_sent == 50

    def test_interarrivals_are_exponential(self):
        # mean of k exponentials has stddev 1/(lam*sqrt(k)); check 3 sigma
        cfg = SimConfig(n_nodes=4, area=60.0, range_m=50.0, total_events=4000, lam=5.0)
        sim = Simulator(cfg)
        times = sorted(t for t, _, code, _ in sim.heap if code == 4)
        gaps = np.diff([0.0] + times)
        k = len(gaps)
        assert abs(gaps.mean() - 1 / cfg.lam) < 3 / (cfg.lam * math.sqrt(k))

    def test_sink_never_origin(self, tmp_path):
        trace = tmp_path / "t.trace"
        run_sim(dataclasses.replace(SMALL, total_events=60), trace_path=str(trace))
        for line in trace.read_text().splitlines():
            parts = line.split()
            if parts[1] == "sense":
                assert int(parts[2]) != 0


class TestSmallNetworks:
    def test_two_nodes_one_event_full_success(self):
        topo = line_topology(10.0, 2, 50.0)
        cfg = SimConfig(n_nodes=2, total_events=1, lam=1.0, seed=5)
        m = run_sim(cfg, topology=topo)
        assert m.success_rate() == 100.0
        assert m.avg_delay() >= cfg.validate().t_min

    @pytest.mark.parametrize("protocol", ["arbp", "ibsp", "daibsp"])
    def test_line_relay_delivers(self, protocol):
        # nodes 0-1-2-3 in a line; only multi-hop flooding can reach the sink
        topo = line_topology(40.0, 4, 50.0)
        cfg = SimConfig(
            protocol=protocol, n_nodes=4, total_events=10, lam=0.5, seed=9
        )
        m = run_sim(cfg, topology=topo)
        assert m.success_rate() > 0.0

    def test_delay_counts_first_arrival_only(self):
        topo = line_topology(10.0, 3, 50.0)
        cfg = SimConfig(n_nodes=3, total_events=20, lam=2.0, seed=4)
        m = run_sim(cfg, topology=topo)
        assert len(m.delays) == m.data_delivered


class TestKills:
    def test_killed_node_goes_silent(self, tmp_path):
        topo = line_topology(10.0, 3, 50.0)
        cfg = SimConfig(n_nodes=3, total_events=40, lam=4.0, seed=6)
        trace = tmp_path / "k.trace"
        run_sim(cfg, topology=topo, kills=[(2.0, 2)], trace_path=str(trace))
        for line in trace.read_text().splitlines():
            parts = line.split()
            if parts[1].startswith("tx_") and int(parts[2]) == 2:
                assert float(parts[0]) <= 2.0

    def test_sink_kill_rejected(self):
        with pytest.raises(ConfigError):
            run_sim(SMALL, kills=[(1.0, 0)])

    def test_unknown_node_kill_rejected(self):
        with pytest.raises(ConfigError):
            run_sim(SMALL, kills=[(1.0, 999)])

    def test_dead_network_still_terminates(self):
        topo = line_topology(10.0, 2, 50.0)
        cfg = SimConfig(n_nodes=2, total_events=10, lam=100.0, seed=1)
        m = run_sim(cfg, topology=topo, kills=[(0.0, 1)])
        assert m.data_delivered == 0


class TestHorizon:
    def test_horizon_truncates_run(self):
        cfg = dataclasses.replace(SMALL, total_events=200, lam=10.0, horizon=1.0)
        m = run_sim(cfg)
        # only the senses scheduled before the horizon fire
        assert m.data_sent < 200
