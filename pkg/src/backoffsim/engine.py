"""Deterministic seeded discrete-event engine driving the protocol machines.

One run is strictly sequential.  Events dequeue in (time, sequence) order;
the sequence number makes same-time ordering deterministic, so identical
(config, seed) pairs produce bit-identical metrics.

Random streams are split per purpose (topology, workload, one per node) so
that changing the workload never perturbs node placement or back-off draws
elsewhere.

Per-node estimator and protocol state lives in numpy arrays shared between
the compiled reception kernel (the untraced fast path) and the plain-Python
reception handler (used when tracing, so every drop can be logged).  Both
paths implement identical semantics over the same arrays.  Scalar per-node
state is packed into three row-major matrices (int32 counters, float64
times, int8 flags) so a kernel call unboxes a handful of arrays; the named
attributes below are row views into those matrices, not copies.
"""

from __future__ import annotations

import heapq
import random
from typing import Iterable, List, Optional, Tuple

import numpy as np

from ._kernels import (
    FU_BEACON_IMP,
    FU_CONFLICT,
    FU_FLUSH,
    FU_FULL,
    FU_NEW_DATA,
    FU_SINK,
    B_ROWS,
    F_ROWS,
    I_ROWS,
    P_HOP_CAP,
    P_HOP_TIMER,
    P_LEN,
    P_PROTO,
    P_T_MIN,
    P_TR_PERIOD,
    P_TTL,
    RES_CAP,
    draw_eligible,
    fast_end_tx,
    flatten_neighbors,
    hop_current,
    hop_enlist,
    register_tx,
)
from .adaptive import AdaptiveWindowState
from .core import SATURATION_EPS
from .medium import Topology
from .metrics import ConfigError, Metrics, SimConfig
from .protocols import UNKNOWN_HOP, Node

# event codes (heap entries are (time, seq, code, payload))
END_TX = 0
TIMER_P1 = 1
TIMER_P2 = 2
TIMER_BEACON = 3
SENSE = 4
KILL = 5
BEACON_WAVE = 6

# frame kinds on the wire (indices into the per-kind airtime table)
K_BEACON = 0
K_CTRL = 1
K_DATA = 2
_KIND_NAMES = ("tx_beacon", "tx_ctrl", "tx_data")

_PROTO_INDEX = {"arbp": 0, "ibsp": 1, "daibsp": 2}

SINK = 0

TRAFFIC_PERIOD = 1.0


class Simulator:
    """A single seeded run of one protocol over one topology."""

    def __init__(
        self,
        config: SimConfig,
        topology: Optional[Topology] = None,
        kills: Iterable[Tuple[float, int]] = (),
        trace_path: Optional[str] = None,
    ):
        cfg = config.validate()
        self.cfg = cfg
        self.proto = _PROTO_INDEX[cfg.protocol]
        seed = cfg.seed
        if topology is None:
            rng_topo = random.Random(f"{seed}:topo")
            if cfg.deployment == "square":
                topology = Topology.scatter_square(
                    cfg.n_nodes, cfg.area, cfg.range_m, rng_topo
                )
            else:
                topology = Topology.scatter_disk(
                    cfg.n_nodes, cfg.area, cfg.range_m, rng_topo
                )
        self.topo = topology
        n = len(topology)
        self.n = n
        self.airtime = cfg.airtime
        # per-kind frame durations: beacon/control are header-only
        ctrl_air = cfg.airtime * cfg.control_airtime_factor
        self._airtimes = (ctrl_air, ctrl_air, cfg.airtime)
        self.ttl = cfg.packet_ttl
        self.t_min = cfg.t_min
        self.metrics = Metrics()

        self.nodes: List[Node] = [
            Node(
                i,
                random.Random(f"{seed}:node:{i}"),
                AdaptiveWindowState(
                    t_min=cfg.t_min,
                    t_max=cfg.t_max_initial,
                    d_prev=cfg.d_init,
                    i_prev=cfg.i_init,
                    alpha=cfg.alpha,
                    beta=cfg.beta,
                    t_cap=cfg.t_cap,
                ),
                cfg.t_inactive,
                cfg.hop_table_capacity,
                cfg.hop_timer,
            )
            for i in range(n)
        ]
        self.nbr = [topology.static_neighbors(i) for i in range(n)]
        self._nbr_flat, self._nbr_off = flatten_neighbors(self.nbr)

        # packed per-node scalar state; the attributes below are row views
        self._istate = np.zeros((I_ROWS, n), dtype=np.int32)
        self._fstate = np.zeros((F_ROWS, n), dtype=np.float64)
        self._bstate = np.zeros((B_ROWS, n), dtype=np.int8)
        (
            self.rx_count,  # in-air frames currently covering the node
            self.tr_cnt,  # receptions inside the open traffic period
            self.dens_cnt,  # distinct senders ever heard (early-run density)
            self.res_pos,  # reservation ring write position
            self.res_cnt,  # reservation ring fill level
            self.hop_cnt,  # live hop-table entries
        ) = self._istate
        (
            self.busy_until,  # own-transmission end time (half-duplex guard)
            self.tr_ps,  # open traffic-period start
            self.t2a,  # pending data transmit time while a round is active
        ) = self._fstate
        (
            self.rx_ok,  # sole in-air frame still deliverable here
            self.alive,
            self.act,  # a protocol round is active
            self.pend,  # data parked until the hop gradient is known
        ) = self._bstate
        self.alive[:] = 1
        self.rx_sole = np.full(n, -1, dtype=np.int64)

        self.tr_last = np.zeros(n, dtype=np.float64)
        self.last_heard = np.full((n, n), -1e300, dtype=np.float64)

        n_msgs = max(1, cfg.total_events)
        self.seen = np.zeros((n, n_msgs), dtype=np.bool_)
        self.res_t = np.zeros((n, RES_CAP), dtype=np.float64)
        cap = cfg.hop_table_capacity
        self.hop_val = np.zeros((n, cap), dtype=np.int32)
        self.hop_exp = np.zeros((n, cap), dtype=np.float64)

        self._params = np.zeros(P_LEN, dtype=np.float64)
        self._params[P_PROTO] = self.proto
        self._params[P_T_MIN] = cfg.t_min
        self._params[P_TTL] = cfg.packet_ttl
        self._params[P_TR_PERIOD] = TRAFFIC_PERIOD
        self._params[P_HOP_TIMER] = cfg.hop_timer
        self._params[P_HOP_CAP] = cap

        self._out_r = np.empty(n, dtype=np.int32)
        self._out_code = np.empty(n, dtype=np.int8)

        self.heap: List[tuple] = []
        self._seq = 0
        self._tid = 0

        self._trace_fh = None
        path = trace_path or cfg.trace
        if path:
            self._trace_fh = open(path, "w")

        wl_rng = random.Random(f"{seed}:workload")
        t = 0.0
        for j in range(cfg.total_events):
            t += wl_rng.expovariate(cfg.lam)
            self._push(t, SENSE, j)
        self._wl_rng = wl_rng

        if self.proto == 2:
            self._push(0.0, BEACON_WAVE, None)

        for at, node in kills:
            self.kill_node(at, node)

    # -- scheduling helpers -------------------------------------------------

    def _push(self, t: float, code: int, payload) -> None:
        self._seq += 1
        heapq.heappush(self.heap, (t, self._seq, code, payload))

    def kill_node(self, at: float, node: int) -> None:
        if node == SINK:
            raise ConfigError("cannot kill the sink")
        if not 0 <= node < self.n:
            raise ConfigError(f"unknown node id {node}")
        self._push(at, KILL, node)

    def node_hop(self, nid: int, now: float) -> int:
        """Current hop-gradient value of one node (-1 when unknown)."""
        return int(hop_current(self.hop_val, self.hop_exp, self._istate, nid, now))

    def _trace(self, t: float, kind: str, node: int, msg: int, hop: int) -> None:
        if self._trace_fh is not None:
            self._trace_fh.write(f"{t:.9f} {kind} {node} {msg} {hop}\n")

    # -- the radio ------------------------------------------------------------

    def _transmit(
        self, now: float, sender: int, kind: int,
        msg: int, origin: int, hop: int, t_ann: float, created: float,
    ) -> None:
        self.metrics.tx_count += 1
        tid = self._tid
        self._tid = tid + 1
        end = now + self._airtimes[kind]
        register_tx(
            sender, tid, now, end,
            self._nbr_flat, self._nbr_off,
            self._istate, self._fstate, self._bstate, self.rx_sole,
        )
        seq = self._seq + 1
        self._seq = seq
        heapq.heappush(
            self.heap,
            (end, seq, END_TX, (tid, sender, kind, msg, origin, hop, t_ann, created)),
        )
        if self._trace_fh is not None:
            self._trace(now, _KIND_NAMES[kind], sender, msg, hop)

    # -- back-off draws over the shared reservation rings ----------------------

    def _draw_phase2(self, node: Node, t0: float, not_before: float) -> Tuple[float, bool]:
        """Pick the data transmit time outside all live announced bands.

        Same contract as Node.draw_phase2, but reads the engine's reservation
        rings.  Returns (absolute time, fallback flag).
        """
        a = node.adaptive
        t_min = a.t_min
        t_max = a.t_max
        lo = t0 + t_max + t_min
        if not_before > lo:
            lo = not_before
        win_hi = t0 + 2.0 * t_max
        slipped = lo >= win_hi - t_min
        if slipped:
            # window slipped into the past: start a fresh one from now,
            # still avoiding the bands that are known
            lo = not_before + t_min
            win_hi = lo + (t_max - t_min)
        nid = node.id
        t = draw_eligible(
            lo, win_hi, t_min,
            self.res_t[nid], int(self.res_cnt[nid]),
            node.rng.random(), SATURATION_EPS,
        )
        if t < 0.0:
            return lo + node.rng.random() * (win_hi - lo), True
        return t, slipped

    # -- protocol rounds ------------------------------------------------------

    def _start_round(self, node: Node, now: float) -> None:
        node.round_active = True
        nid = node.id
        self.act[nid] = 1
        node.round_t0 = now
        node.announced = False
        node.round_gen += 1
        gen = node.round_gen
        if self.proto == 0:
            self._push(node.arbp_backoff(now), TIMER_P2, (nid, gen))
        else:
            t2, fb = self._draw_phase2(node, now, now)
            if fb:
                self.metrics.fallback_count += 1
                self._trace(now, "fallback", nid, -1, -1)
            node.t2 = t2
            self.t2a[nid] = t2
            self._push(node.arbp_backoff(now), TIMER_P1, (nid, gen))

    def _redraw(self, node: Node, now: float) -> None:
        """Own announced data time fell inside a new forbidden band: pick a
        fresh time and announce it again after a new short back-off."""
        node.round_gen += 1
        gen = node.round_gen
        t2, fb = self._draw_phase2(node, node.round_t0, now + self.airtime)
        if fb:
            self.metrics.fallback_count += 1
            self._trace(now, "fallback", node.id, -1, -1)
        node.t2 = t2
        self.t2a[node.id] = t2
        announce_at = node.arbp_backoff(now)
        if announce_at + self.airtime < t2:
            node.announced = False
            self._push(announce_at, TIMER_P1, (node.id, gen))
        else:
            self._push(t2, TIMER_P2, (node.id, gen))

    def _fire_p1(self, now: float, nid: int, gen: int) -> None:
        node = self.nodes[nid]
        if gen != node.round_gen or not self.alive[nid] or not node.round_active:
            return
        head = node.queue[0][0] if node.queue else -1
        hop = self.node_hop(nid, now) if self.proto == 2 else -1
        self._transmit(now, nid, K_CTRL, head, nid, hop, node.t2, 0.0)
        node.announced = True
        t2 = node.t2
        floor = now + self.airtime
        self._push(t2 if t2 > floor else floor, TIMER_P2, (nid, gen))

    def _fire_p2(self, now: float, nid: int, gen: int) -> None:
        node = self.nodes[nid]
        if gen != node.round_gen or not self.alive[nid] or not node.round_active:
            return
        node.round_active = False
        self.act[nid] = 0
        q = node.queue
        m = self.metrics
        item = None
        while q:
            msg, created, origin = q.popleft()
            if now - created > self.ttl:
                m.drops += 1
                self._trace(now, "drop", nid, msg, -1)
                continue
            item = (msg, created, origin)
            break
        if item is None:
            return
        msg, created, origin = item
        if self.proto == 2:
            hop = self.node_hop(nid, now)
            if hop == UNKNOWN_HOP:
                q.appendleft(item)  # wait until a hop is learned
                return
        else:
            hop = -1
        self._transmit(now, nid, K_DATA, msg, origin, hop, 0.0, created)
        if q:
            self._start_round(node, now)

    def _fire_beacon(self, now: float, nid: int, gen: int) -> None:
        node = self.nodes[nid]
        if gen != node.beacon_gen or not self.alive[nid]:
            return
        node.beacon_pending = False
        hop = self.node_hop(nid, now)
        if hop >= 0:
            self._transmit(now, nid, K_BEACON, -1, nid, hop, 0.0, 0.0)

    def _flush_pending(self, node: Node, now: float) -> None:
        if node.pending_unknown and self.node_hop(node.id, now) != UNKNOWN_HOP:
            node.queue.extend(node.pending_unknown)
            node.pending_unknown.clear()
            self.pend[node.id] = 0
            if not node.round_active and node.queue:
                self._start_round(node, now)

    # -- reception ------------------------------------------------------------

    def _roll_adapt(self, node: Node, r: int, now: float) -> None:
        """Close elapsed traffic periods and adapt the back-off window."""
        rate = float(self.tr_cnt[r])
        ps = self.tr_ps[r]
        cnt = int(self.tr_cnt[r])
        last = self.tr_last[r]
        completed = 0
        while now - ps >= TRAFFIC_PERIOD:
            last = float(cnt)
            cnt = 0
            ps += TRAFFIC_PERIOD
            completed += 1
            if completed >= 2 and last == 0.0:
                # long silence: remaining empty periods are identical
                gap = int((now - ps) / TRAFFIC_PERIOD)
                ps += gap * TRAFFIC_PERIOD
                break
        self.tr_ps[r] = ps
        self.tr_cnt[r] = cnt
        self.tr_last[r] = last
        if completed:
            d_now = self._density(r, now)
            node.adaptive.adapt(d_now, rate)
            if completed > 1:
                node.adaptive.adapt(d_now, 0.0)

    def _density(self, r: int, now: float) -> float:
        """Distinct senders heard within the inactivity horizon."""
        if now <= self.cfg.t_inactive:
            return float(self.dens_cnt[r])
        cutoff = now - self.cfg.t_inactive
        return float(np.count_nonzero(self.last_heard[r] >= cutoff))

    def _deliver(
        self, now: float, r: int, sender: int, kind: int,
        msg: int, origin: int, pkt_hop: int, t_ann: float, created: float,
    ) -> None:
        """Full single-reception handler (traced path and adaptation rolls)."""
        node = self.nodes[r]
        if now - self.tr_ps[r] >= TRAFFIC_PERIOD:
            self._roll_adapt(node, r, now)
        self.tr_cnt[r] += 1
        if self.last_heard[r, sender] < -1e200:
            self.dens_cnt[r] += 1
        self.last_heard[r, sender] = now

        m = self.metrics
        if kind == K_DATA:
            if r == SINK:
                if not self.seen[SINK, msg]:
                    self.seen[SINK, msg] = True
                    m.data_delivered += 1
                    m.delays.append(now - created)
                    self._trace(now, "rx_sink", r, msg, pkt_hop)
                return
            if self.proto == 2:
                mine = self.node_hop(r, now)
                if pkt_hop >= mine:
                    hop_enlist(
                        self.hop_val, self.hop_exp, self._istate,
                        r, pkt_hop + 1, now,
                        self.cfg.hop_timer, self.cfg.hop_table_capacity,
                    )
                if node.pending_unknown:
                    self._flush_pending(node, now)
                if self.seen[r, msg]:
                    return
                self.seen[r, msg] = True
                if now - created > self.ttl:
                    m.drops += 1
                    self._trace(now, "drop", r, msg, -1)
                    return
                if mine == UNKNOWN_HOP or pkt_hop < mine:
                    m.drops += 1  # hop gate: packet moving away from the sink
                    self._trace(now, "drop", r, msg, pkt_hop)
                    return
            else:
                if self.seen[r, msg]:
                    return
                self.seen[r, msg] = True
                if now - created > self.ttl:
                    m.drops += 1
                    self._trace(now, "drop", r, msg, -1)
                    return
            node.queue.append((msg, created, origin))
            if not node.round_active:
                self._start_round(node, now)
        elif kind == K_CTRL:
            if self.proto >= 1 and r != SINK:
                i = self.res_pos[r]
                self.res_t[r, i] = t_ann
                self.res_pos[r] = (i + 1) % RES_CAP
                if self.res_cnt[r] < RES_CAP:
                    self.res_cnt[r] += 1
                if node.round_active and abs(node.t2 - t_ann) < self.t_min:
                    self._conflict(node, now)
        else:  # beacon
            if self.proto == 2 and r != SINK:
                mine = self.node_hop(r, now)
                new = pkt_hop + 1
                if mine == UNKNOWN_HOP or new < mine:
                    hop_enlist(
                        self.hop_val, self.hop_exp, self._istate,
                        r, new, now,
                        self.cfg.hop_timer, self.cfg.hop_table_capacity,
                    )
                    self._beacon_improved(node, now)

    def _conflict(self, node: Node, now: float) -> None:
        """A neighbour announced a time inside this node's own band."""
        if node.announced:
            self._redraw(node, now)
        else:
            t2, fb = self._draw_phase2(node, node.round_t0, now)
            if fb:
                self.metrics.fallback_count += 1
                self._trace(now, "fallback", node.id, -1, -1)
            node.t2 = t2
            self.t2a[node.id] = t2

    def _beacon_improved(self, node: Node, now: float) -> None:
        if node.pending_unknown:
            self._flush_pending(node, now)
        if not node.beacon_pending:
            node.beacon_pending = True
            node.beacon_gen += 1
            self._push(node.arbp_backoff(now), TIMER_BEACON, (node.id, node.beacon_gen))
        if node.queue and not node.round_active:
            self._start_round(node, now)

    # -- the run loop -----------------------------------------------------------

    def run(self) -> Metrics:
        heap = self.heap
        pop = heapq.heappop
        rx_count = self.rx_count
        rx_sole = self.rx_sole
        rx_ok = self.rx_ok
        alive = self.alive
        nbr = self.nbr
        nbr_flat = self._nbr_flat
        nbr_off = self._nbr_off
        istate = self._istate
        fstate = self._fstate
        bstate = self._bstate
        params = self._params
        out_r = self._out_r
        out_code = self._out_code
        nodes = self.nodes
        seen = self.seen
        m = self.metrics
        delays = m.delays
        last_heard = self.last_heard
        res_t = self.res_t
        hop_val = self.hop_val
        hop_exp = self.hop_exp
        horizon = self.cfg.horizon
        trace = self._trace_fh is not None
        fire_p1 = self._fire_p1
        fire_p2 = self._fire_p2
        start_round = self._start_round
        conflict = self._conflict
        while heap:
            now, _, code, payload = pop(heap)
            if horizon is not None and now > horizon:
                break
            if code == END_TX:
                tid, sender, kind, msg, origin, pkt_hop, t_ann, created = payload
                if trace:
                    # slow path: log a drop line per destroyed reception
                    for r in nbr[sender]:
                        c = rx_count[r] - 1
                        rx_count[r] = c
                        if c == 0 and rx_sole[r] == tid and rx_ok[r]:
                            if alive[r]:
                                self._deliver(
                                    now, r, sender, kind,
                                    msg, origin, pkt_hop, t_ann, created,
                                )
                        elif alive[r]:
                            m.drops += 1  # reception destroyed by overlap
                            self._trace(now, "drop", r, msg, -1)
                    continue
                k, destroyed, gate_drops = fast_end_tx(
                    sender, tid, kind, msg, pkt_hop, t_ann, created, now,
                    params, nbr_flat, nbr_off, istate, fstate, bstate,
                    rx_sole, last_heard, seen, res_t, hop_val, hop_exp,
                    out_r, out_code,
                )
                m.drops += destroyed + gate_drops
                for i in range(k):
                    r = out_r[i]
                    fu = out_code[i]
                    if fu == FU_NEW_DATA:
                        node = nodes[r]
                        node.queue.append((msg, created, origin))
                        if not node.round_active:
                            start_round(node, now)
                    elif fu == FU_CONFLICT:
                        conflict(nodes[r], now)
                    elif fu == FU_SINK:
                        seen[SINK, msg] = True
                        m.data_delivered += 1
                        delays.append(now - created)
                    elif fu == FU_FULL:
                        self._deliver(
                            now, int(r), sender, kind,
                            msg, origin, pkt_hop, t_ann, created,
                        )
                    elif fu == FU_FLUSH:
                        self._flush_pending(nodes[r], now)
                    else:  # FU_BEACON_IMP
                        self._beacon_improved(nodes[r], now)
            elif code == TIMER_P2:
                fire_p2(now, payload[0], payload[1])
            elif code == TIMER_P1:
                fire_p1(now, payload[0], payload[1])
            elif code == SENSE:
                self._sense(now, payload)
            elif code == TIMER_BEACON:
                self._fire_beacon(now, payload[0], payload[1])
            elif code == KILL:
                nid = payload
                alive[nid] = 0
                self.topo.kill(nid)
                node = self.nodes[nid]
                node.round_gen += 1
                node.beacon_gen += 1
            elif code == BEACON_WAVE:
                self._transmit(now, SINK, K_BEACON, -1, SINK, 0, 0.0, 0.0)
                if self.cfg.beacon_period:
                    self._push(now + self.cfg.beacon_period, BEACON_WAVE, None)
        if self._trace_fh is not None:
            self._trace_fh.close()
        return self.metrics

    def _sense(self, now: float, msg: int) -> None:
        if self.cfg.source is not None:
            src = self.cfg.source
            if not self.alive[src]:
                return
        else:
            src = self._wl_rng.randrange(1, self.n)
            for _ in range(10 * self.n):
                if self.alive[src]:
                    break
                src = self._wl_rng.randrange(1, self.n)
            else:
                return  # everything but the sink is dead
        self.metrics.data_sent += 1
        self._trace(now, "sense", src, msg, -1)
        node = self.nodes[src]
        self.seen[src, msg] = True
        if self.proto == 2 and self.node_hop(src, now) == UNKNOWN_HOP:
            node.pending_unknown.append((msg, now, src))
            self.pend[src] = 1
            return
        node.queue.append((msg, now, src))
        if not node.round_active:
            self._start_round(node, now)


def run_sim(
    config: SimConfig,
    topology: Optional[Topology] = None,
    kills: Iterable[Tuple[float, int]] = (),
    trace_path: Optional[str] = None,
) -> Metrics:
    """Run one seeded simulation to completion and return its metrics."""
    return Simulator(config, topology, kills, trace_path).run()


def replay_metrics(trace_path: str) -> Metrics:
    """Rebuild a Metrics object from a recorded event trace.

    The trace is self-contained: sense lines give creation times, sink
    receptions give first-arrival delays, and every transmission, drop and
    fallback is logged as its own line.
    """
    m = Metrics()
    created = {}
    delivered = set()
    with open(trace_path) as fh:
        for line in fh:
            parts = line.split()
            t = float(parts[0])
            kind = parts[1]
            msg = int(parts[3])
            if kind == "sense":
                m.data_sent += 1
                created[msg] = t
            elif kind in ("tx_data", "tx_ctrl", "tx_beacon"):
                m.tx_count += 1
            elif kind == "rx_sink":
                if msg not in delivered:
                    delivered.add(msg)
                    m.data_delivered += 1
                    m.delays.append(t - created[msg])
            elif kind == "drop":
                m.drops += 1
            elif kind == "fallback":
                m.fallback_count += 1
    return m
