"""Per-node protocol state for the three back-off MACs.

The three protocols share the adaptive window machinery:

* plain adaptive back-off ("arbp"): one uniform draw from (T_min, T_max)
  before each data broadcast;
* informed back-off ("ibsp"): a control packet first announces the absolute
  time of the upcoming data broadcast, drawn from the later window
  (T_max + T_min, 2 T_max) minus the bands announced by neighbours;
* direction-aware informed back-off ("daibsp"): ibsp plus a beacon-built
  hop-count gradient; data is forwarded only when the packet's stamped hop
  count is at least the node's own.

Nodes are plain mutable state; the event engine drives them.  Handlers here
mutate node state and return what to do; the engine owns scheduling and the
radio medium.
"""

from __future__ import annotations

import random
from collections import deque
from typing import List, Optional, Tuple

from .adaptive import AdaptiveWindowState, DensityTable, TrafficCounter
from .core import BackoffWindow, ForbiddenZones, sample_eligible

UNKNOWN_HOP = -1


class HopTable:
    """Bounded table of (hop, expiry) candidates; node hop = min live entry.

    Insertion beyond capacity evicts the largest hop value.  Re-inserting an
    existing hop value refreshes its timer.
    """

    __slots__ = ("entries", "capacity", "timer")

    def __init__(self, capacity: int = 10, timer: float = 2.0):
        self.entries: List[List[float]] = []  # [hop, expires_at]
        self.capacity = capacity
        self.timer = timer

    def enlist(self, hop: int, now: float) -> None:
        expires = now + self.timer
        for e in self.entries:
            if e[0] == hop:
                if expires > e[1]:
                    e[1] = expires
                return
        self.entries.append([hop, expires])
        if len(self.entries) > self.capacity:
            self.entries.remove(max(self.entries, key=lambda e: e[0]))

    def current_hop(self, now: float) -> int:
        """Minimum live entry, or -1 when the table is empty or all expired."""
        best = -1
        stale = False
        for h, exp in self.entries:
            if exp < now:
                stale = True
                continue
            if best < 0 or h < best:
                best = int(h)
        if stale:
            self.entries = [e for e in self.entries if e[1] >= now]
        return best


class Node:
    """All per-node protocol state for one simulation run."""

    __slots__ = (
        "id",
        "rng",
        "seen",
        "queue",
        "pending_unknown",
        "round_active",
        "round_t0",
        "round_gen",
        "t2",
        "announced",
        "reservations",
        "adaptive",
        "density",
        "traffic",
        "hop_table",
        "beacon_pending",
        "beacon_gen",
    )

    def __init__(
        self,
        node_id: int,
        rng: random.Random,
        adaptive: AdaptiveWindowState,
        t_inactive: float,
        hop_capacity: int,
        hop_timer: float,
    ):
        self.id = node_id
        self.rng = rng
        self.seen: set = set()
        self.queue: deque = deque()  # (msg_id, created_at)
        self.pending_unknown: List[Tuple[int, float]] = []
        self.round_active = False
        self.round_t0 = 0.0
        self.round_gen = 0
        self.t2 = 0.0
        self.announced = False
        self.reservations: List[float] = []  # neighbours' announced times
        self.adaptive = adaptive
        self.density = DensityTable(t_inactive=t_inactive)
        self.traffic = TrafficCounter()
        self.hop_table = HopTable(hop_capacity, hop_timer)
        self.beacon_pending = False
        self.beacon_gen = 0

    # -- back-off draws ----------------------------------------------------

    def arbp_backoff(self, now: float) -> float:
        """Absolute transmit time: now plus a uniform draw in (T_min, T_max)."""
        a = self.adaptive
        return now + a.t_min + self.rng.random() * (a.t_max - a.t_min)

    def phase2_window(self, t0: float) -> BackoffWindow:
        a = self.adaptive
        return BackoffWindow(t0 + a.t_max + a.t_min, t0 + 2.0 * a.t_max)

    def draw_phase2(self, t0: float, not_before: float = 0.0) -> Tuple[float, bool]:
        """Pick the data transmit time outside all live announced bands.

        Returns (absolute time, fallback flag).  The fallback flag is set when
        the eligible set was exhausted (or the window already passed) and the
        draw had to ignore the zones.
        """
        a = self.adaptive
        win = self.phase2_window(t0)
        lo = max(win.lo, not_before)
        slipped = lo >= win.hi - a.t_min
        if slipped:
            # window slipped into the past: start a fresh one from now,
            # still avoiding the bands that are known
            lo = not_before + a.t_min
            win = BackoffWindow(lo, lo + (a.t_max - a.t_min))
        else:
            win = BackoffWindow(lo, win.hi)
        self._gc_reservations(lo)
        zones = ForbiddenZones(
            win, [(t - a.t_min, t + a.t_min) for t in self.reservations]
        )
        t = sample_eligible(win, zones, self.rng)
        if t is None:
            return lo + self.rng.random() * win.width, True
        return t, slipped

    def _gc_reservations(self, now: float) -> None:
        # a reservation at t_n can only forbid draws up to t_n + t_min
        cutoff = now - self.adaptive.t_min
        if any(t < cutoff for t in self.reservations):
            self.reservations = [t for t in self.reservations if t >= cutoff]

    def add_reservation(self, t_n: float) -> None:
        self.reservations.append(t_n)

    def conflicts_with(self, t_n: float) -> bool:
        """Does the node's own pending data time fall in the announced band?"""
        return abs(self.t2 - t_n) < self.adaptive.t_min

    # -- direction-aware helpers --------------------------------------------

    def hop(self, now: float) -> int:
        return self.hop_table.current_hop(now)

    def build_from_beacon(self, beacon_hop: int, now: float) -> bool:
        """Hop-gradient building rule; True when improved (so rebroadcast)."""
        mine = self.hop(now)
        new = beacon_hop + 1
        if mine == UNKNOWN_HOP or new < mine:
            self.hop_table.enlist(new, now)
            return True
        return False

    def gate(self, packet_hop: int, now: float) -> bool:
        """Forwarding rule: True iff the packet may be re-broadcast here.

        Also enlists packet_hop + 1 whenever the packet's hop is at least the
        node's own (including the unknown case), refreshing the gradient.
        """
        mine = self.hop(now)
        if packet_hop >= mine:
            self.hop_table.enlist(packet_hop + 1, now)
        if mine == UNKNOWN_HOP:
            return False  # listen-only until a hop is learned
        return packet_hop >= mine
