"""Unit-disk broadcast radio with binary overlap-collision semantics.

A receiver hears a transmission intact iff it is alive, in range of the
sender, not the sender itself, not transmitting at any point during the
frame, and no other in-range transmission overlaps the frame in time.  All
mutually overlapping in-range frames at a receiver destroy each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .core import Packet


class Topology:
    """Node positions (meters), a common radio radius and alive flags."""

    def __init__(self, positions: np.ndarray, range_m: float):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ValueError("positions must be an (N, 2) array")
        if range_m <= 0:
            raise ValueError("radio range must be positive")
        self.positions = positions
        self.range_m = float(range_m)
        self.alive = np.ones(len(positions), dtype=bool)
        tree = cKDTree(positions)
        pairs = tree.query_pairs(self.range_m, output_type="ndarray")
        nbr: List[List[int]] = [[] for _ in range(len(positions))]
        for a, b in pairs:
            nbr[a].append(int(b))
            nbr[b].append(int(a))
        #: static in-range lists; alive filtering happens at query time
        self._nbr = nbr

    def __len__(self) -> int:
        return len(self.positions)

    def neighbors(self, node: int) -> List[int]:
        """Alive nodes within range of ``node``, excluding itself."""
        if not 0 <= node < len(self.positions):
            raise IndexError(f"unknown node id {node}")
        alive = self.alive
        return [j for j in self._nbr[node] if alive[j]]

    def static_neighbors(self, node: int) -> List[int]:
        """In-range ids ignoring liveness (for hot paths that check alive)."""
        return self._nbr[node]

    def kill(self, node: int) -> None:
        self.alive[node] = False

    # -- deployment generators -------------------------------------------

    @classmethod
    def scatter_square(cls, n: int, side: float, range_m: float, rng) -> "Topology":
        """Uniform scatter over a side x side square; node 0 at the center."""
        pos = np.column_stack(
            [
                np.array([rng.uniform(0.0, side) for _ in range(n)]),
                np.array([rng.uniform(0.0, side) for _ in range(n)]),
            ]
        )
        pos[0] = (side / 2.0, side / 2.0)
        return cls(pos, range_m)

    @classmethod
    def scatter_disk(cls, n: int, radius: float, range_m: float, rng) -> "Topology":
        """Uniform scatter over a disk of the given radius; node 0 at the center."""
        r = np.sqrt(np.array([rng.random() for _ in range(n)])) * radius
        theta = np.array([rng.uniform(0.0, 2.0 * np.pi) for _ in range(n)])
        pos = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        pos[0] = (0.0, 0.0)
        return cls(pos, range_m)

    # -- plain-text node list: one "id x y" line per node ----------------

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            for i, (x, y) in enumerate(self.positions):
                fh.write(f"{i} {x:.6f} {y:.6f}\n")

    @classmethod
    def load(cls, path: str, range_m: float) -> "Topology":
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                sid, sx, sy = line.split()
                rows.append((int(sid), float(sx), float(sy)))
        rows.sort()
        ids = [r[0] for r in rows]
        if ids != list(range(len(rows))):
            raise ValueError("node ids must be dense 0..N-1")
        pos = np.array([(x, y) for _, x, y in rows])
        return cls(pos, range_m)


@dataclass(frozen=True)
class Transmission:
    sender: int
    packet: Packet
    start: float
    end: float

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("transmission must have positive airtime")


def resolve_receptions(
    topo: Topology, txs: Sequence[Transmission]
) -> Tuple[Dict[int, List[Packet]], Dict[int, int]]:
    """Decide which packets each node hears intact.

    Returns (deliveries, collisions): packets delivered per receiver, and the
    number of destroyed receptions per receiver.  Overlap is open-interval:
    frames separated by exactly the airtime do not interfere.
    """
    deliveries: Dict[int, List[Packet]] = {}
    collisions: Dict[int, int] = {}
    order = sorted(range(len(txs)), key=lambda i: (txs[i].start, txs[i].end))
    for idx in order:
        t = txs[idx]
        for r in topo.neighbors(t.sender):
            ok = True
            for other in txs:
                if other is t:
                    continue
                overlap = other.start < t.end and t.start < other.end
                if not overlap:
                    continue
                if other.sender == r:
                    ok = False  # half-duplex: receiver was transmitting
                    break
                dx = topo.positions[other.sender] - topo.positions[r]
                if float(np.hypot(dx[0], dx[1])) <= topo.range_m:
                    ok = False
                    break
            if ok:
                deliveries.setdefault(r, []).append(t.packet)
            else:
                collisions[r] = collisions.get(r, 0) + 1
    return deliveries, collisions
