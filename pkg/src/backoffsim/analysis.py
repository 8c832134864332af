"""Closed-form collision and transmission-count formulas plus the Monte
Carlo experiments the simulator and the formulas are validated against.

The single-cell model: n contenders share one radio cell, each picks a
back-off from a window of a given width, and a transmission collides when
another contender's back-off lands within the minimum transfer time of it.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .core import BackoffWindow, ForbiddenZones, sample_eligible, zones_subtract
from .medium import Topology


@dataclass(frozen=True)
class CellModel:
    """Parameters of the single-cell collision model."""

    n: float  # expected neighbours of the tagged node
    t_min: float
    window_width: float  # t_max - t_min

    def __post_init__(self):
        if self.window_width <= 0:
            raise ValueError("window width must be positive")
        if self.n < 0 or self.t_min < 0:
            raise ValueError("n and t_min must be nonnegative")


def expected_neighbors(r: float, big_r: float, n_nodes: int) -> float:
    """Expected in-range neighbours for a uniform deployment on a disk."""
    if big_r <= 0:
        raise ValueError("deployment radius must be positive")
    if not 0 <= r <= big_r:
        raise ValueError("radio range must lie in [0, R]")
    return n_nodes * (r * r) / (big_r * big_r)


def prob_arbp(cell: CellModel) -> float:
    """Union-bound collision probability for a plain random back-off."""
    return min(1.0, 2.0 * cell.n * cell.t_min / cell.window_width)


def prob_ibsp(cell: CellModel) -> float:
    """Two-phase informed back-off: the square of the plain probability."""
    p = prob_arbp(cell)
    return p * p


def expected_tx(mode: str, n_nodes: int) -> float:
    """Expected transmissions per event: full flood N, sink-directed N/2."""
    if n_nodes < 0:
        raise ValueError("node count must be nonnegative")
    if mode == "flood":
        return float(n_nodes)
    if mode == "directed":
        return n_nodes / 2.0
    raise ValueError(f"unknown mode {mode!r} (expected 'flood' or 'directed')")


def mc_pair_collision(t_min: float, width: float, trials: int, seed: int) -> float:
    """Fraction of independent uniform pairs landing within t_min of each
    other; converges to 2*tau - tau**2 with tau = t_min / width."""
    if trials < 10_000:
        raise ValueError("use at least 1e4 trials")
    if t_min <= 0:
        return 0.0
    if t_min >= width:
        return 1.0
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, width, trials)
    y = rng.uniform(0.0, width, trials)
    return float(np.mean(np.abs(x - y) < t_min))


def mc_cell(protocol: str, k: int, cell: CellModel, trials: int, seed: int) -> float:
    """Collision probability of a tagged contender among k in one cell.

    'arbp': every contender draws an independent uniform back-off.
    'ibsp': contenders first announce; an announcement is heard iff no other
    announcement lands within t_min of it.  Contenders that heard the earlier
    successful announcements pick their data back-off outside the announced
    bands (in announcement order); contenders whose announcement round
    collided pick uninformed uniforms.
    """
    if k < 2:
        raise ValueError("need at least two contenders")
    w = cell.window_width
    tm = cell.t_min
    if protocol == "arbp":
        rng = np.random.default_rng(seed)
        draws = rng.uniform(0.0, w, (trials, k))
        hit = np.abs(draws[:, 1:] - draws[:, :1]) < tm
        return float(hit.any(axis=1).mean())
    if protocol != "ibsp":
        raise ValueError(f"unknown protocol {protocol!r}")

    rng = np.random.default_rng(seed)
    phase1 = rng.uniform(0.0, w, (trials, k))
    # announcement j is heard iff isolated by >= t_min from every other
    diff = np.abs(phase1[:, :, None] - phase1[:, None, :]) < tm
    np.einsum("ijj->ij", diff)[:] = False
    heard = ~diff.any(axis=2)  # (trials, k)
    order = np.argsort(phase1, axis=1)
    py_rng = random.Random(seed)
    window = BackoffWindow(0.0, w)
    collided = 0
    for t in range(trials):
        zones = ForbiddenZones(window)
        picks = np.empty(k)
        for j in order[t]:
            if heard[t, j]:
                pick = sample_eligible(window, zones, py_rng)
                if pick is None:
                    pick = py_rng.uniform(0.0, w)  # saturated: uninformed
                picks[j] = pick
                zones = zones_subtract(zones, pick, tm)
            else:
                picks[j] = py_rng.uniform(0.0, w)
        if np.any(np.abs(picks[1:] - picks[0]) < tm):
            collided += 1
    return collided / trials


# -- idealized no-collision flood counts over a disk deployment -----------


def _hops_from_sink(topo: Topology) -> np.ndarray:
    """BFS hop counts from node 0; -1 where unreachable."""
    n = len(topo)
    hops = np.full(n, -1, dtype=int)
    hops[0] = 0
    q = deque([0])
    while q:
        u = q.popleft()
        hu = hops[u]
        for v in topo.static_neighbors(u):
            if hops[v] < 0:
                hops[v] = hu + 1
                q.append(v)
    return hops


def _flood_count(topo: Topology, source: int) -> Tuple[int, int]:
    """(transmissions, reachable nodes) for an unrestricted ideal flood."""
    seen = {source}
    q = deque([source])
    while q:
        u = q.popleft()
        for v in topo.static_neighbors(u):
            if v not in seen:
                seen.add(v)
                q.append(v)
    # every reached node forwards exactly once; the sink only listens
    tx = len(seen) - (1 if 0 in seen and source != 0 else 0)
    return tx, len(seen)


def _gated_flood_count(topo: Topology, source: int, hops: np.ndarray) -> int:
    """Transmissions for a hop-gated ideal flood from ``source``.

    Idealized participation model: the gate silences every node whose hop
    count exceeds the source's, so exactly the nodes at least as close (in
    hops) to the sink as the source forward once; the sink only listens.
    Averaged over uniform sources this is about half the deployment, with
    hop quantization adding a boundary bias.
    """
    if hops[source] < 0:
        return 0
    return int(np.sum((hops >= 1) & (hops <= hops[source])))


def flood_transmission_counts(
    n_nodes: int,
    disk_radius: float,
    range_m: float,
    n_sources: int,
    seed: int,
) -> dict:
    """Average ideal-flood transmission counts over random sources.

    Returns means of: unrestricted flood transmissions, reachable-node
    counts, and hop-gated flood transmissions, on one random disk deployment
    with the sink at the center.
    """
    rng = random.Random(f"{seed}:flood-topo")
    topo = Topology.scatter_disk(n_nodes, disk_radius, range_m, rng)
    hops = _hops_from_sink(topo)
    src_rng = random.Random(f"{seed}:flood-src")
    flood_tx: List[int] = []
    reachable: List[int] = []
    gated_tx: List[int] = []
    for _ in range(n_sources):
        s = src_rng.randrange(1, n_nodes)
        ftx, reach = _flood_count(topo, s)
        flood_tx.append(ftx)
        reachable.append(reach)
        gated_tx.append(_gated_flood_count(topo, s, hops))
    return {
        "mean_flood_tx": float(np.mean(flood_tx)),
        "mean_reachable": float(np.mean(reachable)),
        "mean_gated_tx": float(np.mean(gated_tx)),
        "n_nodes": n_nodes,
    }
