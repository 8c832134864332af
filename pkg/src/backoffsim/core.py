"""Shared domain types: packets, back-off windows and forbidden-zone interval algebra.

Times and durations are plain floats (seconds).  All interval endpoints are
absolute simulation times; announced back-offs travel as absolute times so
that overlap checks never depend on per-node round origins.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

#: Complement measure below which sampling reports saturation instead of
#: drawing from floating-point slivers.
SATURATION_EPS = 1e-6


class PacketKind(enum.IntEnum):
    BEACON = 0
    CONTROL = 1
    DATA = 2


@dataclass(frozen=True)
class Packet:
    """A frame on the air.

    ``announced_backoff`` is only meaningful on CONTROL frames and holds the
    absolute time at which the sender will transmit its data packet.
    ``hop_count`` is carried by BEACON frames and by DATA frames under the
    direction-aware protocol; -1 means "unknown" and never appears on a
    transmitted beacon.
    """

    kind: PacketKind
    msg_id: int
    origin: int
    sender: int
    hop_count: int = -1
    announced_backoff: Optional[float] = None
    created_at: float = 0.0

    def __post_init__(self):
        if (self.announced_backoff is not None) != (self.kind == PacketKind.CONTROL):
            raise ValueError("announced_backoff present iff kind is CONTROL")
        if self.kind == PacketKind.BEACON and self.hop_count < 0:
            raise ValueError("transmitted beacons carry a nonnegative hop count")


@dataclass(frozen=True)
class BackoffWindow:
    """Half-open-in-spirit window (lo, hi) from which back-offs are drawn."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"window requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def _normalize(intervals: Iterable[Tuple[float, float]]) -> List[Tuple[float, float]]:
    """Sort and merge closed intervals; touching endpoints merge."""
    ivs = sorted((lo, hi) for lo, hi in intervals if hi >= lo)
    out: List[Tuple[float, float]] = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            if hi > out[-1][1]:
                out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return out


@dataclass
class ForbiddenZones:
    """Disjoint, sorted, closed intervals clipped to a back-off window.

    Membership at endpoints counts as forbidden: a draw exactly one minimum
    transfer time away from a neighbour's transmission still overlaps it.
    """

    window: BackoffWindow
    intervals: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        clipped = [
            (max(lo, self.window.lo), min(hi, self.window.hi))
            for lo, hi in self.intervals
        ]
        self.intervals = _normalize(clipped)

    def total_measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    def complement(self) -> List[Tuple[float, float]]:
        """Eligible sub-intervals of the window, in order."""
        segs: List[Tuple[float, float]] = []
        cur = self.window.lo
        for lo, hi in self.intervals:
            if lo > cur:
                segs.append((cur, lo))
            cur = max(cur, hi)
        if cur < self.window.hi:
            segs.append((cur, self.window.hi))
        return segs

    def contains(self, t: float) -> bool:
        for lo, hi in self.intervals:
            if lo <= t <= hi:
                return True
            if lo > t:
                break
        return False


def zones_subtract(zones: ForbiddenZones, t_n: float, t_min: float) -> ForbiddenZones:
    """Remove the band (t_n - t_min, t_n + t_min) from the eligible set.

    Equivalently, add the band to the forbidden zones, clipped to the window
    and re-normalized.  Bands entirely outside the window are no-ops, and the
    operation is idempotent.
    """
    lo = t_n - t_min
    hi = t_n + t_min
    w = zones.window
    if hi < w.lo or lo > w.hi:
        return ForbiddenZones(w, list(zones.intervals))
    return ForbiddenZones(w, zones.intervals + [(max(lo, w.lo), min(hi, w.hi))])


def sample_eligible(
    window: BackoffWindow, zones: ForbiddenZones, rng
) -> Optional[float]:
    """Uniform draw from the window minus the forbidden zones.

    Returns ``None`` when the eligible set is (numerically) exhausted, i.e.
    its Lebesgue measure is at most ``SATURATION_EPS``.  ``rng`` is anything
    with a ``random()`` method returning U[0, 1).
    """
    segs = zones.complement() if zones.window == window else ForbiddenZones(
        window, list(zones.intervals)
    ).complement()
    total = sum(hi - lo for lo, hi in segs)
    if total <= SATURATION_EPS:
        return None
    u = rng.random() * total
    for lo, hi in segs:
        span = hi - lo
        if u < span:
            return lo + u
        u -= span
    return segs[-1][1]  # guard against float round-off on the last segment
