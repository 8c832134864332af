"""Per-node estimators for local density and message traffic, and the
upper-window adaptation rule they drive.

The maximum back-off evolves by

    C_d(t) = T_max(t-1) * (d(t) - d(t-1)) / (d(t) + d(t-1))
    C_i(t) = T_max(t-1) * (i(t) - i(t-1)) / (i(t) + i(t-1))
    T_max(t) = T_max(t-1) + alpha * C_d(t) + beta * C_i(t)

with the 0/0 ratio defined as 0 (no evidence, no adaptation) and the result
clamped to keep the window non-degenerate and bounded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict


@dataclass
class DensityTable:
    """Sender ids with the last time each was heard; stale entries expire."""

    t_inactive: float = 3600.0
    entries: Dict[int, float] = field(default_factory=dict)

    def observe(self, sender: int, now: float) -> None:
        self.entries[sender] = now

    def purge(self, now: float) -> None:
        cutoff = now - self.t_inactive
        stale = [s for s, t in self.entries.items() if t < cutoff]
        for s in stale:
            del self.entries[s]

    def count(self, now: float) -> int:
        """Live-neighbour count d_l(now)."""
        self.purge(now)
        return len(self.entries)


@dataclass
class TrafficCounter:
    """Messages received in the running 1-second period.

    ``last_rate`` is the count of the most recently completed period, i.e.
    the local traffic estimate I_l.
    """

    period: float = 1.0
    period_start: float = 0.0
    current_count: int = 0
    last_rate: float = 0.0

    def observe(self, now: float) -> None:
        self.roll(now)
        self.current_count += 1

    def roll(self, now: float) -> int:
        """Close any elapsed periods; returns how many periods completed."""
        completed = 0
        while now - self.period_start >= self.period:
            self.last_rate = float(self.current_count)
            self.current_count = 0
            self.period_start += self.period
            completed += 1
            if completed >= 2 and self.last_rate == 0.0:
                # long silence: remaining empty periods are identical
                gap = int((now - self.period_start) / self.period)
                self.period_start += gap * self.period
                break
        return completed


def _ratio(now: float, prev: float) -> float:
    s = now + prev
    if s == 0.0:
        return 0.0
    return (now - prev) / s


@dataclass
class AdaptiveWindowState:
    """T_max(t) state shared by all three protocols."""

    t_min: float
    t_max: float
    d_prev: float
    i_prev: float
    alpha: float = 1.0
    beta: float = 0.0
    t_cap: float = 0.0  # 0 means "use 50 * t_min"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 <= self.beta <= 1.0:
            raise ValueError("alpha and beta must lie in [0, 1]")
        if self.t_cap <= 0.0:
            self.t_cap = 50.0 * self.t_min
        self.t_cap = max(self.t_cap, self.t_max)
        if self.t_max <= self.t_min:
            raise ValueError("t_max must exceed t_min")

    @property
    def floor(self) -> float:
        return self.t_min * 1.01

    def adapt(self, d_now: float, i_now: float) -> float:
        """One adaptation step; returns and stores the new T_max."""
        c_d = self.t_max * _ratio(d_now, self.d_prev)
        c_i = self.t_max * _ratio(i_now, self.i_prev)
        t_new = self.t_max + self.alpha * c_d + self.beta * c_i
        self.t_max = min(max(t_new, self.floor), self.t_cap)
        self.d_prev = d_now
        self.i_prev = i_now
        return self.t_max
