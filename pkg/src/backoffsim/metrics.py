"""Run metrics and validated run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional


class ConfigError(ValueError):
    """Invalid simulation configuration."""


PROTOCOLS = ("arbp", "ibsp", "daibsp")


@dataclass
class Metrics:
    data_sent: int = 0
    data_delivered: int = 0
    delays: List[float] = field(default_factory=list)
    drops: int = 0
    tx_count: int = 0
    fallback_count: int = 0

    def success_rate(self) -> float:
        return success_rate(self)

    def avg_delay(self) -> float:
        """Mean first-arrival delay over delivered packets only."""
        if not self.delays:
            return 0.0
        return sum(self.delays) / len(self.delays)


def success_rate(m: Metrics) -> float:
    """Delivered / sent, as a percentage."""
    if m.data_sent <= 0:
        raise ValueError("success rate undefined for data_sent == 0")
    return 100.0 * m.data_delivered / m.data_sent


@dataclass
class SimConfig:
    protocol: str = "arbp"
    n_nodes: int = 1000
    area: float = 500.0  # square side, or disk radius when deployment="disk"
    deployment: str = "square"
    range_m: float = 50.0
    lam: float = 5.0  # event generation rate, events/second
    total_events: int = 2000
    alpha: float = 1.0
    beta: float = 0.0
    t_min: float = 0.002
    t_max_initial: float = 0.1
    t_inactive: float = 3600.0
    hop_table_capacity: int = 10
    hop_timer: float = 2.0
    seed: int = 0
    trace: Optional[str] = None
    # derived-by-default knobs (0 / None means "use the default rule")
    airtime: float = 0.0  # default 0.9 * t_min
    # control and beacon frames are header-only, far shorter on the air
    # than payload-carrying data frames
    control_airtime_factor: float = 0.05
    t_cap: float = 0.0  # default max(50 * t_min, t_max_initial)
    packet_ttl: float = 0.0  # default max(100 * t_min, 40 * t_max_initial)
    d_init: float = -1.0  # default N * r^2 / R_eq^2
    i_init: float = -1.0  # default lam
    beacon_period: Optional[float] = None  # periodic re-beaconing (daibsp)
    horizon: Optional[float] = None
    source: Optional[int] = None  # pin every event to one origin node

    def validate(self) -> "SimConfig":
        """Returns a copy with derived defaults filled in; raises ConfigError."""
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.n_nodes < 2:
            raise ConfigError("need at least a sink and one sensor node")
        if self.area <= 0 or self.range_m <= 0:
            raise ConfigError("area and range must be positive")
        if self.t_min <= 0 or self.t_max_initial <= self.t_min:
            raise ConfigError("require 0 < t_min < t_max_initial")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ConfigError("alpha and beta must lie in [0, 1]")
        if self.lam <= 0 or self.total_events < 0:
            raise ConfigError("lambda must be positive, total_events >= 0")
        if self.deployment not in ("square", "disk"):
            raise ConfigError(f"unknown deployment {self.deployment!r}")
        if self.hop_table_capacity < 1 or self.hop_timer <= 0:
            raise ConfigError("hop table needs capacity >= 1 and a positive timer")
        if self.source is not None and not 1 <= self.source < self.n_nodes:
            raise ConfigError("source must be a non-sink node id")
        if self.beacon_period is not None:
            if self.beacon_period <= 0:
                raise ConfigError("beacon_period must be positive")
            if self.horizon is None:
                # a periodic beacon keeps the event queue alive forever
                raise ConfigError("beacon_period requires a horizon")
        if self.horizon is not None and self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        out = replace(self)
        if out.airtime <= 0:
            out.airtime = 0.9 * out.t_min
        if out.airtime >= out.t_min:
            raise ConfigError("airtime must be below t_min")
        if not 0.0 < out.control_airtime_factor <= 1.0:
            raise ConfigError("control_airtime_factor must lie in (0, 1]")
        if out.t_cap <= 0:
            out.t_cap = max(50.0 * out.t_min, out.t_max_initial)
        if out.packet_ttl <= 0:
            out.packet_ttl = max(100.0 * out.t_min, 40.0 * out.t_max_initial)
        if out.d_init < 0:
            # expected neighbours of the deployment (disk-equivalent radius
            # for the square so the same density formula applies)
            import math

            r_eq = out.area if out.deployment == "disk" else out.area / math.sqrt(math.pi)
            out.d_init = out.n_nodes * out.range_m**2 / r_eq**2
        if out.i_init < 0:
            out.i_init = out.lam
        return out
