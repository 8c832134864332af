"""Packet-level simulator and analysis toolkit for broadcast MAC back-off
protocols in dense wireless sensor networks."""

__version__ = "0.1.0"

from .adaptive import AdaptiveWindowState, DensityTable, TrafficCounter
from .analysis import (
    CellModel,
    expected_neighbors,
    expected_tx,
    flood_transmission_counts,
    mc_cell,
    mc_pair_collision,
    prob_arbp,
    prob_ibsp,
)
from .core import (
    SATURATION_EPS,
    BackoffWindow,
    ForbiddenZones,
    Packet,
    PacketKind,
    sample_eligible,
    zones_subtract,
)
from .engine import Simulator, replay_metrics, run_sim
from .medium import Topology, Transmission, resolve_receptions
from .metrics import ConfigError, Metrics, SimConfig, success_rate
from .protocols import UNKNOWN_HOP, HopTable, Node

__all__ = [
    "AdaptiveWindowState",
    "BackoffWindow",
    "CellModel",
    "ConfigError",
    "DensityTable",
    "ForbiddenZones",
    "HopTable",
    "Metrics",
    "Node",
    "Packet",
    "PacketKind",
    "SATURATION_EPS",
    "SimConfig",
    "Simulator",
    "Topology",
    "TrafficCounter",
    "Transmission",
    "UNKNOWN_HOP",
    "expected_neighbors",
    "expected_tx",
    "flood_transmission_counts",
    "mc_cell",
    "mc_pair_collision",
    "prob_arbp",
    "prob_ibsp",
    "replay_metrics",
    "resolve_receptions",
    "run_sim",
    "sample_eligible",
    "success_rate",
    "zones_subtract",
]
