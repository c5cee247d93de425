"""Explicit-rate congestion avoidance for ABR traffic: protocol state machines and a discrete-event simulator."""
from .cells import (
    ConfigError,
    ControlCell,
    DataCell,
    Direction,
    InvariantViolation,
    RateCps,
    SimTime,
    cell_transmission_time,
    validate_control_cell,
)
from .config import ScenarioConfig, load_config
from .engine import Simulation, run
from .scenarios import ScenarioParams, build_parking_lot, build_transient_scenario

__all__ = [
    "ConfigError",
    "ControlCell",
    "DataCell",
    "Direction",
    "InvariantViolation",
    "RateCps",
    "ScenarioConfig",
    "ScenarioParams",
    "SimTime",
    "Simulation",
    "build_parking_lot",
    "build_transient_scenario",
    "cell_transmission_time",
    "load_config",
    "run",
    "validate_control_cell",
]
