"""Lifecycle-aware SFC embedding simulator for multi-access edge networks."""

from .engine import MetricsReport, Outcome, PacketRecord, run
from .lifecycle import LifecycleState, time_to_running
from .scenario import InvalidScenario, Scenario

__all__ = [
    "InvalidScenario",
    "LifecycleState",
    "MetricsReport",
    "Outcome",
    "PacketRecord",
    "Scenario",
    "run",
    "time_to_running",
]
__version__ = "0.1.0"
