"""Six-state VNF lifecycle with timed, non-interruptible transitions."""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping

from .topology import EdgeCloud, InsufficientResources, ResourceVector

__all__ = [
    "LifecycleState",
    "TransitionTable",
    "VnfInstance",
    "TransitionInFlight",
    "IllegalEdge",
    "PrematureCompletion",
    "InsufficientResources",
    "default_transition_table",
    "begin_transition",
    "complete_transition",
    "route_to",
    "time_to_running",
]


class LifecycleState(enum.IntEnum):
    """Lifecycle states, valued by how close they are to serving traffic."""

    DESCRIPTOR = 0
    SOURCE = 1
    IMAGE = 2
    STOPPED = 3
    PAUSED = 4
    RUNNING = 5

    @classmethod
    def parse(cls, text: str) -> LifecycleState:
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown lifecycle state {text!r}") from None

    @property
    def label(self) -> str:
        return self.name.capitalize()


S = LifecycleState

# (uses cpu, uses memory, uses disk) per state
_USAGE = {
    S.DESCRIPTOR: (0, 0, 0),
    S.SOURCE: (0, 0, 1),
    S.IMAGE: (0, 0, 1),
    S.STOPPED: (0, 0, 1),
    S.PAUSED: (0, 1, 1),
    S.RUNNING: (1, 1, 1),
}

# seconds; delete edges are instantaneous, resume mirrors pause
DEFAULT_DURATIONS: dict[tuple[LifecycleState, LifecycleState], float] = {
    (S.DESCRIPTOR, S.SOURCE): 12.0,
    (S.SOURCE, S.IMAGE): 0.0,
    (S.IMAGE, S.STOPPED): 0.1,
    (S.STOPPED, S.RUNNING): 0.53,
    (S.RUNNING, S.PAUSED): 0.096,
    (S.PAUSED, S.RUNNING): 0.096,
    (S.RUNNING, S.STOPPED): 0.53,
    (S.STOPPED, S.IMAGE): 0.0,
    (S.IMAGE, S.SOURCE): 0.0,
    (S.SOURCE, S.DESCRIPTOR): 0.0,
}


class TransitionInFlight(RuntimeError):
    pass


class IllegalEdge(ValueError):
    pass


class PrematureCompletion(RuntimeError):
    pass


@dataclass(frozen=True)
class TransitionTable:
    durations: Mapping[tuple[LifecycleState, LifecycleState], float] = field(
        default_factory=lambda: dict(DEFAULT_DURATIONS)
    )
    requirement: ResourceVector = ResourceVector(1, 1, 1)

    def __post_init__(self) -> None:
        for edge, seconds in self.durations.items():
            if seconds < 0:
                raise ValueError(f"negative duration for {edge}")
            if edge[0] == edge[1]:
                raise ValueError(f"self loop {edge}")

    def duration(self, src: LifecycleState, dst: LifecycleState) -> float:
        try:
            return self.durations[(src, dst)]
        except KeyError:
            raise IllegalEdge(f"{src.label} -> {dst.label} is not a lifecycle edge") from None

    def footprint(self, state: LifecycleState) -> ResourceVector:
        cpu, mem, disk = _USAGE[state]
        req = self.requirement
        return ResourceVector(cpu * req.cpu, mem * req.memory, disk * req.disk)

    def successors(self, state: LifecycleState) -> list[LifecycleState]:
        return sorted(dst for src, dst in self.durations if src == state)

    def with_overrides(
        self, overrides: Mapping[tuple[LifecycleState, LifecycleState], float]
    ) -> TransitionTable:
        merged = dict(self.durations)
        merged.update(overrides)
        return TransitionTable(merged, self.requirement)

    def instantaneous(self) -> TransitionTable:
        return TransitionTable({edge: 0.0 for edge in self.durations}, self.requirement)


def default_transition_table() -> TransitionTable:
    return TransitionTable()


@dataclass
class VnfInstance:
    vnf_type: str
    location: int
    state: LifecycleState = S.DESCRIPTOR
    in_flight: tuple[LifecycleState, float] | None = None

    def held(self, table: TransitionTable) -> ResourceVector:
        """Resources held now, including the reserve-ahead for an in-flight target."""
        fp = table.footprint(self.state)
        if self.in_flight is not None:
            fp = fp.maximum(table.footprint(self.in_flight[0]))
        return fp

    @property
    def serving(self) -> bool:
        return self.state is S.RUNNING and self.in_flight is None


def begin_transition(
    inst: VnfInstance,
    target: LifecycleState,
    now: float,
    ec: EdgeCloud,
    table: TransitionTable,
) -> float:
    """Start a single-edge transition and return its completion time."""
    if inst.in_flight is not None:
        raise TransitionInFlight(f"{inst.vnf_type}@{inst.location} is already moving to {inst.in_flight[0].label}")
    if target == inst.state:
        raise IllegalEdge(f"self transition {target.label}")
    seconds = table.duration(inst.state, target)
    current = table.footprint(inst.state)
    extra = current.maximum(table.footprint(target)) - current
    ec.reserve(extra)
    completion = now + seconds
    inst.in_flight = (target, completion)
    return completion


def complete_transition(
    inst: VnfInstance, now: float, ec: EdgeCloud, table: TransitionTable
) -> VnfInstance:
    if inst.in_flight is None:
        raise PrematureCompletion(f"{inst.vnf_type}@{inst.location} has no transition in flight")
    target, completion = inst.in_flight
    if now < completion:
        raise PrematureCompletion(f"completion at {completion} requested at {now}")
    ec.release(inst.held(table) - table.footprint(target))
    inst.state = target
    inst.in_flight = None
    return inst


def route_to(
    src: LifecycleState,
    dst: LifecycleState,
    table: TransitionTable | None = None,
) -> list[tuple[LifecycleState, LifecycleState]]:
    """Shortest-duration edge sequence from ``src`` to ``dst`` (fewest edges on ties)."""
    table = table or default_transition_table()
    if src == dst:
        return []
    heap: list[tuple[float, int, list[LifecycleState]]] = [(0.0, 0, [src])]
    settled: set[LifecycleState] = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node == dst:
            return list(zip(path, path[1:]))
        if node in settled:
            continue
        settled.add(node)
        for nxt in table.successors(node):
            if nxt not in settled:
                heapq.heappush(heap, (cost + table.duration(node, nxt), hops + 1, path + [nxt]))
    raise IllegalEdge(f"no route from {src.label} to {dst.label}")


def route_duration(src: LifecycleState, dst: LifecycleState, table: TransitionTable | None = None) -> float:
    table = table or default_transition_table()
    # quantised to the nanosecond so sums of decimal constants compare exactly
    return round(math.fsum(table.duration(a, b) for a, b in route_to(src, dst, table)), 9)


def time_to_running(src: LifecycleState, table: TransitionTable | None = None) -> float:
    return route_duration(src, S.RUNNING, table)
