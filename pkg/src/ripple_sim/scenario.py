"""Scenario description and its flat ``section.key=value`` text format.

A config file holds one setting per line. ``#`` starts a comment. Lifecycle
durations are overridden with ``transition <from> <to> <seconds>`` lines.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .forecast import PredictorKind
from .lifecycle import LifecycleState, TransitionTable, default_transition_table
from .policy import LifecycleThresholds, SfcRequest
from .queueing import DelayParams
from .topology import (
    ResourceVector,
    SubstrateNetwork,
    block_grid_positions,
    build_city_grid,
    build_tree,
)

POLICIES = ("ripple", "ideal", "reactive")
DEMOTIONS = ("paused", "stopped")


class InvalidScenario(ValueError):
    pass


class ConfigParseError(InvalidScenario):
    def __init__(self, lineno: int, message: str, source: str = "<config>") -> None:
        super().__init__(f"{source}:{lineno}: {message}")
        self.lineno = lineno


@dataclass
class Scenario:
    # topology
    topology_kind: str = "tree"
    num_bs: int = 16
    num_mux: int = 4
    grid_rows: int = 4
    grid_cols: int = 10
    bs_spacing: float = 200.0
    capacity: ResourceVector = ResourceVector(5, 8, 10)
    topology_file: str | None = None
    # users and chains
    users: int = 4
    lambda_u: float = 100.0
    sfc_count: int = 4
    sfc_length: int = 4
    vnf_proc: float = 1e-4
    e2e_limit: float = 1e-3
    # policy
    policy: str = "ripple"
    thresholds: LifecycleThresholds = LifecycleThresholds()
    demotion: str = "paused"
    # forecast
    forecast_kind: PredictorKind = PredictorKind.ORACLE
    forecast_k: int = 5
    horizon: float = 12.63
    estimator_softness: float = 20.0
    # mobility
    alpha: float = 0.9
    mean_speed: float = 10.0
    sigma_speed: float = 1.0
    sigma_direction: float = 0.5
    tick: float = 1.0
    softness: float = 20.0
    trace_file: str | None = None
    # delay
    delay: DelayParams = DelayParams()
    # lifecycle
    transitions: dict[tuple[LifecycleState, LifecycleState], float] = field(default_factory=dict)
    # run control
    duration: float = 300.0
    seeds: tuple[int, ...] = (1,)
    warm_start: bool = True

    def validate(self, allow_empty: bool = False) -> None:
        """Raise :class:`InvalidScenario` naming the first bad field.

        ``allow_empty`` accepts a zero duration, which simulates nothing.
        """
        def bad(key: str, why: str) -> InvalidScenario:
            return InvalidScenario(f"{key}: {why}")

        if self.topology_kind not in ("tree", "city", "file"):
            raise bad("topology.kind", f"expected tree, city or file, got {self.topology_kind!r}")
        if self.topology_kind == "file" and not self.topology_file:
            raise bad("topology.file", "required when topology.kind=file")
        if self.users < 1:
            raise bad("users.count", "must be at least 1")
        if not self.lambda_u > 0:
            raise bad("users.lambda", "must be positive")
        if self.sfc_count < 1 or self.sfc_length < 1:
            raise bad("sfc.count", "SFC catalogue needs at least one chain of one VNF")
        if not self.e2e_limit > 0 or not self.vnf_proc > 0:
            raise bad("sfc.e2e_limit", "limits and processing times must be positive")
        if self.policy not in POLICIES:
            raise bad("policy", f"expected one of {', '.join(POLICIES)}")
        if self.demotion not in DEMOTIONS:
            raise bad("policy.demotion", f"expected one of {', '.join(DEMOTIONS)}")
        if self.horizon < 0 or not math.isfinite(self.horizon):
            raise bad("forecast.h_seconds", "must be a finite value >= 0")
        if self.forecast_k < 2:
            raise bad("forecast.k", "needs at least 2 observations")
        if not 0.0 <= self.alpha <= 1.0:
            raise bad("mobility.alpha", "must lie in [0, 1]")
        if not self.tick > 0:
            raise bad("mobility.tick", "must be positive")
        if self.softness < 0 or self.estimator_softness < 0:
            raise bad("mobility.softness", "must be >= 0")
        if not (self.duration > 0 or (allow_empty and self.duration == 0)):
            raise bad("sim.duration", "must be positive")
        if not self.seeds:
            raise bad("sim.seeds", "needs at least one seed")

    # derived objects

    def build_network(self) -> SubstrateNetwork:
        mu = self.delay.wired_mu
        if self.topology_kind == "tree":
            side = math.isqrt(self.num_bs)
            per_mux = self.num_bs // self.num_mux if self.num_mux else 0
            block = math.isqrt(per_mux) if per_mux else 0
            if side * side == self.num_bs and block * block == per_mux and block and side % block == 0:
                positions = block_grid_positions(side, side, block, block, self.bs_spacing)
            else:
                positions = [(i * self.bs_spacing, 0.0) for i in range(self.num_bs)]
            return build_tree(self.num_bs, self.num_mux, positions, self.capacity, mu)
        if self.topology_kind == "city":
            return build_city_grid(self.grid_rows, self.grid_cols, self.bs_spacing, self.capacity, mu)
        return SubstrateNetwork.load(self.topology_file)  # type: ignore[arg-type]

    def sfc_catalog(self) -> list[SfcRequest]:
        return [
            SfcRequest(i, tuple(f"s{i}v{j}" for j in range(self.sfc_length)), self.e2e_limit, self.vnf_proc)
            for i in range(self.sfc_count)
        ]

    def transition_table(self) -> TransitionTable:
        return default_transition_table().with_overrides(self.transitions)

    def delay_params(self) -> DelayParams:
        return dataclasses.replace(self.delay, default_vnf_proc=self.vnf_proc)

    # text format

    def to_text(self) -> str:
        lines = []
        for key, (get, _set, fmt, _parse) in _KEYS.items():
            value = get(self)
            if value is None:
                continue
            lines.append(f"{key}={fmt(value)}")
        for (src, dst), seconds in sorted(self.transitions.items()):
            lines.append(f"transition {src.name.lower()} {dst.name.lower()} {seconds!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> Scenario:
        values: dict[str, Any] = {}
        transitions: dict[tuple[LifecycleState, LifecycleState], float] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("transition "):
                parts = line.split()
                if len(parts) != 4:
                    raise ConfigParseError(lineno, "expected 'transition <from> <to> <seconds>'", source)
                try:
                    edge = (LifecycleState.parse(parts[1]), LifecycleState.parse(parts[2]))
                    seconds = float(parts[3])
                except ValueError as exc:
                    raise ConfigParseError(lineno, str(exc), source) from None
                if seconds < 0:
                    raise ConfigParseError(lineno, "transition durations must be >= 0", source)
                transitions[edge] = seconds
                continue
            if "=" not in line:
                raise ConfigParseError(lineno, f"expected key=value, got {line!r}", source)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _KEYS:
                raise ConfigParseError(lineno, f"unknown key {key!r}", source)
            try:
                values[key] = _KEYS[key][3](value)
            except (ValueError, KeyError) as exc:
                raise ConfigParseError(lineno, f"{key}: {exc}", source) from None
        scenario = cls()
        delay_changes = {}
        for key, value in values.items():
            setter = _KEYS[key][1]
            if key.startswith("delay."):
                delay_changes[key.split(".", 1)[1]] = value
            else:
                setter(scenario, value)
        if delay_changes:
            try:
                scenario.delay = dataclasses.replace(scenario.delay, **delay_changes)
            except ValueError as exc:
                raise InvalidScenario(f"{source}: {exc}") from None
        scenario.transitions = transitions
        try:
            scenario.validate()
        except InvalidScenario as exc:
            raise InvalidScenario(f"{source}: {exc}") from None
        return scenario

    @classmethod
    def load(cls, path: str | Path) -> Scenario:
        path = Path(path)
        return cls.from_text(path.read_text(), str(path))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _thresholds(text: str) -> LifecycleThresholds:
    vals = _floats(text)
    if len(vals) != 3:
        raise ValueError("expected run,stage,fetch")
    return LifecycleThresholds(*vals)


def _optional_str(text: str) -> str | None:
    return text or None


def _attr(name: str) -> tuple[Callable, Callable]:
    return (lambda s: getattr(s, name), lambda s, v: setattr(s, name, v))


def _delay(name: str) -> tuple[Callable, Callable]:
    return (lambda s: getattr(s.delay, name), lambda s, v: None)


_KEYS: dict[str, tuple[Callable, Callable, Callable, Callable]] = {
    "topology.kind": (*_attr("topology_kind"), str, str),
    "topology.num_bs": (*_attr("num_bs"), str, int),
    "topology.num_mux": (*_attr("num_mux"), str, int),
    "topology.rows": (*_attr("grid_rows"), str, int),
    "topology.cols": (*_attr("grid_cols"), str, int),
    "topology.bs_spacing": (*_attr("bs_spacing"), repr, float),
    "topology.capacity": (*_attr("capacity"), str, ResourceVector.parse),
    "topology.file": (*_attr("topology_file"), str, _optional_str),
    "users.count": (*_attr("users"), str, int),
    "users.lambda": (*_attr("lambda_u"), repr, float),
    "sfc.count": (*_attr("sfc_count"), str, int),
    "sfc.length": (*_attr("sfc_length"), str, int),
    "sfc.vnf_proc": (*_attr("vnf_proc"), repr, float),
    "sfc.e2e_limit": (*_attr("e2e_limit"), repr, float),
    "policy": (*_attr("policy"), str, str),
    "policy.thresholds": (
        *_attr("thresholds"),
        lambda t: f"{t.run!r},{t.stage!r},{t.fetch!r}",
        _thresholds,
    ),
    "policy.demotion": (*_attr("demotion"), str, str),
    "forecast.kind": (*_attr("forecast_kind"), lambda k: k.value, PredictorKind),
    "forecast.k": (*_attr("forecast_k"), str, int),
    "forecast.h_seconds": (*_attr("horizon"), repr, float),
    "forecast.softness": (*_attr("estimator_softness"), repr, float),
    "mobility.alpha": (*_attr("alpha"), repr, float),
    "mobility.mean_speed": (*_attr("mean_speed"), repr, float),
    "mobility.sigma_speed": (*_attr("sigma_speed"), repr, float),
    "mobility.sigma_direction": (*_attr("sigma_direction"), repr, float),
    "mobility.tick": (*_attr("tick"), repr, float),
    "mobility.softness": (*_attr("softness"), repr, float),
    "mobility.trace_file": (*_attr("trace_file"), str, _optional_str),
    "delay.t_p": (*_delay("t_p"), repr, float),
    "delay.bandwidth_hz": (*_delay("bandwidth_hz"), repr, float),
    "delay.snr_ref": (*_delay("snr_ref"), repr, float),
    "delay.d_ref": (*_delay("d_ref"), repr, float),
    "delay.path_loss_exponent": (*_delay("path_loss_exponent"), repr, float),
    "delay.packet_size_bits": (*_delay("packet_size_bits"), repr, float),
    "delay.wired_mu": (*_delay("wired_mu"), repr, float),
    "sim.duration": (*_attr("duration"), repr, float),
    "sim.seeds": (*_attr("seeds"), lambda v: ",".join(map(str, v)), _ints),
    "sim.warm_start": (*_attr("warm_start"), lambda b: str(b).lower(), _bool),
}
