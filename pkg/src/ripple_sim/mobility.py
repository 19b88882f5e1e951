"""Gauss-Markov user mobility and ground-truth base-station association."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .topology import SubstrateNetwork


@dataclass
class User:
    id: int
    position: tuple[float, float]
    speed: float
    direction: float
    lambda_u: float
    sfc: int
    attached_bs: int = -1
    mean_direction: float | None = None


@dataclass(frozen=True)
class GaussMarkovParams:
    alpha: float = 0.9
    mean_speed: float = 10.0
    mean_direction: float | None = None
    sigma_speed: float = 1.0
    sigma_direction: float = 0.5
    tick: float = 1.0
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 1000.0, 1000.0)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.tick <= 0:
            raise ValueError("tick must be positive")
        x0, y0, x1, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError("bounds must describe a non-empty rectangle")


@dataclass
class ConnectionModel:
    softness: float
    rng: np.random.Generator


def gm_step(
    state: tuple[float, float],
    params: GaussMarkovParams,
    noise: tuple[float, float],
    mean_direction: float | None = None,
) -> tuple[float, float]:
    """One Gauss-Markov update of (speed, direction)."""
    speed, direction = state
    a = params.alpha
    mean_dir = params.mean_direction if mean_direction is None else mean_direction
    if mean_dir is None:
        mean_dir = direction
    scale = math.sqrt(max(0.0, 1.0 - a * a))
    new_speed = a * speed + (1.0 - a) * params.mean_speed + scale * params.sigma_speed * noise[0]
    new_dir = a * direction + (1.0 - a) * mean_dir + scale * params.sigma_direction * noise[1]
    return new_speed, new_dir


def _reflect(
    x: float, y: float, direction: float, mean_dir: float, bounds: tuple[float, float, float, float]
) -> tuple[float, float, float, float]:
    x0, y0, x1, y1 = bounds
    for _ in range(64):
        if x < x0:
            x, direction, mean_dir = 2 * x0 - x, math.pi - direction, math.pi - mean_dir
        elif x > x1:
            x, direction, mean_dir = 2 * x1 - x, math.pi - direction, math.pi - mean_dir
        elif y < y0:
            y, direction, mean_dir = 2 * y0 - y, -direction, -mean_dir
        elif y > y1:
            y, direction, mean_dir = 2 * y1 - y, -direction, -mean_dir
        else:
            break
    # pathological overshoot: clamp
    return min(max(x, x0), x1), min(max(y, y0), y1), direction, mean_dir


def generate_trace(
    user: User,
    params: GaussMarkovParams,
    horizon_ticks: int,
    seed: int | np.random.SeedSequence | np.random.Generator,
) -> np.ndarray:
    """Positions after each of ``horizon_ticks`` ticks, shape (horizon_ticks, 2).

    Speed is floored at zero. Reflection at the bounds mirrors the heading and
    the user's mean heading so that mean reversion does not pin users to walls.
    """
    if horizon_ticks < 0:
        raise ValueError("horizon_ticks must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.standard_normal((horizon_ticks, 2))
    x, y = user.position
    speed, direction = user.speed, user.direction
    mean_dir = params.mean_direction if params.mean_direction is not None else user.mean_direction
    if mean_dir is None:
        mean_dir = direction
    out = np.empty((horizon_ticks, 2))
    for i in range(horizon_ticks):
        speed, direction = gm_step((speed, direction), params, (noise[i, 0], noise[i, 1]), mean_dir)
        speed = max(speed, 0.0)
        x += params.tick * speed * math.cos(direction)
        y += params.tick * speed * math.sin(direction)
        x, y, direction, mean_dir = _reflect(x, y, direction, mean_dir, params.bounds)
        out[i] = (x, y)
    return out


def connection_probabilities(position: Sequence[float], bs_positions: np.ndarray, softness: float) -> np.ndarray:
    """Softmax over negative distance to every base station.

    ``softness == 0`` is the hard limit: all mass on the nearest base station
    (lowest index among equals).
    """
    dist = np.hypot(bs_positions[:, 0] - position[0], bs_positions[:, 1] - position[1])
    if softness <= 0:
        probs = np.zeros(len(dist))
        probs[int(np.argmin(dist))] = 1.0
        return probs
    logits = -(dist - dist.min()) / softness
    w = np.exp(logits)
    return w / w.sum()


def realize_connection(position: Sequence[float], net: SubstrateNetwork, model: ConnectionModel) -> int:
    probs = connection_probabilities(position, net.bs_positions(), model.softness)
    return sample_index(probs, model.rng, net.bs_set)


def sample_index(probs: np.ndarray, rng: np.random.Generator, labels: Sequence[int]) -> int:
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return labels[min(idx, len(labels) - 1)]


TRACE_HEADER = ["user_id", "tick", "x", "y", "attached_bs"]


def write_trace_csv(path: str | Path, rows: Iterable[tuple[int, int, float, float, int]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for user_id, tick, x, y, bs in rows:
            writer.writerow([user_id, tick, repr(float(x)), repr(float(y)), bs])


def read_trace_csv(path: str | Path) -> dict[int, tuple[np.ndarray, list[int]]]:
    """Load a trace file into ``{user: (positions, attachments)}`` ordered by tick."""
    per_user: dict[int, list[tuple[int, float, float, int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for row in reader:
            per_user.setdefault(int(row["user_id"]), []).append(
                (int(row["tick"]), float(row["x"]), float(row["y"]), int(row["attached_bs"]))
            )
    out = {}
    for uid, rows in sorted(per_user.items()):
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise ValueError(f"{path}: user {uid} ticks are not contiguous from 0")
        out[uid] = (np.array([(r[1], r[2]) for r in rows]), [r[3] for r in rows])
    return out
