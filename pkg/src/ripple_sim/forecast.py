"""Connectivity forecasting: trajectory prediction and per-BS no-connect probabilities."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mobility import connection_probabilities
from .topology import SubstrateNetwork

DEFAULT_LAG = 5


class InsufficientHistory(ValueError):
    pass


class PredictorKind(str, enum.Enum):
    ORACLE = "oracle"
    CONSTANT_VELOCITY = "constant_velocity"


@dataclass
class Forecast:
    user: int
    horizon_h: float
    no_connect: dict[int, float]
    predicted_positions: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))


def horizon_steps(h: float, tick: float) -> int:
    if h < 0:
        raise ValueError("horizon must be non-negative")
    return math.ceil(h / tick - 1e-9)


def predict_positions(
    history: Sequence[Sequence[float]],
    h: float,
    tick: float,
    kind: PredictorKind,
    future: np.ndarray | None = None,
) -> np.ndarray:
    """Positions at the next ``ceil(h / tick)`` ticks.

    ``ConstantVelocity`` fits one velocity by least squares over ``history``
    (oldest first) and extrapolates from the last observation. ``Oracle``
    returns the leading slice of ``future``, the realised positions after now.
    """
    steps = horizon_steps(h, tick)
    if kind is PredictorKind.ORACLE:
        if future is None:
            raise InsufficientHistory("oracle prediction needs the realised future trace")
        return np.asarray(future, dtype=float).reshape(-1, 2)[:steps]
    hist = np.asarray(history, dtype=float).reshape(-1, 2)
    if len(hist) < 2:
        raise InsufficientHistory(f"constant-velocity prediction needs >= 2 points, got {len(hist)}")
    t = np.arange(len(hist), dtype=float) * tick
    tc = t - t.mean()
    velocity = (tc[:, None] * (hist - hist.mean(axis=0))).sum(axis=0) / (tc @ tc)
    ahead = np.arange(1, steps + 1, dtype=float)[:, None] * tick
    return hist[-1] + ahead * velocity


def estimate_connection_prob(position: Sequence[float], net: SubstrateNetwork, softness: float) -> dict[int, float]:
    """Surrogate classifier for P(b | l): distance softmax with its own softness."""
    probs = connection_probabilities(position, net.bs_positions(), softness)
    return dict(zip(net.bs_set, probs.tolist()))


def no_connect_over_horizon(
    user: int,
    net: SubstrateNetwork,
    h: float,
    tick: float,
    predictor: PredictorKind,
    softness: float,
    history: Sequence[Sequence[float]],
    future: np.ndarray | None = None,
    attached_bs: int | None = None,
) -> Forecast:
    """Probability that ``user`` connects to none of the horizon's ticks at each BS.

    The current position (last entry of ``history``) always contributes one
    factor; each predicted position contributes another. Ticks are treated
    as independent connection events. ``attached_bs`` is the observed current
    attachment, which is certain rather than estimated.
    """
    hist = np.asarray(history, dtype=float).reshape(-1, 2)
    if len(hist) == 0:
        raise InsufficientHistory("no observed position")
    predicted = predict_positions(hist, h, tick, predictor, future) if h > 0 else np.empty((0, 2))
    points = np.vstack([hist[-1:], predicted])
    bs_pos = net.bs_positions()
    stay_away = np.ones(len(bs_pos))
    for p in points:
        stay_away *= 1.0 - connection_probabilities(p, bs_pos, softness)
    no_connect = dict(zip(net.bs_set, np.clip(stay_away, 0.0, 1.0).tolist()))
    if attached_bs is not None:
        no_connect[attached_bs] = 0.0
    return Forecast(user, h, no_connect, predicted)
