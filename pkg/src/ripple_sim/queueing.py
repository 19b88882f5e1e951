"""Closed-form delays: M/M/1 wireless hop, M/D/1 wired hops, per-node processing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

INF = math.inf


@dataclass(frozen=True)
class DelayParams:
    t_p: float = 1e-5
    vnf_proc: Mapping[str, float] = field(default_factory=dict)
    default_vnf_proc: float = 1e-4
    bandwidth_hz: float = 10e6
    snr_ref: float = 1000.0
    d_ref: float = 10.0
    path_loss_exponent: float = 2.0
    packet_size_bits: float = 1000.0
    wired_mu: float = 10_000.0

    def __post_init__(self) -> None:
        for name in ("t_p", "default_vnf_proc", "bandwidth_hz", "snr_ref", "d_ref",
                     "path_loss_exponent", "packet_size_bits", "wired_mu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"DelayParams.{name} must be positive")

    def processing(self, vnf_type: str) -> float:
        return self.vnf_proc.get(vnf_type, self.default_vnf_proc)


def mm1_sojourn(lam: float, mu: float) -> float:
    """Mean time in an M/M/1 system; ``inf`` at or beyond saturation."""
    if lam < 0 or mu <= 0:
        raise ValueError("need lambda >= 0 and mu > 0")
    if lam >= mu:
        return INF
    return 1.0 / (mu - lam)


def md1_sojourn(lam: float, mu: float) -> float:
    """Mean time in an M/D/1 system (service plus Pollaczek-Khinchine wait)."""
    if lam < 0 or mu <= 0:
        raise ValueError("need lambda >= 0 and mu > 0")
    if lam >= mu:
        return INF
    return 1.0 / mu + lam / (2.0 * mu * (mu - lam))


def snr(distance: float, params: DelayParams) -> float:
    d = max(distance, params.d_ref)
    return params.snr_ref * (params.d_ref / d) ** params.path_loss_exponent


def wireless_rate(distance: float, params: DelayParams) -> float:
    """Shannon-bounded packet service rate of the user-to-BS hop."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    return params.bandwidth_hz * math.log2(1.0 + snr(distance, params)) / params.packet_size_bits


def e2e_delay(
    path: Sequence[int],
    link_lambda: Mapping[tuple[int, int], float],
    vnfs: Sequence[str],
    params: DelayParams,
    *,
    link_mu: Mapping[tuple[int, int], float] | None = None,
    wireless: tuple[float, float] | None = None,
) -> float:
    """End-to-end delay of one packet through an embedded chain.

    ``path`` is the substrate node sequence starting at the serving base
    station. ``wireless`` is the (lambda, mu) pair of the user's radio hop;
    it is ignored for an empty path. Links missing from ``link_lambda`` are
    unloaded and links missing from ``link_mu`` use ``params.wired_mu``.
    """
    total = math.fsum(params.processing(v) for v in vnfs)
    if not path:
        return total
    if wireless is not None:
        total += mm1_sojourn(*wireless)
    total += params.t_p * len(path)
    for a, b in zip(path, path[1:]):
        key = (a, b) if a <= b else (b, a)
        mu = params.wired_mu if link_mu is None else link_mu.get(key, params.wired_mu)
        total += md1_sojourn(link_lambda.get(key, 0.0), mu)
    return total
