"""Greedy virtual-link embedding: closest head instance, then closest successor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Mapping, Sequence

from .topology import SubstrateNetwork


@dataclass(frozen=True)
class Hop:
    vnf_type: str
    cloud: int
    segment: tuple[int, ...]  # nodes newly traversed to reach ``cloud``


@dataclass(frozen=True)
class Embedding:
    user: int
    hops: tuple[Hop, ...]
    total_path: tuple[int, ...]

    @property
    def clouds(self) -> tuple[int, ...]:
        return tuple(h.cloud for h in self.hops)

    @property
    def vnfs(self) -> tuple[str, ...]:
        return tuple(h.vnf_type for h in self.hops)


@dataclass(frozen=True)
class MissingVnf:
    user: int
    vnf_type: str
    layer: int


def closest(net: SubstrateNetwork, origin: int, candidates: Collection[int]) -> int:
    return min(candidates, key=lambda c: (net.hop_distance(origin, c), c))


def embed_links(
    user: int,
    attached_bs: int,
    vnfs: Sequence[str],
    net: SubstrateNetwork,
    running: Mapping[str, Collection[int]],
) -> Embedding | MissingVnf:
    hops = []
    path = [attached_bs]
    current = attached_bs
    for layer, vnf in enumerate(vnfs):
        candidates = running.get(vnf)
        if not candidates:
            return MissingVnf(user, vnf, layer)
        nxt = closest(net, current, candidates)
        segment = tuple(net.hop_path(current, nxt)[1:])
        hops.append(Hop(vnf, nxt, segment))
        path.extend(segment)
        current = nxt
    return Embedding(user, tuple(hops), tuple(path))


def running_index(keys: Collection[tuple[str, int]]) -> dict[str, set[int]]:
    """Group (vnf_type, cloud) pairs by VNF type."""
    index: dict[str, set[int]] = {}
    for vnf, cloud in keys:
        index.setdefault(vnf, set()).add(cloud)
    return index

