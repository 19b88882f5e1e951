"""Substrate network: base stations, multiplexing nodes and their edge clouds.

Node identifiers are integers. Builders number base stations first, then
multiplexing nodes, then the root (tree builds only), so "lowest id" tie
breaking prefers the access layer.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_WIRED_MU = 10_000.0


class TopologyError(ValueError):
    """Raised for malformed topologies or builder arguments."""


class InsufficientResources(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class ResourceVector:
    cpu: int = 0
    memory: int = 0
    disk: int = 0

    def __add__(self, other: ResourceVector) -> ResourceVector:
        return ResourceVector(self.cpu + other.cpu, self.memory + other.memory, self.disk + other.disk)

    def __sub__(self, other: ResourceVector) -> ResourceVector:
        return ResourceVector(self.cpu - other.cpu, self.memory - other.memory, self.disk - other.disk)

    def fits_in(self, other: ResourceVector) -> bool:
        return self.cpu <= other.cpu and self.memory <= other.memory and self.disk <= other.disk

    def maximum(self, other: ResourceVector) -> ResourceVector:
        return ResourceVector(max(self.cpu, other.cpu), max(self.memory, other.memory), max(self.disk, other.disk))

    def is_nonnegative(self) -> bool:
        return self.cpu >= 0 and self.memory >= 0 and self.disk >= 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.cpu, self.memory, self.disk)

    @classmethod
    def parse(cls, text: str) -> ResourceVector:
        parts = [p.strip() for p in text.replace("(", "").replace(")", "").split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected cpu,memory,disk, got {text!r}")
        return cls(*(int(p) for p in parts))

    def __str__(self) -> str:
        return f"{self.cpu},{self.memory},{self.disk}"


ZERO = ResourceVector()


@dataclass
class EdgeCloud:
    capacity: ResourceVector
    in_use: ResourceVector = ZERO

    @property
    def free(self) -> ResourceVector:
        return self.capacity - self.in_use

    def can_reserve(self, amount: ResourceVector) -> bool:
        return (self.in_use + amount).fits_in(self.capacity)

    def reserve(self, amount: ResourceVector) -> None:
        if not amount.is_nonnegative():
            raise ValueError(f"negative reservation {amount}")
        if not self.can_reserve(amount):
            raise InsufficientResources(f"cannot reserve {amount}: in use {self.in_use} of {self.capacity}")
        self.in_use = self.in_use + amount

    def release(self, amount: ResourceVector) -> None:
        if not amount.is_nonnegative():
            raise ValueError(f"negative release {amount}")
        remaining = self.in_use - amount
        if not remaining.is_nonnegative():
            raise ValueError(f"release of {amount} exceeds usage {self.in_use}")
        self.in_use = remaining


class NodeKind(str, enum.Enum):
    BASE_STATION = "bs"
    MULTIPLEXING = "mux"
    ROOT = "root"


class LinkKind(str, enum.Enum):
    WIRED = "wired"
    WIRELESS = "wireless"


@dataclass
class SubstrateNode:
    id: int
    kind: NodeKind
    edge_cloud: EdgeCloud
    position: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if (self.kind is NodeKind.BASE_STATION) != (self.position is not None):
            raise TopologyError(f"node {self.id}: position must be set iff the node is a base station")


@dataclass
class Link:
    endpoints: tuple[int, int]
    kind: LinkKind = LinkKind.WIRED
    service_rate_mu: float = DEFAULT_WIRED_MU
    current_lambda: float = 0.0


def _link_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


@dataclass
class SubstrateNetwork:
    nodes: dict[int, SubstrateNode]
    links: dict[tuple[int, int], Link]
    root: int | None = None
    adjacency: dict[int, list[int]] = field(init=False)
    bs_set: tuple[int, ...] = field(init=False)
    mux_set: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        self.adjacency = {n: [] for n in self.nodes}
        for a, b in self.links:
            if a not in self.nodes or b not in self.nodes:
                raise TopologyError(f"link ({a}, {b}) references an unknown node")
            self.adjacency[a].append(b)
            self.adjacency[b].append(a)
        for neighbours in self.adjacency.values():
            neighbours.sort()
        self.bs_set = tuple(sorted(n for n, node in self.nodes.items() if node.kind is NodeKind.BASE_STATION))
        self.mux_set = tuple(sorted(n for n, node in self.nodes.items() if node.kind is not NodeKind.BASE_STATION))
        self._paths: dict[int, dict[int, int | None]] = {}
        self._dist: dict[tuple[int, int], int] = {}
        self._depth: dict[int, int] | None = None
        if self.nodes and len(self._bfs(min(self.nodes))) != len(self.nodes):
            raise TopologyError("substrate network is not connected")

    # queries -------------------------------------------------------------

    def edge_cloud(self, node_id: int) -> EdgeCloud:
        return self.nodes[node_id].edge_cloud

    def link(self, a: int, b: int) -> Link:
        return self.links[_link_key(a, b)]

    def bs_positions(self) -> np.ndarray:
        return np.array([self.nodes[b].position for b in self.bs_set], dtype=float).reshape(-1, 2)

    def _bfs(self, source: int) -> dict[int, int | None]:
        cached = self._paths.get(source)
        if cached is not None:
            return cached
        parent: dict[int, int | None] = {source: None}
        queue = deque([source])
        while queue:
            node = queue.popleft()
            for nxt in self.adjacency[node]:
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        self._paths[source] = parent
        return parent

    def hop_path(self, a: int, b: int) -> list[int]:
        """Shortest hop path from ``a`` to ``b``; neighbours are expanded in id order."""
        if a not in self.nodes or b not in self.nodes:
            raise KeyError(f"unknown node in ({a}, {b})")
        parent = self._bfs(a)
        if b not in parent:
            raise TopologyError(f"internal inconsistency: {b} unreachable from {a}")
        path = [b]
        while path[-1] != a:
            path.append(parent[path[-1]])  # type: ignore[arg-type]
        path.reverse()
        return path

    def hop_distance(self, a: int, b: int) -> int:
        key = (a, b)
        d = self._dist.get(key)
        if d is None:
            d = self._dist[key] = len(self.hop_path(a, b)) - 1
        return d

    def depth(self, node_id: int) -> int:
        """Hop distance from the nearest base station (0 for base stations)."""
        if self._depth is None:
            depth = {b: 0 for b in self.bs_set}
            queue = deque(self.bs_set)
            while queue:
                node = queue.popleft()
                for nxt in self.adjacency[node]:
                    if nxt not in depth:
                        depth[nxt] = depth[node] + 1
                        queue.append(nxt)
            self._depth = depth
        return self._depth[node_id]

    def reset_usage(self) -> None:
        for node in self.nodes.values():
            node.edge_cloud.in_use = ZERO
        for link in self.links.values():
            link.current_lambda = 0.0

    # text format ---------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for n in sorted(self.nodes):
            node = self.nodes[n]
            cap = node.edge_cloud.capacity
            x, y = ("-", "-") if node.position is None else (repr(node.position[0]), repr(node.position[1]))
            lines.append(f"node {n} {node.kind.value} {x} {y} {cap.cpu} {cap.memory} {cap.disk}")
        for key in sorted(self.links):
            link = self.links[key]
            lines.append(f"link {key[0]} {key[1]} {link.kind.value} {link.service_rate_mu!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> SubstrateNetwork:
        nodes: dict[int, SubstrateNode] = {}
        links: dict[tuple[int, int], Link] = {}
        root = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "node" and len(parts) == 8:
                    nid, kind = int(parts[1]), NodeKind(parts[2])
                    pos = None if parts[3] == "-" else (float(parts[3]), float(parts[4]))
                    cap = ResourceVector(int(parts[5]), int(parts[6]), int(parts[7]))
                    if nid in nodes:
                        raise TopologyError(f"duplicate node {nid}")
                    nodes[nid] = SubstrateNode(nid, kind, EdgeCloud(cap), pos)
                    if kind is NodeKind.ROOT:
                        root = nid
                elif parts[0] == "link" and len(parts) == 5:
                    a, b = int(parts[1]), int(parts[2])
                    links[_link_key(a, b)] = Link(_link_key(a, b), LinkKind(parts[3]), float(parts[4]))
                else:
                    raise TopologyError(f"unrecognised entry {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise TopologyError(f"line {lineno}: {exc}") from exc
        return cls(nodes, links, root)

    @classmethod
    def load(cls, path: str | Path) -> SubstrateNetwork:
        return cls.from_text(Path(path).read_text())


def block_grid_positions(
    rows: int, cols: int, block_rows: int, block_cols: int, spacing: float
) -> list[tuple[float, float]]:
    """Grid positions ordered block by block, so consecutive runs share a block.

    Handy with :func:`build_tree`, which parents base stations to
    multiplexing nodes in consecutive runs.
    """
    if rows % block_rows or cols % block_cols:
        raise TopologyError("grid dimensions must be multiples of the block dimensions")
    positions = []
    for br in range(0, rows, block_rows):
        for bc in range(0, cols, block_cols):
            for r in range(br, br + block_rows):
                for c in range(bc, bc + block_cols):
                    positions.append((c * spacing, r * spacing))
    return positions


def build_tree(
    num_bs: int,
    num_mux: int,
    bs_positions: Sequence[tuple[float, float]],
    capacity: ResourceVector,
    wired_mu: float = DEFAULT_WIRED_MU,
) -> SubstrateNetwork:
    """Three-layer tree: base stations -> multiplexing nodes -> root.

    Base station ``i`` is parented to multiplexing node ``i // (num_bs // num_mux)``.
    """
    if num_bs < 1 or num_mux < 1 or num_bs % num_mux:
        raise TopologyError(f"num_bs={num_bs} must be a positive multiple of num_mux={num_mux}")
    if len(bs_positions) != num_bs:
        raise TopologyError(f"expected {num_bs} positions, got {len(bs_positions)}")
    if len({tuple(map(float, p)) for p in bs_positions}) != num_bs:
        raise TopologyError("duplicate base-station positions")
    per_mux = num_bs // num_mux
    nodes: dict[int, SubstrateNode] = {}
    links: dict[tuple[int, int], Link] = {}
    for i, (x, y) in enumerate(bs_positions):
        nodes[i] = SubstrateNode(i, NodeKind.BASE_STATION, EdgeCloud(capacity), (float(x), float(y)))
    root = num_bs + num_mux
    nodes[root] = SubstrateNode(root, NodeKind.ROOT, EdgeCloud(capacity))
    for m in range(num_mux):
        mid = num_bs + m
        nodes[mid] = SubstrateNode(mid, NodeKind.MULTIPLEXING, EdgeCloud(capacity))
        links[(mid, root)] = Link((mid, root), LinkKind.WIRED, wired_mu)
        for i in range(m * per_mux, (m + 1) * per_mux):
            links[(i, mid)] = Link((i, mid), LinkKind.WIRED, wired_mu)
    return SubstrateNetwork(nodes, links, root)


def build_city_grid(
    rows: int,
    cols: int,
    bs_spacing: float,
    capacity: ResourceVector,
    wired_mu: float = DEFAULT_WIRED_MU,
) -> SubstrateNetwork:
    """Synthetic city: a rows x cols base-station grid, one multiplexing node per row.

    Row multiplexing nodes form a chain (row r links to row r + 1).
    """
    if rows < 1 or cols < 1:
        raise TopologyError("grid dimensions must be at least 1x1")
    if not math.isfinite(bs_spacing) or bs_spacing <= 0:
        raise TopologyError("bs_spacing must be positive")
    nodes: dict[int, SubstrateNode] = {}
    links: dict[tuple[int, int], Link] = {}
    num_bs = rows * cols
    for r in range(rows):
        mid = num_bs + r
        nodes[mid] = SubstrateNode(mid, NodeKind.MULTIPLEXING, EdgeCloud(capacity))
        for c in range(cols):
            bid = r * cols + c
            nodes[bid] = SubstrateNode(bid, NodeKind.BASE_STATION, EdgeCloud(capacity), (c * bs_spacing, r * bs_spacing))
            links[(bid, mid)] = Link((bid, mid), LinkKind.WIRED, wired_mu)
        if r > 0:
            links[(mid - 1, mid)] = Link((mid - 1, mid), LinkKind.WIRED, wired_mu)
    return SubstrateNetwork(nodes, links, None)


def bounding_box(net: SubstrateNetwork, margin: float) -> tuple[float, float, float, float]:
    pos = net.bs_positions()
    return (
        float(pos[:, 0].min() - margin),
        float(pos[:, 1].min() - margin),
        float(pos[:, 0].max() + margin),
        float(pos[:, 1].max() + margin),
    )


def iter_clouds(net: SubstrateNetwork) -> Iterable[tuple[int, EdgeCloud]]:
    for n in sorted(net.nodes):
        yield n, net.nodes[n].edge_cloud
