"""Brute-force reference implementations for placement tests.

Nothing here calls the planner, the link mapper or the delay module. Hop
distances come from networkx, footprints and readiness times are written
out by hand, and every Running set is enumerated.
"""

from __future__ import annotations

import itertools
import math
import random

import networkx as nx

from ripple_sim.lifecycle import LifecycleState as S
from ripple_sim.lifecycle import VnfInstance
from ripple_sim.policy import SfcRequest
from ripple_sim.topology import ResourceVector, SubstrateNetwork, build_tree

FOOTPRINT = {
    S.DESCRIPTOR: (0, 0, 0),
    S.SOURCE: (0, 0, 1),
    S.IMAGE: (0, 0, 1),
    S.STOPPED: (0, 0, 1),
    S.PAUSED: (0, 1, 1),
    S.RUNNING: (1, 1, 1),
}
# fastest way to Running from each state under the default durations
READY_IN = {
    S.DESCRIPTOR: 12.63,
    S.SOURCE: 0.63,
    S.IMAGE: 0.63,
    S.STOPPED: 0.53,
    S.PAUSED: 0.096,
    S.RUNNING: 0.0,
}
PENALTY = 1e6


def _vmax(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def _vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _fits(used, cap: ResourceVector) -> bool:
    return all(u <= c for u, c in zip(used, (cap.cpu, cap.memory, cap.disk)))


class Oracle:
    def __init__(self, net: SubstrateNetwork, sfcs: dict[int, SfcRequest], params) -> None:
        self.net = net
        self.sfcs = sfcs
        self.params = params
        g = nx.Graph()
        g.add_nodes_from(net.nodes)
        g.add_edges_from(net.links)
        self.dist = dict(nx.all_pairs_shortest_path_length(g))
        rate = params.bandwidth_hz * math.log2(1.0 + params.snr_ref)
        self.radio = params.packet_size_bits / rate

    # -- latency ---------------------------------------------------------------

    def delay(self, hops: int, vnfs) -> float:
        proc = sum(self.params.processing(v) for v in vnfs)
        return proc + self.radio + self.params.t_p * (hops + 1) + hops / self.params.wired_mu

    def embed(self, bs: int, vnfs, running: set[tuple[str, int]]):
        """Greedy chain walk; returns the chosen clouds and total hops, or None."""
        cur, hops, chosen = bs, 0, []
        for v in vnfs:
            options = sorted(c for (w, c) in running if w == v)
            if not options:
                return None
            nxt = min(options, key=lambda c: (self.dist[cur][c], c))
            hops += self.dist[cur][nxt]
            chosen.append((v, nxt))
            cur = nxt
        return chosen, hops

    def score(self, running, attachments, deployments, ready_in=READY_IN) -> tuple[int, float]:
        running = set(running)
        unserved, seconds = 0, 0.0
        for u, bs in sorted(attachments.items()):
            sfc = self.sfcs[u]
            emb = self.embed(bs, sfc.vnfs, running)
            if emb is None or self.delay(emb[1], sfc.vnfs) > sfc.e2e_limit:
                unserved += 1
                continue
            worst = 0.0
            for key in emb[0]:
                inst = deployments.get(key)
                worst = max(worst, ready_in[inst.state if inst else S.DESCRIPTOR])
            seconds += worst
        return unserved, round(seconds, 9)

    # -- feasibility -----------------------------------------------------------

    def allowed(self, key: tuple[str, int]) -> bool:
        vnf, cloud = key
        at_bs = cloud in self.net.bs_set
        heads = {s.vnfs[0] for s in self.sfcs.values()}
        tails = {v for s in self.sfcs.values() for v in s.vnfs[1:]}
        return (at_bs and vnf in heads) or (not at_bs and vnf in tails)

    def usage(self, targets, deployments) -> dict[int, tuple]:
        used = {c: (0, 0, 0) for c in self.net.nodes}
        for key, inst in deployments.items():
            if inst.in_flight is not None and key not in targets:
                held = _vmax(FOOTPRINT[inst.state], FOOTPRINT[inst.in_flight[0]])
                used[key[1]] = _vadd(used[key[1]], held)
        for key, state in targets.items():
            fp = FOOTPRINT[state]
            inst = deployments.get(key)
            if inst is not None and inst.in_flight is not None:
                fp = _vmax(fp, _vmax(FOOTPRINT[inst.state], FOOTPRINT[inst.in_flight[0]]))
            used[key[1]] = _vadd(used[key[1]], fp)
        return used

    def feasible(self, targets, deployments) -> list[str]:
        problems = [f"{k} misplaced" for k in targets if not self.allowed(k)]
        for c, used in self.usage(targets, deployments).items():
            if not _fits(used, self.net.edge_cloud(c).capacity):
                problems.append(f"cloud {c} over capacity: {used}")
        return problems

    # -- exhaustive search -----------------------------------------------------

    def candidates(self) -> list[tuple[str, int]]:
        types = sorted({v for s in self.sfcs.values() for v in s.vnfs})
        return [(v, c) for v in types for c in sorted(self.net.nodes) if self.allowed((v, c))]

    def minimum(self, attachments, deployments, ready_in=READY_IN) -> tuple[float, frozenset]:
        """Lowest penalised interruption over every capacity-feasible Running set."""
        pool = self.candidates()
        best = (math.inf, frozenset())
        for r in range(len(pool) + 1):
            for subset in itertools.combinations(pool, r):
                targets = {k: S.RUNNING for k in subset}
                if self.feasible(targets, deployments):
                    continue
                unserved, seconds = self.score(subset, attachments, deployments, ready_in)
                value = unserved * PENALTY + seconds
                if value < best[0]:
                    best = (value, frozenset(subset))
        return best


# -- random small instances ----------------------------------------------------------


def small_instance(rng: random.Random):
    """A network of at most 4 clouds, at most 2 users and at most 4 VNF types."""
    shape = rng.choice(["1bs", "2bs", "3bs"])
    cap = ResourceVector(rng.randint(1, 3), rng.randint(1, 3), rng.randint(1, 4))
    if shape == "1bs":
        net = build_tree(1, 1, [(0.0, 0.0)], cap)  # BS, mux, root
    elif shape == "2bs":
        net = build_tree(2, 1, [(0.0, 0.0), (200.0, 0.0)], cap)  # 2 BS, mux, root
    else:
        net = _three_bs_one_mux(cap)  # 3 BS under one mux, no root
    users = rng.randint(1, 2)
    types = [f"v{i}" for i in range(rng.randint(1, 4))]
    if users == 2 and rng.random() < 0.5 and len(types) >= 2:
        split = rng.randint(1, len(types) - 1)
        chains = [tuple(types[:split]), tuple(types[split:])]
    else:
        length = rng.randint(1, len(types))
        chains = [tuple(types[:length])] * users
    sfcs = {u: SfcRequest(u, chains[u]) for u in range(users)}
    attachments = {u: rng.choice(net.bs_set) for u in range(users)}
    return net, sfcs, attachments


def _three_bs_one_mux(cap: ResourceVector) -> SubstrateNetwork:
    text = "".join(f"node {i} bs {200.0 * i} 0.0 {cap.cpu} {cap.memory} {cap.disk}\n" for i in range(3))
    text += f"node 3 mux - - {cap.cpu} {cap.memory} {cap.disk}\n"
    text += "".join(f"link {i} 3 wired 10000.0\n" for i in range(3))
    return SubstrateNetwork.from_text(text)


def random_deployments(rng: random.Random, net, sfcs, in_flight: bool) -> dict[tuple[str, int], VnfInstance]:
    """Settled instances at random states, optionally some mid-transition, within capacity."""
    types = sorted({v for s in sfcs.values() for v in s.vnfs})
    deps = {}
    used = {c: (0, 0, 0) for c in net.nodes}
    for v in types:
        for c in sorted(net.nodes):
            if rng.random() < 0.5:
                continue
            state = rng.choice(list(S))
            moving = None
            if in_flight and rng.random() < 0.3:
                nxt = {S.DESCRIPTOR: S.SOURCE, S.SOURCE: S.IMAGE, S.IMAGE: S.STOPPED,
                       S.STOPPED: S.RUNNING, S.RUNNING: S.PAUSED, S.PAUSED: S.RUNNING}[state]
                moving = (nxt, 1.0)
            held = FOOTPRINT[state] if moving is None else _vmax(FOOTPRINT[state], FOOTPRINT[moving[0]])
            if not _fits(_vadd(used[c], held), net.edge_cloud(c).capacity):
                continue
            used[c] = _vadd(used[c], held)
            deps[(v, c)] = VnfInstance(v, c, state, moving)
    return deps
