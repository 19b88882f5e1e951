"""Placement planners.

All planners share one distance-first-fit (DFF) core. RIPPLE drives it with
forecast connection probabilities and maps them to lifecycle targets; the
Ideal and Reactive baselines drive it with the realised attachments
(probability one) and differ only in the transition table the engine applies.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .forecast import Forecast
from .lifecycle import LifecycleState, TransitionTable, VnfInstance, time_to_running
from .linkmap import Embedding, closest, embed_links, running_index
from .queueing import DelayParams, e2e_delay, wireless_rate
from .topology import ZERO, ResourceVector, SubstrateNetwork

S = LifecycleState

# exact repair search is used only below these sizes
EXACT_MAX_DECISIONS = 8
EXACT_MAX_CLOUDS = 8
REPAIR_MAX_EXPANSIONS = 5000
UNSERVED_PENALTY = 1e6


class MissingForecast(KeyError):
    pass


class InfeasibleChain(RuntimeError):
    pass


@dataclass(frozen=True)
class SfcRequest:
    id: int
    vnfs: tuple[str, ...]
    e2e_limit: float = 1e-3
    vnf_proc: float = 1e-4

    def __post_init__(self) -> None:
        if not self.vnfs:
            raise ValueError("an SFC needs at least one VNF")
        if len(set(self.vnfs)) != len(self.vnfs):
            raise ValueError(f"SFC {self.id} repeats a VNF type")
        if self.e2e_limit <= 0:
            raise ValueError("e2e_limit must be positive")


@dataclass(frozen=True)
class LifecycleThresholds:
    run: float = 0.6
    stage: float = 0.3
    fetch: float = 0.1

    def __post_init__(self) -> None:
        if not 1.0 > self.run > self.stage > self.fetch > 0.0:
            raise ValueError("thresholds must satisfy 1 > run > stage > fetch > 0")


@dataclass
class PlacementPlan:
    targets: dict[tuple[str, int], LifecycleState] = field(default_factory=dict)
    rationale: dict[tuple[str, int], float] = field(default_factory=dict)
    infeasible: set[int] = field(default_factory=set)

    def running_keys(self) -> list[tuple[str, int]]:
        return sorted(k for k, s in self.targets.items() if s is S.RUNNING)

    def running(self) -> dict[str, set[int]]:
        return running_index(self.running_keys())


# -- probability algebra ------------------------------------------------------


def vnf_demand_prob(
    vnf_type: str, bs: int, forecasts: Mapping[int, Forecast], users_requiring: Iterable[int]
) -> float:
    """Probability that at least one user needing ``vnf_type`` connects to ``bs``."""
    miss = 1.0
    for u in users_requiring:
        try:
            miss *= forecasts[u].no_connect[bs]
        except KeyError:
            raise MissingForecast(f"no forecast of user {u} at BS {bs} for {vnf_type}") from None
    return 1.0 - miss


def mux_demand_prob(vnf_type: str, mux: int, bs_probs: Iterable[float]) -> float:
    """Probability that ``vnf_type`` is needed behind ``mux``, given per-BS demand."""
    miss = 1.0
    for p in bs_probs:
        miss *= 1.0 - p
    return 1.0 - miss


def target_state(p: float, thresholds: LifecycleThresholds) -> LifecycleState:
    if p >= thresholds.run:
        return S.RUNNING
    if p >= thresholds.stage:
        return S.STOPPED
    if p >= thresholds.fetch:
        return S.IMAGE
    return S.DESCRIPTOR


# -- latency helpers ------------------------------------------------------------


def zero_load_delay(path: Sequence[int], vnfs: Sequence[str], params: DelayParams) -> float:
    """Planning-time delay: no queueing load, radio hop at the reference distance."""
    return e2e_delay(path, {}, vnfs, params, wireless=(0.0, wireless_rate(0.0, params)))


def serves(emb: Embedding | object, sfc: SfcRequest, params: DelayParams) -> bool:
    return isinstance(emb, Embedding) and zero_load_delay(emb.total_path, sfc.vnfs, params) <= sfc.e2e_limit


def predicted_interruption(
    net: SubstrateNetwork,
    running: Iterable[tuple[str, int]],
    attachments: Mapping[int, int],
    sfcs: Mapping[int, SfcRequest],
    deployments: Mapping[tuple[str, int], VnfInstance],
    table: TransitionTable,
    params: DelayParams,
) -> tuple[int, float]:
    """(unserved users, seconds until every served user's chain runs) for a Running set.

    A user is served when the greedy link embedding exists and meets the
    chain's latency limit at zero load. Each served user contributes the
    slowest time-to-running among its chain's instances.
    """
    index = running_index(list(running))
    unserved = 0
    seconds = 0.0
    for u in sorted(attachments):
        sfc = sfcs[u]
        emb = embed_links(u, attachments[u], sfc.vnfs, net, index)
        if not serves(emb, sfc, params):
            unserved += 1
            continue
        assert isinstance(emb, Embedding)
        worst = 0.0
        for hop in emb.hops:
            inst = deployments.get((hop.vnf_type, hop.cloud))
            state = inst.state if inst is not None else S.DESCRIPTOR
            worst = max(worst, time_to_running(state, table))
        seconds += worst
    return unserved, round(seconds, 9)


def interruption_score(result: tuple[int, float]) -> float:
    return result[0] * UNSERVED_PENALTY + result[1]


# -- shared DFF core -------------------------------------------------------------


class _Planner:
    def __init__(
        self,
        net: SubstrateNetwork,
        table: TransitionTable,
        params: DelayParams,
        deployments: Mapping[tuple[str, int], VnfInstance],
        thresholds: LifecycleThresholds,
    ) -> None:
        self.net = net
        self.table = table
        self.params = params
        self.thresholds = thresholds
        self.deployments = deployments
        self.plan = PlacementPlan()
        self.usage: dict[int, ResourceVector] = {c: ZERO for c in net.nodes}
        self.claimed: dict[tuple[str, int], ResourceVector] = {}
        self.base: dict[tuple[str, int], ResourceVector] = {}
        self.planned: dict[str, dict[int, LifecycleState]] = {}
        self._feasible: dict[tuple, bool] = {}
        for key, inst in deployments.items():
            if inst.in_flight is not None:
                held = inst.held(table)
                self.base[key] = held
                self.claimed[key] = held
                self.usage[key[1]] = self.usage[key[1]] + held

    # capacity

    def _fits(self, key: tuple[str, int], state: LifecycleState) -> bool:
        claim = self.table.footprint(state).maximum(self.base.get(key, ZERO))
        new_usage = self.usage[key[1]] - self.claimed.get(key, ZERO) + claim
        return new_usage.fits_in(self.net.edge_cloud(key[1]).capacity)

    def assign(self, key: tuple[str, int], state: LifecycleState, p: float) -> None:
        prev = self.plan.targets.get(key)
        if prev is not None and prev >= state:
            self.plan.rationale[key] = max(self.plan.rationale[key], p)
            return
        claim = self.table.footprint(state).maximum(self.base.get(key, ZERO))
        self.usage[key[1]] = self.usage[key[1]] - self.claimed.get(key, ZERO) + claim
        self.claimed[key] = claim
        self.plan.targets[key] = state
        self.plan.rationale[key] = max(self.plan.rationale.get(key, 0.0), p)
        self.planned.setdefault(key[0], {})[key[1]] = state

    def best_fit(self, key: tuple[str, int], wanted: LifecycleState) -> LifecycleState | None:
        prev = self.plan.targets.get(key)
        for state in (S.RUNNING, S.STOPPED, S.IMAGE):
            if state > wanted:
                continue
            if (prev is not None and prev >= state) or self._fits(key, state):
                return state
        return None

    def free(self, cloud: int) -> ResourceVector:
        return self.net.edge_cloud(cloud).capacity - self.usage[cloud]

    # latency

    def chain_path(
        self, bs: int, cloud: int, sfc: SfcRequest, layer: int, ready: LifecycleState = S.RUNNING
    ) -> list[int]:
        """Head at ``bs``, layers 1..layer at ``cloud``, deeper layers at their closest planned cloud.

        Only deeper instances planned at ``ready`` or above count, so a
        Running requirement is never met by a merely Stopped instance.
        """
        net = self.net
        path = [bs]
        cur = bs
        if cloud != bs:
            path.extend(net.hop_path(bs, cloud)[1:])
            cur = cloud
        for vnf in sfc.vnfs[layer + 1 :]:
            clouds = [c for c, st in self.planned.get(vnf, {}).items() if st >= ready]
            if clouds:
                nxt = closest(net, cur, clouds)
                path.extend(net.hop_path(cur, nxt)[1:])
                cur = nxt
        return path

    def feasible(
        self, bs: int, cloud: int, sfc: SfcRequest, layer: int, ready: LifecycleState = S.RUNNING
    ) -> bool:
        key = (bs, cloud, sfc.id, layer, ready)
        hit = self._feasible.get(key)
        if hit is None:
            path = self.chain_path(bs, cloud, sfc, layer, ready)
            hit = self._feasible[key] = zero_load_delay(path, sfc.vnfs, self.params) <= sfc.e2e_limit
        return hit

    # placement

    def place_tail(self, vnf: str, sfc: SfcRequest, layer: int, demand: Mapping[int, float]) -> None:
        net = self.net
        likely = sorted(b for b, p in demand.items() if p >= self.thresholds.fetch)
        if not likely:
            return
        total = math.fsum(demand[b] for b in likely)
        ready = {b: target_state(demand[b], self.thresholds) for b in likely}
        cover = {c: [b for b in likely if self.feasible(b, c, sfc, layer, ready[b])] for c in net.mux_set}

        def order(c: int) -> tuple:
            expected_hops = math.fsum(demand[b] * net.hop_distance(b, c) for b in likely) / total
            free = self.free(c)
            return (-net.depth(c), expected_hops, -free.cpu, -free.memory, -free.disk, c)

        uncovered = set(likely)
        for c in sorted((c for c in net.mux_set if cover[c]), key=order):
            covers = [b for b in cover[c] if b in uncovered]
            if not covers:
                continue
            p = mux_demand_prob(vnf, c, (demand[b] for b in covers))
            wanted = target_state(p, self.thresholds)
            if wanted is S.DESCRIPTOR:
                continue
            got = self.best_fit((vnf, c), wanted)
            if got is None:
                continue
            self.assign((vnf, c), got, p)
            if got == wanted:
                uncovered.difference_update(covers)
            if not uncovered:
                break

    def place_heads(self, heads: Sequence[tuple[float, int, str, int]]) -> None:
        """``heads`` holds (probability, sfc id, vnf, bs) candidates."""
        for p, _, vnf, bs in sorted(heads, key=lambda h: (-h[0], h[1], h[3])):
            wanted = target_state(p, self.thresholds)
            if wanted is S.DESCRIPTOR:
                continue
            got = self.best_fit((vnf, bs), wanted)
            if got is not None:
                self.assign((vnf, bs), got, p)


def _demand_by_vnf(
    sfcs: Mapping[int, SfcRequest], bs_set: Sequence[int], per_user_miss: Mapping[int, Mapping[int, float]]
) -> dict[str, dict[int, float]]:
    users_by_vnf: dict[str, list[int]] = {}
    for u in sorted(sfcs):
        for v in sfcs[u].vnfs:
            users_by_vnf.setdefault(v, []).append(u)
    demand = {}
    for v, users in users_by_vnf.items():
        demand[v] = {}
        for b in bs_set:
            miss = 1.0
            for u in users:
                miss *= per_user_miss[u][b]
            demand[v][b] = 1.0 - miss
    return demand


def _dff_plan(
    net: SubstrateNetwork,
    sfcs: Mapping[int, SfcRequest],
    demand: Mapping[str, Mapping[int, float]],
    deployments: Mapping[tuple[str, int], VnfInstance],
    thresholds: LifecycleThresholds,
    params: DelayParams,
    table: TransitionTable,
    pinned: Iterable[tuple[str, int]] = (),
) -> _Planner:
    """``pinned`` instances are claimed as Running before any layer is placed."""
    planner = _Planner(net, table, params, deployments, thresholds)
    for key in sorted(pinned):
        planner.assign(key, S.RUNNING, 1.0)
    chains = {s.id: s for s in sfcs.values()}
    depth = max(len(s.vnfs) for s in chains.values()) if chains else 0
    # layer-wise from the tail: layer n of every chain before layer n-1 of any
    for layer in range(depth - 1, 0, -1):
        slots = [(s, s.vnfs[layer]) for s in chains.values() if len(s.vnfs) > layer]
        slots.sort(key=lambda sv: (-max(demand[sv[1]].values(), default=0.0), sv[0].id))
        for sfc, vnf in slots:
            planner.place_tail(vnf, sfc, layer, demand[vnf])
    heads = []
    for sfc in chains.values():
        head = sfc.vnfs[0]
        for b, p in demand[head].items():
            if p >= thresholds.fetch:
                heads.append((p, sfc.id, head, b))
    planner.place_heads(heads)
    return planner


def _mark_infeasible(
    plan: PlacementPlan,
    net: SubstrateNetwork,
    attachments: Mapping[int, int],
    sfcs: Mapping[int, SfcRequest],
    params: DelayParams,
) -> None:
    index = plan.running()
    plan.infeasible = {
        u
        for u, bs in attachments.items()
        if not serves(embed_links(u, bs, sfcs[u].vnfs, net, index), sfcs[u], params)
    }


# -- planners ------------------------------------------------------------------


def ripple_plan(
    net: SubstrateNetwork,
    forecasts: Mapping[int, Forecast],
    sfcs: Mapping[int, SfcRequest],
    deployments: Mapping[tuple[str, int], VnfInstance] | None = None,
    thresholds: LifecycleThresholds = LifecycleThresholds(),
    *,
    params: DelayParams,
    table: TransitionTable,
    attachments: Mapping[int, int] | None = None,
) -> PlacementPlan:
    """Lifecycle-aware DFF placement driven by per-user no-connect forecasts."""
    deployments = deployments or {}
    for u in sfcs:
        if u not in forecasts:
            raise MissingForecast(f"no forecast for user {u}")
    miss = {u: forecasts[u].no_connect for u in sfcs}
    for u in sfcs:
        missing = [b for b in net.bs_set if b not in miss[u]]
        if missing:
            raise MissingForecast(f"user {u} has no forecast for BS {missing[0]}")
    demand = _demand_by_vnf(sfcs, net.bs_set, miss)
    plan = _dff_plan(net, sfcs, demand, deployments, thresholds, params, table).plan
    if attachments:
        _mark_infeasible(plan, net, attachments, sfcs, params)
        if plan.infeasible:
            # serve the present first, then stage for the forecast around it
            present = ideal_plan(net, attachments, sfcs, deployments, params=params, table=table)
            plan = _dff_plan(net, sfcs, demand, deployments, thresholds, params, table, present.running_keys()).plan
            _mark_infeasible(plan, net, attachments, sfcs, params)
    return plan


def _attachment_miss(net: SubstrateNetwork, attachments: Mapping[int, int]) -> dict[int, dict[int, float]]:
    return {u: {b: 0.0 if b == bs else 1.0 for b in net.bs_set} for u, bs in attachments.items()}


def ideal_plan(
    net: SubstrateNetwork,
    attachments: Mapping[int, int],
    sfcs: Mapping[int, SfcRequest],
    deployments: Mapping[tuple[str, int], VnfInstance] | None = None,
    *,
    params: DelayParams,
    table: TransitionTable,
) -> PlacementPlan:
    """Attachment-driven DFF placement, repaired by search when it strands a user.

    ``table`` is the transition table the plan will be applied with; it only
    breaks ties between repairs that serve the same number of users.
    """
    deployments = deployments or {}
    sfcs = {u: sfcs[u] for u in attachments}
    demand = _demand_by_vnf(sfcs, net.bs_set, _attachment_miss(net, attachments))
    planner = _dff_plan(net, sfcs, demand, deployments, LifecycleThresholds(), params, table)
    plan = planner.plan
    _mark_infeasible(plan, net, attachments, sfcs, params)
    if not plan.infeasible:
        return plan
    decisions = sum(len(sfcs[u].vnfs) for u in attachments)
    if decisions <= EXACT_MAX_DECISIONS and len(net.nodes) <= EXACT_MAX_CLOUDS:
        running = _exact_search(net, attachments, sfcs, deployments, params, table)
        plan = PlacementPlan({k: S.RUNNING for k in running}, {k: 1.0 for k in running})
    else:
        plan = _repair(planner, attachments, sfcs)
    _mark_infeasible(plan, net, attachments, sfcs, params)
    return plan


def reactive_plan(
    net: SubstrateNetwork,
    attachments: Mapping[int, int],
    sfcs: Mapping[int, SfcRequest],
    deployments: Mapping[tuple[str, int], VnfInstance] | None = None,
    *,
    params: DelayParams,
    table: TransitionTable,
) -> PlacementPlan:
    """Same decision rule as :func:`ideal_plan`; the engine applies it with real transition times."""
    return ideal_plan(net, attachments, sfcs, deployments, params=params, table=table)


# -- baseline repair -------------------------------------------------------------


def _candidate_order(net: SubstrateNetwork, bs: int, layer: int) -> list[int]:
    """Heads stay at base stations, nearest first; tails go deep, off the access layer."""
    if layer == 0:
        return sorted(net.bs_set, key=lambda c: (net.hop_distance(bs, c), c))
    return sorted(net.mux_set, key=lambda c: (-net.depth(c), net.hop_distance(bs, c), c))


def _exact_search(
    net: SubstrateNetwork,
    attachments: Mapping[int, int],
    sfcs: Mapping[int, SfcRequest],
    deployments: Mapping[tuple[str, int], VnfInstance],
    params: DelayParams,
    table: TransitionTable,
) -> frozenset[tuple[str, int]]:
    """Branch and bound over (user, layer) -> cloud, minimising predicted interruption."""
    users = sorted(attachments)
    slots = [(u, layer) for u in users for layer in range(len(sfcs[u].vnfs))]
    locked = {c: ZERO for c in net.nodes}
    for key, inst in deployments.items():
        if inst.in_flight is not None:
            locked[key[1]] = locked[key[1]] + inst.held(table)
    run_fp = table.footprint(S.RUNNING)

    def usage_ok(chosen: frozenset[tuple[str, int]], cloud: int) -> bool:
        used = locked[cloud]
        for v, c in chosen:
            if c == cloud:
                inst = deployments.get((v, c))
                extra = run_fp
                if inst is not None and inst.in_flight is not None:
                    extra = run_fp.maximum(inst.held(table)) - inst.held(table)
                used = used + extra
        return used.fits_in(net.edge_cloud(cloud).capacity)

    best: list = [None, frozenset()]

    def preference(chosen: frozenset[tuple[str, int]]) -> tuple:
        return (-sum(net.depth(c) for _, c in chosen), sorted(chosen))

    def visit(i: int, chosen: frozenset[tuple[str, int]], skipped: set[int]) -> bool:
        if best[0] is not None and best[0][0] == 0 and best[0][1] == 0.0:
            return True
        if best[0] is not None and len(skipped) > best[0][0]:
            return False
        if i == len(slots):
            result = predicted_interruption(net, chosen, attachments, sfcs, deployments, table, params)
            key = (interruption_score(result), preference(chosen))
            if best[0] is None or key < (interruption_score(best[0]), preference(best[1])):
                best[0], best[1] = result, chosen
            return False
        u, layer = slots[i]
        if u in skipped:
            return visit(i + 1, chosen, skipped)
        vnf = sfcs[u].vnfs[layer]
        for c in _candidate_order(net, attachments[u], layer):
            key = (vnf, c)
            nxt = chosen if key in chosen else chosen | {key}
            if key not in chosen and not usage_ok(nxt, c):
                continue
            if visit(i + 1, nxt, skipped):
                return True
        if layer == 0:
            return visit(i + 1, chosen, skipped | {u})
        return False

    visit(0, frozenset(), set())
    return best[1]


def _repair(planner: _Planner, attachments: Mapping[int, int], sfcs: Mapping[int, SfcRequest]) -> PlacementPlan:
    """Depth-first completion of each stranded user's chain in leftover capacity."""
    net, params = planner.net, planner.params
    plan = planner.plan
    for u in sorted(plan.infeasible):
        sfc, bs = sfcs[u], attachments[u]
        budget = [REPAIR_MAX_EXPANSIONS]

        def dfs(layer: int, added: list[tuple[str, int]]) -> list[tuple[str, int]] | None:
            if layer == len(sfc.vnfs):
                index = plan.running()
                for v, c in added:
                    index.setdefault(v, set()).add(c)
                return added if serves(embed_links(u, bs, sfc.vnfs, net, index), sfc, params) else None
            vnf = sfc.vnfs[layer]
            for c in _candidate_order(net, bs, layer):
                budget[0] -= 1
                if budget[0] < 0:
                    return None
                key = (vnf, c)
                if plan.targets.get(key) is S.RUNNING or key in added:
                    found = dfs(layer + 1, added)
                elif planner._fits(key, S.RUNNING) and _fits_with(planner, added, key):
                    found = dfs(layer + 1, added + [key])
                else:
                    continue
                if found is not None:
                    return found
            return None

        found = dfs(0, [])
        if found:
            for key in found:
                planner.assign(key, S.RUNNING, 1.0)
    return plan


def _fits_with(planner: _Planner, added: Sequence[tuple[str, int]], key: tuple[str, int]) -> bool:
    extra = ZERO
    fp = planner.table.footprint(S.RUNNING)
    for k in itertools.chain(added, [key]):
        if k[1] == key[1]:
            extra = extra + fp
    return (planner.usage[key[1]] + extra).fits_in(planner.net.edge_cloud(key[1]).capacity)


# -- validation ----------------------------------------------------------------


def validate_plan(
    plan: PlacementPlan,
    net: SubstrateNetwork,
    sfcs: Mapping[int, SfcRequest],
    table: TransitionTable,
) -> list[str]:
    """Independent re-check of placement constraints; returns human-readable violations."""
    problems = []
    required = {v for s in sfcs.values() for v in s.vnfs}
    usage: dict[int, ResourceVector] = {}
    for (vnf, cloud), state in sorted(plan.targets.items()):
        if vnf not in required:
            problems.append(f"{vnf}@{cloud}: VNF not required by any chain")
        if cloud not in net.nodes:
            problems.append(f"{vnf}@{cloud}: unknown cloud")
            continue
        usage[cloud] = usage.get(cloud, ZERO) + table.footprint(state)
    for cloud, used in sorted(usage.items()):
        cap = net.edge_cloud(cloud).capacity
        if not used.fits_in(cap):
            problems.append(f"cloud {cloud}: planned {used} exceeds capacity {cap}")
    return problems


def head_mobility_violations(plan: PlacementPlan, net: SubstrateNetwork, sfcs: Mapping[int, SfcRequest]) -> list[str]:
    heads = {s.vnfs[0] for s in sfcs.values()}
    bs = set(net.bs_set)
    return [f"{v}@{c}" for (v, c) in sorted(plan.targets) if c in bs and v not in heads]
