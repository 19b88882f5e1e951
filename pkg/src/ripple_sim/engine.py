"""Deterministic event-driven simulation of lifecycle-aware SFC embedding.

Events are ordered by (time, kind, sequence). At equal timestamps lifecycle
completions come first, then mobility ticks, then decision epochs, then
packets, so packets always observe post-decision state.
"""

from __future__ import annotations

import enum
import heapq
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .forecast import horizon_steps, no_connect_over_horizon
from .lifecycle import (
    InsufficientResources,
    LifecycleState,
    TransitionInFlight,
    TransitionTable,
    VnfInstance,
    begin_transition,
    complete_transition,
    route_to,
)
from .linkmap import Embedding, MissingVnf, embed_links
from .mobility import User, connection_probabilities, generate_trace, sample_index, GaussMarkovParams
from .policy import PlacementPlan, SfcRequest, ideal_plan, reactive_plan, ripple_plan
from .queueing import DelayParams, e2e_delay, wireless_rate
from .scenario import Scenario
from .topology import ZERO, ResourceVector, SubstrateNetwork, bounding_box

log = logging.getLogger(__name__)

S = LifecycleState


class EventKind(enum.IntEnum):
    LIFECYCLE_COMPLETE = 0
    MOBILITY_TICK = 1
    DECISION_EPOCH = 2
    PACKET_ARRIVAL = 3


@dataclass(frozen=True, order=True)
class Event:
    time: float
    kind: EventKind
    sequence: int
    payload: object = field(default=None, compare=False)


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    LATE_DELAY = "late_delay"
    NOT_RUNNING = "not_running"


class PacketRecord(NamedTuple):
    user: int
    time: float
    outcome: Outcome
    measured_delay: float


@dataclass
class MetricsReport:
    duration: float
    users: list[int]
    packets: dict[int, int]
    unsuccessful: dict[int, int]
    late_delay: dict[int, int]
    not_running: dict[int, int]
    bursts: dict[int, list[tuple[float, float]]]
    vnf_prep_counts: dict[tuple[LifecycleState, LifecycleState], int]
    state_occupancy: dict[LifecycleState, float]
    handovers: int
    audit: dict[str, int]
    records: list[PacketRecord] = field(default_factory=list, repr=False)

    @property
    def unsuccessful_ratio(self) -> dict[int, float]:
        return {u: (self.unsuccessful[u] / self.packets[u] if self.packets[u] else 0.0) for u in self.users}

    @property
    def mean_unsuccessful_ratio(self) -> float:
        ratios = self.unsuccessful_ratio
        return math.fsum(ratios.values()) / len(ratios) if ratios else 0.0

    @property
    def objective(self) -> float:
        """Time-averaged unsuccessful packets per second over all users."""
        return sum(self.unsuccessful.values()) / self.duration if self.duration > 0 else 0.0

    def burst_lengths(self, min_length: float = 0.0) -> list[float]:
        return [length for u in self.users for _, length in self.bursts[u] if length >= min_length]


def burst_lengths(
    log_: Sequence[PacketRecord], mean_interarrival: float, min_length: float = 0.0
) -> list[float]:
    """Lengths of maximal unsuccessful runs in one user's time-ordered packet log."""
    return [length for _, length in bursts(log_, mean_interarrival, min_length)]


def bursts(
    log_: Sequence[PacketRecord], mean_interarrival: float, min_length: float = 0.0
) -> list[tuple[float, float]]:
    """(start, length) of every maximal unsuccessful run.

    A run spanning packets at times t_first..t_last lasts
    ``t_last - t_first + mean_interarrival``.
    """
    out = []
    first = last = None
    for rec in log_:
        if rec.outcome is Outcome.SUCCESS:
            if first is not None:
                out.append((first, last - first + mean_interarrival))
                first = None
        else:
            if first is None:
                first = rec.time
            last = rec.time
    if first is not None:
        out.append((first, last - first + mean_interarrival))
    return [(start, length) for start, length in out if length >= min_length]


def classify_packet(
    user: int,
    time: float,
    embedding: Embedding | MissingVnf,
    sfc: SfcRequest,
    link_lambda: Mapping[tuple[int, int], float],
    params: DelayParams,
    wireless: tuple[float, float] | None = None,
    serving: Mapping[tuple[str, int], bool] | None = None,
    link_mu: Mapping[tuple[int, int], float] | None = None,
) -> PacketRecord:
    """Classify one packet: not running, late, or successful.

    ``serving`` maps (vnf_type, cloud) to whether that instance is Running;
    when given, an embedding through any other instance is not running.
    """
    if isinstance(embedding, MissingVnf):
        return PacketRecord(user, time, Outcome.NOT_RUNNING, math.nan)
    if serving is not None and not all(serving.get((h.vnf_type, h.cloud), False) for h in embedding.hops):
        return PacketRecord(user, time, Outcome.NOT_RUNNING, math.nan)
    delay = e2e_delay(embedding.total_path, link_lambda, sfc.vnfs, params, link_mu=link_mu, wireless=wireless)
    if delay > sfc.e2e_limit:
        return PacketRecord(user, time, Outcome.LATE_DELAY, delay)
    return PacketRecord(user, time, Outcome.SUCCESS, delay)


@dataclass
class Traces:
    """Per-user positions and realised attachments at ticks 0..N."""

    positions: dict[int, np.ndarray]
    attachments: dict[int, list[int]]


def generate_traces(
    scenario: Scenario, net: SubstrateNetwork, seed: int, n_ticks: int
) -> tuple[Traces, list[User]]:
    root = np.random.SeedSequence(seed)
    init_ss, *user_ss = root.spawn(1 + scenario.users)
    init = np.random.default_rng(init_ss)
    bounds = bounding_box(net, scenario.bs_spacing / 2)
    gm = GaussMarkovParams(
        alpha=scenario.alpha,
        mean_speed=scenario.mean_speed,
        sigma_speed=scenario.sigma_speed,
        sigma_direction=scenario.sigma_direction,
        tick=scenario.tick,
        bounds=bounds,
    )
    bs_pos = net.bs_positions()
    users = []
    positions, attachments = {}, {}
    for u in range(scenario.users):
        x = init.uniform(bounds[0], bounds[2])
        y = init.uniform(bounds[1], bounds[3])
        heading = init.uniform(0.0, 2 * math.pi)
        user = User(u, (x, y), scenario.mean_speed, heading, scenario.lambda_u, u % scenario.sfc_count,
                    mean_direction=heading)
        move_ss, conn_ss = user_ss[u].spawn(2)
        path = np.vstack([[x, y], generate_trace(user, gm, n_ticks, move_ss)])
        conn = np.random.default_rng(conn_ss)
        attach = [sample_index(connection_probabilities(p, bs_pos, scenario.softness), conn, net.bs_set) for p in path]
        positions[u], attachments[u] = path, attach
        users.append(user)
    return Traces(positions, attachments), users


def _pad(trace: Traces, users: Sequence[int], n_ticks: int) -> Traces:
    positions, attachments = {}, {}
    for u in users:
        pos, att = trace.positions[u], list(trace.attachments[u])
        if len(pos) < n_ticks + 1:
            extra = n_ticks + 1 - len(pos)
            pos = np.vstack([pos, np.repeat(pos[-1:], extra, axis=0)])
            att = att + [att[-1]] * extra
        positions[u], attachments[u] = pos, att
    return Traces(positions, attachments)


class Simulation:
    def __init__(self, scenario: Scenario, seed: int, traces: Traces | None = None,
                 record_packets: bool = True) -> None:
        scenario.validate(allow_empty=True)
        self.scenario = scenario
        self.seed = seed
        self.net = scenario.build_network()
        self.net.reset_usage()
        self.params = scenario.delay_params()
        realistic = scenario.transition_table()
        self.table: TransitionTable = realistic.instantaneous() if scenario.policy == "ideal" else realistic
        self.instant = realistic.instantaneous()
        self.catalog = scenario.sfc_catalog()
        self.record_packets = record_packets
        # ticks inside [0, T), plus enough realised future for the oracle forecast
        self.n_ticks = max(0, math.ceil(scenario.duration / scenario.tick - 1e-9) - 1)
        trace_ticks = self.n_ticks + horizon_steps(scenario.horizon, scenario.tick)
        generated, users = generate_traces(scenario, self.net, seed, trace_ticks)
        if traces is None and scenario.trace_file:
            from .mobility import read_trace_csv

            loaded = read_trace_csv(scenario.trace_file)
            traces = Traces({u: p for u, (p, _) in loaded.items()}, {u: a for u, (_, a) in loaded.items()})
        if traces is not None:
            missing = [u for u in range(scenario.users) if u not in traces.positions]
            if missing:
                raise ValueError(f"trace has no entries for user {missing[0]}")
            generated = _pad(traces, range(scenario.users), trace_ticks)
        self.traces = generated
        self.users = {u.id: u for u in users}
        self.sfc_of = {u: self.catalog[self.users[u].sfc] for u in self.users}
        self.bs_index = {b: i for i, b in enumerate(self.net.bs_set)}
        self.bs_pos = self.net.bs_positions()

        self.now = 0.0
        self.tick_index = 0
        self.instances: dict[tuple[str, int], VnfInstance] = {}
        self.by_cloud: dict[int, set[tuple[str, int]]] = {c: set() for c in self.net.nodes}
        self.targets: dict[tuple[str, int], LifecycleState] = {}
        self.priority: dict[tuple[str, int], float] = {}
        self.evicting: dict[tuple[str, int], LifecycleState] = {}
        self.last_plan_attachments: dict[int, int] | None = None
        self.warming = scenario.warm_start
        self._routes: dict[tuple[LifecycleState, LifecycleState], list] = {}

        self.heap: list[tuple[float, int, int, object]] = []
        self.seq = 0
        self.version = 0
        self._snapshot_version = -1
        self._classified: dict[int, tuple] = {}

        self.prep_counts: Counter = Counter()
        self.state_counts: Counter = Counter()
        self.occupancy: Counter = Counter()
        self._occ_time = 0.0
        self.handovers = 0
        self.audit = Counter(capacity=0, interrupted=0, non_running_refs=0, cause=0, causality=0)
        self._last_event = (-math.inf, -1, -1)

    # -- event queue ------------------------------------------------------

    def _push(self, time: float, kind: EventKind, payload: object = None) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time, int(kind), self.seq, payload))

    # -- lifecycle control -------------------------------------------------

    def _route(self, src: LifecycleState, dst: LifecycleState) -> list:
        key = (src, dst)
        if key not in self._routes:
            self._routes[key] = route_to(src, dst, self.table)
        return self._routes[key]

    def _instance(self, key: tuple[str, int]) -> VnfInstance:
        inst = self.instances.get(key)
        if inst is None:
            inst = self.instances[key] = VnfInstance(key[0], key[1])
            self.by_cloud[key[1]].add(key)
            self.state_counts[inst.state] += 1
        return inst

    def _step(self, inst: VnfInstance, dest: LifecycleState) -> bool:
        """Issue the next edge toward ``dest``; False when capacity blocks it."""
        if inst.state == dest or inst.in_flight is not None:
            return True
        nxt = self._route(inst.state, dest)[0][1]
        table = self.instant if self.warming else self.table
        try:
            done = begin_transition(inst, nxt, self.now, self.net.edge_cloud(inst.location), table)
        except InsufficientResources:
            return False
        except TransitionInFlight:
            self.audit["interrupted"] += 1
            return False
        self._push(done, EventKind.LIFECYCLE_COMPLETE, (inst.vnf_type, inst.location, inst.state))
        self.version += 1
        return True

    def _desired(self, key: tuple[str, int], inst: VnfInstance) -> LifecycleState:
        if key in self.evicting:
            return self.evicting[key]
        target = self.targets.get(key)
        if target is None:
            if inst.state is S.RUNNING:
                if self._replacement_pending(key[0]):
                    return S.RUNNING  # make before break
                return S.PAUSED if self._pause_ok(key) else S.STOPPED
            return inst.state
        return inst.state if inst.state >= target else target

    def _replacement_pending(self, vnf: str) -> bool:
        """True while some planned Running instance of ``vnf`` is not serving yet."""
        for key, target in self.targets.items():
            if key[0] == vnf and target is S.RUNNING:
                inst = self.instances.get(key)
                if inst is None or not inst.serving:
                    return True
        return False

    def _pause_ok(self, key: tuple[str, int]) -> bool:
        if self.scenario.demotion != "paused":
            return False
        cloud = key[1]
        mem = 0
        for other in self.by_cloud[cloud]:
            if other == key:
                continue
            target = self.targets.get(other)
            inst = self.instances[other]
            state = max(target, inst.state) if target is not None else inst.state
            mem += self.table.footprint(state).memory
        need = self.table.footprint(S.PAUSED).memory
        return mem + need <= self.net.edge_cloud(cloud).capacity.memory

    def _reconcile(self, cloud: int) -> None:
        for key in [k for k in self.targets if k[1] == cloud and k not in self.instances]:
            self._instance(key)
        keys = sorted(self.by_cloud[cloud])
        for key in keys:
            inst = self.instances[key]
            if key in self.evicting and inst.state == self.evicting[key]:
                del self.evicting[key]
            if inst.in_flight is None:
                want = self._desired(key, inst)
                if want < inst.state:
                    self._step(inst, want)
        promote = [k for k in keys if self.instances[k].in_flight is None
                   and self._desired(k, self.instances[k]) > self.instances[k].state]
        promote.sort(key=lambda k: (-self.priority.get(k, 0.0), k))
        for key in promote:
            inst = self.instances[key]
            want = self._desired(key, inst)
            if not self._step(inst, want):
                self._relieve(cloud, key, want)

    def _relieve(self, cloud: int, blocked: tuple[str, int], want: LifecycleState) -> None:
        """Demote lower-priority instances at ``cloud`` until ``blocked`` could proceed."""
        inst = self.instances[blocked]
        nxt = self._route(inst.state, want)[0][1]
        cur = self.table.footprint(inst.state)
        extra = cur.maximum(self.table.footprint(nxt)) - cur
        ec = self.net.edge_cloud(cloud)
        over = ec.in_use + extra - ec.capacity
        deficit = ResourceVector(max(over.cpu, 0), max(over.memory, 0), max(over.disk, 0))
        if deficit == ZERO:
            return
        mine = self.priority.get(blocked, 0.0)
        self._refresh()
        in_use = {(h.vnf_type, h.cloud) for emb, _, _ in self._classified.values() if isinstance(emb, Embedding)
                  for h in emb.hops}
        candidates = []
        for key in self.by_cloud[cloud]:
            other = self.instances[key]
            if key == blocked or other.in_flight is not None or key in self.evicting:
                continue
            shed = self._shed_state(other.state, deficit)
            if shed is None:
                continue
            target = self.targets.get(key)
            prio = self.priority.get(key, 0.0)
            if target is None:
                candidates.append((key in in_use, -1.0, key, shed))
            elif other.state > target:
                candidates.append((key in in_use, prio, key, max(target, shed)))
            elif prio < mine:
                # wanted, but for a lower probability than the blocked target
                candidates.append((key in in_use, prio, key, shed))
        freed = ZERO
        for _, _, key, dest in sorted(candidates):
            other = self.instances[key]
            gain = self.table.footprint(other.state) - self.table.footprint(dest)
            if not any(need > 0 and got > 0 for need, got in zip(deficit.as_tuple(), gain.as_tuple())):
                continue
            if key in self.targets and dest < self.targets[key]:
                del self.targets[key]
            self.evicting[key] = dest
            if not self._step(other, dest):
                del self.evicting[key]
                continue
            freed = freed + gain
            if deficit.fits_in(freed):
                break

    def _shed_state(self, state: LifecycleState, deficit: ResourceVector) -> LifecycleState | None:
        """Deepest state below ``state`` that gives back every short resource."""
        held = self.table.footprint(state).as_tuple()
        for cand in (S.PAUSED, S.STOPPED, S.DESCRIPTOR):
            if cand >= state:
                continue
            fp = self.table.footprint(cand).as_tuple()
            if all(fp[i] < held[i] for i, need in enumerate(deficit.as_tuple()) if need > 0):
                return cand
        return None

    # -- plan application ---------------------------------------------------

    def _attachments(self) -> dict[int, int]:
        return {u: user.attached_bs for u, user in self.users.items()}

    def _plan(self) -> PlacementPlan | None:
        policy = self.scenario.policy
        attachments = self._attachments()
        if policy == "ripple":
            forecasts = {}
            k = self.scenario.forecast_k
            i = self.tick_index
            for u in self.users:
                pos = self.traces.positions[u]
                history = pos[max(0, i - k + 1): i + 1]
                if len(history) < 2:
                    history = np.vstack([history, history])
                forecasts[u] = no_connect_over_horizon(
                    u, self.net, self.scenario.horizon, self.scenario.tick, self.scenario.forecast_kind,
                    self.scenario.estimator_softness, history, future=pos[i + 1:],
                    attached_bs=attachments[u],
                )
            return ripple_plan(self.net, forecasts, self.sfc_of, self.instances, self.scenario.thresholds,
                               params=self.params, table=self.table, attachments=attachments)
        if attachments == self.last_plan_attachments:
            return None
        self.last_plan_attachments = attachments
        planner = ideal_plan if policy == "ideal" else reactive_plan
        return planner(self.net, attachments, self.sfc_of, self.instances, params=self.params, table=self.table)

    def _apply(self, plan: PlacementPlan) -> None:
        self.targets = dict(plan.targets)
        self.priority = dict(plan.rationale)
        self.evicting = {k: v for k, v in self.evicting.items() if k not in self.targets}
        for cloud in sorted(self.net.nodes):
            self._reconcile(cloud)

    # -- packets -----------------------------------------------------------------

    def _refresh(self) -> None:
        if self._snapshot_version == self.version:
            return
        self._snapshot_version = self.version
        running: dict[str, set[int]] = {}
        serving = {}
        for key, inst in self.instances.items():
            ok = inst.serving
            serving[key] = ok
            if ok:
                running.setdefault(key[0], set()).add(key[1])
        embeddings = {}
        loads: dict[tuple[int, int], float] = {}
        radio: dict[int, float] = {}
        for u, user in self.users.items():
            emb = embed_links(u, user.attached_bs, self.sfc_of[u].vnfs, self.net, running)
            embeddings[u] = emb
            radio[user.attached_bs] = radio.get(user.attached_bs, 0.0) + user.lambda_u
            if isinstance(emb, Embedding):
                for a, b in zip(emb.total_path, emb.total_path[1:]):
                    key = (a, b) if a <= b else (b, a)
                    loads[key] = loads.get(key, 0.0) + user.lambda_u
        for key, link in self.net.links.items():
            link.current_lambda = loads.get(key, 0.0)
        link_mu = {key: link.service_rate_mu for key, link in self.net.links.items()}
        self._classified = {}
        for u, user in self.users.items():
            bs = user.attached_bs
            bx, by = self.bs_pos[self.bs_index[bs]]
            dist = math.hypot(user.position[0] - bx, user.position[1] - by)
            wireless = (radio[bs], wireless_rate(dist, self.params))
            rec = classify_packet(u, 0.0, embeddings[u], self.sfc_of[u], loads, self.params, wireless,
                                  serving, link_mu)
            self._classified[u] = (embeddings[u], rec.outcome, rec.measured_delay)

    def _check_packet(self, u: int, emb: object, outcome: Outcome, delay: float) -> None:
        if isinstance(emb, Embedding):
            for hop in emb.hops:
                inst = self.instances.get((hop.vnf_type, hop.cloud))
                if inst is None or not inst.serving:
                    self.audit["non_running_refs"] += 1
        stalled = isinstance(emb, MissingVnf) or any(
            not getattr(self.instances.get((h.vnf_type, h.cloud)), "serving", False)
            for h in emb.hops  # type: ignore[union-attr]
        )
        if outcome is Outcome.SUCCESS:
            ok = not stalled and delay <= self.sfc_of[u].e2e_limit
        elif outcome is Outcome.LATE_DELAY:
            ok = not stalled and delay > self.sfc_of[u].e2e_limit
        else:
            ok = stalled and math.isnan(delay)
        if not ok:
            self.audit["cause"] += 1

    # -- audit ---------------------------------------------------------------------

    def _audit_capacity(self) -> None:
        for cloud, keys in self.by_cloud.items():
            held = ZERO
            for key in keys:
                held = held + self.instances[key].held(self.table)
            ec = self.net.edge_cloud(cloud)
            if held != ec.in_use or not ec.in_use.fits_in(ec.capacity):
                self.audit["capacity"] += 1

    def _integrate(self, now: float) -> None:
        dt = now - self._occ_time
        if dt > 0:
            for state, count in self.state_counts.items():
                self.occupancy[state] += count * dt
            self._occ_time = now

    # -- main loop -------------------------------------------------------------------

    def run(self) -> MetricsReport:
        sc = self.scenario
        T = sc.duration
        records: dict[int, list[PacketRecord]] = {u: [] for u in self.users}
        for i in range(self.n_ticks + 1):
            t = i * sc.tick
            if t < T:
                self._push(t, EventKind.MOBILITY_TICK, i)
                self._push(t, EventKind.DECISION_EPOCH, i)
        streams = np.random.SeedSequence([self.seed, 0xA11CE]).spawn(len(self.users))
        arrivals = {}
        for u, ss in zip(sorted(self.users), streams):
            rng = np.random.default_rng(ss)
            arrivals[u] = (rng, iter(()))
            first = self._next_gap(u, arrivals)
            if first < T:
                self._push(first, EventKind.PACKET_ARRIVAL, u)
        while self.heap:
            time, kind, seq, payload = heapq.heappop(self.heap)
            # Zero-duration work spawned at ``now`` may carry a lower kind
            # priority than the event that spawned it; only an event that was
            # already queued and is popped late breaks causality.
            stamp = (time, kind, seq)
            if time < self._last_event[0] or (stamp < self._last_event and seq < self._last_event[2]):
                self.audit["causality"] += 1
            self._last_event = stamp
            if self.warming and time > 0:
                self.warming = False
            if kind == EventKind.PACKET_ARRIVAL:
                u = payload
                self._refresh()
                emb, outcome, delay = self._classified[u]
                self._check_packet(u, emb, outcome, delay)
                records[u].append(PacketRecord(u, time, outcome, delay))
                nxt = time + self._next_gap(u, arrivals)
                if nxt < T:
                    self._push(nxt, EventKind.PACKET_ARRIVAL, u)
                continue
            self.now = time
            self._integrate(time)
            if kind == EventKind.LIFECYCLE_COMPLETE:
                vnf, cloud, src = payload
                inst = self.instances[(vnf, cloud)]
                if inst.in_flight is None or inst.in_flight[1] != time or inst.state != src:
                    self.audit["interrupted"] += 1
                    continue
                dst = inst.in_flight[0]
                complete_transition(inst, time, self.net.edge_cloud(cloud), self.table)
                self.prep_counts[(src, dst)] += 1
                self.state_counts[src] -= 1
                self.state_counts[dst] += 1
                self.version += 1
                self._reconcile(cloud)
                if dst is S.RUNNING:
                    # a replacement came up; superseded copies may now stand down
                    for other in sorted({k[1] for k in self.instances if k[0] == vnf and k[1] != cloud}):
                        self._reconcile(other)
            elif kind == EventKind.MOBILITY_TICK:
                self.tick_index = payload
                for u, user in self.users.items():
                    pos = self.traces.positions[u][payload]
                    user.position = (float(pos[0]), float(pos[1]))
                    bs = self.traces.attachments[u][payload]
                    if user.attached_bs not in (-1, bs):
                        self.handovers += 1
                    user.attached_bs = bs
                self.version += 1
            elif kind == EventKind.DECISION_EPOCH:
                plan = self._plan()
                if plan is not None:
                    self._apply(plan)
            self._audit_capacity()
        self._integrate(T)
        return self._report(records)

    def _next_gap(self, u: int, arrivals: dict) -> float:
        rng, it = arrivals[u]
        gap = next(it, None)
        if gap is None:
            it = iter(rng.exponential(1.0 / self.users[u].lambda_u, size=4096).tolist())
            arrivals[u] = (rng, it)
            gap = next(it)
        return gap

    def _report(self, records: dict[int, list[PacketRecord]]) -> MetricsReport:
        users = sorted(self.users)
        T = self.scenario.duration
        packets = {u: len(records[u]) for u in users}
        late = {u: sum(r.outcome is Outcome.LATE_DELAY for r in records[u]) for u in users}
        missing = {u: sum(r.outcome is Outcome.NOT_RUNNING for r in records[u]) for u in users}
        unsuccessful = {u: late[u] + missing[u] for u in users}
        burst_map = {u: bursts(records[u], 1.0 / self.users[u].lambda_u) for u in users}
        occupancy = {s: (self.occupancy[s] / T if T > 0 else 0.0) for s in S if s is not S.DESCRIPTOR}
        flat = [r for u in users for r in records[u]] if self.record_packets else []
        flat.sort(key=lambda r: (r.time, r.user))
        return MetricsReport(
            duration=T,
            users=users,
            packets=packets,
            unsuccessful=unsuccessful,
            late_delay=late,
            not_running=missing,
            bursts=burst_map,
            vnf_prep_counts=dict(sorted(self.prep_counts.items())),
            state_occupancy=occupancy,
            handovers=self.handovers,
            audit=dict(self.audit),
            records=flat,
        )


def run(scenario: Scenario, seed: int, traces: Traces | None = None, record_packets: bool = True) -> MetricsReport:
    """Simulate ``scenario`` over [0, duration) with ``seed``."""
    return Simulation(scenario, seed, traces, record_packets).run()
