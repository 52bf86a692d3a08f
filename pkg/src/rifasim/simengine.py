"""Deterministic discrete-event kernel: event queue, unit-disk channel,
random-waypoint node motion, CBR traffic, energy accounting, and metrics.

A run is strictly single-threaded. All randomness flows from the scenario
seed through named substreams (init / channel / protocol / per-node
mobility), so identical (scenario, seed) pairs replay identically and runs
that differ only in protocol behavior share the same node trajectories.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import energy as energymod
from . import kernels
from .mobility import draw_leg
from .routing import (CONTROL_PACKET_BYTES, DATA, HELLO, PROTOCOLS, ControlPacket)
from .scenario import Scenario, resolved_flow_count

# Event kinds, dispatched in (time, insertion order). Names per the external
# event-log interface.
EV_DELIVERY = 0   # PacketDelivery
EV_HELLO = 1      # HelloTimer
EV_MOBILITY = 2   # MobilityTick
EV_TRAFFIC = 3    # TrafficTick (generation, drain, and discovery-retry ticks)
EV_EXPIRY = 4     # NeighborExpiryCheck
EV_LINKCHECK = 5  # LinkCheck
EV_END = 6        # SimEnd

KIND_NAMES = {
    EV_DELIVERY: "PacketDelivery",
    EV_HELLO: "HelloTimer",
    EV_MOBILITY: "MobilityTick",
    EV_TRAFFIC: "TrafficTick",
    EV_EXPIRY: "NeighborExpiryCheck",
    EV_LINKCHECK: "LinkCheck",
    EV_END: "SimEnd",
}

MAX_PENDING_PER_FLOW = 4096
DRAIN_INTERVAL = 0.01
RREQ_RETRY_INTERVAL = 1.0

# A transmission whose receiver turns out unreachable costs the sender this
# many packet-equivalents in total (link-layer retries before giving up).
MAC_RETRY_FACTOR = 3.0


class InvariantViolation(AssertionError):
    """A protocol safety invariant was broken during a checked run."""


@dataclass(frozen=True)
class ChannelModel:
    """Unit-disk radio: delivery iff within tr at send time and the loss draw passes."""

    tr: float = 200.0
    per_hop_latency: float = 0.002
    loss_probability: float = 0.01


@dataclass
class MetricsAccumulator:
    """Counters and per-packet timestamps feeding the PDR/E2ED/Econs formulas."""

    packets_sent: int = 0
    packets_received: int = 0
    per_packet_times: dict = field(default_factory=dict)  # pid -> [send, recv|None]
    debit_total: float = 0.0
    debit_count: int = 0
    counters: dict = field(default_factory=dict)

    def count(self, name, k=1):
        self.counters[name] = self.counters.get(name, 0) + k


def pdr(acc: MetricsAccumulator):
    """Packet delivery ratio in percent; None marks the no-traffic case."""
    if acc.packets_sent == 0:
        return None
    return 100.0 * acc.packets_received / acc.packets_sent


def e2ed(acc: MetricsAccumulator):
    """Mean end-to-end delay of delivered data packets, in milliseconds."""
    delays = [t[1] - t[0] for t in acc.per_packet_times.values() if t[1] is not None]
    if not delays:
        return None
    return 1000.0 * sum(delays) / len(delays)


@dataclass
class MetricsReport:
    protocol: str
    seed: int
    node_count: int
    sim_duration_s: float
    pdr_percent: float | None
    e2ed_ms: float | None
    econs_joules: float
    packets_sent: int
    packets_received: int
    routes_discovered: int
    warnings_emitted: int
    deaths: int
    event_count: int
    event_log_sha256: str
    counters: dict
    node_residuals: list
    axis_name: str = ""
    axis_value: float | None = None

    def to_text(self) -> str:
        lines = []
        for key in ("protocol", "seed", "node_count", "sim_duration_s", "axis_name",
                    "axis_value", "pdr_percent", "e2ed_ms", "econs_joules",
                    "packets_sent", "packets_received", "routes_discovered",
                    "warnings_emitted", "deaths", "event_count", "event_log_sha256"):
            value = getattr(self, key)
            if value is None:
                value = "no-data"
            lines.append(f"{key} = {value!r}" if isinstance(value, str) else f"{key} = {value}")
        for name in sorted(self.counters):
            lines.append(f"counter.{name} = {self.counters[name]}")
        lines.append("node_residuals = " + ",".join(repr(r) for r in self.node_residuals))
        return "\n".join(lines) + "\n"


@dataclass
class RunOptions:
    """Per-run switches that do not belong in the scenario itself."""

    log_events: bool = False
    event_sink: list | None = None       # collects structured records; implies log_events
    check_invariants: bool = False
    collect_debits: bool = False
    initial_positions: list | None = None  # test/experiment hook: [(x, y), ...]
    initial_energies: list | None = None   # test/experiment hook: [joules, ...]


@dataclass
class EngineConfig:
    tr: float
    hello_interval: float
    warning_margin: float
    opi_weights: tuple
    deposit_quantum: float
    initial_pheromone: float
    prediction_enabled: bool
    rreq_retry_interval: float
    data_bytes: int
    control_bytes: int


class SimNode:
    __slots__ = ("id", "energy", "proto", "rng", "alive", "last_touch",
                 "pending_target", "pending_speed")

    def __init__(self, nid, energy_state, rng):
        self.id = nid
        self.energy = energy_state
        self.proto = None
        self.rng = rng
        self.alive = True
        self.last_touch = 0.0
        self.pending_target = (0.0, 0.0)
        self.pending_speed = 0.0


class Flow:
    __slots__ = ("idx", "src", "dst", "rate", "start", "remaining", "pending",
                 "drain_scheduled", "overflowed")

    def __init__(self, idx, src, dst, rate, start, remaining):
        self.idx = idx
        self.src = src
        self.dst = dst
        self.rate = rate
        self.start = start
        self.remaining = remaining  # None = CBR until sim end, else burst countdown
        self.pending = deque()
        self.drain_scheduled = False
        self.overflowed = 0


class InvariantChecker:
    """Inline safety assertions for fuzzed runs (criterion-9 style checks)."""

    def __init__(self, energy_gate=True):
        self.energy_gate = energy_gate
        self.rreq_forwards = {}

    def _loop_free(self, path):
        if len(set(path)) != len(path):
            raise InvariantViolation(f"loop in carried path {path}")

    def _gate(self, node, action):
        if self.energy_gate and energymod.classify(node.energy) == energymod.DANGER:
            raise InvariantViolation(
                f"danger node {node.id} performed {action} at residual {node.energy.residual}")

    def note_rreq_forward(self, node, path, key):
        self._loop_free(path)
        self._gate(node, "rreq-forward")
        k = (node.id,) + key
        seen = self.rreq_forwards.get(k, 0) + 1
        self.rreq_forwards[k] = seen
        if seen > 1:
            raise InvariantViolation(f"node {node.id} forwarded rreq {key} {seen} times")

    def note_rrep_originate(self, node, path):
        self._loop_free(path)
        self._gate(node, "rrep-originate")

    def note_table(self, node, table, now):
        for dest, entries in table.routes.items():
            live = [e for e in entries if e.live(now)]
            for i, a in enumerate(live):
                self._loop_free(a.path)
                for b in live[i + 1:]:
                    if a.links & b.links:
                        raise InvariantViolation(
                            f"node {node.id} holds non-disjoint routes to {dest}: "
                            f"{a.path} / {b.path}")


class Engine:
    """One simulation run; also acts as the service facade handed to protocols."""

    def __init__(self, scenario: Scenario, options: RunOptions | None = None):
        self.scenario = scenario
        self.options = options or RunOptions()
        if self.options.event_sink is not None:
            self.options.log_events = True
        self.logging = self.options.log_events
        self.checker = InvariantChecker(energy_gate=scenario.protocol == "rifa") \
            if self.options.check_invariants else None

        s = scenario
        n = s.node_count
        self.channel = ChannelModel(s.range_m, s.per_hop_latency_s, s.loss_probability)
        self.cost_model = energymod.RadioCostModel(s.tx_cost_j, s.rx_cost_j, s.idle_cost_j_per_s)
        margin = s.warning_margin_s if s.warning_margin_s is not None \
            else s.hello_interval_s + 0.5
        self.cfg = EngineConfig(
            tr=s.range_m, hello_interval=s.hello_interval_s, warning_margin=margin,
            opi_weights=tuple(s.opi_weights), deposit_quantum=s.deposit_quantum,
            initial_pheromone=s.initial_pheromone, prediction_enabled=s.prediction_enabled,
            rreq_retry_interval=RREQ_RETRY_INTERVAL, data_bytes=s.packet_size_bytes,
            control_bytes=s.control_packet_bytes)

        root = np.random.SeedSequence(s.seed)
        children = root.spawn(3 + n)
        self.init_rng = np.random.Generator(np.random.PCG64(children[0]))
        self.channel_rng = np.random.Generator(np.random.PCG64(children[1]))
        self.protocol_rng = np.random.Generator(np.random.PCG64(children[2]))

        # motion legs: position(now) = (x0 + vx*(now-t0), y0 + vy*(now-t0))
        self.mx0 = np.empty(n)
        self.my0 = np.empty(n)
        self.mvx = np.zeros(n)
        self.mvy = np.zeros(n)
        self.mt0 = np.zeros(n)
        self.alive_mask = np.ones(n, dtype=bool)

        self.now = 0.0
        self.heap: list = []
        self._tiebreak = 0
        self.acc = MetricsAccumulator()
        self.debits: list | None = [] if self.options.collect_debits else None
        self._hasher = hashlib.sha256()
        self.event_count = 0
        self._next_pid = 0
        self._deaths = 0

        self._init_nodes(children[3:])
        self._init_flows()
        self._init_timers()

    # -- setup ---------------------------------------------------------------

    def _init_nodes(self, mobility_seeds):
        s = self.scenario
        n = s.node_count
        area = s.area()
        if self.options.initial_positions is not None:
            pos = list(self.options.initial_positions)
        else:
            pos = [(float(self.init_rng.uniform(0.0, area.width)),
                    float(self.init_rng.uniform(0.0, area.height))) for _ in range(n)]

        threshold = s.danger_threshold_fraction * s.initial_energy_j
        energies = [s.initial_energy_j] * n
        if self.options.initial_energies is not None:
            energies = list(self.options.initial_energies)
        elif s.danger_fraction > 0:
            weak_count = int(round(s.danger_fraction * n))
            weak = sorted(int(i) for i in self.init_rng.permutation(n)[:weak_count])
            for i in weak:
                energies[i] = float(self.init_rng.uniform(0.3, 0.9)) * threshold

        proto_cls = PROTOCOLS[s.protocol]
        self.nodes = []
        for i in range(n):
            rng = np.random.Generator(np.random.PCG64(mobility_seeds[i]))
            node = SimNode(i, energymod.EnergyState(energies[i], energies[i], threshold), rng)
            node.proto = proto_cls(node, self)
            self.nodes.append(node)
            self.mx0[i], self.my0[i] = pos[i]

        for node in self.nodes:
            self._begin_at(node, self.mx0[node.id], self.my0[node.id], 0.0)

    def _init_flows(self):
        s = self.scenario
        count = resolved_flow_count(s)
        burst = None
        if s.traffic_kind == "filesize":
            burst = max(1, math.ceil(s.file_size_kb * 1024 / s.packet_size_bytes))
        self.flows = []
        self.flows_by_pair = {}
        if 2 * count <= s.node_count:
            # distinct endpoints: no node plays source or sink for two flows
            chosen = self.init_rng.permutation(s.node_count)[:2 * count]
            pairs = [(int(chosen[2 * i]), int(chosen[2 * i + 1])) for i in range(count)]
        else:
            pairs = []
            for _ in range(count):
                src = int(self.init_rng.integers(0, s.node_count))
                dst = src
                while dst == src:
                    dst = int(self.init_rng.integers(0, s.node_count))
                pairs.append((src, dst))
        for i, (src, dst) in enumerate(pairs):
            flow = Flow(i, src, dst, s.cbr_rate_pps, s.traffic_start_s + 0.1 * i, burst)
            self.flows.append(flow)
            self.flows_by_pair.setdefault((src, dst), []).append(flow)

    def _init_timers(self):
        s = self.scenario
        self._push(s.sim_duration_s, EV_END, -1, None)
        offsets = self.init_rng.uniform(0.0, s.hello_interval_s, s.node_count)
        for node in self.nodes:
            off = float(offsets[node.id])
            self._push(off, EV_HELLO, node.id, None)
            self._push(off + 0.5 * s.hello_interval_s, EV_EXPIRY, node.id, None)
            if s.protocol == "rifa" and s.prediction_enabled:
                self._push(off + 0.25 * s.hello_interval_s, EV_LINKCHECK, node.id, None)
        for flow in self.flows:
            self._push(flow.start, EV_TRAFFIC, flow.src, ("gen", flow.idx))

    # -- event queue -----------------------------------------------------------

    def _push(self, time, kind, nid, payload):
        self._tiebreak += 1
        heapq.heappush(self.heap, (time, self._tiebreak, kind, nid, payload))

    # -- mobility -----------------------------------------------------------------

    def _begin_at(self, node, x, y, now):
        """Node just arrived at (x, y): draw pause/target/speed, start the next leg."""
        pause, target, speed = draw_leg(x, y, self.scenario.area(),
                                        self.scenario.speed_range,
                                        self.scenario.pause_range, node.rng)
        i = node.id
        if pause > 0:
            self.mx0[i] = x
            self.my0[i] = y
            self.mvx[i] = 0.0
            self.mvy[i] = 0.0
            self.mt0[i] = now
            node.pending_target = target
            node.pending_speed = speed
            if self.logging:
                self.log("leg", now, i, x, y, 0.0, 0.0)
            self._push(now + pause, EV_MOBILITY, i, "unpause")
        else:
            self._begin_move(node, x, y, target, speed, now)

    def _begin_move(self, node, x, y, target, speed, now):
        i = node.id
        dx = target[0] - x
        dy = target[1] - y
        dist = math.hypot(dx, dy)
        self.mx0[i] = x
        self.my0[i] = y
        self.mt0[i] = now
        if speed <= 0.0 or dist < 1e-9:
            # static node (or a zero-length leg): parks here for good
            self.mvx[i] = 0.0
            self.mvy[i] = 0.0
            if self.logging:
                self.log("leg", now, i, x, y, 0.0, 0.0)
            return
        self.mvx[i] = speed * dx / dist
        self.mvy[i] = speed * dy / dist
        if self.logging:
            self.log("leg", now, i, x, y, self.mvx[i], self.mvy[i])
        self._push(now + dist / speed, EV_MOBILITY, i, ("arrive", target))

    def _on_mobility(self, node, payload, now):
        if payload == "unpause":
            self._begin_move(node, self.mx0[node.id], self.my0[node.id],
                             node.pending_target, node.pending_speed, now)
        else:
            target = payload[1]
            self._begin_at(node, target[0], target[1], now)

    def kin_of(self, nid):
        dt = self.now - self.mt0[nid]
        return (self.mx0[nid] + self.mvx[nid] * dt,
                self.my0[nid] + self.mvy[nid] * dt,
                self.mvx[nid], self.mvy[nid])

    # -- energy ----------------------------------------------------------------

    def _touch(self, node, now):
        dt = now - node.last_touch
        node.last_touch = now
        if dt > 0.0 and node.alive:
            self._debit(node, energymod.IDLE, dt, now)

    def _debit(self, node, kind, amount, now):
        if not node.alive:  # death can strike mid-handler; later debits are moot
            return
        e = node.energy
        before = e.residual
        energymod.debit(e, kind, amount, self.cost_model)
        used = before - e.residual
        if used > 0.0:
            self.acc.debit_total += used
            self.acc.debit_count += 1
            if self.debits is not None:
                self.debits.append((node.id, kind, used))
            if self.logging:
                self.log("debit", now, node.id, kind, used)
        if e.dead:
            self._kill(node, now)

    def _kill(self, node, now):
        if not node.alive:
            return
        node.alive = False
        self.alive_mask[node.id] = False
        self._deaths += 1
        self.count("deaths")
        if self.logging:
            self.log("death", now, node.id)

    # -- channel -----------------------------------------------------------------

    def _stamp_kin(self, pkt, nid):
        dt = self.now - self.mt0[nid]
        pkt.sender_x = self.mx0[nid] + self.mvx[nid] * dt
        pkt.sender_y = self.my0[nid] + self.mvy[nid] * dt
        pkt.sender_vx = self.mvx[nid]
        pkt.sender_vy = self.mvy[nid]

    def broadcast(self, sender, pkt):
        if not sender.alive:
            return
        now = self.now
        self._stamp_kin(pkt, sender.id)
        self._touch(sender, now)
        self._debit(sender, energymod.TX, pkt.payload_size / 512.0, now)
        ids = kernels.in_range_ids(self.mx0, self.my0, self.mvx, self.mvy, self.mt0,
                                   self.alive_mask, now, sender.id, self.channel.tr)
        if ids.size == 0:
            return
        draws = self.channel_rng.random(ids.size)
        loss = self.channel.loss_probability
        for k in range(ids.size):
            if draws[k] < loss:
                self.count("channel_losses")
                continue
            rid = int(ids[k])
            payload = (pkt, sender.id, self._dist_for_log(sender.id, rid)) \
                if self.logging else (pkt, sender.id, None)
            self._push(now + self.channel.per_hop_latency, EV_DELIVERY, rid, payload)

    def unicast(self, sender, pkt, rid) -> bool:
        """Send to one receiver. False means the sender can tell the link is
        gone (out of range or dead next hop); random channel loss stays silent."""
        if not sender.alive:
            return False
        now = self.now
        self._stamp_kin(pkt, sender.id)
        self._touch(sender, now)
        self._debit(sender, energymod.TX, pkt.payload_size / 512.0, now)
        receiver = self.nodes[rid]
        size_units = pkt.payload_size / 512.0
        if not receiver.alive:
            self._debit(sender, energymod.TX, (MAC_RETRY_FACTOR - 1.0) * size_units, now)
            return False
        dt = now - self.mt0[rid]
        dx = self.mx0[rid] + self.mvx[rid] * dt - pkt.sender_x
        dy = self.my0[rid] + self.mvy[rid] * dt - pkt.sender_y
        if dx * dx + dy * dy > self.channel.tr * self.channel.tr:
            self._debit(sender, energymod.TX, (MAC_RETRY_FACTOR - 1.0) * size_units, now)
            return False
        if self.channel_rng.random() < self.channel.loss_probability:
            self.count("channel_losses")
            return True
        payload = (pkt, sender.id, self._dist_for_log(sender.id, rid)) \
            if self.logging else (pkt, sender.id, None)
        self._push(now + self.channel.per_hop_latency, EV_DELIVERY, rid, payload)
        return True

    def _dist_for_log(self, sid, rid):
        sx, sy, _, _ = self.kin_of(sid)
        rx, ry, _, _ = self.kin_of(rid)
        return (math.hypot(rx - sx, ry - sy), sx, sy, rx, ry)

    def _on_delivery(self, receiver, payload, now):
        pkt, sender_id, distinfo = payload
        if not receiver.alive:
            self.count("delivery_to_dead")
            return
        self._touch(receiver, now)
        if not receiver.alive:
            return
        self._debit(receiver, energymod.RX, pkt.payload_size / 512.0, now)
        if not receiver.alive:  # the reception itself drained the battery
            return
        if self.logging:
            dist, sx, sy, rx, ry = distinfo
            self.log("delivery", now, receiver.id, sender_id, pkt.variant,
                     pkt.packet_id, dist, sx, sy, rx, ry)
        receiver.proto.on_packet(pkt, now)

    # -- traffic ----------------------------------------------------------------

    def _on_traffic(self, nid, payload, now):
        kind = payload[0]
        if kind == "gen":
            flow = self.flows[payload[1]]
            src = self.nodes[flow.src]
            if not src.alive:
                return
            pid = self._next_pid
            self._next_pid += 1
            self.acc.packets_sent += 1
            self.acc.per_packet_times[pid] = [now, None]
            if len(flow.pending) >= MAX_PENDING_PER_FLOW:
                flow.overflowed += 1
                self.count("buffer_overflow")
            else:
                flow.pending.append((pid, now))
            if flow.remaining is not None:
                flow.remaining -= 1
            self._pump(flow, now)
            if flow.remaining is None or flow.remaining > 0:
                self._push(now + 1.0 / flow.rate, EV_TRAFFIC, flow.src, ("gen", flow.idx))
        elif kind == "drain":
            flow = self.flows[payload[1]]
            flow.drain_scheduled = False
            self._pump(flow, now)
        else:  # discovery retry tick
            _, dest, seq = payload
            node = self.nodes[nid]
            if not node.alive:
                return
            node.proto.on_discovery_timeout(dest, seq, now)
            for flow in self.flows_by_pair.get((nid, dest), ()):
                if flow.pending:
                    self._pump(flow, now)

    def _pump(self, flow, now):
        """Push the head-of-line packet out if a route exists; else keep discovery warm."""
        if not flow.pending:
            return
        src = self.nodes[flow.src]
        if not src.alive:
            return
        route = src.proto.ensure_route(flow.dst, now)
        if route is None:
            return
        pid, tgen = flow.pending.popleft()
        pkt = ControlPacket(DATA, flow.src, flow.dst, packet_id=pid,
                            payload_size=self.cfg.data_bytes, origin_timestamp=tgen)
        if not src.proto.send_from_source(pkt, route, now):
            # first hop failed before the packet left the node; keep it queued
            flow.pending.appendleft((pid, tgen))
        if flow.pending and not flow.drain_scheduled:
            flow.drain_scheduled = True
            self._push(now + DRAIN_INTERVAL, EV_TRAFFIC, flow.src, ("drain", flow.idx))

    # -- protocol services ----------------------------------------------------------

    def count(self, name, k=1):
        self.acc.count(name, k)

    def log(self, kind, t, nid, *fields):
        rec = (kind, t, nid) + fields
        self._hasher.update(repr(rec).encode())
        self.event_count += 1
        if self.options.event_sink is not None:
            self.options.event_sink.append(rec)

    def schedule_discovery_timeout(self, nid, dest, seq, at):
        self._push(at, EV_TRAFFIC, nid, ("disc", dest, seq))

    def on_route_available(self, nid, dest):
        # paced a drain-interval out, so a failing route cannot spin the
        # pump at a single timestamp
        for flow in self.flows_by_pair.get((nid, dest), ()):
            if flow.pending and not flow.drain_scheduled:
                flow.drain_scheduled = True
                self._push(self.now + DRAIN_INTERVAL, EV_TRAFFIC, nid, ("drain", flow.idx))

    def on_route_lost(self, nid, dest):
        if (nid, dest) in self.flows_by_pair:
            self.nodes[nid].proto.ensure_discovery(dest, self.now)

    def deliver_data(self, pkt, now):
        self.acc.packets_received += 1
        times = self.acc.per_packet_times.get(pkt.packet_id)
        if times is not None:
            times[1] = now
        self.count("data_delivered")
        if self.logging:
            self.log("data_deliver", now, pkt.route[-1], pkt.packet_id,
                     pkt.origin_timestamp)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> MetricsReport:
        heap = self.heap
        nodes = self.nodes
        while heap:
            t, _, kind, nid, payload = heapq.heappop(heap)
            self.now = t
            if kind == EV_DELIVERY:
                self._on_delivery(nodes[nid], payload, t)
            elif kind == EV_HELLO:
                node = nodes[nid]
                if not node.alive:
                    continue
                self._touch(node, t)
                if not node.alive:
                    continue
                pkt = ControlPacket(HELLO, nid, -1, origin_timestamp=t,
                                    payload_size=self.cfg.control_bytes)
                self.broadcast(node, pkt)
                self._push(t + self.cfg.hello_interval, EV_HELLO, nid, None)
            elif kind == EV_MOBILITY:
                self._on_mobility(nodes[nid], payload, t)
            elif kind == EV_TRAFFIC:
                self._on_traffic(nid, payload, t)
            elif kind == EV_EXPIRY:
                node = nodes[nid]
                if node.alive:
                    node.proto.on_neighbor_expiry(t)
                    self._push(t + self.cfg.hello_interval, EV_EXPIRY, nid, None)
            elif kind == EV_LINKCHECK:
                node = nodes[nid]
                if node.alive:
                    node.proto.on_link_check(t)
                    self._push(t + self.cfg.hello_interval, EV_LINKCHECK, nid, None)
            else:  # EV_END
                break
        end = self.scenario.sim_duration_s
        self.now = end
        for node in nodes:
            if node.alive:
                self._touch(node, end)
        return self._report()

    def _report(self) -> MetricsReport:
        states = [n.energy for n in self.nodes]
        return MetricsReport(
            protocol=self.scenario.protocol,
            seed=self.scenario.seed,
            node_count=self.scenario.node_count,
            sim_duration_s=self.scenario.sim_duration_s,
            pdr_percent=pdr(self.acc),
            e2ed_ms=e2ed(self.acc),
            econs_joules=energymod.network_energy_consumed(states),
            packets_sent=self.acc.packets_sent,
            packets_received=self.acc.packets_received,
            routes_discovered=self.acc.counters.get("routes_discovered", 0),
            warnings_emitted=self.acc.counters.get("warnings_emitted", 0),
            deaths=self._deaths,
            event_count=self.event_count,
            event_log_sha256=self._hasher.hexdigest() if self.logging else "",
            counters=dict(self.acc.counters),
            node_residuals=[s.residual for s in states],
        )


def run_scenario(scenario: Scenario, options: RunOptions | None = None) -> MetricsReport:
    """Validate nothing, simulate everything: one deterministic engine run."""
    return Engine(scenario, options).run()
