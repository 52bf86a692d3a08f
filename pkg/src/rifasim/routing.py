"""Per-node routing state machines.

Three protocols over the same engine services:

* ``rifa`` - energy-gated flooding with link-disjoint multipath replies,
  composite route scoring (lifetime/energy/hops), pheromone-proportional
  tie-breaking, and preemptive link-failure warnings.
* ``baseline-flood`` - classic single-route on-demand source routing: first
  RREQ copy forwarded unconditionally, destination answers the first copy
  only, repair purely reactive via RERR.
* ``baseline-minhop`` - multipath link-disjoint discovery like rifa but no
  energy gate and pure min-hop selection.

Protocols talk to the engine through a small facade: ``unicast``/``broadcast``
for the channel, ``count``/``log`` for bookkeeping, ``schedule_discovery_timeout``
and ``on_route_available``/``on_route_lost`` for the traffic pump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import energy as energymod
from .mobility import link_expiry_from_components
from .pheromone import PheromoneTable, select_path

RREQ = "rreq"
RREP = "rrep"
RERR = "rerr"
HELLO = "hello"
LINK_WARNING = "warning"
DATA = "data"

INNER = "inner"
MIDDLE = "middle"
OUTER = "outer"

CONTROL_PACKET_BYTES = 64

# A warning with no usable backup pre-arms a fresh discovery; this spacing
# keeps persistently marginal links from flooding every margin window.
PREARM_MIN_INTERVAL = 4.0

# Selecting a route older than this (or one already warned) kicks off a
# background refresh discovery: the stale route keeps carrying traffic, but
# only until something fresher lands.
STALE_ROUTE_REFRESH_AGE = 4.0

# Stand-in for an infinite path lifetime when min-max normalizing scores.
LIFETIME_NORM_CAP = 1e6

SEEN_RREQ_TTL = 30.0  # dedupe state pruned after this many seconds
ACTIVE_FLOW_WINDOW = 2.0  # a relayed flow counts as active this long after its last packet

# Link-expiry estimates through marginal links can be arbitrarily small; a
# floor keeps freshly discovered routes usable long enough to carry traffic
# instead of expiring into instant rediscovery. Breaks past the estimate cost
# one packet and an RERR, far less than another network-wide flood.
ROUTE_LIFETIME_FLOOR = 5.0

MAX_DISCOVERY_BACKOFF = 16.0  # cap for the failed-discovery retry interval

# A cached route may answer a discovery only while this fresh. Stale cached
# replies splice in paths that have already drifted apart, and because an
# answering node does not re-forward the request, eager cache replies also
# truncate floods before they can reach the destination for a fresh answer.
CACHE_REPLY_MAX_AGE = 0.25


class NoRouteError(LookupError):
    """No live route toward the requested destination."""


def range_zone(dist: float, tr: float) -> str:
    """Classify a neighbor by distance thirds of the transmission range."""
    if dist < tr / 3.0:
        return INNER
    if dist < 2.0 * tr / 3.0:
        return MIDDLE
    return OUTER


@dataclass(slots=True)
class ControlPacket:
    """One simulated frame; `variant` selects which fields are meaningful.

    `traversed_path` carries the accumulated RREQ path (and, on an RREP, the
    physically retraced prefix); DATA/RREP/RERR carry their full source route
    in `route` and walk it with `hop_index`. `sender_*` piggyback the
    transmitter's kinematics at send time so receivers can estimate link
    expiry without extra state.
    """

    variant: str
    source: int
    destination: int
    sequence: int = 0
    traversed_path: tuple = ()
    min_residual_energy_on_path: float = math.inf
    min_link_expiry_on_path: float = math.inf
    payload_size: int = CONTROL_PACKET_BYTES
    origin_timestamp: float = 0.0
    packet_id: int = -1
    route: tuple = ()
    hop_index: int = 0
    broken_link: tuple | None = None
    affected_destination: int = -1
    from_destination: bool = False
    salvaged: bool = False  # data packets may be re-routed mid-path once
    sender_x: float = 0.0
    sender_y: float = 0.0
    sender_vx: float = 0.0
    sender_vy: float = 0.0


@dataclass(slots=True)
class NeighborEntry:
    """What a node knows about one neighbor from its last Hello."""

    neighbor: int
    last_hello_time: float
    kin: tuple  # (x, y, vx, vy) at hello send time
    link_expiry_estimate: float
    zone: str


@dataclass(slots=True)
class RouteEntry:
    """A discovered source route plus the attributes scoring needs.

    `usable` clears on hard evidence (a failed transmission); `warned` is the
    soft form set by link-failure predictions: the route is avoided whenever
    an unwarned alternative exists but may still carry data until the
    replacement arrives.
    """

    path: tuple
    hop_count: int
    path_lifetime: float
    min_residual_energy: float
    discovered_at: float
    priority_score: float = 0.0
    in_use: bool = False
    usable: bool = True
    warned: bool = False
    links: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.links:
            self.links = frozenset(zip(self.path, self.path[1:]))

    def expired(self, now: float) -> bool:
        return now - self.discovered_at >= self.path_lifetime

    def live(self, now: float) -> bool:
        return self.usable and not self.expired(now)


class RoutingTable:
    """Routes per destination plus the discovery dedupe sets."""

    __slots__ = ("routes", "seen_rreqs", "rreps_answered")

    def __init__(self):
        self.routes: dict[int, list[RouteEntry]] = {}
        self.seen_rreqs: dict[tuple, float] = {}
        self.rreps_answered: set[tuple] = set()

    def live_routes(self, dest: int, now: float) -> list[RouteEntry]:
        return [e for e in self.routes.get(dest, ()) if e.live(now)]

    # A conflicting stored route younger than this still counts as fresh and
    # blocks the incoming one (the same discovery round); older conflicting
    # backups are superseded by newer information.
    FRESH_CONFLICT_AGE = 1.0

    def install(self, dest: int, entry: RouteEntry, now: float,
                keep_multipath: bool = True) -> str:
        """Add a route, keeping the per-destination list mutually link-disjoint.

        Dead entries are dropped first; an identical path refreshes in place.
        A link conflict with the in-use route or a fresh entry rejects the
        newcomer; conflicts with stale unused backups evict those backups
        instead, since the newcomer carries newer topology.
        Returns "installed", "refreshed", or "rejected".
        """
        current = [e for e in self.routes.get(dest, ()) if e.live(now)]
        for e in current:
            if e.path == entry.path:
                e.path_lifetime = entry.path_lifetime
                e.min_residual_energy = entry.min_residual_energy
                e.discovered_at = entry.discovered_at
                self.routes[dest] = current
                return "refreshed"
        if not keep_multipath:
            self.routes[dest] = [entry]
            return "installed"
        conflicts = [e for e in current if e.links & entry.links]
        for e in conflicts:
            if e.in_use or now - e.discovered_at <= self.FRESH_CONFLICT_AGE:
                self.routes[dest] = current
                return "rejected"
        kept = [e for e in current if e not in conflicts]
        kept.append(entry)
        self.routes[dest] = kept
        return "installed"

    def invalidate_link(self, a: int, b: int) -> int:
        """Mark every route using the physical link a-b (either direction) unusable."""
        hit = 0
        for entries in self.routes.values():
            for e in entries:
                if e.usable and ((a, b) in e.links or (b, a) in e.links):
                    e.usable = False
                    e.in_use = False
                    hit += 1
        return hit

    def warn_link(self, a: int, b: int) -> int:
        """Soft-retire routes over the link a-b: avoided, but not yet dead."""
        hit = 0
        for entries in self.routes.values():
            for e in entries:
                if e.usable and not e.warned and ((a, b) in e.links or (b, a) in e.links):
                    e.warned = True
                    hit += 1
        return hit

    def prune(self, now: float):
        for key in [k for k, t0 in self.seen_rreqs.items() if now - t0 > SEEN_RREQ_TTL]:
            del self.seen_rreqs[key]
            self.rreps_answered = {k for k in self.rreps_answered if k[:2] != key}


def _lifetime_left(entry: RouteEntry, now) -> float:
    value = entry.path_lifetime
    if now is not None:
        value -= now - entry.discovered_at
    return min(value, LIFETIME_NORM_CAP)


def route_priority(entry: RouteEntry, weights, candidates=None, now=None) -> float:
    """Composite score: weighted min-max-normalized lifetime and energy plus 1/hops.

    Normalization is over the candidate set at selection time; a factor that
    is constant across candidates normalizes to 1. With `now` given, the
    lifetime factor is the life *remaining* at selection, so older entries
    score below fresh ones with equal estimates. Higher is better.
    """
    cands = candidates if candidates else [entry]
    w_lt, w_en, w_hp = weights

    def norm(x, values):
        lo = min(values)
        hi = max(values)
        if hi <= lo:
            return 1.0
        return (x - lo) / (hi - lo)

    lts = [_lifetime_left(c, now) for c in cands]
    ens = [c.min_residual_energy for c in cands]
    lt = norm(_lifetime_left(entry, now), lts)
    en = norm(entry.min_residual_energy, ens)
    return w_lt * lt + w_en * en + w_hp / entry.hop_count


def select_route(table: RoutingTable, dest: int, now: float, weights, rng,
                 pheromone_intensities=None, deposit_quantum=1.0,
                 default_intensity=1.0) -> RouteEntry:
    """Highest-priority live route; exact score ties break pheromone-proportionally."""
    cands = table.live_routes(dest, now)
    if not cands:
        raise NoRouteError(f"no live route toward {dest}")
    unwarned = [e for e in cands if not e.warned]
    if unwarned:
        cands = unwarned
    scores = [route_priority(e, weights, cands, now) for e in cands]
    for e, s in zip(cands, scores):
        e.priority_score = s
    best = max(scores)
    tied = [e for e, s in zip(cands, scores) if abs(s - best) <= 1e-12]
    if len(tied) == 1 or pheromone_intensities is None:
        chosen = tied[0]
    else:
        intensities = {e.path: pheromone_intensities.get(e.path, default_intensity)
                       for e in tied}
        picked = select_path(PheromoneTable(intensities, deposit_quantum), rng)
        chosen = next(e for e in tied if e.path == picked)
    for e in cands:
        e.in_use = e is chosen
    return chosen


@dataclass(slots=True)
class DiscoveryState:
    sequence: int = 0
    outstanding: bool = False
    failures: int = 0  # consecutive unanswered floods, drives retry backoff


class RoutingProtocol:
    """State and handlers shared by every protocol variant."""

    uses_energy_gate = False
    uses_link_metrics = False
    multipath = False
    prediction = False

    def __init__(self, node, env):
        self.node = node
        self.env = env
        self.table = RoutingTable()
        self.neighbors: dict[int, NeighborEntry] = {}
        self.discovery: dict[int, DiscoveryState] = {}
        self.seq = 0
        self.ctrl_bytes = env.cfg.control_bytes
        # (src, seq) -> [(prev_hop, link set)] of paths already answered here
        self.answered: dict[tuple, list] = {}
        self.answered_times: dict[tuple, float] = {}

    # -- dispatch ----------------------------------------------------------

    def on_packet(self, pkt: ControlPacket, now: float):
        v = pkt.variant
        if v == DATA:
            self.on_data(pkt, now)
        elif v == HELLO:
            self.on_hello(pkt, now)
        elif v == RREQ:
            self.on_rreq(pkt, now)
        elif v == RREP:
            self.on_rrep(pkt, now)
        elif v == RERR or v == LINK_WARNING:
            self.on_route_error(pkt, now)

    # -- neighbor maintenance ----------------------------------------------

    def on_hello(self, pkt: ControlPacket, now: float):
        me = self.node
        x, y, vx, vy = self.env.kin_of(me.id)
        dx = x - pkt.sender_x
        dy = y - pkt.sender_y
        dist = math.sqrt(dx * dx + dy * dy)
        tr = self.env.cfg.tr
        let = link_expiry_from_components(x, y, vx, vy, pkt.sender_x, pkt.sender_y,
                                          pkt.sender_vx, pkt.sender_vy, tr)
        entry = self.neighbors.get(pkt.source)
        if entry is None:
            entry = NeighborEntry(pkt.source, now,
                                  (pkt.sender_x, pkt.sender_y, pkt.sender_vx, pkt.sender_vy),
                                  let, range_zone(dist, tr))
            self.neighbors[pkt.source] = entry
        else:
            entry.last_hello_time = now
            entry.kin = (pkt.sender_x, pkt.sender_y, pkt.sender_vx, pkt.sender_vy)
            entry.link_expiry_estimate = let
            entry.zone = range_zone(dist, tr)
        self._after_hello(entry, now)

    def _after_hello(self, entry: NeighborEntry, now: float):
        pass

    def on_neighbor_expiry(self, now: float):
        ttl = 2.0 * self.env.cfg.hello_interval
        stale = [nid for nid, e in self.neighbors.items() if now - e.last_hello_time > ttl]
        for nid in stale:
            del self.neighbors[nid]
        self.table.prune(now)
        for key in [k for k, t0 in self.answered_times.items() if now - t0 > SEEN_RREQ_TTL]:
            self.answered.pop(key, None)
            del self.answered_times[key]

    # -- discovery ----------------------------------------------------------

    def ensure_route(self, dest: int, now: float) -> RouteEntry | None:
        """Route toward dest if one is live; otherwise kick off discovery."""
        try:
            return self.select(dest, now)
        except NoRouteError:
            self.ensure_discovery(dest, now)
            return None

    def select(self, dest: int, now: float) -> RouteEntry:
        raise NotImplementedError

    def ensure_discovery(self, dest: int, now: float):
        st = self.discovery.setdefault(dest, DiscoveryState())
        if st.outstanding:
            return
        self.seq += 1
        st.sequence = self.seq
        st.outstanding = True
        residual = self.node.energy.residual
        pkt = ControlPacket(RREQ, self.node.id, dest, sequence=self.seq,
                            traversed_path=(self.node.id,),
                            min_residual_energy_on_path=residual,
                            min_link_expiry_on_path=math.inf,
                            payload_size=self.ctrl_bytes, origin_timestamp=now)
        self.env.count("rreq_originated")
        if self.env.logging:
            self.env.log("rreq_origin", now, self.node.id, self.node.id, self.seq, residual)
        self.env.broadcast(self.node, pkt)
        backoff = min(self.env.cfg.rreq_retry_interval * 2.0 ** st.failures,
                      MAX_DISCOVERY_BACKOFF)
        self.env.schedule_discovery_timeout(self.node.id, dest, self.seq, now + backoff)

    def on_discovery_timeout(self, dest: int, seq: int, now: float):
        st = self.discovery.get(dest)
        if st is not None and st.sequence == seq and st.outstanding:
            st.outstanding = False
            st.failures += 1

    def discovery_satisfied(self, dest: int):
        st = self.discovery.get(dest)
        if st is not None:
            st.outstanding = False
            st.failures = 0

    # -- data path -----------------------------------------------------------

    def on_data(self, pkt: ControlPacket, now: float):
        me = self.node.id
        route = pkt.route
        if me == route[-1]:
            self.env.deliver_data(pkt, now)
            return
        idx = pkt.hop_index + 1  # we sit one past the hop that sent to us
        nxt = route[idx + 1]
        pkt.hop_index = idx
        if self.env.unicast(self.node, pkt, nxt):
            self.env.count("data_forwarded")
            self._after_data_forward(pkt, nxt, now)
        else:
            self.env.count("data_broken_link")
            self._report_broken_link(pkt, me, nxt, idx, now)

    def send_from_source(self, pkt: ControlPacket, route: RouteEntry, now: float) -> bool:
        """First hop of a data packet at its source."""
        pkt.route = route.path
        pkt.hop_index = 0
        nxt = route.path[1]
        if self.env.unicast(self.node, pkt, nxt):
            self._after_data_forward(pkt, nxt, now)
            return True
        self.env.count("data_broken_link")
        self._report_broken_link(pkt, self.node.id, nxt, 0, now)
        return False

    def _after_data_forward(self, pkt: ControlPacket, nxt: int, now: float):
        pass

    def _report_broken_link(self, pkt: ControlPacket, a: int, b: int, idx: int, now: float):
        """Geometric forwarding failure: invalidate local state, tell the source."""
        self.table.invalidate_link(a, b)
        flow_dest = pkt.route[-1]
        if a == pkt.source:
            self.handle_route_failure(flow_dest, (a, b), now)
            return
        back = tuple(reversed(pkt.route[:idx + 1]))  # a .. source
        rerr = ControlPacket(RERR, a, pkt.source, route=back, hop_index=0,
                             broken_link=(a, b), affected_destination=flow_dest,
                             payload_size=self.ctrl_bytes, origin_timestamp=now)
        self.env.count("rerr_emitted")
        if self.env.logging:
            self.env.log("rerr", now, a, pkt.source, flow_dest, a, b)
        if len(back) > 1:
            self.env.unicast(self.node, rerr, back[1])

    def on_route_error(self, pkt: ControlPacket, now: float):
        """Shared RERR / link-warning walk back toward the flow source."""
        me = self.node.id
        a, b = pkt.broken_link
        soft = pkt.variant == LINK_WARNING
        if soft:
            self.table.warn_link(a, b)
        else:
            self.table.invalidate_link(a, b)
        if me == pkt.destination:
            if soft:
                self.env.count("warnings_received")
                self.handle_link_warning(pkt.affected_destination, (a, b), now)
            else:
                self.handle_route_failure(pkt.affected_destination, (a, b), now)
            return
        idx = pkt.hop_index + 1  # our position on the walk-back route
        if idx + 1 < len(pkt.route):
            pkt.hop_index = idx
            self.env.unicast(self.node, pkt, pkt.route[idx + 1])

    def handle_route_failure(self, dest: int, link: tuple, now: float):
        """At the flow source: drop affected routes, switch or rediscover."""
        if dest < 0:
            return
        self.table.invalidate_link(link[0], link[1])
        if self.table.live_routes(dest, now):
            self.env.count("route_switch")
            self.env.on_route_available(self.node.id, dest)
        else:
            self.env.on_route_lost(self.node.id, dest)

    def handle_link_warning(self, dest: int, link: tuple, now: float):
        """Predicted failure at the flow source: move traffic off the route.

        With an unwarned backup the switch is immediate and silent; with none
        a fresh discovery starts while the warned route keeps carrying data
        until its replacement lands (or it actually breaks).
        """
        if dest < 0:
            return
        self.table.warn_link(link[0], link[1])
        if any(not e.warned for e in self.table.live_routes(dest, now)):
            self.env.count("route_switch")
            self.env.on_route_available(self.node.id, dest)
        else:
            self.env.on_route_lost(self.node.id, dest)

    # -- to be provided by variants ------------------------------------------

    def on_rreq(self, pkt: ControlPacket, now: float):
        raise NotImplementedError

    def on_rrep(self, pkt: ControlPacket, now: float):
        raise NotImplementedError

    def on_link_check(self, now: float):
        pass

    def _deposit_hook(self, dest: int, path: tuple):
        pass

    # -- shared RREQ helpers ---------------------------------------------------

    def _rreq_echo(self, pkt: ControlPacket) -> bool:
        me = self.node.id
        return me == pkt.source or me in pkt.traversed_path

    def _rreq_malformed(self, pkt: ControlPacket) -> bool:
        path = pkt.traversed_path
        if len(set(path)) != len(path):
            self.env.count("rreq_malformed")
            return True
        return False

    def _answer_at_destination(self, pkt: ControlPacket, now: float,
                               min_energy: float, min_let: float):
        """Distinct-previous-hop, link-disjoint multipath answering rule."""
        me = self.node.id
        key = (pkt.source, pkt.sequence)
        prev = pkt.traversed_path[-1]
        answered = self.answered.setdefault(key, [])
        self.answered_times[key] = now
        if any(prev == p for p, _ in answered):
            self.env.count("rrep_dup_prevhop")
            return
        full = pkt.traversed_path + (me,)
        links = frozenset(zip(full, full[1:]))
        if any(links & l for _, l in answered):
            self.env.count("rrep_not_disjoint")
            return
        if not self.multipath and answered:
            self.env.count("rrep_single_answered")
            return
        answered.append((prev, links))
        self._deposit_hook(me, full)
        rrep = ControlPacket(RREP, pkt.source, me, sequence=pkt.sequence,
                             traversed_path=full, route=full,
                             hop_index=len(full) - 1,
                             min_residual_energy_on_path=min_energy,
                             min_link_expiry_on_path=min_let,
                             payload_size=self.ctrl_bytes,
                             origin_timestamp=now, from_destination=True)
        self.env.count("rrep_originated")
        if self.env.logging:
            self.env.log("rrep_origin", now, me, pkt.source, pkt.sequence, 1,
                         min_energy, full)
        if self.env.checker is not None:
            self.env.checker.note_rrep_originate(self.node, full)
        self.env.unicast(self.node, rrep, full[-2])

    def _forward_rrep(self, pkt: ControlPacket, now: float):
        """Walk an RREP one hop back toward the flow source.

        The transmitter left `hop_index` at its own position, so we sit at
        hop_index - 1. Only nodes that forwarded the matching RREQ (and hence
        hold its reverse route) may relay.
        """
        me = self.node.id
        if (pkt.source, pkt.sequence) not in self.table.seen_rreqs:
            self.env.count("rrep_no_reverse")
            return
        idx = pkt.hop_index - 1
        if idx < 1 or idx >= len(pkt.route) or pkt.route[idx] != me:
            self.env.count("rrep_off_path")
            return
        self._cache_from_rrep(pkt, idx, now)
        pkt.hop_index = idx
        self.env.count("rrep_forwarded")
        self.env.unicast(self.node, pkt, pkt.route[idx - 1])

    def _cache_from_rrep(self, pkt: ControlPacket, my_idx: int, now: float):
        pass

    def _install_at_source(self, pkt: ControlPacket, now: float):
        raise NotImplementedError


class FloodRouting(RoutingProtocol):
    """Single-route reactive source routing: no gate, no link metrics."""

    multipath = False

    def on_rreq(self, pkt, now):
        if self._rreq_echo(pkt):
            return
        me = self.node.id
        key = (pkt.source, pkt.sequence)
        if me == pkt.destination:
            if not self._rreq_malformed(pkt):
                self._answer_at_destination(pkt, now, math.inf, math.inf)
            return
        if key in self.table.seen_rreqs:
            self.env.count("rreq_duplicate")
            return
        if self._rreq_malformed(pkt):
            return
        self.table.seen_rreqs[key] = now
        fwd = ControlPacket(RREQ, pkt.source, pkt.destination, sequence=pkt.sequence,
                            traversed_path=pkt.traversed_path + (me,),
                            payload_size=self.ctrl_bytes,
                            origin_timestamp=pkt.origin_timestamp)
        self.env.count("rreq_forwarded")
        if self.env.logging:
            self.env.log("rreq_fwd", now, me, pkt.source, pkt.sequence,
                         self.node.energy.residual)
        if self.env.checker is not None:
            self.env.checker.note_rreq_forward(self.node, fwd.traversed_path, key)
        self.env.broadcast(self.node, fwd)

    def on_rrep(self, pkt, now):
        if self.node.id == pkt.source:  # the flow source this reply answers
            self._install_at_source(pkt, now)
            return
        self._forward_rrep(pkt, now)

    def _install_at_source(self, pkt, now):
        entry = RouteEntry(pkt.route, len(pkt.route) - 1, math.inf, math.inf, now)
        status = self.table.install(pkt.destination, entry, now, keep_multipath=False)
        if status != "rejected":
            self.env.count("routes_discovered")
            if self.env.logging:
                self.env.log("route_install", now, self.node.id, pkt.destination,
                             entry.hop_count, entry.path_lifetime,
                             entry.min_residual_energy, entry.path)
            if self.env.checker is not None:
                self.env.checker.note_table(self.node, self.table, now)
        self.discovery_satisfied(pkt.destination)
        self.env.on_route_available(self.node.id, pkt.destination)

    def select(self, dest, now):
        cands = self.table.live_routes(dest, now)
        if not cands:
            raise NoRouteError(f"no live route toward {dest}")
        chosen = min(cands, key=lambda e: e.hop_count)
        for e in cands:
            e.in_use = e is chosen
        return chosen


class MinhopRouting(FloodRouting):
    """Link-disjoint multipath discovery with pure min-hop selection."""

    multipath = True

    def _install_at_source(self, pkt, now):
        entry = RouteEntry(pkt.route, len(pkt.route) - 1, math.inf, math.inf, now)
        status = self.table.install(pkt.destination, entry, now, keep_multipath=True)
        if status == "installed":
            self.env.count("routes_discovered")
            if self.env.logging:
                self.env.log("route_install", now, self.node.id, pkt.destination,
                             entry.hop_count, entry.path_lifetime,
                             entry.min_residual_energy, entry.path)
            if self.env.checker is not None:
                self.env.checker.note_table(self.node, self.table, now)
        elif status == "rejected":
            self.env.count("route_rejected_disjoint")
        if status != "rejected":
            self.discovery_satisfied(pkt.destination)
            self.env.on_route_available(self.node.id, pkt.destination)


class RifaRouting(RoutingProtocol):
    """Energy-gated multipath discovery with scoring, pheromone, and prediction."""

    uses_energy_gate = True
    uses_link_metrics = True
    multipath = True

    def __init__(self, node, env):
        super().__init__(node, env)
        self.pheromone: dict[int, dict[tuple, float]] = {}
        # (flow src, flow dest) -> [next hop, reversed prefix back to src, last forward time]
        self.forwarded_flows: dict[tuple, list] = {}
        self.warned: dict[tuple, float] = {}
        self.last_prearm: dict[int, float] = {}
        self.prediction = env.cfg.prediction_enabled

    # -- pheromone -----------------------------------------------------------

    def _deposit(self, dest: int, path: tuple):
        store = self.pheromone.setdefault(dest, {})
        store[path] = store.get(path, self.env.cfg.initial_pheromone) + self.env.cfg.deposit_quantum

    _deposit_hook = _deposit

    # -- RREQ ------------------------------------------------------------------

    def on_rreq(self, pkt, now):
        if self._rreq_echo(pkt):
            return
        me = self.node.id
        if energymod.classify(self.node.energy) == energymod.DANGER:
            self.env.count("rreq_discard_danger")
            if self.env.logging:
                self.env.log("discard", now, me, "danger")
            return
        key = (pkt.source, pkt.sequence)
        if me != pkt.destination:
            if key in self.table.seen_rreqs:
                self.env.count("rreq_duplicate")
                return
        if self._rreq_malformed(pkt):
            return
        x, y, vx, vy = self.env.kin_of(me)
        let_in = link_expiry_from_components(x, y, vx, vy, pkt.sender_x, pkt.sender_y,
                                             pkt.sender_vx, pkt.sender_vy, self.env.cfg.tr)
        min_let = min(pkt.min_link_expiry_on_path, let_in)
        min_energy = min(pkt.min_residual_energy_on_path, self.node.energy.residual)
        if me == pkt.destination:
            self._answer_at_destination(pkt, now, min_energy, min_let)
            return
        self.table.seen_rreqs[key] = now
        if self._answer_from_neighborhood(pkt, min_energy, min_let, now):
            return
        if self._answer_from_cache(pkt, min_energy, min_let, now):
            return
        fwd = ControlPacket(RREQ, pkt.source, pkt.destination, sequence=pkt.sequence,
                            traversed_path=pkt.traversed_path + (me,),
                            min_residual_energy_on_path=min_energy,
                            min_link_expiry_on_path=min_let,
                            payload_size=self.ctrl_bytes,
                            origin_timestamp=pkt.origin_timestamp)
        self.env.count("rreq_forwarded")
        if self.env.logging:
            self.env.log("rreq_fwd", now, me, pkt.source, pkt.sequence,
                         self.node.energy.residual)
        if self.env.checker is not None:
            self.env.checker.note_rreq_forward(self.node, fwd.traversed_path, key)
        self.env.broadcast(self.node, fwd)

    def _answer_from_neighborhood(self, pkt, min_energy, min_let, now) -> bool:
        """Answer when the requested destination is our own fresh hello-neighbor.

        The one-hop link estimate from the hello stream is the freshest route
        knowledge in the network, and it keeps destinations reachable whose
        own replies are energy-gated: the reply originates here, not there.
        """
        me = self.node.id
        dst = pkt.destination
        entry = self.neighbors.get(dst)
        if entry is None:
            return False
        remaining = entry.link_expiry_estimate - (now - entry.last_hello_time)
        if now - entry.last_hello_time > 2.0 * self.env.cfg.hello_interval or remaining <= 0:
            return False
        prefix = pkt.traversed_path + (me,)
        if dst in prefix:
            return False
        full = prefix + (dst,)
        key = (pkt.source, pkt.sequence, full)
        if key in self.table.rreps_answered:
            return False
        self.table.rreps_answered.add(key)
        self._deposit(dst, full)
        rrep = ControlPacket(RREP, pkt.source, dst, sequence=pkt.sequence,
                             traversed_path=prefix, route=full,
                             hop_index=len(prefix) - 1,
                             min_residual_energy_on_path=min_energy,
                             min_link_expiry_on_path=min(min_let, remaining),
                             payload_size=self.ctrl_bytes,
                             origin_timestamp=now, from_destination=False)
        self.env.count("rrep_originated")
        self.env.count("rrep_from_neighborhood")
        if self.env.logging:
            self.env.log("rrep_origin", now, me, pkt.source, pkt.sequence, 0,
                         min_energy, full)
        if self.env.checker is not None:
            self.env.checker.note_rrep_originate(self.node, full)
        self.env.unicast(self.node, rrep, prefix[-2])
        return True

    def _answer_from_cache(self, pkt, min_energy, min_let, now) -> bool:
        """Gratuitous RREP from a cached forward route, if a fresh unused one exists."""
        me = self.node.id
        cands = [e for e in self.table.live_routes(pkt.destination, now)
                 if now - e.discovered_at <= CACHE_REPLY_MAX_AGE]
        if not cands:
            return False
        prefix = pkt.traversed_path + (me,)
        banned = set(prefix)
        for cached in sorted(cands, key=lambda e: e.hop_count):
            tail = cached.path[1:]
            if any(n in banned for n in tail):
                continue  # splice would loop
            full = prefix + tail
            key = (pkt.source, pkt.sequence, full)
            if key in self.table.rreps_answered:
                continue
            self.table.rreps_answered.add(key)
            self._deposit(pkt.destination, full)
            rrep = ControlPacket(RREP, pkt.source, pkt.destination, sequence=pkt.sequence,
                                 traversed_path=prefix, route=full,
                                 hop_index=len(prefix) - 1,
                                 min_residual_energy_on_path=min(min_energy, cached.min_residual_energy),
                                 min_link_expiry_on_path=min(min_let, cached.path_lifetime),
                                 payload_size=self.ctrl_bytes,
                                 origin_timestamp=now, from_destination=False)
            self.env.count("rrep_originated")
            self.env.count("rrep_from_cache")
            if self.env.logging:
                self.env.log("rrep_origin", now, me, pkt.source, pkt.sequence, 0,
                             rrep.min_residual_energy_on_path, full)
            if self.env.checker is not None:
                self.env.checker.note_rrep_originate(self.node, full)
            self.env.unicast(self.node, rrep, prefix[-2])
            return True
        return False

    # -- RREP ------------------------------------------------------------------

    def on_rrep(self, pkt, now):
        self._deposit(pkt.destination, pkt.route)
        if self.node.id == pkt.source:
            self._install_at_source(pkt, now)
            return
        self._forward_rrep(pkt, now)

    def _cache_from_rrep(self, pkt, my_idx, now):
        sub = pkt.route[my_idx:]
        if len(sub) < 2:
            return
        entry = RouteEntry(sub, len(sub) - 1,
                           max(pkt.min_link_expiry_on_path, ROUTE_LIFETIME_FLOOR),
                           pkt.min_residual_energy_on_path, now)
        self.table.install(pkt.destination, entry, now)
        if self.env.checker is not None:
            self.env.checker.note_table(self.node, self.table, now)

    def _install_at_source(self, pkt, now):
        entry = RouteEntry(pkt.route, len(pkt.route) - 1,
                           max(pkt.min_link_expiry_on_path, ROUTE_LIFETIME_FLOOR),
                           pkt.min_residual_energy_on_path, now)
        status = self.table.install(pkt.destination, entry, now)
        if status == "installed":
            self.env.count("routes_discovered")
            if self.env.logging:
                self.env.log("route_install", now, self.node.id, pkt.destination,
                             entry.hop_count, entry.path_lifetime,
                             entry.min_residual_energy, entry.path)
            if self.env.checker is not None:
                self.env.checker.note_table(self.node, self.table, now)
        elif status == "rejected":
            self.env.count("route_rejected_disjoint")
        if status != "rejected":
            self.discovery_satisfied(pkt.destination)
            self.env.on_route_available(self.node.id, pkt.destination)

    def select(self, dest, now):
        self._drop_dead_first_hops(dest, now)
        chosen = select_route(self.table, dest, now, self.env.cfg.opi_weights,
                              self.env.protocol_rng,
                              pheromone_intensities=self.pheromone.get(dest, {}),
                              deposit_quantum=self.env.cfg.deposit_quantum,
                              default_intensity=self.env.cfg.initial_pheromone)
        if chosen.warned or now - chosen.discovered_at > STALE_ROUTE_REFRESH_AGE:
            self.ensure_discovery(dest, now)  # refresh in the background
        return chosen

    def _drop_dead_first_hops(self, dest, now):
        """Retire routes whose first hop the Hello stream says is gone.

        The neighbor table already encodes first-hop liveness: an entry
        missing/evicted or with no estimated link time left means the next
        transmission would fail anyway, so spending a data packet to find
        out is waste.
        """
        ttl = 2.0 * self.env.cfg.hello_interval
        for e in self.table.routes.get(dest, ()):
            if not e.usable:
                continue
            entry = self.neighbors.get(e.path[1])
            if entry is None or now - entry.last_hello_time > ttl:
                e.usable = False  # the hello stream went silent: hard evidence
                e.in_use = False
            elif not e.warned and \
                    entry.link_expiry_estimate - (now - entry.last_hello_time) <= 0.0:
                e.warned = True  # estimate says the hop drifted out; soft evidence

    # -- link-failure prediction -------------------------------------------------

    def _after_data_forward(self, pkt, nxt, now):
        key = (pkt.source, pkt.route[-1])
        rec = self.forwarded_flows.get(key)
        back = tuple(reversed(pkt.route[:pkt.hop_index + 1]))
        if rec is None:
            self.forwarded_flows[key] = [nxt, back, now]
        else:
            rec[0] = nxt
            rec[1] = back
            rec[2] = now
        if self.prediction:
            self._predict_for_flow(key[0], key[1], nxt, back, now)

    def _report_broken_link(self, pkt, a, b, idx, now):
        """Salvage the in-flight packet over a cached route before giving up.

        The source still learns of the break (RERR from the base handler);
        salvage only spares the packet already committed to the broken path.
        One salvage per packet, so a stale cache cannot bounce it around.
        """
        if (pkt.variant == DATA and not pkt.salvaged and a != pkt.source
                and self._try_salvage(pkt, a, b, idx, now)):
            self.table.invalidate_link(a, b)
            flow_dest = pkt.route[-1]
            back = tuple(reversed(pkt.route[:idx + 1]))
            rerr = ControlPacket(RERR, a, pkt.source, route=back, hop_index=0,
                                 broken_link=(a, b), affected_destination=flow_dest,
                                 payload_size=self.ctrl_bytes, origin_timestamp=now)
            self.env.count("rerr_emitted")
            if len(back) > 1:
                self.env.unicast(self.node, rerr, back[1])
            return
        super()._report_broken_link(pkt, a, b, idx, now)

    def _try_salvage(self, pkt, a, b, idx, now) -> bool:
        dest = pkt.route[-1]
        prefix = pkt.route[:idx + 1]
        banned = set(prefix[:-1])
        self._drop_dead_first_hops(dest, now)
        for e in sorted(self.table.live_routes(dest, now), key=lambda e: e.hop_count):
            if e.warned or e.path[1] == b:
                continue
            if (a, b) in e.links or (b, a) in e.links:
                continue
            if any(n in banned for n in e.path[1:]):
                continue
            pkt.route = prefix + e.path[1:]
            pkt.salvaged = True
            if self.env.unicast(self.node, pkt, e.path[1]):
                self.env.count("data_salvaged")
                self._after_data_forward(pkt, e.path[1], now)
                return True
            e.usable = False
            e.in_use = False
            return False  # the alternative failed on contact; give up
        return False

    def predict_link_failure(self, entry: NeighborEntry, now: float) -> bool:
        """True when the estimated remaining link life is within the margin."""
        remaining = entry.link_expiry_estimate - (now - entry.last_hello_time)
        return remaining <= self.env.cfg.warning_margin

    def _predict_for_flow(self, fsrc, fdest, nxt, back, now):
        entry = self.neighbors.get(nxt)
        if entry is None or not self.predict_link_failure(entry, now):
            return
        key = (fsrc, fdest, nxt)
        last = self.warned.get(key)
        if last is not None and now - last < self.env.cfg.warning_margin:
            return
        self.warned[key] = now
        me = self.node.id
        self.env.count("warnings_emitted")
        if self.env.logging:
            self.env.log("warning", now, me, fsrc, fdest, me, nxt)
        if me == fsrc:
            self.handle_link_warning(fdest, (me, nxt), now)
            return
        warn = ControlPacket(LINK_WARNING, me, fsrc, route=back, hop_index=0,
                             broken_link=(me, nxt), affected_destination=fdest,
                             payload_size=self.ctrl_bytes, origin_timestamp=now)
        if len(back) > 1:
            self.env.unicast(self.node, warn, back[1])

    def handle_link_warning(self, dest, link, now):
        if dest < 0:
            return
        self.table.warn_link(link[0], link[1])
        if any(not e.warned for e in self.table.live_routes(dest, now)):
            self.env.count("route_switch")
            self.env.on_route_available(self.node.id, dest)
        elif now - self.last_prearm.get(dest, -math.inf) >= PREARM_MIN_INTERVAL:
            self.last_prearm[dest] = now
            self.env.on_route_lost(self.node.id, dest)

    def _after_hello(self, entry, now):
        if not self.prediction:
            return
        for (fsrc, fdest), rec in self.forwarded_flows.items():
            if rec[0] == entry.neighbor and now - rec[2] <= ACTIVE_FLOW_WINDOW:
                self._predict_for_flow(fsrc, fdest, rec[0], rec[1], now)

    def on_link_check(self, now: float):
        if not self.prediction:
            return
        for (fsrc, fdest), rec in list(self.forwarded_flows.items()):
            if now - rec[2] > ACTIVE_FLOW_WINDOW:
                continue
            self._predict_for_flow(fsrc, fdest, rec[0], rec[1], now)

    def on_neighbor_expiry(self, now):
        super().on_neighbor_expiry(now)
        for key in [k for k, t in self.warned.items() if now - t > SEEN_RREQ_TTL]:
            del self.warned[key]
        for key in [k for k, rec in self.forwarded_flows.items()
                    if now - rec[2] > SEEN_RREQ_TTL]:
            del self.forwarded_flows[key]


PROTOCOLS = {
    "rifa": RifaRouting,
    "baseline-flood": FloodRouting,
    "baseline-minhop": MinhopRouting,
}
