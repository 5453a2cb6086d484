"""Ad hoc on-demand distance vector routing.

:class:`OnDemandAgent` holds what AODV and AOMDV share: HELLO beacons,
neighbour liveness, the RREQ duplicate cache and the discovery/retry loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..mac import Drop
from .core import (Action, DataPacket, Hello, Rerr, Rrep, Rreq, RoutingAgent,
                   RoutingParams)


@dataclass(frozen=True)
class AodvParams:
    active_route_timeout_s: float = 10.0
    allowed_hello_loss: int = 2
    rreq_retries: int = 2
    node_traversal_time_s: float = 0.04
    path_discovery_time_s: float = 5.6

    def __post_init__(self):
        if self.active_route_timeout_s <= 0 or self.node_traversal_time_s <= 0:
            raise ValueError("AODV timers must be positive")
        if self.allowed_hello_loss < 1 or self.rreq_retries < 0:
            raise ValueError("allowed_hello_loss >= 1 and rreq_retries >= 0 required")

    def net_traversal_time(self, net_diameter: int) -> float:
        return 2.0 * self.node_traversal_time_s * net_diameter


def neighbor_timeout(hello_interval_s: float, allowed_hello_loss: int) -> float:
    return allowed_hello_loss * hello_interval_s


@dataclass
class AodvEntry:
    destination: int
    dest_seqno: int
    hop_count: int
    next_hop: int
    lifetime_expiry: float
    seqno_known: bool = True
    valid: bool = True
    precursors: set = field(default_factory=set)


class OnDemandAgent(RoutingAgent):
    params_cls = AodvParams

    def __init__(self, node_id, net, params: RoutingParams, hello_interval_s=1.0, proto_params=None):
        super().__init__(node_id, net, params, hello_interval_s)
        if not hello_interval_s > 0:
            raise ValueError("hello interval must be positive")
        self.p = proto_params or self.params_cls()
        self.seqno = 0
        self.rreq_id = 0
        self.neighbors: dict[int, float] = {}
        self.rreq_seen: dict[tuple[int, int], float] = {}
        # dest -> [attempt, timer handle]
        self.discovery: dict[int, list] = {}
        self.rreq_originated = 0
        self.net_traversal = self.p.net_traversal_time(params.net_diameter)
        self.hello_timeout = neighbor_timeout(hello_interval_s, self.p.allowed_hello_loss)

    def start(self):
        phase = self.net.routing_rng[self.id].uniform(0.0, self.hello_interval_s)
        self.net.engine.schedule(phase, self._hello_tick, target=self.id)

    # neighbour maintenance

    def _hello_tick(self):
        if self.dead:
            return
        self.net.broadcast(self.id, Hello(self.id, self.seqno))
        self._check_neighbors()
        self.net.engine.after(self.hello_interval_s, self._hello_tick, target=self.id)

    def _check_neighbors(self):
        now = self.now
        lost = [n for n, t in self.neighbors.items() if now - t > self.hello_timeout]
        for n in lost:
            self.on_link_failure(n)

    def on_heard(self, frm):
        self.neighbors[frm] = self.now

    # discovery loop

    def request_route(self, dest: int):
        if dest not in self.discovery:
            self.originate_rreq(dest, 0)

    def originate_rreq(self, dest: int, attempt: int):
        self.rreq_id += 1
        self.seqno += 1
        seq, known = self.known_dest_seqno(dest)
        rreq = Rreq(origin=self.id, rreq_id=self.rreq_id, dest=dest, origin_seqno=self.seqno,
                    dest_seqno=seq, dest_seqno_known=known, hop_count=0)
        self.rreq_seen[(self.id, self.rreq_id)] = self.now + self.p.path_discovery_time_s
        self.rreq_originated += 1
        self.net.broadcast(self.id, rreq)
        wait = self.net_traversal * (2 ** attempt)
        handle = self.net.engine.after(wait, self._discovery_timeout, dest, target=self.id)
        self.discovery[dest] = [attempt, handle]

    def _discovery_timeout(self, dest):
        state = self.discovery.get(dest)
        if state is None or self.dead:
            return
        if self.has_route(dest):
            self.discovery_complete(dest)
            return
        attempt = state[0]
        if attempt < self.p.rreq_retries:
            self.originate_rreq(dest, attempt + 1)
            return
        del self.discovery[dest]
        for data in self.pending.take(dest):
            self.net.drop(self.id, data, Drop.NO_ROUTE)

    def discovery_complete(self, dest):
        state = self.discovery.pop(dest, None)
        if state is not None:
            state[1].cancel()
        for data in self.pending.take(dest):
            self._route_data(data, originated=True)

    def seen_rreq(self, rreq: Rreq) -> bool:
        key = (rreq.origin, rreq.rreq_id)
        exp = self.rreq_seen.get(key)
        if exp is not None and exp >= self.now:
            return True
        self.rreq_seen[key] = self.now + self.p.path_discovery_time_s
        if len(self.rreq_seen) > 512:
            now = self.now
            self.rreq_seen = {k: v for k, v in self.rreq_seen.items() if v >= now}
        return False

    def on_receive(self, packet, frm):
        if self.dead:
            return
        kind = packet.kind
        if kind == "HELLO":
            self.process_hello(packet, frm)
        elif kind == "RREQ":
            self.process_rreq(packet, frm)
        elif kind == "RREP":
            self.process_rrep(packet, frm)
        elif kind == "RERR":
            self.process_rerr(packet, frm)

    def send_rerr(self, unreachable, precursors):
        if not unreachable or not precursors:
            return
        rerr = Rerr(unreachable=unreachable, origin=self.id)
        if len(precursors) == 1:
            self.net.unicast(self.id, next(iter(precursors)), rerr)
        else:
            self.net.broadcast(self.id, rerr)

    # protocol-specific hooks
    def has_route(self, dest) -> bool:
        raise NotImplementedError

    def known_dest_seqno(self, dest) -> tuple[int, bool]:
        raise NotImplementedError


class AodvAgent(OnDemandAgent):
    protocol = "AODV"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.routes: dict[int, AodvEntry] = {}

    # route table

    def valid_route(self, dest) -> AodvEntry | None:
        e = self.routes.get(dest)
        if e is None or not e.valid:
            return None
        if e.lifetime_expiry < self.now:
            self.invalidate(e)
            return None
        return e

    def has_route(self, dest):
        return self.valid_route(dest) is not None

    def known_dest_seqno(self, dest):
        e = self.routes.get(dest)
        if e is None or not e.seqno_known:
            return 0, False
        return e.dest_seqno, True

    def invalidate(self, e: AodvEntry, seqno: int | None = None):
        # every invalidation strictly raises the stored seqno so a stale
        # equal-seqno route cannot be re-adopted later
        e.valid = False
        if not e.seqno_known and seqno is None:
            return
        bumped = e.dest_seqno + 1
        e.dest_seqno = bumped if seqno is None else max(bumped, seqno)
        e.seqno_known = True

    def update_route(self, dest, seqno, hop_count, next_hop, lifetime) -> bool:
        """RFC 3561 freshness rules; returns True when the entry changed."""
        now = self.now
        e = self.routes.get(dest)
        if e is None:
            self.routes[dest] = AodvEntry(dest, seqno, hop_count, next_hop, now + lifetime)
            return True
        if (not e.seqno_known or seqno > e.dest_seqno
                or (seqno == e.dest_seqno and (not e.valid or hop_count < e.hop_count))):
            was_valid = e.valid
            e.dest_seqno = seqno
            e.seqno_known = True
            e.hop_count = hop_count
            e.next_hop = next_hop
            e.valid = True
            e.lifetime_expiry = max(e.lifetime_expiry, now + lifetime) if was_valid else now + lifetime
            return True
        if e.valid and seqno == e.dest_seqno and next_hop == e.next_hop:
            e.lifetime_expiry = max(e.lifetime_expiry, now + lifetime)
        return False

    def touch_neighbor_route(self, nb):
        """Route to the previous hop of any control packet (sequence number unknown)."""
        now = self.now
        life = self.p.active_route_timeout_s
        e = self.routes.get(nb)
        if e is None:
            self.routes[nb] = AodvEntry(nb, 0, 1, nb, now + life, seqno_known=False)
        elif e.valid and e.next_hop == nb and e.hop_count == 1:
            e.lifetime_expiry = max(e.lifetime_expiry, now + life)
        else:
            e.hop_count = 1
            e.next_hop = nb
            e.valid = True
            e.seqno_known = False
            e.lifetime_expiry = now + life

    # data plane

    def forward_data(self, data: DataPacket, frm=None):
        e = self.valid_route(data.dst)
        if e is not None:
            if frm is not None:
                self._check_monotone(data, e)
            life = self.now + self.p.active_route_timeout_s
            e.lifetime_expiry = max(e.lifetime_expiry, life)
            rev = self.routes.get(data.src)
            if rev is not None and rev.valid:
                rev.lifetime_expiry = max(rev.lifetime_expiry, life)
            data.route_tag = (e.dest_seqno, e.hop_count) if e.seqno_known else None
            return Action.SEND, e.next_hop
        if frm is None:
            self.buffer(data)
            self.request_route(data.dst)
            return Action.QUEUE_PENDING_ROUTE, None
        stale = self.routes.get(data.dst)
        seq = stale.dest_seqno if stale is not None else 0
        self.net.unicast(self.id, frm, Rerr(unreachable=[(data.dst, seq)], origin=self.id))
        return Action.DROP, Drop.NO_ROUTE

    def _check_monotone(self, data, e):
        tag = data.route_tag
        if tag is None or not e.seqno_known:
            return
        seq, hc = tag
        ok = e.dest_seqno > seq or (e.dest_seqno == seq and e.hop_count < hc)
        self.net.monitor.route_tag(self, data, ok)

    def check_route_tag(self, data):
        tag = data.route_tag
        if tag is None:
            return
        self.net.monitor.route_tag(self, data, self.seqno >= tag[0] and tag[1] > 0)

    # control plane

    def process_hello(self, hello: Hello, frm):
        self.update_route(frm, hello.seqno, 1, frm, self.hello_timeout)

    def process_rreq(self, rreq: Rreq, frm):
        """Returns the action taken: ``"REPLY"``, ``"REBROADCAST"`` or ``"DISCARD"``."""
        if rreq.origin == self.id:
            return "DISCARD"
        if self.seen_rreq(rreq):
            return "DISCARD"
        self.touch_neighbor_route(frm)
        self.update_route(rreq.origin, rreq.origin_seqno, rreq.hop_count + 1, frm,
                          self.p.active_route_timeout_s)
        rev = self.routes[rreq.origin]
        if rreq.dest == self.id:
            if rreq.dest_seqno_known:
                self.seqno = max(self.seqno, rreq.dest_seqno)
            rrep = Rrep(origin=rreq.origin, dest=self.id, dest_seqno=self.seqno, hop_count=0,
                        lifetime=self.p.active_route_timeout_s)
            self.net.unicast(self.id, frm, rrep)
            return "REPLY"
        e = self.valid_route(rreq.dest)
        if (e is not None and e.seqno_known
                and (not rreq.dest_seqno_known or e.dest_seqno >= rreq.dest_seqno)):
            e.precursors.add(frm)
            rev.precursors.add(e.next_hop)
            rrep = Rrep(origin=rreq.origin, dest=rreq.dest, dest_seqno=e.dest_seqno,
                        hop_count=e.hop_count, lifetime=e.lifetime_expiry - self.now)
            self.net.unicast(self.id, frm, rrep)
            return "REPLY"
        if rreq.hop_count + 1 >= self.params.net_diameter:
            return "DISCARD"
        seq, known = rreq.dest_seqno, rreq.dest_seqno_known
        mine = self.routes.get(rreq.dest)
        if mine is not None and mine.seqno_known and (not known or mine.dest_seqno > seq):
            seq, known = mine.dest_seqno, True
        fwd = rreq.relay(hop_count=rreq.hop_count + 1, dest_seqno=seq, dest_seqno_known=known)
        self.net.broadcast(self.id, fwd, delay=self.jitter())
        return "REBROADCAST"

    def process_rrep(self, rrep: Rrep, frm):
        self.touch_neighbor_route(frm)
        lifetime = max(rrep.lifetime, self.p.active_route_timeout_s)
        changed = self.update_route(rrep.dest, rrep.dest_seqno, rrep.hop_count + 1, frm, lifetime)
        if rrep.origin == self.id:
            if self.has_route(rrep.dest):
                self.discovery_complete(rrep.dest)
            return "ESTABLISHED" if changed else "IGNORED"
        if not changed:
            return "IGNORED"
        rev = self.valid_route(rrep.origin)
        if rev is None:
            return "NO_REVERSE_ROUTE"
        fwd = self.routes[rrep.dest]
        fwd.precursors.add(rev.next_hop)
        rev.precursors.add(frm)
        self.net.unicast(self.id, rev.next_hop, rrep.relay(hop_count=rrep.hop_count + 1))
        return "FORWARDED"

    def process_rerr(self, rerr: Rerr, frm):
        unreachable = []
        precursors = set()
        for dest, seq in rerr.unreachable:
            e = self.routes.get(dest)
            if e is not None and e.valid and e.next_hop == frm:
                self.invalidate(e, seq)
                if e.precursors:
                    unreachable.append((dest, e.dest_seqno))
                    precursors |= e.precursors
        self.send_rerr(unreachable, precursors)

    def on_link_failure(self, neighbor):
        self.neighbors.pop(neighbor, None)
        unreachable = []
        precursors = set()
        for dest, e in self.routes.items():
            if e.valid and e.next_hop == neighbor:
                self.invalidate(e)
                if e.precursors:
                    unreachable.append((dest, e.dest_seqno))
                    precursors |= e.precursors
        precursors.discard(neighbor)
        self.send_rerr(unreachable, precursors)
