"""Ad hoc on-demand multipath distance vector routing.

Each destination keeps up to ``max_paths`` link-disjoint paths sharing one
sequence number.  Paths are used in discovery order as backups; a new
discovery only starts once every path to the destination is gone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..mac import Drop
from .aodv import AodvParams, OnDemandAgent
from .core import Action, DataPacket, Hello, Rrep, Rreq, Rerr


@dataclass(frozen=True)
class AomdvParams(AodvParams):
    max_paths: int = 3
    max_replies: int = 2

    def __post_init__(self):
        super().__post_init__()
        if self.max_paths < 1 or self.max_replies < 1:
            raise ValueError("max_paths and max_replies must be >= 1")


@dataclass
class PathRecord:
    next_hop: int
    last_hop: int
    hop_count: int
    expiry: float


@dataclass
class AomdvEntry:
    destination: int
    dest_seqno: int = -1
    advertised_hop_count: float = math.inf
    paths: list = field(default_factory=list)
    precursors: set = field(default_factory=set)

    def advertise(self) -> int:
        """Freeze the advertised hop count for the current seqno and return it."""
        if self.advertised_hop_count == math.inf and self.paths:
            self.advertised_hop_count = max(p.hop_count for p in self.paths)
        return int(self.advertised_hop_count)

    def is_disjoint(self, next_hop, last_hop) -> bool:
        return all(p.next_hop != next_hop and p.last_hop != last_hop for p in self.paths)


def aomdv_route_update(entry: AomdvEntry, seqno: int, hop_count: int, next_hop: int,
                       last_hop: int, expiry: float, max_paths: int = 3) -> bool:
    """Apply the multipath update rule for an advertisement ``(seqno, hop_count)``
    heard from ``next_hop``; returns True when a path was installed."""
    if seqno > entry.dest_seqno:
        entry.dest_seqno = seqno
        entry.advertised_hop_count = math.inf
        entry.paths = [PathRecord(next_hop, last_hop, hop_count + 1, expiry)]
        return True
    if seqno < entry.dest_seqno:
        return False
    if hop_count + 1 > entry.advertised_hop_count:
        return False
    for p in entry.paths:
        if p.next_hop == next_hop and p.last_hop == last_hop:
            p.expiry = max(p.expiry, expiry)
            return False
    if len(entry.paths) >= max_paths or not entry.is_disjoint(next_hop, last_hop):
        return False
    entry.paths.append(PathRecord(next_hop, last_hop, hop_count + 1, expiry))
    return True


def paths_consistent(entry: AomdvEntry) -> bool:
    """Brute-force check of the disjointness and hop-count invariants."""
    ps = entry.paths
    for i in range(len(ps)):
        if ps[i].hop_count > entry.advertised_hop_count:
            return False
        for j in range(i + 1, len(ps)):
            if ps[i].next_hop == ps[j].next_hop or ps[i].last_hop == ps[j].last_hop:
                return False
    return True


class AomdvAgent(OnDemandAgent):
    protocol = "AOMDV"
    params_cls = AomdvParams

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.routes: dict[int, AomdvEntry] = {}
        self.replies_sent: dict[tuple[int, int], int] = {}
        self.rrep_used: dict[tuple[int, int, int], set] = {}

    # route table

    def entry(self, dest) -> AomdvEntry:
        e = self.routes.get(dest)
        if e is None:
            e = self.routes[dest] = AomdvEntry(dest)
        return e

    def _live(self, p: PathRecord) -> bool:
        # a path stays usable while its next hop is heard
        if p.expiry >= self.now:
            return True
        t = self.neighbors.get(p.next_hop)
        return t is not None and self.now - t <= self.hello_timeout

    def select_path(self, dest) -> int | None:
        e = self.routes.get(dest)
        if e is None or not e.paths:
            return None
        live = [p for p in e.paths if self._live(p)]
        if len(live) != len(e.paths):
            e.paths = live
            if not live:
                self._lost_all(e)
                return None
        return live[0].next_hop

    def has_route(self, dest):
        return self.select_path(dest) is not None

    def known_dest_seqno(self, dest):
        e = self.routes.get(dest)
        if e is None or e.dest_seqno < 0:
            return 0, False
        return e.dest_seqno, True

    def _lost_all(self, e: AomdvEntry, seqno: int | None = None):
        e.dest_seqno = e.dest_seqno + 1 if seqno is None else max(e.dest_seqno + 1, seqno)
        e.advertised_hop_count = math.inf

    def update(self, dest, seqno, hop_count, next_hop, last_hop, lifetime) -> bool:
        e = self.entry(dest)
        ok = aomdv_route_update(e, seqno, hop_count, next_hop, last_hop,
                                self.now + lifetime, self.p.max_paths)
        if ok:
            self.net.monitor.path_append(self, dest, paths_consistent(e))
        return ok

    def remove_paths_via(self, neighbor, dests=None):
        """Drop paths through ``neighbor``; returns entries that lost their last path."""
        emptied = []
        items = self.routes.items() if dests is None else (
            (d, self.routes[d]) for d in dests if d in self.routes)
        for dest, e in items:
            if not e.paths:
                continue
            kept = [p for p in e.paths if p.next_hop != neighbor]
            if len(kept) != len(e.paths):
                e.paths = kept
                if not kept:
                    emptied.append(e)
        return emptied

    # data plane

    def forward_data(self, data: DataPacket, frm=None):
        nh = self.select_path(data.dst)
        if nh is not None:
            life = self.now + self.p.active_route_timeout_s
            for p in self.routes[data.dst].paths:
                if p.next_hop == nh:
                    p.expiry = max(p.expiry, life)
                    break
            return Action.SEND, nh
        if frm is None:
            self.buffer(data)
            self.request_route(data.dst)
            return Action.QUEUE_PENDING_ROUTE, None
        e = self.routes.get(data.dst)
        seq = e.dest_seqno if e is not None else 0
        self.net.unicast(self.id, frm, Rerr(unreachable=[(data.dst, max(seq, 0))], origin=self.id))
        return Action.DROP, Drop.NO_ROUTE

    # control plane

    def process_hello(self, hello: Hello, frm):
        self.update(frm, hello.seqno, 0, frm, self.id, self.hello_timeout)

    def process_rreq(self, rreq: Rreq, frm):
        """Returns ``"REPLY"``, ``"REBROADCAST"`` or ``"DISCARD"``."""
        if rreq.origin == self.id:
            return "DISCARD"
        first = not self.seen_rreq(rreq)
        last_hop = self.id if rreq.hop_count == 0 else rreq.first_hop
        added = self.update(rreq.origin, rreq.origin_seqno, rreq.hop_count, frm, last_hop,
                            self.p.active_route_timeout_s)
        rev = self.routes[rreq.origin]
        if rreq.dest == self.id:
            if rreq.dest_seqno_known:
                self.seqno = max(self.seqno, rreq.dest_seqno)
            key = (rreq.origin, rreq.rreq_id)
            sent = self.replies_sent.get(key, 0)
            if added and sent < self.p.max_replies:
                self.replies_sent[key] = sent + 1
                rrep = Rrep(origin=rreq.origin, dest=self.id, dest_seqno=self.seqno, hop_count=0,
                            lifetime=self.p.active_route_timeout_s)
                self.net.unicast(self.id, frm, rrep)
                return "REPLY"
            return "DISCARD"
        if not first:
            return "DISCARD"
        fwd = self.routes.get(rreq.dest)
        if (fwd is not None and self.select_path(rreq.dest) is not None
                and (not rreq.dest_seqno_known or fwd.dest_seqno >= rreq.dest_seqno)):
            fwd.precursors.add(frm)
            rev.precursors.add(fwd.paths[0].next_hop)
            rrep = Rrep(origin=rreq.origin, dest=rreq.dest, dest_seqno=fwd.dest_seqno,
                        hop_count=fwd.advertise(), lifetime=self.p.active_route_timeout_s,
                        first_hop=fwd.paths[0].last_hop)
            self.net.unicast(self.id, frm, rrep)
            return "REPLY"
        if not rev.paths or rreq.hop_count + 1 >= self.params.net_diameter:
            return "DISCARD"
        seq, known = rreq.dest_seqno, rreq.dest_seqno_known
        if fwd is not None and fwd.dest_seqno >= 0 and (not known or fwd.dest_seqno > seq):
            seq, known = fwd.dest_seqno, True
        relay = rreq.relay(hop_count=rev.advertise(), dest_seqno=seq, dest_seqno_known=known,
                           first_hop=last_hop)
        self.net.broadcast(self.id, relay, delay=self.jitter())
        return "REBROADCAST"

    def process_rrep(self, rrep: Rrep, frm):
        last_hop = self.id if rrep.hop_count == 0 else rrep.first_hop
        added = self.update(rrep.dest, rrep.dest_seqno, rrep.hop_count, frm, last_hop,
                            max(rrep.lifetime, self.p.active_route_timeout_s))
        if rrep.origin == self.id:
            if self.has_route(rrep.dest):
                self.discovery_complete(rrep.dest)
            return "ESTABLISHED" if added else "IGNORED"
        if not added:
            return "IGNORED"
        rev = self.routes.get(rrep.origin)
        if rev is None or self.select_path(rrep.origin) is None:
            return "NO_REVERSE_ROUTE"
        key = (rrep.origin, rrep.dest, rrep.dest_seqno)
        used = self.rrep_used.setdefault(key, set())
        path = next((p for p in rev.paths if p.next_hop not in used), None)
        if path is None:
            return "NO_REVERSE_ROUTE"
        used.add(path.next_hop)
        fwd = self.routes[rrep.dest]
        fwd.precursors.add(path.next_hop)
        rev.precursors.add(frm)
        self.net.unicast(self.id, path.next_hop,
                         rrep.relay(hop_count=fwd.advertise(), first_hop=last_hop))
        return "FORWARDED"

    def process_rerr(self, rerr: Rerr, frm):
        unreachable = []
        precursors = set()
        for dest, seq in rerr.unreachable:
            e = self.routes.get(dest)
            if e is None or not e.paths:
                continue
            before = len(e.paths)
            e.paths = [p for p in e.paths if p.next_hop != frm]
            if before and not e.paths:
                self._lost_all(e, seq)
                if e.precursors:
                    unreachable.append((dest, e.dest_seqno))
                    precursors |= e.precursors
        self.send_rerr(unreachable, precursors)

    def on_link_failure(self, neighbor):
        self.neighbors.pop(neighbor, None)
        unreachable = []
        precursors = set()
        for e in self.remove_paths_via(neighbor):
            self._lost_all(e)
            if e.precursors:
                unreachable.append((e.destination, e.dest_seqno))
                precursors |= e.precursors
        precursors.discard(neighbor)
        self.send_rerr(unreachable, precursors)
