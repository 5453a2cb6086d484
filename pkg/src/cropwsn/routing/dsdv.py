"""Destination-sequenced distance vector routing.

Every node advertises its whole table every ``update_period_s`` and sends
rate-limited incremental updates in between.  Even sequence numbers come
from the destination itself; a broken route is advertised with infinite
metric and the next odd number, so only a fresh even number repairs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..mac import Drop
from .core import INFINITY, Action, DataPacket, DsdvUpdate, RoutingAgent, RoutingParams


@dataclass(frozen=True)
class DsdvParams:
    update_period_s: float = 15.0
    min_trigger_interval_s: float = 1.0
    settle_weight: float = 0.875
    missed_periods: int = 3
    # each period is stretched or shrunk by up to this much so dumps do not lock step
    period_jitter_s: float = 0.5
    # longest wait for the current next hop to confirm a new seqno; None means
    # the neighbour-liveness horizon (missed_periods update periods)
    hold_s: float | None = None

    def __post_init__(self):
        if self.update_period_s <= 0 or self.min_trigger_interval_s < 0:
            raise ValueError("DSDV periods must be positive")
        if not 0 <= self.settle_weight <= 1 or self.missed_periods < 1:
            raise ValueError("settle_weight in [0, 1] and missed_periods >= 1 required")
        if not 0 <= self.period_jitter_s < self.update_period_s:
            raise ValueError("period_jitter_s must be in [0, update_period_s)")
        if self.hold_s is not None and self.hold_s < 0:
            raise ValueError("hold_s must be non-negative")

    @property
    def hold_time(self) -> float:
        return self.missed_periods * self.update_period_s if self.hold_s is None else self.hold_s


@dataclass
class DsdvEntry:
    destination: int
    next_hop: int
    metric: float
    seqno: int
    install_time: float
    stable_data: float = 0.0
    # bookkeeping for settling-time estimation and delayed advertisement
    first_heard: float = 0.0
    advertise_at: float = 0.0
    changed: bool = False
    # newer but longer route kept aside while a better one may still arrive:
    # [seqno, next_hop, metric, first_heard, deadline]
    held: list | None = None

    @property
    def broken(self) -> bool:
        return self.metric == INFINITY


class DsdvAgent(RoutingAgent):
    protocol = "DSDV"

    def __init__(self, node_id, net, params: RoutingParams, hello_interval_s=1.0, proto_params=None):
        super().__init__(node_id, net, params, hello_interval_s)
        self.p = proto_params or DsdvParams()
        self.seqno = 0
        self.table: dict[int, DsdvEntry] = {
            node_id: DsdvEntry(node_id, node_id, 0, 0, 0.0)}
        self.last_heard: dict[int, float] = {}
        self._trigger_handle = None
        self._last_trigger = -math.inf
        self.dumps = 0

    def start(self):
        phase = self.net.routing_rng[self.id].uniform(0.0, self.p.update_period_s)
        self.net.engine.schedule(phase, self._periodic, target=self.id)

    # advertisement

    def periodic_dump(self) -> DsdvUpdate:
        """Build and broadcast a full-table update with a fresh even seqno."""
        now = self.now
        for e in self.table.values():
            self._release(e, now)
        self.seqno += 2
        me = self.table[self.id]
        me.seqno = self.seqno
        me.install_time = self.now
        entries = [(d, e.metric, e.seqno) for d, e in sorted(self.table.items())]
        for e in self.table.values():
            if e.advertise_at <= self.now:
                e.changed = False
        self.dumps += 1
        update = DsdvUpdate(self.id, entries, full=True)
        self.net.broadcast(self.id, update)
        return update

    def _periodic(self):
        if self.dead:
            return
        self._check_neighbors()
        self.periodic_dump()
        j = self.p.period_jitter_s
        wait = self.p.update_period_s
        if j > 0:
            wait += self.net.routing_rng[self.id].uniform(-j, j)
        self.net.engine.after(wait, self._periodic, target=self.id)

    def _check_neighbors(self):
        limit = self.p.missed_periods * self.p.update_period_s
        now = self.now
        for nb in [n for n, t in self.last_heard.items() if now - t > limit]:
            self.on_link_failure(nb)

    def trigger(self):
        if self._trigger_handle is not None or self.dead:
            return
        at = max(self.now, self._last_trigger + self.p.min_trigger_interval_s)
        self._trigger_handle = self.net.engine.schedule(at, self._send_triggered, target=self.id)

    def _send_triggered(self):
        self._trigger_handle = None
        if self.dead:
            return
        now = self.now
        ready = []
        later = None
        for d, e in sorted(self.table.items()):
            if not e.changed:
                continue
            if e.advertise_at <= now:
                ready.append((d, e.metric, e.seqno))
                e.changed = False
            else:
                later = e.advertise_at if later is None else min(later, e.advertise_at)
        if ready:
            self._last_trigger = now
            self.net.broadcast(self.id, DsdvUpdate(self.id, ready, full=False), delay=self.jitter())
        if later is not None:
            self._trigger_handle = self.net.engine.schedule(
                max(later, now + self.p.min_trigger_interval_s), self._send_triggered, target=self.id)

    # table maintenance

    def process_update(self, entries, frm: int) -> list[int]:
        """Merge a neighbour's advertisement; returns destinations that changed."""
        now = self.now
        changed = []
        for item in entries:
            try:
                dest, metric, seq = item
                seq = int(seq)
            except (TypeError, ValueError):
                continue
            if dest == self.id:
                if seq > self.seqno and seq % 2 == 1:
                    # someone reports us unreachable: answer with a newer even number
                    self.seqno = seq + 1
                    me = self.table[self.id]
                    me.seqno = self.seqno
                    me.changed = True
                    changed.append(dest)
                continue
            cand = metric + 1 if metric != INFINITY else INFINITY
            e = self.table.get(dest)
            if e is None:
                if cand == INFINITY:
                    continue
                self.table[dest] = DsdvEntry(dest, frm, cand, seq, now, first_heard=now,
                                             advertise_at=now, changed=True)
                changed.append(dest)
                continue
            if self._release(e, now):
                changed.append(dest)
            h = e.held
            if (seq > e.seqno and cand != INFINITY and not e.broken and cand > e.metric
                    and frm != e.next_hop and self.p.hold_time > 0):
                # damp fluctuation: keep forwarding on the current route for a while
                if h is None:
                    e.held = [seq, frm, cand, now, now + self.p.hold_time]
                elif seq > h[0]:
                    # a newer seqno replaces the candidate but not the deadline
                    e.held = [seq, frm, cand, h[3], h[4]]
                elif seq == h[0] and cand < h[2]:
                    h[1], h[2] = frm, cand
                continue
            if seq > e.seqno:
                was_broken = e.broken
                old_metric = e.metric
                if h is not None and seq == h[0] and h[2] < cand:
                    # the held copy is the better route for this seqno
                    frm, cand = h[1], h[2]
                if h is not None and seq == h[0] and cand != INFINITY:
                    self._learn(e, now - h[3])
                    e.first_heard = h[3]
                else:
                    e.first_heard = now
                e.held = None if h is None or h[0] <= seq else h
                e.seqno = seq
                e.next_hop = frm
                e.metric = cand
                e.install_time = now
                if cand == INFINITY:
                    if not was_broken:
                        e.changed = True
                        e.advertise_at = now
                        changed.append(dest)
                elif was_broken or cand != old_metric:
                    # neighbours only see (metric, seqno), so a new next hop alone is not news
                    e.changed = True
                    # metric changes other than repairs wait for the settling time
                    delay = 0.0 if was_broken or cand < old_metric else 2.0 * e.stable_data
                    e.advertise_at = now + delay
                    changed.append(dest)
            elif seq == e.seqno and cand < e.metric:
                self._learn(e, now - e.first_heard)
                e.next_hop = frm
                e.metric = cand
                e.install_time = now
                e.changed = True
                e.advertise_at = now + 2.0 * e.stable_data
                changed.append(dest)
        if changed:
            self.trigger()
        return changed

    def _learn(self, e: DsdvEntry, settle: float):
        w = self.p.settle_weight
        e.stable_data = w * e.stable_data + (1.0 - w) * settle

    def _release(self, e: DsdvEntry, now: float) -> bool:
        """Install a held route whose waiting time ran out."""
        h = e.held
        if h is None or h[4] > now:
            return False
        e.held = None
        e.seqno, e.next_hop, e.metric, e.first_heard = h[0], h[1], h[2], h[3]
        e.install_time = now
        e.changed = True
        e.advertise_at = now
        return True

    def on_heard(self, frm):
        self.last_heard[frm] = self.now

    def on_receive(self, packet, frm):
        if self.dead or packet.kind != "DSDV_UPDATE":
            return
        self.process_update(packet.entries, frm)

    def on_link_failure(self, neighbor) -> list[int]:
        self.last_heard.pop(neighbor, None)
        broken = []
        switched = False
        for d, e in self.table.items():
            if e.held is not None and e.held[1] == neighbor:
                e.held = None
            if d != self.id and e.next_hop == neighbor and not e.broken:
                if e.held is not None:
                    # the newer route put aside earlier takes over
                    e.held[4] = self.now
                    switched = self._release(e, self.now)
                    continue
                e.metric = INFINITY
                e.seqno += 1
                e.changed = True
                e.advertise_at = self.now
                broken.append(d)
        if broken or switched:
            self.trigger()
        return broken

    # data plane

    def route(self, dest) -> DsdvEntry | None:
        e = self.table.get(dest)
        if e is not None and self._release(e, self.now):
            self.trigger()
        if e is None or e.broken:
            return None
        return e

    def forward_data(self, data: DataPacket, frm=None):
        e = self.route(data.dst)
        if e is None:
            return Action.DROP, Drop.NO_ROUTE
        return Action.SEND, e.next_hop
