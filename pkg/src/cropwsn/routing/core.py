"""Packet vocabulary and the behaviour shared by every routing agent."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

from ..mac import Drop

log = logging.getLogger(__name__)

INFINITY = math.inf


@dataclass(frozen=True)
class RoutingParams:
    net_diameter: int = 35
    buffer_capacity: int = 64
    buffer_timeout_s: float = 30.0
    # upper bound of the random delay added before relaying a broadcast
    broadcast_jitter_s: float = 0.01
    hello_bytes: int = 32
    rreq_bytes: int = 48
    rrep_bytes: int = 44
    rerr_bytes: int = 32
    dsdv_header_bytes: int = 20
    dsdv_entry_bytes: int = 12
    # consecutive lost unicasts before a neighbour is treated as gone
    link_loss_threshold: int = 3

    def __post_init__(self):
        if self.link_loss_threshold < 1:
            raise ValueError("link_loss_threshold must be >= 1")
        if self.net_diameter < 1:
            raise ValueError("net_diameter must be >= 1")
        if self.buffer_capacity < 1 or self.buffer_timeout_s <= 0:
            raise ValueError("pending buffer needs positive capacity and timeout")


@dataclass
class Rreq:
    origin: int
    rreq_id: int
    dest: int
    origin_seqno: int
    dest_seqno: int
    dest_seqno_known: bool
    hop_count: int = 0
    first_hop: int | None = None
    kind = "RREQ"

    def relay(self, **changes) -> "Rreq":
        d = self.__dict__.copy()
        d.update(changes)
        return Rreq(**d)


@dataclass
class Rrep:
    origin: int  # node that asked for the route
    dest: int
    dest_seqno: int
    hop_count: int
    lifetime: float
    first_hop: int | None = None
    kind = "RREP"

    def relay(self, **changes) -> "Rrep":
        d = self.__dict__.copy()
        d.update(changes)
        return Rrep(**d)


@dataclass
class Rerr:
    unreachable: list  # [(dest, seqno), ...]
    origin: int = -1
    hop_count: int = 0
    kind = "RERR"

    def __post_init__(self):
        if not self.unreachable:
            raise ValueError("RERR needs at least one unreachable destination")


@dataclass
class Hello:
    origin: int
    seqno: int
    hop_count: int = 0
    kind = "HELLO"


@dataclass
class DsdvUpdate:
    origin: int
    entries: list  # [(dest, metric, seqno), ...]
    full: bool = True
    hop_count: int = 0
    kind = "DSDV_UPDATE"


ControlPacket = Rreq | Rrep | Rerr | Hello | DsdvUpdate


def control_size(packet, params: RoutingParams) -> int:
    kind = packet.kind
    if kind == "HELLO":
        return params.hello_bytes
    if kind == "RREQ":
        return params.rreq_bytes
    if kind == "RREP":
        return params.rrep_bytes
    if kind == "RERR":
        return params.rerr_bytes
    if kind == "DSDV_UPDATE":
        return params.dsdv_header_bytes + params.dsdv_entry_bytes * len(packet.entries)
    raise ValueError(f"unknown control packet {kind!r}")


@dataclass(eq=False)
class DataPacket:
    flow_id: int
    seq_in_flow: int
    src: int
    dst: int
    payload_bytes: int
    created_at: float
    delivered_at: float | None = None
    ttl: int = 35
    hops: int = 0
    # (dest_seqno, hop_count) of the route the last forwarder used
    route_tag: tuple | None = None
    visited: set = field(default_factory=set)
    kind = "data"

    @property
    def uid(self):
        return (self.flow_id, self.seq_in_flow)


class Action:
    SEND = "SEND"
    QUEUE_PENDING_ROUTE = "QUEUE_PENDING_ROUTE"
    DROP = "DROP"


class PendingBuffer:
    """Per-node FIFO of data waiting for a route; overflow drops the oldest."""

    def __init__(self, capacity: int, timeout_s: float):
        self.capacity = capacity
        self.timeout_s = timeout_s
        self._q: deque = deque()

    def __len__(self):
        return len(self._q)

    def push(self, data: DataPacket, now: float):
        """Buffer ``data``; returns the packet evicted to make room, if any."""
        evicted = None
        if len(self._q) >= self.capacity:
            evicted = self._q.popleft()[0]
        self._q.append((data, now))
        return evicted

    def take(self, dest: int) -> list[DataPacket]:
        out = [d for d, _ in self._q if d.dst == dest]
        self._q = deque((d, t) for d, t in self._q if d.dst != dest)
        return out

    def expire(self, now: float) -> list[DataPacket]:
        out = []
        while self._q and now - self._q[0][1] >= self.timeout_s:
            out.append(self._q.popleft()[0])
        return out

    def destinations(self) -> set[int]:
        return {d.dst for d, _ in self._q}

    def has(self, dest: int) -> bool:
        return any(d.dst == dest for d, _ in self._q)


class RoutingAgent:
    """Base for the per-node agents.

    ``net`` is the owning :class:`~cropwsn.network.Network`; agents only
    talk to it through ``broadcast``, ``unicast``, ``deliver``, ``drop`` and
    the engine.
    """

    protocol = "?"
    dead = False

    def __init__(self, node_id: int, net, params: RoutingParams, hello_interval_s: float = 1.0):
        self.id = node_id
        self.net = net
        self.params = params
        self.hello_interval_s = hello_interval_s
        self.pending = PendingBuffer(params.buffer_capacity, params.buffer_timeout_s)
        self.link_losses: dict[int, int] = {}

    @property
    def now(self) -> float:
        return self.net.engine.queue.now

    def start(self):
        """Schedule periodic timers; called once before the run."""

    # data plane

    def on_app_send(self, data: DataPacket):
        data.ttl = self.params.net_diameter
        data.visited.add(self.id)
        self._route_data(data, originated=True)

    def handle_data(self, data: DataPacket, frm: int):
        if self.id in data.visited:
            self.net.monitor.loop_revisit(self, data)
            self.net.drop(self.id, data, Drop.LOOP)
            return
        data.visited.add(self.id)
        data.hops += 1
        if data.dst == self.id:
            self.check_route_tag(data)
            self.net.deliver(self.id, data)
            return
        data.ttl -= 1
        if data.ttl <= 0:
            self.net.drop(self.id, data, Drop.TTL)
            return
        self._route_data(data, originated=False, frm=frm)

    def _route_data(self, data, originated, frm=None):
        action, arg = self.forward_data(data, frm)
        if action == Action.SEND:
            self.net.unicast(self.id, arg, data)
        elif action == Action.DROP:
            self.net.drop(self.id, data, arg)

    def forward_data(self, data: DataPacket, frm=None):
        raise NotImplementedError

    def check_route_tag(self, data: DataPacket):
        """Hook for per-hop invariant checks (AODV overrides)."""

    def buffer(self, data: DataPacket):
        evicted = self.pending.push(data, self.now)
        if evicted is not None:
            self.net.drop(self.id, evicted, Drop.NO_ROUTE)
        self.net.engine.after(self.params.buffer_timeout_s, self._expire_pending, target=self.id)

    def _expire_pending(self):
        for data in self.pending.expire(self.now):
            self.net.drop(self.id, data, Drop.NO_ROUTE)

    # control plane

    def on_heard(self, frm: int):
        """Any frame decoded from ``frm`` (broadcast or addressed to us)."""

    def on_receive(self, packet, frm: int):
        raise NotImplementedError

    def on_link_failure(self, neighbor: int):
        raise NotImplementedError

    def on_unicast_result(self, packet, next_hop: int, ok: bool):
        """Link-layer feedback after a unicast left the air."""
        if ok:
            self.link_losses.pop(next_hop, None)
            return
        if isinstance(packet, DataPacket):
            reason = Drop.COLLISION if next_hop in self.net.neighbor_sets[self.id] else Drop.OUT_OF_RANGE
            self.net.drop(self.id, packet, reason)
        n = self.link_losses.get(next_hop, 0) + 1
        if n >= self.params.link_loss_threshold:
            self.link_losses.pop(next_hop, None)
            self.on_link_failure(next_hop)
        else:
            self.link_losses[next_hop] = n

    def on_mac_drop(self, packet, reason):
        """MAC gave up on a frame (queue full or CSMA failure)."""
        if isinstance(packet, DataPacket):
            self.net.drop(self.id, packet, reason)

    def jitter(self) -> float:
        j = self.params.broadcast_jitter_s
        return self.net.routing_rng[self.id].uniform(0.0, j) if j > 0 else 0.0


@dataclass(frozen=True)
class AgentFactory:
    label: str
    protocol: str
    hello_interval_s: float
    agent_cls: type

    def __call__(self, node_id, net, params: RoutingParams, proto_params=None):
        return self.agent_cls(node_id, net, params, self.hello_interval_s, proto_params)


BASE_PROTOCOLS = ("DSDV", "AODV", "AOMDV")
LABELS = ("DSDV", "AODV", "AODVMOD", "AOMDV", "AOMDVMOD")
DEFAULT_HELLO_S = 1.0
MOD_HELLO_S = 5.0


def variant_label(protocol: str, hello_interval_s: float) -> str:
    protocol = protocol.upper()
    if protocol == "DSDV":
        return "DSDV"
    if hello_interval_s == DEFAULT_HELLO_S:
        return protocol
    if hello_interval_s == MOD_HELLO_S:
        return protocol + "MOD"
    return f"{protocol}(hello={hello_interval_s:g}s)"


def make_variant(protocol: str, hello_interval_s: float = DEFAULT_HELLO_S) -> AgentFactory:
    """Agent factory for a base protocol with the given HELLO period."""
    if not hello_interval_s > 0:
        raise ValueError(f"hello_interval_s must be positive, got {hello_interval_s}")
    protocol = protocol.upper()
    if protocol not in BASE_PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; expected one of {BASE_PROTOCOLS}")
    if protocol == "DSDV":
        from .dsdv import DsdvAgent
        if hello_interval_s != DEFAULT_HELLO_S:
            log.warning("DSDV ignores hello_interval_s=%s; it uses periodic updates", hello_interval_s)
        return AgentFactory("DSDV", "DSDV", hello_interval_s, DsdvAgent)
    if protocol == "AODV":
        from .aodv import AodvAgent as cls
    else:
        from .aomdv import AomdvAgent as cls
    return AgentFactory(variant_label(protocol, hello_interval_s), protocol, hello_interval_s, cls)


def factory_for_label(label: str, base_hello_s: float = DEFAULT_HELLO_S,
                      mod_hello_s: float = MOD_HELLO_S) -> AgentFactory:
    label = label.upper()
    if label not in LABELS:
        raise ValueError(f"unknown protocol label {label!r}; expected one of {LABELS}")
    if label.endswith("MOD"):
        f = make_variant(label[:-3], mod_hello_s)
        return AgentFactory(label, f.protocol, f.hello_interval_s, f.agent_cls)
    return make_variant(label, base_hello_s)
