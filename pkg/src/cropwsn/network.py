"""Wires nodes, medium, routing agents and traffic into one simulation run."""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import Engine, RngStream, stream_key
from .mac import BROADCAST, CsmaParams, Drop, Medium
from .radio import EnergyState, RadioMeter, RadioParams, neighbor_lists
from .routing.core import AgentFactory, DataPacket, RoutingParams, control_size


@dataclass
class PacketRecord:
    flow_id: int
    seq: int
    src: int
    dst: int
    created_at: float
    delivered_at: float | None = None
    drop_reason: str | None = None
    hops: int = 0


class PacketLog:
    """Fate of every offered data packet, keyed by ``(flow_id, seq)``."""

    def __init__(self):
        self.records: dict[tuple[int, int], PacketRecord] = {}
        self.double_final = 0

    def offered(self, data: DataPacket):
        self.records[data.uid] = PacketRecord(data.flow_id, data.seq_in_flow, data.src,
                                              data.dst, data.created_at)

    def delivered(self, data: DataPacket, t: float):
        rec = self.records[data.uid]
        if rec.delivered_at is not None or rec.drop_reason is not None:
            self.double_final += 1
            return
        rec.delivered_at = t
        rec.hops = data.hops

    def dropped(self, data: DataPacket, reason: str):
        rec = self.records[data.uid]
        if rec.delivered_at is not None or rec.drop_reason is not None:
            self.double_final += 1
            return
        rec.drop_reason = reason

    def __iter__(self):
        return iter(self.records.values())

    def __len__(self):
        return len(self.records)


@dataclass
class Monitor:
    """Counts invariant checks performed during a run and their violations."""

    seqno_checks: int = 0
    seqno_violations: int = 0
    path_appends: int = 0
    path_violations: int = 0
    loop_revisits: int = 0
    notes: list = field(default_factory=list)

    def route_tag(self, agent, data, ok: bool):
        self.seqno_checks += 1
        if not ok:
            self.seqno_violations += 1
            if len(self.notes) < 20:
                self.notes.append(("seqno", agent.id, data.uid, data.route_tag))

    def path_append(self, agent, dest, ok: bool):
        self.path_appends += 1
        if not ok:
            self.path_violations += 1
            if len(self.notes) < 20:
                self.notes.append(("path", agent.id, dest))

    def loop_revisit(self, agent, data):
        self.loop_revisits += 1


@dataclass(frozen=True)
class NodeSetup:
    positions: list
    initial_energy_j: list
    sink: int = 0


class Network:
    def __init__(self, setup: NodeSetup, factory: AgentFactory, *, seed: int,
                 radio: RadioParams | None = None, csma: CsmaParams | None = None,
                 routing: RoutingParams | None = None, proto_params=None,
                 trace: bool = False):
        self.setup = setup
        self.factory = factory
        self.radio = radio or RadioParams()
        self.csma = csma or CsmaParams()
        self.routing = routing or RoutingParams()
        self.seed = seed
        self.engine = Engine(trace=trace)
        n = len(setup.positions)
        self.n = n
        self.neighbors = neighbor_lists(setup.positions, self.radio.range_m)
        self.neighbor_sets = [set(nb) for nb in self.neighbors]
        self.energy = [EnergyState(e) for e in setup.initial_energy_j]
        self.meters = [RadioMeter(e, self.radio) for e in self.energy]
        self.mac_rng = [RngStream(seed, stream_key("mac-backoff", i)) for i in range(n)]
        self.routing_rng = [RngStream(seed, stream_key("routing", i)) for i in range(n)]
        self.medium = Medium(self.engine, setup.positions, self.neighbors, self.radio,
                             self.csma, self.meters, self.mac_rng)
        self.medium.on_receive = self._on_receive
        self.medium.on_sent = self._on_sent
        self.medium.on_drop = self._on_drop
        self.log = PacketLog()
        self.monitor = Monitor()
        self.agents = [factory(i, self, self.routing, proto_params) for i in range(n)]
        self._started = False

    # agent-facing API

    def broadcast(self, node: int, packet, delay: float = 0.0):
        frame = self.medium.make_frame(node, BROADCAST, packet.kind,
                                       control_size(packet, self.routing), packet)
        if delay > 0:
            self.engine.after(delay, self.medium.send, node, frame, target=node)
        else:
            self.medium.send(node, frame)

    def unicast(self, node: int, next_hop: int, packet):
        if isinstance(packet, DataPacket):
            size = packet.payload_bytes
        else:
            size = control_size(packet, self.routing)
        frame = self.medium.make_frame(node, next_hop, packet.kind, size, packet)
        self.medium.send(node, frame)

    def deliver(self, node: int, data: DataPacket):
        data.delivered_at = self.engine.queue.now
        self.log.delivered(data, data.delivered_at)

    def drop(self, node: int, data: DataPacket, reason):
        self.log.dropped(data, reason.value if isinstance(reason, Drop) else str(reason))

    # medium callbacks

    def _on_receive(self, node, frame):
        agent = self.agents[node]
        agent.on_heard(frame.src)
        if frame.kind == "data":
            agent.handle_data(frame.packet, frame.src)
        else:
            agent.on_receive(frame.packet, frame.src)

    def _on_sent(self, node, frame, ok):
        self.agents[node].on_unicast_result(frame.packet, frame.dst, ok)

    def _on_drop(self, node, frame, reason):
        self.agents[node].on_mac_drop(frame.packet, reason)

    # traffic and control

    def inject(self, data: DataPacket):
        """Hand a freshly generated packet to its source agent (at its creation time)."""
        self.log.offered(data)
        if not self.medium.alive[data.src]:
            self.drop(data.src, data, Drop.CSMA_FAILURE)
            return
        self.agents[data.src].on_app_send(data)

    def schedule_packets(self, packets):
        for data in packets:
            self.engine.schedule(data.created_at, self.inject, data, target=data.src)

    def kill_node(self, node: int, at: float):
        self.engine.schedule(at, self._kill, node, target=node)

    def _kill(self, node):
        self.medium.kill(node)
        self.agents[node].dead = True

    def start(self):
        if not self._started:
            for agent in self.agents:
                agent.start()
            self._started = True

    def run(self, t_end: float) -> int:
        self.start()
        count = self.engine.run_until(t_end)
        for m in self.meters:
            m.settle(t_end)
        return count

    @property
    def control_counts(self) -> dict[str, int]:
        return dict(self.medium.frames_sent)
