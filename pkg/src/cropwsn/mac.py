"""Beaconless IEEE 802.15.4 CSMA-CA over a shared unit-disk medium.

The pure pieces (:func:`backoff_delay`, :func:`enqueue`,
:func:`attempt_transmit`, :func:`deliver`) carry the protocol rules;
:class:`Medium` drives them on the engine timeline and tracks which
transmissions overlap at which receivers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .kernel import ContractViolation, Engine, RngStream
from .radio import Position, RadioMeter, RadioParams, airtime, in_range

BROADCAST = -1


class Outcome(str, Enum):
    SENT = "SENT"
    BACKOFF = "BACKOFF"
    CHANNEL_FAILURE = "CHANNEL_FAILURE"
    RECEIVED = "RECEIVED"
    COLLISION = "COLLISION"
    OUT_OF_RANGE = "OUT_OF_RANGE"


class Drop(str, Enum):
    QUEUE_FULL = "QUEUE_FULL"
    CSMA_FAILURE = "CSMA_FAILURE"
    NO_ROUTE = "NO_ROUTE"
    COLLISION = "COLLISION"
    OUT_OF_RANGE = "OUT_OF_RANGE"
    TTL = "TTL"
    LOOP = "LOOP"


@dataclass
class Frame:
    src: int
    dst: int
    kind: str  # "data" or a control packet kind
    payload_bytes: int
    airtime_s: float
    packet: object = None

    @property
    def is_data(self) -> bool:
        return self.kind == "data"

    def __post_init__(self):
        if self.kind == "data" and self.payload_bytes <= 0:
            raise ValueError("data frames need a positive payload")


@dataclass(frozen=True)
class CsmaParams:
    min_be: int = 3
    max_be: int = 5
    max_backoffs: int = 4
    unit_backoff_s: float = 0.00032
    # RX-to-TX turnaround after a clear CCA (12 symbols)
    turnaround_s: float = 0.000192
    queue_capacity: int = 50

    def __post_init__(self):
        if not 0 <= self.min_be <= self.max_be:
            raise ValueError("need 0 <= min_be <= max_be")
        if self.max_backoffs < 0:
            raise ValueError("max_backoffs must be >= 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")


@dataclass
class MacState:
    params: CsmaParams = field(default_factory=CsmaParams)
    tx_queue: deque = field(default_factory=deque)
    nb: int = 0
    be: int = 3
    busy_until: float = 0.0
    drops: list = field(default_factory=list)

    def reset_backoff(self):
        self.nb = 0
        self.be = self.params.min_be


def enqueue(mac: MacState, frame: Frame) -> bool:
    """Drop-tail admission; the frame in service still occupies a slot."""
    if len(mac.tx_queue) >= mac.params.queue_capacity:
        mac.drops.append((frame, Drop.QUEUE_FULL))
        return False
    mac.tx_queue.append(frame)
    return True


def backoff_delay(params: CsmaParams, be: int, rng: RngStream) -> float:
    if not 0 <= be <= params.max_be:
        raise ContractViolation(f"backoff exponent {be} outside [0, {params.max_be}]")
    return rng.randint(0, (1 << be) - 1) * params.unit_backoff_s


def attempt_transmit(mac: MacState, channel_busy: bool) -> Outcome:
    """One clear-channel assessment at the end of a backoff period."""
    if not mac.tx_queue:
        raise ContractViolation("attempt_transmit on an empty queue")
    if not channel_busy:
        return Outcome.SENT
    mac.nb += 1
    mac.be = min(mac.be + 1, mac.params.max_be)
    if mac.nb > mac.params.max_backoffs:
        return Outcome.CHANNEL_FAILURE
    return Outcome.BACKOFF


@dataclass(frozen=True)
class Transmission:
    sender: int
    position: Position
    start: float
    end: float
    frame: Frame | None = None


def deliver(target: Transmission, transmissions_in_air, receiver: int,
            receiver_pos: Position, params: RadioParams) -> Outcome:
    """Fate of ``target`` at ``receiver`` given everything else on the air.

    A transmission by the receiver itself counts as an overlap (half duplex).
    """
    if not in_range(target.position, receiver_pos, params):
        return Outcome.OUT_OF_RANGE
    for other in transmissions_in_air:
        if other is target:
            continue
        if other.start < target.end and target.start < other.end:
            if other.sender == receiver or in_range(other.position, receiver_pos, params):
                return Outcome.COLLISION
    return Outcome.RECEIVED


class Medium:
    """Runs CSMA-CA for every node and resolves receptions.

    Callbacks (set by the network):
      ``on_receive(node, frame)``: a frame decoded at ``node`` (broadcast or
      addressed to it);
      ``on_sent(node, frame, delivered)``: a unicast finished on air;
      ``on_drop(node, frame, reason)``: MAC discarded a frame.
    """

    def __init__(self, engine: Engine, positions, neighbors, radio: RadioParams,
                 csma: CsmaParams, meters: list[RadioMeter], rngs: list[RngStream]):
        self.engine = engine
        self.positions = positions
        self.neighbors = neighbors
        self.neighbor_sets = [set(nb) for nb in neighbors]
        self.radio = radio
        self.csma = csma
        self.meters = meters
        self.rngs = rngs
        n = len(positions)
        self.macs = [MacState(params=csma, be=csma.min_be) for _ in range(n)]
        self.in_service = [False] * n
        self.sensing = [0] * n
        self.transmitting = [False] * n
        self.rx_active: list[dict] = [{} for _ in range(n)]
        self.alive = [True] * n
        self._tx_id = 0
        self.on_receive: Callable = lambda node, frame: None
        self.on_sent: Callable = lambda node, frame, ok: None
        self.on_drop: Callable = lambda node, frame, reason: None
        self.frames_sent: dict[str, int] = {}
        self.collisions = 0

    def make_frame(self, src, dst, kind, payload_bytes, packet=None) -> Frame:
        at = airtime(payload_bytes, self.radio.overhead_bytes, self.radio.bitrate_bps)
        return Frame(src, dst, kind, payload_bytes, at, packet)

    def send(self, node: int, frame: Frame) -> bool:
        if not self.alive[node]:
            return False
        mac = self.macs[node]
        if not enqueue(mac, frame):
            mac.drops.pop()
            self.on_drop(node, frame, Drop.QUEUE_FULL)
            return False
        if not self.in_service[node]:
            self._start_service(node)
        return True

    def kill(self, node: int):
        self.alive[node] = False
        mac = self.macs[node]
        # a frame already on the air finishes; its end event pops it
        keep = 1 if self.transmitting[node] else 0
        while len(mac.tx_queue) > keep:
            frame = mac.tx_queue.pop()
            self.on_drop(node, frame, Drop.CSMA_FAILURE)

    # CSMA-CA procedure

    def _start_service(self, node):
        mac = self.macs[node]
        self.in_service[node] = True
        mac.reset_backoff()
        self._backoff(node)

    def _backoff(self, node):
        mac = self.macs[node]
        delay = backoff_delay(self.csma, mac.be, self.rngs[node])
        self.engine.schedule(self.engine.queue.now + delay, self._cca, node, target=node)

    def _cca(self, node):
        if not self.alive[node]:
            return
        mac = self.macs[node]
        busy = self.sensing[node] > 0 or self.transmitting[node]
        outcome = attempt_transmit(mac, busy)
        if outcome is Outcome.SENT:
            self.engine.schedule(self.engine.queue.now + self.csma.turnaround_s,
                                 self._tx_start, node, target=node)
        elif outcome is Outcome.BACKOFF:
            self._backoff(node)
        else:
            frame = mac.tx_queue.popleft()
            self.on_drop(node, frame, Drop.CSMA_FAILURE)
            self._next(node)

    def _next(self, node):
        if self.macs[node].tx_queue and self.alive[node]:
            self._start_service(node)
        else:
            self.in_service[node] = False

    def _tx_start(self, node):
        if not self.alive[node]:
            return
        now = self.engine.queue.now
        frame = self.macs[node].tx_queue[0]
        dur = frame.airtime_s
        self._tx_id += 1
        tx_id = self._tx_id
        self.transmitting[node] = True
        self.meters[node].tx(now, dur)
        self.frames_sent[frame.kind] = self.frames_sent.get(frame.kind, 0) + 1
        own = self.rx_active[node]
        for entry in own.values():
            entry[0] = True
        rx_active = self.rx_active
        sensing = self.sensing
        transmitting = self.transmitting
        alive = self.alive
        meters = self.meters
        for r in self.neighbors[node]:
            sensing[r] += 1
            if not alive[r] or transmitting[r]:
                continue
            meters[r].rx(now, dur)
            active = rx_active[r]
            if active:
                for entry in active.values():
                    entry[0] = True
                active[tx_id] = [True]
            else:
                active[tx_id] = [False]
        self.engine.schedule(now + dur, self._tx_end, node, tx_id, target=node)

    def _tx_end(self, node, tx_id):
        frame = self.macs[node].tx_queue.popleft()
        self.transmitting[node] = False
        receivers = []
        rx_active = self.rx_active
        sensing = self.sensing
        alive = self.alive
        dst = frame.dst
        for r in self.neighbors[node]:
            sensing[r] -= 1
            entry = rx_active[r].pop(tx_id, None)
            if entry is None:
                continue
            if entry[0]:
                if r == dst or dst == BROADCAST:
                    self.collisions += 1
                continue
            if alive[r] and (dst == BROADCAST or r == dst):
                receivers.append(r)
        self._next(node)
        if dst == BROADCAST:
            for r in receivers:
                self.on_receive(r, frame)
        else:
            ok = bool(receivers)
            if ok:
                self.on_receive(dst, frame)
            self.on_sent(node, frame, ok)
