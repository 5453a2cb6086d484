"""Physical layer helpers: disk connectivity, two-ray ground power, airtime,
and per-node energy bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import ContractViolation


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioParams:
    range_m: float = 60.0
    bitrate_bps: float = 250_000.0
    # CC2420-class draw at 3 V
    tx_power_w: float = 0.0522
    rx_power_w: float = 0.0564
    idle_power_w: float = 0.00128
    ht_m: float = 1.5
    hr_m: float = 1.5
    gt: float = 1.0
    gr: float = 1.0
    wavelength_m: float = 0.1224
    overhead_bytes: int = 11
    # transmitter output power used only for the logged two-ray figure
    pt_w: float = 0.001

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError("range_m must be positive")
        if self.bitrate_bps <= 0:
            raise ValueError("bitrate_bps must be positive")
        if min(self.tx_power_w, self.rx_power_w, self.idle_power_w) < 0:
            raise ValueError("radio powers must be non-negative")

    @property
    def crossover_m(self) -> float:
        return crossover_distance(self)


def in_range(a: Position, b: Position, params: RadioParams) -> bool:
    return math.hypot(a.x - b.x, a.y - b.y) <= params.range_m


def neighbor_lists(positions, range_m: float) -> list[list[int]]:
    """Adjacency lists of the unit-disk graph (no self loops)."""
    xy = np.asarray([(p.x, p.y) for p in positions], dtype=float)
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    adj = d <= range_m
    np.fill_diagonal(adj, False)
    return [np.flatnonzero(row).tolist() for row in adj]


def crossover_distance(params: RadioParams) -> float:
    return 4.0 * math.pi * params.ht_m * params.hr_m / params.wavelength_m


def two_ray_rx_power(params: RadioParams, tx_power_w: float, d: float) -> float:
    """Received power in watts; free-space below the crossover distance."""
    if d <= 0:
        raise ContractViolation(f"distance must be positive, got {d}")
    if d < crossover_distance(params):
        lam = params.wavelength_m
        return tx_power_w * params.gt * params.gr * lam * lam / ((4.0 * math.pi) ** 2 * d * d)
    return (tx_power_w * params.gt * params.gr
            * params.ht_m ** 2 * params.hr_m ** 2 / d ** 4)


def airtime(payload_bytes: int, overhead_bytes: int, bitrate_bps: float) -> float:
    return (payload_bytes + overhead_bytes) * 8.0 / bitrate_bps


class EnergyState:
    """Energy account of one node (joules).

    ``residual == initial - consumed`` at all times; charges are clamped at
    the remaining budget and the node is marked dead once it is exhausted.
    """

    __slots__ = ("initial_j", "consumed_j", "dead", "ledger_j")

    def __init__(self, initial_j: float, consumed_j: float = 0.0):
        self.initial_j = float(initial_j)
        self.consumed_j = float(consumed_j)
        self.dead = self.consumed_j >= self.initial_j
        # sum of every amount actually charged, kept separately as a cross-check
        self.ledger_j = self.consumed_j

    @property
    def residual_j(self) -> float:
        return self.initial_j - self.consumed_j

    def charge(self, power_w: float, duration_s: float) -> float:
        if power_w < 0 or duration_s < 0:
            raise ContractViolation("power and duration must be non-negative")
        amount = power_w * duration_s
        room = self.initial_j - self.consumed_j
        if amount >= room:
            amount = room
            self.dead = True
        self.consumed_j += amount
        self.ledger_j += amount
        return amount

    def __repr__(self):
        return f"EnergyState(initial={self.initial_j}, consumed={self.consumed_j:.6f})"


def charge(state: EnergyState, power_w: float, duration_s: float) -> EnergyState:
    state.charge(power_w, duration_s)
    return state


class RadioMeter:
    """Lazy radio-state accounting on top of an :class:`EnergyState`.

    Transmit and receive intervals are charged at their state power when
    they begin; the gap since the previous accounted instant is charged at
    idle power.  Overlapping receive intervals are only charged once.
    """

    __slots__ = ("energy", "params", "accounted_until")

    def __init__(self, energy: EnergyState, params: RadioParams):
        self.energy = energy
        self.params = params
        self.accounted_until = 0.0

    def busy(self, start: float, duration: float, power_w: float):
        end = start + duration
        acct = self.accounted_until
        if start > acct:
            self.energy.charge(self.params.idle_power_w, start - acct)
            acct = start
        if end > acct:
            self.energy.charge(power_w, end - acct)
            self.accounted_until = end

    def tx(self, start: float, duration: float):
        self.busy(start, duration, self.params.tx_power_w)

    def rx(self, start: float, duration: float):
        self.busy(start, duration, self.params.rx_power_w)

    def settle(self, now: float):
        if now > self.accounted_until:
            self.energy.charge(self.params.idle_power_w, now - self.accounted_until)
            self.accounted_until = now
