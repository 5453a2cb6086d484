"""Brute-force recomputations used as independent oracles by the tests.

Everything here works from a flat list of raw events, never from the
package's own PacketLog or EnergyState bookkeeping.
"""

import random
from fractions import Fraction

from cropwsn.network import PacketLog
from cropwsn.radio import EnergyState
from cropwsn.routing.core import DataPacket


def synthetic_events(seed, n_flows=8, max_packets=60):
    """Random raw trace: ("offer", flow, seq, t) then optional deliver/drop."""
    rng = random.Random(seed)
    events = []
    for f in range(n_flows):
        start = rng.uniform(0, 20)
        for k in range(rng.randint(1, max_packets)):
            t = start + 0.25 * k
            events.append(("offer", f, k, t))
            u = rng.random()
            if u < 0.6:
                events.append(("deliver", f, k, t + rng.expovariate(20.0)))
            elif u < 0.9:
                events.append(("drop", f, k, t + rng.random(), rng.choice(["QUEUE_FULL", "NO_ROUTE"])))
            # otherwise still in flight at the end
    events.sort(key=lambda e: e[3])
    return events


def log_from_events(events):
    log = PacketLog()
    pk = {}
    for ev in events:
        kind, f, k, t = ev[:4]
        if kind == "offer":
            pk[f, k] = DataPacket(f, k, 1, 0, 512, t)
            log.offered(pk[f, k])
        elif kind == "deliver":
            log.delivered(pk[f, k], t)
        else:
            log.dropped(pk[f, k], ev[4])
    return log


def brute_delay_ms(events):
    sent = {(e[1], e[2]): e[3] for e in events if e[0] == "offer"}
    gaps = [Fraction(e[3]) - Fraction(sent[e[1], e[2]]) for e in events if e[0] == "deliver"]
    if not gaps:
        return None
    return float(1000 * sum(gaps) / len(gaps))


def brute_pdr(events):
    offered, got = {}, {}
    for e in events:
        if e[0] == "offer":
            offered[e[1]] = offered.get(e[1], 0) + 1
        elif e[0] == "deliver":
            got[e[1]] = got.get(e[1], 0) + 1
    ratios = [Fraction(got.get(f, 0), n) for f, n in offered.items()]
    return float(sum(ratios) / len(ratios))


def synthetic_energy(seed, n_nodes=12):
    """Random per-node charge sequences; returns (states, charges per node)."""
    rng = random.Random(seed)
    states, charges = [], []
    for i in range(n_nodes):
        init = 50_000.0 if i == 0 else 5_000.0
        st = EnergyState(init)
        mine = []
        for _ in range(rng.randint(0, 200)):
            p, d = rng.uniform(0, 0.06), rng.uniform(0, 0.01)
            mine.append(st.charge(p, d))
        states.append(st)
        charges.append(mine)
    return states, charges


def brute_energy_kj(charges, sink=0):
    per = [sum(Fraction(c) for c in mine) for mine in charges]
    total = sum(per) / 1000
    sensors = [p for i, p in enumerate(per) if i != sink]
    return float(total), float(total / len(per)), float(sum(sensors) / 1000 / len(sensors))


class EventRecorder:
    """Taps a Network's traffic entry points and charge calls into a raw event list."""

    def __init__(self, net, monkeypatch):
        self.events = []
        self.charges = {}
        ev = self.events
        orig_inject, orig_deliver, orig_drop = net.inject, net.deliver, net.drop

        def inject(data):
            ev.append(("offer", data.flow_id, data.seq_in_flow, net.engine.queue.now))
            orig_inject(data)

        def deliver(node, data):
            ev.append(("deliver", data.flow_id, data.seq_in_flow, net.engine.queue.now))
            orig_deliver(node, data)

        def drop(node, data, reason):
            ev.append(("drop", data.flow_id, data.seq_in_flow, net.engine.queue.now, str(reason)))
            orig_drop(node, data, reason)

        monkeypatch.setattr(net, "inject", inject)
        monkeypatch.setattr(net, "deliver", deliver)
        monkeypatch.setattr(net, "drop", drop)
        owners = {id(s): i for i, s in enumerate(net.energy)}
        charges = self.charges
        orig_charge = EnergyState.charge

        def charge(state, power_w, duration_s):
            amount = orig_charge(state, power_w, duration_s)
            charges.setdefault(owners.get(id(state)), []).append(amount)
            return amount

        monkeypatch.setattr(EnergyState, "charge", charge)

    def final_events(self):
        """Keep only the first terminal event per packet, as the log does."""
        seen, out = set(), []
        for e in self.events:
            if e[0] == "offer":
                out.append(e)
            elif (e[1], e[2]) not in seen:
                seen.add((e[1], e[2]))
                out.append(e)
        return out
