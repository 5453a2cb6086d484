import logging

import pytest

from cropwsn.mac import Drop
from cropwsn.radio import Position
from cropwsn.routing import (Action, AodvParams, DataPacket, Rrep, Rreq, factory_for_label,
                             make_variant)
from cropwsn.routing.aodv import neighbor_timeout
from cropwsn.routing.core import PendingBuffer

from conftest import line, make_net


def data(src, dst, t=0.0, seq=0, flow=0):
    return DataPacket(flow, seq, src, dst, 512, t)


def test_variant_labels():
    assert make_variant("AOMDV", 5.0).label == "AOMDVMOD"
    f = make_variant("AODV", 1.0)
    assert f.label == "AODV" and f.hello_interval_s == 1.0
    assert factory_for_label("aodvmod").hello_interval_s == 5.0


def test_dsdv_variant_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert make_variant("DSDV", 5.0).label == "DSDV"
    assert "ignores" in caplog.text


def test_variant_rejects_bad_interval():
    with pytest.raises(ValueError):
        make_variant("AODV", -1.0)
    with pytest.raises(ValueError):
        factory_for_label("OLSR")


def test_pending_buffer_drops_oldest_and_expires():
    b = PendingBuffer(2, 30.0)
    p = [data(0, 5, seq=i) for i in range(3)]
    assert b.push(p[0], 0.0) is None
    assert b.push(p[1], 1.0) is None
    assert b.push(p[2], 2.0) is p[0]
    assert b.expire(31.5) == [p[1]]
    assert b.take(5) == [p[2]]


def test_neighbor_timeouts():
    assert neighbor_timeout(1.0, 2) == 2.0
    assert neighbor_timeout(5.0, 2) == 10.0


def test_route_present_sends_to_next_hop():
    net = make_net(line(3))
    a = net.agents[0]
    a.update_route(2, 4, 2, 1, 10.0)
    assert a.forward_data(data(0, 2)) == (Action.SEND, 1)


def test_no_route_queues_and_broadcasts_rreq():
    net = make_net(line(3))
    a = net.agents[0]
    action, _ = a.forward_data(data(0, 2))
    assert action == Action.QUEUE_PENDING_ROUTE
    assert a.rreq_id == 1
    assert net.medium.macs[0].tx_queue[0].kind == "RREQ"


def test_discovery_with_valid_route_sends_nothing():
    net = make_net(line(3))
    a = net.agents[0]
    a.update_route(2, 4, 2, 1, 10.0)
    a.on_app_send(data(0, 2))
    assert a.rreq_originated == 0


def test_unreachable_destination_three_rreqs_then_drop():
    pts = [Position(0, 0), Position(30, 0), Position(500, 0)]
    net = make_net(pts)
    net.schedule_packets([data(0, 2, t=1.0)])
    net.run(60.0)
    assert net.agents[0].rreq_originated == 3
    rec = next(iter(net.log))
    assert rec.drop_reason == Drop.NO_ROUTE.value


def test_partitioned_buffer_timeout():
    pts = [Position(0, 0), Position(500, 0)]
    p = AodvParams(rreq_retries=50)
    net = make_net(pts, proto_params=p)
    net.schedule_packets([data(0, 1, t=1.0)])
    net.run(30.5)
    assert next(iter(net.log)).drop_reason is None
    net.run(31.5)
    assert next(iter(net.log)).drop_reason == Drop.NO_ROUTE.value


def _rreq(origin=0, dest=2, rreq_id=1, hop=0, dseq=0, known=False, oseq=1):
    return Rreq(origin=origin, rreq_id=rreq_id, dest=dest, origin_seqno=oseq, dest_seqno=dseq,
                dest_seqno_known=known, hop_count=hop)


def test_destination_replies_and_duplicates_are_discarded():
    net = make_net(line(3))
    d = net.agents[2]
    d.seqno = 7
    assert d.process_rreq(_rreq(hop=1), 1) == "REPLY"
    rrep = net.medium.macs[2].tx_queue[-1].packet
    assert rrep.kind == "RREP" and rrep.dest_seqno == 7
    assert d.process_rreq(_rreq(hop=1), 1) == "DISCARD"


def test_stale_intermediate_rebroadcasts():
    net = make_net(line(3))
    mid = net.agents[1]
    mid.update_route(2, 3, 1, 2, 10.0)
    assert mid.process_rreq(_rreq(dseq=5, known=True), 0) == "REBROADCAST"
    fresh = make_net(line(3)).agents[1]
    fresh.update_route(2, 6, 1, 2, 10.0)
    assert fresh.process_rreq(_rreq(dseq=5, known=True), 0) == "REPLY"


def test_intermediate_forwarding_rrep_has_both_routes():
    net = make_net(line(3))
    mid = net.agents[1]
    mid.process_rreq(_rreq(), 0)
    assert mid.process_rrep(Rrep(origin=0, dest=2, dest_seqno=3, hop_count=0, lifetime=10.0), 2) == "FORWARDED"
    assert mid.valid_route(0).next_hop == 0
    assert mid.valid_route(2).next_hop == 2


def test_older_rrep_ignored():
    net = make_net(line(3))
    a = net.agents[0]
    a.update_route(2, 9, 2, 1, 10.0)
    assert a.process_rrep(Rrep(origin=0, dest=2, dest_seqno=4, hop_count=1, lifetime=10.0), 1) == "IGNORED"
    assert a.routes[2].dest_seqno == 9


def test_origin_flushes_buffer_in_order():
    net = make_net(line(3))
    a = net.agents[0]
    pkts = [data(0, 2, seq=i) for i in range(3)]
    for p in pkts:
        net.log.offered(p)
        a.on_app_send(p)
    assert len(a.pending) == 3
    a.process_rrep(Rrep(origin=0, dest=2, dest_seqno=3, hop_count=1, lifetime=10.0), 1)
    queued = [f.packet for f in net.medium.macs[0].tx_queue if f.kind == "data"]
    assert queued == pkts
    assert 2 not in a.discovery


def test_invalidation_raises_seqno():
    net = make_net(line(3))
    a = net.agents[0]
    a.update_route(2, 4, 2, 1, 10.0)
    a.on_link_failure(1)
    e = a.routes[2]
    assert not e.valid and e.dest_seqno == 5
    # an equal-seqno advertisement of the old route is now stale
    assert not a.update_route(2, 4, 1, 1, 10.0)


def test_expired_route_is_invalidated_lazily():
    net = make_net(line(3))
    a = net.agents[0]
    a.update_route(2, 4, 2, 1, 1.0)
    net.engine.queue.now = 2.0
    assert a.valid_route(2) is None
    assert a.routes[2].dest_seqno == 5


def test_silent_non_next_hop_neighbor_sends_no_rerr():
    net = make_net(line(3))
    a = net.agents[1]
    a.update_route(2, 4, 1, 2, 10.0)
    a.routes[2].precursors.add(0)
    a.on_link_failure(0)
    assert not net.medium.macs[1].tx_queue


def test_chain_delivers_end_to_end():
    net = make_net(line(5))
    net.schedule_packets([data(0, 4, t=5.0 + 0.25 * k, seq=k) for k in range(20)])
    net.run(20.0)
    recs = list(net.log)
    assert sum(r.delivered_at is not None for r in recs) >= 15
    assert all(r.hops == 4 for r in recs if r.delivered_at is not None)
    assert net.monitor.seqno_violations == 0
    assert net.monitor.seqno_checks > 0


def test_outcomes_are_exclusive():
    net = make_net(line(5))
    net.schedule_packets([data(0, 4, t=2.0 + 0.05 * k, seq=k) for k in range(100)])
    net.run(30.0)
    assert net.log.double_final == 0
    for r in net.log:
        assert (r.delivered_at is None) or (r.drop_reason is None)
