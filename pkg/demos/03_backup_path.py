# coding: utf-8

# # Surviving a broken link with a stored backup path
#
# Four nodes in a diamond: 0 can reach 3 through 1 or through 2.  The
# multipath agent learns both during one discovery.  We kill the primary
# relay mid-stream and watch traffic move to the other one without a new
# route request.

from cropwsn.network import Network, NodeSetup
from cropwsn.radio import Position
from cropwsn.routing import factory_for_label
from cropwsn.routing.core import DataPacket

pos = [Position(0, 0), Position(40, 28), Position(40, -28), Position(80, 0)]
net = Network(NodeSetup(pos, [5000.0] * 4), factory_for_label("AOMDV"), seed=3)
net.schedule_packets([DataPacket(0, k, 0, 3, 512, 2.0 + 0.25 * k) for k in range(120)])

net.run(10.0)
src = net.agents[0]
paths = src.routes[3].paths
print("paths to node 3:", [(p.next_hop, p.hop_count) for p in paths])
primary = paths[0].next_hop
rreqs = src.rreq_originated

net.kill_node(primary, 10.0)
net.run(32.0)
print(f"killed node {primary} at 10 s; route requests since: {src.rreq_originated - rreqs}")

late = [r for r in net.log if r.created_at > 12.0]
ok = sum(r.delivered_at is not None for r in late)
print(f"packets created after 12 s delivered: {ok}/{len(late)}")
print("remaining paths:", [(p.next_hop, p.hop_count) for p in src.routes[3].paths])
