# coding: utf-8

# # One replication of every protocol
#
# Same placement and same flows for all five protocols (the traffic stream
# is seeded independently of the protocol), 180 simulated seconds each.

from cropwsn import simulate
from cropwsn.routing.core import LABELS

print(f"{'protocol':10s} {'PDR':>6s} {'delay ms':>9s} {'energy J':>9s}  control frames")
for label in LABELS:
    report, net = simulate(label, scenario_id=1, run_index=0, master_seed=1)
    ctrl = ", ".join(f"{k}={v}" for k, v in sorted(report.control.items()) if k != "DATA")
    print(f"{label:10s} {report.pdr:6.3f} {report.delay_ms:9.1f} "
          f"{1000 * report.avg_energy_kj:9.3f}  {ctrl}")

# Proactive DSDV keeps a full table, so packets leave at once (lowest
# delay) but data sent over a stale entry is lost.  The on-demand protocols
# wait for discovery; the multipath one can skip rediscovery when a backup
# path is still alive.

# ## Where packets were lost

report, _ = simulate("AODV", scenario_id=1, run_index=0, master_seed=1)
print("\nAODV drops by reason:", report.drops)
print(f"offered {report.offered}, delivered {report.delivered}")
