# coding: utf-8

# # What a slower HELLO buys
#
# The MOD variants beacon every 5 s instead of every 1 s.  HELLO traffic
# drops to about a fifth; the question is what happens to delivery and
# energy.

from cropwsn import simulate

for base in ("AODV", "AOMDV"):
    rows = []
    for label in (base, base + "MOD"):
        r, _ = simulate(label, scenario_id=1, run_index=2, master_seed=1)
        rows.append((label, r))
    (a, ra), (b, rb) = rows
    ratio = rb.control.get("HELLO", 0) / ra.control.get("HELLO", 1)
    print(f"{a:9s} HELLO {ra.control.get('HELLO', 0):5d}  PDR {ra.pdr:.3f}  "
          f"energy {1000 * ra.avg_energy_kj:.3f} J")
    print(f"{b:9s} HELLO {rb.control.get('HELLO', 0):5d}  PDR {rb.pdr:.3f}  "
          f"energy {1000 * rb.avg_energy_kj:.3f} J   (HELLO ratio {ratio:.3f})\n")

# Fewer beacons free airtime on a 250 kbps channel.  A single run is noisy;
# 05_replications.py compares means over several seeds.
