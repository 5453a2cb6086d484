# coding: utf-8

# # The coffee plot and where the sensors go
#
# The field is given as four surveyed corners in degrees/minutes/seconds.
# We project them to metres, fit the tightest rectangle around them and lay
# the sensors out in rows, with the sink at the middle of the plot.

import numpy as np

from cropwsn.radio import neighbor_lists
from cropwsn.scenario import (COFFEE_FIELD_CORNERS, ScenarioConfig, bfs_hops, build_scenario,
                              project_field)

field = project_field()
print(f"field {field.width_m:.1f} m x {field.height_m:.1f} m")
for lat, lon in COFFEE_FIELD_CORNERS:
    p = field.to_local(lat, lon)
    print(f"  corner {lat} {lon} -> ({p.x:7.2f}, {p.y:6.2f})")

c = field.centroid
print(f"sink sits at the polygon centroid ({c.x:.2f}, {c.y:.2f})")

# ## Node counts, hop depth and traffic per scenario
#
# A 60 m disk radio reaches across several plant rows, so the network is
# shallow.  The hop histogram shows how far data has to travel to the sink.

for sid in (1, 2, 3):
    sc = build_scenario(ScenarioConfig(scenario_id=sid), seed=1)
    nb = neighbor_lists(sc.positions, 60.0)
    hops = np.array(bfs_hops(nb, sc.sink))
    degree = np.array([len(n) for n in nb])
    print(f"\nscenario {sid}: {len(sc.positions)} nodes, mean degree {degree.mean():.1f}, "
          f"max hops to sink {int(hops.max())}")
    print("  hop histogram", np.bincount(hops.astype(int)).tolist())
    for f in sc.flows:
        print(f"  flow {f.flow_id:2d}: {f.src:2d} -> {f.dst:2d} starting at {f.start_s:5.2f} s")

# ## A quick ASCII map of scenario 1
#
# `S` is the sink, `o` a sensor, `*` a traffic source.

sc = build_scenario(ScenarioConfig(scenario_id=1), seed=1)
cols, rows = 70, 12
grid = [[" "] * cols for _ in range(rows)]
sources = {f.src for f in sc.flows}
for i, p in enumerate(sc.positions):
    x = min(cols - 1, int(p.x / field.width_m * cols))
    y = min(rows - 1, int(p.y / field.height_m * rows))
    grid[rows - 1 - y][x] = "S" if i == sc.sink else ("*" if i in sources else "o")
print("\n" + "\n".join("|" + "".join(r) + "|" for r in grid))
