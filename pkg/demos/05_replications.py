# coding: utf-8

# # Replications, confidence intervals and the points table
#
# A reduced matrix (scenario 1, 4 replications, 60 s) so it finishes in
# well under a minute.  The command-line runner does the same at full scale:
#
#     python3 -m cropwsn --scenario 1 --runs 30 --out results/

from cropwsn.metrics import aggregate, format_summary, score_from_aggregates
from cropwsn.cli import run_matrix
from cropwsn.config import validate_config

cfg = validate_config({"scenarios": [1], "n_runs": 4, "sim_time_s": 60.0})
reports = run_matrix(cfg, jobs=1)
aggs = aggregate(reports)

print(f"{'protocol':10s} {'PDR':>16s} {'delay ms':>18s}")
for a in aggs:
    print(f"{a.protocol:10s} {a.pdr.mean:7.3f} ± {a.pdr.halfwidth:6.3f} "
          f"{a.delay_ms.mean:8.1f} ± {a.delay_ms.halfwidth:6.1f}")

# Points: 5 for the best mean on a metric down to 1; ties share the higher
# score.

per_metric, totals = score_from_aggregates(aggs)
print()
print(format_summary(per_metric, totals, cfg.protocols))
