"""Command-line experiment runner.

    python -m cropwsn --config exp.json --out results/

Runs the protocol x scenario x replication matrix and writes ``runs.csv``,
``aggregates.csv``, ``summary.txt`` and ``metadata.json``.  Exit status is
0 on success, 2 for a bad configuration and 3 when a run fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import PROVENANCE_KEY, ConfigError, ExperimentConfig, validate_config
from .metrics import aggregate, format_summary, score_from_aggregates
from .simulation import DROP_COLUMNS, SimParams, derive_seed, simulate

log = logging.getLogger("cropwsn")

RUNS_HEADER = ("protocol,scenario,seed,pdr,delay_ms,total_energy_kj,avg_energy_kj,"
               "avg_energy_sensors_kj,offered,delivered,drop_queue,drop_csma,drop_noroute,"
               "drop_collision,hello_tx,rreq_tx,rrep_tx,rerr_tx,dsdv_update_tx").split(",")
AGG_HEADER = ["protocol", "scenario", "metric", "mean", "stddev", "ci95_halfwidth",
              "n_runs", "n_undefined"]
CONTROL_COLUMNS = {"HELLO": "hello_tx", "RREQ": "rreq_tx", "RREP": "rrep_tx",
                   "RERR": "rerr_tx", "DSDV_UPDATE": "dsdv_update_tx"}
JOBS_ENV = "CROPWSN_JOBS"


class RunFailure(RuntimeError):
    pass


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_row(report) -> dict:
    row = {k: 0 for k in RUNS_HEADER}
    row.update(protocol=report.protocol, scenario=report.scenario, seed=report.seed,
               pdr=report.pdr, delay_ms=report.delay_ms,
               total_energy_kj=report.total_energy_kj, avg_energy_kj=report.avg_energy_kj,
               avg_energy_sensors_kj=report.avg_energy_sensors_kj,
               offered=report.offered, delivered=report.delivered)
    for reason, n in report.drops.items():
        row[DROP_COLUMNS[reason]] += n
    for kind, n in report.control.items():
        if kind in CONTROL_COLUMNS:
            row[CONTROL_COLUMNS[kind]] += n
    return row


def _cell(args):
    label, scenario, run_index, master_seed, params = args
    try:
        report, _ = simulate(label, scenario, run_index, master_seed, params)
    except Exception as exc:  # reported per cell with its coordinates
        raise RunFailure(f"{label} scenario {scenario} run {run_index}: "
                         f"{type(exc).__name__}: {exc}") from exc
    return report


def _jobs(n_tasks: int) -> int:
    cap = os.environ.get(JOBS_ENV)
    jobs = os.cpu_count() or 1
    if cap:
        try:
            jobs = max(1, int(cap))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", JOBS_ENV, cap)
    return max(1, min(jobs, n_tasks))


def run_matrix(cfg: ExperimentConfig, jobs: int | None = None):
    """Every (protocol, scenario, run) cell, in deterministic order."""
    params: SimParams = cfg.sim_params()
    tasks = [(p, s, i, cfg.master_seed, params)
             for s in cfg.scenarios for p in cfg.protocols for i in range(cfg.n_runs)]
    jobs = jobs or _jobs(len(tasks))
    if jobs == 1:
        return [_cell(t) for t in tasks]
    with ProcessPoolExecutor(jobs) as ex:
        return list(ex.map(_cell, tasks))


def runs_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUNS_HEADER)
    for r in reports:
        row = run_row(r)
        w.writerow([_fmt(row[k]) for k in RUNS_HEADER])
    return buf.getvalue()


def aggregates_csv(aggs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGG_HEADER)
    for a in aggs:
        for name in ("pdr", "delay_ms", "avg_energy_kj", "avg_energy_sensors_kj",
                     "total_energy_kj"):
            iv = getattr(a, name)
            w.writerow([a.protocol, a.scenario, name, _fmt(iv.mean), _fmt(iv.stddev),
                        _fmt(iv.halfwidth), iv.n_runs, iv.missing])
    return buf.getvalue()


def write_outputs(out: Path, cfg: ExperimentConfig, reports):
    out.mkdir(parents=True, exist_ok=True)
    aggs = aggregate(reports)
    per_metric, totals = score_from_aggregates(aggs)
    (out / "runs.csv").write_text(runs_csv(reports))
    (out / "aggregates.csv").write_text(aggregates_csv(aggs))
    (out / "summary.txt").write_text(
        "points per metric (higher is better), means pooled over scenarios\n\n"
        + format_summary(per_metric, totals, cfg.protocols))
    meta = cfg.to_dict()
    meta[PROVENANCE_KEY] = {
        "package_version": __version__,
        "seeds": {f"{p}/{s}/{i}": derive_seed(cfg.master_seed, p, s, i)
                  for s in cfg.scenarios for p in cfg.protocols for i in range(cfg.n_runs)},
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cropwsn", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="JSON experiment file (defaults if omitted)")
    ap.add_argument("--protocol", action="append",
                    help="protocol label; repeat or comma-separate for several")
    ap.add_argument("--scenario", action="append", type=int, help="scenario id (1, 2 or 3)")
    ap.add_argument("--runs", type=int, help="replications per cell")
    ap.add_argument("--seed", type=int, help="master seed")
    ap.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    ap.add_argument("--sim-time", type=float, help="simulated seconds per run")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> ExperimentConfig:
    data = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read {args.config}: {exc}"]) from None
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"invalid JSON in {args.config}: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a JSON object"])
    if args.protocol:
        data["protocols"] = [p.strip() for item in args.protocol for p in item.split(",")
                             if p.strip()]
    if args.scenario:
        data["scenarios"] = args.scenario
    if args.runs is not None:
        data["n_runs"] = args.runs
    if args.seed is not None:
        data["master_seed"] = args.seed
    if args.sim_time is not None:
        data["sim_time_s"] = args.sim_time
    return validate_config(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        reports = run_matrix(cfg)
    except RunFailure as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    write_outputs(args.out, cfg, reports)
    log.info("wrote %d runs to %s", len(reports), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
