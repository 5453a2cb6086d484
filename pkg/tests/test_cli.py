import csv
import io
import json
import subprocess
import sys

import pytest

from cropwsn.cli import RUNS_HEADER, main, run_matrix, runs_csv
from cropwsn.config import ConfigError, ExperimentConfig, validate_config
from cropwsn.routing.core import LABELS
from cropwsn.simulation import derive_seed

SMALL = {"protocols": ["AODV", "DSDV"], "scenarios": [1], "n_runs": 2, "sim_time_s": 8.0}


def test_empty_config_gives_defaults():
    cfg = validate_config("")
    assert cfg.protocols == list(LABELS) and len(LABELS) == 5
    assert cfg.scenarios == [1, 2, 3] and cfg.n_runs == 30 and cfg.sim_time_s == 180.0
    assert cfg.hello_interval_s == 1.0 and cfg.mod_hello_interval_s == 5.0
    p = cfg.sim_params()
    assert p.radio.range_m == 60.0 and p.csma.queue_capacity == 50


def test_typo_names_nearest_key():
    with pytest.raises(ConfigError) as exc:
        validate_config('{"protocls": ["AODV"]}')
    assert "protocls" in str(exc.value) and "did you mean 'protocols'" in str(exc.value)


def test_errors_are_aggregated():
    with pytest.raises(ConfigError) as exc:
        validate_config({"hello_interval_s": -1, "scenarios": [9], "radio": {"rangee": 1},
                         "protocols": ["OLSR"]})
    errs = exc.value.errors
    assert len(errs) == 4
    assert any("hello_interval_s" in e for e in errs)
    assert any("radio.rangee" in e for e in errs)


def test_section_values_are_validated():
    with pytest.raises(ConfigError):
        validate_config({"csma": {"min_be": 9, "max_be": 5}})
    cfg = validate_config({"dsdv": {"update_period_s": 10.0}})
    assert cfg.sim_params().dsdv.update_period_s == 10.0


def test_bad_json():
    with pytest.raises(ConfigError, match="invalid JSON"):
        validate_config("{nope")


def test_seed_derivation_injective():
    seen = {}
    for p in (None, "AOMDV", "AOMDVMOD", "AODV", "AODVMOD", "DSDV"):
        for s in (1, 2, 3):
            for i in range(40):
                k = derive_seed(1, p, s, i)
                assert k not in seen, (p, s, i, seen.get(k))
                seen[k] = (p, s, i)
    assert derive_seed(1, "AODV", 1, 0) != derive_seed(2, "AODV", 1, 0)
    with pytest.raises(ValueError):
        derive_seed(1, "AODV", 1, 1 << 16)


def test_rows_and_header():
    cfg = validate_config(SMALL)
    text = runs_csv(run_matrix(cfg, jobs=1))
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == RUNS_HEADER
    assert ",".join(rows[0]) == ("protocol,scenario,seed,pdr,delay_ms,total_energy_kj,"
                                 "avg_energy_kj,avg_energy_sensors_kj,offered,delivered,"
                                 "drop_queue,drop_csma,drop_noroute,drop_collision,hello_tx,"
                                 "rreq_tx,rrep_tx,rerr_tx,dsdv_update_tx")
    assert len(rows) - 1 == 2 * 1 * 2


def test_full_matrix_row_count_by_construction():
    cfg = ExperimentConfig()
    cells = [(p, s, i) for s in cfg.scenarios for p in cfg.protocols for i in range(cfg.n_runs)]
    assert len(cells) == len(set(cells)) == 450


def test_cli_outputs_and_determinism(tmp_path):
    conf = tmp_path / "exp.json"
    conf.write_text(json.dumps(SMALL))
    assert main(["--config", str(conf), "--out", str(tmp_path / "a")]) == 0
    assert main(["--config", str(conf), "--out", str(tmp_path / "b")]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()
    for name in ("aggregates.csv", "summary.txt", "metadata.json"):
        assert (a / name).exists()
    assert "total" in (a / "summary.txt").read_text()


def test_metadata_round_trip(tmp_path):
    assert main(["--protocol", "AOMDV,DSDV", "--scenario", "2", "--runs", "2",
                 "--sim-time", "6", "--seed", "9", "--out", str(tmp_path / "a")]) == 0
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert meta["master_seed"] == 9 and meta["protocols"] == ["AOMDV", "DSDV"]
    assert meta["provenance"]["seeds"]["DSDV/2/1"] == derive_seed(9, "DSDV", 2, 1)
    assert "radio" in meta and "range_m" in meta["radio"]
    assert main(["--config", str(tmp_path / "a" / "metadata.json"),
                 "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "runs.csv").read_bytes() == (tmp_path / "b" / "runs.csv").read_bytes()


def test_single_run_has_no_interval(tmp_path):
    assert main(["--protocol", "AODV", "--scenario", "1", "--runs", "1", "--sim-time", "5",
                 "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "aggregates.csv")))
    assert rows and all(r["ci95_halfwidth"] == "" and r["n_runs"] in ("1", "0") for r in rows)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"protocls": ["AODV"], "n_runs": 0}')
    assert main(["--config", str(bad), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "protocols" in err and "n_runs" in err
    assert not (tmp_path / "runs.csv").exists()


def test_run_failure_exit_code(tmp_path, monkeypatch, capsys):
    import cropwsn.cli as cli

    def boom(*a, **k):
        raise RuntimeError("kaboom")

    monkeypatch.setattr(cli, "simulate", boom)
    assert main(["--protocol", "AODV", "--scenario", "1", "--runs", "1", "--sim-time", "2",
                 "--out", str(tmp_path)]) == 3
    assert "AODV scenario 1 run 0" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cropwsn", "--protocol", "DSDV", "--scenario",
                        "1", "--runs", "1", "--sim-time", "3", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "runs.csv").read_text().startswith("protocol,scenario,seed")
