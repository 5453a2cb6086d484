import math
import random

import numpy as np
import pytest
from scipy import stats

from cropwsn.metrics import (RunReport, aggregate, aggregate_ratio, end_to_end_delay,
                             energy_consumption, packet_delivery_ratio, rank_scores,
                             score_summary, t_interval)
from cropwsn.network import PacketRecord
from cropwsn.radio import EnergyState, Position
from cropwsn.scenario import Flow, cbr_schedule

from conftest import make_net
from oracles import (EventRecorder, brute_delay_ms, brute_energy_kj, brute_pdr,
                     log_from_events, synthetic_energy, synthetic_events)


def rec(flow, seq, s, r=None, drop=None):
    return PacketRecord(flow, seq, 1, 0, s, r, drop)


def test_delay_worked_example():
    assert end_to_end_delay([rec(0, 0, 1.0, 1.05), rec(0, 1, 2.0, 2.10)]) == pytest.approx(75.0)
    assert end_to_end_delay([rec(0, 0, 3.0, 3.0)]) == 0.0


def test_delay_ignores_dropped_and_in_flight():
    log = [rec(0, 0, 1.0, 1.05), rec(0, 1, 1.0, None, "NO_ROUTE"), rec(0, 2, 1.0)]
    assert end_to_end_delay(log) == pytest.approx(50.0)
    assert end_to_end_delay([rec(0, 0, 1.0, None, "NO_ROUTE")]) is None


def test_pdr_worked_example():
    log = [rec(0, 0, 0, 1), rec(0, 1, 0, 1), rec(1, 0, 0, 1), rec(1, 1, 0)]
    assert packet_delivery_ratio(log) == pytest.approx(0.75)
    assert packet_delivery_ratio([rec(0, i, 0, 1) for i in range(5)]) == 1.0


def test_pdr_is_per_flow_mean_not_aggregate():
    # flow 0: 10 offered, all delivered; flow 1: 1000 offered, 100 delivered
    log = [rec(0, i, 0, 1) for i in range(10)]
    log += [rec(1, i, 0, 1 if i < 100 else None) for i in range(1000)]
    assert packet_delivery_ratio(log) == pytest.approx((1.0 + 0.1) / 2)
    assert aggregate_ratio(log) == pytest.approx(110 / 1010)
    assert packet_delivery_ratio(log) != pytest.approx(aggregate_ratio(log))


def test_pdr_skips_empty_flow_with_warning(caplog):
    log = [rec(0, 0, 0, 1), rec(0, 1, 0)]
    assert packet_delivery_ratio(log, flows=[0, 7]) == pytest.approx(0.5)
    assert "offered no packets" in caplog.text


def test_energy_worked_example():
    states = [EnergyState(5000.0, c) for c in (100.0, 200.0, 0.0)]
    total, avg, _ = energy_consumption(states)
    assert total == pytest.approx(0.3) and avg == pytest.approx(0.1)
    assert energy_consumption([EnergyState(5000.0) for _ in range(3)])[:2] == (0.0, 0.0)


def test_energy_heterogeneous_budgets():
    states = [EnergyState(50_000.0, 1000.0), EnergyState(5000.0, 200.0), EnergyState(5000.0, 400.0)]
    total, avg, sensors = energy_consumption(states, sink=0)
    assert total == pytest.approx(1.6)
    assert avg == pytest.approx(1.6 / 3)
    assert sensors == pytest.approx(0.3)


@pytest.mark.parametrize("seed", range(20))
def test_formulas_against_brute_force(seed):
    events = synthetic_events(seed)
    log = log_from_events(events)
    d = end_to_end_delay(log)
    want = brute_delay_ms(events)
    assert (d is None and want is None) or math.isclose(d, want, rel_tol=1e-9)
    assert math.isclose(packet_delivery_ratio(log), brute_pdr(events), rel_tol=1e-9)
    states, charges = synthetic_energy(seed)
    for got, exp in zip(energy_consumption(states, sink=0), brute_energy_kj(charges)):
        assert math.isclose(got, exp, rel_tol=1e-9, abs_tol=1e-15)


def test_metrics_match_raw_trace_of_a_real_run(monkeypatch):
    pos = [Position(x, y) for x in (0, 45, 90) for y in (0, 45)]
    net = make_net(pos, "AODV", seed=11)
    tap = EventRecorder(net, monkeypatch)
    flows = [Flow(0, 5, 0, 2.0), Flow(1, 4, 1, 3.0), Flow(2, 3, 0, 2.5)]
    for f in flows:
        net.schedule_packets(cbr_schedule(f, 30.0))
    net.run(30.0)
    events = tap.final_events()
    log = list(net.log)
    assert len(log) == sum(e[0] == "offer" for e in events) > 0
    assert math.isclose(end_to_end_delay(log), brute_delay_ms(events), rel_tol=1e-9)
    assert math.isclose(packet_delivery_ratio(log, flows), brute_pdr(events), rel_tol=1e-9)
    charges = [tap.charges.get(i, []) for i in range(len(pos))]
    for got, exp in zip(energy_consumption(net.energy, 0), brute_energy_kj(charges)):
        assert math.isclose(got, exp, rel_tol=1e-9)
    for st in net.energy:
        assert st.residual_j == pytest.approx(st.initial_j - st.consumed_j)


def test_t_interval_hand_example():
    iv = t_interval([1.0, 2.0, 3.0])
    assert iv.mean == 2.0 and iv.stddev == pytest.approx(1.0)
    # t_{0.975, 2} = 4.302653 from tables
    assert iv.halfwidth == pytest.approx(4.302653 / math.sqrt(3), abs=1e-6)
    assert iv.halfwidth == pytest.approx(2.484, abs=5e-4)


def test_t_interval_degenerate_cases():
    assert t_interval([5.0, 5.0, 5.0]).halfwidth == 0.0
    one = t_interval([4.2])
    assert one.mean == 4.2 and one.halfwidth is None and one.n_runs == 1
    part = t_interval([1.0, None, 3.0])
    assert part.n_runs == 2 and part.missing == 1


def test_t_interval_coverage():
    rng = np.random.default_rng(2024)
    hits = 0
    trials = 2000
    for _ in range(trials):
        iv = t_interval(list(rng.normal(10.0, 3.0, 30)))
        hits += abs(iv.mean - 10.0) <= iv.halfwidth
    # binomial(2000, 0.95) has sd about 0.005
    assert 0.935 <= hits / trials <= 0.965


def test_aggregate_groups_and_orders():
    reps = [RunReport(p, s, i, 0.5 + 0.1 * i, 10.0 * i if i else None, 1.0, 0.1, 0.1)
            for s in (2, 1) for p in ("DSDV", "AODV") for i in range(3)]
    aggs = aggregate(reps)
    assert [(a.scenario, a.protocol) for a in aggs] == [(1, "AODV"), (1, "DSDV"),
                                                         (2, "AODV"), (2, "DSDV")]
    a = aggs[0]
    assert a.pdr.mean == pytest.approx(0.6) and a.pdr.n_runs == 3
    assert a.delay_ms.n_runs == 2 and a.delay_ms.missing == 1
    want = stats.t.interval(0.95, 2, loc=0.6, scale=stats.sem([0.5, 0.6, 0.7]))
    assert a.pdr.halfwidth == pytest.approx((want[1] - want[0]) / 2)


def test_run_report_validation():
    with pytest.raises(ValueError):
        RunReport("AODV", 1, 0, 1.2, 1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        RunReport("AODV", 1, 0, 0.5, -1.0, 0.0, 0.0, 0.0)


def test_rank_scores_ties_share_higher():
    assert rank_scores({"a": 3, "b": 3, "c": 1}) == {"a": 3, "b": 3, "c": 1}
    assert rank_scores({"a": 7, "b": 7, "c": 7}) == {"a": 3, "b": 3, "c": 3}
    assert rank_scores({"a": 1, "b": 2, "c": 3}, higher_better=False) == {"a": 3, "b": 2, "c": 1}


def test_polarity_reversal_reverses_ranks():
    rng = random.Random(5)
    means = {p: rng.random() for p in "vwxyz"}
    up = rank_scores(means, True)
    down = rank_scores(means, False)
    assert all(up[p] + down[p] == 6 for p in means)


def test_score_summary_totals_and_unknown_metric():
    table = {"pdr": {"A": 0.9, "B": 0.5}, "delay_ms": {"A": 20.0, "B": 10.0},
             "energy_kj": {"A": 1.0, "B": 1.0}}
    per, totals = score_summary(table)
    assert per["delay_ms"] == {"A": 1, "B": 2}
    assert totals == {"A": 2 + 1 + 2, "B": 1 + 2 + 2}
    with pytest.raises(ValueError, match="unknown metric"):
        score_summary({"jitter": {"A": 1.0}})


def test_reference_points_rows_sum_to_totals():
    # the reference points rows add up to the reference totals
    rows = {"pdr": [4, 5, 3, 3, 1], "delay": [4, 4, 2, 3, 4], "energy": [3, 3, 4, 4, 4]}
    assert [sum(c) for c in zip(*rows.values())] == [11, 12, 9, 10, 9]
