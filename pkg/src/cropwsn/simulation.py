"""One replication: build the scenario, run a protocol over it, measure."""

from __future__ import annotations

from dataclasses import dataclass, field

from .mac import CsmaParams, Drop
from .metrics import RunReport, end_to_end_delay, energy_consumption, packet_delivery_ratio
from .network import Network, NodeSetup
from .radio import RadioParams
from .routing.aodv import AodvParams
from .routing.aomdv import AomdvParams
from .routing.core import LABELS, RoutingParams, factory_for_label
from .routing.dsdv import DsdvParams
from .scenario import ScenarioConfig, build_scenario, cbr_schedule

# slot 0 is shared by every protocol so placements and flows match across them
_SHARED = 0
MAX_RUNS = 1 << 16
MAX_SCENARIO = 1 << 8


def derive_seed(master_seed: int, protocol: str | None, scenario: int, run_index: int) -> int:
    """Pack ``(master, protocol, scenario, run)`` into one integer seed.

    Distinct tuples give distinct seeds.  ``protocol=None`` names the stream
    used for placement and traffic, which is the same for all protocols.
    """
    if master_seed < 0:
        raise ValueError("master_seed must be non-negative")
    if not 0 <= run_index < MAX_RUNS:
        raise ValueError(f"run_index must be in [0, {MAX_RUNS})")
    if not 0 <= scenario < MAX_SCENARIO:
        raise ValueError(f"scenario must be in [0, {MAX_SCENARIO})")
    slot = _SHARED if protocol is None else LABELS.index(protocol.upper()) + 1
    return (((master_seed << 8) | slot) << 8 | scenario) << 16 | run_index


@dataclass
class SimParams:
    sim_time_s: float = 180.0
    base_hello_s: float = 1.0
    mod_hello_s: float = 5.0
    radio: RadioParams = field(default_factory=RadioParams)
    csma: CsmaParams = field(default_factory=CsmaParams)
    routing: RoutingParams = field(default_factory=RoutingParams)
    aodv: AodvParams = field(default_factory=AodvParams)
    aomdv: AomdvParams = field(default_factory=AomdvParams)
    dsdv: DsdvParams = field(default_factory=DsdvParams)
    scenario: dict = field(default_factory=dict)

    def proto_params(self, protocol: str):
        return {"AODV": self.aodv, "AOMDV": self.aomdv, "DSDV": self.dsdv}[protocol]


DROP_COLUMNS = {
    Drop.QUEUE_FULL.value: "drop_queue",
    Drop.CSMA_FAILURE.value: "drop_csma",
    Drop.NO_ROUTE.value: "drop_noroute",
    Drop.COLLISION.value: "drop_collision",
    # losses without their own column are folded into the closest one
    Drop.OUT_OF_RANGE.value: "drop_collision",
    Drop.TTL.value: "drop_noroute",
    Drop.LOOP.value: "drop_noroute",
}


def build_network(label: str, scenario_id: int, run_index: int, master_seed: int,
                  params: SimParams | None = None, trace: bool = False):
    params = params or SimParams()
    factory = factory_for_label(label, params.base_hello_s, params.mod_hello_s)
    cfg = ScenarioConfig(scenario_id=scenario_id, range_m=params.radio.range_m, **params.scenario)
    scen = build_scenario(cfg, derive_seed(master_seed, None, scenario_id, run_index))
    seed = derive_seed(master_seed, label, scenario_id, run_index)
    net = Network(NodeSetup(scen.positions, scen.initial_energy, scen.sink), factory,
                  seed=seed, radio=params.radio, csma=params.csma, routing=params.routing,
                  proto_params=params.proto_params(factory.protocol), trace=trace)
    for flow in scen.flows:
        net.schedule_packets(cbr_schedule(flow, params.sim_time_s))
    return net, scen, seed


def report_for(net: Network, label: str, scenario_id: int, seed: int, flows) -> RunReport:
    records = list(net.log)
    total, avg, sensors = energy_consumption(net.energy, net.setup.sink)
    drops: dict[str, int] = {}
    for r in records:
        if r.drop_reason is not None:
            drops[r.drop_reason] = drops.get(r.drop_reason, 0) + 1
    return RunReport(
        protocol=label, scenario=scenario_id, seed=seed,
        pdr=packet_delivery_ratio(records, flows),
        delay_ms=end_to_end_delay(records),
        total_energy_kj=total, avg_energy_kj=avg, avg_energy_sensors_kj=sensors,
        offered=len(records),
        delivered=sum(1 for r in records if r.delivered_at is not None),
        drops=drops, control=net.control_counts,
    )


def simulate(label: str, scenario_id: int = 1, run_index: int = 0, master_seed: int = 1,
             params: SimParams | None = None, trace: bool = False):
    """Run one replication; returns ``(RunReport, Network)``."""
    params = params or SimParams()
    net, scen, seed = build_network(label, scenario_id, run_index, master_seed, params, trace)
    net.run(params.sim_time_s)
    return report_for(net, label.upper(), scenario_id, seed, scen.flows), net
