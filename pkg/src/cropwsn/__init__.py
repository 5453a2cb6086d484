"""Discrete-event simulation of DSDV, AODV and AOMDV on a coffee-field sensor network."""

from .metrics import (AggregateReport, RunReport, aggregate, end_to_end_delay,
                      energy_consumption, packet_delivery_ratio, score_summary)
from .scenario import ScenarioConfig, build_scenario, cbr_schedule, project_field
from .simulation import SimParams, derive_seed, simulate

__version__ = "0.1.0"
