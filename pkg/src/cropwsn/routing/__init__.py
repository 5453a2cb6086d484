from .aodv import AodvAgent, AodvEntry, AodvParams
from .aomdv import (AomdvAgent, AomdvEntry, AomdvParams, PathRecord, aomdv_route_update,
                    paths_consistent)
from .core import (LABELS, Action, AgentFactory, DataPacket, DsdvUpdate, Hello, Rerr, Rrep,
                   Rreq, RoutingParams, factory_for_label, make_variant)
from .dsdv import DsdvAgent, DsdvEntry, DsdvParams

__all__ = [
    "Action", "AgentFactory", "AodvAgent", "AodvEntry", "AodvParams", "AomdvAgent",
    "AomdvEntry", "AomdvParams", "DataPacket", "DsdvAgent", "DsdvEntry", "DsdvParams",
    "DsdvUpdate", "Hello", "LABELS", "PathRecord", "Rerr", "Rrep", "Rreq", "RoutingParams",
    "aomdv_route_update", "factory_for_label", "make_variant", "paths_consistent",
]
