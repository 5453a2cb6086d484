"""Experiment configuration: JSON parsing, validation and defaults."""

from __future__ import annotations

import dataclasses
import difflib
import json
from dataclasses import dataclass, field

from .mac import CsmaParams
from .radio import RadioParams
from .routing.aodv import AodvParams
from .routing.aomdv import AomdvParams
from .routing.core import LABELS, RoutingParams
from .routing.dsdv import DsdvParams
from .scenario import SCENARIO_NODES, ScenarioConfig
from .simulation import MAX_RUNS, SimParams

SECTIONS = {
    "radio": RadioParams,
    "csma": CsmaParams,
    "routing": RoutingParams,
    "aodv": AodvParams,
    "aomdv": AomdvParams,
    "dsdv": DsdvParams,
    "scenario": ScenarioConfig,
}
# scenario_id and range come from the top level and the radio section
_SCENARIO_SKIP = {"scenario_id", "range_m"}
TOP_LEVEL = ("protocols", "scenarios", "n_runs", "master_seed", "sim_time_s",
             "hello_interval_s", "mod_hello_interval_s")
# written into metadata files and ignored on read
PROVENANCE_KEY = "provenance"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    protocols: list = field(default_factory=lambda: list(LABELS))
    scenarios: list = field(default_factory=lambda: sorted(SCENARIO_NODES))
    n_runs: int = 30
    master_seed: int = 1
    sim_time_s: float = 180.0
    hello_interval_s: float = 1.0
    mod_hello_interval_s: float = 5.0
    sections: dict = field(default_factory=dict)

    def sim_params(self) -> SimParams:
        built = {name: cls(**self.sections.get(name, {})) for name, cls in SECTIONS.items()
                 if name != "scenario"}
        return SimParams(sim_time_s=self.sim_time_s, base_hello_s=self.hello_interval_s,
                         mod_hello_s=self.mod_hello_interval_s,
                         scenario=dict(self.sections.get("scenario", {})), **built)

    def to_dict(self) -> dict:
        """Every effective value, defaults included, in config-file form."""
        out = {k: getattr(self, k) for k in TOP_LEVEL}
        for name, cls in SECTIONS.items():
            overrides = self.sections.get(name, {})
            vals = {}
            for f in dataclasses.fields(cls):
                if name == "scenario" and f.name in _SCENARIO_SKIP:
                    continue
                v = overrides.get(f.name, _default(f))
                vals[f.name] = list(v) if isinstance(v, tuple) else v
            out[name] = vals
        return out


def _default(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    return f.default_factory()


def _suggest(key, valid):
    close = difflib.get_close_matches(key, valid, n=1, cutoff=0.6)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate_config(raw) -> ExperimentConfig:
    """Parse JSON text (or an already-decoded dict) into a config.

    Collects every problem before raising :class:`ConfigError`.
    Empty text gives the defaults.
    """
    if isinstance(raw, (str, bytes)):
        text = raw.decode() if isinstance(raw, bytes) else raw
        if not text.strip():
            data = {}
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError([f"invalid JSON: {exc}"]) from None
    else:
        data = dict(raw or {})
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a JSON object"])
    data = {k: v for k, v in data.items() if k != PROVENANCE_KEY}

    errors = []
    cfg = ExperimentConfig()
    valid_top = list(TOP_LEVEL) + list(SECTIONS)
    for key in data:
        if key not in valid_top:
            errors.append(f"unknown key {key!r}{_suggest(key, valid_top)}")

    if "protocols" in data:
        protos = data["protocols"]
        if not isinstance(protos, list) or not protos:
            errors.append("protocols must be a non-empty list")
        else:
            bad = [p for p in protos if not isinstance(p, str) or p.upper() not in LABELS]
            for p in bad:
                errors.append(f"unknown protocol {p!r}{_suggest(str(p).upper(), list(LABELS))}")
            if not bad:
                cfg.protocols = [p.upper() for p in protos]
    if "scenarios" in data:
        scen = data["scenarios"]
        if not isinstance(scen, list) or not scen:
            errors.append("scenarios must be a non-empty list")
        else:
            bad = [s for s in scen if not isinstance(s, int) or isinstance(s, bool)
                   or s not in SCENARIO_NODES]
            for s in bad:
                errors.append(f"unknown scenario {s!r}; expected one of {sorted(SCENARIO_NODES)}")
            if not bad:
                cfg.scenarios = list(scen)
    if "n_runs" in data:
        v = data["n_runs"]
        if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= MAX_RUNS:
            errors.append(f"n_runs must be an integer in [1, {MAX_RUNS}], got {v!r}")
        else:
            cfg.n_runs = v
    if "master_seed" in data:
        v = data["master_seed"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            errors.append(f"master_seed must be a non-negative integer, got {v!r}")
        else:
            cfg.master_seed = v
    for key in ("sim_time_s", "hello_interval_s", "mod_hello_interval_s"):
        if key in data:
            v = data[key]
            if not _is_number(v) or not v > 0:
                errors.append(f"{key} must be a positive number, got {v!r}")
            else:
                setattr(cfg, key, float(v))

    for name, cls in SECTIONS.items():
        if name not in data:
            continue
        section = data[name]
        if not isinstance(section, dict):
            errors.append(f"{name} must be an object")
            continue
        names = [f.name for f in dataclasses.fields(cls)
                 if not (name == "scenario" and f.name in _SCENARIO_SKIP)]
        vals = {}
        for k, v in section.items():
            if k not in names:
                errors.append(f"unknown key {name}.{k}{_suggest(k, names)}")
            else:
                vals[k] = tuple(v) if isinstance(v, list) else v
        try:
            cls(**vals)
        except (TypeError, ValueError) as exc:
            errors.append(f"{name}: {exc}")
        else:
            cfg.sections[name] = vals

    if errors:
        raise ConfigError(errors)
    return cfg
