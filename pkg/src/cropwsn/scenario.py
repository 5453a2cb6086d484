"""Coffee-field geometry, sensor placement and CBR traffic."""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field

from .kernel import RngStream
from .radio import Position, neighbor_lists
from .routing.core import DataPacket

EARTH_RADIUS_M = 6_371_008.8

# corner coordinates of the surveyed plot
COFFEE_FIELD_CORNERS = (
    ("19°29'48.16\"S", "40°45'32.54\"W"),
    ("19°29'46.86\"S", "40°45'31.95\"W"),
    ("19°29'48.34\"S", "40°45'25.16\"W"),
    ("19°29'49.62\"S", "40°45'25.75\"W"),
)

SCENARIO_NODES = {1: 40, 2: 55, 3: 70}
# (distinct sources, connections)
FLOW_PATTERN = {1: (6, 8), 2: (7, 11), 3: (10, 14)}

SINK_INITIAL_J = 50_000.0
SENSOR_INITIAL_J = 5_000.0

_DMS = re.compile(
    r"""^\s*(?P<deg>\d+(?:\.\d+)?)\s*[°d]\s*
        (?:(?P<min>\d+(?:\.\d+)?)\s*['′m]\s*)?
        (?:(?P<sec>\d+(?:\.\d+)?)\s*(?:["″s]|'')\s*)?
        (?P<hem>[NSEWnsew])\s*$""", re.X)


def parse_coordinate(value) -> float:
    """Decimal degrees from a float or a DMS string such as ``19°29'48.16"S``."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _DMS.match(text)
    if m is None:
        raise ValueError(f"cannot parse coordinate {value!r}")
    deg = float(m["deg"]) + float(m["min"] or 0) / 60 + float(m["sec"] or 0) / 3600
    return -deg if m["hem"].upper() in "SW" else deg


def _hull(points):
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _area(poly):
    return 0.5 * abs(sum(poly[i][0] * poly[i - 1][1] - poly[i - 1][0] * poly[i][1]
                         for i in range(len(poly))))


@dataclass(frozen=True)
class FieldGeometry:
    corners: tuple
    width_m: float
    height_m: float
    # local frame: rotate projected metres by ``angle`` then shift by ``offset``
    angle: float = 0.0
    offset: tuple = (0.0, 0.0)
    lat0: float = 0.0
    lon0: float = 0.0

    @property
    def center(self) -> Position:
        return Position(self.width_m / 2, self.height_m / 2)

    @property
    def centroid(self) -> Position:
        """Area centroid of the corner polygon in the local frame."""
        local = [self.to_local(la, lo) for la, lo in self.corners]
        pts = _hull([(p.x, p.y) for p in local])
        a = cx = cy = 0.0
        for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
            w = x0 * y1 - x1 * y0
            a += w
            cx += (x0 + x1) * w
            cy += (y0 + y1) * w
        return Position(cx / (3 * a), cy / (3 * a))

    def to_local(self, lat, lon) -> Position:
        x, y = _equirect(parse_coordinate(lat), parse_coordinate(lon), self.lat0, self.lon0)
        c, s = math.cos(self.angle), math.sin(self.angle)
        return Position(c * x - s * y - self.offset[0], s * x + c * y - self.offset[1])


def _equirect(lat, lon, lat0, lon0):
    x = EARTH_RADIUS_M * math.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = EARTH_RADIUS_M * math.radians(lat - lat0)
    return x, y


def project_field(corners=COFFEE_FIELD_CORNERS) -> FieldGeometry:
    """Project geodetic corners to metres and fit the tightest enclosing rectangle.

    Points are projected equirectangularly about the centroid latitude; the
    rectangle is the minimum-area one aligned with an edge of their convex
    hull, with its long side as the width.
    """
    geo = [(parse_coordinate(la), parse_coordinate(lo)) for la, lo in corners]
    if len(geo) != 4:
        raise ValueError("a field needs exactly 4 corners")
    lat0 = sum(p[0] for p in geo) / 4
    lon0 = sum(p[1] for p in geo) / 4
    xy = [_equirect(la, lo, lat0, lon0) for la, lo in geo]
    hull = _hull(xy)
    span = max(math.dist(a, b) for a in xy for b in xy)
    if len(hull) < 3 or _area(hull) < 1e-6 * max(span, 1.0) ** 2:
        raise ValueError("degenerate field: corners are collinear")
    best = None
    for i in range(len(hull)):
        (x1, y1), (x2, y2) = hull[i - 1], hull[i]
        theta = -math.atan2(y2 - y1, x2 - x1)
        c, s = math.cos(theta), math.sin(theta)
        us = [c * x - s * y for x, y in hull]
        vs = [s * x + c * y for x, y in hull]
        w, h = max(us) - min(us), max(vs) - min(vs)
        if best is None or w * h < best[0] - 1e-9:
            best = (w * h, w, h, theta, min(us), min(vs))
    _, w, h, theta, umin, vmin = best
    if h > w:
        # keep the long axis along x
        theta -= math.pi / 2
        c, s = math.cos(theta), math.sin(theta)
        us = [c * x - s * y for x, y in hull]
        vs = [s * x + c * y for x, y in hull]
        w, h, umin, vmin = max(us) - min(us), max(vs) - min(vs), min(us), min(vs)
    return FieldGeometry(tuple(corners), w, h, theta, (umin, vmin), lat0, lon0)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: int = 1
    rows: int = 4
    layout: str = "grid"
    # used by the "crop" layout only
    row_spacing_m: float = 3.0
    plant_spacing_m: float = 0.7
    range_m: float = 60.0
    destination_policy: str = "mixed"
    start_window_s: tuple = (5.0, 15.0)
    rate_pps: float = 4.0
    payload_bytes: int = 512

    def __post_init__(self):
        if self.scenario_id not in SCENARIO_NODES:
            raise ValueError(f"scenario_id must be one of {sorted(SCENARIO_NODES)}")
        if self.rows < 1:
            raise ValueError("rows must be >= 1")
        if self.layout not in ("grid", "crop"):
            raise ValueError("layout must be 'grid' or 'crop'")
        if self.destination_policy not in ("mixed", "all-to-sink"):
            raise ValueError("destination_policy must be 'mixed' or 'all-to-sink'")
        lo, hi = self.start_window_s
        if not 0 <= lo <= hi:
            raise ValueError("start window must satisfy 0 <= lo <= hi")
        if self.rate_pps <= 0 or self.payload_bytes <= 0:
            raise ValueError("rate and payload must be positive")

    @property
    def node_count(self) -> int:
        return SCENARIO_NODES[self.scenario_id]


@dataclass
class Scenario:
    config: ScenarioConfig
    field: FieldGeometry
    positions: list
    sink: int = 0
    flows: list = field(default_factory=list)

    @property
    def sensors(self) -> list[int]:
        return [i for i in range(len(self.positions)) if i != self.sink]

    @property
    def initial_energy(self) -> list[float]:
        return [SINK_INITIAL_J if i == self.sink else SENSOR_INITIAL_J
                for i in range(len(self.positions))]


def bfs_hops(neighbors, source: int) -> list[float]:
    dist = [math.inf] * len(neighbors)
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        for v in neighbors[u]:
            if dist[v] == math.inf:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def _grid_positions(n, rows, width, height):
    cols = math.ceil(n / rows)
    row_pitch = height / rows
    col_pitch = width / cols
    pts = [Position(col_pitch * (j + 0.5), row_pitch * (i + 0.5))
           for i in range(rows) for j in range(cols)]
    # extras come off the far corner (last row, largest x)
    return pts[:n]


def _crop_positions(n, width, height, row_spacing, plant_spacing):
    rows = max(1, int(height // row_spacing))
    per_row = max(1, int(width // plant_spacing))
    y0 = (height - (rows - 1) * row_spacing) / 2
    x0 = (width - (per_row - 1) * plant_spacing) / 2
    plants = [Position(x0 + j * plant_spacing, y0 + i * row_spacing)
              for i in range(rows) for j in range(per_row)]
    if n > len(plants):
        raise ValueError(f"field holds only {len(plants)} plants, need {n}")
    step = len(plants) / n
    return [plants[int(k * step)] for k in range(n)]


def place_nodes(config: ScenarioConfig, geometry: FieldGeometry | None = None) -> Scenario:
    """Sink at the field centroid (node 0) plus ``node_count`` sensors."""
    geometry = geometry or project_field()
    n = config.node_count
    if config.layout == "grid":
        sensors = _grid_positions(n, config.rows, geometry.width_m, geometry.height_m)
    else:
        sensors = _crop_positions(n, geometry.width_m, geometry.height_m,
                                  config.row_spacing_m, config.plant_spacing_m)
    positions = [geometry.centroid] + sensors
    hops = bfs_hops(neighbor_lists(positions, config.range_m), 0)
    unreachable = [i for i, h in enumerate(hops) if h == math.inf]
    if unreachable:
        raise ValueError(
            f"placement is disconnected at {config.range_m} m range: "
            f"{len(unreachable)} node(s) unreachable from the sink, e.g. {unreachable[:5]}")
    return Scenario(config, geometry, positions, sink=0)


@dataclass(frozen=True)
class Flow:
    flow_id: int
    src: int
    dst: int
    start_s: float
    rate_pps: float = 4.0
    payload_bytes: int = 512

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("flow source and destination must differ")


def generate_flows(scenario: Scenario, rng: RngStream) -> list[Flow]:
    cfg = scenario.config
    n_sources, n_flows = FLOW_PATTERN[cfg.scenario_id]
    sensors = scenario.sensors
    sink = scenario.sink
    sources = rng.sample(sensors, n_sources)
    owners = list(sources)
    extra = n_flows - n_sources
    while extra > 0:
        take = min(extra, n_sources)
        owners += rng.sample(sources, take)
        extra -= take
    everyone = list(range(len(scenario.positions)))
    dests: dict[int, list[int]] = {}
    flows = []
    for fid, src in enumerate(owners):
        mine = dests.setdefault(src, [])
        if cfg.destination_policy == "all-to-sink" or not mine:
            dst = sink
        else:
            dst = rng.choice([v for v in everyone if v != src and v not in mine])
        mine.append(dst)
        lo, hi = cfg.start_window_s
        start = rng.uniform(lo, hi) if hi > lo else lo
        flows.append(Flow(fid, src, dst, start, cfg.rate_pps, cfg.payload_bytes))
    scenario.flows = flows
    return flows


def cbr_schedule(flow: Flow, t_end: float) -> list[DataPacket]:
    """Packets of one flow, one every ``1 / rate_pps`` seconds in ``[start, t_end)``."""
    if not t_end > flow.start_s:
        return []
    gap = 1.0 / flow.rate_pps
    out = []
    k = 0
    while True:
        t = flow.start_s + k * gap
        if t >= t_end:
            break
        out.append(DataPacket(flow.flow_id, k, flow.src, flow.dst, flow.payload_bytes, t))
        k += 1
    return out


def build_scenario(config: ScenarioConfig, seed: int, geometry: FieldGeometry | None = None) -> Scenario:
    from .kernel import stream_key
    scenario = place_nodes(config, geometry)
    generate_flows(scenario, RngStream(seed, stream_key("traffic", 0)))
    return scenario
