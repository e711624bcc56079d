"""Scenario model and deterministic fixed-rate stepping.

A scenario replays a recorded ego trace or integrates a human-controlled
ego along its route, advances scripted actors and pedestrians, and runs
the map-match -> horizon -> risk -> frame pipeline every tick.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Optional, Sequence

import numpy as np

from .geometry import GeoPoint, LocalPoint, Polyline, concat_polylines, to_local, wrap_angle
from .hmi import HmiConfig, HmiFrame, WorldSnapshot, compose_frame
from .horizon import (
    HorizonConfig,
    Path,
    PathTree,
    RouteError,
    assemble_path,
    ego_route_path,
    path_tree,
    turn_label,
)
from .mapgraph import DynamicObject, LdmGraph, NodeKind
from .osm import AugmentationConfig, build_static_map, parse_osm
from .risk import RiskAssessment, RiskConfig, assess

SCENARIO_SCHEMA_VERSION = 1
INTERACTIVE_MAX_SPEED = 20.0  # m/s, urban scope


class ScenarioError(ValueError):
    """Scenario file violates the schema or references unknown map items."""


@dataclass
class TracePoint:
    t: float
    point: LocalPoint
    heading: Optional[float]
    speed: float


@dataclass
class EgoSpec:
    mode: str  # replay | interactive
    route: list[str]
    s0: float = 0.0
    v0: float = 0.0
    trace: list[TracePoint] = field(default_factory=list)


@dataclass
class ActorSpec:
    id: str
    cls: str
    trace: list[TracePoint] = field(default_factory=list)
    path_nodes: list[str] = field(default_factory=list)
    speed: float = 0.0
    s0: float = 0.0


@dataclass
class PedestrianSpec:
    crosswalk: str
    appear_t: float
    wait: float


@dataclass
class Scenario:
    name: str
    ego: EgoSpec
    actors: list[ActorSpec] = field(default_factory=list)
    pedestrians: list[PedestrianSpec] = field(default_factory=list)
    tick_hz: float = 10.0
    osm_path: Optional[str] = None
    aug_path: Optional[str] = None
    horizon_cfg: HorizonConfig = field(default_factory=HorizonConfig)
    risk_cfg: RiskConfig = field(default_factory=RiskConfig)
    hmi_cfg: HmiConfig = field(default_factory=HmiConfig)

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz


def _err(path: str, msg: str) -> ScenarioError:
    return ScenarioError(f"{path}: {msg}")


def _parse_trace(raw, where: str, origin: Optional[GeoPoint]) -> list[TracePoint]:
    if not isinstance(raw, list) or len(raw) < 2:
        raise _err(where, "trace must be a list of at least 2 timed points")
    points: list[TracePoint] = []
    last_t = None
    for i, item in enumerate(raw):
        loc = f"{where}[{i}]"
        if "t" not in item:
            raise _err(loc, "missing 't'")
        t = float(item["t"])
        if last_t is not None and t <= last_t:
            raise _err(loc, "trace times must be strictly increasing")
        last_t = t
        if "x" in item and "y" in item:
            p = LocalPoint(float(item["x"]), float(item["y"]))
        elif "lat" in item and "lon" in item:
            if origin is None:
                raise _err(loc, "geographic trace point but the map has no origin")
            p = to_local(origin, GeoPoint(float(item["lat"]), float(item["lon"])))
        else:
            raise _err(loc, "needs x/y or lat/lon")
        if "v" not in item:
            raise _err(loc, "missing 'v'")
        heading = float(item["heading"]) if "heading" in item else None
        points.append(TracePoint(t=t, point=p, heading=heading, speed=float(item["v"])))
    if abs(points[0].t) > 1e-9:
        raise _err(f"{where}[0]", "trace must start at t=0")
    return points


def _config_section(data: dict, key: str, cls, where: str):
    section = data.get(key) or {}
    if not isinstance(section, dict):
        raise _err(f"{where}.{key}", "must be an object")
    try:
        return cls(**section)
    except TypeError as e:
        raise _err(f"{where}.{key}", f"unknown or invalid field ({e})") from e
    except ValueError as e:
        raise _err(f"{where}.{key}", str(e)) from e


def parse_scenario(data: dict, origin: Optional[GeoPoint] = None) -> Scenario:
    """Validate a scenario document; errors carry the offending field path."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario: root must be an object")
    version = data.get("schema_version", SCENARIO_SCHEMA_VERSION)
    if version != SCENARIO_SCHEMA_VERSION:
        raise _err("schema_version", f"unsupported version {version}")

    ego_raw = data.get("ego")
    if not isinstance(ego_raw, dict):
        raise _err("ego", "required object")
    mode = ego_raw.get("mode")
    if mode not in ("replay", "interactive"):
        raise _err("ego.mode", f"must be 'replay' or 'interactive', got {mode!r}")
    route = ego_raw.get("route")
    if not isinstance(route, list) or not route or not all(isinstance(r, str) for r in route):
        raise _err("ego.route", "required non-empty list of lane ids")
    trace: list[TracePoint] = []
    if mode == "replay":
        if "trace" not in ego_raw:
            raise _err("ego.trace", "required in replay mode")
        trace = _parse_trace(ego_raw["trace"], "ego.trace", origin)
    ego = EgoSpec(
        mode=mode,
        route=list(route),
        s0=float(ego_raw.get("s0", 0.0)),
        v0=float(ego_raw.get("v0", 0.0)),
        trace=trace,
    )

    actors: list[ActorSpec] = []
    for i, raw in enumerate(data.get("actors") or []):
        where = f"actors[{i}]"
        if "id" not in raw:
            raise _err(where, "missing 'id'")
        cls = raw.get("class", "car")
        if cls not in ("car", "bicycle", "pedestrian"):
            raise _err(f"{where}.class", f"unknown class {cls!r}")
        if "trace" in raw:
            actors.append(ActorSpec(
                id=str(raw["id"]), cls=cls,
                trace=_parse_trace(raw["trace"], f"{where}.trace", origin),
            ))
        elif "path" in raw:
            path_nodes = raw["path"]
            if not isinstance(path_nodes, list) or not path_nodes:
                raise _err(f"{where}.path", "must be a non-empty list of lane ids")
            actors.append(ActorSpec(
                id=str(raw["id"]), cls=cls,
                path_nodes=[str(p) for p in path_nodes],
                speed=float(raw.get("v", 0.0)),
                s0=float(raw.get("s0", 0.0)),
            ))
        else:
            raise _err(where, "needs either 'trace' or 'path'")

    pedestrians: list[PedestrianSpec] = []
    for i, raw in enumerate(data.get("pedestrians") or []):
        where = f"pedestrians[{i}]"
        for key in ("crosswalk", "appear_t", "wait"):
            if key not in raw:
                raise _err(where, f"missing '{key}'")
        pedestrians.append(PedestrianSpec(
            crosswalk=str(raw["crosswalk"]),
            appear_t=float(raw["appear_t"]),
            wait=float(raw["wait"]),
        ))

    tick_hz = float(data.get("tick_hz", 10.0))
    if tick_hz <= 0:
        raise _err("tick_hz", "must be > 0")

    config = data.get("config") or {}
    map_section = data.get("map") or {}
    return Scenario(
        name=str(data.get("name", "scenario")),
        ego=ego,
        actors=actors,
        pedestrians=pedestrians,
        tick_hz=tick_hz,
        osm_path=map_section.get("osm"),
        aug_path=map_section.get("augmentation"),
        horizon_cfg=_config_section(config, "horizon", HorizonConfig, "config"),
        risk_cfg=_config_section(config, "risk", RiskConfig, "config"),
        hmi_cfg=_config_section(config, "hmi", HmiConfig, "config"),
    )


@dataclass
class TickResult:
    t: float
    snapshot: WorldSnapshot
    assessment: RiskAssessment
    frame: HmiFrame
    route_deviation: bool = False
    control_ignored: bool = False


class _TraceSampler:
    """Linear interpolation of a timed trace; headings take the shortest arc."""

    def __init__(self, trace: list[TracePoint]):
        self.t = np.array([p.t for p in trace])
        self.x = np.array([p.point.x for p in trace])
        self.y = np.array([p.point.y for p in trace])
        self.v = np.array([p.speed for p in trace])
        headings = [p.heading for p in trace]
        if any(h is None for h in headings):
            derived = np.arctan2(np.gradient(self.y), np.gradient(self.x))
            headings = [d if h is None else h for h, d in zip(headings, derived)]
        self.heading = np.unwrap(np.array(headings, dtype=float))
        self.t_end = float(self.t[-1])

    def sample(self, t: float) -> tuple[LocalPoint, float, float]:
        x = float(np.interp(t, self.t, self.x))
        y = float(np.interp(t, self.t, self.y))
        v = float(np.interp(t, self.t, self.v))
        h = wrap_angle(float(np.interp(t, self.t, self.heading)))
        return LocalPoint(x, y), h, v


def _route_polyline(graph: LdmGraph, node_ids: Sequence[str], where: str) -> Polyline:
    pieces = []
    for i, nid in enumerate(node_ids):
        if not graph.has_node(nid):
            raise _err(f"{where}[{i}]", f"unknown lane id {nid!r}")
        node = graph.node(nid)
        if node.kind not in (NodeKind.LANE_SEGMENT, NodeKind.LANE_JUNCTION):
            raise _err(f"{where}[{i}]", f"{nid!r} is not a lane node")
        if i > 0 and nid not in graph.successors(node_ids[i - 1]):
            raise _err(f"{where}[{i}]", f"{nid!r} does not succeed {node_ids[i - 1]!r}")
        pieces.append(node.geometry)
    return concat_polylines(pieces)


class Simulation:
    """One scenario instance with a deterministic tick loop."""

    def __init__(self, graph: LdmGraph, scenario: Scenario, slim: bool = False):
        self.graph = graph
        self.scenario = scenario
        self.slim = slim
        self.tick_index = 0
        self._route_poly = _route_polyline(graph, scenario.ego.route, "ego.route")
        self._ego_trace = _TraceSampler(scenario.ego.trace) if scenario.ego.mode == "replay" else None
        self._ego_s = scenario.ego.s0
        self._ego_v = scenario.ego.v0
        if scenario.ego.mode == "interactive" and not (0.0 <= scenario.ego.s0 <= self._route_poly.length):
            raise _err("ego.s0", "outside the route polyline")
        self._actor_traces = {a.id: _TraceSampler(a.trace) for a in scenario.actors if a.trace}
        self._actor_paths: dict[str, Polyline] = {}
        for a in scenario.actors:
            if a.path_nodes:
                self._actor_paths[a.id] = _route_polyline(graph, a.path_nodes, f"actors[{a.id}].path")
        for i, ped in enumerate(scenario.pedestrians):
            if not graph.has_node(ped.crosswalk):
                raise _err(f"pedestrians[{i}].crosswalk", f"unknown node {ped.crosswalk!r}")
            if graph.node(ped.crosswalk).kind is not NodeKind.CROSSWALK:
                raise _err(f"pedestrians[{i}].crosswalk", f"{ped.crosswalk!r} is not a crosswalk")
        self._last_ego_match: Optional[tuple[str, float]] = None

    # -- per-tick world construction -----------------------------------

    @property
    def t(self) -> float:
        return self.tick_index * self.scenario.dt

    def replay_ticks(self) -> int:
        if self._ego_trace is None:
            return 0
        return int(round(self._ego_trace.t_end * self.scenario.tick_hz))

    def _ego_object(self, t: float) -> tuple[DynamicObject, Optional[LocalPoint]]:
        if self._ego_trace is not None:
            raw, heading, v = self._ego_trace.sample(t)
            return DynamicObject("ego", "ego", raw, heading, max(v, 0.0), t), raw
        point = self._route_poly.point_at(self._ego_s)
        heading = self._route_poly.heading_at(self._ego_s)
        return DynamicObject("ego", "ego", point, heading, self._ego_v, t), None

    def _actor_objects(self, t: float) -> list[DynamicObject]:
        objects: list[DynamicObject] = []
        for spec in self.scenario.actors:
            if spec.trace:
                sampler = self._actor_traces[spec.id]
                if t < sampler.t[0] - 1e-9 or t > sampler.t_end + 1e-9:
                    continue
                point, heading, v = sampler.sample(t)
                objects.append(DynamicObject(spec.id, spec.cls, point, heading, max(v, 0.0), t))
            else:
                poly = self._actor_paths[spec.id]
                s = spec.s0 + spec.speed * t
                at_end = s >= poly.length - 1e-6
                point = poly.point_at(s)
                heading = self._route_heading(poly, s)
                speed = 0.0 if at_end else spec.speed
                objects.append(DynamicObject(spec.id, spec.cls, point, heading, speed, t))
        return objects

    @staticmethod
    def _route_heading(poly: Polyline, s: float) -> float:
        return poly.heading_at(min(max(s, 0.0), poly.length))

    def _pedestrian_objects(self, t: float) -> list[DynamicObject]:
        objects = []
        occupancy: dict[str, bool] = {}
        for i, ped in enumerate(self.scenario.pedestrians):
            active = ped.appear_t - 1e-9 <= t < ped.appear_t + ped.wait - 1e-9
            occupancy[ped.crosswalk] = occupancy.get(ped.crosswalk, False) or active
            if active:
                anchor = self.graph.node(ped.crosswalk).anchor()
                objects.append(DynamicObject(f"ped{i}", "pedestrian", anchor, 0.0, 0.0, t))
        for cw_id, occupied in occupancy.items():
            self.graph.set_transient(cw_id, "occupied", occupied)
        return objects

    # -- stepping -------------------------------------------------------

    def step(self, control: Optional[float] = None) -> TickResult:
        """Advance one tick; `control` is an acceleration for interactive mode."""
        t = self.t
        dt = self.scenario.dt
        control_ignored = False
        if self.scenario.ego.mode == "interactive":
            accel = float(control) if control is not None else 0.0
            self._ego_v = min(max(self._ego_v + accel * dt, 0.0), INTERACTIVE_MAX_SPEED)
            self._ego_s = min(self._ego_s + self._ego_v * dt, self._route_poly.length)
        elif control is not None:
            control_ignored = True

        ego_obj, ego_raw = self._ego_object(t)
        actors = self._actor_objects(t)
        pedestrians = self._pedestrian_objects(t)
        self.graph.update_dynamic([ego_obj] + actors + pedestrians)

        route_deviation = False
        match = self.graph.located_on("ego")
        if match is None or match.lane_id not in self.scenario.ego.route:
            route_deviation = True
            if self._last_ego_match is None:
                raise ScenarioError(
                    "ego does not match any route lane at the first tick; "
                    "check ego.route and the trace alignment"
                )
            lane_id, s_along = self._last_ego_match
        else:
            lane_id, s_along = match.lane_id, match.s_along
            self._last_ego_match = (lane_id, s_along)

        lane_poly = self.graph.node(lane_id).geometry
        projected = DynamicObject(
            "ego", "ego",
            lane_poly.point_at(s_along),
            lane_poly.heading_at(s_along),
            ego_obj.speed,
            t,
        )

        ego_path = self._path_from(lane_id, s_along)
        trees: dict[str, PathTree] = {}
        speeds: dict[str, float] = {}
        for obj in actors:
            if obj.cls == "pedestrian":
                continue
            trees[obj.id] = path_tree(self.graph, obj, self.scenario.horizon_cfg)
            speeds[obj.id] = obj.speed
        assessment = assess(
            self.graph, projected, ego_path, list(trees.values()), speeds,
            self.scenario.risk_cfg, timestamp=t,
        )
        snapshot = WorldSnapshot(
            t=t, ego=projected, ego_raw=ego_raw,
            others=actors + pedestrians, trees=trees,
        )
        flags = {"route_deviation": route_deviation, "control_ignored": control_ignored}
        frame = compose_frame(
            snapshot, assessment, ego_path, self.graph,
            self.scenario.horizon_cfg.delta_l_h,
            slim=self.slim, cfg=self.scenario.hmi_cfg, flags=flags,
        )
        self.tick_index += 1
        return TickResult(
            t=t, snapshot=snapshot, assessment=assessment, frame=frame,
            route_deviation=route_deviation, control_ignored=control_ignored,
        )

    def _path_from(self, lane_id: str, s_along: float) -> Path:
        route = self.scenario.ego.route
        cfg = self.scenario.horizon_cfg
        idx = route.index(lane_id)
        node_ids = [lane_id]
        labels: list[str] = []
        covered = self.graph.node(lane_id).geometry.length - s_along
        for nxt in route[idx + 1:]:
            if covered >= cfg.delta_l_h:
                break
            if self.graph.node(nxt).kind is NodeKind.LANE_JUNCTION:
                labels.append(turn_label(self.graph, nxt, cfg.straight_angle_deg))
            node_ids.append(nxt)
            covered += self.graph.node(nxt).geometry.length
        return assemble_path(self.graph, node_ids, s_along, labels, limit=cfg.delta_l_h)

    def run_replay(self) -> list[TickResult]:
        """Step through the whole recorded trace."""
        if self.scenario.ego.mode != "replay":
            raise ScenarioError("run_replay requires a replay-mode scenario")
        return [self.step() for _ in range(self.replay_ticks())]


def load(
    scenario_file: str | FsPath,
    osm_path: Optional[str | FsPath] = None,
    aug_path: Optional[str | FsPath] = None,
    slim: bool = False,
) -> Simulation:
    """Load and validate a scenario file, building its map.

    Map references inside the scenario resolve relative to the scenario
    file; explicit `osm_path`/`aug_path` arguments override them.
    """
    scenario_file = FsPath(scenario_file)
    try:
        data = json.loads(scenario_file.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario: invalid JSON ({e})") from e

    base = scenario_file.parent
    map_section = data.get("map") or {}
    osm_file = FsPath(osm_path) if osm_path else (
        base / map_section["osm"] if map_section.get("osm") else None
    )
    if osm_file is None:
        raise ScenarioError("map.osm: required (or pass an explicit map path)")
    if not osm_file.exists():
        raise ScenarioError(f"map.osm: file not found: {osm_file}")
    aug_file = FsPath(aug_path) if aug_path else (
        base / map_section["augmentation"] if map_section.get("augmentation") else None
    )
    if aug_file is not None and not aug_file.exists():
        raise ScenarioError(f"map.augmentation: file not found: {aug_file}")

    extract = parse_osm(osm_file.read_text())
    aug = AugmentationConfig.from_file(aug_file) if aug_file else AugmentationConfig()
    graph = build_static_map(extract, aug)
    scenario = parse_scenario(data, origin=graph.origin)
    return Simulation(graph, scenario, slim=slim)
