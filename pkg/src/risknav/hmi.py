"""Warning frame composition: hazard route, velocity scale, pop-ups,
colored events, assembled into one serializable frame per tick.

Frames are pure data; rendering happens in the UI. Serialization is
deterministic: fixed key order, floats rounded to millimeter scale.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .geometry import LocalPoint, Polyline, resample
from .horizon import Path, PathTree
from .mapdoc import chunks_near
from .mapgraph import DynamicObject, LdmGraph, NodeKind
from .risk import RegulatoryTarget, RiskAssessment

FRAME_SCHEMA_VERSION = 1

# values are compared at millimeter resolution so threshold boundaries
# are stable against arc-length float dust
_RES = 3


class ColorClass(str, Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"


@dataclass
class HmiConfig:
    zone_green_max: float = 10.0  # in-junction path length thresholds, m
    zone_yellow_max: float = 25.0
    dev_green: float = 1.0  # |v0 - v_tar| color thresholds, m/s
    dev_yellow: float = 3.0
    v_max_floor: float = 15.0  # velocity scale end, m/s
    v_max_factor: float = 1.2
    viewport_radius: float = 150.0  # chunk reference radius around ego, m
    path_decimation: float = 5.0  # critical-vehicle path resampling, m


@dataclass
class HazardZone:
    start: float
    end: float
    kind: str
    color: ColorClass


@dataclass
class HazardRoute:
    length: float
    zones: list[HazardZone]
    ego_marker: float = 0.0


@dataclass
class VelocityScale:
    v0: float
    v_tar: float
    v_max: float
    color: ColorClass
    source: str


@dataclass
class PopupSign:
    cause: str  # collision | right_curve | left_curve | crosswalk | stop_line | traffic_light
    value: Optional[float]  # seconds for collision, meters otherwise; None in slim mode
    unit: str
    anchor: LocalPoint


@dataclass
class ColoredEvent:
    kind: str  # lane_band | encounter_marker
    color: ColorClass
    geometry: Polyline | LocalPoint


@dataclass
class OtherVehicleView:
    id: str
    cls: str
    x: float
    y: float
    heading: float
    speed: float
    is_critical: bool
    paths: list[list[list[float]]] = field(default_factory=list)


@dataclass
class WorldSnapshot:
    """Per-tick world state handed to frame composition."""

    t: float
    ego: DynamicObject  # pose projected onto the lane center
    ego_raw: Optional[LocalPoint]
    others: list[DynamicObject]
    trees: dict[str, PathTree]


@dataclass
class HmiFrame:
    t: float
    ego: DynamicObject
    ego_raw: Optional[LocalPoint]
    others: list[OtherVehicleView]
    chunks: list[str]
    hazard_route: HazardRoute
    velocity_scale: VelocityScale
    popups: list[PopupSign]
    events: list[ColoredEvent]
    slim: bool
    flags: dict


def classify_deviation(v0: float, v_tar: float, cfg: HmiConfig) -> ColorClass:
    dev = round(abs(v0 - v_tar), _RES)
    if dev <= cfg.dev_green:
        return ColorClass.GREEN
    if dev <= cfg.dev_yellow:
        return ColorClass.YELLOW
    return ColorClass.RED


def hazard_route(ego_path: Path, graph: LdmGraph, delta_l_h: float,
                 cfg: HmiConfig = HmiConfig()) -> HazardRoute:
    """Junction stretches of the ego path as colored distance zones."""
    zones: list[HazardZone] = []
    run_start: Optional[float] = None
    run_end = 0.0
    for node_id, lo, hi in ego_path.node_intervals + [("", float("inf"), float("inf"))]:
        is_junction = node_id and graph.node(node_id).kind is NodeKind.LANE_JUNCTION
        if is_junction:
            if run_start is None:
                run_start = lo
            run_end = hi
        elif run_start is not None:
            start = round(run_start, _RES)
            end = round(min(run_end, ego_path.length), _RES)
            L = end - start
            if L <= cfg.zone_green_max:
                color = ColorClass.GREEN
            elif L <= cfg.zone_yellow_max:
                color = ColorClass.YELLOW
            else:
                color = ColorClass.RED
            zones.append(HazardZone(start=start, end=end, kind="intersection", color=color))
            run_start = None
    return HazardRoute(length=delta_l_h, zones=zones)


def velocity_scale(v0: float, assessment: RiskAssessment,
                   cfg: HmiConfig = HmiConfig()) -> VelocityScale:
    limit = assessment.speed_limit
    v_max = max(cfg.v_max_floor, cfg.v_max_factor * limit) if limit else cfg.v_max_floor
    if assessment.governing_v_tar is not None:
        v_tar = assessment.governing_v_tar
        source = assessment.governing_source
    elif limit:
        v_tar = limit
        source = "speed_limit"
    else:
        v_tar = v_max
        source = "none"
    return VelocityScale(
        v0=v0, v_tar=v_tar, v_max=v_max,
        color=classify_deviation(v0, v_tar, cfg), source=source,
    )


def popup_signs(assessment: RiskAssessment, ego_path: Path) -> list[PopupSign]:
    """At most one sign per cause; collision first, then nearest first."""
    collision: list[PopupSign] = []
    if assessment.max_encounter is not None:
        collision.append(PopupSign(
            cause="collision",
            value=assessment.max_encounter.s_e,
            unit="s",
            anchor=assessment.max_encounter.point_ego,
        ))
    spatial: list[PopupSign] = []
    if assessment.turns:
        turn = min(assessment.turns, key=lambda t: t.s_start)
        spatial.append(PopupSign(
            cause=f"{turn.direction}_curve",
            value=turn.s_start,
            unit="m",
            anchor=ego_path.polyline.point_at(turn.s_start),
        ))
    nearest_by_kind: dict[str, RegulatoryTarget] = {}
    for target in assessment.regulatory:
        if not target.active:
            continue
        prev = nearest_by_kind.get(target.regulator_kind)
        if prev is None or target.d_c < prev.d_c:
            nearest_by_kind[target.regulator_kind] = target
    spatial.extend(
        PopupSign(cause=k, value=t.d_c, unit="m", anchor=t.anchor)
        for k, t in sorted(nearest_by_kind.items())
    )
    spatial.sort(key=lambda p: (p.value, p.cause))
    return collision + spatial


def colored_events(assessment: RiskAssessment, ego_path: Path,
                   scale_color: ColorClass) -> list[ColoredEvent]:
    """Lane band to the governing risk spot plus the encounter marker."""
    events: list[ColoredEvent] = []
    band_end: Optional[float] = None
    if assessment.governing_source == "curve" and assessment.governing_turn is not None:
        band_end = assessment.governing_turn.s_kappa_max
    elif assessment.governing_source == "regulatory" and assessment.governing_regulator is not None:
        band_end = assessment.governing_regulator.d_c
    if band_end is not None and band_end > 0.01:
        band_end = min(band_end, ego_path.length)
        events.append(ColoredEvent(
            kind="lane_band",
            color=scale_color,
            geometry=ego_path.polyline.slice(0.0, band_end),
        ))
    if assessment.max_encounter is not None:
        events.append(ColoredEvent(
            kind="encounter_marker",
            color=ColorClass.RED,
            geometry=assessment.max_encounter.point_ego,
        ))
    return events


def _decimate(poly: Polyline, step: float) -> list[list[float]]:
    if poly.length > 2 * step:
        poly = resample(poly, step)
    return [[round(float(x), _RES), round(float(y), _RES)] for x, y in poly.xy]


def compose_frame(
    snapshot: WorldSnapshot,
    assessment: RiskAssessment,
    ego_path: Path,
    graph: LdmGraph,
    delta_l_h: float,
    slim: bool = False,
    cfg: HmiConfig = HmiConfig(),
    flags: Optional[dict] = None,
) -> HmiFrame:
    """Assemble the per-tick frame from world state and risk results."""
    scale = velocity_scale(snapshot.ego.speed, assessment, cfg)
    popups = popup_signs(assessment, ego_path)
    if slim:
        popups = [PopupSign(p.cause, None, p.unit, p.anchor) for p in popups]
    critical_id = assessment.max_encounter.other_vehicle_id if assessment.max_encounter else None
    others = []
    for obj in snapshot.others:
        view = OtherVehicleView(
            id=obj.id, cls=obj.cls,
            x=obj.position.x, y=obj.position.y,
            heading=obj.heading, speed=obj.speed,
            is_critical=(obj.id == critical_id),
        )
        if view.is_critical and obj.id in snapshot.trees:
            view.paths = [
                _decimate(p.polyline, cfg.path_decimation)
                for p in snapshot.trees[obj.id].paths
            ]
        others.append(view)
    return HmiFrame(
        t=snapshot.t,
        ego=snapshot.ego,
        ego_raw=snapshot.ego_raw,
        others=others,
        chunks=chunks_near(snapshot.ego.position.x, snapshot.ego.position.y, cfg.viewport_radius),
        hazard_route=hazard_route(ego_path, graph, delta_l_h, cfg),
        velocity_scale=scale,
        popups=popups,
        events=colored_events(assessment, ego_path, scale.color),
        slim=slim,
        flags=dict(flags or {}),
    )


def _r(value: float) -> float:
    rounded = round(value, _RES)
    return 0.0 if rounded == 0 else rounded  # avoid -0.0 in output


def frame_to_dict(frame: HmiFrame) -> dict:
    ego: dict = {
        "x": _r(frame.ego.position.x),
        "y": _r(frame.ego.position.y),
        "heading": _r(frame.ego.heading),
        "v": _r(frame.ego.speed),
    }
    if frame.ego_raw is not None:
        ego["raw"] = {"x": _r(frame.ego_raw.x), "y": _r(frame.ego_raw.y)}
    others = []
    for o in frame.others:
        entry = {
            "id": o.id, "class": o.cls,
            "x": _r(o.x), "y": _r(o.y),
            "heading": _r(o.heading), "v": _r(o.speed),
            "critical": o.is_critical,
        }
        if o.paths:
            entry["paths"] = o.paths
        others.append(entry)
    popups = []
    for p in frame.popups:
        popups.append({
            "cause": p.cause,
            "value": _r(p.value) if p.value is not None else None,
            "unit": p.unit,
            "x": _r(p.anchor.x), "y": _r(p.anchor.y),
        })
    events = []
    for e in frame.events:
        if isinstance(e.geometry, Polyline):
            events.append({
                "kind": e.kind, "color": e.color.value,
                "points": [[_r(x), _r(y)] for x, y in e.geometry.xy],
            })
        else:
            events.append({
                "kind": e.kind, "color": e.color.value,
                "x": _r(e.geometry.x), "y": _r(e.geometry.y),
            })
    return {
        "schema_version": FRAME_SCHEMA_VERSION,
        "t": _r(frame.t),
        "slim": frame.slim,
        "ego": ego,
        "others": others,
        "chunks": frame.chunks,
        "hazard_route": {
            "length": _r(frame.hazard_route.length),
            "ego_marker": _r(frame.hazard_route.ego_marker),
            "zones": [
                {"start": _r(z.start), "end": _r(z.end), "kind": z.kind, "color": z.color.value}
                for z in frame.hazard_route.zones
            ],
        },
        "velocity_scale": {
            "v0": _r(frame.velocity_scale.v0),
            "v_tar": _r(frame.velocity_scale.v_tar),
            "v_max": _r(frame.velocity_scale.v_max),
            "color": frame.velocity_scale.color.value,
            "source": frame.velocity_scale.source,
        },
        "popups": popups,
        "events": events,
        "flags": frame.flags,
    }


def frame_to_json(frame: HmiFrame) -> str:
    return json.dumps(frame_to_dict(frame), separators=(",", ":"))
