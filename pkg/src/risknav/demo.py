"""Built-in demo maps and scenarios.

Three small scenarios cover the classic urban risk situations: crossing
traffic at an X intersection, a sharp turn after a straight approach,
and an occupied crosswalk ahead of a constant-speed driver. A street
grid serves as a load fixture. `write_all` materializes everything as
files for the CLI and UI.
"""

from __future__ import annotations

import json
import math
from pathlib import Path as FsPath

from .geometry import EARTH_RADIUS_M, GeoPoint, LocalPoint, project
from .mapgraph import LdmGraph, NodeKind
from .osm import AugmentationConfig, RegulatorSpec, build_static_map, parse_osm
from .sim import _route_polyline

LAT0 = 50.0
LON0 = 8.0


def _geo_of_xy(x: float, y: float) -> tuple[float, float]:
    lat = LAT0 + math.degrees(y / EARTH_RADIUS_M)
    lon = LON0 + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(LAT0))))
    return lat, lon


def osm_xml(nodes: dict[int, tuple[float, float]], ways: list[tuple[int, list[int], dict]],
            node_tags: dict[int, dict] | None = None) -> str:
    """Synthesize an OSM extract from local-meter coordinates."""
    node_tags = node_tags or {}
    xs = [xy[0] for xy in nodes.values()]
    ys = [xy[1] for xy in nodes.values()]
    minlat, minlon = _geo_of_xy(min(xs), min(ys))
    maxlat, maxlon = _geo_of_xy(max(xs), max(ys))
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<osm version="0.6" generator="risknav-demo">',
        f'  <bounds minlat="{minlat}" minlon="{minlon}" maxlat="{maxlat}" maxlon="{maxlon}"/>',
    ]
    for nid, (x, y) in nodes.items():
        lat, lon = _geo_of_xy(x, y)
        tags = node_tags.get(nid)
        if tags:
            lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}">')
            lines.extend(f'    <tag k="{k}" v="{v}"/>' for k, v in tags.items())
            lines.append("  </node>")
        else:
            lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}"/>')
    for wid, refs, tags in ways:
        lines.append(f'  <way id="{wid}">')
        lines.extend(f'    <nd ref="{ref}"/>' for ref in refs)
        lines.extend(f'    <tag k="{k}" v="{v}"/>' for k, v in tags.items())
        lines.append("  </way>")
    lines.append("</osm>")
    return "\n".join(lines)


AUG_YAML = f"origin: {{lat: {LAT0}, lon: {LON0}}}\n"


def x_cross_map(arm: float = 200.0) -> str:
    """Two perpendicular two-way streets crossing at the origin."""
    nodes = {1: (-arm, 0.0), 2: (0.0, 0.0), 3: (arm, 0.0), 4: (0.0, -arm), 5: (0.0, arm)}
    tags = {"highway": "residential"}
    return osm_xml(nodes, [(10, [1, 2, 3], dict(tags)), (20, [4, 2, 5], dict(tags))])


def turn_map(radius: float = 8.0, lead: float = 60.0, tail: float = 40.0) -> str:
    """Oneway street: straight east, 90-degree right turn, straight south.

    Arc vertices at 0.25 m keep the lane centerline within ~1 mm of the
    true circle, so curvature estimates stay clean.
    """
    nodes: dict[int, tuple[float, float]] = {}
    refs: list[int] = []

    def add(x: float, y: float) -> None:
        refs.append(len(nodes) + 1)
        nodes[len(nodes) + 1] = (x, y)

    add(-lead, 0.0)
    add(-10.0, 0.0)
    n_arc = int(math.ceil(radius * math.pi / 2.0 / 0.25))
    for i in range(n_arc + 1):
        ang = math.pi / 2.0 - (math.pi / 2.0) * i / n_arc
        add(radius * math.cos(ang), -radius + radius * math.sin(ang))
    add(radius, -radius - 10.0)
    add(radius, -radius - tail)
    return osm_xml(nodes, [(10, refs, {"highway": "residential", "oneway": "yes"})])


def straight_map(length: float = 400.0, maxspeed: str | None = None) -> str:
    nodes = {1: (0.0, 0.0), 2: (length / 2.0, 0.0), 3: (length, 0.0)}
    tags = {"highway": "residential"}
    if maxspeed:
        tags["maxspeed"] = maxspeed
    return osm_xml(nodes, [(10, [1, 2, 3], tags)])


def grid_map(rows: int = 5, cols: int = 5, spacing: float = 150.0) -> str:
    """rows x cols grid of two-way streets."""
    nodes: dict[int, tuple[float, float]] = {}
    coord: dict[tuple[int, int], int] = {}
    nid = 1
    for iy in range(rows):
        for ix in range(cols):
            coord[(ix, iy)] = nid
            nodes[nid] = (ix * spacing, iy * spacing)
            nid += 1
    ways = []
    for iy in range(rows):
        ways.append((100 + iy, [coord[(ix, iy)] for ix in range(cols)], {"highway": "residential"}))
    for ix in range(cols):
        ways.append((200 + ix, [coord[(ix, iy)] for iy in range(rows)], {"highway": "residential"}))
    return osm_xml(nodes, ways)


def build_map(xml: str, **aug_kwargs) -> LdmGraph:
    aug_kwargs.setdefault("origin", GeoPoint(LAT0, LON0))
    return build_static_map(parse_osm(xml), AugmentationConfig(**aug_kwargs))


def straight_route(graph: LdmGraph, start_lane: str, min_length: float = 1e6) -> list[str]:
    """Follow successors straight ahead; stops where only turns remain."""
    from .horizon import turn_label

    route = [start_lane]
    covered = graph.node(start_lane).geometry.length
    while covered < min_length:
        succ = graph.successors(route[-1])
        if not succ:
            break
        straight = sorted(
            c for c in succ
            if graph.node(c).kind is not NodeKind.LANE_JUNCTION
            or turn_label(graph, c) == "straight"
        )
        if not straight:
            break
        route.append(straight[0])
        covered += graph.node(straight[0]).geometry.length
    return route


def _trace_on_polyline(poly, s_of_t, v_of_t, t_end: float, step: float = 0.5) -> list[dict]:
    points = []
    t = 0.0
    while t <= t_end + 1e-9:
        p = poly.point_at(s_of_t(t))
        h = poly.heading_at(s_of_t(t))
        points.append({
            "t": round(t, 3),
            "x": round(p.x, 6), "y": round(p.y, 6),
            "heading": round(h, 6),
            "v": round(v_of_t(t), 6),
        })
        t += step
    return points


def collision_scenario() -> tuple[str, str, dict]:
    """Crossing traffic: ego eastbound, another car northbound, both
    heading for the same conflict point at 10 m/s."""
    xml = x_cross_map()
    graph = build_map(xml)
    route = ["w10.0.f0.0", "w10.0.f0.1", "j:2:w10.0.f0:w10.1.f0", "w10.1.f0.0", "w10.1.f0.1"]
    actor_path = ["w20.0.f0.0", "w20.0.f0.1", "j:2:w20.0.f0:w20.1.f0", "w20.1.f0.0", "w20.1.f0.1"]
    # conflict point: ego line y=-1.75 crosses actor line x=+1.75
    ego_poly = _route_polyline(graph, route, "route")
    s_conflict_ego = project(ego_poly, LocalPoint(1.75, -1.75)).s_along
    actor_poly = _route_polyline(graph, actor_path, "path")
    s_conflict_actor = project(actor_poly, LocalPoint(1.75, -1.75)).s_along
    v = 10.0
    start_gap = 50.0  # both start 50 m from the conflict point
    duration = 8.0
    trace = _trace_on_polyline(
        ego_poly,
        s_of_t=lambda t: s_conflict_ego - start_gap + v * t,
        v_of_t=lambda t: v,
        t_end=duration,
        step=1.0,
    )
    scenario = {
        "schema_version": 1,
        "name": "crossing-traffic",
        "map": {"osm": "crossing.osm", "augmentation": "demo.aug.yaml"},
        "ego": {"mode": "replay", "route": route, "trace": trace},
        "actors": [{
            "id": "car1", "class": "car",
            "path": actor_path, "v": v,
            "s0": round(s_conflict_actor - start_gap, 6),
        }],
        "tick_hz": 10,
    }
    return xml, AUG_YAML, scenario


def turn_scenario() -> tuple[str, str, dict]:
    """Sharp 8 m turn ahead; the driver brakes from 8 to 4 m/s."""
    xml = turn_map()
    graph = build_map(xml)
    route = straight_route(graph, "w10.0.f0.0")
    poly = _route_polyline(graph, route, "route")

    def v_of_t(t: float) -> float:
        if t <= 1.0:
            return 8.0
        return max(4.0, 8.0 - (t - 1.0))

    def s_of_t(t: float) -> float:
        if t <= 1.0:
            return 5.0 + 8.0 * t
        u = min(t - 1.0, 4.0)
        s = 13.0 + 8.0 * u - 0.5 * u * u
        if t > 5.0:
            s += 4.0 * (t - 5.0)
        return s

    trace = _trace_on_polyline(poly, s_of_t, v_of_t, t_end=13.0, step=0.5)
    scenario = {
        "schema_version": 1,
        "name": "sharp-turn",
        "map": {"osm": "turn.osm", "augmentation": "demo.aug.yaml"},
        "config": {"horizon": {"delta_l_h": 90.0}},
        "ego": {"mode": "replay", "route": route, "trace": trace},
        "tick_hz": 10,
    }
    return xml, AUG_YAML, scenario


CROSSWALK_LANE = "w10.0.f0.2"
CROSSWALK_S = 50.0  # on that segment; 250 m along the street


def crosswalk_scenario(start_x: float = 100.0, duration: float = 12.0) -> tuple[str, str, dict]:
    """Occupied crosswalk 150 m ahead; the driver holds 12 m/s."""
    xml = straight_map(maxspeed="43.2")  # 12 m/s
    aug_yaml = AUG_YAML + (
        "crosswalks:\n"
        f"  - {{lane: {CROSSWALK_LANE}, s: {CROSSWALK_S}}}\n"
    )
    graph = build_map(xml, crosswalks=[RegulatorSpec(lane=CROSSWALK_LANE, s=CROSSWALK_S)])
    route = ["w10.0.f0.0", "w10.0.f0.1", "w10.0.f0.2", "w10.0.f0.3"]
    poly = _route_polyline(graph, route, "route")
    v = 12.0
    trace = _trace_on_polyline(
        poly, s_of_t=lambda t: start_x + v * t, v_of_t=lambda t: v,
        t_end=duration, step=1.0,
    )
    scenario = {
        "schema_version": 1,
        "name": "occupied-crosswalk",
        "map": {"osm": "crosswalk.osm", "augmentation": "crosswalk.aug.yaml"},
        "config": {"horizon": {"delta_l_h": 90.0}, "risk": {"a_c": 0.45, "t_r": 0.0}},
        "ego": {"mode": "replay", "route": route, "trace": trace},
        "pedestrians": [{"crosswalk": "cw:a0", "appear_t": 0.0, "wait": duration + 5.0}],
        "tick_hz": 10,
    }
    return xml, aug_yaml, scenario


def grid_scenario(duration: float = 60.0) -> tuple[str, str, dict]:
    """Load fixture: 340-lane-node grid, ego crossing it with 5 actors."""
    xml = grid_map()
    graph = build_map(xml)
    ego_route = straight_route(graph, "w102.0.f0.0")
    ego_poly = _route_polyline(graph, ego_route, "route")
    v = 9.0
    trace = _trace_on_polyline(
        ego_poly, s_of_t=lambda t: min(5.0 + v * t, ego_poly.length - 1.0),
        v_of_t=lambda t: v, t_end=duration, step=1.0,
    )
    actors = []
    for i, (start, speed) in enumerate([
        ("w201.0.f0.0", 8.0),
        ("w202.0.f0.0", 10.0),
        ("w203.0.f0.0", 9.0),
        ("w101.0.f0.0", 11.0),
        ("w103.0.b0.0", 8.5),
    ]):
        actors.append({
            "id": f"car{i}", "class": "car",
            "path": straight_route(graph, start),
            "v": speed, "s0": 0.0,
        })
    scenario = {
        "schema_version": 1,
        "name": "grid-load",
        "map": {"osm": "grid.osm", "augmentation": "demo.aug.yaml"},
        "ego": {"mode": "replay", "route": ego_route, "trace": trace},
        "actors": actors,
        "tick_hz": 10,
    }
    return xml, AUG_YAML, scenario


def interactive_scenario() -> tuple[str, str, dict]:
    """Human-controlled ego on the crossing map with one scripted car."""
    xml = x_cross_map()
    route = ["w10.0.f0.0", "w10.0.f0.1", "j:2:w10.0.f0:w10.1.f0", "w10.1.f0.0", "w10.1.f0.1"]
    actor_path = ["w20.0.f0.0", "w20.0.f0.1", "j:2:w20.0.f0:w20.1.f0", "w20.1.f0.0", "w20.1.f0.1"]
    scenario = {
        "schema_version": 1,
        "name": "interactive-crossing",
        "map": {"osm": "crossing.osm", "augmentation": "demo.aug.yaml"},
        "ego": {"mode": "interactive", "route": route, "s0": 20.0, "v0": 10.0},
        "actors": [{"id": "car1", "class": "car", "path": actor_path, "v": 8.0, "s0": 0.0}],
        "tick_hz": 10,
    }
    return xml, AUG_YAML, scenario


def write_all(out_dir: str | FsPath) -> list[FsPath]:
    """Materialize every demo map and scenario into a directory."""
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[FsPath] = []

    def put(name: str, text: str) -> None:
        path = out / name
        path.write_text(text)
        written.append(path)

    cross_xml, cross_aug, collision = collision_scenario()
    put("crossing.osm", cross_xml)
    put("demo.aug.yaml", cross_aug)
    put("collision.scenario.json", json.dumps(collision, indent=2))

    turn_xml, _, turn = turn_scenario()
    put("turn.osm", turn_xml)
    put("turn.scenario.json", json.dumps(turn, indent=2))

    cw_xml, cw_aug, crosswalk = crosswalk_scenario()
    put("crosswalk.osm", cw_xml)
    put("crosswalk.aug.yaml", cw_aug)
    put("crosswalk.scenario.json", json.dumps(crosswalk, indent=2))

    grid_xml_text, _, grid = grid_scenario()
    put("grid.osm", grid_xml_text)
    put("grid.scenario.json", json.dumps(grid, indent=2))

    _, _, interactive = interactive_scenario()
    put("interactive.scenario.json", json.dumps(interactive, indent=2))
    return written
