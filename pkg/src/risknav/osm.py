"""OpenStreetMap ingestion: XML extract + augmentation file -> map graph.

OSM gives road centerlines and point objects; lane-level topology is
derived here. Per way and driving direction a chain of lane segments is
offset from the centerline; shared nodes where three or more way arms
meet become intersections whose lane junctions connect every incoming
lane to every outgoing lane of the other arms via circular-arc blends.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .geometry import (
    GeoPoint,
    LocalPoint,
    Polyline,
    arc_connector,
    dedupe_points,
    geo_to_local_array,
    offset_polyline,
    project,
)
from .mapgraph import LdmGraph, LdmNode, NodeKind, RelationKind

# ways with these highway values carry no motor traffic
_NON_ROAD_HIGHWAY = {
    "footway", "path", "pedestrian", "steps", "cycleway", "bridleway",
    "corridor", "platform", "construction", "proposed", "crossing",
}

MIN_JUNCTION_RADIUS_M = 3.0
REGULATOR_LINK_RANGE_M = 10.0
MAX_SEGMENT_LENGTH_M = 100.0
_MIN_LANE_LENGTH_M = 1.0


class OsmParseError(ValueError):
    """Malformed or inconsistent OSM input."""


class MapBuildError(ValueError):
    """Extract or augmentation cannot produce a usable map."""


@dataclass
class OsmWay:
    id: int
    node_ids: list[int]
    tags: dict[str, str]


@dataclass
class OsmExtract:
    nodes: dict[int, GeoPoint]
    node_tags: dict[int, dict[str, str]]
    ways: dict[int, OsmWay]
    bounds: Optional[tuple[float, float, float, float]] = None  # minlat, minlon, maxlat, maxlon

    def center(self) -> GeoPoint:
        if self.bounds:
            minlat, minlon, maxlat, maxlon = self.bounds
        else:
            lats = [p.lat for p in self.nodes.values()]
            lons = [p.lon for p in self.nodes.values()]
            if not lats:
                raise MapBuildError("extract has no nodes")
            minlat, maxlat = min(lats), max(lats)
            minlon, maxlon = min(lons), max(lons)
        return GeoPoint((minlat + maxlat) / 2.0, (minlon + maxlon) / 2.0)


def _keep_way(tags: dict[str, str]) -> bool:
    if "highway" in tags or "building" in tags:
        return True
    if tags.get("footway") == "crossing" or "crossing" in tags:
        return True
    return any("traffic_signals" in v for v in tags.values())


def parse_osm(xml_text: str) -> OsmExtract:
    """Parse an OSM XML extract into nodes, ways and bounds."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as e:
        line, col = e.position
        raise OsmParseError(f"malformed OSM XML at line {line}, column {col}: {e.msg}") from e

    nodes: dict[int, GeoPoint] = {}
    node_tags: dict[int, dict[str, str]] = {}
    ways: dict[int, OsmWay] = {}
    bounds = None

    b = root.find("bounds")
    if b is not None:
        bounds = (
            float(b.get("minlat")), float(b.get("minlon")),
            float(b.get("maxlat")), float(b.get("maxlon")),
        )

    for el in root.iter("node"):
        nid = int(el.get("id"))
        nodes[nid] = GeoPoint(float(el.get("lat")), float(el.get("lon")))
        tags = {t.get("k"): t.get("v") for t in el.findall("tag")}
        if tags:
            node_tags[nid] = tags

    for el in root.iter("way"):
        wid = int(el.get("id"))
        refs = [int(nd.get("ref")) for nd in el.findall("nd")]
        tags = {t.get("k"): t.get("v") for t in el.findall("tag")}
        if not _keep_way(tags):
            continue
        for ref in refs:
            if ref not in nodes:
                raise OsmParseError(f"way {wid} references missing node {ref}")
        if "highway" in tags and len(refs) < 2:
            raise OsmParseError(f"highway way {wid} has fewer than 2 nodes")
        ways[wid] = OsmWay(wid, refs, tags)

    return OsmExtract(nodes=nodes, node_tags=node_tags, ways=ways, bounds=bounds)


@dataclass
class RegulatorSpec:
    """Regulator anchored on a lane at an arc-length position."""

    lane: str
    s: float


@dataclass
class AugmentationConfig:
    """Local knowledge OSM lacks: lane widths/counts, stop lines, extra regulators."""

    default_lane_width: float = 3.5
    lanes_per_direction: dict[int, int] = field(default_factory=dict)
    stop_lines: list[RegulatorSpec] = field(default_factory=list)
    crosswalks: list[RegulatorSpec] = field(default_factory=list)
    traffic_lights: list[RegulatorSpec] = field(default_factory=list)
    speed_limits: dict[int, float] = field(default_factory=dict)  # way id -> m/s
    origin: Optional[GeoPoint] = None
    max_segment_length: float = MAX_SEGMENT_LENGTH_M

    def __post_init__(self) -> None:
        if self.default_lane_width <= 0:
            raise MapBuildError(f"lane width must be > 0, got {self.default_lane_width}")
        for wid, count in self.lanes_per_direction.items():
            if count < 1:
                raise MapBuildError(f"lanes_per_direction[{wid}] must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentationConfig":
        def regs(key: str) -> list[RegulatorSpec]:
            out = []
            for i, item in enumerate(data.get(key) or []):
                if "lane" not in item or "s" not in item:
                    raise MapBuildError(f"{key}[{i}] needs 'lane' and 's'")
                out.append(RegulatorSpec(lane=str(item["lane"]), s=float(item["s"])))
            return out

        origin = None
        if data.get("origin"):
            origin = GeoPoint(float(data["origin"]["lat"]), float(data["origin"]["lon"]))
        return cls(
            default_lane_width=float(data.get("default_lane_width", 3.5)),
            lanes_per_direction={int(k): int(v) for k, v in (data.get("lanes_per_direction") or {}).items()},
            stop_lines=regs("stop_lines"),
            crosswalks=regs("crosswalks"),
            traffic_lights=regs("traffic_lights"),
            speed_limits={int(k): float(v) for k, v in (data.get("speed_limits") or {}).items()},
            origin=origin,
            max_segment_length=float(data.get("max_segment_length", MAX_SEGMENT_LENGTH_M)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "AugmentationConfig":
        data = yaml.safe_load(Path(path).read_text()) or {}
        return cls.from_dict(data)


def parse_maxspeed(value: str) -> Optional[float]:
    """OSM maxspeed tag -> m/s; bare numbers are km/h, non-numeric ignored."""
    try:
        return float(value) / 3.6
    except (TypeError, ValueError):
        return None


@dataclass
class _LaneRun:
    """One direction of one way piece before chunking into segments."""

    id_prefix: str
    way_id: int
    direction: str  # 'f' or 'b'
    xy: np.ndarray
    start_osm: int  # osm node the run departs from
    end_osm: int  # osm node the run arrives at


def _slice_arc(xy: np.ndarray, s0: float, s1: float) -> np.ndarray:
    return Polyline(xy).slice(s0, s1).xy


def build_static_map(extract: OsmExtract, aug: AugmentationConfig) -> LdmGraph:
    """Derive the static + quasi-static layers from an extract."""
    width = aug.default_lane_width
    origin = aug.origin or extract.center()

    road_ways = sorted(
        (w for w in extract.ways.values()
         if "highway" in w.tags and w.tags["highway"] not in _NON_ROAD_HIGHWAY),
        key=lambda w: w.id,
    )
    if not road_ways:
        raise MapBuildError("extract contains no road ways")

    local: dict[int, np.ndarray] = {}
    all_ids = sorted({nid for w in road_ways for nid in w.node_ids})
    if all_ids:
        lats = np.array([extract.nodes[i].lat for i in all_ids])
        lons = np.array([extract.nodes[i].lon for i in all_ids])
        for nid, row in zip(all_ids, geo_to_local_array(origin, lats, lons)):
            local[nid] = row

    # --- intersection detection: count way arms meeting at each node ---
    arms_at: dict[int, int] = {}
    for way in road_ways:
        for idx, nid in enumerate(way.node_ids):
            arms_at[nid] = arms_at.get(nid, 0) + (1 if idx in (0, len(way.node_ids) - 1) else 2)
    intersections = {nid for nid, n in arms_at.items() if n >= 3}

    # --- split ways into pieces at intersection nodes ---
    pieces: list[tuple[OsmWay, int, list[int]]] = []
    for way in road_ways:
        run: list[int] = []
        piece_idx = 0
        for i, nid in enumerate(way.node_ids):
            run.append(nid)
            interior = 0 < i < len(way.node_ids) - 1
            if interior and nid in intersections:
                pieces.append((way, piece_idx, run))
                piece_idx += 1
                run = [nid]
        if len(run) >= 2:
            pieces.append((way, piece_idx, run))

    # --- per-intersection setback so a blend of >= 3 m radius fits ---
    half_width: dict[int, float] = {}
    for way, _, node_run in pieces:
        oneway = way.tags.get("oneway") in ("yes", "true", "1", "-1")
        n_dir = aug.lanes_per_direction.get(way.id, 1)
        total = n_dir if oneway else 2 * n_dir
        for end in (node_run[0], node_run[-1]):
            if end in intersections:
                half_width[end] = max(half_width.get(end, 0.0), total * width / 2.0)
    setback = {
        nid: max(hw, MIN_JUNCTION_RADIUS_M + 0.5 * width)
        for nid, hw in half_width.items()
    }

    # --- lane runs: offset, trimmed at intersection ends ---
    runs: dict[str, _LaneRun] = {}
    for way, piece_idx, node_run in pieces:
        raw = dedupe_points(np.array([local[n] for n in node_run]))
        if len(raw) < 2:
            continue
        oneway_tag = way.tags.get("oneway", "no")
        if oneway_tag == "-1":
            raw = raw[::-1].copy()
            node_run = list(reversed(node_run))
        oneway = oneway_tag in ("yes", "true", "1", "-1")
        n_dir = aug.lanes_per_direction.get(way.id, 1)
        directions = [("f", raw, node_run[0], node_run[-1])]
        if not oneway:
            directions.append(("b", raw[::-1].copy(), node_run[-1], node_run[0]))
        for dir_code, base, start_osm, end_osm in directions:
            for lane_idx in range(n_dir):
                if oneway:
                    off = (lane_idx + 0.5) * width - n_dir * width / 2.0
                else:
                    off = (lane_idx + 0.5) * width
                xy = offset_polyline(base, off) if abs(off) > 1e-9 else base.copy()
                length = float(np.sum(np.hypot(*np.diff(xy, axis=0).T)))
                t0 = setback.get(start_osm, 0.0) if start_osm in intersections else 0.0
                t1 = setback.get(end_osm, 0.0) if end_osm in intersections else 0.0
                if length - t0 - t1 < _MIN_LANE_LENGTH_M:
                    scale = max(0.0, (length - _MIN_LANE_LENGTH_M) / (t0 + t1)) if t0 + t1 > 0 else 0.0
                    t0, t1 = t0 * scale, t1 * scale
                if length - t0 - t1 < _MIN_LANE_LENGTH_M:
                    continue
                xy = _slice_arc(xy, t0, length - t1)
                prefix = f"w{way.id}.{piece_idx}.{dir_code}{lane_idx}"
                runs[prefix] = _LaneRun(prefix, way.id, dir_code, xy, start_osm, end_osm)

    if not runs:
        raise MapBuildError("no usable lane geometry after trimming")

    # --- continuation joints: 2-arm nodes shared by distinct pieces ---
    # Snap endpoints together, then link index-matched lanes directly.
    incoming_at: dict[int, list[str]] = {}
    outgoing_at: dict[int, list[str]] = {}
    for prefix in sorted(runs):
        run = runs[prefix]
        outgoing_at.setdefault(run.start_osm, []).append(prefix)
        incoming_at.setdefault(run.end_osm, []).append(prefix)

    continuation_links: list[tuple[str, str]] = []
    for nid in sorted(set(incoming_at) | set(outgoing_at)):
        if nid in intersections:
            continue
        for src in incoming_at.get(nid, ()):
            for dst in outgoing_at.get(nid, ()):
                a, b = runs[src], runs[dst]
                # same piece means turning back onto oneself
                if src.rsplit(".", 1)[0] == dst.rsplit(".", 1)[0]:
                    continue
                gap = float(np.hypot(*(b.xy[0] - a.xy[-1])))
                if gap > 2.0 * width:
                    continue
                if gap > 1e-9:
                    mid = 0.5 * (a.xy[-1] + b.xy[0])
                    a.xy[-1] = mid
                    b.xy[0] = mid
                continuation_links.append((src, dst))

    # --- chunk lane runs into segments and assemble graph records ---
    nodes: list[LdmNode] = []
    relations: list[tuple[str, RelationKind, str]] = []
    chunk_first: dict[str, str] = {}
    chunk_last: dict[str, str] = {}
    lane_polylines: dict[str, Polyline] = {}

    way_by_id = {w.id: w for w in road_ways}

    def speed_limit_for(way_id: int) -> Optional[float]:
        if way_id in aug.speed_limits:
            return aug.speed_limits[way_id]
        return parse_maxspeed(way_by_id[way_id].tags.get("maxspeed"))

    for prefix in sorted(runs):
        run = runs[prefix]
        poly = Polyline(run.xy)
        n_chunks = max(1, int(math.ceil(poly.length / aug.max_segment_length)))
        bounds_s = np.linspace(0.0, poly.length, n_chunks + 1)
        prev_id = None
        for ci in range(n_chunks):
            seg_id = f"{prefix}.{ci}"
            seg_poly = poly.slice(float(bounds_s[ci]), float(bounds_s[ci + 1])) if n_chunks > 1 else poly
            attrs = {
                "way": run.way_id,
                "direction": run.direction,
                "lane_width": width,
            }
            limit = speed_limit_for(run.way_id)
            if limit is not None:
                attrs["speed_limit"] = limit
            nodes.append(LdmNode(seg_id, NodeKind.LANE_SEGMENT, seg_poly, attrs))
            lane_polylines[seg_id] = seg_poly
            if prev_id is not None:
                relations.append((prev_id, RelationKind.SUCCESSOR, seg_id))
            prev_id = seg_id
            if ci == 0:
                chunk_first[prefix] = seg_id
            chunk_last[prefix] = seg_id

    for src, dst in continuation_links:
        relations.append((chunk_last[src], RelationKind.SUCCESSOR, chunk_first[dst]))

    # --- intersections and lane junction connectors ---
    for nid in sorted(intersections):
        x_id = f"x{nid}"
        nodes.append(LdmNode(x_id, NodeKind.INTERSECTION, LocalPoint(*local[nid]), {"osm_node": nid}))
        arriving = [p for p in incoming_at.get(nid, ()) if p in runs]
        departing = [p for p in outgoing_at.get(nid, ()) if p in runs]
        for src in arriving:
            a = runs[src]
            p0 = a.xy[-1]
            t0 = a.xy[-1] - a.xy[-2]
            for dst in departing:
                b = runs[dst]
                # same-piece pairs are U-turns back onto the arm just left
                if src.rsplit(".", 1)[0] == dst.rsplit(".", 1)[0]:
                    continue
                p1 = b.xy[0]
                chord = float(np.hypot(*(p1 - p0)))
                src_seg, dst_seg = chunk_last[src], chunk_first[dst]
                if chord < 1e-3:
                    relations.append((src_seg, RelationKind.SUCCESSOR, dst_seg))
                    continue
                # 0.25 m sampling keeps chord error ~1 mm on 3 m radii, so
                # downstream 1 m curvature profiles stay clean
                pts = dedupe_points(arc_connector(p0, t0, p1, sample_step=0.25))
                if len(pts) < 2:
                    continue
                j_poly = Polyline(pts)
                t1 = b.xy[1] - b.xy[0]
                turn = math.degrees(
                    math.atan2(t1[1], t1[0]) - math.atan2(t0[1], t0[0])
                )
                turn = (turn + 180.0) % 360.0 - 180.0
                j_id = f"j:{nid}:{src}:{dst}"
                nodes.append(LdmNode(
                    j_id, NodeKind.LANE_JUNCTION, j_poly,
                    {"intersection": x_id, "turn_deg": round(turn, 3), "lane_width": width},
                ))
                lane_polylines[j_id] = j_poly
                relations.append((src_seg, RelationKind.SUCCESSOR, j_id))
                relations.append((j_id, RelationKind.SUCCESSOR, dst_seg))
                relations.append((j_id, RelationKind.PART_OF, x_id))

    # --- granularity levels: half roads and roads ---
    for way in road_ways:
        pts = dedupe_points(np.array([local[n] for n in way.node_ids]))
        if len(pts) < 2:
            continue
        road_id = f"r{way.id}"
        nodes.append(LdmNode(road_id, NodeKind.ROAD, Polyline(pts), {"name": way.tags.get("name", "")}))
        oneway = way.tags.get("oneway") in ("yes", "true", "1", "-1")
        for dir_code in ("f",) if oneway else ("f", "b"):
            half_id = f"h{way.id}.{dir_code}"
            geom = Polyline(pts if dir_code == "f" else pts[::-1].copy())
            nodes.append(LdmNode(half_id, NodeKind.HALF_ROAD, geom, {}))
            relations.append((half_id, RelationKind.PART_OF, road_id))
    for prefix in sorted(runs):
        run = runs[prefix]
        half_id = f"h{run.way_id}.{run.direction}"
        seg_prefix = f"{prefix}."
        for node in nodes:
            if node.kind is NodeKind.LANE_SEGMENT and node.id.startswith(seg_prefix):
                relations.append((node.id, RelationKind.PART_OF, half_id))

    # --- quasi-static objects ---
    regulators: list[tuple[str, NodeKind, LocalPoint]] = []
    for nid in sorted(extract.node_tags):
        tags = extract.node_tags[nid]
        if nid not in local:
            lats = np.array([extract.nodes[nid].lat])
            lons = np.array([extract.nodes[nid].lon])
            local[nid] = geo_to_local_array(origin, lats, lons)[0]
        point = LocalPoint(*local[nid])
        if tags.get("highway") == "crossing":
            regulators.append((f"cw:{nid}", NodeKind.CROSSWALK, point))
        elif tags.get("highway") == "traffic_signals":
            regulators.append((f"tl:{nid}", NodeKind.TRAFFIC_LIGHT, point))

    def anchored(spec: RegulatorSpec, label: str, idx: int) -> LocalPoint:
        poly = lane_polylines.get(spec.lane)
        if poly is None:
            raise MapBuildError(f"{label}[{idx}] references unknown lane {spec.lane!r}")
        if not (0.0 <= spec.s <= poly.length):
            raise MapBuildError(
                f"{label}[{idx}] position {spec.s} outside lane {spec.lane!r} of length {poly.length:.1f}"
            )
        return poly.point_at(spec.s)

    for i, spec in enumerate(aug.stop_lines):
        regulators.append((f"sl:a{i}", NodeKind.STOP_LINE, anchored(spec, "stop_lines", i)))
    for i, spec in enumerate(aug.crosswalks):
        regulators.append((f"cw:a{i}", NodeKind.CROSSWALK, anchored(spec, "crosswalks", i)))
    for i, spec in enumerate(aug.traffic_lights):
        regulators.append((f"tl:a{i}", NodeKind.TRAFFIC_LIGHT, anchored(spec, "traffic_lights", i)))

    lane_items = sorted(lane_polylines.items())
    for reg_id, kind, point in regulators:
        nodes.append(LdmNode(reg_id, kind, point, {}))
        if kind is NodeKind.TRAFFIC_LIGHT:
            state_id = f"{reg_id}.state"
            nodes.append(LdmNode(state_id, NodeKind.TRAFFIC_LIGHT_STATE, point, {"color": "unknown"}))
            relations.append((reg_id, RelationKind.HAS_STATE, state_id))
        for lane_id, poly in lane_items:
            lo = poly.xy.min(axis=0) - REGULATOR_LINK_RANGE_M
            hi = poly.xy.max(axis=0) + REGULATOR_LINK_RANGE_M
            if not (lo[0] <= point.x <= hi[0] and lo[1] <= point.y <= hi[1]):
                continue
            if project(poly, point).distance <= REGULATOR_LINK_RANGE_M:
                relations.append((lane_id, RelationKind.REGULATED_BY, reg_id))

    # --- building outlines for display ---
    building_ways = sorted(
        (w for w in extract.ways.values() if "building" in w.tags), key=lambda w: w.id
    )
    for way in building_ways:
        coords = [extract.nodes[n] for n in way.node_ids if n in extract.nodes]
        if len(coords) < 2:
            continue
        lats = np.array([c.lat for c in coords])
        lons = np.array([c.lon for c in coords])
        pts = dedupe_points(geo_to_local_array(origin, lats, lons))
        if len(pts) < 2:
            continue
        nodes.append(LdmNode(f"b:{way.id}", NodeKind.BUILDING, Polyline(pts), {}))

    graph = LdmGraph.build(nodes, relations)
    graph.origin = origin
    return graph


def load_map(osm_path: str | Path, aug_path: Optional[str | Path] = None) -> LdmGraph:
    """Convenience: parse files and build the graph."""
    text = Path(osm_path).read_text()
    extract = parse_osm(text)
    aug = AugmentationConfig.from_file(aug_path) if aug_path else AugmentationConfig()
    return build_static_map(extract, aug)
