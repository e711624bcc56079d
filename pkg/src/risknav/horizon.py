"""Forward path extraction: per-vehicle path trees and path crossings.

From a vehicle's matched lane position the successor topology is
expanded depth-first until each branch covers the configured lookahead
length. Junction branches are labeled straight/left/right from the
heading change across the connector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import GeometryError, LocalPoint, Polyline, concat_polylines, intersect
from .mapgraph import DynamicObject, LaneMatch, LdmGraph, NodeKind

_LABEL_RANK = {"straight": 0, "right": 1, "left": 2}


class RouteError(ValueError):
    """Ego route is broken or the ego has left it."""


@dataclass
class HorizonConfig:
    delta_l_h: float = 50.0
    max_paths: int = 8
    straight_angle_deg: float = 30.0

    def __post_init__(self) -> None:
        if self.delta_l_h <= 0:
            raise ValueError(f"delta_l_h must be > 0, got {self.delta_l_h}")
        if self.max_paths < 1:
            raise ValueError(f"max_paths must be >= 1, got {self.max_paths}")


@dataclass
class Path:
    """Lane-node sequence with its concatenated centerline.

    The polyline starts at the owning vehicle's projected position;
    `node_intervals` maps each node id to its [s0, s1) stretch of the
    polyline arc length, and `start_offset` is where on the first node's
    centerline the path begins.
    """

    node_ids: list[str]
    polyline: Polyline
    branch_labels: list[str]
    node_intervals: list[tuple[str, float, float]] = field(default_factory=list)
    start_offset: float = 0.0

    @property
    def length(self) -> float:
        return self.polyline.length

    def path_s_of(self, node_id: str, s_on_node: float) -> Optional[float]:
        """Translate a node-local arc position into path arc length.

        Returns None when that spot is outside the path (behind the
        start or beyond the horizon truncation).
        """
        for idx, (nid, lo, hi) in enumerate(self.node_intervals):
            if nid != node_id:
                continue
            offset = self.start_offset if idx == 0 else 0.0
            path_s = lo + (s_on_node - offset)
            if lo - 1e-6 <= path_s <= hi + 1e-6:
                return min(max(path_s, lo), hi)
        return None


@dataclass
class PathTree:
    vehicle_id: str
    root_lane: Optional[str]
    root_s: float
    paths: list[Path]


@dataclass(frozen=True)
class ConflictZone:
    point: LocalPoint
    ego_path_index: int
    other_vehicle_id: str
    other_path_index: int
    s_ego: float
    s_other: float


def turn_label(graph: LdmGraph, junction_id: str, straight_angle_deg: float = 30.0) -> str:
    """Classify a junction connector by its start-to-end heading change."""
    node = graph.node(junction_id)
    geom = node.geometry
    assert isinstance(geom, Polyline)
    dtheta = math.degrees(geom.heading_at(geom.length) - geom.heading_at(0.0))
    dtheta = (dtheta + 180.0) % 360.0 - 180.0
    if abs(dtheta) < straight_angle_deg:
        return "straight"
    return "left" if dtheta > 0 else "right"


def _resolve_root(graph: LdmGraph, vehicle: DynamicObject) -> Optional[LaneMatch]:
    match = graph.located_on(vehicle.id)
    if match is None:
        match = graph.match_to_lane(vehicle.position, vehicle.heading)
    return match


def assemble_path(graph: LdmGraph, node_ids: list[str], root_s: float, labels: list[str],
              limit: Optional[float] = None) -> Path:
    pieces: list[Polyline] = []
    intervals: list[tuple[str, float, float]] = []
    s = 0.0
    skipped_first = False
    for idx, nid in enumerate(node_ids):
        geom = graph.node(nid).geometry
        assert isinstance(geom, Polyline)
        if idx == 0 and root_s > 1e-3:
            if geom.length - root_s < 1e-3:
                skipped_first = True
                continue
            geom = geom.slice(root_s, geom.length)
        pieces.append(geom)
        intervals.append((nid, s, s + geom.length))
        s += geom.length
    poly = concat_polylines(pieces)
    if limit is not None and poly.length > limit:
        poly = poly.slice(0.0, limit)
        clipped = []
        for nid, a, b in intervals:
            if a >= limit:
                break
            clipped.append((nid, a, min(b, limit)))
        intervals = clipped
    return Path(node_ids=node_ids, polyline=poly, branch_labels=labels,
                node_intervals=intervals,
                start_offset=0.0 if skipped_first else root_s)


_MAX_NODES_PER_PATH = 128


def path_tree(graph: LdmGraph, vehicle: DynamicObject, cfg: HorizonConfig) -> PathTree:
    """All hypothesis paths of a vehicle up to the lookahead length.

    Branches at junctions expand in straight/left/right order; when the
    raw enumeration exceeds max_paths, the lowest-priority branches are
    dropped (straight beats right beats left, longer beats shorter).
    """
    match = _resolve_root(graph, vehicle)
    if match is None:
        return PathTree(vehicle.id, None, 0.0, [])

    results: list[tuple[list[str], list[str]]] = []

    def expand(node_ids: list[str], labels: list[str], covered: float) -> None:
        if covered >= cfg.delta_l_h or len(node_ids) >= _MAX_NODES_PER_PATH:
            results.append((node_ids, labels))
            return
        succ = graph.successors(node_ids[-1])
        if not succ:
            results.append((node_ids, labels))
            return
        children = []
        for child in succ:
            if graph.node(child).kind is NodeKind.LANE_JUNCTION:
                label = turn_label(graph, child, cfg.straight_angle_deg)
            else:
                label = None
            children.append((child, label))
        # expansion order: straight, left, right, then id for determinism
        order = {"straight": 0, "left": 1, "right": 2}
        children.sort(key=lambda c: (order.get(c[1], -1), c[0]))
        for child, label in children:
            geom = graph.node(child).geometry
            child_len = geom.length if isinstance(geom, Polyline) else 0.0
            child_labels = labels + [label] if label is not None else labels
            expand(node_ids + [child], child_labels, covered + child_len)

    first_geom = graph.node(match.lane_id).geometry
    assert isinstance(first_geom, Polyline)
    first_len = max(0.0, first_geom.length - match.s_along)
    expand([match.lane_id], [], first_len)

    if len(results) > cfg.max_paths:
        def priority(item: tuple[list[str], list[str]]) -> tuple:
            node_ids, labels = item
            rank = tuple(_LABEL_RANK[l] for l in labels)
            return (rank, -len(node_ids))

        keep = set(
            id(item) for item in sorted(results, key=priority)[: cfg.max_paths]
        )
        results = [item for item in results if id(item) in keep]

    paths = [
        assemble_path(graph, node_ids, match.s_along, labels)
        for node_ids, labels in results
    ]
    return PathTree(vehicle.id, match.lane_id, match.s_along, paths)


def ego_route_path(
    graph: LdmGraph,
    ego: DynamicObject,
    route_nodes: Sequence[str],
    cfg: HorizonConfig,
) -> Path:
    """The single path along the known navigation route, clipped to the horizon."""
    match = _resolve_root(graph, ego)
    if match is None:
        raise RouteError(f"ego {ego.id} matches no lane")
    if match.lane_id not in route_nodes:
        raise RouteError(f"ego lane {match.lane_id} is not on the navigation route")
    idx = list(route_nodes).index(match.lane_id)
    node_ids = [match.lane_id]
    labels: list[str] = []
    covered = graph.node(match.lane_id).geometry.length - match.s_along
    for nxt in list(route_nodes)[idx + 1:]:
        if covered >= cfg.delta_l_h:
            break
        if nxt not in graph.successors(node_ids[-1]):
            raise RouteError(f"route break: {nxt} does not succeed {node_ids[-1]}")
        if graph.node(nxt).kind is NodeKind.LANE_JUNCTION:
            labels.append(turn_label(graph, nxt, cfg.straight_angle_deg))
        covered += graph.node(nxt).geometry.length
        node_ids.append(nxt)
    return assemble_path(graph, node_ids, match.s_along, labels, limit=cfg.delta_l_h)


def conflict_zones(ego_path: Path, others: Sequence[PathTree], ego_id: str = "ego") -> list[ConflictZone]:
    """Crossings of the ego path with every other vehicle's possible paths."""
    zones: list[ConflictZone] = []
    for tree in others:
        if tree.vehicle_id == ego_id:
            continue
        for j, other in enumerate(tree.paths):
            for crossing in intersect(ego_path.polyline, other.polyline):
                if crossing.s_a > ego_path.length:
                    continue
                zones.append(ConflictZone(
                    point=crossing.point,
                    ego_path_index=0,
                    other_vehicle_id=tree.vehicle_id,
                    other_path_index=j,
                    s_ego=crossing.s_a,
                    s_other=crossing.s_b,
                ))
    zones.sort(key=lambda z: (z.s_ego, z.other_vehicle_id, z.other_path_index))
    return zones
