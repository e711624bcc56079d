"""Layered relational map graph.

Nodes live on four layers by dynamicity (static road geometry,
quasi-static regulators, transient states, dynamic traffic objects) and
are linked by typed relations. The static and quasi-static core is
immutable after build; the dynamic layer is replaced wholesale each tick
with a single reference swap so readers never see a half-applied update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .geometry import LocalPoint, Polyline, project, wrap_angle


class GraphError(ValueError):
    """Graph construction or relation constraint violation."""


class Layer(str, Enum):
    STATIC = "static"
    QUASI_STATIC = "quasi_static"
    TRANSIENT = "transient"
    DYNAMIC = "dynamic"


class NodeKind(str, Enum):
    ROAD = "road"
    HALF_ROAD = "half_road"
    LANE_SEGMENT = "lane_segment"
    LANE_JUNCTION = "lane_junction"
    INTERSECTION = "intersection"
    TRAFFIC_LIGHT = "traffic_light"
    STOP_LINE = "stop_line"
    CROSSWALK = "crosswalk"
    BUILDING = "building"
    TRAFFIC_LIGHT_STATE = "traffic_light_state"
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"


KIND_LAYER: dict[NodeKind, Layer] = {
    NodeKind.ROAD: Layer.STATIC,
    NodeKind.HALF_ROAD: Layer.STATIC,
    NodeKind.LANE_SEGMENT: Layer.STATIC,
    NodeKind.LANE_JUNCTION: Layer.STATIC,
    NodeKind.INTERSECTION: Layer.STATIC,
    NodeKind.TRAFFIC_LIGHT: Layer.QUASI_STATIC,
    NodeKind.STOP_LINE: Layer.QUASI_STATIC,
    NodeKind.CROSSWALK: Layer.QUASI_STATIC,
    NodeKind.BUILDING: Layer.QUASI_STATIC,
    NodeKind.TRAFFIC_LIGHT_STATE: Layer.TRANSIENT,
    NodeKind.VEHICLE: Layer.DYNAMIC,
    NodeKind.PEDESTRIAN: Layer.DYNAMIC,
}

LANE_KINDS = frozenset({NodeKind.LANE_SEGMENT, NodeKind.LANE_JUNCTION})
REGULATOR_KINDS = frozenset({NodeKind.STOP_LINE, NodeKind.TRAFFIC_LIGHT, NodeKind.CROSSWALK})


class RelationKind(str, Enum):
    SUCCESSOR = "successor"
    PART_OF = "part_of"
    REGULATED_BY = "regulated_by"
    HAS_STATE = "has_state"
    LOCATED_ON = "located_on"


# allowed (src kind, dst kind) pairs per relation
_PART_OF_PAIRS = {
    (NodeKind.LANE_SEGMENT, NodeKind.HALF_ROAD),
    (NodeKind.HALF_ROAD, NodeKind.ROAD),
    (NodeKind.LANE_JUNCTION, NodeKind.INTERSECTION),
}


@dataclass(frozen=True)
class Relation:
    src: str
    kind: RelationKind
    dst: str


@dataclass
class LdmNode:
    id: str
    kind: NodeKind
    geometry: Polyline | LocalPoint | None = None
    attributes: dict = field(default_factory=dict)

    @property
    def layer(self) -> Layer:
        return KIND_LAYER[self.kind]

    def anchor(self) -> LocalPoint:
        """Representative point of the node's geometry."""
        if isinstance(self.geometry, LocalPoint):
            return self.geometry
        if isinstance(self.geometry, Polyline):
            return self.geometry.point_at(self.geometry.length / 2.0)
        raise GraphError(f"node {self.id} has no geometry")


_ALLOWED_CLASSES = ("ego", "car", "bicycle", "pedestrian")


@dataclass
class DynamicObject:
    id: str
    cls: str
    position: LocalPoint
    heading: float
    speed: float
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        if self.cls not in _ALLOWED_CLASSES:
            raise GraphError(f"unknown object class {self.cls!r}")
        if self.speed < 0:
            raise GraphError(f"object {self.id}: negative speed {self.speed}")
        self.heading = wrap_angle(self.heading)


@dataclass(frozen=True)
class LaneMatch:
    lane_id: str
    s_along: float
    lateral: float


# map-matching gates: one lane width plus localization slack, and the
# half-plane of travel direction
MATCH_MAX_LATERAL_M = 5.0
MATCH_MAX_HEADING_RAD = math.pi / 2.0

GRID_CELL_M = 25.0


class _SpatialGrid:
    """Uniform cell index over node bounding boxes."""

    def __init__(self, cell: float = GRID_CELL_M):
        self.cell = cell
        self._cells: dict[tuple[int, int], list[str]] = {}

    def _key(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor(x / self.cell)), int(math.floor(y / self.cell)))

    def insert(self, node_id: str, geometry: Polyline | LocalPoint) -> None:
        if isinstance(geometry, LocalPoint):
            lo = hi = (geometry.x, geometry.y)
        else:
            lo = tuple(geometry.xy.min(axis=0))
            hi = tuple(geometry.xy.max(axis=0))
        kx0, ky0 = self._key(lo[0], lo[1])
        kx1, ky1 = self._key(hi[0], hi[1])
        for kx in range(kx0, kx1 + 1):
            for ky in range(ky0, ky1 + 1):
                self._cells.setdefault((kx, ky), []).append(node_id)

    def candidates(self, center: LocalPoint, radius: float) -> list[str]:
        kx0, ky0 = self._key(center.x - radius, center.y - radius)
        kx1, ky1 = self._key(center.x + radius, center.y + radius)
        out: list[str] = []
        seen: set[str] = set()
        for kx in range(kx0, kx1 + 1):
            for ky in range(ky0, ky1 + 1):
                for nid in self._cells.get((kx, ky), ()):
                    if nid not in seen:
                        seen.add(nid)
                        out.append(nid)
        return out


def _validate_relation(kind: RelationKind, src: LdmNode, dst: LdmNode) -> None:
    if kind is RelationKind.SUCCESSOR:
        if src.kind not in LANE_KINDS or dst.kind not in LANE_KINDS:
            raise GraphError(f"successor must link lane nodes: {src.id} -> {dst.id}")
    elif kind is RelationKind.PART_OF:
        if (src.kind, dst.kind) not in _PART_OF_PAIRS:
            raise GraphError(f"part_of disallows {src.kind.value} -> {dst.kind.value}")
    elif kind is RelationKind.REGULATED_BY:
        if src.kind not in LANE_KINDS or dst.kind not in REGULATOR_KINDS:
            raise GraphError(f"regulated_by must link a lane to a regulator: {src.id} -> {dst.id}")
    elif kind is RelationKind.HAS_STATE:
        if src.kind is not NodeKind.TRAFFIC_LIGHT or dst.kind is not NodeKind.TRAFFIC_LIGHT_STATE:
            raise GraphError(f"has_state must link traffic light to its state: {src.id} -> {dst.id}")
    elif kind is RelationKind.LOCATED_ON:
        if src.layer is not Layer.DYNAMIC or dst.kind not in LANE_KINDS:
            raise GraphError(f"located_on must link a dynamic object to a lane: {src.id} -> {dst.id}")


@dataclass
class _DynamicEntry:
    obj: DynamicObject
    node: LdmNode
    match: Optional[LaneMatch]


class LdmGraph:
    """Typed map graph with adjacency indexes and a swap-in dynamic layer."""

    def __init__(self) -> None:
        self.origin = None  # set by the map builder when geodetic input was used
        self._nodes: dict[str, LdmNode] = {}
        self._out: dict[tuple[str, RelationKind], list[str]] = {}
        self._in: dict[tuple[str, RelationKind], list[str]] = {}
        self._relations: list[Relation] = []
        self._grid = _SpatialGrid()
        self._lane_ids: list[str] = []
        self._dynamic: dict[str, _DynamicEntry] = {}
        self._transient: dict[str, dict] = {}

    # -- construction -------------------------------------------------

    @classmethod
    def build(
        cls,
        nodes: Iterable[LdmNode],
        relations: Iterable[tuple[str, RelationKind, str]] = (),
    ) -> "LdmGraph":
        g = cls()
        for node in nodes:
            if node.id in g._nodes:
                raise GraphError(f"duplicate node id {node.id!r}")
            if node.layer is Layer.DYNAMIC:
                raise GraphError(f"dynamic node {node.id!r} must come through update_dynamic")
            g._nodes[node.id] = node
        for src_id, kind, dst_id in relations:
            kind = RelationKind(kind)
            src = g._nodes.get(src_id)
            dst = g._nodes.get(dst_id)
            if src is None or dst is None:
                missing = src_id if src is None else dst_id
                raise GraphError(f"relation endpoint {missing!r} does not exist")
            _validate_relation(kind, src, dst)
            g._add_relation(Relation(src_id, kind, dst_id))
        for node in g._nodes.values():
            if node.geometry is not None:
                g._grid.insert(node.id, node.geometry)
            if node.kind in LANE_KINDS:
                g._lane_ids.append(node.id)
        g._lane_ids.sort()
        return g

    def _add_relation(self, rel: Relation) -> None:
        self._relations.append(rel)
        self._out.setdefault((rel.src, rel.kind), []).append(rel.dst)
        self._in.setdefault((rel.dst, rel.kind), []).append(rel.src)

    def fork(self) -> "LdmGraph":
        """Independent dynamic/transient state over the shared static core.

        Concurrent sessions never write to the static layers, so sharing
        node and index structures is safe.
        """
        g = LdmGraph()
        g.origin = self.origin
        g._nodes = self._nodes
        g._out = self._out
        g._in = self._in
        g._relations = self._relations
        g._grid = self._grid
        g._lane_ids = self._lane_ids
        g._dynamic = {}
        g._transient = {}
        return g

    # -- lookups ------------------------------------------------------

    def node(self, node_id: str) -> LdmNode:
        n = self._nodes.get(node_id)
        if n is None:
            entry = self._dynamic.get(node_id)
            if entry is None:
                raise KeyError(node_id)
            return entry.node
        return n

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes or node_id in self._dynamic

    @property
    def static_nodes(self) -> Mapping[str, LdmNode]:
        return self._nodes

    @property
    def relations(self) -> Sequence[Relation]:
        return tuple(self._relations)

    def nodes_of_kind(self, kind: NodeKind) -> list[LdmNode]:
        if KIND_LAYER[kind] is Layer.DYNAMIC:
            return [e.node for e in self._dynamic.values() if e.node.kind is kind]
        return [n for n in self._nodes.values() if n.kind is kind]

    def successors(self, node_id: str) -> list[str]:
        return list(self._out.get((node_id, RelationKind.SUCCESSOR), ()))

    def predecessors(self, node_id: str) -> list[str]:
        return list(self._in.get((node_id, RelationKind.SUCCESSOR), ()))

    def regulators(self, lane_id: str) -> list[LdmNode]:
        ids = self._out.get((lane_id, RelationKind.REGULATED_BY), ())
        return [self._nodes[i] for i in ids]

    def regulated_lanes(self, regulator_id: str) -> list[str]:
        return list(self._in.get((regulator_id, RelationKind.REGULATED_BY), ()))

    def part_of(self, node_id: str) -> list[str]:
        return list(self._out.get((node_id, RelationKind.PART_OF), ()))

    def members_of(self, node_id: str) -> list[str]:
        return list(self._in.get((node_id, RelationKind.PART_OF), ()))

    def states_of(self, traffic_light_id: str) -> list[LdmNode]:
        ids = self._out.get((traffic_light_id, RelationKind.HAS_STATE), ())
        return [self._nodes[i] for i in ids]

    def lane_ids(self) -> list[str]:
        return list(self._lane_ids)

    def road_of_lane(self, lane_id: str) -> Optional[str]:
        """Follow part_of chains from a lane segment up to its road."""
        current = lane_id
        for _ in range(4):
            parents = self.part_of(current)
            if not parents:
                return None
            current = parents[0]
            if self._nodes[current].kind is NodeKind.ROAD:
                return current
        return None

    # -- transient layer ----------------------------------------------

    def set_transient(self, node_id: str, key: str, value) -> None:
        if node_id not in self._nodes:
            raise KeyError(node_id)
        self._transient.setdefault(node_id, {})[key] = value

    def get_transient(self, node_id: str, key: str, default=None):
        return self._transient.get(node_id, {}).get(key, default)

    def clear_transient(self, node_id: str, key: str) -> None:
        self._transient.get(node_id, {}).pop(key, None)

    # -- dynamic layer ------------------------------------------------

    def update_dynamic(self, objects: Sequence[DynamicObject]) -> None:
        """Replace the dynamic layer; stale objects disappear.

        Each object is map-matched and, on success, linked to its lane.
        The new layer is built aside and swapped in with one assignment.
        """
        fresh: dict[str, _DynamicEntry] = {}
        for obj in objects:
            if obj.id in fresh:
                raise GraphError(f"duplicate dynamic object id {obj.id!r}")
            if obj.id in self._nodes:
                raise GraphError(f"dynamic object id {obj.id!r} collides with a map node")
            kind = NodeKind.PEDESTRIAN if obj.cls == "pedestrian" else NodeKind.VEHICLE
            match = self.match_to_lane(obj.position, obj.heading)
            node = LdmNode(
                id=obj.id,
                kind=kind,
                geometry=obj.position,
                attributes={
                    "class": obj.cls,
                    "heading": obj.heading,
                    "speed": obj.speed,
                    "timestamp": obj.timestamp,
                },
            )
            fresh[obj.id] = _DynamicEntry(obj=obj, node=node, match=match)
        self._dynamic = fresh

    def dynamic_objects(self) -> list[DynamicObject]:
        return [e.obj for e in self._dynamic.values()]

    def located_on(self, object_id: str) -> Optional[LaneMatch]:
        entry = self._dynamic.get(object_id)
        return entry.match if entry else None

    def dynamic_relations(self) -> list[Relation]:
        return [
            Relation(oid, RelationKind.LOCATED_ON, e.match.lane_id)
            for oid, e in self._dynamic.items()
            if e.match is not None
        ]

    # -- queries ------------------------------------------------------

    def match_to_lane(self, position: LocalPoint, heading: float) -> Optional[LaneMatch]:
        """Snap a pose to the best lane centerline.

        Candidates must lie within MATCH_MAX_LATERAL_M laterally and have
        a centerline tangent within 90 degrees of `heading`; the smallest
        |lateral| wins, ties by lane id.
        """
        best: Optional[tuple[float, str, float, float]] = None
        for nid in self._grid.candidates(position, MATCH_MAX_LATERAL_M + GRID_CELL_M):
            node = self._nodes[nid]
            if node.kind not in LANE_KINDS:
                continue
            geom = node.geometry
            assert isinstance(geom, Polyline)
            proj = project(geom, position)
            if abs(proj.lateral) > MATCH_MAX_LATERAL_M:
                continue
            tangent_heading = geom.heading_at(proj.s_along)
            if abs(wrap_angle(tangent_heading - heading)) >= MATCH_MAX_HEADING_RAD:
                continue
            key = (abs(proj.lateral), nid, proj.s_along, proj.lateral)
            if best is None or key < best:
                best = key
        if best is None:
            return None
        return LaneMatch(lane_id=best[1], s_along=best[2], lateral=best[3])

    def query_radius(
        self,
        center: LocalPoint,
        radius: float,
        kinds: Optional[Iterable[NodeKind]] = None,
    ) -> list[LdmNode]:
        """Nodes whose geometry intersects the disc, sorted by distance."""
        if radius <= 0:
            raise GraphError(f"radius must be > 0, got {radius}")
        kind_set = set(kinds) if kinds is not None else None
        hits: list[tuple[float, str, LdmNode]] = []

        def consider(node: LdmNode) -> None:
            if kind_set is not None and node.kind not in kind_set:
                return
            if node.geometry is None:
                return
            if isinstance(node.geometry, LocalPoint):
                d = center.distance_to(node.geometry)
            else:
                d = project(node.geometry, center).distance
            if d <= radius:
                hits.append((d, node.id, node))

        for nid in self._grid.candidates(center, radius):
            consider(self._nodes[nid])
        for entry in self._dynamic.values():
            consider(entry.node)
        hits.sort(key=lambda h: (h[0], h[1]))
        return [h[2] for h in hits]

    # -- integrity ----------------------------------------------------

    def validate(self) -> None:
        """Full-scan re-check of every relation constraint (test hook)."""
        for rel in self._relations:
            _validate_relation(rel.kind, self._nodes[rel.src], self._nodes[rel.dst])
        for rel in self.dynamic_relations():
            _validate_relation(rel.kind, self.node(rel.src), self._nodes[rel.dst])
        for lane_id in self._lane_ids:
            node = self._nodes[lane_id]
            if node.kind is NodeKind.LANE_SEGMENT:
                road = self.road_of_lane(lane_id)
                if road is None:
                    raise GraphError(f"lane {lane_id} reaches no road via part_of")
