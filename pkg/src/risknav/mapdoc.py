"""Static map geometry as a serializable document.

Served once to clients; per-tick frames only reference the chunk ids
near the ego so the UI knows what to draw without re-sending geometry.
"""

from __future__ import annotations

import math

from .geometry import LocalPoint, Polyline
from .mapgraph import LdmGraph, NodeKind

MAP_SCHEMA_VERSION = 1
CHUNK_SIZE_M = 100.0

_DOC_KINDS = (
    NodeKind.LANE_SEGMENT,
    NodeKind.LANE_JUNCTION,
    NodeKind.INTERSECTION,
    NodeKind.STOP_LINE,
    NodeKind.CROSSWALK,
    NodeKind.TRAFFIC_LIGHT,
    NodeKind.BUILDING,
)


def chunk_id(x: float, y: float) -> str:
    return f"c{math.floor(x / CHUNK_SIZE_M)}_{math.floor(y / CHUNK_SIZE_M)}"


def chunks_near(x: float, y: float, radius: float) -> list[str]:
    lo_x = math.floor((x - radius) / CHUNK_SIZE_M)
    hi_x = math.floor((x + radius) / CHUNK_SIZE_M)
    lo_y = math.floor((y - radius) / CHUNK_SIZE_M)
    hi_y = math.floor((y + radius) / CHUNK_SIZE_M)
    return [f"c{cx}_{cy}" for cx in range(lo_x, hi_x + 1) for cy in range(lo_y, hi_y + 1)]


def _round_pts(xy) -> list[list[float]]:
    return [[round(float(x), 3), round(float(y), 3)] for x, y in xy]


def map_document(graph: LdmGraph) -> dict:
    """Full static geometry: lanes, junctions, regulators, buildings."""
    nodes = []
    chunks: dict[str, list[str]] = {}
    for nid in sorted(graph.static_nodes):
        node = graph.static_nodes[nid]
        if node.kind not in _DOC_KINDS:
            continue
        entry: dict = {"id": node.id, "kind": node.kind.value}
        geom = node.geometry
        if isinstance(geom, Polyline):
            entry["points"] = _round_pts(geom.xy)
            lo = geom.xy.min(axis=0)
            hi = geom.xy.max(axis=0)
        elif isinstance(geom, LocalPoint):
            entry["x"] = round(geom.x, 3)
            entry["y"] = round(geom.y, 3)
            lo = hi = (geom.x, geom.y)
        else:
            continue
        attrs = {
            k: v for k, v in sorted(node.attributes.items())
            if isinstance(v, (int, float, str, bool))
        }
        if attrs:
            entry["attrs"] = attrs
        nodes.append(entry)
        for cx in range(math.floor(lo[0] / CHUNK_SIZE_M), math.floor(hi[0] / CHUNK_SIZE_M) + 1):
            for cy in range(math.floor(lo[1] / CHUNK_SIZE_M), math.floor(hi[1] / CHUNK_SIZE_M) + 1):
                chunks.setdefault(f"c{cx}_{cy}", []).append(node.id)

    doc = {
        "schema_version": MAP_SCHEMA_VERSION,
        "nodes": nodes,
        "chunks": {k: chunks[k] for k in sorted(chunks)},
    }
    origin = getattr(graph, "origin", None)
    if origin is not None:
        doc["origin"] = {"lat": origin.lat, "lon": origin.lon}
    return doc
