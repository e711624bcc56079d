"""Synthetic OSM XML builders shared by the test suite.

All fixtures are centered at (50.0, 8.0); meters are converted to
degrees with the same equirectangular scale the package uses, so local
coordinates of generated maps are exact by construction.
"""

import math

from risknav.geometry import EARTH_RADIUS_M, GeoPoint
from risknav.osm import AugmentationConfig

LAT0 = 50.0
LON0 = 8.0


def aug(**kwargs) -> AugmentationConfig:
    """Augmentation pinned to the fixture frame origin, so local
    coordinates equal the (x, y) meters the fixtures were built from."""
    kwargs.setdefault("origin", GeoPoint(LAT0, LON0))
    return AugmentationConfig(**kwargs)


def m_to_dlat(m: float) -> float:
    return math.degrees(m / EARTH_RADIUS_M)


def m_to_dlon(m: float) -> float:
    return math.degrees(m / (EARTH_RADIUS_M * math.cos(math.radians(LAT0))))


def geo_of_xy(x: float, y: float) -> tuple[float, float]:
    return (LAT0 + m_to_dlat(y), LON0 + m_to_dlon(x))


def osm_xml(nodes: dict[int, tuple[float, float]], ways: list[tuple[int, list[int], dict]],
            node_tags: dict[int, dict] | None = None) -> str:
    """nodes: id -> local (x, y) meters; ways: (id, node ids, tags)."""
    node_tags = node_tags or {}
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6" generator="test">']
    xs = [xy[0] for xy in nodes.values()]
    ys = [xy[1] for xy in nodes.values()]
    minlat, _ = geo_of_xy(0, min(ys))
    maxlat, _ = geo_of_xy(0, max(ys))
    _, minlon = geo_of_xy(min(xs), 0)
    _, maxlon = geo_of_xy(max(xs), 0)
    lines.append(f'  <bounds minlat="{minlat}" minlon="{minlon}" maxlat="{maxlat}" maxlon="{maxlon}"/>')
    for nid, (x, y) in nodes.items():
        lat, lon = geo_of_xy(x, y)
        tags = node_tags.get(nid)
        if tags:
            lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}">')
            for k, v in tags.items():
                lines.append(f'    <tag k="{k}" v="{v}"/>')
            lines.append("  </node>")
        else:
            lines.append(f'  <node id="{nid}" lat="{lat}" lon="{lon}"/>')
    for wid, refs, tags in ways:
        lines.append(f'  <way id="{wid}">')
        for ref in refs:
            lines.append(f'    <nd ref="{ref}"/>')
        for k, v in tags.items():
            lines.append(f'    <tag k="{k}" v="{v}"/>')
        lines.append("  </way>")
    lines.append("</osm>")
    return "\n".join(lines)


def x_cross_xml(arm: float = 200.0, tags: dict | None = None) -> str:
    """Two perpendicular two-way streets crossing at the local origin."""
    tags = tags or {"highway": "residential"}
    nodes = {
        1: (-arm, 0.0), 2: (0.0, 0.0), 3: (arm, 0.0),
        4: (0.0, -arm), 5: (0.0, arm),
    }
    ways = [(10, [1, 2, 3], dict(tags)), (20, [4, 2, 5], dict(tags))]
    return osm_xml(nodes, ways)


def t_junction_xml(arm: float = 200.0) -> str:
    """East-west street with a stem arriving from the south."""
    tags = {"highway": "residential"}
    nodes = {1: (-arm, 0.0), 2: (0.0, 0.0), 3: (arm, 0.0), 4: (0.0, -arm)}
    ways = [(10, [1, 2, 3], dict(tags)), (20, [4, 2], dict(tags))]
    return osm_xml(nodes, ways)


def straight_way_xml(length: float = 400.0, maxspeed: str | None = None, oneway: bool = False) -> str:
    tags = {"highway": "residential"}
    if maxspeed:
        tags["maxspeed"] = maxspeed
    if oneway:
        tags["oneway"] = "yes"
    nodes = {1: (0.0, 0.0), 2: (length / 2.0, 0.0), 3: (length, 0.0)}
    return osm_xml(nodes, [(10, [1, 2, 3], tags)])


def curve_way_xml(radius: float = 8.0, lead: float = 60.0, tail: float = 40.0,
                  arc_step: float = 1.0) -> str:
    """Oneway road: straight east, 90-degree left arc, straight north.

    The arc has the given centerline radius; with a oneway single-lane
    road the lane centerline coincides with the way.
    """
    nodes: dict[int, tuple[float, float]] = {}
    nid = 1
    refs: list[int] = []

    def add(x: float, y: float) -> None:
        nonlocal nid
        nodes[nid] = (x, y)
        refs.append(nid)
        nid += 1

    add(-lead, 0.0)
    add(-10.0, 0.0)
    n_arc = int(math.ceil(radius * math.pi / 2.0 / arc_step))
    for i in range(n_arc + 1):
        ang = -math.pi / 2.0 + (i / n_arc) * (math.pi / 2.0)
        add(radius * math.cos(ang), radius + radius * math.sin(ang))
    add(radius, radius + 10.0)
    add(radius, radius + tail)
    return osm_xml(nodes, [(10, refs, {"highway": "residential", "oneway": "yes"})])


def grid_xml(n_ew: int = 4, n_ns: int = 4, spacing: float = 200.0) -> str:
    """n_ew x n_ns grid of two-way streets (performance fixture)."""
    nodes: dict[int, tuple[float, float]] = {}
    coord_id: dict[tuple[int, int], int] = {}
    nid = 1
    for iy in range(n_ew):
        for ix in range(n_ns):
            coord_id[(ix, iy)] = nid
            nodes[nid] = (ix * spacing, iy * spacing)
            nid += 1
    ways = []
    wid = 100
    for iy in range(n_ew):
        ways.append((wid, [coord_id[(ix, iy)] for ix in range(n_ns)], {"highway": "residential"}))
        wid += 1
    for ix in range(n_ns):
        ways.append((wid, [coord_id[(ix, iy)] for iy in range(n_ew)], {"highway": "residential"}))
        wid += 1
    return osm_xml(nodes, ways)
