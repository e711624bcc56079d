import math

import numpy as np
import pytest

from risknav.geometry import LocalPoint, Polyline
from risknav.horizon import (
    ConflictZone,
    HorizonConfig,
    Path,
    PathTree,
    RouteError,
    conflict_zones,
    ego_route_path,
    path_tree,
)
from risknav.mapgraph import DynamicObject, LdmGraph, LdmNode, NodeKind
from risknav.osm import AugmentationConfig, build_static_map, parse_osm

from osm_fixtures import aug, grid_xml, t_junction_xml, x_cross_xml


def lane(nid: str, pts) -> LdmNode:
    return LdmNode(nid, NodeKind.LANE_SEGMENT, Polyline(np.asarray(pts, dtype=float)))


def vehicle(x: float, y: float, heading: float, speed: float = 10.0, vid: str = "v1") -> DynamicObject:
    return DynamicObject(vid, "car", LocalPoint(x, y), heading, speed)


@pytest.fixture(scope="module")
def x_graph() -> LdmGraph:
    return build_static_map(parse_osm(x_cross_xml()), aug())


@pytest.fixture(scope="module")
def t_graph() -> LdmGraph:
    return build_static_map(parse_osm(t_junction_xml()), aug())


class TestPathTree:
    def test_single_path_without_junction(self):
        g = LdmGraph.build([lane("A", [[0.0, 0.0], [200.0, 0.0]])])
        tree = path_tree(g, vehicle(20.0, 0.0, 0.0), HorizonConfig())
        assert len(tree.paths) == 1
        p = tree.paths[0]
        assert p.branch_labels == []
        assert p.length == pytest.approx(180.0)
        assert p.polyline.points[0].x == pytest.approx(20.0)

    def test_x_intersection_three_paths(self, x_graph):
        # eastbound on the west arm, 30 m before the junction area
        tree = path_tree(x_graph, vehicle(-34.75, -1.75, 0.0), HorizonConfig())
        assert len(tree.paths) == 3
        labels = sorted(p.branch_labels[0] for p in tree.paths)
        assert labels == ["left", "right", "straight"]
        for p in tree.paths:
            assert len(p.branch_labels) == 1
            assert p.length >= 50.0

    def test_t_junction_two_paths_from_stem(self, t_graph):
        # northbound on the stem
        tree = path_tree(t_graph, vehicle(1.75, -30.0, math.pi / 2.0), HorizonConfig())
        assert len(tree.paths) == 2
        labels = sorted(p.branch_labels[0] for p in tree.paths)
        assert labels == ["left", "right"]

    def test_dense_grid_pruned_to_max_paths(self):
        g = build_static_map(parse_osm(grid_xml(5, 5, spacing=30.0)), aug())
        # eastbound between interior intersections, 5 m before the branch point
        start = g.node("w102.1.f0.0").geometry
        pos = start.point_at(start.length - 5.0)
        tree = path_tree(g, vehicle(pos.x, pos.y, 0.0), HorizonConfig())
        assert len(tree.paths) == 8
        # the dropped branch is the lowest-priority left-left one
        label_seqs = {tuple(p.branch_labels) for p in tree.paths}
        assert ("left", "left") not in label_seqs
        assert ("straight", "straight") in label_seqs

    def test_unmatched_vehicle_yields_empty_tree(self, x_graph):
        tree = path_tree(x_graph, vehicle(500.0, 500.0, 0.0), HorizonConfig())
        assert tree.paths == [] and tree.root_lane is None

    def test_paths_continuous(self, x_graph):
        tree = path_tree(x_graph, vehicle(-34.75, -1.75, 0.0), HorizonConfig())
        for p in tree.paths:
            gaps = np.hypot(*np.diff(p.polyline.xy, axis=0).T)
            assert np.all(gaps < 100.0)  # single polyline; continuity enforced at build
            assert np.all(gaps >= 1e-3)

    def test_deterministic_labels(self, x_graph):
        cfg = HorizonConfig()
        t1 = path_tree(x_graph, vehicle(-34.75, -1.75, 0.0), cfg)
        t2 = path_tree(x_graph, vehicle(-34.75, -1.75, 0.0), cfg)
        assert [p.branch_labels for p in t1.paths] == [p.branch_labels for p in t2.paths]
        assert [p.node_ids for p in t1.paths] == [p.node_ids for p in t2.paths]

    def test_one_straight_label_per_junction(self, x_graph):
        tree = path_tree(x_graph, vehicle(-34.75, -1.75, 0.0), HorizonConfig())
        straight = [p for p in tree.paths if p.branch_labels == ["straight"]]
        assert len(straight) == 1


class TestEgoRoutePath:
    def test_route_prefix_clipped_to_horizon(self):
        g = LdmGraph.build(
            [lane("A", [[0.0, 0.0], [40.0, 0.0]]), lane("B", [[40.0, 0.0], [120.0, 0.0]])],
            [("A", "successor", "B")],
        )
        p = ego_route_path(g, vehicle(0.0, 0.0, 0.0), ["A", "B"], HorizonConfig())
        assert p.length == pytest.approx(50.0)
        assert p.node_ids == ["A", "B"]
        assert p.node_intervals[-1][2] == pytest.approx(50.0)

    def test_off_route_lane_raises(self):
        g = LdmGraph.build(
            [lane("A", [[0.0, 0.0], [40.0, 0.0]]), lane("C", [[0.0, 10.0], [40.0, 10.0]])]
        )
        with pytest.raises(RouteError, match="not on the navigation route"):
            ego_route_path(g, vehicle(0.0, 10.0, 0.0), ["A"], HorizonConfig())

    def test_truncated_by_map_end(self):
        g = LdmGraph.build([lane("A", [[0.0, 0.0], [40.0, 0.0]])])
        p = ego_route_path(g, vehicle(30.0, 0.0, 0.0), ["A"], HorizonConfig())
        assert p.length == pytest.approx(10.0)

    def test_starts_at_projected_position(self):
        g = LdmGraph.build([lane("A", [[0.0, 0.0], [100.0, 0.0]])])
        p = ego_route_path(g, vehicle(25.0, 0.4, 0.0), ["A"], HorizonConfig())
        assert p.polyline.points[0].x == pytest.approx(25.0)
        assert p.polyline.points[0].y == pytest.approx(0.0)

    def test_broken_route_raises(self):
        g = LdmGraph.build(
            [lane("A", [[0.0, 0.0], [40.0, 0.0]]), lane("B", [[60.0, 0.0], [120.0, 0.0]])]
        )
        with pytest.raises(RouteError, match="route break"):
            ego_route_path(g, vehicle(0.0, 0.0, 0.0), ["A", "B"], HorizonConfig())


class TestConflictZones:
    def make_path(self, pts) -> Path:
        poly = Polyline(np.asarray(pts, dtype=float))
        return Path(node_ids=["x"], polyline=poly, branch_labels=[],
                    node_intervals=[("x", 0.0, poly.length)])

    def test_perpendicular_single_zone(self):
        ego = self.make_path([[0.0, 0.0], [40.0, 0.0]])
        other = self.make_path([[20.0, -20.0], [20.0, 20.0]])
        tree = PathTree("v2", "x", 0.0, [other])
        zones = conflict_zones(ego, [tree])
        assert len(zones) == 1
        z = zones[0]
        assert z.s_ego == pytest.approx(20.0)
        assert z.s_other == pytest.approx(20.0)
        assert (z.point.x, z.point.y) == (20.0, 0.0)

    def test_identical_lane_overlap_once(self):
        ego = self.make_path([[0.0, 0.0], [20.0, 0.0], [40.0, 0.0]])
        other = self.make_path([[0.0, 0.0], [20.0, 0.0], [40.0, 0.0]])
        zones = conflict_zones(ego, [PathTree("v2", "x", 0.0, [other])])
        assert len(zones) == 1
        assert zones[0].s_ego == pytest.approx(20.0)

    def test_no_vehicles_empty(self):
        ego = self.make_path([[0.0, 0.0], [40.0, 0.0]])
        assert conflict_zones(ego, []) == []

    def test_sorted_by_s_ego(self):
        ego = self.make_path([[0.0, 0.0], [100.0, 0.0]])
        far = self.make_path([[80.0, -10.0], [80.0, 10.0]])
        near = self.make_path([[30.0, -10.0], [30.0, 10.0]])
        zones = conflict_zones(ego, [PathTree("v2", "x", 0.0, [far, near])])
        assert [z.s_ego for z in zones] == pytest.approx([30.0, 80.0])

    def test_ego_tree_skipped(self):
        ego = self.make_path([[0.0, 0.0], [40.0, 0.0]])
        clone = PathTree("ego", "x", 0.0, [ego])
        assert conflict_zones(ego, [clone], ego_id="ego") == []
