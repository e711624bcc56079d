import json
import math

import numpy as np
import pytest

from risknav.geometry import LocalPoint, Polyline
from risknav.hmi import (
    ColorClass,
    HmiConfig,
    WorldSnapshot,
    classify_deviation,
    colored_events,
    compose_frame,
    frame_to_dict,
    frame_to_json,
    hazard_route,
    popup_signs,
    velocity_scale,
)
from risknav.horizon import Path, PathTree
from risknav.mapgraph import DynamicObject, LdmGraph, LdmNode, NodeKind
from risknav.risk import (
    EncounterResult,
    RegulatoryTarget,
    RiskAssessment,
    TurnSegment,
)


def make_path(length=50.0, intervals=None) -> Path:
    poly = Polyline(np.array([[0.0, 0.0], [length, 0.0]]))
    return Path(
        node_ids=[i[0] for i in (intervals or [("L", 0.0, length)])],
        polyline=poly,
        branch_labels=[],
        node_intervals=intervals or [("L", 0.0, length)],
    )


def empty_assessment(**overrides) -> RiskAssessment:
    base = dict(
        timestamp=0.0, encounters=[], max_encounter=None, turns=[], regulatory=[],
        ego_v0=10.0, speed_limit=None, governing_v_tar=None, governing_source="none",
    )
    base.update(overrides)
    return RiskAssessment(**base)


def encounter_at(x, y, s_e=3.0, risk=1 / 3, vid="v2") -> EncounterResult:
    return EncounterResult(
        d_e=0.0, s_e=s_e, point_ego=LocalPoint(x, y), point_other=LocalPoint(x, y),
        ego_path_index=0, other_path_index=0, other_vehicle_id=vid, risk=risk,
    )


def junction_graph(junction_len: float):
    lane_a = LdmNode("A", NodeKind.LANE_SEGMENT, Polyline(np.array([[0.0, 0.0], [20.0, 0.0]])))
    j = LdmNode("J", NodeKind.LANE_JUNCTION,
                Polyline(np.array([[20.0, 0.0], [20.0 + junction_len, 0.0]])))
    lane_b = LdmNode("B", NodeKind.LANE_SEGMENT,
                     Polyline(np.array([[20.0 + junction_len, 0.0], [80.0 + junction_len, 0.0]])))
    g = LdmGraph.build([lane_a, j, lane_b],
                       [("A", "successor", "J"), ("J", "successor", "B")])
    total = 80.0 + junction_len
    path = Path(
        node_ids=["A", "J", "B"],
        polyline=Polyline(np.array([[0.0, 0.0], [total, 0.0]])),
        branch_labels=["straight"],
        node_intervals=[("A", 0.0, 20.0), ("J", 20.0, 20.0 + junction_len),
                        ("B", 20.0 + junction_len, total)],
    )
    return g, path


class TestHazardRoute:
    def test_no_junction_no_zones(self):
        g = LdmGraph.build([LdmNode("L", NodeKind.LANE_SEGMENT,
                                    Polyline(np.array([[0.0, 0.0], [60.0, 0.0]])))])
        hr = hazard_route(make_path(), g, 50.0)
        assert hr.zones == []
        assert hr.length == 50.0

    def test_short_junction_green(self):
        g, path = junction_graph(8.0)
        hr = hazard_route(path, g, 50.0)
        assert len(hr.zones) == 1
        z = hr.zones[0]
        assert z.color is ColorClass.GREEN
        assert z.start == pytest.approx(20.0)
        assert z.end == pytest.approx(28.0)

    def test_medium_junction_yellow(self):
        g, path = junction_graph(18.0)
        assert hazard_route(path, g, 50.0).zones[0].color is ColorClass.YELLOW

    def test_long_junction_red(self):
        g, path = junction_graph(30.0)
        assert hazard_route(path, g, 50.0).zones[0].color is ColorClass.RED

    def test_two_zones_sorted(self):
        nodes = [
            LdmNode("A", NodeKind.LANE_SEGMENT, Polyline(np.array([[0.0, 0.0], [10.0, 0.0]]))),
            LdmNode("J1", NodeKind.LANE_JUNCTION, Polyline(np.array([[10.0, 0.0], [40.0, 0.0]]))),
            LdmNode("B", NodeKind.LANE_SEGMENT, Polyline(np.array([[40.0, 0.0], [60.0, 0.0]]))),
            LdmNode("J2", NodeKind.LANE_JUNCTION, Polyline(np.array([[60.0, 0.0], [68.0, 0.0]]))),
            LdmNode("C", NodeKind.LANE_SEGMENT, Polyline(np.array([[68.0, 0.0], [100.0, 0.0]]))),
        ]
        g = LdmGraph.build(nodes)
        path = Path(
            node_ids=["A", "J1", "B", "J2", "C"],
            polyline=Polyline(np.array([[0.0, 0.0], [100.0, 0.0]])),
            branch_labels=[],
            node_intervals=[("A", 0, 10), ("J1", 10, 40), ("B", 40, 60),
                            ("J2", 60, 68), ("C", 68, 100)],
        )
        hr = hazard_route(path, g, 100.0)
        assert len(hr.zones) == 2
        assert hr.zones[0].start < hr.zones[1].start
        assert hr.zones[0].color is ColorClass.RED  # 30 m
        assert hr.zones[1].color is ColorClass.GREEN  # 8 m


class TestVelocityScale:
    def test_matching_target_green(self):
        a = empty_assessment(governing_v_tar=4.0, governing_source="curve")
        vs = velocity_scale(4.0, a)
        assert vs.color is ColorClass.GREEN

    def test_moderate_deviation_yellow(self):
        a = empty_assessment(governing_v_tar=4.0, governing_source="curve")
        assert velocity_scale(6.5, a).color is ColorClass.YELLOW

    def test_large_deviation_red(self):
        a = empty_assessment(governing_v_tar=3.0, governing_source="regulatory")
        vs = velocity_scale(12.0, a)
        assert vs.color is ColorClass.RED
        assert vs.source == "regulatory"

    def test_symmetric_in_sign(self):
        a = empty_assessment(governing_v_tar=10.0, governing_source="curve")
        assert velocity_scale(12.5, a).color is velocity_scale(7.5, a).color

    def test_fallback_to_speed_limit(self):
        a = empty_assessment(speed_limit=13.9)
        vs = velocity_scale(13.0, a)
        assert vs.v_tar == pytest.approx(13.9)
        assert vs.source == "speed_limit"
        assert vs.v_max == pytest.approx(1.2 * 13.9)

    def test_fallback_to_v_max(self):
        vs = velocity_scale(10.0, empty_assessment())
        assert vs.v_tar == vs.v_max == 15.0
        assert vs.source == "none"

    def test_boundary_rounds_before_classify(self):
        a = empty_assessment(governing_v_tar=9.0, governing_source="regulatory")
        # 3.0000000007 deviation must still be yellow
        assert velocity_scale(12.0000000007, a).color is ColorClass.YELLOW


class TestPopups:
    def test_collision_popup_from_max_encounter(self):
        a = empty_assessment(max_encounter=encounter_at(10.0, 0.0, s_e=3.0))
        popups = popup_signs(a, make_path())
        assert popups[0].cause == "collision"
        assert popups[0].value == pytest.approx(3.0)
        assert popups[0].unit == "s"

    def test_crosswalk_popup_distance(self):
        target = RegulatoryTarget("cw", "crosswalk", 90.0, 9.0, True, LocalPoint(90.0, 0.0))
        a = empty_assessment(regulatory=[target])
        popups = popup_signs(a, make_path(120.0))
        assert popups[0].cause == "crosswalk"
        assert popups[0].value == pytest.approx(90.0)
        assert popups[0].unit == "m"

    def test_right_curve_popup(self):
        turn = TurnSegment(40.0, 52.0, 0.125, 46.0, "right", 4.0)
        a = empty_assessment(turns=[turn])
        popups = popup_signs(a, make_path(60.0))
        assert popups[0].cause == "right_curve"
        assert popups[0].value == pytest.approx(40.0)

    def test_one_per_cause_nearest_first(self):
        t1 = RegulatoryTarget("cw1", "crosswalk", 80.0, 8.5, True, LocalPoint(80.0, 0.0))
        t2 = RegulatoryTarget("cw2", "crosswalk", 30.0, 5.2, True, LocalPoint(30.0, 0.0))
        sl = RegulatoryTarget("sl1", "stop_line", 50.0, 6.0, True, LocalPoint(50.0, 0.0))
        a = empty_assessment(regulatory=[t1, t2, sl])
        popups = popup_signs(a, make_path(120.0))
        assert [p.cause for p in popups] == ["crosswalk", "stop_line"]
        assert popups[0].value == pytest.approx(30.0)

    def test_inactive_regulator_no_popup(self):
        target = RegulatoryTarget("tl", "traffic_light", 40.0, 12.6, False, LocalPoint(40.0, 0.0))
        a = empty_assessment(regulatory=[target])
        assert popup_signs(a, make_path()) == []


class TestColoredEvents:
    def test_regulatory_band_to_anchor(self):
        target = RegulatoryTarget("cw", "crosswalk", 35.0, 5.6, True, LocalPoint(35.0, 0.0))
        a = empty_assessment(
            regulatory=[target], governing_v_tar=5.6,
            governing_source="regulatory", governing_regulator=target,
        )
        events = colored_events(a, make_path(), ColorClass.RED)
        assert len(events) == 1
        band = events[0]
        assert band.kind == "lane_band"
        assert band.color is ColorClass.RED
        assert band.geometry.length == pytest.approx(35.0)
        assert band.geometry.points[0] == LocalPoint(0.0, 0.0)

    def test_curve_band_to_kappa_peak(self):
        turn = TurnSegment(20.0, 33.0, 0.125, 26.0, "right", 4.0)
        a = empty_assessment(turns=[turn], governing_v_tar=4.0,
                             governing_source="curve", governing_turn=turn)
        events = colored_events(a, make_path(), ColorClass.YELLOW)
        assert events[0].geometry.length == pytest.approx(26.0)
        assert events[0].color is ColorClass.YELLOW

    def test_encounter_marker_red(self):
        a = empty_assessment(max_encounter=encounter_at(25.0, 0.0))
        events = colored_events(a, make_path(), ColorClass.GREEN)
        assert len(events) == 1
        assert events[0].kind == "encounter_marker"
        assert events[0].color is ColorClass.RED
        assert events[0].geometry == LocalPoint(25.0, 0.0)

    def test_no_risk_no_events(self):
        assert colored_events(empty_assessment(), make_path(), ColorClass.GREEN) == []


def snapshot_with(others=(), trees=None, t=1.5) -> WorldSnapshot:
    ego = DynamicObject("ego", "ego", LocalPoint(0.0, 0.0), 0.0, 10.0)
    return WorldSnapshot(t=t, ego=ego, ego_raw=LocalPoint(0.1, 0.2),
                         others=list(others), trees=trees or {})


class TestComposeFrame:
    def graph(self):
        return LdmGraph.build([LdmNode("L", NodeKind.LANE_SEGMENT,
                                       Polyline(np.array([[0.0, 0.0], [60.0, 0.0]])))])

    def test_empty_scene_frame(self):
        frame = compose_frame(snapshot_with(), empty_assessment(), make_path(),
                              self.graph(), 50.0)
        assert frame.popups == [] and frame.events == []
        d = frame_to_dict(frame)
        assert d["schema_version"] == 1
        assert d["ego"]["v"] == 10.0
        assert d["velocity_scale"]["color"] == "green" or d["velocity_scale"]["source"] == "none"

    def test_critical_vehicle_flagged_with_paths(self):
        other = DynamicObject("v2", "car", LocalPoint(30.0, -20.0), math.pi / 2, 10.0)
        tree = PathTree("v2", "x", 0.0, [make_path(40.0)])
        a = empty_assessment(max_encounter=encounter_at(30.0, 0.0, vid="v2"))
        frame = compose_frame(snapshot_with([other], {"v2": tree}), a, make_path(),
                              self.graph(), 50.0)
        view = frame.others[0]
        assert view.is_critical
        assert view.paths, "critical vehicle must carry its paths"
        assert any(e.kind == "encounter_marker" for e in frame.events)

    def test_slim_strips_values_keeps_symbols(self):
        a = empty_assessment(max_encounter=encounter_at(30.0, 0.0))
        full = compose_frame(snapshot_with(), a, make_path(), self.graph(), 50.0, slim=False)
        slim = compose_frame(snapshot_with(), a, make_path(), self.graph(), 50.0, slim=True)
        assert full.popups[0].value is not None
        assert slim.popups[0].value is None
        assert slim.popups[0].cause == full.popups[0].cause
        d = frame_to_dict(slim)
        assert d["slim"] is True
        assert d["popups"][0]["value"] is None

    def test_frame_deterministic_bytes(self):
        a = empty_assessment(max_encounter=encounter_at(30.0, 0.0))
        f1 = compose_frame(snapshot_with(), a, make_path(), self.graph(), 50.0)
        f2 = compose_frame(snapshot_with(), a, make_path(), self.graph(), 50.0)
        assert frame_to_json(f1) == frame_to_json(f2)

    def test_band_color_matches_scale(self):
        target = RegulatoryTarget("cw", "crosswalk", 35.0, 5.6, True, LocalPoint(35.0, 0.0))
        a = empty_assessment(regulatory=[target], governing_v_tar=5.6,
                             governing_source="regulatory", governing_regulator=target)
        frame = compose_frame(snapshot_with(), a, make_path(), self.graph(), 50.0)
        bands = [e for e in frame.events if e.kind == "lane_band"]
        assert bands[0].color is frame.velocity_scale.color

    def test_json_parses_back(self):
        frame = compose_frame(snapshot_with(), empty_assessment(), make_path(),
                              self.graph(), 50.0)
        data = json.loads(frame_to_json(frame))
        assert data["hazard_route"]["length"] == 50.0
        assert isinstance(data["chunks"], list) and data["chunks"]
