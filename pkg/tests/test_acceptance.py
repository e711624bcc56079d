"""Acceptance criteria, one test per criterion.

Each test prints a single PASS line with the measured values once its
assertions hold, so `pytest -s tests/test_acceptance.py` reads as a
checklist. Tolerances are fixed here and nowhere else.
"""

import json
import math
import statistics
import time
from pathlib import Path as FsPath

import numpy as np
import pytest
from click.testing import CliRunner

from risknav import demo
from risknav.cli import main
from risknav.geometry import Polyline, curvature_profile
from risknav.horizon import HorizonConfig, Path, path_tree
from risknav.mapgraph import DynamicObject, NodeKind
from risknav.risk import RiskConfig, Trajectory, encounter
from risknav.sim import load


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory) -> FsPath:
    out = tmp_path_factory.mktemp("accept")
    demo.write_all(out)
    return out


def ok(name: str, detail: str) -> None:
    print(f"\nACCEPT {name}: PASS ({detail})")


class TestAcceptance:
    def test_collision_reproduction(self, demo_dir):
        """Crossing scenario: both vehicles 30 m out at 10 m/s."""
        t_start = time.perf_counter()
        sim = load(demo_dir / "collision.scenario.json")
        result = None
        for _ in range(21):  # tick 20 = t 2.0 s, 30 m before the conflict
            result = sim.step()
        runtime = time.perf_counter() - t_start

        enc = result.assessment.max_encounter
        assert enc is not None
        assert enc.s_e == pytest.approx(3.0, abs=0.1)
        assert enc.d_e <= 0.5
        truth = (1.75, -1.75)  # lane offset crossing of the two streets
        miss = math.hypot(enc.point_ego.x - truth[0], enc.point_ego.y - truth[1])
        assert miss <= 0.5
        assert runtime < 1.0
        ok("collision-reproduction",
           f"s_E={enc.s_e:.2f}s d_E={enc.d_e:.3f}m miss={miss:.3f}m runtime={runtime:.2f}s")

    def test_curve_reproduction(self, demo_dir):
        """8 m arc with a_y = 2 gives one turn at v_tar 4; braking driver
        walks the scale red -> yellow -> green."""
        sim = load(demo_dir / "turn.scenario.json")
        results = sim.run_replay()
        first = results[0].assessment
        assert len(first.turns) == 1
        v_tar = first.turns[0].v_tar
        assert v_tar == pytest.approx(4.0, abs=0.1)
        colors = [r.frame.velocity_scale.color.value for r in results]
        collapsed = [c for i, c in enumerate(colors) if i == 0 or colors[i - 1] != c]
        assert collapsed == ["red", "yellow", "green"]
        ok("curve-reproduction", f"one turn, v_tar={v_tar:.3f} m/s, scale {'->'.join(collapsed)}")

    def test_regulatory_reproduction(self, demo_dir, tmp_path):
        """Crosswalk stop targets at a_c = 0.45 and the warning sequence."""
        # exact stop-speed values via the full pipeline at pinned distances
        checks = {}
        for d_c, expected, tol in ((10.0, 3.0, 0.01), (54.4, 7.0, 0.05)):
            xml, aug_yaml, scenario = demo.crosswalk_scenario(start_x=250.0 - d_c, duration=1.0)
            (tmp_path / "crosswalk.osm").write_text(xml)
            (tmp_path / "crosswalk.aug.yaml").write_text(aug_yaml)
            f = tmp_path / f"cw{d_c}.scenario.json"
            f.write_text(json.dumps(scenario))
            sim = load(f)
            r = sim.step()
            target = next(t for t in r.assessment.regulatory if t.regulator_kind == "crosswalk")
            assert target.d_c == pytest.approx(d_c, abs=0.05)
            assert target.v_tar == pytest.approx(expected, abs=tol)
            checks[d_c] = target.v_tar

        sim = load(demo_dir / "crosswalk.scenario.json")
        results = sim.run_replay()
        colors = [r.frame.velocity_scale.color.value for r in results]
        collapsed = [c for i, c in enumerate(colors) if i == 0 or colors[i - 1] != c]
        assert collapsed == ["green", "yellow", "red"]
        first = next(r for r in results
                     if any(p.cause == "crosswalk" for p in r.frame.popups))
        d_first = next(p.value for p in first.frame.popups if p.cause == "crosswalk")
        assert d_first == pytest.approx(90.0, abs=1.5)  # within one 12 m/s tick
        ok("regulatory-reproduction",
           f"v_tar(10)={checks[10.0]:.3f} v_tar(54.4)={checks[54.4]:.3f} "
           f"scale {'->'.join(collapsed)}, first popup at d_c={d_first:.1f} m")

    def test_path_tree_counts(self, demo_dir):
        """Three hypotheses at an X intersection, two at a T junction."""
        from risknav.service.app import build_graph

        x_graph = build_graph(demo_dir / "crossing.osm", demo_dir / "demo.aug.yaml")
        car = DynamicObject("v", "car", x_graph.node("w10.0.f0.1").geometry.point_at(60.0), 0.0, 10.0)
        tree = path_tree(x_graph, car, HorizonConfig())
        assert len(tree.paths) == 3
        labels = sorted(p.branch_labels[0] for p in tree.paths)
        assert labels == ["left", "right", "straight"]

        t_xml = demo.osm_xml(
            {1: (-200.0, 0.0), 2: (0.0, 0.0), 3: (200.0, 0.0), 4: (0.0, -200.0)},
            [(10, [1, 2, 3], {"highway": "residential"}),
             (20, [4, 2], {"highway": "residential"})],
        )
        t_graph = demo.build_map(t_xml)
        stem = DynamicObject("v", "car", t_graph.node("w20.0.f0.1").geometry.point_at(60.0),
                             math.pi / 2, 10.0)
        t_tree = path_tree(t_graph, stem, HorizonConfig())
        assert len(t_tree.paths) == 2
        assert sorted(p.branch_labels[0] for p in t_tree.paths) == ["left", "right"]
        ok("path-tree-counts", "X: 3 paths straight/left/right, T: 2 paths left/right")

    def test_encounter_oracle(self):
        """Sampled encounter indicators against the closed-form minimizer
        of ||dx0 + dv*s||, 500 randomized straight-line pairs."""
        rng = np.random.default_rng(20240817)
        cfg = RiskConfig(dt_sample=0.005)
        worst_d = worst_s = 0.0
        n = 0
        while n < 500:
            p_e = rng.uniform(-40, 40, 2)
            p_o = rng.uniform(-40, 40, 2)
            h_e, h_o = rng.uniform(0, 2 * math.pi, 2)
            v_e, v_o = rng.uniform(0.0, 9.0, 2)
            dir_e = np.array([math.cos(h_e), math.sin(h_e)])
            dir_o = np.array([math.cos(h_o), math.sin(h_o)])
            dv = v_o * dir_o - v_e * dir_e
            if float(dv @ dv) < 0.25:  # require a meaningful relative motion
                continue
            n += 1

            def path_of(p, d, v):
                length = v * cfg.prediction_horizon + 2.0
                poly = Polyline(np.array([p, p + d * length]))
                return Path(["x"], poly, [], [("x", 0.0, length)])

            ego = Trajectory(path_of(p_e, dir_e, v_e), v_e)
            other = Trajectory(path_of(p_o, dir_o, v_o), v_o)
            r = encounter(ego, other, cfg)
            dx0 = p_o - p_e
            s_star = float(np.clip(-(dx0 @ dv) / (dv @ dv), 0.0, cfg.prediction_horizon))
            d_star = float(np.hypot(*(dx0 + dv * s_star)))
            err_d = abs(r.d_e - d_star)
            err_s = abs(r.s_e - s_star)
            assert err_d <= 0.05, f"pair {n}: d_E off by {err_d}"
            assert err_s <= 0.1, f"pair {n}: s_E off by {err_s}"
            worst_d = max(worst_d, err_d)
            worst_s = max(worst_s, err_s)
        ok("encounter-oracle", f"500/500 pairs, worst |dd_E|={worst_d:.4f} m, worst |ds_E|={worst_s:.4f} s")

    def test_curvature_property(self):
        """Circles at 1 m sampling: curvature within 2% of 1/R."""
        worst = 0.0
        for radius in (2.0, 5.0, 8.0, 20.0, 100.0):
            n = max(8, int(round(2 * math.pi * radius)))
            ang = np.linspace(0.0, 2 * math.pi, n + 1)
            xy = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
            prof = curvature_profile(Polyline(xy[:-1]))
            kappa_max = prof.kappa_abs_max
            rel = abs(kappa_max - 1.0 / radius) * radius
            assert rel <= 0.02, f"R={radius}: kappa_max={kappa_max}, rel err {rel}"
            worst = max(worst, rel)
        ok("curvature-property", f"R in {{2,5,8,20,100}} m, worst relative error {worst:.4%}")

    def test_tick_budget(self, demo_dir):
        """Full pipeline at 10 Hz on a 340-lane-node grid with 5 actors."""
        sim = load(demo_dir / "grid.scenario.json")
        lanes = (len(sim.graph.nodes_of_kind(NodeKind.LANE_SEGMENT))
                 + len(sim.graph.nodes_of_kind(NodeKind.LANE_JUNCTION)))
        assert lanes >= 200
        ticks = sim.replay_ticks()
        assert ticks == 600  # 60 s at 10 Hz
        times = []
        for _ in range(ticks):
            t0 = time.perf_counter()
            sim.step()
            times.append(time.perf_counter() - t0)
        median = statistics.median(times)
        worst = max(times)
        assert median <= 0.010, f"median step {median * 1000:.2f} ms"
        assert worst <= 0.100, f"max step {worst * 1000:.2f} ms"
        ok("tick-budget",
           f"{lanes} lane nodes, 5 actors, 600 ticks: median {median * 1000:.2f} ms, max {worst * 1000:.2f} ms")

    def test_replay_determinism(self, demo_dir, tmp_path):
        """Byte-identical CSV and frame files across CLI runs."""
        runner = CliRunner()
        outputs = []
        for run in ("r1", "r2"):
            d = tmp_path / run
            d.mkdir()
            result = runner.invoke(main, [
                "replay",
                "--scenario", str(demo_dir / "collision.scenario.json"),
                "--out-csv", str(d / "out.csv"),
                "--out-frames", str(d / "frames.ndjson"),
            ])
            assert result.exit_code == 0, result.output
            outputs.append(((d / "out.csv").read_bytes(), (d / "frames.ndjson").read_bytes()))
        assert outputs[0][0] == outputs[1][0]
        assert outputs[0][1] == outputs[1][1]
        ok("replay-determinism",
           f"CSV {len(outputs[0][0])} B and frames {len(outputs[0][1])} B byte-identical")
