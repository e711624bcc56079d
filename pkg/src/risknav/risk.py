"""Trajectory prediction and the three risk evaluators.

Collision: constant-velocity trajectories per path hypothesis, sampled
pointwise distance d(s), minimum d_E at encounter time s_E, scalar risk
1/s_E gated by a closeness threshold. Curve: thresholded curvature runs
with a lateral-acceleration speed bound. Regulatory: braking-distance
speed bound toward stop lines, crosswalks and traffic lights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import CurvatureProfile, LocalPoint, curvature_profile, resample
from .horizon import Path, PathTree
from .mapgraph import LdmGraph, NodeKind

from .geometry import project as _project


@dataclass
class RiskConfig:
    d_min: float = 4.0  # encounter distance below which collision risk counts
    kappa_th: float = 0.05  # turn detection threshold, 1/m
    a_y: float = 2.0  # lateral acceleration budget in curves, m/s^2
    a_c: float = 2.0  # comfortable stopping deceleration, m/s^2
    t_r: float = 1.0  # reaction time added for distant stops, s
    t_r_distance_gate: float = 50.0  # apply t_r only beyond this distance, m
    prediction_horizon: float = 10.0  # s
    dt_sample: float = 0.1  # s

    def __post_init__(self) -> None:
        for name in ("d_min", "kappa_th", "a_y", "a_c", "prediction_horizon", "dt_sample"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.t_r < 0 or self.t_r_distance_gate < 0:
            raise ValueError("t_r and t_r_distance_gate must be >= 0")

    def sample_times(self) -> np.ndarray:
        n = int(round(self.prediction_horizon / self.dt_sample))
        return np.linspace(0.0, n * self.dt_sample, n + 1)


class Trajectory:
    """A path hypothesis driven at constant speed from its start.

    position(s) is the path point at arc length speed*s, holding the
    final point once the path is exhausted (the vehicle is assumed to
    stop at the map edge rather than vanish).
    """

    __slots__ = ("path", "speed", "t0")

    def __init__(self, path: Path, speed: float, t0: float = 0.0):
        if speed < 0:
            raise ValueError(f"speed must be >= 0, got {speed}")
        self.path = path
        self.speed = speed
        self.t0 = t0

    def position(self, s: float) -> LocalPoint:
        return self.path.polyline.point_at(self.speed * s)

    def positions(self, times: np.ndarray) -> np.ndarray:
        return self.path.polyline.xy_at(self.speed * np.asarray(times, dtype=float))


def predict(path: Path, speed: float) -> Trajectory:
    return Trajectory(path, speed)


@dataclass
class EncounterResult:
    d_e: float
    s_e: float
    point_ego: LocalPoint
    point_other: LocalPoint
    ego_path_index: int
    other_path_index: int
    other_vehicle_id: str
    risk: float


def encounter(
    ego: Trajectory,
    other: Trajectory,
    cfg: RiskConfig,
    ego_path_index: int = 0,
    other_path_index: int = 0,
    other_vehicle_id: str = "",
) -> EncounterResult:
    """Closest-encounter indicators for one trajectory pair.

    d(s) is sampled on the configured time grid; ties on the minimum go
    to the earliest time. Risk is 1/s_e when the encounter comes closer
    than d_min, capped at 1/dt for immediate encounters, else 0.
    """
    times = cfg.sample_times()
    delta = other.positions(times) - ego.positions(times)
    d = np.hypot(delta[:, 0], delta[:, 1])
    # nanometer quantization so constant-distance ties resolve to the
    # earliest sample instead of interpolation noise
    k = int(np.argmin(np.round(d, 9)))
    d_e = float(d[k])
    s_e = float(times[k])
    if d_e < cfg.d_min:
        risk = 1.0 / cfg.dt_sample if s_e < cfg.dt_sample else 1.0 / s_e
    else:
        risk = 0.0
    return EncounterResult(
        d_e=d_e,
        s_e=s_e,
        point_ego=ego.position(s_e),
        point_other=other.position(s_e),
        ego_path_index=ego_path_index,
        other_path_index=other_path_index,
        other_vehicle_id=other_vehicle_id,
        risk=risk,
    )


def collision_risk(
    ego_paths: Sequence[Path],
    ego_speed: float,
    others: Sequence[tuple[PathTree, float]],
    cfg: RiskConfig,
) -> tuple[list[EncounterResult], Optional[EncounterResult]]:
    """Encounters over all ego-path x other-path combinations.

    Returns every pair result plus the highest-risk one (ties broken by
    vehicle id, then path indices, for deterministic output).
    """
    results: list[EncounterResult] = []
    ego_trajs = [Trajectory(p, ego_speed) for p in ego_paths]
    for tree, speed in others:
        for j, other_path in enumerate(tree.paths):
            other_traj = Trajectory(other_path, speed)
            for i, ego_traj in enumerate(ego_trajs):
                results.append(encounter(
                    ego_traj, other_traj, cfg,
                    ego_path_index=i, other_path_index=j,
                    other_vehicle_id=tree.vehicle_id,
                ))
    risky = [r for r in results if r.risk > 0.0]
    if not risky:
        return results, None
    best = min(risky, key=lambda r: (-r.risk, r.other_vehicle_id, r.other_path_index, r.ego_path_index))
    return results, best


@dataclass
class TurnSegment:
    s_start: float  # distance to the turn entry along the path
    s_end: float
    kappa_max: float
    s_kappa_max: float  # location of the curvature peak
    direction: str  # 'left' or 'right'
    v_tar: float


def detect_turns(profile: CurvatureProfile, cfg: RiskConfig) -> list[TurnSegment]:
    """Maximal runs of |kappa| >= threshold, each with its speed bound.

    Runs shorter than two samples are noise and dropped. The direction
    comes from the curvature sign at the peak; v_tar = sqrt(a_y/kappa_max).
    """
    if len(profile) == 0:
        return []
    above = np.abs(profile.kappa) >= cfg.kappa_th
    segments: list[TurnSegment] = []
    i = 0
    n = len(above)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        if j - i + 1 >= 2:
            window = np.abs(profile.kappa[i:j + 1])
            k_rel = int(np.argmax(window))
            kappa_max = float(window[k_rel])
            signed = float(profile.kappa[i + k_rel])
            segments.append(TurnSegment(
                s_start=float(profile.s[i]),
                s_end=float(profile.s[j]),
                kappa_max=kappa_max,
                s_kappa_max=float(profile.s[i + k_rel]),
                direction="left" if signed > 0 else "right",
                v_tar=math.sqrt(cfg.a_y / kappa_max),
            ))
        i = j + 1
    return segments


_REGULATOR_NAME = {
    NodeKind.STOP_LINE: "stop_line",
    NodeKind.CROSSWALK: "crosswalk",
    NodeKind.TRAFFIC_LIGHT: "traffic_light",
}


@dataclass
class RegulatoryTarget:
    regulator_id: str
    regulator_kind: str  # stop_line | crosswalk | traffic_light
    d_c: float
    v_tar: float
    active: bool
    anchor: LocalPoint


def stop_target_speed(d_c: float, cfg: RiskConfig) -> float:
    """Speed from which a constant-deceleration stop over d_c succeeds.

    Beyond the distance gate a reaction-time allowance is subtracted.
    """
    v = math.sqrt(2.0 * cfg.a_c * max(d_c, 0.0))
    if d_c > cfg.t_r_distance_gate:
        v = max(0.0, v - cfg.a_c * cfg.t_r)
    return v


def _regulator_active(graph: LdmGraph, node) -> bool:
    if node.kind is NodeKind.TRAFFIC_LIGHT:
        for state in graph.states_of(node.id):
            color = graph.get_transient(state.id, "color", state.attributes.get("color"))
            if color == "green":
                return False
        return True
    if node.kind is NodeKind.CROSSWALK:
        occupied = graph.get_transient(node.id, "occupied", node.attributes.get("occupied"))
        if occupied is None:
            # no occupancy knowledge: conservative mandatory stop
            return True
        return bool(occupied)
    return True


def regulatory_targets(
    graph: LdmGraph, ego_path: Path, ego_s: float, cfg: RiskConfig
) -> list[RegulatoryTarget]:
    """Stop targets for every regulator ahead on the ego path.

    The stop anchor is the regulator's foot on its lane centerline,
    translated into path arc length; regulators whose anchor lies behind
    the ego or beyond the path horizon are excluded.
    """
    targets: dict[str, RegulatoryTarget] = {}
    for node_id, lo, hi in ego_path.node_intervals:
        node = graph.node(node_id)
        if node.kind not in (NodeKind.LANE_SEGMENT, NodeKind.LANE_JUNCTION):
            continue
        for reg in graph.regulators(node_id):
            lane_proj = _project(node.geometry, reg.anchor())
            path_s = ego_path.path_s_of(node_id, lane_proj.s_along)
            if path_s is None:
                continue
            d_c = path_s - ego_s
            if d_c < -1e-9:
                continue
            d_c = max(d_c, 0.0)
            existing = targets.get(reg.id)
            if existing is not None and existing.d_c <= d_c:
                continue
            targets[reg.id] = RegulatoryTarget(
                regulator_id=reg.id,
                regulator_kind=_REGULATOR_NAME[reg.kind],
                d_c=d_c,
                v_tar=stop_target_speed(d_c, cfg),
                active=_regulator_active(graph, reg),
                anchor=lane_proj.foot,
            )
    return sorted(targets.values(), key=lambda t: (t.d_c, t.regulator_id))


@dataclass
class RiskAssessment:
    timestamp: float
    encounters: list[EncounterResult]
    max_encounter: Optional[EncounterResult]
    turns: list[TurnSegment]
    regulatory: list[RegulatoryTarget]
    ego_v0: float
    speed_limit: Optional[float]
    governing_v_tar: Optional[float]
    governing_source: str  # curve | regulatory | speed_limit | none
    governing_turn: Optional[TurnSegment] = None
    governing_regulator: Optional[RegulatoryTarget] = None


# lower rank wins governing ties
_SOURCE_RANK = {"regulatory": 0, "curve": 1, "speed_limit": 2}


def assess(
    graph: LdmGraph,
    ego,
    ego_path: Path,
    others: Sequence[PathTree],
    speeds,
    cfg: RiskConfig,
    timestamp: float = 0.0,
) -> RiskAssessment:
    """One combined evaluation of all three risk types for a tick."""
    pairs = []
    for tree in others:
        if tree.vehicle_id == ego.id:
            continue
        pairs.append((tree, float(speeds.get(tree.vehicle_id, 0.0))))
    encounters, max_enc = collision_risk([ego_path], ego.speed, pairs, cfg)

    if ego_path.length >= 3.0:
        profile = curvature_profile(resample(ego_path.polyline, 1.0))
    else:
        profile = CurvatureProfile(s=np.empty(0), kappa=np.empty(0))
    turns = detect_turns(profile, cfg)
    regulatory = regulatory_targets(graph, ego_path, 0.0, cfg)

    root = graph.node(ego_path.node_ids[0]) if ego_path.node_ids else None
    speed_limit = root.attributes.get("speed_limit") if root is not None else None

    candidates: list[tuple[float, int, str, object]] = []
    for turn in turns:
        candidates.append((turn.v_tar, _SOURCE_RANK["curve"], "curve", turn))
    for target in regulatory:
        if target.active:
            candidates.append((target.v_tar, _SOURCE_RANK["regulatory"], "regulatory", target))
    if speed_limit is not None:
        candidates.append((float(speed_limit), _SOURCE_RANK["speed_limit"], "speed_limit", None))

    governing_v = None
    governing_source = "none"
    governing_turn = None
    governing_reg = None
    if candidates:
        v, _, source, ref = min(candidates, key=lambda c: (c[0], c[1]))
        governing_v = v
        governing_source = source
        if source == "curve":
            governing_turn = ref
        elif source == "regulatory":
            governing_reg = ref

    return RiskAssessment(
        timestamp=timestamp,
        encounters=encounters,
        max_encounter=max_enc,
        turns=turns,
        regulatory=regulatory,
        ego_v0=ego.speed,
        speed_limit=float(speed_limit) if speed_limit is not None else None,
        governing_v_tar=governing_v,
        governing_source=governing_source,
        governing_turn=governing_turn,
        governing_regulator=governing_reg,
    )
