"""Geodetic conversion and polyline primitives.

All planar math runs on a local tangent plane: an equirectangular
projection around a chosen origin, accurate to well under 1 cm/km at
city scale, and trivially invertible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

# Consecutive polyline vertices closer than this are considered identical.
MIN_SPACING_M = 1e-3


class GeometryError(ValueError):
    """Invalid geometric input (out-of-range coordinate, degenerate shape)."""


@dataclass(frozen=True)
class GeoPoint:
    """WGS84 position in degrees, altitude in meters."""

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise GeometryError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise GeometryError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class LocalPoint:
    """Point on the local tangent plane: x east, y north, z up, meters."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise GeometryError(f"non-finite local point ({self.x}, {self.y}, {self.z})")

    def distance_to(self, other: "LocalPoint") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


def to_local(origin: GeoPoint, p: GeoPoint) -> LocalPoint:
    """Project a geographic point onto the tangent plane at `origin`."""
    x = EARTH_RADIUS_M * math.radians(p.lon - origin.lon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * math.radians(p.lat - origin.lat)
    return LocalPoint(x, y, p.alt - origin.alt)


def to_geo(origin: GeoPoint, p: LocalPoint) -> GeoPoint:
    """Inverse of :func:`to_local` for the same origin."""
    lat = origin.lat + math.degrees(p.y / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(p.x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(lat, lon, p.z + origin.alt)


def geo_to_local_array(origin: GeoPoint, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Vectorized to_local for coordinate arrays; returns (N, 2) xy."""
    coslat = math.cos(math.radians(origin.lat))
    x = EARTH_RADIUS_M * np.radians(np.asarray(lons, dtype=float) - origin.lon) * coslat
    y = EARTH_RADIUS_M * np.radians(np.asarray(lats, dtype=float) - origin.lat)
    return np.column_stack([x, y])


def dedupe_points(xy: np.ndarray, min_spacing: float = MIN_SPACING_M) -> np.ndarray:
    """Drop consecutive points closer than `min_spacing`."""
    xy = np.asarray(xy, dtype=float)
    if len(xy) == 0:
        return xy
    keep = [0]
    for i in range(1, len(xy)):
        if np.hypot(*(xy[i] - xy[keep[-1]])) >= min_spacing:
            keep.append(i)
    return xy[keep]


class Polyline:
    """Ordered vertex chain with cached cumulative arc length.

    Vertices are stored as an (N, 2) float array; N >= 2 and consecutive
    vertices are at least MIN_SPACING_M apart.
    """

    __slots__ = ("xy", "cum_s")

    def __init__(self, xy: np.ndarray | Sequence[LocalPoint] | Sequence[tuple]):
        if len(xy) and isinstance(xy[0], LocalPoint):
            xy = np.array([[p.x, p.y] for p in xy], dtype=float)
        else:
            xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if len(xy) < 2:
            raise GeometryError("polyline needs at least 2 points")
        if not np.all(np.isfinite(xy)):
            raise GeometryError("polyline contains non-finite coordinates")
        seg = np.hypot(*(xy[1:] - xy[:-1]).T)
        if np.any(seg < MIN_SPACING_M):
            raise GeometryError("polyline has consecutive points closer than 1 mm")
        self.xy = xy
        self.cum_s = np.concatenate([[0.0], np.cumsum(seg)])

    @classmethod
    def from_xy(cls, xy: np.ndarray, dedupe: bool = False) -> "Polyline":
        if dedupe:
            xy = dedupe_points(xy)
        return cls(xy)

    @property
    def length(self) -> float:
        return float(self.cum_s[-1])

    @property
    def points(self) -> list[LocalPoint]:
        return [LocalPoint(float(x), float(y)) for x, y in self.xy]

    def __len__(self) -> int:
        return len(self.xy)

    def point_at(self, s: float) -> LocalPoint:
        x, y = self.xy_at(np.array([s]))[0]
        return LocalPoint(float(x), float(y))

    def xy_at(self, s: np.ndarray) -> np.ndarray:
        """Interpolated (len(s), 2) positions at clamped arc lengths."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        x = np.interp(s, self.cum_s, self.xy[:, 0])
        y = np.interp(s, self.cum_s, self.xy[:, 1])
        return np.column_stack([x, y])

    def tangent_at(self, s: float) -> np.ndarray:
        """Unit direction of the segment containing arc length `s`."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum_s, s, side="right")) - 1
        i = min(max(i, 0), len(self.xy) - 2)
        d = self.xy[i + 1] - self.xy[i]
        return d / np.hypot(*d)

    def heading_at(self, s: float) -> float:
        t = self.tangent_at(s)
        return math.atan2(t[1], t[0])

    def slice(self, s0: float, s1: float) -> "Polyline":
        """Sub-polyline between arc lengths s0 < s1, endpoints interpolated."""
        s0 = min(max(s0, 0.0), self.length)
        s1 = min(max(s1, 0.0), self.length)
        if s1 - s0 < MIN_SPACING_M:
            raise GeometryError(f"degenerate slice [{s0}, {s1}]")
        i0 = int(np.searchsorted(self.cum_s, s0, side="right"))
        i1 = int(np.searchsorted(self.cum_s, s1, side="left"))
        mid = self.xy[i0:i1]
        pts = [self.xy_at(np.array([s0]))[0]]
        for p in mid:
            if np.hypot(*(p - pts[-1])) >= MIN_SPACING_M:
                pts.append(p)
        end = self.xy_at(np.array([s1]))[0]
        if np.hypot(*(end - pts[-1])) < MIN_SPACING_M and len(pts) > 1:
            pts[-1] = end
        else:
            pts.append(end)
        return Polyline(np.array(pts))

    def reversed(self) -> "Polyline":
        return Polyline(self.xy[::-1].copy())


@dataclass(frozen=True)
class CurvatureProfile:
    """Signed curvature samples along arc length; left turns positive."""

    s: np.ndarray
    kappa: np.ndarray

    def __len__(self) -> int:
        return len(self.s)

    @property
    def kappa_abs_max(self) -> float:
        return float(np.max(np.abs(self.kappa))) if len(self.kappa) else 0.0


def resample(poly: Polyline, step: float) -> Polyline:
    """Redistribute vertices at equal arc-length spacing.

    The final segment may be shorter than `step`; both endpoints are kept.
    """
    if step <= 0:
        raise GeometryError(f"resample step must be > 0, got {step}")
    L = poly.length
    grid = np.arange(0.0, L, step)
    if L - grid[-1] < MIN_SPACING_M:
        grid = grid[:-1]
    grid = np.append(grid, L)
    return Polyline(poly.xy_at(grid))


def curvature_profile(poly: Polyline) -> CurvatureProfile:
    """Menger curvature (inverse circumradius) per interior vertex.

    Sign follows the cross product of consecutive segment directions:
    positive for left turns. End vertices copy their neighbor's value.
    Intended for polylines resampled at a uniform step.
    """
    xy = poly.xy
    if len(xy) < 3:
        return CurvatureProfile(s=np.empty(0), kappa=np.empty(0))
    p0, p1, p2 = xy[:-2], xy[1:-1], xy[2:]
    v1 = p1 - p0
    v2 = p2 - p1
    v3 = p2 - p0
    a = np.hypot(*v1.T)
    b = np.hypot(*v2.T)
    c = np.hypot(*v3.T)
    cross = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    denom = a * b * c
    kappa = np.where(denom > 0, 2.0 * cross / np.where(denom > 0, denom, 1.0), 0.0)
    # Guard against vertex-noise spikes: circumradius below the local
    # spacing is geometrically meaningless.
    cap = 1.0 / np.maximum(np.minimum(a, b), MIN_SPACING_M)
    kappa = np.clip(kappa, -cap, cap)
    kappa = np.concatenate([[kappa[0]], kappa, [kappa[-1]]])
    return CurvatureProfile(s=poly.cum_s.copy(), kappa=kappa)


@dataclass(frozen=True)
class Crossing:
    point: LocalPoint
    s_a: float
    s_b: float


def _merge_intervals(intervals: list[tuple[float, float]], tol: float = 1e-6) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + tol:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def intersect(poly_a: Polyline, poly_b: Polyline) -> list[Crossing]:
    """All transversal crossings of two polylines, sorted by s_a.

    Collinear overlapping stretches are collapsed to a single crossing at
    the overlap midpoint. Crossings are deduplicated at micrometer scale
    (shared segment endpoints would otherwise report twice).
    """
    a0, a1 = poly_a.xy[:-1], poly_a.xy[1:]
    b0, b1 = poly_b.xy[:-1], poly_b.xy[1:]
    r = a1 - a0  # (n, 2)
    s = b1 - b0  # (m, 2)
    qp = b0[None, :, :] - a0[:, None, :]  # (n, m, 2)
    denom = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
    cross_qp_s = qp[:, :, 0] * s[None, :, 1] - qp[:, :, 1] * s[None, :, 0]
    cross_qp_r = qp[:, :, 0] * r[:, None, 1] - qp[:, :, 1] * r[:, None, 0]

    eps = 1e-12
    transversal = np.abs(denom) > eps
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(transversal, cross_qp_s / np.where(transversal, denom, 1.0), np.nan)
        u = np.where(transversal, cross_qp_r / np.where(transversal, denom, 1.0), np.nan)
    hit = transversal & (t >= -1e-12) & (t <= 1 + 1e-12) & (u >= -1e-12) & (u <= 1 + 1e-12)

    seg_len_a = np.hypot(*r.T)
    seg_len_b = np.hypot(*s.T)
    found: list[tuple[float, float, float, float]] = []
    for i, j in zip(*np.nonzero(hit)):
        ti = float(np.clip(t[i, j], 0.0, 1.0))
        uj = float(np.clip(u[i, j], 0.0, 1.0))
        p = a0[i] + ti * r[i]
        found.append((
            float(poly_a.cum_s[i] + ti * seg_len_a[i]),
            float(poly_b.cum_s[j] + uj * seg_len_b[j]),
            float(p[0]),
            float(p[1]),
        ))

    # Collinear overlaps: parallel segments on the same carrier line.
    overlap_a: list[tuple[float, float]] = []
    parallel = ~transversal
    coll = parallel & (np.abs(cross_qp_r) <= 1e-9 * np.maximum(seg_len_a[:, None], 1.0))
    for i, j in zip(*np.nonzero(coll)):
        rr = float(r[i] @ r[i])
        t0 = float(qp[i, j] @ r[i]) / rr
        t1 = t0 + float(s[j] @ r[i]) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if hi - lo <= 1e-12:
            continue
        overlap_a.append((
            float(poly_a.cum_s[i] + lo * seg_len_a[i]),
            float(poly_a.cum_s[i] + hi * seg_len_a[i]),
        ))

    crossings: list[Crossing] = []
    seen: set[tuple[int, int]] = set()
    for s_a, s_b, x, y in found:
        key = (round(s_a * 1e6), round(s_b * 1e6))
        if key in seen:
            continue
        seen.add(key)
        crossings.append(Crossing(LocalPoint(x, y), s_a, s_b))

    for lo, hi in _merge_intervals(overlap_a):
        s_mid = 0.5 * (lo + hi)
        p = poly_a.point_at(s_mid)
        s_b = project(poly_b, p).s_along
        key = (round(s_mid * 1e6), round(s_b * 1e6))
        if key not in seen:
            seen.add(key)
            crossings.append(Crossing(p, s_mid, s_b))

    crossings.sort(key=lambda c: (c.s_a, c.s_b))
    return crossings


@dataclass(frozen=True)
class Projection:
    foot: LocalPoint
    s_along: float
    lateral: float  # signed, positive left of travel direction
    distance: float


def project(poly: Polyline, p: LocalPoint) -> Projection:
    """Closest point of the polyline to `p`; ties go to the smaller s."""
    pt = np.array([p.x, p.y])
    a = poly.xy[:-1]
    d = poly.xy[1:] - a
    seg_len2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", pt[None, :] - a, d) / seg_len2, 0.0, 1.0)
    feet = a + t[:, None] * d
    dist2 = np.einsum("ij,ij->i", feet - pt[None, :], feet - pt[None, :])
    i = int(np.argmin(dist2))
    foot = feet[i]
    s_along = float(poly.cum_s[i] + t[i] * math.sqrt(seg_len2[i]))
    dist = float(math.sqrt(dist2[i]))
    cross = d[i, 0] * (pt[1] - foot[1]) - d[i, 1] * (pt[0] - foot[0])
    # |lateral| always equals the distance; for clamped feet the side is
    # taken from the cross product sign (positive when degenerate)
    lateral = math.copysign(dist, cross) if dist > 0 else 0.0
    return Projection(LocalPoint(float(foot[0]), float(foot[1])), s_along, lateral, dist)


def concat_polylines(pieces: Iterable[Polyline], max_gap: float = 0.1) -> Polyline:
    """Join polylines end-to-start, dropping duplicate joint vertices.

    Raises if a joint gap exceeds `max_gap` (continuity contract of
    concatenated lane centerlines).
    """
    arrays: list[np.ndarray] = []
    for piece in pieces:
        if not arrays:
            arrays.append(piece.xy)
            continue
        gap = float(np.hypot(*(piece.xy[0] - arrays[-1][-1])))
        if gap > max_gap:
            raise GeometryError(f"gap of {gap:.3f} m between concatenated pieces")
        start = 1 if gap < MIN_SPACING_M else 0
        arrays.append(piece.xy[start:])
    if not arrays:
        raise GeometryError("nothing to concatenate")
    return Polyline(np.concatenate(arrays))


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    theta = math.fmod(theta, 2.0 * math.pi)
    if theta <= -math.pi:
        theta += 2.0 * math.pi
    elif theta > math.pi:
        theta -= 2.0 * math.pi
    return theta


def offset_polyline(xy: np.ndarray, dist: float) -> np.ndarray:
    """Parallel offset of a vertex chain; positive `dist` shifts right of travel.

    Vertex normals are averaged between adjacent segments (miter joints,
    factor capped at 4 to avoid spikes in sharp corners).
    """
    xy = np.asarray(xy, dtype=float)
    seg = xy[1:] - xy[:-1]
    seg = seg / np.hypot(*seg.T)[:, None]
    # right normal of direction (dx, dy) is (dy, -dx)
    normals = np.column_stack([seg[:, 1], -seg[:, 0]])
    vertex_n = np.empty_like(xy)
    vertex_n[0] = normals[0]
    vertex_n[-1] = normals[-1]
    if len(xy) > 2:
        avg = normals[:-1] + normals[1:]
        norm = np.hypot(*avg.T)
        norm = np.where(norm < 1e-9, 1.0, norm)
        avg = avg / norm[:, None]
        # miter scale keeps offset distance constant through the corner
        cos_half = np.clip(np.einsum("ij,ij->i", avg, normals[:-1]), 0.25, 1.0)
        vertex_n[1:-1] = avg / cos_half[:, None]
    return xy + dist * vertex_n


def arc_connector(p0: np.ndarray, t0: np.ndarray, p1: np.ndarray, sample_step: float = 1.0) -> np.ndarray:
    """Circular blend from p0 (tangent t0) to p1, sampled as a vertex chain.

    Uses the unique circle through both points tangent to t0 at p0; falls
    back to a straight chord for near-collinear configurations.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    t0 = np.asarray(t0, dtype=float)
    t0 = t0 / np.hypot(*t0)
    chord = p1 - p0
    chord_len = float(np.hypot(*chord))
    if chord_len < MIN_SPACING_M:
        return np.array([p0, p1])
    side = t0[0] * chord[1] - t0[1] * chord[0]
    if abs(side) < 1e-6 * chord_len or chord_len < 0.5:
        n = max(2, int(math.ceil(chord_len / sample_step)) + 1)
        return np.linspace(p0, p1, n)
    # left normal if turning left, right normal otherwise
    n0 = np.array([-t0[1], t0[0]]) if side > 0 else np.array([t0[1], -t0[0]])
    radius = chord_len * chord_len / (2.0 * abs(chord @ n0))
    center = p0 + radius * n0
    a0 = math.atan2(p0[1] - center[1], p0[0] - center[0])
    a1 = math.atan2(p1[1] - center[1], p1[0] - center[0])
    sweep = wrap_angle(a1 - a0)
    # sweep direction must match the turn side
    if side > 0 and sweep < 0:
        sweep += 2.0 * math.pi
    elif side < 0 and sweep > 0:
        sweep -= 2.0 * math.pi
    arc_len = abs(sweep) * radius
    n = max(2, int(math.ceil(arc_len / sample_step)) + 1)
    angles = a0 + sweep * np.linspace(0.0, 1.0, n)
    pts = center[None, :] + radius * np.column_stack([np.cos(angles), np.sin(angles)])
    pts[0] = p0
    pts[-1] = p1
    return pts
