"""3D contact predicates for segments, triangles, and planes.

All tests use closed-set semantics (touching a boundary counts as contact)
with tolerances scaled to the coordinate magnitudes involved, so the same
predicates behave identically for arenas of a few meters or a few kilometers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

EPS_REL = 1e-9


class NotCoplanarError(ValueError):
    """Raised when a coplanar-only routine receives skew segments."""


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite component in {(self.x, self.y, self.z)}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm_sq(self) -> float:
        return self.dot(self)

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def max_abs(self) -> float:
        return max(abs(self.x), abs(self.y), abs(self.z))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


def eps_for(*points: Vec3) -> float:
    """Absolute length tolerance scaled to the largest coordinate involved."""
    scale = 1.0
    for p in points:
        m = p.max_abs()
        if m > scale:
            scale = m
    return EPS_REL * scale


@dataclass(frozen=True)
class Segment3:
    a: Vec3
    b: Vec3

    def direction(self) -> Vec3:
        return self.b - self.a

    def length(self) -> float:
        return self.direction().norm()

    def point_at(self, t: float) -> Vec3:
        d = self.direction()
        return self.a + d.scaled(t)

    def is_degenerate(self, eps: Optional[float] = None) -> bool:
        if eps is None:
            eps = eps_for(self.a, self.b)
        return self.length() <= eps


@dataclass(frozen=True)
class Triangle3:
    p0: Vec3
    p1: Vec3
    p2: Vec3

    def vertices(self) -> tuple[Vec3, Vec3, Vec3]:
        return (self.p0, self.p1, self.p2)

    def sides(self) -> tuple[Segment3, Segment3, Segment3]:
        return (
            Segment3(self.p0, self.p1),
            Segment3(self.p1, self.p2),
            Segment3(self.p2, self.p0),
        )

    def normal(self) -> Vec3:
        return (self.p1 - self.p0).cross(self.p2 - self.p0)

    def is_degenerate(self, eps_rel: float = EPS_REL) -> bool:
        e1 = self.p1 - self.p0
        e2 = self.p2 - self.p0
        return self.normal().norm() <= eps_rel * e1.norm() * e2.norm()


@dataclass(frozen=True)
class Plane3:
    point: Vec3
    normal: Vec3

    def __post_init__(self) -> None:
        if self.normal.norm_sq() == 0.0:
            raise ValueError("plane normal must be nonzero")


def plane_from_triangle(tri: Triangle3) -> Optional[Plane3]:
    """Plane through the triangle, or None when the vertices are collinear."""
    if tri.is_degenerate():
        return None
    return Plane3(tri.p0, tri.normal())


class SegmentPlaneRelation(Enum):
    PARALLEL_OFF = "parallel_off"
    IN_PLANE = "in_plane"
    CROSSES = "crosses"
    NO_HIT = "no_hit"


@dataclass(frozen=True)
class SegmentPlaneResult:
    relation: SegmentPlaneRelation
    point: Optional[Vec3] = None
    delta: Optional[float] = None


def classify_segment_vs_plane(seg: Segment3, plane: Plane3) -> SegmentPlaneResult:
    """Classify a segment against a plane.

    CROSSES carries the contact point and its parameter delta in [0, 1].
    NO_HIT means the supporting line crosses but outside the segment span;
    callers treat it like PARALLEL_OFF.
    """
    n = plane.normal
    inv = 1.0 / n.norm()
    un = n.scaled(inv)
    tol = eps_for(seg.a, seg.b, plane.point)
    h_a = (seg.a - plane.point).dot(un)
    h_b = (seg.b - plane.point).dot(un)
    if abs(h_a) <= tol and abs(h_b) <= tol:
        return SegmentPlaneResult(SegmentPlaneRelation.IN_PLANE)
    dh = h_a - h_b
    if abs(dh) <= tol:
        return SegmentPlaneResult(SegmentPlaneRelation.PARALLEL_OFF)
    delta = h_a / dh
    slack = tol / abs(dh)
    if -slack <= delta <= 1.0 + slack:
        delta = min(1.0, max(0.0, delta))
        return SegmentPlaneResult(
            SegmentPlaneRelation.CROSSES, point=seg.point_at(delta), delta=delta
        )
    return SegmentPlaneResult(SegmentPlaneRelation.NO_HIT)


def coplanar4(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> bool:
    """True when the four points lie in a common plane (tolerance-scaled)."""
    u = b - a
    v = c - a
    w = d - a
    triple = u.dot(v.cross(w))
    scale = u.norm() * v.norm() * w.norm()
    return abs(triple) <= EPS_REL * scale


def point_on_segment(p: Vec3, seg: Segment3, eps: Optional[float] = None) -> bool:
    if eps is None:
        eps = eps_for(p, seg.a, seg.b)
    return point_segment_distance(p, seg) <= eps


def point_segment_distance(p: Vec3, seg: Segment3) -> float:
    d = seg.direction()
    dd = d.norm_sq()
    if dd == 0.0:
        return (p - seg.a).norm()
    t = (p - seg.a).dot(d) / dd
    t = min(1.0, max(0.0, t))
    return (p - seg.point_at(t)).norm()


def point_in_triangle(p: Vec3, tri: Triangle3) -> bool:
    """Closed containment test; off-plane points are outside.

    Degenerate triangles fall back to containment on their covering segment.
    """
    if tri.is_degenerate():
        return point_on_segment(p, covering_segment(tri.vertices()))
    n = tri.normal()
    nn = n.norm()
    un = n.scaled(1.0 / nn)
    tol = eps_for(p, tri.p0, tri.p1, tri.p2)
    h = (p - tri.p0).dot(un)
    if abs(h) > tol:
        return False
    q = p - un.scaled(h)
    v0 = tri.p1 - tri.p0
    v1 = tri.p2 - tri.p0
    v2 = q - tri.p0
    d00 = v0.dot(v0)
    d01 = v0.dot(v1)
    d11 = v1.dot(v1)
    d20 = v2.dot(v0)
    d21 = v2.dot(v1)
    den = d00 * d11 - d01 * d01
    u = (d11 * d20 - d01 * d21) / den
    v = (d00 * d21 - d01 * d20) / den
    w = 1.0 - u - v
    # metric tolerance mapped to barycentric units via the smallest altitude
    max_edge = max(v0.norm(), v1.norm(), (tri.p2 - tri.p1).norm())
    bary_tol = tol * max_edge / nn
    return u >= -bary_tol and v >= -bary_tol and w >= -bary_tol


def covering_segment(points: Iterable[Vec3]) -> Segment3:
    """Shortest segment containing a set of (nearly) collinear points."""
    pts = list(points)
    best = (pts[0], pts[0])
    best_d = -1.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = (pts[j] - pts[i]).norm()
            if d > best_d:
                best_d = d
                best = (pts[i], pts[j])
    a, b = best
    if best_d <= 0.0:
        return Segment3(a, a)
    return Segment3(a, b)


def segments_intersect_coplanar(
    s1: Segment3, s2: Segment3
) -> Union[None, Vec3, Segment3]:
    """Intersection of two coplanar segments.

    Returns None (disjoint), a Vec3 (single contact point), or a Segment3
    (collinear overlap). Raises NotCoplanarError for skew inputs when
    assertions are enabled.
    """
    if __debug__ and not coplanar4(s1.a, s1.b, s2.a, s2.b):
        raise NotCoplanarError("segments are not coplanar")
    eps = eps_for(s1.a, s1.b, s2.a, s2.b)
    d1 = s1.direction()
    d2 = s2.direction()
    r = s2.a - s1.a
    l1 = d1.norm()
    l2 = d2.norm()
    if l1 <= eps and l2 <= eps:
        return s1.a if (r.norm() <= eps) else None
    if l1 <= eps:
        return s1.a if point_on_segment(s1.a, s2, eps) else None
    if l2 <= eps:
        return s2.a if point_on_segment(s2.a, s1, eps) else None
    n = d1.cross(d2)
    if n.norm() <= EPS_REL * l1 * l2:
        # parallel; collinear only if the offset is along d1
        if d1.cross(r).norm() > eps * l1:
            return None
        inv = 1.0 / d1.norm_sq()
        t0 = (s2.a - s1.a).dot(d1) * inv
        t1 = (s2.b - s1.a).dot(d1) * inv
        lo, hi = (t0, t1) if t0 <= t1 else (t1, t0)
        lo = max(0.0, lo)
        hi = min(1.0, hi)
        slack = eps / l1
        if hi < lo - slack:
            return None
        if hi - lo <= slack:
            mid = min(1.0, max(0.0, 0.5 * (lo + hi)))
            return s1.point_at(mid)
        return Segment3(s1.point_at(lo), s1.point_at(hi))
    inv_nn = 1.0 / n.norm_sq()
    t = r.cross(d2).dot(n) * inv_nn
    u = r.cross(d1).dot(n) * inv_nn
    st = eps / l1
    su = eps / l2
    if -st <= t <= 1.0 + st and -su <= u <= 1.0 + su:
        return s1.point_at(min(1.0, max(0.0, t)))
    return None


def segment_segment_distance(s1: Segment3, s2: Segment3) -> float:
    """Minimum distance between two segments in 3D (closest-point method)."""
    d1 = s1.direction()
    d2 = s2.direction()
    r = s1.a - s2.a
    a = d1.norm_sq()
    e = d2.norm_sq()
    f = d2.dot(r)
    tiny = 1e-30
    if a <= tiny and e <= tiny:
        return r.norm()
    if a <= tiny:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = d1.dot(r)
        if e <= tiny:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = d1.dot(d2)
            denom = a * e - b * b
            s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > tiny else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    return (s1.point_at(s) - s2.point_at(t)).norm()


def segment_interferes_triangle(seg: Segment3, tri: Triangle3) -> bool:
    """True when the segment touches the closed triangle region anywhere.

    Decision tree: classify against the triangle's plane; a crossing is
    checked for containment at the crossing point; an in-plane segment is
    checked against the three sides and then for full containment via its
    endpoints. Collinear triangles degrade to a segment-vs-segment test.
    """
    if tri.is_degenerate():
        cover = covering_segment(tri.vertices())
        eps = eps_for(seg.a, seg.b, *tri.vertices())
        return segment_segment_distance(seg, cover) <= eps
    plane = Plane3(tri.p0, tri.normal())
    res = classify_segment_vs_plane(seg, plane)
    if res.relation in (SegmentPlaneRelation.PARALLEL_OFF, SegmentPlaneRelation.NO_HIT):
        return False
    if res.relation is SegmentPlaneRelation.CROSSES:
        assert res.point is not None
        return point_in_triangle(res.point, tri)
    # in-plane within tolerance; project exactly onto the plane so the
    # coplanar side tests see a true coplanar configuration
    n = tri.normal()
    un = n.scaled(1.0 / n.norm())
    flat = Segment3(
        seg.a - un.scaled((seg.a - tri.p0).dot(un)),
        seg.b - un.scaled((seg.b - tri.p0).dot(un)),
    )
    for side in tri.sides():
        if segments_intersect_coplanar(flat, side) is not None:
            return True
    return point_in_triangle(flat.a, tri) or point_in_triangle(flat.b, tri)
