"""Link-survival analysis against static and moving point obstacles.

Over one interval the endpoints of a link sweep a planar region (a segment
when the relative motion is along the line of sight, a triangle otherwise).
Working in a frame co-moving with one endpoint, anchored at its time-t
position, per-instant distances equal their absolute counterparts, so an
obstacle whose relative path stays clear of the swept region can never cut
the link during the interval. The region test is one-sided: it can flag
paths that cross the region without ever meeting the link at the same
instant, which makes the resulting survival product a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .geometry import (
    EPS_REL,
    Segment3,
    Triangle3,
    Vec3,
    covering_segment,
    eps_for,
    point_in_triangle,
    point_on_segment,
    point_segment_distance,
    segment_interferes_triangle,
    segment_segment_distance,
)
from .kinematics import NodeState, ObstacleKind, ObstacleState, velocity_vector


class NoRadarsError(ValueError):
    """Range-threshold detection requires at least one radar position."""


@dataclass(frozen=True)
class DetectionModel:
    """Per-obstacle detection probability model for moving obstacles.

    Modes: "perfect" (always 1), "constant" (fixed p), "range-threshold"
    (p_in within `radius` of the nearest radar, p_out beyond).
    """

    mode: str = "perfect"
    p: float = 1.0
    radius: float = 0.0
    p_in: float = 1.0
    p_out: float = 0.0
    radar_positions: tuple[Vec3, ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in ("perfect", "constant", "range-threshold"):
            raise ValueError(f"unknown detection mode {self.mode!r}")
        for name, v in (("p", self.p), ("p_in", self.p_in), ("p_out", self.p_out)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.mode == "range-threshold" and self.radius < 0.0:
            raise ValueError("radius must be >= 0")

    @classmethod
    def perfect(cls) -> "DetectionModel":
        return cls(mode="perfect")

    @classmethod
    def constant(cls, p: float) -> "DetectionModel":
        return cls(mode="constant", p=p)

    @classmethod
    def range_threshold(
        cls, radius: float, p_in: float, p_out: float, radars: Sequence[Vec3]
    ) -> "DetectionModel":
        return cls(
            mode="range-threshold",
            radius=radius,
            p_in=p_in,
            p_out=p_out,
            radar_positions=tuple(radars),
        )


def detection_prob(k: ObstacleState, model: DetectionModel) -> float:
    if model.mode == "perfect":
        return 1.0
    if model.mode == "constant":
        return model.p
    if not model.radar_positions:
        raise NoRadarsError("range-threshold detection with no radars")
    d = min((k.pos - r).norm() for r in model.radar_positions)
    return model.p_in if d <= model.radius else model.p_out


class GeometryCase(Enum):
    BOTH_STATIONARY = "both_stationary"
    ONE_MOVING_RADIAL = "one_moving_radial"
    ONE_MOVING_PLANAR = "one_moving_planar"
    BOTH_MOVING_RADIAL = "both_moving_radial"
    BOTH_MOVING_COPLANAR = "both_moving_coplanar"
    BOTH_MOVING_SKEW = "both_moving_skew"


@dataclass(frozen=True)
class CommRegion:
    """Region swept by the link over one interval, in a co-moving frame.

    The frame translates with `frame_velocity` and is anchored so that
    time-t positions coincide with absolute coordinates; only end-of-interval
    points are shifted.
    """

    case: GeometryCase
    shape: Union[Segment3, Triangle3]
    frame_velocity: Vec3


def _coplanar_motion(i: NodeState, j: NodeState, dt: float, vertical_cos: bool) -> bool:
    a0 = i.pos
    a1 = a0 + velocity_vector(i, vertical_cos).scaled(dt)
    b0 = j.pos
    b1 = b0 + velocity_vector(j, vertical_cos).scaled(dt)
    u = a1 - a0
    v = b0 - a0
    w = b1 - a0
    triple = u.dot(v.cross(w))
    scale = u.norm() * v.norm() * w.norm()
    return abs(triple) <= EPS_REL * scale


def case_dispatch(
    i: NodeState, j: NodeState, dt: float, vertical_cos: bool = False
) -> CommRegion:
    """Build the swept region for the link i-j over [t, t+dt]."""
    if dt < 0.0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    vi = velocity_vector(i, vertical_cos)
    vj = velocity_vector(j, vertical_cos)
    anchor = i.pos
    b0 = j.pos
    b1 = b0 + (vj - vi).scaled(dt)
    i_moving = i.speed > 0.0
    j_moving = j.speed > 0.0
    if not i_moving and not j_moving:
        return CommRegion(GeometryCase.BOTH_STATIONARY, Segment3(anchor, b0), vi)
    link = b0 - anchor
    disp = b1 - anchor
    collinear = link.cross(disp).norm() <= EPS_REL * link.norm() * disp.norm()
    one_mover = i_moving != j_moving
    if collinear:
        case = GeometryCase.ONE_MOVING_RADIAL if one_mover else GeometryCase.BOTH_MOVING_RADIAL
        return CommRegion(case, covering_segment((anchor, b0, b1)), vi)
    if one_mover:
        case = GeometryCase.ONE_MOVING_PLANAR
    elif _coplanar_motion(i, j, dt, vertical_cos):
        case = GeometryCase.BOTH_MOVING_COPLANAR
    else:
        case = GeometryCase.BOTH_MOVING_SKEW
    return CommRegion(case, Triangle3(anchor, b0, b1), vi)


def relative_path(
    obs: ObstacleState, region: CommRegion, dt: float, vertical_cos: bool = False
) -> Segment3:
    """Obstacle path over the interval, expressed in the region's frame."""
    v_rel = velocity_vector(obs, vertical_cos) - region.frame_velocity
    return Segment3(obs.pos, obs.pos + v_rel.scaled(dt))


def p_int_static(l: ObstacleState, region: CommRegion) -> int:
    """1 when a fixed point obstacle lies outside the region, else 0.

    Valid as stated only when the region frame is itself static; the anchored
    frame keeps time-t coordinates absolute, so no position shift is needed.
    """
    if isinstance(region.shape, Segment3):
        hit = point_on_segment(l.pos, region.shape)
    else:
        hit = point_in_triangle(l.pos, region.shape)
    return 0 if hit else 1


def p_int_dynamic(
    k: ObstacleState, region: CommRegion, dt: float, vertical_cos: bool = False
) -> int:
    """1 when the obstacle's relative path stays clear of the region, else 0."""
    path = relative_path(k, region, dt, vertical_cos)
    if isinstance(region.shape, Segment3):
        eps = eps_for(path.a, path.b, region.shape.a, region.shape.b)
        hit = segment_segment_distance(path, region.shape) <= eps
    else:
        hit = segment_interferes_triangle(path, region.shape)
    return 0 if hit else 1


@dataclass(frozen=True)
class ObstacleVerdict:
    obstacle_id: int
    p_int: int
    detection_p: float


@dataclass(frozen=True)
class BlockageVerdict:
    p_no_block: float
    per_obstacle: tuple[ObstacleVerdict, ...]
    case_used: GeometryCase


def combine_survival(
    p_ints: Sequence[int],
    det_ps: Sequence[float],
    dynamic: Sequence[bool],
    rule: str = "literal",
) -> float:
    """Fold per-obstacle verdicts into one no-blockage probability.

    literal: undetected moving obstacles zero their factor outright.
    miss-aware: an undetected obstacle only matters if it actually interferes.
    The two coincide under perfect detection. Multiplication follows input
    order so repeated runs compose bit-identically.
    """
    if rule not in ("literal", "miss-aware"):
        raise ValueError(f"unknown combination rule {rule!r}")
    out = 1.0
    for p_int, p_det, dyn in zip(p_ints, det_ps, dynamic):
        if dyn:
            if rule == "literal":
                out *= p_det * p_int
            else:
                out *= 1.0 - p_det * (1.0 - p_int)
        else:
            out *= p_int
    return out


def assess(
    i: NodeState,
    j: NodeState,
    obstacles: Sequence[ObstacleState],
    dt: float,
    model: DetectionModel,
    rule: str = "literal",
    vertical_cos: bool = False,
) -> BlockageVerdict:
    """Survival probability of the link i-j against all obstacles over dt.

    Obstacles that are static in absolute coordinates still trace a path in a
    moving frame, so the path test is applied whenever the frame moves; the
    plain point test is exact (and used) only in a static frame.
    """
    region = case_dispatch(i, j, dt, vertical_cos)
    frame_static = region.frame_velocity.norm_sq() == 0.0
    verdicts = []
    p_ints = []
    det_ps = []
    dyn_flags = []
    for o in obstacles:
        is_dynamic = o.kind is ObstacleKind.DYNAMIC
        if not is_dynamic and frame_static:
            p_int = p_int_static(o, region)
        else:
            p_int = p_int_dynamic(o, region, dt, vertical_cos)
        p_det = detection_prob(o, model) if is_dynamic else 1.0
        verdicts.append(ObstacleVerdict(o.id, p_int, p_det))
        p_ints.append(p_int)
        det_ps.append(p_det)
        dyn_flags.append(is_dynamic)
    p_no_block = combine_survival(p_ints, det_ps, dyn_flags, rule)
    return BlockageVerdict(p_no_block, tuple(verdicts), region.case)


def _sampled_distances(
    i: NodeState,
    j: NodeState,
    obstacles: Sequence[ObstacleState],
    dt: float,
    resolution: int,
    vertical_cos: bool,
) -> np.ndarray:
    """(n_obstacles, resolution) synchronized point-to-link distances."""
    taus = np.linspace(0.0, dt, resolution)
    vi = np.array(velocity_vector(i, vertical_cos).as_tuple())
    vj = np.array(velocity_vector(j, vertical_cos).as_tuple())
    pa = np.array(i.pos.as_tuple())[None, :] + taus[:, None] * vi[None, :]
    pb = np.array(j.pos.as_tuple())[None, :] + taus[:, None] * vj[None, :]
    ab = pb - pa
    denom = np.einsum("ij,ij->i", ab, ab)
    safe = np.where(denom > 0.0, denom, 1.0)
    out = np.empty((len(obstacles), resolution))
    for idx, o in enumerate(obstacles):
        vo = np.array(velocity_vector(o, vertical_cos).as_tuple())
        po = np.array(o.pos.as_tuple())[None, :] + taus[:, None] * vo[None, :]
        ap = po - pa
        t = np.clip(np.einsum("ij,ij->i", ap, ab) / safe, 0.0, 1.0)
        closest = pa + t[:, None] * ab
        out[idx] = np.linalg.norm(po - closest, axis=1)
    return out


def ground_truth_block(
    i: NodeState,
    j: NodeState,
    obstacles: Sequence[ObstacleState],
    dt: float,
    threshold: float = 0.01,
    resolution: int = 10_000,
    vertical_cos: bool = False,
) -> bool:
    """Densely sampled reference: does any obstacle come within `threshold`
    of the instantaneous link at any sampled instant of the interval?"""
    if not obstacles:
        return False
    d = _sampled_distances(i, j, obstacles, dt, resolution, vertical_cos)
    return bool((d <= threshold).any())


def min_link_obstacle_distance(
    i: NodeState,
    j: NodeState,
    obstacle: ObstacleState,
    dt: float,
    coarse: int = 257,
    vertical_cos: bool = False,
) -> float:
    """Minimum synchronized link-obstacle distance over the interval.

    Coarse scan followed by golden-section refinement of every local minimum;
    accurate to machine-level for the smooth piecewise quadratic-root profile
    arising from linear motion.
    """
    d = _sampled_distances(i, j, [obstacle], dt, coarse, vertical_cos)[0]
    taus = np.linspace(0.0, dt, coarse)
    vi = velocity_vector(i, vertical_cos)
    vj = velocity_vector(j, vertical_cos)
    vo = velocity_vector(obstacle, vertical_cos)

    def f(tau: float) -> float:
        seg = Segment3(i.pos + vi.scaled(tau), j.pos + vj.scaled(tau))
        return point_segment_distance(obstacle.pos + vo.scaled(tau), seg)

    best = float(d.min())
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    for idx in range(coarse):
        left = d[idx - 1] if idx > 0 else math.inf
        right = d[idx + 1] if idx < coarse - 1 else math.inf
        if d[idx] <= left and d[idx] <= right:
            lo = taus[max(0, idx - 1)]
            hi = taus[min(coarse - 1, idx + 1)]
            a, b = lo, hi
            c = b - (b - a) * inv_phi
            e = a + (b - a) * inv_phi
            fc, fe = f(c), f(e)
            for _ in range(70):
                if fc < fe:
                    b, e, fe = e, c, fc
                    c = b - (b - a) * inv_phi
                    fc = f(c)
                else:
                    a, c, fc = c, e, fe
                    e = a + (b - a) * inv_phi
                    fe = f(e)
            best = min(best, fc, fe)
    return best
