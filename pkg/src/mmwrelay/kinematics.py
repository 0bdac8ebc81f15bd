"""Node and obstacle motion state, radar localization, and frame changes.

Headings use two angles: elevation alpha in [-pi/2, pi/2] measured from the
horizontal plane, and azimuth beta in (-pi, pi] measured from the +y axis
toward +x. A unit heading is (cos a * sin b, cos a * cos b, sin a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

from .geometry import Segment3, Vec3

HALF_PI = math.pi / 2.0


def wrap_azimuth(beta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    r = (beta + math.pi) % (2.0 * math.pi) - math.pi
    if r == -math.pi:
        r = math.pi
    return r


def _check_heading(speed: float, elevation: float, azimuth: float) -> None:
    if not (math.isfinite(speed) and speed >= 0.0):
        raise ValueError(f"speed must be finite and >= 0, got {speed}")
    if not (-HALF_PI <= elevation <= HALF_PI):
        raise ValueError(f"elevation out of [-pi/2, pi/2]: {elevation}")
    if not (-math.pi < azimuth <= math.pi):
        raise ValueError(f"azimuth out of (-pi, pi]: {azimuth}")


@dataclass(frozen=True)
class NodeState:
    id: int
    pos: Vec3
    speed: float
    elevation: float
    azimuth: float

    def __post_init__(self) -> None:
        _check_heading(self.speed, self.elevation, self.azimuth)


class ObstacleKind(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class ObstacleState:
    id: int
    kind: ObstacleKind
    pos: Vec3
    speed: float
    elevation: float
    azimuth: float

    def __post_init__(self) -> None:
        _check_heading(self.speed, self.elevation, self.azimuth)
        if self.kind is ObstacleKind.STATIC and self.speed != 0.0:
            raise ValueError("static obstacles must have zero speed")


@dataclass(frozen=True)
class RadarObservation:
    """Measurement of one obstacle from a roadside radar at height bs_height."""

    range_m: float
    elevation: float
    azimuth: float
    doppler_speed: float
    bs_height: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.range_m) and self.range_m >= 0.0):
            raise ValueError(f"range must be finite and >= 0, got {self.range_m}")


State = Union[NodeState, ObstacleState]


def direction_vector(elevation: float, azimuth: float, vertical_cos: bool = False) -> Vec3:
    """Unit heading for the given angles.

    vertical_cos=True switches the z component from sin to cos of the
    elevation; the resulting vector is then no longer unit length. Kept as a
    compatibility convention, off by default.
    """
    ca = math.cos(elevation)
    z = math.cos(elevation) if vertical_cos else math.sin(elevation)
    return Vec3(ca * math.sin(azimuth), ca * math.cos(azimuth), z)


def velocity_vector(state: State, vertical_cos: bool = False) -> Vec3:
    return direction_vector(state.elevation, state.azimuth, vertical_cos).scaled(state.speed)


def advance(state: State, dt: float, vertical_cos: bool = False) -> State:
    """State after moving for dt at constant speed and heading."""
    if dt < 0.0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    disp = velocity_vector(state, vertical_cos).scaled(dt)
    return replace(state, pos=state.pos + disp)


def motion_segment(state: State, dt: float, vertical_cos: bool = False) -> Segment3:
    """Straight path swept during one interval of length dt."""
    return Segment3(state.pos, advance(state, dt, vertical_cos).pos)


def distance(a: State, b: State) -> float:
    return (a.pos - b.pos).norm()


def localize(obs: RadarObservation) -> Vec3:
    """Cartesian obstacle position from a radar measurement.

    The radar sits at the origin at height bs_height and looks down at the
    target, so depression by alpha lowers z below the mast.
    """
    ca = math.cos(obs.elevation)
    x = obs.range_m * ca * math.sin(obs.azimuth)
    y = obs.range_m * ca * math.cos(obs.azimuth)
    z = obs.bs_height - obs.range_m * math.sin(obs.elevation)
    return Vec3(x, y, z)


def vector_to_angles(v: Vec3) -> tuple[float, float, float]:
    """(speed, elevation, azimuth) for a velocity vector; zero vector -> zeros."""
    speed = v.norm()
    if speed == 0.0:
        return 0.0, 0.0, 0.0
    s = min(1.0, max(-1.0, v.z / speed))
    elevation = math.asin(s)
    azimuth = wrap_azimuth(math.atan2(v.x, v.y))
    return speed, elevation, azimuth


def relativize(reference: State, subject: State, vertical_cos: bool = False) -> State:
    """Subject state expressed in the frame co-moving with the reference.

    Positions and velocities subtract vectorially. An obstacle that is static
    in absolute coordinates generally moves in the new frame, so its kind is
    re-tagged dynamic whenever the relative speed is nonzero.
    """
    rel_pos = subject.pos - reference.pos
    rel_vel = velocity_vector(subject, vertical_cos) - velocity_vector(reference, vertical_cos)
    speed, elevation, azimuth = vector_to_angles(rel_vel)
    changes: dict = dict(pos=rel_pos, speed=speed, elevation=elevation, azimuth=azimuth)
    if isinstance(subject, ObstacleState) and speed > 0.0:
        changes["kind"] = ObstacleKind.DYNAMIC
    return replace(subject, **changes)
