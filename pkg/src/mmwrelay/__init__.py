"""Discrete-time simulator for mmWave device-to-device relay selection under
mobile nodes and moving obstacles."""

from .blockage import (
    BlockageVerdict,
    CommRegion,
    DetectionModel,
    GeometryCase,
    assess,
    case_dispatch,
    ground_truth_block,
)
from .channel import ChannelParams, LinkBudgetResult, max_los_range, pair_budget
from .geometry import Segment3, Triangle3, Vec3
from .kinematics import NodeState, ObstacleKind, ObstacleState, RadarObservation, localize

__version__ = "0.1.0"

__all__ = [
    "BlockageVerdict",
    "ChannelParams",
    "CommRegion",
    "DetectionModel",
    "GeometryCase",
    "LinkBudgetResult",
    "NodeState",
    "ObstacleKind",
    "ObstacleState",
    "RadarObservation",
    "Segment3",
    "Triangle3",
    "Vec3",
    "assess",
    "case_dispatch",
    "ground_truth_block",
    "localize",
    "max_los_range",
    "pair_budget",
]
