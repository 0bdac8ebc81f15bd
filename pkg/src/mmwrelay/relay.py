"""Relay selection policies for one transmission opportunity.

Three policies over the same candidate set: survival-weighted expected
capacity (dobs), strongest current received signal (rss), and most forward
progress toward the destination (cbf). All selections are deterministic:
highest score, then shortest predicted link distance, then lowest node id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .blockage import BlockageVerdict, DetectionModel, assess
from .channel import (
    ChannelParams,
    pair_budget,
    path_loss_component,
    pl_threshold_test,
)
from .geometry import Segment3, point_on_segment
from .kinematics import NodeState, ObstacleState, distance, velocity_vector

POLICIES = ("dobs", "rss", "cbf")


class NotAdjacentError(ValueError):
    """Assessment requested for a pair that has no current edge."""


@dataclass(frozen=True)
class LinkAssessment:
    """Per-candidate scoring record; fields compose multiplicatively."""

    i_id: int
    j_id: int
    pl_ok: int
    p_no_block: float
    survival_prob: float
    current_capacity_bps: float
    expected_capacity_bps: float
    predicted_dist_m: float


def compose_assessment(
    i_id: int,
    j_id: int,
    pl_ok: int,
    p_no_block: float,
    current_capacity_bps: float,
    predicted_dist_m: float,
) -> LinkAssessment:
    """Build the record with the exact products used for scoring."""
    survival = float(pl_ok) * p_no_block
    expected = survival * current_capacity_bps
    return LinkAssessment(
        i_id=i_id,
        j_id=j_id,
        pl_ok=pl_ok,
        p_no_block=p_no_block,
        survival_prob=survival,
        current_capacity_bps=current_capacity_bps,
        expected_capacity_bps=expected,
        predicted_dist_m=predicted_dist_m,
    )


@dataclass(frozen=True)
class PolicyChoice:
    chosen_id: Optional[int]
    score: float
    policy: str
    candidates_evaluated: int


@dataclass
class SelectionContext:
    """Shared inputs for one selection: obstacle snapshot, channel state,
    per-candidate shadowing draws (keyed by candidate id), and options."""

    obstacles: Sequence[ObstacleState]
    dt: float
    channel: ChannelParams
    detection: DetectionModel
    shadows: Mapping[int, float] = field(default_factory=dict)
    destination: Optional[NodeState] = None
    rule: str = "literal"
    vertical_cos: bool = False
    check_adjacency: bool = True

    def shadow_for(self, j_id: int) -> float:
        return float(self.shadows.get(j_id, 0.0))


def is_adjacent(
    i: NodeState,
    j: NodeState,
    obstacles: Sequence[ObstacleState],
    channel: ChannelParams,
    shadow_db: float = 0.0,
) -> bool:
    """Current-step edge test: distance budget meets the threshold and no
    obstacle point sits on the link right now."""
    d = distance(i, j)
    if d <= 0.0:
        return False
    if path_loss_component(d, shadow_db, channel) < channel.gamma_mw():
        return False
    seg = Segment3(i.pos, j.pos)
    for o in obstacles:
        if point_on_segment(o.pos, seg):
            return False
    return True


def predicted_distance(i: NodeState, j: NodeState, dt: float, vertical_cos: bool = False) -> float:
    """Straight-line end-of-interval separation."""
    pi = i.pos + velocity_vector(i, vertical_cos).scaled(dt)
    pj = j.pos + velocity_vector(j, vertical_cos).scaled(dt)
    return (pj - pi).norm()


def assess_link(
    i: NodeState,
    j: NodeState,
    obstacles: Sequence[ObstacleState],
    dt: float,
    channel: ChannelParams,
    detection: DetectionModel,
    shadow_db: float = 0.0,
    rule: str = "literal",
    vertical_cos: bool = False,
    check_adjacency: bool = True,
) -> LinkAssessment:
    """Score one candidate link: current capacity weighted by the chance the
    link is still usable at the end of the interval.

    The capacity term uses the measured (shadowed) signal at time t, but the
    range look-ahead tests the mean path-loss budget at the predicted
    separation: future shadowing is unknown, so a link admitted only by a
    lucky fade offset is predicted to fail.
    """
    if check_adjacency and not is_adjacent(i, j, obstacles, channel, shadow_db):
        raise NotAdjacentError(f"no edge between {i.id} and {j.id}")
    d_now = distance(i, j)
    budget = pair_budget(d_now, shadow_db, blocked=False, params=channel)
    d_pred = predicted_distance(i, j, dt, vertical_cos)
    pl_ok = pl_threshold_test(
        path_loss_component(d_pred, 0.0, channel), channel.gamma_mw()
    )
    verdict: BlockageVerdict = assess(i, j, obstacles, dt, detection, rule, vertical_cos)
    return compose_assessment(
        i.id, j.id, pl_ok, verdict.p_no_block, budget.capacity_bps, d_pred
    )


def pick_best(
    policy: str, scored: Sequence[tuple[int, float, float]]
) -> PolicyChoice:
    """Deterministic argmax over (candidate_id, score, tie_distance) records:
    max score, then min tie distance, then min id."""
    best_id: Optional[int] = None
    best_score = -math.inf
    best_tie = math.inf
    for cid, score, tie in scored:
        if (
            score > best_score
            or (score == best_score and tie < best_tie)
            or (score == best_score and tie == best_tie and (best_id is None or cid < best_id))
        ):
            best_id = cid
            best_score = score
            best_tie = tie
    if best_id is None:
        return PolicyChoice(None, 0.0, policy, len(scored))
    return PolicyChoice(best_id, best_score, policy, len(scored))


def select_dobs(
    i: NodeState, candidates: Sequence[NodeState], ctx: SelectionContext
) -> PolicyChoice:
    """Survival-weighted expected capacity; returns None only when the
    candidate list is empty (an all-zero field still picks by tie rules)."""
    scored = []
    for j in candidates:
        a = assess_link(
            i,
            j,
            ctx.obstacles,
            ctx.dt,
            ctx.channel,
            ctx.detection,
            shadow_db=ctx.shadow_for(j.id),
            rule=ctx.rule,
            vertical_cos=ctx.vertical_cos,
            check_adjacency=ctx.check_adjacency,
        )
        scored.append((j.id, a.expected_capacity_bps, a.predicted_dist_m))
    return pick_best("dobs", scored)


def select_rss(
    i: NodeState, candidates: Sequence[NodeState], ctx: SelectionContext
) -> PolicyChoice:
    """Strongest current received power; None when nothing is receivable."""
    scored = []
    for j in candidates:
        shadow = ctx.shadow_for(j.id)
        rx = pair_budget(distance(i, j), shadow, blocked=False, params=ctx.channel)
        if rx.rx_power_mw <= 0.0:
            continue
        scored.append(
            (j.id, rx.rx_power_mw, predicted_distance(i, j, ctx.dt, ctx.vertical_cos))
        )
    return pick_best("rss", scored)


def select_cbf(
    i: NodeState,
    candidates: Sequence[NodeState],
    destination: NodeState,
    ctx: SelectionContext,
) -> PolicyChoice:
    """Greatest forward progress: smallest current distance to destination."""
    scored = []
    for j in candidates:
        scored.append(
            (
                j.id,
                -distance(j, destination),
                predicted_distance(i, j, ctx.dt, ctx.vertical_cos),
            )
        )
    return pick_best("cbf", scored)
