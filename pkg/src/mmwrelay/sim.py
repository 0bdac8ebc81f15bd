"""Discrete-time relay experiment engine.

Generates random worlds (mobile nodes, static/dynamic obstacles, radar
sites), rebuilds the connectivity graph each step, forwards FIFO packet
queues under one or more selection policies over a shared mobility and
channel realization, and aggregates seeded replications into sweep tables.

Reproducibility contract: every random draw comes from per-replication
`SeedSequence((seed, rep))` child streams whose consumption order does not
depend on the policy set, the sweep value, or the worker count. Entity
attribute draws are contiguous per entity, so a population of size K is a
prefix of the population of size K' > K for the same seed.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields, replace
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import _fast
from .blockage import DetectionModel, NoRadarsError, combine_survival
from .channel import ChannelParams, max_los_range, path_loss_dbm
from .geometry import EPS_REL
from .relay import POLICIES, LinkAssessment, PolicyChoice, compose_assessment, pick_best

DROP_CAUSES = ("mobility", "blockage", "no_candidate")
CANDIDATE_FILTERS = ("forward-progress", "all-neighbors")
COMBINATION_RULES = ("literal", "miss-aware")

_SWEEP_ALIASES = {
    "k": "n_dynamic",
    "l": "n_static",
    "v_max": "v_max",
    "dt": "dt",
    "load": "load",
}


class InvalidConfigError(ValueError):
    """Configuration failed validation; message lists every problem."""


@dataclass
class ScenarioConfig:
    """Experiment parameters. Defaults give the standard 200 m x 200 m
    30-node scenario with 10 static and 10 dynamic obstacles."""

    arena_w: float = 200.0
    arena_h: float = 200.0
    n_nodes: int = 30
    n_static: int = 10
    n_dynamic: int = 10
    v_max: float = 10.0
    obstacle_v_max: float = 10.0
    dt: float = 1.0
    steps: int = 20
    offer_steps: Optional[int] = None
    load: int = 1
    packet_bytes: int = 65535
    hops_max: int = 3
    # A packet group held for this many consecutive candidate-less steps is
    # dropped (cause "no_candidate"); None disables expiry.
    hold_limit: Optional[int] = 3
    runs: int = 10000
    seed: int = 0
    radar_density: float = 0.001
    obstacle_density: Optional[float] = None
    min_sd_distance: float = 0.0
    max_sd_distance: float = math.inf
    policy: str = "dobs"
    combination_rule: str = "literal"
    candidate_filter: str = "forward-progress"
    vertical_cos: bool = False
    contact_tol: float = 1e-6
    # Shadowing decorrelation distance: a pair's fade offset decays by
    # exp(-relative displacement / this) per step, refreshed from a fresh
    # draw so the marginal stays N(0, sigma^2). <= 0 means memoryless
    # (full redraw each step); math.inf freezes offsets for the whole run.
    shadow_corr_dist_m: float = 3.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    detection: DetectionModel = field(default_factory=DetectionModel.perfect)

    def resolved_offer_steps(self) -> int:
        """Number of leading steps during which the source enqueues packets.

        The default leaves a drain tail long enough for a maximum-length
        route plus one hold, so late offers are not clipped by the horizon.
        """
        if self.offer_steps is not None:
            return self.offer_steps
        return max(1, self.steps - (self.hops_max + 1))

    def validate(self) -> None:
        p: list[str] = []
        if self.arena_w <= 0.0 or self.arena_h <= 0.0:
            p.append("arena dimensions must be positive")
        if self.n_nodes < 2:
            p.append("need at least 2 nodes (source and destination)")
        if self.n_static < 0 or self.n_dynamic < 0:
            p.append("obstacle counts must be >= 0")
        if self.v_max < 0.0 or self.obstacle_v_max < 0.0:
            p.append("speed limits must be >= 0")
        if self.dt <= 0.0:
            p.append("dt must be positive")
        if self.steps < 1:
            p.append("steps must be >= 1")
        off = self.resolved_offer_steps()
        if not 0 <= off <= self.steps:
            p.append("offer_steps must be in [0, steps]")
        if self.load < 0:
            p.append("load must be >= 0")
        if self.packet_bytes < 1:
            p.append("packet_bytes must be >= 1")
        if self.hops_max < 1:
            p.append("hops_max must be >= 1")
        if self.hold_limit is not None and self.hold_limit < 1:
            p.append("hold_limit must be >= 1 when set")
        if self.runs < 1:
            p.append("runs must be >= 1")
        if self.seed < 0:
            p.append("seed must be >= 0")
        if self.radar_density < 0.0:
            p.append("radar_density must be >= 0")
        if self.obstacle_density is not None and self.obstacle_density < 0.0:
            p.append("obstacle_density must be >= 0")
        if not 0.0 <= self.min_sd_distance <= self.max_sd_distance:
            p.append("need 0 <= min_sd_distance <= max_sd_distance")
        if self.policy not in POLICIES:
            p.append(f"unknown policy {self.policy!r}")
        if self.combination_rule not in COMBINATION_RULES:
            p.append(f"unknown combination_rule {self.combination_rule!r}")
        if self.candidate_filter not in CANDIDATE_FILTERS:
            p.append(f"unknown candidate_filter {self.candidate_filter!r}")
        if self.contact_tol <= 0.0:
            p.append("contact_tol must be positive")
        if p:
            raise InvalidConfigError("; ".join(p))


@dataclass
class World:
    """Mutable per-replication state. Obstacles are stored statics-first so
    per-obstacle orderings are stable everywhere."""

    node_pos: np.ndarray  # (N, 3)
    node_vel: np.ndarray  # (N, 3)
    obs_pos: np.ndarray  # (M, 3)
    obs_vel: np.ndarray  # (M, 3)
    obs_dynamic: np.ndarray  # (M,) bool
    radar_pos: np.ndarray  # (R, 3)
    source: int
    dest: int
    # Shadowing realization governing the current step's topology; redrawn
    # every step (fade offsets decorrelate across the step interval).
    shadow_db: np.ndarray
    rng_channel: np.random.Generator
    t_step: int = 0


@dataclass
class Topology:
    """Connectivity snapshot for one step."""

    dist: np.ndarray  # (N, N) current separations
    shadow_db: np.ndarray  # (N, N) symmetric per-pair shadowing draw
    pl_mw: np.ndarray  # (N, N) received power, linear
    capacity_bps: np.ndarray  # (N, N)
    blocked_now: np.ndarray  # (N, N) bool, obstacle point on the segment
    edge: np.ndarray  # (N, N) bool
    pred_dist: np.ndarray  # (N, N) straight-line end-of-step separations

    def adjacency(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.edge[i])


@dataclass
class Totals:
    """Additive packet accounting for one policy."""

    sent: int = 0
    delivered: int = 0
    dropped_mobility: int = 0
    dropped_blockage: int = 0
    dropped_nocand: int = 0
    delivered_bits: int = 0
    bits_perhop_weighted: float = 0.0
    hops_weighted: int = 0
    delay_perhop_weighted: float = 0.0
    inflight_final: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_mobility + self.dropped_blockage + self.dropped_nocand

    def __add__(self, other: "Totals") -> "Totals":
        return Totals(
            sent=self.sent + other.sent,
            delivered=self.delivered + other.delivered,
            dropped_mobility=self.dropped_mobility + other.dropped_mobility,
            dropped_blockage=self.dropped_blockage + other.dropped_blockage,
            dropped_nocand=self.dropped_nocand + other.dropped_nocand,
            delivered_bits=self.delivered_bits + other.delivered_bits,
            bits_perhop_weighted=self.bits_perhop_weighted + other.bits_perhop_weighted,
            hops_weighted=self.hops_weighted + other.hops_weighted,
            delay_perhop_weighted=self.delay_perhop_weighted + other.delay_perhop_weighted,
            inflight_final=self.inflight_final + other.inflight_final,
        )


@dataclass(slots=True)
class _Group:
    """Run of packets sharing birth step, hop count, and hold count."""

    count: int
    created: int
    hops: int
    holds: int


@dataclass
class PolicyState:
    policy: str
    queues: dict[int, deque] = field(default_factory=dict)
    # holder id -> (relay id, bits already through) for a packet spanning steps
    partial: dict[int, tuple[int, float]] = field(default_factory=dict)
    totals: Totals = field(default_factory=Totals)


class TraceRecorder:
    """Collects per-candidate assessments and choices (single-process use)."""

    def __init__(self) -> None:
        self.assessments: list[tuple[int, str, LinkAssessment]] = []
        self.choices: list[tuple[int, str, int, PolicyChoice]] = []

    def on_assessments(self, t: int, policy: str, records: Iterable[LinkAssessment]) -> None:
        for r in records:
            self.assessments.append((t, policy, r))

    def on_choice(self, t: int, policy: str, holder: int, choice: PolicyChoice) -> None:
        self.choices.append((t, policy, holder, choice))


@dataclass
class RunConsts:
    """Quantities fixed for a whole replication, precomputed once."""

    pl_ref_dbm: float
    pl_slope: float
    d0: float
    sigma: float
    gamma_mw: float
    noise_mw: float
    bandwidth: float
    packet_bits: int
    r_max: float
    offer_steps: int
    gt_coarse: int
    gt_refine_below: float
    gt_iters: int


def build_consts(cfg: ScenarioConfig) -> RunConsts:
    ch = cfg.channel
    # Refinement trigger: coarse-scan miss bound is (relative speed) * half
    # step; anything below a generous multiple of that gets polished.
    rel_speed = 2.0 * cfg.v_max + cfg.obstacle_v_max
    miss = rel_speed * cfg.dt / (2.0 * 64.0)
    return RunConsts(
        pl_ref_dbm=path_loss_dbm(ch.ref_dist_m, 0.0, ch),
        pl_slope=10.0 * ch.ple,
        d0=ch.ref_dist_m,
        sigma=ch.shadow_sigma_db,
        gamma_mw=ch.gamma_mw(),
        noise_mw=10.0 ** (ch.noise_floor_dbm() / 10.0),
        bandwidth=ch.bandwidth_hz,
        packet_bits=cfg.packet_bytes * 8,
        r_max=max_los_range(ch),
        offer_steps=cfg.resolved_offer_steps(),
        gt_coarse=65,
        gt_refine_below=max(2.5, 4.0 * miss),
        gt_iters=60,
    )


# --- world generation ---------------------------------------------------------


def _heading_to_vel(speed: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    out = np.zeros((speed.size, 3))
    out[:, 0] = speed * np.sin(azimuth)
    out[:, 1] = speed * np.cos(azimuth)
    return out


def generate_scenario(cfg: ScenarioConfig, rep: int) -> World:
    """Independent world for replication `rep`: uniform node positions and
    headings, statics-first obstacles, Poisson radar sites, and a designated
    source (node 0) / destination (node 1) pair separated by a distance in
    [min_sd_distance, max_sd_distance]."""
    cfg.validate()
    ss = np.random.SeedSequence((cfg.seed, rep))
    node_ss, static_ss, dyn_ss, radar_ss, chan_ss = ss.spawn(5)
    w, h = cfg.arena_w, cfg.arena_h

    rng_nodes = np.random.default_rng(node_ss)
    u = rng_nodes.random((cfg.n_nodes, 4))
    node_pos = np.zeros((cfg.n_nodes, 3))
    node_pos[:, 0] = u[:, 0] * w
    node_pos[:, 1] = u[:, 1] * h
    node_vel = _heading_to_vel(u[:, 2] * cfg.v_max, u[:, 3] * 2.0 * math.pi - math.pi)

    source, dest = 0, 1
    lo, hi = cfg.min_sd_distance, cfg.max_sd_distance
    for _ in range(100_000):
        d = float(np.linalg.norm(node_pos[dest] - node_pos[source]))
        if lo <= d <= hi:
            break
        uu = rng_nodes.random(2)
        node_pos[dest, 0] = uu[0] * w
        node_pos[dest, 1] = uu[1] * h
    else:
        raise InvalidConfigError(
            f"could not realize a source-destination separation in "
            f"[{lo}, {hi}] m inside a {w} x {h} arena"
        )

    us = np.random.default_rng(static_ss).random((cfg.n_static, 2))
    static_pos = np.zeros((cfg.n_static, 3))
    static_pos[:, 0] = us[:, 0] * w
    static_pos[:, 1] = us[:, 1] * h

    rng_dyn = np.random.default_rng(dyn_ss)
    if cfg.obstacle_density is not None:
        k = int(rng_dyn.poisson(cfg.obstacle_density * w * h))
    else:
        k = cfg.n_dynamic
    ud = rng_dyn.random((k, 4))
    dyn_pos = np.zeros((k, 3))
    dyn_pos[:, 0] = ud[:, 0] * w
    dyn_pos[:, 1] = ud[:, 1] * h
    dyn_vel = _heading_to_vel(
        ud[:, 2] * cfg.obstacle_v_max, ud[:, 3] * 2.0 * math.pi - math.pi
    )

    obs_pos = np.concatenate([static_pos, dyn_pos], axis=0)
    obs_vel = np.concatenate([np.zeros((cfg.n_static, 3)), dyn_vel], axis=0)
    obs_dynamic = np.concatenate(
        [np.zeros(cfg.n_static, bool), np.ones(k, bool)]
    )

    rng_radar = np.random.default_rng(radar_ss)
    n_radar = int(rng_radar.poisson(cfg.radar_density * w * h))
    ur = rng_radar.random((n_radar, 2))
    radar_pos = np.zeros((n_radar, 3))
    radar_pos[:, 0] = ur[:, 0] * w
    radar_pos[:, 1] = ur[:, 1] * h

    rng_channel = np.random.default_rng(chan_ss)
    shadow = _draw_shadow(rng_channel, cfg.n_nodes, cfg.channel.shadow_sigma_db)

    return World(
        node_pos=node_pos,
        node_vel=node_vel,
        obs_pos=obs_pos,
        obs_vel=obs_vel,
        obs_dynamic=obs_dynamic,
        radar_pos=radar_pos,
        source=source,
        dest=dest,
        shadow_db=shadow,
        rng_channel=rng_channel,
    )


# --- per-step topology --------------------------------------------------------


def _pairwise_dist(pos: np.ndarray) -> np.ndarray:
    diff = pos[None, :, :] - pos[:, None, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _draw_shadow(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Symmetric (n, n) fade-offset matrix, zero diagonal."""
    iu = np.triu_indices(n, 1)
    z = rng.standard_normal(iu[0].size)
    shadow = np.zeros((n, n))
    shadow[iu] = z
    shadow = shadow + shadow.T
    shadow *= sigma
    return shadow


def build_topology(world: World, cfg: ScenarioConfig, rc: RunConsts) -> Topology:
    pos = world.node_pos
    n = pos.shape[0]
    dist = _pairwise_dist(pos)
    iu = np.triu_indices(n, 1)
    shadow = world.shadow_db

    safe = np.where(dist > 0.0, dist, 1.0)
    pl_dbm = rc.pl_ref_dbm - rc.pl_slope * np.log10(safe / rc.d0) + shadow
    pl_mw = 10.0 ** (pl_dbm / 10.0)
    np.fill_diagonal(pl_mw, 0.0)

    if world.obs_pos.shape[0] == 0:
        blocked_now = np.zeros((n, n), bool)
    else:
        a = pos[iu[0]]
        b = pos[iu[1]]
        o = world.obs_pos
        ba = b - a
        denom = np.einsum("ij,ij->i", ba, ba)
        denom = np.where(denom > 0.0, denom, 1.0)
        t = ((o[None, :, :] - a[:, None, :]) * ba[:, None, :]).sum(-1) / denom[:, None]
        t = np.clip(t, 0.0, 1.0)
        closest = a[:, None, :] + t[..., None] * ba[:, None, :]
        dvec = o[None, :, :] - closest
        dd = np.sqrt((dvec * dvec).sum(-1))
        scale = np.maximum(
            np.maximum(np.abs(a).max(-1), np.abs(b).max(-1))[:, None],
            np.abs(o).max(-1)[None, :],
        )
        eps = EPS_REL * np.maximum(1.0, scale)
        hit = (dd <= eps).any(-1)
        blocked_now = np.zeros((n, n), bool)
        blocked_now[iu] = hit
        blocked_now |= blocked_now.T

    edge = (pl_mw >= rc.gamma_mw) & ~blocked_now
    capacity = rc.bandwidth * np.log2(1.0 + pl_mw / rc.noise_mw)

    nxt = pos + world.node_vel * cfg.dt
    pred_dist = _pairwise_dist(nxt)

    return Topology(
        dist=dist,
        shadow_db=shadow,
        pl_mw=pl_mw,
        capacity_bps=capacity,
        blocked_now=blocked_now,
        edge=edge,
        pred_dist=pred_dist,
    )


def _reflect(pos: np.ndarray, vel: np.ndarray, w: float, h: float, dt: float):
    """End-of-step positions with specular reflection at arena walls.

    The triangle-wave fold handles any number of bounces in one step; an odd
    bounce count flips the velocity component."""
    nxt = pos + vel * dt
    out_v = vel.copy()
    for axis, width in ((0, w), (1, h)):
        c = nxt[:, axis]
        period = 2.0 * width
        y = np.mod(c, period)
        over = y > width
        nxt[:, axis] = np.where(over, period - y, y)
        out_v[:, axis] = np.where(over, -out_v[:, axis], out_v[:, axis])
    return nxt, out_v


# --- detection and survival ---------------------------------------------------


def _detection_probs(world: World, cfg: ScenarioConfig) -> np.ndarray:
    """Per-obstacle detection probability (statics get 1; only the dynamic
    entries feed the survival combination)."""
    m = world.obs_pos.shape[0]
    model = cfg.detection
    out = np.ones(m)
    if model.mode == "perfect":
        return out
    if model.mode == "constant":
        out[world.obs_dynamic] = model.p
        return out
    radars = (
        np.array([(r.x, r.y, r.z) for r in model.radar_positions])
        if model.radar_positions
        else world.radar_pos
    )
    if radars.shape[0] == 0:
        raise NoRadarsError("range-threshold detection with no radar sites")
    diff = world.obs_pos[:, None, :] - radars[None, :, :]
    dmin = np.sqrt((diff * diff).sum(-1)).min(-1)
    p = np.where(dmin <= model.radius, model.p_in, model.p_out)
    out[world.obs_dynamic] = p[world.obs_dynamic]
    return out


def _dobs_regions(
    h_pos: np.ndarray, h_vel: np.ndarray, c_pos: np.ndarray, c_vel: np.ndarray, dt: float
):
    """Swept communication regions for one holder against C candidates, in
    the holder's co-moving frame: triangle (anchor, b0, b1), degenerating to
    the covering segment when the motion is along the link."""
    c_cnt = c_pos.shape[0]
    b0 = c_pos
    b1 = c_pos + (c_vel - h_vel[None, :]) * dt
    link = b0 - h_pos[None, :]
    disp = b1 - b0
    cr = np.cross(link, disp)
    crn = np.sqrt((cr * cr).sum(-1))
    ln = np.sqrt((link * link).sum(-1))
    dn = np.sqrt((disp * disp).sum(-1))
    collinear = crn <= EPS_REL * ln * dn

    kinds = np.where(collinear, 0, 1).astype(np.uint8)
    shapes = np.empty((c_cnt, 3, 3))
    shapes[:, 0, :] = h_pos[None, :]
    shapes[:, 1, :] = b0
    shapes[:, 2, :] = b1
    if collinear.any():
        idx = np.flatnonzero(collinear)
        anchor = np.broadcast_to(h_pos, (idx.size, 3))
        pts = np.stack([anchor, b0[idx], b1[idx]], axis=1)  # (k, 3, 3)
        # Longest pairwise span covers all three collinear points.
        d01 = np.linalg.norm(pts[:, 0] - pts[:, 1], axis=1)
        d02 = np.linalg.norm(pts[:, 0] - pts[:, 2], axis=1)
        d12 = np.linalg.norm(pts[:, 1] - pts[:, 2], axis=1)
        span = np.stack([d01, d02, d12], axis=1).argmax(1)
        rows = np.arange(idx.size)
        first = np.stack([pts[:, 0], pts[:, 0], pts[:, 1]], axis=0)[span, rows]
        second = np.stack([pts[:, 1], pts[:, 2], pts[:, 2]], axis=0)[span, rows]
        shapes[idx, 0, :] = first
        shapes[idx, 1, :] = second
        shapes[idx, 2, :] = second
    return kinds, shapes


class _StepAux:
    """Per-step quantities shared by every policy."""

    def __init__(self, world: World, cfg: ScenarioConfig, rc: RunConsts, top: Topology):
        self.top = top
        self.dist_dest = top.dist[:, world.dest]
        self.node_next_pos, self.node_next_vel = _reflect(
            world.node_pos, world.node_vel, cfg.arena_w, cfg.arena_h, cfg.dt
        )
        self.obs_next_pos, self.obs_next_vel = _reflect(
            world.obs_pos, world.obs_vel, cfg.arena_w, cfg.arena_h, cfg.dt
        )
        self.actual_next_dist = _pairwise_dist(self.node_next_pos)
        # The realization the world wears at t+1: each pair's fade offset
        # decorrelates with the relative displacement it accumulated this
        # step. In-flight traffic is judged against this realization, and it
        # becomes the next step's topology draw.
        fresh = _draw_shadow(
            world.rng_channel, cfg.n_nodes, cfg.channel.shadow_sigma_db
        )
        if cfg.shadow_corr_dist_m <= 0.0:
            self.next_shadow = fresh
        elif math.isinf(cfg.shadow_corr_dist_m):
            self.next_shadow = world.shadow_db
        else:
            link_now = world.node_pos[None, :, :] - world.node_pos[:, None, :]
            link_next = self.node_next_pos[None, :, :] - self.node_next_pos[:, None, :]
            rel = link_next - link_now
            rel_disp = np.sqrt(np.einsum("ijk,ijk->ij", rel, rel))
            rho = np.exp(-rel_disp / cfg.shadow_corr_dist_m)
            self.next_shadow = rho * world.shadow_db + np.sqrt(1.0 - rho * rho) * fresh
        self.det_ps = _detection_probs(world, cfg)
        self.det_list = [float(x) for x in self.det_ps]
        self.dyn_list = [bool(x) for x in world.obs_dynamic]
        m = world.obs_pos.shape[0]
        self.all_clear_survival = combine_survival(
            [1] * m, self.det_list, self.dyn_list, cfg.combination_rule
        )
        self.gt_cache: dict[tuple[int, int], bool] = {}

    def ground_truth_blocked(
        self, world: World, cfg: ScenarioConfig, rc: RunConsts, i: int, j: int
    ) -> bool:
        """Exact continuous closest-approach over the step, cached per link."""
        key = (i, j) if i < j else (j, i)
        hit = self.gt_cache.get(key)
        if hit is None:
            if world.obs_pos.shape[0] == 0:
                hit = False
            else:
                minima = _fast.interval_min_distances(
                    world.node_pos[key[0]],
                    world.node_vel[key[0]],
                    world.node_pos[key[1]],
                    world.node_vel[key[1]],
                    world.obs_pos,
                    world.obs_vel,
                    cfg.dt,
                    rc.gt_coarse,
                    rc.gt_refine_below,
                    rc.gt_iters,
                )
                hit = bool((minima <= cfg.contact_tol).any())
            self.gt_cache[key] = hit
        return hit


# --- candidate scoring --------------------------------------------------------


def _candidates(
    holder: int, head: _Group, cfg: ScenarioConfig, rc: RunConsts, aux: _StepAux
) -> np.ndarray:
    adj = aux.top.adjacency(holder)
    if adj.size == 0 or cfg.candidate_filter == "all-neighbors":
        return adj
    dd = aux.dist_dest
    keep = dd[adj] < dd[holder]
    # Strict progress alone does not bound delivery length; a relay is kept
    # only when the packet could still finish within its remaining hop budget
    # at nominal LOS reach, which is what makes delivery hop-bounded.
    remaining = cfg.hops_max - head.hops
    keep &= dd[adj] <= (remaining - 1) * rc.r_max
    return adj[keep]


def _score_candidates(
    policy: str,
    holder: int,
    cand: np.ndarray,
    world: World,
    cfg: ScenarioConfig,
    rc: RunConsts,
    aux: _StepAux,
    trace: Optional[TraceRecorder],
) -> PolicyChoice:
    top = aux.top
    ties = top.pred_dist[holder, cand]
    if policy == "rss":
        scored = [
            (int(c), float(s), float(t))
            for c, s, t in zip(cand, top.pl_mw[holder, cand], ties)
            if s > 0.0
        ]
        return pick_best(policy, scored)
    if policy == "cbf":
        scored = [
            (int(c), -float(d), float(t))
            for c, d, t in zip(cand, aux.dist_dest[cand], ties)
        ]
        return pick_best(policy, scored)

    # Survival-weighted expected capacity. The range look-ahead tests the
    # mean path-loss budget at the predicted separation (future fade offsets
    # are unknown, so shadow-admitted reach is not trusted forward).
    pred = top.pred_dist[holder, cand]
    pl_pred_dbm = rc.pl_ref_dbm - rc.pl_slope * np.log10(pred / rc.d0)
    pl_ok = (10.0 ** (pl_pred_dbm / 10.0) >= rc.gamma_mw).astype(np.int64)

    m = world.obs_pos.shape[0]
    if m == 0:
        clear = np.ones((cand.size, 0), np.uint8)
    else:
        kinds, shapes = _dobs_regions(
            world.node_pos[holder],
            world.node_vel[holder],
            world.node_pos[cand],
            world.node_vel[cand],
            cfg.dt,
        )
        path_a = world.obs_pos
        path_b = world.obs_pos + (world.obs_vel - world.node_vel[holder][None, :]) * cfg.dt
        scale = max(
            1.0,
            float(np.abs(shapes).max()) if shapes.size else 1.0,
            float(np.abs(path_a).max()) if path_a.size else 1.0,
            float(np.abs(path_b).max()) if path_b.size else 1.0,
        )
        clear = _fast.region_clear_batch(kinds, shapes, path_a, path_b, EPS_REL * scale)

    scored = []
    records = [] if trace is not None else None
    caps = top.capacity_bps[holder, cand]
    for idx in range(cand.size):
        row = clear[idx]
        if m == 0 or int(row.min()) == 1:
            p_nb = aux.all_clear_survival
        else:
            p_nb = combine_survival(
                [int(x) for x in row], aux.det_list, aux.dyn_list, cfg.combination_rule
            )
        a = compose_assessment(
            holder, int(cand[idx]), int(pl_ok[idx]), p_nb, float(caps[idx]), float(pred[idx])
        )
        if records is not None:
            records.append(a)
        scored.append((a.j_id, a.expected_capacity_bps, a.predicted_dist_m))
    if trace is not None and records:
        trace.on_assessments(world.t_step, policy, records)
    return pick_best(policy, scored)


# --- the step -----------------------------------------------------------------


def _serve(
    ps: PolicyState,
    world: World,
    cfg: ScenarioConfig,
    rc: RunConsts,
    aux: _StepAux,
    trace: Optional[TraceRecorder],
) -> None:
    t = world.t_step
    dest = world.dest
    top = aux.top

    if t < rc.offer_steps and cfg.load > 0:
        ps.queues.setdefault(world.source, deque()).append(_Group(cfg.load, t, 0, 0))
        ps.totals.sent += cfg.load

    staging: list[tuple[int, _Group]] = []

    def hold_all(holder: int) -> None:
        ps.partial.pop(holder, None)
        kept: deque = deque()
        expired = 0
        for g in ps.queues[holder]:
            g.holds += 1
            if cfg.hold_limit is not None and g.holds >= cfg.hold_limit:
                expired += g.count
            else:
                kept.append(g)
        ps.queues[holder] = kept
        ps.totals.dropped_nocand += expired

    def drop_one_from_head(holder: int) -> None:
        q = ps.queues[holder]
        g = q[0]
        if g.count == 1:
            q.popleft()
        else:
            g.count -= 1

    for holder in sorted(ps.queues):
        q = ps.queues[holder]
        if not q:
            continue
        head = q[0]
        cand = _candidates(holder, head, cfg, rc, aux)
        if cand.size == 0:
            hold_all(holder)
            continue
        if top.edge[holder, dest]:
            # Direct connection available: relay selection is moot, for every
            # policy alike (assist is "direct or through a relay").
            choice = PolicyChoice(
                dest, float(top.capacity_bps[holder, dest]), ps.policy, int(cand.size)
            )
        else:
            choice = _score_candidates(
                ps.policy, holder, cand, world, cfg, rc, aux, trace
            )
        if trace is not None:
            trace.on_choice(t, ps.policy, holder, choice)
        if choice.chosen_id is None:
            hold_all(holder)
            continue
        j = choice.chosen_id

        budget = float(top.capacity_bps[holder, j]) * cfg.dt
        moved: list[_Group] = []
        partial_active = False

        # Resume a packet already part-way through, if it is on the same link.
        prior = ps.partial.get(holder)
        if prior is not None and prior[0] != j:
            ps.partial.pop(holder)
            prior = None
        if prior is not None:
            partial_active = True
            need = rc.packet_bits - prior[1]
            if budget >= need:
                budget -= need
                g = q[0]
                if g.count == 1:
                    q.popleft()
                    moved.append(g)
                else:
                    g.count -= 1
                    moved.append(_Group(1, g.created, g.hops, g.holds))
                ps.partial.pop(holder)
            else:
                ps.partial[holder] = (j, prior[1] + budget)
                budget = 0.0

        while q and budget >= rc.packet_bits:
            g = q[0]
            # Hop-cap feasibility: a hop is transmitted only when it can still
            # lie on a delivery path of at most hops_max edges, so the final
            # hop must go to the destination itself.
            rem = cfg.hops_max - g.hops
            if not (rem >= 1 if j == dest else rem >= 2):
                break
            take = min(g.count, int(budget // rc.packet_bits))
            if take <= 0:
                break
            if take == g.count:
                q.popleft()
                moved.append(g)
            else:
                g.count -= take
                moved.append(_Group(take, g.created, g.hops, g.holds))
            budget -= take * rc.packet_bits

        if budget > 0.0 and q and holder not in ps.partial:
            g = q[0]
            rem = cfg.hops_max - g.hops
            if rem >= 1 if j == dest else rem >= 2:
                ps.partial[holder] = (j, budget)
                partial_active = True

        if not moved and not partial_active:
            # Candidates existed but the head packet could not use the chosen
            # relay (hop budget) -- treat as a held step.
            hold_all(holder)
            continue

        # Fate of everything in flight on this link during [t, t+dt]: exact
        # swept-geometry blockage, then the range test at the realized (wall-
        # folded) end-of-step separation under the t+1 fade realization --
        # the same one the next step's topology wears.
        if aux.ground_truth_blocked(world, cfg, rc, holder, j):
            cause = "blockage"
        else:
            d_next = float(aux.actual_next_dist[holder, j])
            sh = float(aux.next_shadow[holder, j])
            pl_next = (
                rc.pl_ref_dbm - rc.pl_slope * math.log10(d_next / rc.d0) + sh
                if d_next > 0.0
                else rc.pl_ref_dbm + sh
            )
            cause = None if 10.0 ** (pl_next / 10.0) >= rc.gamma_mw else "mobility"

        if cause is not None:
            lost = sum(g.count for g in moved)
            if partial_active and ps.partial.get(holder, (None,))[0] == j:
                # The spanning packet was on the failed link too.
                drop_one_from_head(holder)
                ps.partial.pop(holder, None)
                lost += 1
            if cause == "blockage":
                ps.totals.dropped_blockage += lost
            else:
                ps.totals.dropped_mobility += lost
            continue

        for g in moved:
            g.hops += 1
            g.holds = 0
            if j == dest:
                delay = (t + 1) - g.created
                ps.totals.delivered += g.count
                ps.totals.delivered_bits += g.count * rc.packet_bits
                ps.totals.bits_perhop_weighted += g.count * rc.packet_bits / g.hops
                ps.totals.hops_weighted += g.count * g.hops
                ps.totals.delay_perhop_weighted += g.count * (delay / g.hops)
            else:
                staging.append((j, g))

    for nid, g in staging:
        ps.queues.setdefault(nid, deque()).append(g)
    for nid in [k for k, v in ps.queues.items() if not v]:
        del ps.queues[nid]


def step(
    world: World,
    cfg: ScenarioConfig,
    rc: RunConsts,
    states: Mapping[str, PolicyState],
    trace: Optional[TraceRecorder] = None,
) -> Topology:
    """One simulation step: rebuild the topology, forward packets under every
    policy against the same realization, then advance all movers with wall
    reflection. Returns the step's topology (useful for tests)."""
    top = build_topology(world, cfg, rc)
    aux = _StepAux(world, cfg, rc, top)
    for name in POLICIES:
        if name in states:
            _serve(states[name], world, cfg, rc, aux, trace)
    world.node_pos = aux.node_next_pos
    world.node_vel = aux.node_next_vel
    world.obs_pos = aux.obs_next_pos
    world.obs_vel = aux.obs_next_vel
    world.shadow_db = aux.next_shadow
    world.t_step += 1
    return top


def run_replication(
    cfg: ScenarioConfig,
    rep: int,
    policies: Sequence[str] = POLICIES,
    trace: Optional[TraceRecorder] = None,
    consts: Optional[RunConsts] = None,
) -> dict[str, Totals]:
    """One seeded world advanced for cfg.steps steps under each policy."""
    cfg.validate()
    rc = consts if consts is not None else build_consts(cfg)
    world = generate_scenario(cfg, rep)
    states = {p: PolicyState(p) for p in policies}
    for _ in range(cfg.steps):
        step(world, cfg, rc, states, trace)
    for st in states.values():
        st.totals.inflight_final = sum(
            g.count for q in st.queues.values() for g in q
        )
    return {p: st.totals for p, st in states.items()}


# --- metrics and sweeps -------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    sweep_param: str
    sweep_value: float
    policy: str
    avg_throughput_bps: float
    packet_loss: float
    avg_delay_steps: float
    sent: int
    delivered: int
    dropped_mobility: int
    dropped_blockage: int
    dropped_nocand: int
    runs: int
    seed: int


def metrics_from_totals(tot: Totals, runs: int, steps: int, dt: float) -> tuple[float, float, float]:
    """(per-hop throughput in bits/s, loss rate, per-hop delay in steps).

    Both throughput and delay are normalized per hop packet-by-packet: each
    delivered packet contributes its bits (its total delay) divided by the
    hop count it actually took, so a 3-hop delivery counts a third of a
    single-hop one per unit payload.
    """
    loss = tot.dropped / tot.sent if tot.sent > 0 else 0.0
    if tot.delivered > 0:
        thr = tot.bits_perhop_weighted / (runs * steps * dt)
        delay = tot.delay_perhop_weighted / tot.delivered
    else:
        thr = 0.0
        delay = 0.0
    return thr, loss, delay


def _scenario_key(cfg: ScenarioConfig):
    return astuple(cfg)


def _run_chunk(
    cfg: ScenarioConfig, lo: int, hi: int, policies: Sequence[str]
) -> dict[str, Totals]:
    rc = build_consts(cfg)
    out = {p: Totals() for p in policies}
    for rep in range(lo, hi):
        result = run_replication(cfg, rep, policies, consts=rc)
        for p in policies:
            out[p] = out[p] + result[p]
    return out


def _run_point(
    cfg: ScenarioConfig,
    policies: Sequence[str],
    workers: int,
    chunk: int,
    progress: Optional[Callable[[str], None]],
) -> dict[str, Totals]:
    spans = [(lo, min(lo + chunk, cfg.runs)) for lo in range(0, cfg.runs, chunk)]
    if workers <= 1:
        parts = []
        for i, (lo, hi) in enumerate(spans):
            parts.append(_run_chunk(cfg, lo, hi, policies))
            if progress is not None:
                progress(f"  reps {hi}/{cfg.runs}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_chunk, cfg, lo, hi, policies) for lo, hi in spans]
            parts = []
            for i, f in enumerate(futs):
                parts.append(f.result())
                if progress is not None:
                    progress(f"  reps {spans[i][1]}/{cfg.runs}")
    # Reduce in chunk order so float accumulations are worker-count invariant.
    out = {p: Totals() for p in policies}
    for part in parts:
        for p in policies:
            out[p] = out[p] + part[p]
    return out


def resolve_sweep_field(cfg: ScenarioConfig, param: str) -> str:
    name = _SWEEP_ALIASES.get(param, param)
    valid = {f.name for f in fields(cfg)}
    if name not in valid:
        raise InvalidConfigError(f"unknown sweep parameter {param!r}")
    return name


def run_experiment(
    cfg: ScenarioConfig,
    sweeps: Sequence[tuple[str, Sequence[float]]],
    policies: Sequence[str] = POLICIES,
    workers: int = 1,
    chunk: int = 50,
    progress: Optional[Callable[[str], None]] = None,
) -> list[ResultRow]:
    """Run every sweep point for `runs` replications per point and return one
    row per (sweep point, policy). Points resolving to the same effective
    scenario (e.g. the shared default across sweeps) are computed once."""
    cfg.validate()
    points: list[tuple[str, float, ScenarioConfig]] = []
    if not sweeps:
        points.append(("none", 0.0, cfg))
    for param, values in sweeps:
        name = resolve_sweep_field(cfg, param)
        for v in values:
            current = getattr(cfg, name)
            coerced = int(v) if isinstance(current, int) and not isinstance(current, bool) else float(v)
            points.append((param, float(v), replace(cfg, **{name: coerced})))

    cache: dict = {}
    rows: list[ResultRow] = []
    for param, value, pcfg in points:
        key = _scenario_key(pcfg)
        if key not in cache:
            if progress is not None:
                progress(f"point {param}={value}")
            cache[key] = _run_point(pcfg, policies, workers, chunk, progress)
        tots = cache[key]
        for pol in policies:
            thr, loss, delay = metrics_from_totals(
                tots[pol], pcfg.runs, pcfg.steps, pcfg.dt
            )
            rows.append(
                ResultRow(
                    sweep_param=param,
                    sweep_value=value,
                    policy=pol,
                    avg_throughput_bps=thr,
                    packet_loss=loss,
                    avg_delay_steps=delay,
                    sent=tots[pol].sent,
                    delivered=tots[pol].delivered,
                    dropped_mobility=tots[pol].dropped_mobility,
                    dropped_blockage=tots[pol].dropped_blockage,
                    dropped_nocand=tots[pol].dropped_nocand,
                    runs=pcfg.runs,
                    seed=pcfg.seed,
                )
            )
    return rows
