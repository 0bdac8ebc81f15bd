"""Swept-region blockage tests.

Ground truth throughout is the synchronized link-obstacle distance over the
interval (densely sampled, then refined), which is independent of the region
construction being tested. The region test is conservative by design: every
true contact must be flagged, while a flag without true contact is allowed.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from mmwrelay.blockage import (
    CommRegion,
    DetectionModel,
    GeometryCase,
    NoRadarsError,
    assess,
    case_dispatch,
    combine_survival,
    detection_prob,
    ground_truth_block,
    min_link_obstacle_distance,
    p_int_dynamic,
    p_int_static,
)
from mmwrelay.geometry import Segment3, Triangle3, Vec3
from mmwrelay.kinematics import NodeState, ObstacleKind, ObstacleState

HALF_PI = math.pi / 2.0


def node(nid, x, y, speed=0.0, az=0.0, z=0.0, elev=0.0):
    return NodeState(nid, Vec3(x, y, z), speed, elev, az)


def dyn_obs(oid, x, y, speed=0.0, az=0.0, z=0.0, elev=0.0):
    return ObstacleState(oid, ObstacleKind.DYNAMIC, Vec3(x, y, z), speed, elev, az)


def static_obs(oid, x, y, z=0.0):
    return ObstacleState(oid, ObstacleKind.STATIC, Vec3(x, y, z), 0.0, 0.0, 0.0)


# ------------------------------------------------------------ case dispatch ----


def test_both_stationary():
    r = case_dispatch(node(1, 0, 0), node(2, 10, 0), 1.0)
    assert r.case is GeometryCase.BOTH_STATIONARY
    assert isinstance(r.shape, Segment3)
    assert r.shape.a.as_tuple() == (0.0, 0.0, 0.0)
    assert r.shape.b.as_tuple() == (10.0, 0.0, 0.0)


def test_one_moving_planar_triangle():
    i = node(1, 0, 0)
    j = node(2, 10, 0, speed=10.0, az=0.0)  # heading +y
    r = case_dispatch(i, j, 1.0)
    assert r.case is GeometryCase.ONE_MOVING_PLANAR
    assert isinstance(r.shape, Triangle3)
    pts = {p.as_tuple() for p in r.shape.vertices()}
    assert pts == {(0.0, 0.0, 0.0), (10.0, 0.0, 0.0), (10.0, 10.0, 0.0)}


def _sorted_ends(shape):
    pts = sorted((shape.a.as_tuple(), shape.b.as_tuple()))
    return pts


def test_one_moving_radial_away():
    i = node(1, 0, 0)
    j = node(2, 10, 0, speed=10.0, az=HALF_PI)  # heading +x, away
    r = case_dispatch(i, j, 1.0)
    assert r.case is GeometryCase.ONE_MOVING_RADIAL
    assert isinstance(r.shape, Segment3)
    lo, hi = _sorted_ends(r.shape)
    assert lo == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)
    assert hi == pytest.approx((20.0, 0.0, 0.0), abs=1e-12)


def test_one_moving_radial_toward_overshoot_covers_original_link():
    # j overshoots past i; the region must still cover the time-t link
    i = node(1, 0, 0)
    j = node(2, 10, 0, speed=15.0, az=-HALF_PI)  # heading -x
    r = case_dispatch(i, j, 1.0)
    assert r.case is GeometryCase.ONE_MOVING_RADIAL
    lo, hi = _sorted_ends(r.shape)
    assert lo == pytest.approx((-5.0, 0.0, 0.0), abs=1e-12)
    assert hi == pytest.approx((10.0, 0.0, 0.0), abs=1e-12)
    # obstacle sitting on the time-t link must be flagged
    assert p_int_static(static_obs(9, 8, 0), r) == 0


def test_equal_velocities_reduce_to_static_link():
    i = node(1, 0, 0, speed=7.0, az=0.3)
    j = node(2, 10, 5, speed=7.0, az=0.3)
    r = case_dispatch(i, j, 2.0)
    assert r.case is GeometryCase.BOTH_MOVING_RADIAL
    assert isinstance(r.shape, Segment3)
    ends = {r.shape.a.as_tuple(), r.shape.b.as_tuple()}
    assert ends == {(0.0, 0.0, 0.0), (10.0, 5.0, 0.0)}


def test_both_moving_coplanar_vs_skew():
    i = node(1, 0, 0, speed=5.0, az=0.0)
    j = node(2, 10, 0, speed=5.0, az=HALF_PI)
    assert case_dispatch(i, j, 1.0).case is GeometryCase.BOTH_MOVING_COPLANAR
    k = NodeState(3, Vec3(10, 0, 0), 5.0, HALF_PI, 0.0)  # straight up
    assert case_dispatch(i, k, 1.0).case is GeometryCase.BOTH_MOVING_SKEW


def test_region_anchored_at_absolute_time_t_positions():
    i = node(1, 3, 4, speed=2.0, az=1.0)
    j = node(2, 13, 4, speed=3.0, az=-2.0)
    r = case_dispatch(i, j, 1.0)
    assert isinstance(r.shape, Triangle3)
    assert r.shape.p0.as_tuple() == (3.0, 4.0, 0.0)
    assert r.shape.p1.as_tuple() == (13.0, 4.0, 0.0)


# ----------------------------------------------------------------- p_int ----


def test_p_int_static_on_and_off_link():
    r = case_dispatch(node(1, 0, 0), node(2, 10, 0), 1.0)
    assert p_int_static(static_obs(1, 5, 0), r) == 0
    assert p_int_static(static_obs(2, 5, 0.2), r) == 1
    assert p_int_static(static_obs(3, 11, 0), r) == 1


def test_p_int_static_triangle_containment():
    r = case_dispatch(node(1, 0, 0), node(2, 10, 0, speed=10.0, az=0.0), 1.0)
    assert p_int_static(static_obs(1, 8, 1), r) == 0
    assert p_int_static(static_obs(2, 2, 5), r) == 1
    assert p_int_static(static_obs(3, 8, 1, z=2.0), r) == 1  # off plane


def test_p_int_dynamic_crossing_path():
    r = case_dispatch(node(1, 0, 0), node(2, 10, 0), 1.0)
    crossing = dyn_obs(1, 5, -1, speed=2.0, az=0.0)  # +y through the link
    far = dyn_obs(2, 5, 3, speed=1.0, az=0.0)
    assert p_int_dynamic(crossing, r, 1.0) == 0
    assert p_int_dynamic(far, r, 1.0) == 1


def test_static_obstacle_swept_by_moving_frame():
    # both endpoints share velocity +x; link translates through a static
    # obstacle that is NOT on the time-t link. The point test would miss it;
    # the path test must flag it.
    i = node(1, 0, 0, speed=10.0, az=HALF_PI)
    j = node(2, 10, 5, speed=10.0, az=HALF_PI)
    obs = static_obs(7, 10, 2.5)
    r = case_dispatch(i, j, 1.0)
    assert p_int_static(obs, r) == 1  # literal point test: clear
    assert p_int_dynamic(obs, r, 1.0) == 0  # swept path: hit
    verdict = assess(i, j, [obs], 1.0, DetectionModel.perfect())
    assert verdict.p_no_block == 0.0
    # and it is a true synchronized contact, not just a conservative flag
    assert min_link_obstacle_distance(i, j, obs, 1.0) < 1e-9


def test_region_flag_can_be_conservative():
    # crossing the swept triangle without ever meeting the link at the same
    # instant: the region flags it, the true min distance stays large
    i = node(1, 0, 0)
    j = node(2, 10, 0, speed=10.0, az=0.0)
    obs = dyn_obs(3, 8, -0.5, speed=1.0, az=0.0)
    r = case_dispatch(i, j, 1.0)
    assert p_int_dynamic(obs, r, 1.0) == 0
    assert min_link_obstacle_distance(i, j, obs, 1.0) > 0.3


# ------------------------------------------------------------- detection ----


def test_detection_modes():
    o = dyn_obs(1, 3, 4, speed=1.0)
    assert detection_prob(o, DetectionModel.perfect()) == 1.0
    assert detection_prob(o, DetectionModel.constant(0.7)) == 0.7
    near = DetectionModel.range_threshold(10.0, 0.9, 0.2, [Vec3(0, 0, 0)])
    assert detection_prob(o, near) == 0.9  # dist 5 <= 10
    far = DetectionModel.range_threshold(4.0, 0.9, 0.2, [Vec3(0, 0, 0)])
    assert detection_prob(o, far) == 0.2
    with pytest.raises(NoRadarsError):
        detection_prob(o, DetectionModel.range_threshold(4.0, 0.9, 0.2, []))
    with pytest.raises(ValueError):
        DetectionModel.constant(1.5)


# ------------------------------------------------------------ combination ----


def test_combine_rules_exact():
    # literal: (0.8*0) * (0.5*1) * 1 = 0
    # miss-aware: (1 - 0.8*1) * (1 - 0.5*0) * 1 = 0.2
    p_ints = [0, 1, 1]
    det = [0.8, 0.5, 1.0]
    dyn = [True, True, False]
    assert combine_survival(p_ints, det, dyn, "literal") == 0.0
    assert combine_survival(p_ints, det, dyn, "miss-aware") == pytest.approx(0.2)
    # literal penalizes weak detection even without interference
    assert combine_survival([1, 1], [0.5, 1.0], [True, False], "literal") == pytest.approx(0.5)
    assert combine_survival([1, 1], [0.5, 1.0], [True, False], "miss-aware") == pytest.approx(1.0)
    with pytest.raises(ValueError):
        combine_survival([1], [1.0], [True], "bogus")


def test_rules_coincide_under_perfect_detection():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p_ints = rng.integers(0, 2, size=6).tolist()
        dyn = rng.integers(0, 2, size=6).astype(bool).tolist()
        det = [1.0] * 6
        a = combine_survival(p_ints, det, dyn, "literal")
        b = combine_survival(p_ints, det, dyn, "miss-aware")
        assert a == b


def test_assess_product_and_records():
    i = node(1, 0, 0)
    j = node(2, 10, 0)
    obstacles = [
        static_obs(0, 5, 0),        # on the link
        static_obs(1, 5, 2),        # clear
        dyn_obs(2, 5, 3, speed=1.0, az=0.0),  # clear path
    ]
    v = assess(i, j, obstacles, 1.0, DetectionModel.perfect())
    assert v.p_no_block == 0.0
    assert [o.p_int for o in v.per_obstacle] == [0, 1, 1]
    assert [o.obstacle_id for o in v.per_obstacle] == [0, 1, 2]
    assert v.case_used is GeometryCase.BOTH_STATIONARY
    clear = assess(i, j, obstacles[1:], 1.0, DetectionModel.perfect())
    assert clear.p_no_block == 1.0


# ----------------------------------------------- conservativeness property ----


def _random_instance(rng, n_obs=4):
    def rand_node(nid):
        x, y = rng.uniform(-40, 40, size=2)
        speed = rng.uniform(0, 15) if rng.random() < 0.8 else 0.0
        az = rng.uniform(-math.pi, math.pi)
        return node(nid, x, y, speed=speed, az=az)

    i = rand_node(1)
    j = rand_node(2)
    while (i.pos - j.pos).norm() < 1.0:
        j = rand_node(2)
    obstacles = []
    for m in range(n_obs):
        x, y = rng.uniform(-40, 40, size=2)
        if rng.random() < 0.5:
            obstacles.append(static_obs(m, x, y))
        else:
            obstacles.append(
                dyn_obs(m, x, y, speed=rng.uniform(0, 10), az=rng.uniform(-math.pi, math.pi))
            )
    return i, j, obstacles


def test_every_true_contact_is_flagged():
    # the load-bearing direction of the region test: an obstacle whose true
    # synchronized distance reaches zero must always be flagged
    rng = np.random.default_rng(42)
    contacts = 0
    for _ in range(250):
        i, j, obstacles = _random_instance(rng)
        dt = float(rng.uniform(0.3, 2.0))
        region = case_dispatch(i, j, dt)
        for o in obstacles:
            true_min = min_link_obstacle_distance(i, j, o, dt)
            if true_min <= 1e-9:
                contacts += 1
                assert p_int_dynamic(o, region, dt) == 0, (i, j, o, dt, true_min)
    assert contacts >= 15  # the scenario generator must actually exercise contacts


def test_assess_zero_whenever_ground_truth_blocked():
    rng = np.random.default_rng(43)
    hits = 0
    for _ in range(150):
        i, j, obstacles = _random_instance(rng)
        dt = float(rng.uniform(0.3, 2.0))
        blocked = any(
            min_link_obstacle_distance(i, j, o, dt) <= 1e-9 for o in obstacles
        )
        if blocked:
            hits += 1
            v = assess(i, j, obstacles, dt, DetectionModel.perfect())
            assert v.p_no_block == 0.0
    assert hits >= 10


def test_galilean_boost_leaves_verdicts_unchanged():
    # adding one common velocity to every entity changes nothing physical;
    # per-obstacle verdicts and the survival product must be identical
    rng = np.random.default_rng(44)
    from mmwrelay.kinematics import vector_to_angles, velocity_vector

    for _ in range(100):
        i, j, obstacles = _random_instance(rng)
        dt = float(rng.uniform(0.3, 2.0))
        base = assess(i, j, obstacles, dt, DetectionModel.perfect())
        w = Vec3(*rng.uniform(-10, 10, size=2), 0.0)

        def boost(s):
            sp, el, az = vector_to_angles(velocity_vector(s) + w)
            from dataclasses import replace

            changes = dict(speed=sp, elevation=el, azimuth=az)
            if isinstance(s, ObstacleState) and sp > 0.0:
                changes["kind"] = ObstacleKind.DYNAMIC
            return replace(s, **changes)

        boosted = assess(boost(i), boost(j), [boost(o) for o in obstacles], dt,
                         DetectionModel.perfect())
        assert [o.p_int for o in boosted.per_obstacle] == [o.p_int for o in base.per_obstacle]
        assert boosted.p_no_block == base.p_no_block


def test_ground_truth_block_basics():
    i = node(1, 0, 0)
    j = node(2, 10, 0)
    hit = dyn_obs(1, 5, -1, speed=2.0, az=0.0)
    miss = dyn_obs(2, 5, 5, speed=1.0, az=0.0)
    assert ground_truth_block(i, j, [hit], 1.0)
    assert not ground_truth_block(i, j, [miss], 1.0)
    assert not ground_truth_block(i, j, [], 1.0)


def test_min_distance_refinement_matches_analytic():
    # obstacle crossing the static link orthogonally: min distance is zero at
    # the crossing instant; starting offset 0.6 at speed 2 crosses at tau 0.3
    i = node(1, 0, 0)
    j = node(2, 10, 0)
    o = dyn_obs(1, 5, -0.6, speed=2.0, az=0.0)
    assert min_link_obstacle_distance(i, j, o, 1.0) == pytest.approx(0.0, abs=1e-9)
    # non-crossing: closest approach 0.4 at tau 0.5
    o2 = dyn_obs(2, 5, -1.4, speed=2.0, az=0.0)
    d = min_link_obstacle_distance(i, j, o2, 0.5)
    assert d == pytest.approx(0.4, abs=1e-9)
