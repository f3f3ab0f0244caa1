import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import helpers
import oracles
from greenwave.kinematics import (INF, QuadraticSegment, StatePoint, assemble,
                                  segment, trajectory_distance)
from greenwave.shooting_ops import ShotCase, bso, fso

WALL = segment(200.0, 0.0, 0.0, 0.0, INF)
START = StatePoint(0.0, 25.0, 0.0)


class TestForwardCases:
    def test_wall_tangency(self):
        r = fso(WALL, START, 0.0, -5.0)
        assert r.case is ShotCase.TANGENT
        # brake from 25 needs 62.5 m and 5 s; merge at 137.5 m
        assert r.merge_time == pytest.approx(5.5)
        assert r.tangent_time == pytest.approx(10.5)

    def test_high_bound_never_binds(self):
        hi = segment(1e9, 0.0, 0.0, 0.0, 100.0)
        r = fso(hi, START, 0.0, -5.0)
        assert r.case is ShotCase.UNBOUNDED
        assert r.merge_time == INF and r.tangent_time == INF

    def test_bound_below_brake_ray(self):
        low = segment(10.0, 0.0, 0.0, 0.0, INF)
        r = fso(low, START, 0.0, -5.0)
        assert r.case is ShotCase.INFEASIBLE
        assert r.merge_time == -INF and r.tangent_time == -INF

    def test_harder_braking_bound_is_no_contact(self):
        # bound brakes harder than the merge rate: tangency impossible
        b = segment(100.0, 20.0, -5.0, 0.0, 4.0)
        r = fso(b, START, 2.0, -1.0)
        assert r.case is ShotCase.UNBOUNDED

    def test_identical_parabola_rides_bound(self):
        b = segment(0.0, 25.0, 0.0, 0.0, 40.0)
        r = fso(b, START, 0.0, -5.0)
        assert r.case is ShotCase.TANGENT
        # immediate zero-length merge: the template already rides the bound
        assert r.merge_time == pytest.approx(0.0)
        assert r.tangent_time == pytest.approx(0.0)

    def test_equal_brake_rate_rides_to_segment_end(self):
        # bound decelerating exactly at the merge rate, met on-curve
        b = segment(0.0, 25.0, -5.0, 0.0, 4.0)
        r = fso(b, StatePoint(-17.5, 20.0, -1.0), 0.0, -5.0)
        # shot cruises, merge parabola coincides with the bound from t=0
        assert r.case is ShotCase.TANGENT
        assert r.tangent_time == pytest.approx(4.0)


class TestBackwardCases:
    def test_mirror_of_wall_example(self):
        wall_m = segment(200.0, 0.0, 0.0, 0.0, -INF)
        r = bso(wall_m, StatePoint(0.0, -25.0, 0.0), 0.0, -5.0)
        assert r.case is ShotCase.TANGENT
        assert r.merge_time == pytest.approx(-5.5)
        assert r.tangent_time == pytest.approx(-10.5)

    def test_bound_below_backward_ray(self):
        low = segment(-100.0, 0.0, 0.0, 0.0, -INF)
        r = bso(low, StatePoint(0.0, 5.0, 0.0), 2.0, -5.0)
        assert r.case is ShotCase.INFEASIBLE
        assert r.merge_time == INF and r.tangent_time == INF

    def test_matching_brake_rate_off_curve(self):
        # bound at exactly the merge deceleration but offset: no contact
        b = segment(500.0, 10.0, -5.0, -10.0, -1.0)
        r = bso(b, StatePoint(0.0, 5.0, 0.0), 2.0, -5.0)
        assert r.case is ShotCase.UNBOUNDED
        assert r.merge_time == -INF


def _mirror_segment(s):
    # reflect time about 0, negate speeds: (t, x) -> (-t, x)
    v_at_ref = s.speed
    return QuadraticSegment.from_anchor(s.loc, -v_at_ref, s.accel,
                                        -s.ref, -s.t0 if s.ref == s.t1 else -s.t1)


@settings(max_examples=120)
@given(st.data())
def test_time_reversal_duality(data):
    """bso equals fso on time-mirrored inputs (mirror about the start time)."""
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    bound = helpers.random_segment(rng)
    t_s = bound.t1 + rng.uniform(-3.0, 6.0)
    start = StatePoint(rng.uniform(-100.0, 300.0), rng.uniform(0.0, 25.0), t_s)
    a_up = rng.uniform(0.0, 2.0)
    a_dn = rng.uniform(-5.0, -0.2)
    if bound.accel < a_dn:
        a_dn = bound.accel  # keep the merge no harder than the bound
    r_b = bso(bound, start, a_up, a_dn)

    pivot = start.time
    m_bound = QuadraticSegment.from_anchor(
        bound.value(bound.t0), -bound.speed_at(bound.t0), bound.accel,
        2 * pivot - bound.t0, 2 * pivot - bound.t1)
    m_start = StatePoint(start.loc, -start.speed, pivot)
    r_f = fso(m_bound, m_start, a_up, a_dn)

    assert r_b.case is r_f.case
    if r_b.case is ShotCase.TANGENT:
        assert r_b.merge_time == pytest.approx(2 * pivot - r_f.merge_time, abs=1e-7)
        assert r_b.tangent_time == pytest.approx(2 * pivot - r_f.tangent_time, abs=1e-7)


@settings(max_examples=150)
@given(st.data())
def test_tangency_and_non_crossing(data):
    """Accepted merges touch the bound with matching state and never cross it."""
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    bound = helpers.random_segment(rng)
    t_s = bound.t0 - rng.uniform(0.0, 10.0)
    start = StatePoint(bound.value(bound.t0) - rng.uniform(0.0, 120.0),
                       rng.uniform(0.0, 25.0), t_s)
    a_up = rng.uniform(0.1, 2.0)
    a_dn = rng.uniform(-5.0, -0.3)
    if bound.accel < a_dn:
        a_dn = bound.accel
    r = fso(bound, start, a_up, a_dn)
    if r.case is not ShotCase.TANGENT:
        return
    t_m, t_p = r.merge_time, r.tangent_time
    x_m = start.loc + start.speed * (t_m - start.time) \
        + 0.5 * a_up * (t_m - start.time) ** 2
    v_m = start.speed + a_up * (t_m - start.time)
    merge = segment(x_m, v_m, a_dn, t_m, max(t_p, t_m + 1e-9))
    # tangency: position and speed meet the bound at the touch time
    assert merge.value(t_p) == pytest.approx(bound.value(t_p), abs=1e-6)
    assert merge.speed_at(t_p) == pytest.approx(bound.speed_at(t_p), abs=1e-6)
    # non-crossing of the bound by shot + extended merge ray
    shot = segment(start.loc, start.speed, a_up, start.time, t_m) \
        if t_m > start.time else None
    ray = segment(x_m, v_m, a_dn, t_m, INF)
    d1 = oracles.sampled_segment_distance(bound, ray, 1e-3)
    assert d1 >= -1e-6
    if shot is not None:
        d2 = oracles.sampled_segment_distance(bound, shot, 1e-3)
        assert d2 >= -1e-6


@settings(max_examples=120)
@given(st.data())
def test_forward_root_selection_unique(data):
    """With a positive discriminant at most one root pair is order-valid."""
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    bound = helpers.random_segment(rng)
    start = StatePoint(bound.value(bound.t0) - rng.uniform(1.0, 150.0),
                       rng.uniform(0.0, 25.0), bound.t0 - rng.uniform(0.0, 8.0))
    a_up = rng.uniform(0.1, 2.0)
    a_dn = rng.uniform(-5.0, -0.3)
    if bound.accel <= a_dn:
        return
    from greenwave.shooting_ops import _tangency_candidates
    cands = _tangency_candidates(bound, start, a_up, a_dn)
    if cands is None or len(cands) != 2:
        return
    (m1, p1), (m2, p2) = cands
    if abs(m1 - m2) < 1e-9:
        return
    valid = [(m, p) for m, p in cands if m >= -1e-9 and p >= m - 1e-9]
    r = fso(bound, start, a_up, a_dn)
    if r.case is ShotCase.TANGENT:
        assert len(valid) >= 1
