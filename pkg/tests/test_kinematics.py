import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import helpers
import oracles
from greenwave.kinematics import (INF, KinematicsError, QuasiTrajectory,
                                  Trajectory, UnreachedLocation, assemble,
                                  critical_time, lower_envelope, segment,
                                  segment_distance, trajectory_distance)
from greenwave.lab import lead_profile
from helpers import DEFAULT_LIMITS


def two_phase():
    # accelerate 0 -> 25 at 2, then cruise
    return assemble([segment(0.0, 0.0, 2.0, 0.0, 12.5),
                     segment(156.25, 25.0, 0.0, 12.5, INF)])


class TestEval:
    def test_segment_formula(self):
        s = segment(5.0, 2.0, 1.0, 0.0, 10.0)
        assert s.value(2.0) == 11.0
        assert s.value(0.0) == 5.0

    def test_cruise(self):
        s = segment(0.0, 25.0, 0.0, 0.0, 10.0)
        assert s.value(4.0) == 100.0

    def test_trajectory_breakpoint_and_tail(self):
        p = two_phase()
        assert p.speed(12.5) == pytest.approx(25.0)
        assert p.value(0.0) == 0.0
        assert p.speed(0.0) == 0.0
        assert p.value(20.0) == pytest.approx(343.75)

    def test_domain_error_before_start(self):
        with pytest.raises(KinematicsError):
            two_phase().value(-1.0)

    def test_normalization_rebases_reversed_anchor(self):
        # anchor given at the later endpoint; stored form starts at the earlier
        s = segment(100.0, 10.0, 2.0, 5.0, 1.0)
        assert s.t0 == 1.0 and s.t1 == 5.0
        assert s.value(5.0) == pytest.approx(100.0)
        assert s.speed_at(5.0) == pytest.approx(10.0)


class TestInverse:
    def test_cruise(self):
        p = assemble([segment(0.0, 25.0, 0.0, 0.0, INF)])
        assert p.inverse(500.0) == pytest.approx(20.0)

    def test_infimum_at_stop(self):
        # reaches 100 exactly when stopping, waits, then restarts
        p = assemble([
            segment(0.0, 20.0, -2.0, 0.0, 10.0),
            segment(100.0, 0.0, 0.0, 10.0, 30.0),
            segment(100.0, 0.0, 1.0, 30.0, INF),
        ])
        assert p.inverse(100.0) == pytest.approx(10.0)

    def test_lead_profile_against_bisection(self):
        p = lead_profile(DEFAULT_LIMITS)
        t = p.inverse(500.0)
        t_ref = oracles.bisect_inverse(p, 500.0, 0.0, 120.0)
        assert t == pytest.approx(t_ref, abs=1e-6)

    def test_unreached(self):
        p = assemble([segment(0.0, 0.0, 0.0, 0.0, INF)])
        with pytest.raises(UnreachedLocation):
            p.inverse(1.0)


class TestShadow:
    def test_cruise_shift(self):
        p = assemble([segment(0.0, 25.0, 0.0, 0.0, INF)])
        sh = p.shadow(1, 7.0, 1.0)
        # 25*(t-1) - 7
        assert sh.value(2.0) == pytest.approx(25.0 - 7.0)
        assert sh.speed(2.0) == 25.0

    def test_group_action_exact(self, rng):
        for _ in range(50):
            p = helpers.random_feasible_trajectory(rng)
            a = p.shadow(1, 7.0, 1.0).shadow(1, 7.0, 1.0)
            b = p.shadow(2, 7.0, 1.0)
            assert a.segments == b.segments

    def test_stopped_segment_unchanged_speed(self):
        p = assemble([segment(50.0, 0.0, 0.0, 0.0, INF)])
        sh = p.shadow(3, 7.0, 1.0)
        assert sh.segments[0].loc == 50.0 - 21.0
        assert sh.segments[0].speed == 0.0
        assert sh.segments[0].t0 == 3.0


class TestCriticalTime:
    def test_basic(self):
        s1 = segment(0.0, 0.0, 2.0, 0.0, 10.0)
        s2 = segment(0.0, 4.0, 0.0, 0.0, 10.0)
        # minimize t^2 - 4t -> t = 2; dense sampling agrees
        assert critical_time(s1, s2) == pytest.approx(2.0)
        ts = np.linspace(0, 10, 100001)
        diff = s1.value(ts[0]) if False else None
        vals = [s1.value(t) - s2.value(t) for t in np.linspace(0, 10, 10001)]
        assert np.argmin(vals) * 10.0 / 10000 == pytest.approx(2.0, abs=1e-3)

    def test_equal_acceleration_signals_none(self):
        s1 = segment(0.0, 1.0, 1.0, 0.0, 5.0)
        s2 = segment(3.0, 2.0, 1.0, 0.0, 5.0)
        assert critical_time(s1, s2) is None

    def test_stationary_at_zero(self):
        s1 = segment(0.0, 0.0, 0.0, 0.0, 10.0)
        s2 = segment(0.0, 0.0, -5.0, 0.0, 10.0)
        assert critical_time(s1, s2) == pytest.approx(0.0)


class TestSegmentDistance:
    def test_identical(self):
        s = segment(3.0, 2.0, 1.0, 0.0, 5.0)
        assert segment_distance(s, s) == 0.0

    def test_disjoint_windows(self):
        s1 = segment(0.0, 0.0, 0.0, 0.0, 1.0)
        s2 = segment(0.0, 0.0, 0.0, 2.0, 3.0)
        assert segment_distance(s1, s2) == INF

    def test_endpoint_minimum(self):
        s1 = segment(10.0, 0.0, 0.0, 0.0, 10.0)
        s2 = segment(0.0, 2.0, 0.0, 0.0, 10.0)
        d = segment_distance(s1, s2)
        assert d == pytest.approx(-10.0)
        assert d == pytest.approx(
            oracles.sampled_segment_distance(s1, s2, 1e-4), abs=1e-6)

    @settings(max_examples=150)
    @given(st.data())
    def test_matches_sampling_oracle(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        s1 = helpers.random_segment(rng)
        s2 = helpers.random_segment(rng)
        d = segment_distance(s1, s2)
        ref = oracles.sampled_segment_distance(s1, s2)
        if math.isinf(ref):
            assert math.isinf(d)
        else:
            curvature = max(abs(s1.accel), abs(s2.accel), 1.0)
            assert d <= ref + 1e-12
            assert d >= ref - (1e-6 + curvature * 1e-3 ** 2)


class TestTrajectoryDistance:
    def test_self_distance_zero(self, rng):
        p = helpers.random_feasible_trajectory(rng)
        assert trajectory_distance(p, p) == pytest.approx(0.0, abs=1e-9)

    def test_shadow_gap_cruise(self):
        p = assemble([segment(0.0, 25.0, 0.0, 0.0, INF)])
        sh = p.shadow(1, 7.0, 1.0)
        # p(t) - (p(t-1) - 7) = 25 + 7 = 32 ... shadow minus p = -32
        assert trajectory_distance(sh, p) == pytest.approx(-32.0)
        assert trajectory_distance(p, sh) == pytest.approx(32.0)

    def test_quasi_left(self):
        hi = assemble([segment(0.0, 25.0, 0.0, 0.0, INF)])
        lo = assemble([segment(-10.0, 25.0, 0.0, 0.0, INF)])
        u = QuasiTrajectory((hi, lo))
        assert trajectory_distance(u, lo) == pytest.approx(0.0)

    def test_quasi_right_uses_envelope(self):
        a = assemble([segment(0.0, 10.0, 0.0, 0.0, INF)])
        b = assemble([segment(50.0, 0.0, 0.0, 0.0, INF)])
        u = QuasiTrajectory((a, b))
        p = assemble([segment(-5.0, 10.0, 0.0, 0.0, INF)])
        # envelope: ray then flat 50; p sits 5 below the ray branch
        assert trajectory_distance(p, u, (0.0, 100.0)) == pytest.approx(-5.0)

    def test_transitivity_random(self, rng):
        for _ in range(40):
            a = helpers.random_feasible_trajectory(rng)
            b = helpers.random_feasible_trajectory(rng)
            c = helpers.random_feasible_trajectory(rng)
            w = (max(a.start_time, b.start_time, c.start_time), INF)
            dab = trajectory_distance(a, b, w)
            dbc = trajectory_distance(b, c, w)
            dac = trajectory_distance(a, c, w)
            if math.isfinite(dab) and math.isfinite(dbc):
                assert dac >= dab + dbc - 1e-6


class TestInverseProperties:
    def test_monotone_and_speed_limited(self, rng):
        lim = DEFAULT_LIMITS
        for _ in range(40):
            p = helpers.random_feasible_trajectory(rng, lim, n_pieces=4)
            top = p.value(p.segments[-1].t0) + 5.0
            locs = np.sort(rng.uniform(p.value(p.start_time), top, 6))
            ts = []
            for loc in locs:
                try:
                    ts.append(p.inverse(loc))
                except UnreachedLocation:
                    ts.append(None)
            prev_l = prev_t = None
            for loc, t in zip(locs, ts):
                if t is None or prev_t is None:
                    prev_l, prev_t = (loc, t) if t is not None else (prev_l, prev_t)
                    continue
                assert t >= prev_t + (loc - prev_l) / lim.v_max - 1e-9
                prev_l, prev_t = loc, t

    def test_roundtrip(self, rng):
        for _ in range(40):
            p = helpers.random_feasible_trajectory(rng, n_pieces=4)
            top = p.value(p.segments[-1].t0)
            loc = rng.uniform(p.value(p.start_time), top)
            t = p.inverse(loc)
            if p.speed(t) > 1e-6:
                assert p.value(t) == pytest.approx(loc, abs=1e-6)


class TestEnvelope:
    def test_min_of_two_cruises(self):
        a = assemble([segment(0.0, 25.0, 0.0, 0.0, 100.0)])
        b = assemble([segment(100.0, 0.0, 0.0, 0.0, 100.0)])
        env = lower_envelope([a, b], 0.0, 100.0)
        ts = np.linspace(0.0, 100.0, 501)
        ref = np.minimum(25.0 * ts, 100.0)
        assert helpers.sup_gap(env, assemble([
            segment(0.0, 25.0, 0.0, 0.0, 4.0),
            segment(100.0, 0.0, 0.0, 4.0, 100.0)], kinked=True), ts) < 1e-9
        assert np.max(np.abs(env.value_array(ts) - ref)) < 1e-9

    def test_random_families(self, rng):
        for _ in range(25):
            members = [helpers.random_feasible_trajectory(rng, n_pieces=3)
                       for _ in range(3)]
            lo = max(m.start_time for m in members)
            env = lower_envelope(members, lo, lo + 25.0)
            ts = np.linspace(lo, lo + 24.9, 400)
            ref = np.min([m.value_array(ts) for m in members], axis=0)
            assert np.max(np.abs(env.value_array(ts) - ref)) < 1e-8


class TestCsvRoundtrip:
    def test_segment_dump(self, tmp_path, rng):
        from greenwave.kinematics import read_segment_csv, write_segment_csv
        trajs = [helpers.random_feasible_trajectory(rng) for _ in range(3)]
        path = tmp_path / "segments.csv"
        write_segment_csv(path, trajs)
        back = read_segment_csv(path)
        for a, b in zip(trajs, back):
            ts = np.linspace(a.start_time, a.segments[-1].t0 + 5.0, 100)
            assert helpers.sup_gap(a, b, ts) < 1e-9

    def test_sampled_dump_columns(self, tmp_path):
        from greenwave.kinematics import write_trajectory_csv
        p = two_phase()
        path = tmp_path / "traj.csv"
        write_trajectory_csv(path, [p], 0.5, t1=20.0)
        header = path.read_text().splitlines()[0]
        assert header == "vehicle_id,t,x,v,a"
