"""Shared builders for randomized test inputs."""

import numpy as np

from greenwave.kinematics import INF, QuadraticSegment, Trajectory, assemble, segment
from greenwave.planner import VehicleLimits

DEFAULT_LIMITS = VehicleLimits(25.0, 2.0, -5.0, 7.0, 1.0)


def random_segment(rng, lim=DEFAULT_LIMITS, t_span=30.0):
    """A kinematically feasible segment with random anchor and duration."""
    v0 = rng.uniform(0.0, lim.v_max)
    t0 = rng.uniform(-t_span, t_span)
    dur = rng.uniform(0.05, 8.0)
    a_hi = (lim.v_max - v0) / dur
    a_lo = -v0 / dur
    a = rng.uniform(max(a_lo, lim.a_min), min(a_hi, lim.a_max))
    loc = rng.uniform(-200.0, 800.0)
    return segment(loc, v0, a, t0, t0 + dur)


def random_walk_segments(rng, lim, loc, v, t, n_pieces, forward=True):
    """Feasible piecewise profile walked from (loc, v, t) in either direction."""
    segs = []
    for _ in range(n_pieces):
        a = rng.uniform(lim.a_min, lim.a_max)
        dur = rng.uniform(0.3, 6.0)
        if forward:
            # clamp duration so speed stays inside [0, v_max]
            if a > 1e-12:
                dur = min(dur, (lim.v_max - v) / a) if v < lim.v_max else 0.0
            elif a < -1e-12:
                dur = min(dur, -v / a) if v > 0 else 0.0
            if dur <= 1e-9:
                a = 0.0
                dur = rng.uniform(0.3, 3.0)
            segs.append(segment(loc, v, a, t, t + dur))
            loc += v * dur + 0.5 * a * dur * dur
            v += a * dur
            t += dur
        else:
            # previous speed must stay feasible: v_prev = v - a*dur
            if a > 1e-12:
                dur = min(dur, v / a) if v > 0 else 0.0
            elif a < -1e-12:
                dur = min(dur, (v - lim.v_max) / a) if v < lim.v_max else 0.0
            if dur <= 1e-9:
                a = 0.0
                dur = rng.uniform(0.3, 3.0)
            v_prev = v - a * dur
            loc_prev = loc - v_prev * dur - 0.5 * a * dur * dur
            segs.insert(0, segment(loc_prev, v_prev, a, t - dur, t))
            loc, v, t = loc_prev, v_prev, t - dur
    return segs, loc, v, t


def random_feasible_trajectory(rng, lim=DEFAULT_LIMITS, loc=0.0, v=None,
                               t0=0.0, n_pieces=5, tail=True):
    """Random feasible trajectory starting at (loc, v, t0)."""
    v = rng.uniform(0.0, lim.v_max) if v is None else v
    segs, loc_e, v_e, t_e = random_walk_segments(rng, lim, loc, v, t0, n_pieces)
    if tail:
        segs.append(segment(loc_e, v_e, 0.0, t_e, INF))
    return assemble(segs)


def random_through_point(rng, lim, loc, v, t, n_back=3, n_fwd=3):
    """Random feasible trajectory passing exactly through (loc, v, t)."""
    back, *_ = random_walk_segments(rng, lim, loc, v, t, n_back, forward=False)
    fwd, loc_e, v_e, t_e = random_walk_segments(rng, lim, loc, v, t, n_fwd)
    fwd.append(segment(loc_e, v_e, 0.0, t_e, INF))
    return assemble(back + fwd)


def sup_gap(a: Trajectory, b: Trajectory, ts: np.ndarray) -> float:
    return float(np.max(np.abs(a.value_array(ts) - b.value_array(ts))))
