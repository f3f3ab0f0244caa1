"""Reachability bounds under speed and acceleration limits.

A state point (location, speed, time) pins down a cone of feasible
trajectories through it.  The cone's upper boundary is the
hold / full-throttle / cruise curve; its lower boundary is the
fast-approach / full-brake / standstill curve.  Two state points pin
down a prism (trajectories through both), whose boundaries come from
the forward construction against the later point's cone and from the
same construction run in a 180-degree-rotated frame.

The prism emptiness test and the pairwise entry-condition test
(:func:`is_proper`) reduce to sign checks of the directed distance
between cone boundaries, which is what makes the feasibility theorems
executable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import (INF, QuadraticSegment, StatePoint, Trajectory,
                         _pair_distance, assemble, scaled_tol,
                         trajectory_distance)
from .planner import (BoundaryCondition, ControlAccels, PlatoonResult,
                      SignalTiming, VehicleLimits, plan_following_parallel,
                      plan_signalized)
from .shooting_proc import forward_process


@dataclass(frozen=True)
class ConeBounds:
    upper: Trajectory
    lower: Trajectory


@dataclass(frozen=True)
class PrismBounds:
    upper: Trajectory | None
    lower: Trajectory | None
    feasible: bool


def upper_cone_segments(loc: float, v: float, t: float,
                        lim: VehicleLimits) -> tuple[QuadraticSegment, ...]:
    """Raw segments of the fastest curve through (loc, v, t): stand still
    at the farthest-back compatible position, full throttle through the
    point up to the speed limit, cruise."""
    up_hold = loc - v * v / (2.0 * lim.a_max)
    t0 = t - v / lim.a_max
    t1 = t + (lim.v_max - v) / lim.a_max
    up_cruise = loc + (lim.v_max * lim.v_max - v * v) / (2.0 * lim.a_max)
    return (
        QuadraticSegment.from_anchor(up_hold, 0.0, 0.0, t0, -INF),
        QuadraticSegment.from_anchor(up_hold, 0.0, lim.a_max, t0, t1),
        QuadraticSegment.from_anchor(up_cruise, lim.v_max, 0.0, t1, INF),
    )


def lower_cone_segments(loc: float, v: float, t: float,
                        lim: VehicleLimits) -> tuple[QuadraticSegment, ...]:
    """Raw segments of the slowest curve through (loc, v, t): fastest
    possible approach from behind, full brake through the point down to
    rest, hold.  (The braking piece is one parabola spanning both sides
    of the anchor.)"""
    theta = (v - lim.v_max) / lim.a_min  # >= 0: backward fast-approach span
    t0 = t - theta
    t1 = t - v / lim.a_min
    lo_entry = loc - (v * v - lim.v_max * lim.v_max) / (2.0 * lim.a_min)
    lo_hold = loc - v * v / (2.0 * lim.a_min)
    return (
        QuadraticSegment.from_anchor(lo_entry, lim.v_max, 0.0, t0, -INF),
        QuadraticSegment.from_anchor(lo_entry, lim.v_max, lim.a_min, t0, t1),
        QuadraticSegment.from_anchor(lo_hold, 0.0, 0.0, t1, INF),
    )


def curves_min_gap(upper_segs, lower_segs, dx: float = 0.0, dt: float = 0.0) -> float:
    """min over t of (upper shifted by (dx, dt)) - lower, without building
    trajectory objects; the bread and butter of the pairwise entry test."""
    best = INF
    for s1 in upper_segs:
        s1s = s1.shifted(dx, dt) if dx or dt else s1
        for s2 in lower_segs:
            d = _pair_distance(s1s, s2, -INF, INF)
            if d < best:
                best = d
    return best


def cone_bounds(pt: StatePoint, lim: VehicleLimits) -> ConeBounds:
    """Upper and lower boundary curves of the cone through ``pt``."""
    if not pt.is_feasible(lim.v_max):
        raise ValueError(f"infeasible state point speed {pt.speed}")
    v = min(max(pt.speed, 0.0), lim.v_max)
    return ConeBounds(
        assemble(upper_cone_segments(pt.loc, v, pt.time, lim)),
        assemble(lower_cone_segments(pt.loc, v, pt.time, lim)))


def _rotate(traj: Trajectory, t_c: float, x_c: float) -> Trajectory:
    segs = tuple(s.rotated(t_c, x_c) for s in reversed(traj.segments))
    return Trajectory(segs, traj.kinked)


def prism_feasible(a: StatePoint, b: StatePoint, lim: VehicleLimits) -> bool:
    """Is there any feasible trajectory through both state points?"""
    ca = cone_bounds(a, lim)
    cb = cone_bounds(b, lim)
    tol = scaled_tol(a.loc, b.loc)
    return (trajectory_distance(cb.upper, ca.lower) >= -tol
            and trajectory_distance(ca.upper, cb.lower) >= -tol)


def prism_bounds(a: StatePoint, b: StatePoint, lim: VehicleLimits) -> PrismBounds:
    """Boundary curves of the prism through ``a`` (earlier) and ``b``.

    The upper bound is the forward construction from ``a`` merging into
    the upper cone curve of ``b`` at extreme rates.  The lower bound is
    obtained exactly by rotating the frame 180 degrees about ``b`` (which
    swaps and negates the acceleration limits), running the same forward
    construction, and rotating back.
    """
    if a.time >= b.time:
        raise ValueError("need a.time < b.time")
    if not prism_feasible(a, b, lim):
        return PrismBounds(None, None, False)
    cb = cone_bounds(b, lim)
    up = forward_process(a, cb.upper, lim.a_max, lim.a_min, lim.v_max)
    rot_lim = VehicleLimits(lim.v_max, -lim.a_min, -lim.a_max,
                            lim.spacing, lim.delay)
    a_rot = StatePoint(2.0 * b.loc - a.loc, a.speed, 2.0 * b.time - a.time)
    ceil_rot = cone_bounds(a_rot, rot_lim).upper
    lo_rot = forward_process(StatePoint(b.loc, b.speed, b.time), ceil_rot,
                             rot_lim.a_max, rot_lim.a_min, rot_lim.v_max)
    lower = _rotate(lo_rot.trajectory, b.time, b.loc) if lo_rot.ok else None
    return PrismBounds(up.trajectory, lower, True)


def pair_entry_ok(lead_entry: tuple[float, float], follow_entry: tuple[float, float],
                  order: int, lim: VehicleLimits, lead_loc: float = 0.0) -> bool:
    """Can safe histories/futures coexist for one leader-follower pair?

    The leader's upper cone curve, shifted down ``order`` jam spacings and
    right ``order`` delays, must stay above the follower's lower cone
    curve over the whole horizon.
    """
    t_m, v_m = lead_entry
    t_n, v_n = follow_entry
    upper = upper_cone_segments(lead_loc, v_m, t_m, lim)
    lower = lower_cone_segments(0.0, v_n, t_n, lim)
    d = curves_min_gap(upper, lower, -order * lim.spacing, order * lim.delay)
    return d >= -scaled_tol(order * lim.spacing)


def first_entry_conflict(entries, lim: VehicleLimits,
                         lead_loc: float = 0.0) -> int | None:
    """Index of the first vehicle whose entry state conflicts with an
    earlier one (no jointly safe trajectories exist), or None."""
    uppers = [upper_cone_segments(lead_loc if m == 0 else 0.0, v, t, lim)
              for m, (t, v) in enumerate(entries)]
    for n in range(1, len(entries)):
        t_n, v_n = entries[n]
        lower = lower_cone_segments(0.0, v_n, t_n, lim)
        for m in range(n):
            k = n - m
            d = curves_min_gap(uppers[m], lower, -k * lim.spacing, k * lim.delay)
            if d < -scaled_tol(k * lim.spacing):
                return n
    return None


def is_proper(bc: BoundaryCondition, lim: VehicleLimits) -> bool:
    """Pairwise entry-condition test guaranteeing a feasible platoon exists.

    For every earlier vehicle m and later vehicle n, the upper cone curve
    of m's entry state, shifted down (n-m) jam spacings and right (n-m)
    delays, must stay above the lower cone curve of n's entry state; all
    entry speeds must respect the speed limit.
    """
    tol = scaled_tol(lim.v_max)
    for v in bc.speeds:
        if not (-tol <= v <= lim.v_max + tol):
            return False
    return first_entry_conflict(bc.entries, lim) is None


def sh_length_threshold(n_vehicles: int, lim: VehicleLimits,
                        brake_back: float | None = None) -> float:
    """Section length above which the signalized planner cannot fail on a
    proper boundary condition (at extreme control rates).

    The backward-pass term appears twice, mirroring the acceleration and
    deceleration room the retiming needs near the stop line.
    """
    ab = lim.a_min if brake_back is None else brake_back
    v2 = lim.v_max * lim.v_max
    return (v2 / (2.0 * lim.a_max) + v2 / (-2.0 * ab) + v2 / (-2.0 * ab)
            + lim.spacing * (n_vehicles - 1))


@dataclass(frozen=True)
class FeasibilityReport:
    proper: bool
    lvp_nonempty: bool
    signalized_nonempty: bool
    length_above_threshold: bool
    lvp_consistent: bool        # proper <=> LVP solvable
    signalized_consistent: bool  # long-section theorem, when applicable


def check_feasibility_theorems(bc: BoundaryCondition, lim: VehicleLimits,
                               length: float, sig: SignalTiming
                               ) -> FeasibilityReport:
    """Run the feasibility equivalences on one instance and report agreement."""
    proper = is_proper(bc, lim)
    lvp = plan_following_parallel(None, bc, lim, lim.a_max, lim.a_min)
    sh = plan_signalized(bc, sig, lim, ControlAccels.extreme(lim), length)
    long_enough = length >= sh_length_threshold(len(bc), lim)
    lvp_ok = proper == lvp.feasible
    sig_ok = (proper == sh.feasible) if long_enough else True
    return FeasibilityReport(proper, lvp.feasible, sh.feasible,
                             long_enough, lvp_ok, sig_ok)
