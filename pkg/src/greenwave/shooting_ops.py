"""Single-move tangency solvers for trajectory construction.

Each operation takes one bounding quadratic segment and a start state and
answers: when should the shooting parabola (acceleration ``a_shoot``
through the start state) hand over to a merging parabola (acceleration
``a_brake``) so that the merge becomes tangent to the bound from below?

Forward and backward variants differ only in the direction of time: the
forward one extends the trajectory later than the start state, the
backward one earlier.  Results are encoded both as a case enum and as the
signed-infinity sentinel times the process layer branches on:

=============  =====================  =====================
case           forward (merge, tang)  backward (merge, tang)
=============  =====================  =====================
infeasible     (-inf, -inf)           (+inf, +inf)
tangent        finite, merge <= tang  finite, tang <= merge
no contact     (+inf, +inf)           (-inf, -inf)
=============  =====================  =====================

"infeasible" means even immediate braking at ``a_brake`` from the start
state crosses the bound; "no contact" means no valid tangency lands on
this particular bound segment and the caller should keep scanning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .kinematics import (EPS, INF, QuadraticSegment, StatePoint,
                         segment_distance, scaled_tol)


class ShotCase(Enum):
    INFEASIBLE = "infeasible"
    TANGENT = "tangent"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class ShootResult:
    merge_time: float
    tangent_time: float
    case: ShotCase

    @property
    def ok(self) -> bool:
        return self.case is ShotCase.TANGENT


_FWD_FAIL = ShootResult(-INF, -INF, ShotCase.INFEASIBLE)
_FWD_NONE = ShootResult(INF, INF, ShotCase.UNBOUNDED)
_BWD_FAIL = ShootResult(INF, INF, ShotCase.INFEASIBLE)
_BWD_NONE = ShootResult(-INF, -INF, ShotCase.UNBOUNDED)


def _gap_coeffs(bound: QuadraticSegment, start: StatePoint, a_shoot: float):
    """Shift the origin to the start time and expand bound - merge.

    With ``m`` the merge time offset, the vertical gap from the merging
    parabola to the bound is the quadratic

        g(t) = 0.5*(a' - a_brake)*t^2 + (w - k*m)*t + c + 0.5*k*m^2

    where k = a_shoot - a_brake, a' is the bound's acceleration, and w, c
    depend only on the geometry.  (Derived by direct expansion; note the
    linear-in-anchor term of c carries the bound's *speed*.)
    """
    rb = bound.ref - start.time
    w = bound.speed - start.speed - bound.accel * rb
    c = 0.5 * bound.accel * rb * rb - bound.speed * rb + bound.loc - start.loc
    return w, c


def _tangency_candidates(bound: QuadraticSegment, start: StatePoint,
                         a_shoot: float, a_brake: float):
    """Merge-time candidates (time offsets from the start) with tangency.

    Returns a list of (merge_offset, tangent_offset) pairs, or None when
    the gap is affine in time (bound accel equals ``a_brake``) and the
    degenerate branch must be used instead.
    """
    w, c = _gap_coeffs(bound, start, a_shoot)
    k = a_shoot - a_brake
    da = bound.accel - a_brake
    v_tol = EPS * max(1.0, abs(bound.speed), abs(start.speed))
    x_tol = scaled_tol(bound.loc, start.loc)
    if abs(da) <= EPS * max(1.0, abs(bound.accel), abs(a_brake)):
        return None  # affine gap: ride-the-bound branch
    if da < 0.0:
        return []  # bound brakes harder than the merge; no tangency possible
    alpha = k * (a_shoot - bound.accel)
    beta = -2.0 * k * w
    gamma = w * w - da * 2.0 * c
    if abs(alpha) <= EPS * max(1.0, k * k, abs(a_shoot * bound.accel)):
        if abs(beta) <= EPS * max(1.0, abs(k) * max(1.0, abs(w))):
            # alpha = beta = 0: the shooting parabola parallels the bound
            if abs(w) <= v_tol and abs(c) <= x_tol:
                return [(0.0, 0.0)]  # identical parabolas: already riding it
            return []
        roots = (-gamma / beta,)
    else:
        disc = beta * beta - 4.0 * alpha * gamma
        if disc < 0.0:
            if disc >= -EPS * max(beta * beta, abs(4.0 * alpha * gamma)):
                disc = 0.0  # grazing tangency
            else:
                return []
        sq = math.sqrt(disc)
        roots = ((-beta - sq) / (2.0 * alpha), (-beta + sq) / (2.0 * alpha))
    return [(m, (w - k * m) / (-da)) for m in roots]


def fso(bound: QuadraticSegment, start: StatePoint,
        a_shoot: float, a_brake: float) -> ShootResult:
    """Forward shooting operation against one bound segment.

    ``a_shoot`` is the acceleration of the segment being extended from the
    start state (it may be negative when re-merging an existing segment);
    ``a_brake`` < 0 is the acceleration of the merging segment.
    """
    t_tol = scaled_tol(start.time, bound.t0, bound.t1)
    brake_ray = QuadraticSegment.from_anchor(
        start.loc, start.speed, a_brake, start.time, INF)
    if segment_distance(bound, brake_ray) < -scaled_tol(bound.loc, start.loc):
        return _FWD_FAIL
    lo_w = max(bound.t0 - start.time, 0.0)
    hi_w = bound.t1 - start.time
    if hi_w < lo_w - t_tol:
        return _FWD_NONE
    cands = _tangency_candidates(bound, start, a_shoot, a_brake)
    if cands is None:
        return _ride_branch(bound, start, a_shoot, a_brake, lo_w, hi_w,
                            forward=True)
    picked = None
    for m, tp in cands:
        if (m >= -t_tol and tp >= m - t_tol
                and lo_w - t_tol <= tp <= hi_w + t_tol):
            if picked is None or m < picked[0]:
                picked = (m, tp)
    if picked is None:
        return _FWD_NONE
    m = max(picked[0], 0.0)
    tp = min(max(picked[1], m, lo_w), hi_w)
    return ShootResult(start.time + m, start.time + tp, ShotCase.TANGENT)


def bso(bound: QuadraticSegment, start: StatePoint,
        a_shoot: float, a_brake: float) -> ShootResult:
    """Backward shooting operation: mirror of :func:`fso` in reversed time."""
    t_tol = scaled_tol(start.time, bound.t0, bound.t1)
    brake_ray = QuadraticSegment.from_anchor(
        start.loc, start.speed, a_brake, start.time, -INF)
    if segment_distance(bound, brake_ray) < -scaled_tol(bound.loc, start.loc):
        return _BWD_FAIL
    lo_w = bound.t0 - start.time
    hi_w = min(bound.t1 - start.time, 0.0)
    if hi_w < lo_w - t_tol:
        return _BWD_NONE
    cands = _tangency_candidates(bound, start, a_shoot, a_brake)
    if cands is None:
        return _ride_branch(bound, start, a_shoot, a_brake, lo_w, hi_w,
                            forward=False)
    picked = None
    for m, tp in cands:
        if (m <= t_tol and tp <= m + t_tol
                and lo_w - t_tol <= tp <= hi_w + t_tol):
            if picked is None or m > picked[0]:
                picked = (m, tp)
    if picked is None:
        return _BWD_NONE
    m = min(picked[0], 0.0)
    tp = min(max(picked[1], lo_w), m, hi_w)
    return ShootResult(start.time + m, start.time + tp, ShotCase.TANGENT)


def _ride_branch(bound, start, a_shoot, a_brake, lo_w, hi_w, forward):
    """Degenerate case: the bound accelerates exactly at ``a_brake``.

    The merge can only coincide with the bound's own parabola, so the
    merge time must null both the speed gap and the position gap; the
    hand-over to the bound then happens at the window edge.
    """
    w, c = _gap_coeffs(bound, start, a_shoot)
    k = a_shoot - a_brake
    x_tol = 1e3 * scaled_tol(bound.loc, start.loc)
    t_tol = scaled_tol(start.time, bound.t0, bound.t1)
    none = _FWD_NONE if forward else _BWD_NONE
    if abs(k) <= EPS * max(1.0, abs(a_shoot), abs(a_brake)):
        # everything at the same acceleration: need identical parabolas
        if abs(w) <= EPS * max(1.0, abs(start.speed)) and abs(c) <= x_tol:
            m = 0.0
        else:
            return none
    else:
        m = w / k
        if abs(c + 0.5 * k * m * m) > x_tol:
            return none
    edge = hi_w if forward else lo_w
    if forward and lo_w - t_tol <= m <= hi_w + t_tol:
        return ShootResult(start.time + max(m, 0.0), start.time + edge,
                           ShotCase.TANGENT)
    if not forward and lo_w - t_tol <= m <= hi_w + t_tol:
        return ShootResult(start.time + min(m, 0.0), start.time + edge,
                           ShotCase.TANGENT)
    return none
