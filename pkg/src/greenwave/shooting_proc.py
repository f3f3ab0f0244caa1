"""Whole-trajectory constructors built from single shooting moves.

``forward_process`` grows a trajectory from an entry state: accelerate to
the speed limit, cruise, and if a ceiling curve (typically a leader's
safety shadow) gets in the way, insert a braking segment tangent to it
and ride the ceiling from the touch point on.  ``backward_process`` is
the mirror image used to retime an exit: shoot backward from the exit
state (braking backward, possibly through a standstill hold) until a
merging segment becomes tangent to the already-built forward trajectory.

``merge_into`` and ``forward_process_multi`` generalize the forward
construction to fold a whole series of ceiling trajectories one by one,
which lets every vehicle of a platoon be built independently from
closed-form templates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import (INF, ContinuityError, QuadraticSegment, StatePoint,
                         Trajectory, assemble, scaled_tol, segment)
from .shooting_ops import ShotCase, bso, fso


@dataclass(frozen=True)
class ProcessResult:
    trajectory: Trajectory | None
    merge_time: float
    tangent_time: float

    @property
    def ok(self) -> bool:
        return self.trajectory is not None


def _check_touch(tag: str, x1: float, v1: float, x2: float, v2: float) -> None:
    if abs(x1 - x2) > 1e3 * scaled_tol(x1, x2) or abs(v1 - v2) > 1e3 * scaled_tol(v1, v2):
        raise ContinuityError(
            f"{tag}: splice residual dx={x1 - x2:.3g} dv={v1 - v2:.3g}")


def forward_process(entry: StatePoint, ceiling: Trajectory | None,
                    a_accel: float, a_brake: float, v_max: float) -> ProcessResult:
    """Forward shooting from an entry state under an optional ceiling.

    Empty ceiling yields the template: accelerate at ``a_accel`` to
    ``v_max`` then cruise.  Otherwise the ceiling's segments are scanned
    in time order for the first valid tangency of a ``a_brake`` merging
    segment; the result splices template head, merge and ceiling tail.
    Returns an empty result when even immediate braking cannot avoid
    crossing the ceiling.
    """
    v0 = entry.speed
    if v0 > v_max + scaled_tol(v_max) or v0 < -scaled_tol(v_max):
        raise ValueError(f"entry speed {v0} outside [0, {v_max}]")
    v0 = min(max(v0, 0.0), v_max)
    at_limit = v_max - v0 <= scaled_tol(v_max)
    t_cruise = entry.time if at_limit else entry.time + (v_max - v0) / a_accel
    x_cruise = entry.loc if at_limit else \
        entry.loc + 0.5 * (v_max * v_max - v0 * v0) / a_accel

    shot = None
    if ceiling is not None:
        for seg in ceiling.segments:
            if seg.t1 <= entry.time:
                continue
            if at_limit:
                res = fso(seg, StatePoint(entry.loc, v_max, entry.time), 0.0, a_brake)
            else:
                res = fso(seg, StatePoint(entry.loc, v0, entry.time), a_accel, a_brake)
                if res.case is not ShotCase.INFEASIBLE and res.merge_time > t_cruise:
                    res = fso(seg, StatePoint(x_cruise, v_max, t_cruise), 0.0, a_brake)
            if res.case is ShotCase.INFEASIBLE:
                return ProcessResult(None, -INF, -INF)
            if res.ok:
                shot = (res.merge_time, res.tangent_time, seg)
                break

    if shot is None:
        segs = []
        if not at_limit:
            segs.append(segment(entry.loc, v0, a_accel, entry.time, t_cruise))
        segs.append(segment(x_cruise, v_max, 0.0, t_cruise, INF))
        return ProcessResult(assemble(segs), INF, INF)

    t_m, t_p, seg = shot
    segs = []
    if not at_limit and t_cruise > entry.time:
        segs.append(segment(entry.loc, v0, a_accel, entry.time, min(t_m, t_cruise)))
    if t_m > t_cruise:
        segs.append(segment(x_cruise, v_max, 0.0, t_cruise, t_m))
    if t_m <= t_cruise and not at_limit:
        x_m = entry.loc + v0 * (t_m - entry.time) + 0.5 * a_accel * (t_m - entry.time) ** 2
        v_m = v0 + a_accel * (t_m - entry.time)
    else:
        x_m = x_cruise + v_max * (t_m - t_cruise)
        v_m = v_max
    merge = segment(x_m, v_m, a_brake, t_m, t_p)
    _check_touch("forward merge", merge.value(t_p), merge.speed_at(t_p),
                 seg.value(t_p), seg.speed_at(t_p))
    segs.append(merge)
    segs.append(segment(seg.value(t_p), seg.speed_at(t_p), seg.accel, t_p, seg.t1))
    k = ceiling.segments.index(seg)
    segs.extend(ceiling.segments[k + 1:])
    return ProcessResult(assemble(segs), t_m, t_p)


def backward_process(exit_state: StatePoint, forward: Trajectory,
                     a_accel_b: float, a_brake_b: float,
                     a_accel_f: float, a_brake_f: float,
                     v_max: float) -> tuple[Trajectory | None, Trajectory | None]:
    """Backward shooting from an exit state into the forward trajectory.

    Returns ``(section, extended)``: the backward section spanning from
    the touch point on ``forward`` to the exit state (with a standstill
    hold inserted when the retiming exceeds what braking absorbs), and
    the full trajectory [forward head, section, onward continuation].
    The continuation past the exit reuses the forward parameters.
    Both are None when no feasible touch point exists.
    """
    v0 = exit_state.speed
    t_stop = exit_state.time - v0 / a_accel_b
    x_stop = exit_state.loc - 0.5 * v0 * v0 / a_accel_b
    stopped = v0 <= scaled_tol(v_max)

    shot = None
    start_k = len(forward.segments) - 1
    while start_k > 0 and forward.segments[start_k].t0 >= exit_state.time:
        start_k -= 1
    for k in range(start_k, -1, -1):
        seg = forward.segments[k]
        if stopped:
            res = bso(seg, StatePoint(exit_state.loc, 0.0, exit_state.time),
                      0.0, a_brake_b)
        else:
            res = bso(seg, StatePoint(exit_state.loc, v0, exit_state.time),
                      a_accel_b, a_brake_b)
            if res.case is not ShotCase.INFEASIBLE and res.merge_time < t_stop:
                res = bso(seg, StatePoint(x_stop, 0.0, t_stop), 0.0, a_brake_b)
        if res.case is ShotCase.INFEASIBLE:
            return None, None
        if res.ok:
            shot = (res.merge_time, res.tangent_time, seg)
            break
    if shot is None:
        return None, None

    t_m, t_p, seg = shot
    section = []
    if t_m < t_stop:
        section.append(segment(x_stop, 0.0, 0.0, t_m, t_stop))
    if not stopped and t_stop < exit_state.time:
        t_ma = max(t_m, t_stop)
        d = exit_state.time - t_ma
        v_ma = v0 - a_accel_b * d
        x_ma = exit_state.loc - v0 * d + 0.5 * a_accel_b * d * d
        section.append(segment(x_ma, v_ma, a_accel_b, t_ma, exit_state.time))
    x_p, v_p = seg.value(t_p), seg.speed_at(t_p)
    merge = segment(x_p, v_p, a_brake_b, t_p, t_m)
    if section:
        head = section[0]
        _check_touch("backward merge", merge.value(t_m), merge.speed_at(t_m),
                     head.value(t_m), head.speed_at(t_m))
    else:
        _check_touch("backward merge", merge.value(t_m), merge.speed_at(t_m),
                     exit_state.loc, v0)
    section.insert(0, merge)

    onward = forward_process(exit_state, forward, a_accel_f, a_brake_f, v_max)
    if not onward.ok:
        return assemble(section), None
    head_segs = forward.clip_segments(-INF, t_p)
    extended = assemble(head_segs + section + list(onward.trajectory.segments))
    return assemble(section), extended


def merge_into(bound: Trajectory, traj: Trajectory,
               a_brake: float) -> tuple[float, float]:
    """Merge/touch times for folding ``traj`` under ``bound``.

    Scans the segments of ``traj`` in time order; for each, extends it and
    asks for a tangent braking hand-over onto each segment of ``bound``.
    The first merge time that falls inside its own segment wins.  Returns
    (-inf, -inf) when crossing is unavoidable, (+inf, +inf) when the bound
    never binds.
    """
    for sj in traj.segments:
        start = StatePoint(sj.value(sj.t0) if math.isfinite(sj.t0) else sj.loc,
                           sj.speed_at(sj.t0) if math.isfinite(sj.t0) else sj.speed,
                           sj.t0 if math.isfinite(sj.t0) else sj.ref)
        pad = scaled_tol(sj.t0, sj.t1)
        for sk in bound.segments:
            if sk.t1 <= start.time:
                continue
            res = fso(sk, start, sj.accel, a_brake)
            if res.case is ShotCase.INFEASIBLE:
                return -INF, -INF
            if res.ok and sj.t0 - pad <= res.merge_time <= sj.t1 + pad:
                return res.merge_time, res.tangent_time
    return INF, INF


def forward_process_multi(entry: StatePoint, ceilings: list[Trajectory],
                          a_accel: float, a_brake: float,
                          v_max: float) -> Trajectory | None:
    """Forward construction against a series of ceiling trajectories.

    Starts from the unconstrained template and folds each ceiling in turn
    with :func:`merge_into`.  Returns None as soon as one fold reports
    unavoidable crossing.
    """
    traj = forward_process(entry, None, a_accel, a_brake, v_max).trajectory
    for ceil in ceilings:
        t_m, t_p = merge_into(ceil, traj, a_brake)
        if t_m == -INF:
            return None
        if t_m == INF:
            continue
        x_m, v_m, _ = traj.eval(t_m)
        merge = segment(x_m, v_m, a_brake, t_m, t_p)
        tail = ceil.clip_segments(t_p, INF)
        if tail:
            _check_touch("multi merge", merge.value(t_p), merge.speed_at(t_p),
                         tail[0].value(t_p), tail[0].speed_at(t_p))
        head = traj.clip_segments(-INF, t_m)
        traj = assemble(head + [merge] + tail)
    return traj
