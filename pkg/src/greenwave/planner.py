"""Platoon construction algorithms and the feasibility validator.

Three entry points:

* :func:`plan_signalized` builds trajectories vehicle by vehicle for a
  signalized section: forward construction under the predecessor's
  safety shadow, then a backward retiming pass whenever the unconstrained
  exit would fall into a red phase.
* :func:`plan_following` solves the lead-vehicle problem (fixed lead, no
  signal) with the same sequential forward construction.
* :func:`plan_following_parallel` computes every follower independently
  from closed-form templates and shadow ceilings; its output matches the
  sequential chain exactly, which makes it embarrassingly parallel.

:func:`validate_platoon` re-checks any result against all constraints
(kinematic bounds, entry/exit boundary conditions, car-following safety)
and returns the violations found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .kinematics import (INF, StatePoint, Trajectory, UnreachedLocation,
                         scaled_tol, trajectory_distance_argmin)
from .shooting_proc import backward_process, forward_process, forward_process_multi


# ---------------------------------------------------------------------------
# configuration types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalTiming:
    """Fixed-time signal: green [m*C, m*C+G) then red, repeating from t=0.

    ``phases`` optionally overrides the uniform pattern with an explicit
    (green, red) list; the list repeats cyclically once exhausted.
    """

    green: float
    red: float
    phases: tuple[tuple[float, float], ...] | None = None

    @classmethod
    def all_green(cls) -> "SignalTiming":
        return cls(green=INF, red=0.0)

    @property
    def cycle(self) -> float:
        return self.green + self.red

    def next_green(self, t: float) -> float:
        """Earliest green instant at or after ``t``."""
        if math.isinf(self.green):
            return t
        if self.phases is None:
            if t < 0.0:
                return 0.0
            m = math.floor(t / self.cycle)
            r = t - m * self.cycle
            return t if r < self.green else (m + 1) * self.cycle
        if t < 0.0:
            return 0.0
        period = sum(g + r for g, r in self.phases)
        cursor = math.floor(t / period) * period
        for g, r in self.phases:
            if t < cursor + g:
                return max(t, cursor)
            cursor += g
            if t < cursor + r:
                return cursor + r
            cursor += r
        return cursor

    def is_green(self, t: float, tol: float = 1e-9) -> bool:
        return abs(self.next_green(t) - t) <= tol * max(1.0, abs(t))


@dataclass(frozen=True)
class VehicleLimits:
    v_max: float
    a_max: float
    a_min: float
    spacing: float
    delay: float

    def __post_init__(self):
        if not (self.a_max > 0.0 > self.a_min):
            raise ValueError("need a_max > 0 > a_min")
        if self.v_max <= 0.0 or self.spacing <= 0.0 or self.delay < 0.0:
            raise ValueError("bad vehicle limits")

    def scaled(self, gamma: float) -> "VehicleLimits":
        return replace(self, a_max=gamma * self.a_max, a_min=gamma * self.a_min)


@dataclass(frozen=True)
class ControlAccels:
    accel_fwd: float
    brake_fwd: float
    accel_back: float
    brake_back: float

    def __post_init__(self):
        if not (self.accel_fwd > 0.0 and self.accel_back > 0.0):
            raise ValueError("forward/backward accelerations must be positive")
        if not (self.brake_fwd < 0.0 and self.brake_back < 0.0):
            raise ValueError("forward/backward decelerations must be negative")

    @classmethod
    def extreme(cls, lim: VehicleLimits) -> "ControlAccels":
        return cls(lim.a_max, lim.a_min, lim.a_max, lim.a_min)

    def check_within(self, lim: VehicleLimits) -> None:
        if self.accel_fwd > lim.a_max or self.accel_back > lim.a_max:
            raise ValueError("control acceleration exceeds vehicle limit")
        if self.brake_fwd < lim.a_min or self.brake_back < lim.a_min:
            raise ValueError("control deceleration exceeds vehicle limit")


@dataclass(frozen=True)
class BoundaryCondition:
    """Per-vehicle entry times and speeds, in platoon order."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self):
        times = [t for t, _ in self.entries]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("entry times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.entries)

    @property
    def speeds(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.entries)

    def tail(self) -> "BoundaryCondition":
        return BoundaryCondition(self.entries[1:])


@dataclass(frozen=True)
class VehicleDiag:
    bsp_used: bool = False
    exit_time: float | None = None
    exit_speed: float | None = None


@dataclass(frozen=True)
class PlatoonResult:
    trajectories: tuple[Trajectory, ...]
    feasible: bool
    diagnostics: tuple[VehicleDiag, ...] = ()
    failure_reason: str | None = None
    failed_vehicle: int | None = None
    partial: tuple[Trajectory, ...] = ()

    def __bool__(self) -> bool:
        return self.feasible


def _failure(reason: str, vehicle: int, partial: list[Trajectory],
             diags: list[VehicleDiag]) -> PlatoonResult:
    return PlatoonResult((), False, tuple(diags), reason, vehicle, tuple(partial))


# ---------------------------------------------------------------------------
# elementary queries
# ---------------------------------------------------------------------------


def exit_time(traj: Trajectory, length: float) -> tuple[float, float]:
    """Time and speed at which the trajectory first passes ``length``."""
    t = traj.inverse(length)
    return t, traj.speed(t)


# ---------------------------------------------------------------------------
# the three planners
# ---------------------------------------------------------------------------


def plan_signalized(bc: BoundaryCondition, sig: SignalTiming, lim: VehicleLimits,
                    ctrl: ControlAccels, length: float) -> PlatoonResult:
    """Sequential construction for the signalized section.

    Vehicle n is first built forward under the shadow of vehicle n-1; if
    its exit time lands in red, the exit is moved to the next green start
    and a backward pass reshapes the approach.  Any unavoidable conflict
    aborts with an empty result (partial trajectories are kept in the
    diagnostics for inspection).
    """
    ctrl.check_within(lim)
    trajs: list[Trajectory] = []
    diags: list[VehicleDiag] = []
    prev: Trajectory | None = None
    for n, (t_n, v_n) in enumerate(bc.entries):
        ceiling = prev.shadow(1, lim.spacing, lim.delay) if prev is not None else None
        fwd = forward_process(StatePoint(0.0, v_n, t_n), ceiling,
                              ctrl.accel_fwd, ctrl.brake_fwd, lim.v_max)
        if not fwd.ok:
            return _failure("fsp_failed", n, trajs, diags)
        t_l, v_l = exit_time(fwd.trajectory, length)
        g = sig.next_green(t_l)
        if g - t_l <= scaled_tol(t_l):
            p_n = fwd.trajectory
            diags.append(VehicleDiag(False, t_l, v_l))
        else:
            if abs(v_l - lim.v_max) <= scaled_tol(lim.v_max):
                v_l = lim.v_max
            section, extended = backward_process(
                StatePoint(length, v_l, g), fwd.trajectory,
                ctrl.accel_back, ctrl.brake_back,
                ctrl.accel_fwd, ctrl.brake_fwd, lim.v_max)
            if section is None or extended is None:
                return _failure("bsp_below_zero", n, trajs, diags)
            start_loc = section.value(section.start_time)
            if start_loc < -scaled_tol(length):
                return _failure("bsp_below_zero", n, trajs, diags)
            p_n = extended
            diags.append(VehicleDiag(True, g, v_l))
        trajs.append(p_n)
        prev = p_n
    return PlatoonResult(tuple(trajs), True, tuple(diags))


def _lead_entries(lead: Trajectory, bc: BoundaryCondition):
    t0 = lead.start_time
    return ((t0, lead.speed(t0)), *bc.entries)


def plan_following(lead: Trajectory | None, bc: BoundaryCondition,
                   lim: VehicleLimits, a_accel: float, a_brake: float
                   ) -> PlatoonResult:
    """Sequential lead-vehicle-problem chain (no signal, fixed lead).

    When ``lead`` is None, the first boundary entry's unconstrained
    template becomes the lead and ``bc`` covers all vehicles; otherwise
    ``bc`` covers the followers only.  Entry states that rule out safe
    shared histories fail up front (safety binds at all times, including
    before the section), so emptiness coincides exactly with the
    pairwise entry test.
    """
    from .timegeo import first_entry_conflict

    if lead is None:
        first = bc.entries[0]
        lead = forward_process(StatePoint(0.0, first[1], first[0]), None,
                               a_accel, a_brake, lim.v_max).trajectory
        bc = bc.tail()
    trajs = [lead]
    diags = [VehicleDiag()]
    clash = first_entry_conflict(_lead_entries(lead, bc), lim,
                                 lead.value(lead.start_time))
    if clash is not None:
        return _failure("entry_conflict", clash, trajs, diags)
    for n, (t_n, v_n) in enumerate(bc.entries, start=1):
        ceiling = trajs[-1].shadow(1, lim.spacing, lim.delay)
        fwd = forward_process(StatePoint(0.0, v_n, t_n), ceiling,
                              a_accel, a_brake, lim.v_max)
        if not fwd.ok:
            return _failure("fsp_failed", n, trajs, diags)
        trajs.append(fwd.trajectory)
        diags.append(VehicleDiag())
    return PlatoonResult(tuple(trajs), True, tuple(diags))


def plan_following_parallel(lead: Trajectory | None, bc: BoundaryCondition,
                            lim: VehicleLimits, a_accel: float, a_brake: float
                            ) -> PlatoonResult:
    """Per-vehicle independent variant of :func:`plan_following`.

    Vehicle n is built against the shadow ceilings of all predecessors'
    unconstrained templates (the lead keeps its given trajectory), so no
    vehicle needs another's computed result.  Output is identical to the
    sequential chain, including the entry-consistency failure mode.
    """
    from .timegeo import first_entry_conflict

    if lead is None:
        first = bc.entries[0]
        lead = forward_process(StatePoint(0.0, first[1], first[0]), None,
                               a_accel, a_brake, lim.v_max).trajectory
        bc = bc.tail()
    clash = first_entry_conflict(_lead_entries(lead, bc), lim,
                                 lead.value(lead.start_time))
    if clash is not None:
        return _failure("entry_conflict", clash, [lead], [VehicleDiag()])
    templates = [lead]
    for t_n, v_n in bc.entries:
        templates.append(forward_process(StatePoint(0.0, v_n, t_n), None,
                                         a_accel, a_brake, lim.v_max).trajectory)
    trajs = [lead]
    diags = [VehicleDiag()]
    for n, (t_n, v_n) in enumerate(bc.entries, start=1):
        ceilings = [templates[m].shadow(n - m, lim.spacing, lim.delay)
                    for m in range(n)]
        p_n = forward_process_multi(StatePoint(0.0, v_n, t_n), ceilings,
                                    a_accel, a_brake, lim.v_max)
        if p_n is None:
            return _failure("fsp_failed", n, trajs, diags)
        trajs.append(p_n)
        diags.append(VehicleDiag())
    return PlatoonResult(tuple(trajs), True, tuple(diags))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    vehicle: int
    kind: str
    time: float
    value: float

    def __str__(self) -> str:
        return (f"vehicle {self.vehicle}: {self.kind} at t={self.time:.3f}"
                f" (value {self.value:.6g})")


TOL = 1e-6


def validate_platoon(result: PlatoonResult, bc: BoundaryCondition,
                     sig: SignalTiming | None, lim: VehicleLimits,
                     length: float | None, grid_step: float = 0.05
                     ) -> list[Violation]:
    """Check a platoon against every constraint; empty list means pass.

    Speed/acceleration bounds are checked analytically at segment
    endpoints (speed is affine per segment) and cross-checked on a dense
    grid; the safety separation uses the analytic distance functional
    with the grid as a redundant check.  Pass ``sig=None`` to skip the
    exit condition (lead-vehicle problem).
    """
    out: list[Violation] = []
    trajs = result.trajectories
    if len(trajs) != len(bc.entries):
        raise ValueError("boundary condition size mismatch")
    for n, (traj, (t_n, v_n)) in enumerate(zip(trajs, bc.entries)):
        x0, s0, _ = traj.eval(t_n)
        if abs(x0 - 0.0) > TOL:
            out.append(Violation(n, "entry_position", t_n, x0))
        if abs(s0 - v_n) > TOL:
            out.append(Violation(n, "entry_speed", t_n, s0))
        for seg in traj.segments:
            if not (lim.a_min - TOL <= seg.accel <= lim.a_max + TOL):
                out.append(Violation(n, "acceleration", seg.t0, seg.accel))
            for t_edge in (seg.t0, seg.t1):
                if math.isfinite(t_edge):
                    v_edge = seg.speed_at(t_edge)
                    if not (-TOL <= v_edge <= lim.v_max + TOL):
                        out.append(Violation(n, "speed", t_edge, v_edge))
        t_exit = None
        if length is not None:
            try:
                t_exit, _ = exit_time(traj, length)
            except UnreachedLocation:
                out.append(Violation(n, "exit_unreached", INF, length))
            if t_exit is not None and sig is not None:
                if abs(sig.next_green(t_exit) - t_exit) > TOL:
                    out.append(Violation(n, "exit_in_red", t_exit, t_exit))
        # dense-grid cross-check of the speed bounds
        hi = t_exit + 5.0 if t_exit is not None else _finite_horizon(traj)
        ts = np.arange(t_n, hi, grid_step)
        if len(ts):
            vs = traj.speed_array(ts)
            bad = np.where((vs < -TOL) | (vs > lim.v_max + TOL))[0]
            if len(bad):
                k = int(bad[0])
                out.append(Violation(n, "speed_grid", float(ts[k]), float(vs[k])))
        if n > 0:
            shadow = trajs[n - 1].shadow(1, lim.spacing, lim.delay)
            d, t_min = trajectory_distance_argmin(shadow, traj, (t_n, INF))
            if d < -TOL:
                out.append(Violation(n, "safety", t_min, d))
            lo = max(t_n, shadow.start_time)
            ts = np.arange(lo, max(hi, lo + grid_step), grid_step)
            if len(ts):
                gap = shadow.value_array(ts) - traj.value_array(ts)
                bad = np.where(gap < -TOL)[0]
                if len(bad):
                    k = int(bad[0])
                    out.append(Violation(n, "safety_grid", float(ts[k]), float(gap[k])))
    return out


def _finite_horizon(traj: Trajectory) -> float:
    if math.isfinite(traj.end_time):
        return traj.end_time
    return traj.segments[-1].t0 + 10.0
