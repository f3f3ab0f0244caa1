"""Manual-driving benchmark: intelligent-driver car following with
delayed leader information.

The delay applies to communicated data, mirroring the safety rule used
throughout the package (leader position one delay ago versus own
position now): each driver knows its own state instantly but reacts to
the predecessor's state one delay old.  Near the stop line the leader is
replaced by a virtual vehicle parked one jam spacing past it whenever
(a) the vehicle is approaching within comfort-braking range, (b) the
signal is in the yellow-before-red through red window, and (c) even full
throttle would cross the line outside a green -- unless the real
predecessor is closer still.

Fixed-step integration: acceleration from the states above, speed update
clamped to [0, v_max], position advanced with the matching
piecewise-constant acceleration so the emitted quadratic segments
reproduce the simulation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import INF, StatePoint, UnreachedLocation, assemble, segment
from .planner import (BoundaryCondition, PlatoonResult, SignalTiming,
                      VehicleDiag, VehicleLimits)
from .timegeo import cone_bounds


class CollisionError(RuntimeError):
    def __init__(self, vehicle: int, time: float):
        super().__init__(f"vehicle {vehicle} closed its gap at t={time:.2f}")
        self.vehicle = vehicle
        self.time = time


@dataclass(frozen=True)
class IdmParams:
    veh_len: float = 5.0         # physical vehicle length
    comfort_brake: float = 1.67  # comfortable deceleration, > 0
    yellow: float = 3.0          # yellow shown before each red phase

    def __post_init__(self):
        if self.comfort_brake <= 0.0:
            raise ValueError("comfort_brake must be positive")


def idm_accel(state: StatePoint, front_pos: float, front_speed: float,
              lim: VehicleLimits, p: IdmParams) -> float:
    """Acceleration command for a vehicle following the given frontier.

    Desired spacing grows with speed (one delay of headway) and with the
    closing rate; the command is the relative shortfall of the actual
    gap, clamped so the vehicle neither exceeds the speed limit nor
    rolls backward.
    """
    gap = front_pos - state.loc - p.veh_len
    if gap <= 0.0:
        raise ValueError("non-positive gap")
    if math.isinf(gap):
        raw = lim.a_max
    else:
        v = state.speed
        s_star = ((lim.spacing - p.veh_len) + v * lim.delay
                  + v * (v - front_speed) / math.sqrt(lim.a_max * p.comfort_brake))
        raw = lim.a_max * (1.0 - s_star / gap)
    hi = 0.0 if state.speed >= lim.v_max else lim.a_max
    lo = 0.0 if state.speed <= 0.0 else lim.a_min
    return max(min(raw, hi), lo)


def _yellow_or_red(sig: SignalTiming, t: float, yellow: float) -> bool:
    """Inside [green end - yellow, cycle end) of some cycle."""
    if math.isinf(sig.green):
        return False
    if t < 0.0:
        return False
    u = t - math.floor(t / sig.cycle) * sig.cycle
    return u >= sig.green - yellow


def frontier(state: StatePoint, delayed_leader: StatePoint | None,
             sig: SignalTiming, length: float, lim: VehicleLimits,
             p: IdmParams) -> tuple[float, float]:
    """Position and speed of whatever the vehicle is following."""
    lead = (delayed_leader.loc, delayed_leader.speed) \
        if delayed_leader is not None else (INF, lim.v_max)
    dist = length - state.loc
    if 0.0 <= dist < lim.v_max ** 2 / (2.0 * p.comfort_brake) \
            and _yellow_or_red(sig, state.time, p.yellow):
        reach = cone_bounds(state, lim).upper
        try:
            t_cross = reach.inverse(length)
        except UnreachedLocation:
            t_cross = INF
        if not math.isfinite(t_cross) or not sig.is_green(t_cross):
            wall = length + lim.spacing
            if wall < lead[0]:
                return wall, 0.0
    return lead


def simulate_idm(bc: BoundaryCondition, sig: SignalTiming, lim: VehicleLimits,
                 p: IdmParams, length: float, dt: float = 0.05,
                 horizon_cap: float = 3600.0) -> PlatoonResult:
    """Fixed-step benchmark run; stops 10 s after the last exit.

    The delay must be an integer number of steps.  Vehicles are injected
    at the first grid time at or after their entry, with the pre-entry
    history extrapolated backward at the entry speed for delayed lookups.
    """
    n_delay = round(lim.delay / dt)
    if abs(n_delay * dt - lim.delay) > 1e-9:
        raise ValueError("delay must be a multiple of the time step")
    n_veh = len(bc)
    t0 = bc.times[0]
    max_steps = int(math.ceil(horizon_cap / dt))
    pos = np.full((max_steps + 1, n_veh), np.nan)
    spd = np.full((max_steps + 1, n_veh), np.nan)
    entry_step = [int(math.ceil((t - t0) / dt - 1e-9)) for t in bc.times]
    exit_t: list[float | None] = [None] * n_veh

    def delayed_leader(n: int, k: int) -> StatePoint | None:
        if n == 0:
            return None
        kd = k - n_delay
        t_d = t0 + kd * dt
        if kd < entry_step[n - 1] or kd < 0:
            t_ent, v_ent = bc.entries[n - 1]
            return StatePoint(v_ent * (t_d - t_ent), v_ent, t_d)
        return StatePoint(pos[kd, n - 1], spd[kd, n - 1], t_d)

    last_step = max_steps
    stop_step = None
    for k in range(max_steps):
        t = t0 + k * dt
        for n in range(n_veh):
            if k < entry_step[n]:
                continue
            if k == entry_step[n]:
                t_ent, v_ent = bc.entries[n]
                pos[k, n] = v_ent * (t - t_ent)
                spd[k, n] = v_ent
            me = StatePoint(pos[k, n], spd[k, n], t)
            f_pos, f_spd = frontier(me, delayed_leader(n, k), sig, length, lim, p)
            if f_pos - me.loc - p.veh_len <= 0.0:
                raise CollisionError(n, t)
            a = idm_accel(me, f_pos, f_spd, lim, p)
            v_new = min(max(spd[k, n] + a * dt, 0.0), lim.v_max)
            a_eff = (v_new - spd[k, n]) / dt
            pos[k + 1, n] = pos[k, n] + spd[k, n] * dt + 0.5 * a_eff * dt * dt
            spd[k + 1, n] = v_new
            if exit_t[n] is None and pos[k + 1, n] >= length:
                frac = (length - pos[k, n]) / (pos[k + 1, n] - pos[k, n])
                exit_t[n] = t + frac * dt
        if stop_step is None and all(e is not None for e in exit_t):
            stop_step = min(max_steps, k + 1 + int(10.0 / dt))
        if stop_step is not None and k + 1 >= stop_step:
            last_step = stop_step
            break

    trajs, diags = [], []
    for n in range(n_veh):
        ks = np.arange(entry_step[n], last_step)
        segs = [segment(pos[k, n], spd[k, n], (spd[k + 1, n] - spd[k, n]) / dt,
                        t0 + k * dt, t0 + (k + 1) * dt) for k in ks]
        trajs.append(assemble(segs))
        v_exit = None
        if exit_t[n] is not None:
            kx = min(int((exit_t[n] - t0) / dt), last_step - 1)
            v_exit = float(spd[kx, n])
        diags.append(VehicleDiag(False, exit_t[n], v_exit))
    return PlatoonResult(tuple(trajs), all(e is not None for e in exit_t),
                         tuple(diags))
