"""Triangular-fundamental-diagram wave model for the lead-vehicle problem.

Follower n's curve is the pointwise minimum of the free-flow ray from its
entry time and the lead trajectory shifted down (n-1) jam spacings and
right (n-1) delays.  That closed form holds whenever consecutive entry
headways are at least delay + spacing/v_max; otherwise the recursion
(each follower against its immediate predecessor's shift) is used
instead.  Either way the curves are exact piecewise-quadratic envelopes:
position-continuous, speeds allowed to jump.

Also provides the gap metrics against a smooth platoon and the
stationary density/flow relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kinematics import (INF, Trajectory, lower_envelope, segment,
                         trajectory_distance)
from .planner import BoundaryCondition, PlatoonResult, VehicleLimits


@dataclass(frozen=True)
class KwtPlatoon:
    trajectories: tuple[Trajectory, ...]
    mode: str  # "parallel" or "recursive"

    def __len__(self) -> int:
        return len(self.trajectories)


def kwt_platoon(lead: Trajectory, bc: BoundaryCondition, v_max: float,
                spacing: float, delay: float) -> KwtPlatoon:
    """Wave-model trajectories behind a fixed lead.

    ``bc`` covers the followers (vehicles 2..N); entry speeds are ignored
    by the wave rule, only entry times matter.
    """
    min_headway = delay + spacing / v_max
    times = [lead.start_time, *bc.times]
    parallel = all(b - a >= min_headway - 1e-9 * max(1.0, abs(b))
                   for a, b in zip(times, times[1:]))
    trajs = [lead]
    if parallel:
        for k, t_n in enumerate(bc.times, start=1):
            shifted = lead.shadow(k, spacing, delay)
            ray = Trajectory((segment(0.0, v_max, 0.0, t_n, INF),), kinked=True)
            trajs.append(lower_envelope([shifted, ray], t_lo=t_n))
    else:
        for t_n in bc.times:
            shifted = trajs[-1].shadow(1, spacing, delay)
            ray = Trajectory((segment(0.0, v_max, 0.0, t_n, INF),), kinked=True)
            trajs.append(lower_envelope([shifted, ray], t_lo=t_n))
    return KwtPlatoon(tuple(trajs), "parallel" if parallel else "recursive")


@dataclass(frozen=True)
class GapMetrics:
    vehicle: int
    d_wave_minus_smooth: float
    d_smooth_minus_wave: float
    bound: float


def smoothing_gap_bound(v_max: float, a_accel: float, a_brake: float) -> float:
    """Lower bound on how far the smooth solution can dip below the wave one."""
    return min(-0.5 * v_max * v_max / a_accel, 0.5 * v_max * v_max / a_brake)


def gap_metrics(smooth: PlatoonResult, wave: KwtPlatoon, v_max: float,
                a_accel: float, a_brake: float) -> list[GapMetrics]:
    """Directed distances between wave and smooth trajectories, per vehicle."""
    if len(smooth.trajectories) != len(wave.trajectories):
        raise ValueError("platoon size mismatch")
    bound = smoothing_gap_bound(v_max, a_accel, a_brake)
    out = []
    for n, (p, q) in enumerate(zip(smooth.trajectories, wave.trajectories)):
        lo = max(p.start_time, q.start_time)
        d_qp = trajectory_distance(q, p, (lo, INF))
        d_pq = trajectory_distance(p, q, (lo, INF))
        out.append(GapMetrics(n, d_qp, d_pq, bound))
    return out


@dataclass(frozen=True)
class StationaryState:
    speed: float
    density: float
    flow: float
    regime: str  # "congested" (equality branch) or "free_flow" (density at cap)


def stationary_diagram(speed: float, lim: VehicleLimits) -> StationaryState:
    """Stationary density and flow for a platoon cruising at ``speed``.

    Below the speed limit the spacing is pinned to jam spacing plus the
    distance covered during one delay, giving the equality branch; at the
    limit that value is only the density cap.
    """
    if not (0.0 <= speed <= lim.v_max + 1e-12):
        raise ValueError(f"speed {speed} outside [0, {lim.v_max}]")
    density = 1.0 / (lim.spacing + speed * lim.delay)
    regime = "free_flow" if abs(speed - lim.v_max) <= 1e-12 else "congested"
    return StationaryState(speed, density, density * speed, regime)


def flow_of_density(density: float, lim: VehicleLimits) -> float:
    """Triangular flow-density relation."""
    return min(density * lim.v_max, (1.0 - lim.spacing * density) / lim.delay)
