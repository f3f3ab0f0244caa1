"""Scenario generation, experiment drivers and macroscopic measurement.

Arrival times follow a dispersed-headway law whose mean matches the
demand implied by the saturation rate; entry speeds are either drawn
from per-vehicle feasibility windows (the default generator, which
retries until the boundary condition passes the pairwise entry test at
acceleration limits downscaled to one third) or uniformly from
[(1-beta)*v_max, v_max] (the dispersed generator, which deliberately
produces a mix of solvable and unsolvable instances).

Randomness is PCG64 seeded through ``SeedSequence([seed, ...keys])`` with
one stream per vehicle, so adding vehicles never perturbs earlier draws.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .idm import IdmParams, simulate_idm
from .kinematics import (INF, StatePoint, Trajectory, UnreachedLocation,
                         assemble, segment, trajectory_distance,
                         write_segment_csv, write_trajectory_csv)
from .kwt import gap_metrics, kwt_platoon
from .planner import (BoundaryCondition, ControlAccels, PlatoonResult,
                      SignalTiming, VehicleLimits, exit_time, plan_following,
                      plan_following_parallel, plan_signalized)
from .timegeo import (curves_min_gap, is_proper, lower_cone_segments,
                      upper_cone_segments)


class GenerationError(RuntimeError):
    """Retry budget exhausted without a proper boundary condition."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Flat scenario description; field names double as config-file keys."""

    length: float = 1000.0
    n_vehicles: int = 50
    v_max: float = 25.0
    a_max: float = 2.0
    a_min: float = -5.0
    spacing: float = 7.0
    delay: float = 1.0
    green: float = 25.0
    red: float = 25.0
    accel_fwd: float = 2.0
    brake_fwd: float = -5.0
    accel_back: float = 2.0
    brake_back: float = -5.0
    saturation: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        cg = (self.green + self.red) / self.green if math.isfinite(self.green) else 1.0
        if not (0.0 < self.saturation <= cg + 1e-12):
            raise ValueError(f"saturation must lie in (0, {cg}]")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.beta <= 1.0):
            raise ValueError("alpha and beta must lie in [0, 1]")

    @property
    def limits(self) -> VehicleLimits:
        return VehicleLimits(self.v_max, self.a_max, self.a_min,
                             self.spacing, self.delay)

    @property
    def signal(self) -> SignalTiming:
        return SignalTiming(self.green, self.red)

    @property
    def controls(self) -> ControlAccels:
        return ControlAccels(self.accel_fwd, self.brake_fwd,
                             self.accel_back, self.brake_back)

    @property
    def mean_headway(self) -> float:
        cg = (self.green + self.red) / self.green if math.isfinite(self.green) else 1.0
        return (self.delay + self.spacing / self.v_max) * cg / self.saturation

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        """Flat ``key = value`` text; unknown keys are an error."""
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = int(val) if key in ("n_vehicles", "seed") else float(val)
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# boundary-condition generation
# ---------------------------------------------------------------------------


def _arrival_times(cfg: ScenarioConfig, rng_eps: np.ndarray) -> list[float]:
    n = cfg.n_vehicles
    base = cfg.delay + cfg.spacing / cfg.v_max
    cg = (cfg.green + cfg.red) / cfg.green if math.isfinite(cfg.green) else 1.0
    surplus = cg / cfg.saturation - 1.0
    times = [0.0]
    for i in range(1, n):
        eps = rng_eps[i - 1]
        times.append(times[-1] + base * (1.0 + surplus * (1.0 - cfg.alpha
                                                          + cfg.alpha * eps)))
    return times


def _eps_draws(cfg: ScenarioConfig, attempt: int) -> np.ndarray:
    """Non-negative headway factors rescaled to average exactly one."""
    n = cfg.n_vehicles
    if n <= 1:
        return np.empty(0)
    draws = np.empty(n - 1)
    for i in range(n - 1):
        ss = np.random.SeedSequence([cfg.seed, attempt, i])
        draws[i] = np.random.Generator(np.random.PCG64(ss)).uniform(0.0, 2.0)
    total = draws.sum()
    if total <= 0.0:
        return np.ones(n - 1)
    return draws * ((n - 1) / total)


_WINDOW = 12        # neighbors examined while sizing a speed window
_PROBE_SPEEDS = 5   # later-vehicle speeds probed for the existence test


def _pair_ok(v_lead: float, t_lead: float, order: int, v_follow: float,
             t_follow: float, lim: VehicleLimits) -> bool:
    up = upper_cone_segments(0.0, v_lead, t_lead, lim)
    lo = lower_cone_segments(0.0, v_follow, t_follow, lim)
    gap = curves_min_gap(up, lo, -order * lim.spacing, order * lim.delay)
    return gap >= -1e-9 * max(1.0, order * lim.spacing)


def _speed_window(n: int, times: list[float], speeds: list[float],
                  lim: VehicleLimits, v_grid: np.ndarray) -> tuple[float, float] | None:
    """Feasible entry-speed interval for vehicle ``n`` given earlier draws.

    A candidate must keep vehicle n reachable below every earlier
    vehicle's shifted ceiling, and must leave at least one feasible speed
    for each later arrival (probed on a coarse grid).  Edges are refined
    by bisection to about 1e-3 m/s.
    """
    lo_m = max(0, n - _WINDOW)
    hi_m = min(len(times), n + 1 + _WINDOW)
    probes = np.linspace(0.0, lim.v_max, _PROBE_SPEEDS)

    def ok(v: float) -> bool:
        for m in range(lo_m, n):
            if not _pair_ok(speeds[m], times[m], n - m, v, times[n], lim):
                return False
        for m in range(n + 1, hi_m):
            if not any(_pair_ok(v, times[n], m - n, vm, times[m], lim)
                       for vm in probes):
                return False
        return True

    mask = [ok(v) for v in v_grid]
    if not any(mask):
        return None
    i0 = mask.index(True)
    i1 = len(mask) - 1 - mask[::-1].index(True)
    lo, hi = v_grid[i0], v_grid[i1]
    if i0 > 0:
        a, b = v_grid[i0 - 1], lo
        while b - a > 1e-3:
            mid = 0.5 * (a + b)
            a, b = (a, mid) if ok(mid) else (mid, b)
        lo = b
    if i1 < len(v_grid) - 1:
        a, b = hi, v_grid[i1 + 1]
        while b - a > 1e-3:
            mid = 0.5 * (a + b)
            a, b = (mid, b) if ok(mid) else (a, mid)
        hi = a
    return lo, hi


def generate_boundary(cfg: ScenarioConfig, pin_first: tuple[float, float] | None = None,
                      retries: int = 100) -> BoundaryCondition:
    """Default generator: dispersed arrivals plus windowed speeds.

    Speed windows (and the final acceptance test) use the acceleration
    limits downscaled to one third, so the result stays solvable for any
    forward rates at least that strong.  Regenerates with a fresh stream
    until the pairwise entry test passes.
    """
    lim3 = dataclasses.replace(cfg.limits, a_max=cfg.a_max / 3.0,
                               a_min=cfg.a_min / 3.0)
    v_grid = np.linspace(0.0, cfg.v_max, 33)
    for attempt in range(retries):
        times = _arrival_times(cfg, _eps_draws(cfg, attempt))
        if pin_first is not None:
            times[0] = pin_first[0]
        speeds: list[float] = []
        failed = False
        for n in range(cfg.n_vehicles):
            if n == 0 and pin_first is not None:
                speeds.append(pin_first[1])
                continue
            win = _speed_window(n, times, speeds, lim3, v_grid)
            if win is None:
                failed = True
                break
            ss = np.random.SeedSequence([cfg.seed, attempt, 10_000 + n])
            rng = np.random.Generator(np.random.PCG64(ss))
            speeds.append(float(rng.uniform(win[0], win[1])))
        if failed:
            continue
        bc = BoundaryCondition(tuple(zip(times, speeds)))
        if is_proper(bc, lim3):
            return bc
    raise GenerationError(f"no proper boundary condition in {retries} attempts")


def generate_boundary_dispersed(cfg: ScenarioConfig) -> BoundaryCondition:
    """Dispersed generator: windowed arrivals, speeds uniform on
    [(1-beta)*v_max, v_max], no solvability screening."""
    times = _arrival_times(cfg, _eps_draws(cfg, 0))
    speeds = []
    for n in range(cfg.n_vehicles):
        ss = np.random.SeedSequence([cfg.seed, 1, 20_000 + n])
        rng = np.random.Generator(np.random.PCG64(ss))
        speeds.append(float(rng.uniform((1.0 - cfg.beta) * cfg.v_max, cfg.v_max)))
    return BoundaryCondition(tuple(zip(times, speeds)))


def lead_profile(lim: VehicleLimits) -> Trajectory:
    """Cruise 20 s, brake gently to a 20 s stop, recover, cruise on.

    Deceleration and re-acceleration run at one third of the limits, so
    the profile triggers a wave followers must absorb while itself being
    comfortably feasible.
    """
    v, am, ap = lim.v_max, lim.a_min / 3.0, lim.a_max / 3.0
    t1 = 20.0
    t2 = t1 - v / am            # braking ends
    x2 = 20.0 * v - 0.5 * v * v / am
    t3 = t2 + 20.0              # stop ends
    t4 = t3 + v / ap            # back at cruise speed
    x4 = x2 + 0.5 * v * v / ap
    return assemble([
        segment(0.0, v, 0.0, 0.0, t1),
        segment(20.0 * v, v, am, t1, t2),
        segment(x2, 0.0, 0.0, t2, t3),
        segment(x2, 0.0, ap, t3, t4),
        segment(x4, v, 0.0, t4, INF),
    ])


# ---------------------------------------------------------------------------
# feasibility-rate grids
# ---------------------------------------------------------------------------


def cell_seed(base: int, i: int, j: int, instance: int) -> int:
    return int(np.random.SeedSequence([base, i, j, instance]).generate_state(1)[0])


def feasibility_grid(cfg: ScenarioConfig, axis1: tuple[str, list[float]],
                     axis2: tuple[str, list[float]], instances: int = 20,
                     algorithm: str = "pshl") -> np.ndarray:
    """Fraction of solvable dispersed instances per grid cell.

    ``axis1``/``axis2`` name any two config fields (e.g. alpha and beta,
    or length and saturation).  The planner runs at the acceleration
    limits.  ``algorithm`` is "pshl" (parallel), "shl" (sequential chain,
    same answer, cheaper) or "sh" (signalized).
    """
    name1, vals1 = axis1
    name2, vals2 = axis2
    rates = np.zeros((len(vals1), len(vals2)))
    for i, v1 in enumerate(vals1):
        for j, v2 in enumerate(vals2):
            ok = 0
            for inst in range(instances):
                c = dataclasses.replace(
                    cfg, **{name1: type(getattr(cfg, name1))(v1),
                            name2: type(getattr(cfg, name2))(v2),
                            "seed": cell_seed(cfg.seed, i, j, inst)})
                bc = generate_boundary_dispersed(c)
                lim = c.limits
                if algorithm == "sh":
                    res = plan_signalized(bc, c.signal, lim,
                                          ControlAccels.extreme(lim), c.length)
                elif algorithm == "shl":
                    res = plan_following(None, bc, lim, lim.a_max, lim.a_min)
                else:
                    res = plan_following_parallel(None, bc, lim,
                                                  lim.a_max, lim.a_min)
                ok += bool(res.feasible)
            rates[i, j] = ok / instances
    return rates


_GRID_COLS = {"alpha": "alpha", "beta": "beta", "saturation": "fs",
              "length": "L", "n_vehicles": "N"}


def write_grid_csv(path, cfg: ScenarioConfig, axis1, axis2, rates: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["alpha", "beta", "fs", "L", "N", "rate"])
        for i, v1 in enumerate(axis1[1]):
            for j, v2 in enumerate(axis2[1]):
                row = {"alpha": cfg.alpha, "beta": cfg.beta, "fs": cfg.saturation,
                       "L": cfg.length, "N": cfg.n_vehicles}
                row[_GRID_COLS[axis1[0]]] = v1
                row[_GRID_COLS[axis2[0]]] = v2
                out.writerow([row["alpha"], row["beta"], row["fs"],
                              row["L"], row["N"], rates[i, j]])


# ---------------------------------------------------------------------------
# macroscopic measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementCell:
    t: float
    x: float
    density: float
    flow: float


def measure_macroscopic(trajectories, length: float, spacing: float, delay: float,
                        window_length: float = 100.0, window_duration: float = 5.0,
                        t_range: tuple[float, float] | None = None
                        ) -> list[MeasurementCell]:
    """Generalized density/flow in parallelograms rolled along the wave.

    Each cell spans ``window_duration`` in time and ``window_length`` in
    space, with its spatial band drifting at the characteristic wave
    speed -spacing/delay; density is vehicle-time per cell area and flow
    is vehicle-distance per cell area.  Entry/exit times per vehicle and
    cell come from the generalized inverse in wave-following coordinates,
    so the totals are exact for piecewise-quadratic inputs.
    """
    w = -spacing / delay
    if t_range is None:
        lo = min(tr.start_time for tr in trajectories)
        hi = max(tr.segments[-1].t0 for tr in trajectories)
        for tr in trajectories:
            try:
                hi = max(hi, tr.inverse(length))
            except UnreachedLocation:
                pass
        t_range = (lo, hi)
    t_lo, t_hi = t_range
    n_t = max(1, int(math.ceil((t_hi - t_lo) / window_duration)))
    area = window_length * window_duration
    cells: dict[tuple[int, int], list[float]] = {}
    for tr in trajectories:
        # wave-following coordinate, zeroed at t_lo: strictly increasing in t
        phi = tr.sheared(w).raised(w * t_lo)
        a0 = max(tr.start_time, t_lo)
        b0 = min(_finite_end(tr), t_hi)
        for k in range(n_t):
            ta = max(t_lo + k * window_duration, a0)
            tb = min(t_lo + (k + 1) * window_duration, b0)
            if tb <= ta:
                continue
            chi_a = phi.value(ta)
            chi_b = phi.value(tb)
            j_lo = math.floor(chi_a / window_length)
            j_hi = math.floor(chi_b / window_length)
            for j in range(j_lo, j_hi + 1):
                t_in = ta if chi_a >= j * window_length else \
                    phi.inverse(j * window_length)
                t_out = tb if chi_b < (j + 1) * window_length else \
                    phi.inverse((j + 1) * window_length)
                t_in, t_out = max(t_in, ta), min(t_out, tb)
                if t_out <= t_in:
                    continue
                acc = cells.setdefault((k, j), [0.0, 0.0])
                acc[0] += t_out - t_in
                acc[1] += tr.value(t_out) - tr.value(t_in)
    out = []
    for (k, j), (tt, td) in sorted(cells.items()):
        t_cell = t_lo + k * window_duration
        x_cell = j * window_length + w * (t_cell - t_lo)
        out.append(MeasurementCell(t_cell, x_cell, tt / area, td / area))
    return out


def _finite_end(tr: Trajectory) -> float:
    return tr.end_time if math.isfinite(tr.end_time) else tr.segments[-1].t0 + 10.0


def write_measurement_csv(path, cells) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "x", "K", "O"])
        for c in cells:
            out.writerow([f"{c.t:.3f}", f"{c.x:.3f}",
                          f"{c.density:.8f}", f"{c.flow:.8f}"])


def write_gap_csv(path, metrics) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["vehicle_id", "d_q_minus_p", "d_p_minus_q", "bound"])
        for g in metrics:
            out.writerow([g.vehicle + 1, f"{g.d_wave_minus_smooth:.9f}",
                          f"{g.d_smooth_minus_wave:.9f}", f"{g.bound:.9f}"])


# ---------------------------------------------------------------------------
# comparison experiment
# ---------------------------------------------------------------------------


def total_travel_time(result: PlatoonResult, bc: BoundaryCondition,
                      length: float) -> float:
    """Last exit minus first entry."""
    last_exit = max(exit_time(tr, length)[0] for tr in result.trajectories)
    return last_exit - bc.times[0]


def plot_time_space(path, trajectories, length: float | None = None,
                    t_hi: float | None = None) -> None:
    """Small SVG time-space diagram (data thinned to keep files light)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for tr in trajectories:
        lo = tr.start_time
        hi = min(_finite_end(tr), t_hi) if t_hi else _finite_end(tr)
        ts = np.linspace(lo, hi, 160)
        ax.plot(ts, tr.value_array(ts), lw=0.6, color="tab:blue")
    if length is not None:
        ax.axhline(length, color="tab:red", lw=0.8, ls="--")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("location (m)")
    if length is not None:
        ax.set_ylim(-50.0, length * 1.05)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


@dataclass(frozen=True)
class ComparisonReport:
    tt_idm: float
    tt_sh_extreme: float
    tt_sh_soft: float
    gap_bounds_ok: bool
    out_dir: str


def run_comparison(cfg: ScenarioConfig, out_dir) -> ComparisonReport:
    """Benchmark vs planner runs with CSV/SVG artifacts.

    Produces the signalized comparison (delayed-driver benchmark and the
    planner at extreme and softened rates), the lead-vehicle comparison
    against the wave model for rate multipliers 1/3, 1 and 3, macroscopic
    scatter for all signalized runs, and the gap-vs-bound table.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lim, sig = cfg.limits, cfg.signal

    bc = generate_boundary(cfg)
    idm_res = simulate_idm(bc, sig, lim, IdmParams(), cfg.length)
    exits = [d.exit_time for d in idm_res.diagnostics if d.exit_time is not None]
    tt_idm = max(exits) - bc.times[0]
    sh_hard = plan_signalized(bc, sig, lim, ControlAccels.extreme(lim), cfg.length)
    soft = ControlAccels(cfg.a_max / 3.0, cfg.a_min / 3.0,
                         cfg.a_max / 3.0, cfg.a_min / 9.0)
    sh_soft = plan_signalized(bc, sig, lim, soft, cfg.length)
    tt_hard = total_travel_time(sh_hard, bc, cfg.length)
    tt_soft = total_travel_time(sh_soft, bc, cfg.length)

    t_end = max(tt_idm, tt_hard, tt_soft) + bc.times[0] + 10.0
    for name, res in (("idm", idm_res), ("sh_extreme", sh_hard),
                      ("sh_soft", sh_soft)):
        write_trajectory_csv(out / f"traj_{name}.csv", res.trajectories, 0.5,
                             t1=t_end)
        write_segment_csv(out / f"segments_{name}.csv", res.trajectories)
        plot_time_space(out / f"traj_{name}.svg", res.trajectories,
                        cfg.length, t_end)
        cells = measure_macroscopic(res.trajectories, cfg.length,
                                    cfg.spacing, cfg.delay)
        write_measurement_csv(out / f"macro_{name}.csv", cells)

    lvp_cfg = dataclasses.replace(cfg, saturation=0.5)
    bc_lvp = generate_boundary(lvp_cfg, pin_first=(0.0, cfg.v_max))
    lead = lead_profile(lim)
    wave = kwt_platoon(lead, bc_lvp.tail(), cfg.v_max, cfg.spacing, cfg.delay)
    bounds_ok = True
    with open(out / "travel_times.csv", "w", newline="") as fh:
        csv.writer(fh).writerows([["run", "total_travel_time"],
                                  ["idm", tt_idm], ["sh_extreme", tt_hard],
                                  ["sh_soft", tt_soft]])
    for gamma in (1.0 / 3.0, 1.0, 3.0):
        shl = plan_following(lead, bc_lvp.tail(), lim,
                             gamma * cfg.a_max, gamma * cfg.a_min)
        if not shl.feasible:
            continue
        gaps = gap_metrics(shl, wave, cfg.v_max,
                           gamma * cfg.a_max, gamma * cfg.a_min)
        write_gap_csv(out / f"gaps_gamma_{gamma:.3f}.csv", gaps)
        plot_time_space(out / f"traj_shl_gamma_{gamma:.3f}.svg",
                        shl.trajectories, t_hi=lead.segments[-1].t0 + 60.0)
        bounds_ok &= all(g.d_smooth_minus_wave >= g.bound - 1e-6 for g in gaps)

    return ComparisonReport(tt_idm, tt_hard, tt_soft, bounds_ok, str(out))
