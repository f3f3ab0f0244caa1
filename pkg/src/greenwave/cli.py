"""Command-line front end.

Subcommands: plan (signalized platoon), lvp (lead-vehicle chain), kwt
(wave model), idm (benchmark), feasibility-grid, compare, measure.
Scenario fields are exposed as flags and may also come from a flat
``key = value`` config file; flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .idm import IdmParams, simulate_idm
from .kinematics import read_segment_csv, write_segment_csv, write_trajectory_csv
from .kwt import kwt_platoon
from .lab import (ScenarioConfig, feasibility_grid, generate_boundary,
                  generate_boundary_dispersed, lead_profile, measure_macroscopic,
                  plot_time_space, run_comparison, total_travel_time,
                  write_grid_csv, write_measurement_csv)
from .planner import ControlAccels, plan_following, plan_following_parallel, plan_signalized


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value scenario file")
    for f in dataclasses.fields(ScenarioConfig):
        flag = "--" + f.name.replace("_", "-")
        p.add_argument(flag, type=int if f.name in ("n_vehicles", "seed") else float,
                       default=None, help=f"scenario field {f.name}")
    p.add_argument("--out-dir", type=Path, default=Path("out"))


def _config_from(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    overrides = {}
    for f in dataclasses.fields(ScenarioConfig):
        val = getattr(args, f.name)
        if val is not None:
            overrides[f.name] = val
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _dump(out_dir: Path, name: str, trajectories, length=None, t_hi=None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(out_dir / f"traj_{name}.csv", trajectories, 0.5, t1=t_hi)
    write_segment_csv(out_dir / f"segments_{name}.csv", trajectories)
    plot_time_space(out_dir / f"traj_{name}.svg", trajectories, length, t_hi)


def _horizon(cfg, bc) -> float:
    return bc.times[-1] + 8.0 * cfg.mean_headway * cfg.n_vehicles / 8.0 + 120.0


def cmd_plan(args) -> int:
    cfg = _config_from(args)
    bc = generate_boundary(cfg)
    res = plan_signalized(bc, cfg.signal, cfg.limits, cfg.controls, cfg.length)
    if not res.feasible:
        print(f"infeasible: {res.failure_reason} at vehicle {res.failed_vehicle}")
        return 1
    _dump(args.out_dir, "plan", res.trajectories, cfg.length, _horizon(cfg, bc))
    tt = total_travel_time(res, bc, cfg.length)
    print(f"planned {len(res.trajectories)} vehicles; total travel time {tt:.1f} s")
    return 0


def cmd_lvp(args) -> int:
    cfg = _config_from(args)
    bc = generate_boundary(cfg, pin_first=(0.0, cfg.v_max))
    lead = lead_profile(cfg.limits)
    planner = plan_following_parallel if args.parallel else plan_following
    res = planner(lead, bc.tail(), cfg.limits, cfg.accel_fwd, cfg.brake_fwd)
    if not res.feasible:
        print(f"infeasible: {res.failure_reason} at vehicle {res.failed_vehicle}")
        return 1
    _dump(args.out_dir, "lvp", res.trajectories, None, _horizon(cfg, bc))
    print(f"solved lead-vehicle problem for {len(res.trajectories)} vehicles"
          f" ({'parallel' if args.parallel else 'sequential'})")
    return 0


def cmd_kwt(args) -> int:
    cfg = _config_from(args)
    bc = generate_boundary(cfg, pin_first=(0.0, cfg.v_max))
    wave = kwt_platoon(lead_profile(cfg.limits), bc.tail(), cfg.v_max,
                       cfg.spacing, cfg.delay)
    _dump(args.out_dir, "kwt", wave.trajectories, None, _horizon(cfg, bc))
    print(f"wave model ({wave.mode}) for {len(wave)} vehicles")
    return 0


def cmd_idm(args) -> int:
    cfg = _config_from(args)
    bc = generate_boundary(cfg)
    res = simulate_idm(bc, cfg.signal, cfg.limits, IdmParams(), cfg.length)
    _dump(args.out_dir, "idm", res.trajectories, cfg.length)
    exits = [d.exit_time for d in res.diagnostics if d.exit_time is not None]
    if exits:
        print(f"benchmark total travel time {max(exits) - bc.times[0]:.1f} s")
    return 0


def cmd_grid(args) -> int:
    cfg = _config_from(args)
    ax1 = (args.axis1, list(np.linspace(args.axis1_lo, args.axis1_hi, args.axis1_n)))
    ax2 = (args.axis2, list(np.linspace(args.axis2_lo, args.axis2_hi, args.axis2_n)))
    rates = feasibility_grid(cfg, ax1, ax2, args.instances, args.algorithm)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_grid_csv(args.out_dir / "grid.csv", cfg, ax1, ax2, rates)
    print(rates)
    return 0


def cmd_compare(args) -> int:
    cfg = _config_from(args)
    rep = run_comparison(cfg, args.out_dir)
    print(f"benchmark {rep.tt_idm:.1f} s | extreme {rep.tt_sh_extreme:.1f} s | "
          f"soft {rep.tt_sh_soft:.1f} s | gap bounds ok: {rep.gap_bounds_ok}")
    return 0


def cmd_measure(args) -> int:
    cfg = _config_from(args)
    if args.segments:
        trajs = read_segment_csv(args.segments)
    else:
        bc = generate_boundary(cfg)
        res = plan_signalized(bc, cfg.signal, cfg.limits, cfg.controls, cfg.length)
        if not res.feasible:
            print("infeasible scenario")
            return 1
        trajs = res.trajectories
    cells = measure_macroscopic(trajs, cfg.length, cfg.spacing, cfg.delay)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_measurement_csv(args.out_dir / "macro.csv", cells)
    print(f"measured {len(cells)} cells -> {args.out_dir / 'macro.csv'}")
    return 0


def main(argv=None) -> int:
    top = argparse.ArgumentParser(prog="greenwave", description=__doc__)
    sub = top.add_subparsers(dest="cmd", required=True)

    for name, fn in (("plan", cmd_plan), ("idm", cmd_idm), ("compare", cmd_compare)):
        p = sub.add_parser(name)
        _add_scenario_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("lvp")
    _add_scenario_flags(p)
    p.add_argument("--parallel", action="store_true",
                   help="per-vehicle independent construction")
    p.set_defaults(fn=cmd_lvp)

    p = sub.add_parser("kwt")
    _add_scenario_flags(p)
    p.set_defaults(fn=cmd_kwt)

    p = sub.add_parser("feasibility-grid")
    _add_scenario_flags(p)
    p.add_argument("--axis1", default="alpha")
    p.add_argument("--axis1-lo", type=float, default=0.0)
    p.add_argument("--axis1-hi", type=float, default=1.0)
    p.add_argument("--axis1-n", type=int, default=11)
    p.add_argument("--axis2", default="beta")
    p.add_argument("--axis2-lo", type=float, default=0.0)
    p.add_argument("--axis2-hi", type=float, default=1.0)
    p.add_argument("--axis2-n", type=int, default=11)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--algorithm", choices=("pshl", "shl", "sh"), default="pshl")
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("measure")
    _add_scenario_flags(p)
    p.add_argument("--segments", type=Path, default=None,
                   help="measure a previously dumped segment CSV")
    p.set_defaults(fn=cmd_measure)

    args = top.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
