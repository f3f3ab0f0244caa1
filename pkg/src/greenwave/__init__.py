"""Smooth platoon trajectories for signalized single-lane traffic.

Construction is built from analytically solvable quadratic pieces: a
forward pass accelerates/cruises under the predecessor's safety shadow
and a backward pass retimes exits into green phases.  Companion modules
provide reachability bounds, a kinematic-wave oracle, a delayed
intelligent-driver benchmark and experiment drivers.
"""

from .kinematics import (INF, KinematicsError, QuadraticSegment, QuasiTrajectory,
                         StatePoint, Trajectory, UnreachedLocation, assemble,
                         critical_time, lower_envelope, segment,
                         segment_distance, trajectory_distance)
from .kwt import (GapMetrics, KwtPlatoon, StationaryState, flow_of_density,
                  gap_metrics, kwt_platoon, smoothing_gap_bound,
                  stationary_diagram)
from .idm import CollisionError, IdmParams, idm_accel, simulate_idm
from .lab import (GenerationError, MeasurementCell, ScenarioConfig,
                  feasibility_grid, generate_boundary,
                  generate_boundary_dispersed, lead_profile,
                  measure_macroscopic, run_comparison, total_travel_time)
from .planner import (BoundaryCondition, ControlAccels, PlatoonResult,
                      SignalTiming, VehicleDiag, VehicleLimits, Violation,
                      exit_time, plan_following, plan_following_parallel,
                      plan_signalized, validate_platoon)
from .shooting_ops import ShootResult, ShotCase, bso, fso
from .shooting_proc import (ProcessResult, backward_process, forward_process,
                            forward_process_multi, merge_into)
from .timegeo import (ConeBounds, FeasibilityReport, PrismBounds, cone_bounds,
                      check_feasibility_theorems, is_proper, prism_bounds,
                      prism_feasible, sh_length_threshold)

__version__ = "0.1.0"
