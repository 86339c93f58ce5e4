"""crossway: game-theoretic decision making at an unsignalized intersection.

A deterministic, seedable simulator where each rational vehicle picks its
acceleration as the backward-induction equilibrium of a receding-horizon
sequential game ordered by its private priority belief, plus a Monte Carlo
harness over scenarios with selfish and random drivers.
"""

from .costs import CostParams
from .drivers import DriverKind
from .game import DEFAULT_PATTERNS, SequentialGame, build_decision_game, \
    exhaustive_solve, solve_backward_induction
from .geometry import (
    Arm,
    IntersectionLayout,
    Maneuver,
    NavigationPath,
    build_path,
    disk_set_distance,
    left_of,
    occupancy_disks,
    paths_conflict,
)
from .harness import AggregateStats, generate_scenario, run_batch, run_single
from .kinematics import (
    Configuration,
    Status,
    VehicleDims,
    infer_acceleration,
    next_config,
    update_status,
)
from .sim import Settings, SimResult, World, detect_collision, \
    detect_congestion, run

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "Arm",
    "Configuration",
    "CostParams",
    "DEFAULT_PATTERNS",
    "DriverKind",
    "IntersectionLayout",
    "Maneuver",
    "NavigationPath",
    "SequentialGame",
    "Settings",
    "SimResult",
    "Status",
    "VehicleDims",
    "World",
    "build_decision_game",
    "build_path",
    "detect_collision",
    "detect_congestion",
    "disk_set_distance",
    "exhaustive_solve",
    "generate_scenario",
    "infer_acceleration",
    "left_of",
    "next_config",
    "occupancy_disks",
    "paths_conflict",
    "run",
    "run_batch",
    "run_single",
    "solve_backward_induction",
    "update_status",
]
