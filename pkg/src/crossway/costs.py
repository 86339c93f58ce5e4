"""Step-cost features and the discounted receding-horizon cost.

The safety feature penalises proximity to vehicles on crossing routes in a
piecewise fashion: nothing far away, a mild quadratic once within the
caution range (waived for the vehicle holding priority), and a crushing
quadratic inside the danger range regardless of priority.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .geometry import (
    IntersectionLayout,
    NavigationPath,
    disk_set_distance,
    occupancy_disks,
    paths_conflict,
)
from .kinematics import Configuration, Status, VehicleDims, next_config

PriorityOrder = tuple[int, ...]


@dataclass(frozen=True)
class CostParams:
    c_caution: float = 20.0
    c_danger: float = 1e300
    c_under: float = 1.0
    c_over: float = 1000.0
    safe_distance: float = 25.0
    danger_distance: float = 0.5
    speed_limit: float = 16.7
    discount: float = 0.8
    horizon: int = 3
    dt: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 < self.c_caution < self.c_danger):
            raise ValueError("need 0 < c_caution << c_danger")
        if not (0.0 < self.c_under < self.c_over):
            raise ValueError("need 0 < c_under << c_over")
        if not (0.0 < self.danger_distance < self.safe_distance):
            raise ValueError("need 0 < danger_distance < safe_distance")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if not (0.0 <= self.discount <= 1.0):
            raise ValueError("discount must lie in [0, 1]")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


def pair_penalty(d: float, status_i: Status, conflicting: bool,
                 i_minimal: bool, params: CostParams) -> float:
    """Core piecewise proximity penalty, cases evaluated in order."""
    if status_i is Status.LEAVING:
        return 0.0
    if not conflicting:
        return 0.0
    if d >= params.safe_distance:
        return 0.0
    if d <= params.danger_distance:
        return params.c_danger * (params.safe_distance - d) ** 2
    if i_minimal:
        return 0.0
    return params.c_caution * (params.safe_distance - d) ** 2


def occupancy_distance(ci: Configuration, di: VehicleDims,
                       ck: Configuration, dk: VehicleDims) -> float:
    return disk_set_distance(
        occupancy_disks((ci.x, ci.y, ci.heading), di.length, di.width),
        occupancy_disks((ck.x, ck.y, ck.heading), dk.length, dk.width),
    )


def safety_pair(i: int, k: int, configs: Mapping[int, Configuration],
                paths: Mapping[int, NavigationPath],
                dims: Mapping[int, VehicleDims], order: PriorityOrder,
                params: CostParams) -> float:
    """Penalty vehicle ``i`` incurs on account of vehicle ``k``."""
    if i == k:
        raise ValueError("safety_pair needs distinct vehicles")
    d = occupancy_distance(configs[i], dims[i], configs[k], dims[k])
    return pair_penalty(d, configs[i].status, paths_conflict(paths[i], paths[k]),
                        bool(order) and order[0] == i, params)


def safety_feature(i: int, configs: Mapping[int, Configuration],
                   paths: Mapping[int, NavigationPath],
                   dims: Mapping[int, VehicleDims], order: PriorityOrder,
                   params: CostParams) -> float:
    return sum(
        safety_pair(i, k, configs, paths, dims, order, params)
        for k in configs
        if k != i
    )


def velocity_feature(v: float, params: CostParams) -> float:
    """Quadratic pull toward the speed limit, much steeper above it."""
    gap = params.speed_limit - v
    if v <= params.speed_limit:
        return params.c_under * gap * gap
    return params.c_over * gap * gap


def step_cost(i: int, configs: Mapping[int, Configuration],
              paths: Mapping[int, NavigationPath],
              dims: Mapping[int, VehicleDims], order: PriorityOrder,
              params: CostParams) -> float:
    return (safety_feature(i, configs, paths, dims, order, params)
            + velocity_feature(configs[i].v, params))


def accumulated_cost(j: int, configs: Mapping[int, Configuration],
                     paths: Mapping[int, NavigationPath],
                     dims: Mapping[int, VehicleDims], order: PriorityOrder,
                     profile: Mapping[int, Sequence[float]],
                     params: CostParams,
                     layout: IntersectionLayout) -> float:
    """Discounted cost of ``j`` over the horizon under ``profile``.

    Every vehicle advances with its own acceleration sequence; vehicles
    absent from ``profile`` coast.  The priority order is held fixed while
    statuses and positions are re-derived each predicted step.
    """
    for pattern in profile.values():
        if len(pattern) != params.horizon:
            raise ValueError("profile patterns must have horizon length")
    state = dict(configs)
    total = 0.0
    weight = 1.0
    for s in range(params.horizon):
        total += weight * step_cost(j, state, paths, dims, order, params)
        weight *= params.discount
        if s + 1 < params.horizon:
            state = {
                k: next_config(cfg, profile[k][s] if k in profile else 0.0,
                               params.dt, paths[k], dims[k], layout)
                for k, cfg in state.items()
            }
    return total
