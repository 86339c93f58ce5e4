"""Per-vehicle controllers: equilibrium decisions, random drivers,
prediction bookkeeping, and the probabilistic deadlock override."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .costs import CostParams, PriorityOrder
from .drivers import DriverKind
from .game import DecisionTables
from .geometry import IntersectionLayout, NavigationPath
from .kinematics import Configuration, VehicleDims, next_config, observed_input

#: Values an irrational driver picks from, uniformly, every step.
IRRATIONAL_CHOICES = (-50.0, 0.0, 10.0, 20.0)

#: Override applied when a vehicle decides to break a deadlock.
UNLOCK_ACCEL = 10.0

#: Per-step chance that an unlock-eligible vehicle actually overrides.
UNLOCK_PROBABILITY = 0.25

#: Largest prediction error still counted as "precisely predicted".
PREDICTION_TOL = 1e-6


@dataclass
class AgentState:
    """Mutable decision state owned by one vehicle."""

    kind: DriverKind
    vehicle_id: int
    rng: np.random.Generator
    order: PriorityOrder | None = None
    #: vehicle id -> (predicted acceleration, predicted next configuration)
    last_predictions: dict[int, tuple[float, Configuration]] = field(
        default_factory=dict)
    #: deadlock seen when the previous decision was taken (one step older
    #: than ``deadlock_pending``).
    deadlock_flag: bool = False
    #: deadlock seen at the most recent observation, consumed by the next
    #: decision.
    deadlock_pending: bool = False


def irrational_decide(rng: np.random.Generator) -> float:
    """Uniform draw from the acceleration choices; sees nothing else."""
    return IRRATIONAL_CHOICES[int(rng.integers(len(IRRATIONAL_CHOICES)))]


def decide(agent: AgentState, configs: Mapping[int, Configuration],
           paths: Mapping[int, NavigationPath],
           dims: Mapping[int, VehicleDims], params: CostParams,
           layout: IntersectionLayout,
           tables: DecisionTables | None = None,
           patterns=None) -> float:
    """Equilibrium control input for a rational agent; updates predictions.

    A vehicle that has left the conflict area plays a one-player game (its
    safety term is identically zero, so it simply regulates speed).
    """
    if not agent.kind.rational:
        raise ValueError("irrational agents use irrational_decide")
    me = agent.vehicle_id
    if agent.order and me in agent.order and tables is not None:
        order = agent.order
        profile = tables.solve(order)
        own_tables = tables
    else:
        order = (me,)
        own_tables = DecisionTables(
            configs, paths, dims, params,
            patterns if patterns is not None else tables.patterns,
            layout, active=order)
        profile = own_tables.solve(order)
    agent.last_predictions = {}
    for j in order:
        head = own_tables.patterns[profile[j]][0]
        predicted = next_config(configs[j], head, params.dt, paths[j],
                                dims[j], layout)
        agent.last_predictions[j] = (head, predicted)
    return own_tables.patterns[profile[me]][0]


def unlock(agent: AgentState, rng: np.random.Generator,
           probability: float = UNLOCK_PROBABILITY) -> float | None:
    """Deadlock override: eligible vehicles floor it with fixed probability.

    Eligible when the latest observation detected a deadlock and the agent
    believes it has priority, or when it had already detected a deadlock
    one step earlier.  Consumes randomness only when eligible.
    """
    eligible = (
        (agent.deadlock_pending and agent.order is not None
         and agent.order and agent.order[0] == agent.vehicle_id)
        or agent.deadlock_flag
    )
    agent.deadlock_flag = agent.deadlock_pending
    if eligible and rng.random() < probability:
        return UNLOCK_ACCEL
    return None


def detect_deadlock(agent: AgentState,
                    configs_prev: Mapping[int, Configuration],
                    configs: Mapping[int, Configuration],
                    observed_acc: Mapping[int, float],
                    active: PriorityOrder,
                    paths: Mapping[int, NavigationPath],
                    dims: Mapping[int, VehicleDims], params: CostParams,
                    layout: IntersectionLayout) -> bool:
    """All active vehicles stopped and everyone behaving exactly as predicted.

    Predicted accelerations are compared through the same observation
    channel as the observed ones, so a stopped vehicle commanded -50 and
    one commanded 0 (indistinguishable to an observer) do not count as a
    misprediction.
    """
    if not agent.last_predictions:
        return False
    if any(configs[v].v != 0.0 for v in active):
        return False
    return not mispredicted_ids(agent, configs_prev, observed_acc, params)


def mispredicted_ids(agent: AgentState,
                     configs_prev: Mapping[int, Configuration],
                     observed_acc: Mapping[int, float],
                     params: CostParams,
                     tol: float = PREDICTION_TOL,
                     include_self: bool = True) -> list[int]:
    """Vehicles whose observed acceleration missed the stored prediction.

    ``include_self=False`` gives the fitting-update trigger, which only
    reacts to *other* vehicles behaving unexpectedly; the deadlock check
    compares everyone.
    """
    missed = []
    for j, (_, predicted) in agent.last_predictions.items():
        if j not in observed_acc or j not in configs_prev:
            continue
        if not include_self and j == agent.vehicle_id:
            continue
        expected = observed_input(configs_prev[j], predicted, params.dt)
        if abs(expected - observed_acc[j]) > tol:
            missed.append(j)
    return missed
