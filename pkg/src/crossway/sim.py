"""World stepping, collision/congestion detection, and per-run results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import agents as agent_ops
from . import priority as priority_ops
from .agents import AgentState
from .costs import CostParams, PriorityOrder
from .drivers import DriverKind
from .game import DEFAULT_PATTERNS, DecisionTables
from .geometry import (
    IntersectionLayout,
    NavigationPath,
    disk_set_distance,
    occupancy_disks,
    paths_conflict,
)
from .kinematics import (
    Configuration,
    Status,
    VehicleDims,
    infer_acceleration,
    next_config,
)

#: Hard per-run step cap (60 s of simulated time); runs that hit it are
#: reported as timeouts, separately from collisions.
STEP_CAP = 600


@dataclass(frozen=True)
class Settings:
    """Every tunable constant of a run, overridable from a config file."""

    layout: IntersectionLayout = IntersectionLayout()
    params: CostParams = CostParams()
    patterns: tuple[tuple[float, ...], ...] = DEFAULT_PATTERNS
    unlock_probability: float = agent_ops.UNLOCK_PROBABILITY
    fit_accept_probability: float = priority_ops.FIT_ACCEPT_PROBABILITY
    prediction_tol: float = agent_ops.PREDICTION_TOL
    step_cap: int = STEP_CAP


@dataclass
class Vehicle:
    vid: int
    kind: DriverKind
    dims: VehicleDims
    path: NavigationPath
    config: Configuration
    agent: AgentState


@dataclass(frozen=True)
class Event:
    step: int
    kind: str
    vehicles: tuple[int, ...]


@dataclass
class SimResult:
    collided: bool
    congested: bool
    timeout: bool
    total_steps: int | None
    steps_executed: int
    leave_steps: dict[int, int]
    events: list[Event]
    trace: list[dict]
    equilibrium_violations: int = 0

    @property
    def ok(self) -> bool:
        return not self.collided and not self.timeout


def detect_collision(configs: Mapping[int, Configuration],
                     dims: Mapping[int, VehicleDims]) -> list[tuple[int, int]]:
    """Pairs whose occupancy disk unions touch or overlap."""
    disks = {
        v: occupancy_disks((c.x, c.y, c.heading), dims[v].length,
                           dims[v].width)
        for v, c in configs.items()
    }
    ids = sorted(configs)
    return [
        (i, k)
        for n, i in enumerate(ids)
        for k in ids[n + 1:]
        if disk_set_distance(disks[i], disks[k]) == 0.0
    ]


def detect_congestion(configs: Mapping[int, Configuration],
                      paths: Mapping[int, NavigationPath],
                      ) -> list[tuple[int, int]]:
    """Pairs of vehicles simultaneously inside the box on crossing routes."""
    inside = [v for v, c in configs.items() if c.status is Status.INSIDE]
    return [
        (i, k)
        for n, i in enumerate(inside)
        for k in inside[n + 1:]
        if paths_conflict(paths[i], paths[k])
    ]


class World:
    """One intersection scenario stepped at fixed 0.1 s decision intervals."""

    def __init__(self, vehicles: Sequence[Vehicle], settings: Settings,
                 verify_equilibria: bool = False) -> None:
        seen_arms = {v.path.entry_arm for v in vehicles}
        if len(seen_arms) != len(vehicles):
            raise ValueError("each vehicle needs a distinct entry arm")
        if len(vehicles) > 4:
            raise ValueError("at most four vehicles")
        self.t = 0
        self.vehicles = list(vehicles)
        self.settings = settings
        self.verify_equilibria = verify_equilibria
        self.equilibrium_violations = 0
        self.by_id = {v.vid: v for v in self.vehicles}
        self.paths = {v.vid: v.path for v in self.vehicles}
        self.dims = {v.vid: v.dims for v in self.vehicles}
        self.trace: list[dict] = []

    # -- helpers -----------------------------------------------------------

    def configs(self) -> dict[int, Configuration]:
        return {v.vid: v.config for v in self.vehicles}

    def active_ids(self) -> tuple[int, ...]:
        return tuple(v.vid for v in self.vehicles
                     if v.config.status is not Status.LEAVING)

    def init_orders(self) -> None:
        """Give every rational agent its initial belief."""
        configs = self.configs()
        ids = sorted(configs)
        for v in self.vehicles:
            if v.kind is DriverKind.IRRATIONAL:
                v.agent.order = None
            elif v.kind is DriverKind.ANGELIC:
                v.agent.order = priority_ops.init_angelic(
                    configs, self.paths, v.agent.rng)
            else:
                v.agent.order = priority_ops.init_selfish(
                    v.vid, ids, v.agent.rng)

    # -- stepping ----------------------------------------------------------

    def step(self) -> list[Event]:
        """Advance one decision interval; returns the step's events."""
        st = self.settings
        snapshot = self.configs()
        active = self.active_ids()
        tables = DecisionTables(snapshot, self.paths, self.dims, st.params,
                                st.patterns, st.layout,
                                active) if active else None

        applied: dict[int, float] = {}
        decision_order: dict[int, str] = {}
        unlock_events: list[int] = []
        for v in self.vehicles:
            if v.kind is DriverKind.IRRATIONAL:
                applied[v.vid] = agent_ops.irrational_decide(v.agent.rng)
                decision_order[v.vid] = "-"
                continue
            a = agent_ops.decide(v.agent, snapshot, self.paths, self.dims,
                                 st.params, st.layout, tables, st.patterns)
            override = agent_ops.unlock(v.agent, v.agent.rng,
                                        st.unlock_probability)
            if override is not None:
                a = override
                unlock_events.append(v.vid)
            applied[v.vid] = a
            decision_order[v.vid] = (
                "".join(str(i) for i in v.agent.order)
                if v.agent.order else "-")

        if self.verify_equilibria and tables is not None:
            self.equilibrium_violations += tables.count_last_mover_violations()

        for v in self.vehicles:
            v.config = next_config(v.config, applied[v.vid], st.params.dt,
                                   v.path, v.dims, st.layout)
        self.t += 1

        # Vehicles that ran off the end of their path have left the scene;
        # they stop being obstacles, players, and trace subjects.
        departed = [v for v in self.vehicles
                    if v.config.s >= v.path.total_length]
        if departed:
            self.vehicles = [v for v in self.vehicles
                             if v.config.s < v.path.total_length]
            for v in departed:
                applied.pop(v.vid, None)

        new_configs = self.configs()
        observed = {
            vid: infer_acceleration(snapshot[vid], new_configs[vid],
                                    st.params.dt)
            for vid in new_configs
        }
        row_changed = priority_ops.right_of_way_changed(
            {v: c.status for v, c in snapshot.items()},
            {v: c.status for v, c in new_configs.items()})
        new_active = self.active_ids()

        events = [Event(self.t, "status", (vid,))
                  for vid in new_configs
                  if new_configs[vid].status is not snapshot[vid].status]
        events += [Event(self.t, "unlock", (vid,)) for vid in unlock_events]

        self._maintain_beliefs(snapshot, new_configs, observed, row_changed,
                               active, new_active, tables)

        collisions = detect_collision(new_configs, self.dims)
        events += [Event(self.t, "collision", pair) for pair in collisions]
        events += [Event(self.t, "congestion", pair)
                   for pair in detect_congestion(new_configs, self.paths)]

        self._append_trace(new_configs, applied, decision_order, events)
        return events

    def _maintain_beliefs(self, snapshot, new_configs, observed, row_changed,
                          active, new_active, tables) -> None:
        st = self.settings
        active_new_configs = {v: new_configs[v] for v in new_active}
        for v in self.vehicles:
            agent = v.agent
            if v.kind is DriverKind.IRRATIONAL:
                continue
            if new_configs[v.vid].status is Status.LEAVING:
                agent.order = None
                agent.deadlock_pending = False
                continue
            missed = agent_ops.mispredicted_ids(agent, snapshot, observed,
                                                st.params, st.prediction_tol,
                                                include_self=False)

            def reinit() -> PriorityOrder:
                return priority_ops.init_angelic(active_new_configs,
                                                 self.paths, agent.rng)

            def fit() -> PriorityOrder:
                return priority_ops.fit_order(
                    snapshot, observed, agent.order, v.vid, self.paths,
                    self.dims, st.params, st.patterns, st.layout, agent.rng,
                    tables=tables,
                    accept_probability=st.fit_accept_probability)

            updated = priority_ops.maintain(v.kind, agent.order, row_changed,
                                            bool(missed), reinit, fit)
            agent.order = tuple(i for i in updated if i in new_active)

            agent.deadlock_pending = agent_ops.detect_deadlock(
                agent, snapshot, new_configs, observed, new_active,
                self.paths, self.dims, st.params, st.layout
            ) if new_active else False

    def _append_trace(self, configs, applied, decision_order, events) -> None:
        by_vehicle: dict[int, list[str]] = {v.vid: [] for v in self.vehicles}
        for ev in events:
            token = ev.kind + (":" + "+".join(str(i) for i in ev.vehicles)
                               if len(ev.vehicles) > 1 else "")
            for vid in ev.vehicles:
                by_vehicle[vid].append(token)
        for v in self.vehicles:
            c = configs[v.vid]
            self.trace.append({
                "step": self.t,
                "id": v.vid,
                "kind": v.kind.value,
                "x": c.x,
                "y": c.y,
                "s": c.s,
                "v": c.v,
                "a": applied[v.vid],
                "status": c.status.name.lower(),
                "order": decision_order[v.vid],
                "deadlock": int(v.agent.deadlock_pending),
                "events": "|".join(by_vehicle[v.vid]),
            })

    # -- fixed point -------------------------------------------------------

    def state_key(self) -> tuple:
        """Full mutable state (minus the step counter).

        Two consecutive equal keys mean the run has reached a strict fixed
        point: no randomness was consumed and nothing moved, so every
        future step repeats verbatim and the run can be fast-forwarded to
        the step cap.
        """
        rows = []
        for v in self.vehicles:
            c = v.config
            a = v.agent
            preds = tuple(sorted(
                (j, acc, cfg.s, cfg.v, int(cfg.status))
                for j, (acc, cfg) in a.last_predictions.items()))
            rng_state = a.rng.bit_generator.state
            rows.append((
                v.vid, c.s, c.v, c.a, int(c.status), a.order, preds,
                a.deadlock_flag, a.deadlock_pending,
                str(rng_state),
            ))
        return tuple(rows)


def run(world: World, record_trace: bool = True) -> SimResult:
    """Drive a world until everyone has left, a collision, or the cap."""
    st = world.settings
    world.init_orders()
    n_vehicles = len(world.vehicles)
    all_events: list[Event] = []
    leave_steps: dict[int, int] = {}
    collided = False
    congested = False
    timeout = False
    total_steps: int | None = None
    prev_key = world.state_key()

    while world.t < st.step_cap:
        events = world.step()
        all_events.extend(events)
        for v in world.vehicles:
            if (v.config.status is Status.LEAVING
                    and v.vid not in leave_steps):
                leave_steps[v.vid] = world.t
        if any(ev.kind == "congestion" for ev in events):
            congested = True
        if any(ev.kind == "collision" for ev in events):
            collided = True
            break
        if len(leave_steps) == n_vehicles:
            total_steps = world.t
            break
        key = world.state_key()
        if key == prev_key:
            timeout = True  # strict fixed point: fast-forward to the cap
            break
        prev_key = key
    else:
        timeout = True

    return SimResult(
        collided=collided,
        congested=congested,
        timeout=timeout,
        total_steps=None if (collided or timeout) else total_steps,
        steps_executed=world.t,
        leave_steps=leave_steps,
        events=all_events,
        trace=world.trace if record_trace else [],
        equilibrium_violations=world.equilibrium_violations,
    )
