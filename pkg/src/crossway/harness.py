"""Scenario generation, Monte Carlo batches, statistics, and file outputs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .agents import AgentState
from .drivers import DriverKind
from .geometry import Arm, Maneuver, build_path
from .kinematics import VehicleDims, config_at
from .sim import Settings, SimResult, Vehicle, World, run

#: Scenario cases: digits are the population mixes from the experiment
#: protocol; the "p" suffix marks the primed variants with random initial
#: velocities.
CASE_IDS = ("1", "2", "3", "4", "1p", "2p", "3p", "4p")

_CASE_KINDS = {
    "1": (DriverKind.ANGELIC,) * 4,
    "2": (DriverKind.ANGELIC,) * 3 + (DriverKind.DEMONIC,),
    "3": (DriverKind.INTERMEDIATE,) * 4,
    "4": (DriverKind.INTERMEDIATE,) * 3 + (DriverKind.IRRATIONAL,),
}

_ARMS = (Arm.NORTH, Arm.EAST, Arm.SOUTH, Arm.WEST)
_MANEUVERS = (Maneuver.STRAIGHT, Maneuver.TURN_LEFT, Maneuver.TURN_RIGHT)

LENGTH_RANGE = (3.5, 5.5)
WIDTH_RANGE = (1.5, 2.1)
CALM_SPEED_RANGE = (0.0, 6.0)

STATS_COLUMNS = ("case", "collision_rate_pct", "congestion_rate_pct",
                 "avg_total_steps", "timeout_count", "runs")
TRACE_COLUMNS = ("step", "id", "kind", "x", "y", "s", "v", "a", "status",
                 "order", "deadlock", "events")


def normalize_case(case: str) -> str:
    case = case.strip().replace("'", "p")
    if case not in CASE_IDS:
        raise ValueError(f"unknown case {case!r}; expected one of {CASE_IDS}")
    return case


def case_code(case: str) -> int:
    return CASE_IDS.index(normalize_case(case)) + 1


@dataclass(frozen=True)
class VehicleSpec:
    vid: int
    kind: DriverKind
    arm: Arm
    maneuver: Maneuver
    length: float
    width: float
    v0: float


@dataclass(frozen=True)
class RunSetup:
    case: str
    run_index: int
    master_seed: int
    vehicles: tuple[VehicleSpec, ...]


def _stream(master_seed: int, code: int, run_index: int,
            channel: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed,
                                 spawn_key=(code, run_index, channel))
    return np.random.default_rng(seq)


def generate_scenario(case: str, run_index: int, master_seed: int,
                      settings: Settings | None = None) -> RunSetup:
    """Concrete four-vehicle setup for one Monte Carlo run.

    One vehicle per arm; the case's driver-type multiset is assigned to
    arms uniformly at random; sizes and maneuvers are randomised; primed
    cases draw initial speeds from the type-dependent intervals.  All
    draws come from a stream keyed by (master seed, case, run index).
    """
    case = normalize_case(case)
    st = settings or Settings()
    primed = case.endswith("p")
    base_kinds = _CASE_KINDS[case.rstrip("p")]
    rng = _stream(master_seed, case_code(case), run_index, channel=4)
    kinds = [base_kinds[i] for i in rng.permutation(4)]
    specs = []
    for vid in range(4):
        maneuver = _MANEUVERS[int(rng.integers(3))]
        length = float(rng.uniform(*LENGTH_RANGE))
        width = float(rng.uniform(*WIDTH_RANGE))
        if not primed:
            v0 = 0.0
        elif kinds[vid] in (DriverKind.DEMONIC, DriverKind.IRRATIONAL):
            v0 = float(rng.uniform(0.0, st.params.speed_limit))
        else:
            v0 = float(rng.uniform(*CALM_SPEED_RANGE))
        specs.append(VehicleSpec(vid=vid, kind=kinds[vid], arm=_ARMS[vid],
                                 maneuver=maneuver, length=length,
                                 width=width, v0=v0))
    return RunSetup(case=case, run_index=run_index, master_seed=master_seed,
                    vehicles=tuple(specs))


def build_world(setup: RunSetup, settings: Settings,
                verify_equilibria: bool = False) -> World:
    vehicles = []
    for spec in setup.vehicles:
        path = build_path(spec.arm, spec.maneuver, settings.layout)
        dims = VehicleDims(length=spec.length, width=spec.width)
        # Spawn with the rear bumper an arm length from the box edge.
        cfg = config_at(path, spec.length / 2.0, spec.v0, dims,
                        settings.layout)
        rng = _stream(setup.master_seed, case_code(setup.case),
                      setup.run_index, channel=spec.vid)
        agent = AgentState(kind=spec.kind, vehicle_id=spec.vid, rng=rng)
        vehicles.append(Vehicle(vid=spec.vid, kind=spec.kind, dims=dims,
                                path=path, config=cfg, agent=agent))
    return World(vehicles, settings, verify_equilibria=verify_equilibria)


def run_single(case: str, run_index: int, master_seed: int,
               settings: Settings | None = None, record_trace: bool = False,
               verify_equilibria: bool = False) -> tuple[RunSetup, SimResult]:
    st = settings or Settings()
    setup = generate_scenario(case, run_index, master_seed, st)
    world = build_world(setup, st, verify_equilibria=verify_equilibria)
    return setup, run(world, record_trace=record_trace)


@dataclass
class AggregateStats:
    """Order-independent fold of per-run outcomes."""

    case: str
    runs: int = 0
    collisions: int = 0
    congestions: int = 0
    timeouts: int = 0
    completed: int = 0
    total_steps_sum: int = 0

    def add(self, result: SimResult) -> None:
        self.runs += 1
        self.collisions += int(result.collided)
        self.congestions += int(result.congested)
        self.timeouts += int(result.timeout)
        if result.total_steps is not None:
            self.completed += 1
            self.total_steps_sum += result.total_steps

    def merge(self, other: "AggregateStats") -> "AggregateStats":
        if other.case != self.case:
            raise ValueError("cannot merge stats across cases")
        out = AggregateStats(self.case)
        for name in ("runs", "collisions", "congestions", "timeouts",
                     "completed", "total_steps_sum"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        return out

    @property
    def collision_rate_pct(self) -> float:
        return 100.0 * self.collisions / self.runs if self.runs else 0.0

    @property
    def congestion_rate_pct(self) -> float:
        return 100.0 * self.congestions / self.runs if self.runs else 0.0

    @property
    def avg_total_steps(self) -> float:
        return (self.total_steps_sum / self.completed
                if self.completed else math.nan)

    def to_row(self) -> dict[str, str]:
        avg = self.avg_total_steps
        return {
            "case": self.case,
            "collision_rate_pct": f"{self.collision_rate_pct:.4f}",
            "congestion_rate_pct": f"{self.congestion_rate_pct:.4f}",
            "avg_total_steps": "" if math.isnan(avg) else f"{avg:.4f}",
            "timeout_count": str(self.timeouts),
            "runs": str(self.runs),
        }


@dataclass
class RunSummary:
    case: str
    run_index: int
    collided: bool
    congested: bool
    timeout: bool
    total_steps: int | None
    steps_executed: int
    mean_vehicle_steps: float | None
    collision_vehicles: tuple[int, ...]

    @classmethod
    def from_result(cls, setup: RunSetup, result: SimResult) -> "RunSummary":
        involved: set[int] = set()
        for ev in result.events:
            if ev.kind == "collision":
                involved.update(ev.vehicles)
        leaves = list(result.leave_steps.values())
        return cls(
            case=setup.case,
            run_index=setup.run_index,
            collided=result.collided,
            congested=result.congested,
            timeout=result.timeout,
            total_steps=result.total_steps,
            steps_executed=result.steps_executed,
            mean_vehicle_steps=(sum(leaves) / len(leaves)
                                if leaves and result.ok else None),
            collision_vehicles=tuple(sorted(involved)),
        )


def run_batch(case: str, runs: int, master_seed: int,
              settings: Settings | None = None,
              verify_equilibria: bool = False,
              on_result: Callable[[RunSetup, SimResult], None] | None = None,
              ) -> tuple[AggregateStats, list[RunSummary]]:
    """Execute a case's Monte Carlo runs and fold the outcome counts.

    Each run is independently seeded, so execution order cannot affect the
    aggregate; ``on_result`` sees every (setup, result) pair as it lands.
    """
    st = settings or Settings()
    case = normalize_case(case)
    stats = AggregateStats(case)
    summaries = []
    for run_index in range(runs):
        setup, result = run_single(case, run_index, master_seed, st,
                                   record_trace=on_result is not None,
                                   verify_equilibria=verify_equilibria)
        stats.add(result)
        summaries.append(RunSummary.from_result(setup, result))
        if on_result is not None:
            on_result(setup, result)
    return stats, summaries


# -- file outputs -----------------------------------------------------------


def write_stats(rows: Iterable[AggregateStats], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=STATS_COLUMNS)
        writer.writeheader()
        for stats in rows:
            writer.writerow(stats.to_row())


def write_run_summaries(summaries: Sequence[RunSummary],
                        path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "run", "collided", "congested", "timeout",
                         "total_steps", "steps_executed",
                         "mean_vehicle_steps", "collision_vehicles"])
        for s in summaries:
            writer.writerow([
                s.case, s.run_index, int(s.collided), int(s.congested),
                int(s.timeout),
                "" if s.total_steps is None else s.total_steps,
                s.steps_executed,
                "" if s.mean_vehicle_steps is None
                else f"{s.mean_vehicle_steps:.4f}",
                "+".join(str(v) for v in s.collision_vehicles),
            ])


def write_trace(setup: RunSetup, result: SimResult, settings: Settings,
                path: str | Path) -> None:
    layout = settings.layout
    with open(path, "w", newline="") as fh:
        fh.write("# crossway trace\n")
        fh.write(f"# case={setup.case} run={setup.run_index} "
                 f"master_seed={setup.master_seed}\n")
        fh.write(f"# layout lane_width={layout.lane_width!r} "
                 f"box_half_width={layout.box_half_width!r} "
                 f"arm_length={layout.arm_length!r} "
                 f"exit_overhang={layout.exit_overhang!r}\n")
        for spec in setup.vehicles:
            fh.write(
                f"# vehicle id={spec.vid} kind={spec.kind.value} "
                f"arm={spec.arm.name} maneuver={spec.maneuver.value} "
                f"length={spec.length!r} width={spec.width!r} "
                f"v0={spec.v0!r}\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in result.trace:
            writer.writerow([row[c] for c in TRACE_COLUMNS])


def write_outputs(case: str, stats: AggregateStats,
                  summaries: Sequence[RunSummary], out_dir: str | Path,
                  settings: Settings | None = None, master_seed: int = 0,
                  plot_run: int | None = 0,
                  traces: bool = False) -> dict[str, Path]:
    """Standard report bundle: stats, per-run table, optional traces, figure."""
    from .plotting import render_run_figure

    st = settings or Settings()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}
    stats_path = out / f"stats_case{case}.csv"
    write_stats([stats], stats_path)
    files["stats"] = stats_path
    summary_path = out / f"runs_case{case}.csv"
    write_run_summaries(summaries, summary_path)
    files["runs"] = summary_path
    if traces:
        trace_dir = out / f"traces_case{case}"
        trace_dir.mkdir(exist_ok=True)
        for summary in summaries:
            setup, result = run_single(case, summary.run_index, master_seed,
                                       st, record_trace=True)
            write_trace(setup, result, st,
                        trace_dir / f"run{summary.run_index:05d}.csv")
        files["traces"] = trace_dir
    if plot_run is not None and summaries:
        setup, result = run_single(case, plot_run, master_seed, st,
                                   record_trace=True)
        fig_path = out / f"trajectories_case{case}_run{plot_run}.svg"
        render_run_figure(setup, result, st, fig_path)
        files["figure"] = fig_path
    return files


# -- trace replay ------------------------------------------------------------


def replay_trace(path: str | Path) -> tuple[bool, list[str]]:
    """Re-derive poses and collision flags from a trace and cross-check."""
    from .geometry import IntersectionLayout
    from .sim import detect_collision
    from .kinematics import Status, config_at

    meta_layout: dict[str, float] = {}
    specs: dict[int, dict[str, str]] = {}
    rows: list[dict[str, str]] = []
    with open(path, newline="") as fh:
        header: list[str] | None = None
        for raw in fh:
            line = raw.rstrip("\n")
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "layout":
                    meta_layout = dict(
                        p.split("=") for p in parts[1:])  # type: ignore
                elif parts and parts[0] == "vehicle":
                    fields = dict(p.split("=") for p in parts[1:])
                    specs[int(fields["id"])] = fields
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
                continue
            rows.append(dict(zip(header, cells)))

    layout = IntersectionLayout(
        lane_width=float(meta_layout["lane_width"]),
        box_half_width=float(meta_layout["box_half_width"]),
        arm_length=float(meta_layout["arm_length"]),
        exit_overhang=float(meta_layout.get("exit_overhang", "6.0")))
    paths = {}
    dims = {}
    for vid, fields in specs.items():
        paths[vid] = build_path(Arm[fields["arm"]],
                                Maneuver(fields["maneuver"]), layout)
        dims[vid] = VehicleDims(length=float(fields["length"]),
                                width=float(fields["width"]))

    issues: list[str] = []
    by_step: dict[int, list[dict[str, str]]] = {}
    for row in rows:
        by_step.setdefault(int(row["step"]), []).append(row)

    last_status: dict[int, Status] = {}
    for step in sorted(by_step):
        configs = {}
        recorded_collisions: set[tuple[int, ...]] = set()
        for row in by_step[step]:
            vid = int(row["id"])
            s, v = float(row["s"]), float(row["v"])
            cfg = config_at(paths[vid], s, v, dims[vid], layout)
            if math.hypot(cfg.x - float(row["x"]),
                          cfg.y - float(row["y"])) > 1e-6:
                issues.append(f"step {step} vehicle {vid}: position does not "
                              f"match the path at s={s}")
            status = Status[row["status"].upper()]
            if vid in last_status and status < last_status[vid]:
                issues.append(f"step {step} vehicle {vid}: status regressed")
            last_status[vid] = status
            configs[vid] = cfg
            for token in row["events"].split("|"):
                if token.startswith("collision:"):
                    pair = tuple(sorted(
                        int(x) for x in token.split(":")[1].split("+")))
                    recorded_collisions.add(pair)
        found = {tuple(sorted(p)) for p in detect_collision(configs, dims)}
        if found != recorded_collisions:
            issues.append(f"step {step}: collision flags disagree "
                          f"(recomputed {sorted(found)}, "
                          f"recorded {sorted(recorded_collisions)})")
    return (not issues, issues)
