"""Priority-order beliefs: initialisation, right-of-way and fitting updates.

Each rational vehicle privately ranks the active vehicles; the first
element of its order is the vehicle it believes holds the right of way.
Law-abiding vehicles derive the ranking from the precedence rules (already
engaged, approaching from the left, clearly closer); selfish ones simply
put themselves first.  When observations contradict a vehicle's
predictions it searches for the ranking that best explains what it saw.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .drivers import DriverKind
from .costs import CostParams, PriorityOrder
from .game import DecisionTables
from .geometry import (
    IntersectionLayout,
    NavigationPath,
    left_of,
)
from .kinematics import Configuration, Status, VehicleDims, next_config, \
    observed_input

#: Margin (metres) by which a vehicle must be closer to the centre before
#: distance alone grants it precedence.
DISTANCE_RULE_MARGIN = 2.0

#: Chance of adopting a better-fitting order that would make the vehicle
#: itself more aggressive.
FIT_ACCEPT_PROBABILITY = 0.25

_FACTORIAL_GUARD = 6
_SCORE_TOL = 1e-9


def _linear_extensions(ids: Sequence[int],
                       edges: set[tuple[int, int]]) -> list[tuple[int, ...]]:
    out = []
    for perm in itertools.permutations(sorted(ids)):
        rank = {v: i for i, v in enumerate(perm)}
        if all(rank[a] < rank[b] for a, b in edges):
            out.append(perm)
    return out


def _find_cycle_edges(ids: Sequence[int],
                      edges: set[tuple[int, int]]) -> list[tuple[int, int]]:
    """Edges lying on some directed cycle (nodes not reachable in a DAG peel)."""
    remaining = set(ids)
    adj = {v: {b for a, b in edges if a == v} for v in ids}
    changed = True
    while changed:
        changed = False
        for v in list(remaining):
            if all(a not in remaining for a, b in edges if b == v):
                remaining.discard(v)
                changed = True
    return [(a, b) for a, b in edges if a in remaining and b in remaining]


def init_angelic(configs: Mapping[int, Configuration],
                 paths: Mapping[int, NavigationPath],
                 rng: np.random.Generator) -> PriorityOrder:
    """Uniformly random order satisfying the right-of-way constraints.

    Constraints are collected per pair in order of importance: (A) a
    vehicle already inside the box precedes one that is not; (B) with
    fewer than four vehicles, a vehicle approaching from another's left
    precedes it; (C) a vehicle more than 2 m closer to the centre precedes.
    Lower tiers only apply to pairs the higher tiers left unrelated, and
    rule-C edges are dropped (closest to the margin first) if they ever
    close a cycle.
    """
    ids = sorted(configs)
    if len(ids) == 1:
        return (ids[0],)
    edges: set[tuple[int, int]] = set()
    margins: dict[tuple[int, int], float] = {}
    few_enough = len(ids) < 4
    for j, k in itertools.combinations(ids, 2):
        related = False
        ins_j = configs[j].status is Status.INSIDE
        ins_k = configs[k].status is Status.INSIDE
        if ins_j != ins_k:
            edges.add((j, k) if ins_j else (k, j))
            related = True
        if not related and few_enough:
            if paths[j].entry_arm is not paths[k].entry_arm:
                if left_of(paths[j].entry_arm, paths[k].entry_arm):
                    edges.add((j, k))
                    related = True
                elif left_of(paths[k].entry_arm, paths[j].entry_arm):
                    edges.add((k, j))
                    related = True
        if not related:
            d_j = math.hypot(configs[j].x, configs[j].y)
            d_k = math.hypot(configs[k].x, configs[k].y)
            if d_k - d_j > DISTANCE_RULE_MARGIN:
                edges.add((j, k))
                margins[(j, k)] = d_k - d_j - DISTANCE_RULE_MARGIN
            elif d_j - d_k > DISTANCE_RULE_MARGIN:
                edges.add((k, j))
                margins[(k, j)] = d_j - d_k - DISTANCE_RULE_MARGIN

    candidates = _linear_extensions(ids, edges)
    while not candidates:
        cyclic = _find_cycle_edges(ids, edges)
        droppable = [e for e in cyclic if e in margins]
        if not droppable:
            raise RuntimeError("priority constraints cycle without rule-C edges")
        edges.discard(min(droppable, key=lambda e: margins[e]))
        candidates = _linear_extensions(ids, edges)
    return candidates[int(rng.integers(len(candidates)))]


def init_selfish(self_id: int, ids: Sequence[int],
                 rng: np.random.Generator) -> PriorityOrder:
    """Uniformly random order with ``self_id`` ranked first."""
    others = sorted(v for v in ids if v != self_id)
    perm = [others[i] for i in rng.permutation(len(others))]
    return (self_id, *perm)


def right_of_way_changed(prev_statuses: Mapping[int, Status],
                         cur_statuses: Mapping[int, Status]) -> bool:
    """True when any vehicle entered the inside or the leaving set."""
    return any(
        cur_statuses[v] is not prev_statuses[v]
        for v in cur_statuses
        if v in prev_statuses
    )


def fit_order(configs_prev: Mapping[int, Configuration],
              observed_acc: Mapping[int, float], current: PriorityOrder,
              self_id: int, paths: Mapping[int, NavigationPath],
              dims: Mapping[int, VehicleDims], params: CostParams,
              patterns: Sequence[Sequence[float]],
              layout: IntersectionLayout, rng: np.random.Generator,
              tables: DecisionTables | None = None,
              accept_probability: float = FIT_ACCEPT_PROBABILITY,
              ) -> PriorityOrder:
    """Re-rank to the order whose game best explains the observed inputs.

    Scores every permutation by the total gap between its equilibrium
    first-step accelerations and the observed ones (both viewed through
    the kinematic observation channel).  Ties prefer the order giving the
    vehicle itself the smallest acceleration, then the current order, then
    the lexicographically smallest.  A winner that would make the vehicle
    more aggressive than its current belief is only adopted with
    probability ``accept_probability``.
    """
    ids = tuple(sorted(current))
    n = len(ids)
    if n > _FACTORIAL_GUARD:
        raise ValueError("too many vehicles for exhaustive order fitting")
    if n == 1:
        return (ids[0],)
    if tables is None:
        tables = DecisionTables(configs_prev, paths, dims, params, patterns,
                                layout, active=ids)

    orders = [tuple(p) for p in itertools.permutations(ids)]
    solved = tables.solve_many(orders)

    def canonical(j: int, accel: float) -> float:
        nxt = next_config(configs_prev[j], accel, params.dt, paths[j],
                          dims[j], layout)
        return observed_input(configs_prev[j], nxt, params.dt)

    scores: dict[tuple[int, ...], float] = {}
    self_heads: dict[tuple[int, ...], float] = {}
    for order in orders:
        profile = solved[order]
        score = 0.0
        for j in order:
            head = tables.patterns[profile[j]][0]
            score += abs(canonical(j, head) - observed_acc[j])
        scores[order] = score
        self_heads[order] = tables.patterns[profile[self_id]][0]

    best_score = min(scores.values())
    argmin = [o for o in orders if scores[o] <= best_score + _SCORE_TOL]
    least_self = min(self_heads[o] for o in argmin)
    subset = [o for o in argmin if self_heads[o] <= least_self + _SCORE_TOL]
    current_t = tuple(current)
    candidate = current_t if current_t in subset else min(subset)

    if self_heads[candidate] <= self_heads[current_t]:
        return candidate
    if rng.random() < accept_probability:
        return candidate
    return current_t


def maintain(kind: DriverKind, current: PriorityOrder | None,
             row_changed: bool, mispredicted: bool,
             reinit: Callable[[], PriorityOrder],
             fit: Callable[[], PriorityOrder]) -> PriorityOrder | None:
    """Per-step order upkeep, dispatched on the driver type."""
    if kind is DriverKind.IRRATIONAL:
        return None
    if kind is DriverKind.DEMONIC:
        return current
    if kind is DriverKind.ANGELIC and row_changed:
        return reinit()
    if mispredicted:
        return fit()
    return current
