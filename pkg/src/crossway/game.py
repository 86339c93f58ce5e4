"""Finite one-round sequential games and their backward-induction solution.

``SequentialGame`` is the generic contract (players in decision order, a
shared finite pattern set, per-player cost over full profiles).  The
decision games played at the intersection are built through
:class:`DecisionTables`, which precomputes every rollout quantity for one
world snapshot so that the games for all candidate priority orders can be
solved from the same tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .costs import CostParams, PriorityOrder, pair_penalty, velocity_feature
from .geometry import (
    IntersectionLayout,
    NavigationPath,
    occupancy_disks,
    paths_conflict,
)
from .kinematics import Configuration, Status, VehicleDims, next_config

#: Acceleration patterns (m/s^2) available to every vehicle, most
#: conservative first; the head of the chosen pattern is the control input.
DEFAULT_PATTERNS: tuple[tuple[float, float, float], ...] = (
    (-50.0, -50.0, -50.0),
    (0.0, 0.0, 0.0),
    (10.0, 0.0, 0.0),
    (20.0, 0.0, 0.0),
)

StrategyProfile = dict[int, int]  # player id -> index into the pattern set

_EXHAUSTIVE_LIMIT = 200_000


def validate_patterns(patterns: Sequence[Sequence[float]], horizon: int) -> None:
    if not patterns:
        raise ValueError("pattern set must not be empty")
    for p in patterns:
        if len(p) != horizon:
            raise ValueError("all patterns must have horizon length")


@dataclass(frozen=True)
class SequentialGame:
    """Perfect-information game; ``players[0]`` commits first."""

    players: tuple[int, ...]
    strategies: tuple[tuple[float, ...], ...]
    cost: Callable[[int, StrategyProfile], float] = field(repr=False)
    tables: "DecisionTables | None" = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(set(self.players)) != len(self.players):
            raise ValueError("players must be distinct")
        if not self.strategies:
            raise ValueError("strategy set must not be empty")


def solve_backward_induction(game: SequentialGame) -> StrategyProfile:
    """Backward-induction equilibrium profile.

    The last player in the decision order best-responds to every prefix of
    earlier choices; earlier players choose anticipating the induced
    continuations.  Ties always go to the lowest pattern index.
    """
    if game.tables is not None:
        return game.tables.solve(game.players)
    players = game.players
    n, m = len(players), len(game.strategies)
    memo: dict[tuple[int, ...], tuple[int, ...]] = {}

    def continuation(prefix: tuple[int, ...]) -> tuple[int, ...]:
        if len(prefix) == n:
            return prefix
        got = memo.get(prefix)
        if got is not None:
            return got
        k = len(prefix)
        best_full: tuple[int, ...] | None = None
        best_cost = None
        for idx in range(m):
            full = continuation(prefix + (idx,))
            c = game.cost(players[k], dict(zip(players, full)))
            if best_cost is None or c < best_cost:
                best_cost, best_full = c, full
        memo[prefix] = best_full
        return best_full

    return dict(zip(players, continuation(())))


def exhaustive_solve(game: SequentialGame) -> StrategyProfile:
    """Oracle solver: tabulate every profile, then walk the full game tree.

    Must agree with :func:`solve_backward_induction` exactly; kept free of
    memoisation and of the table fast path on purpose.
    """
    players = game.players
    n, m = len(players), len(game.strategies)
    if m ** n > _EXHAUSTIVE_LIMIT:
        raise ValueError("game too large for exhaustive enumeration")
    costs = {
        combo: tuple(game.cost(p, dict(zip(players, combo))) for p in players)
        for combo in itertools.product(range(m), repeat=n)
    }

    def walk(prefix: tuple[int, ...]) -> tuple[int, ...]:
        k = len(prefix)
        if k == n:
            return prefix
        best = None
        best_cost = None
        for idx in range(m):
            leaf = walk(prefix + (idx,))
            c = costs[leaf][k]
            if best_cost is None or c < best_cost:
                best_cost, best = c, leaf
        return best

    return dict(zip(players, walk(())))


class DecisionTables:
    """Rollout cost tables for one snapshot of the world.

    All quantities that do not depend on the priority order (trajectories,
    pairwise clearances, velocity sums, danger terms) are computed once;
    the order then only selects which player is exempt from the caution
    term and in which sequence players commit.  Vehicles outside
    ``active`` take no decision and coast through every rollout, but still
    appear as obstacles in the players' safety terms.
    """

    def __init__(self, configs: Mapping[int, Configuration],
                 paths: Mapping[int, NavigationPath],
                 dims: Mapping[int, VehicleDims], params: CostParams,
                 patterns: Sequence[Sequence[float]],
                 layout: IntersectionLayout,
                 active: Sequence[int]) -> None:
        validate_patterns(patterns, params.horizon)
        self.params = params
        self.patterns = tuple(tuple(p) for p in patterns)
        self.players = tuple(sorted(active))
        self.n = len(self.players)
        self.m = len(self.patterns)
        self._axis = {j: i for i, j in enumerate(self.players)}
        self._cache: dict[tuple[int, ...], StrategyProfile] = {}

        h, dt, lam = params.horizon, params.dt, params.discount
        weights = np.array([lam ** s for s in range(h)])

        # Per-vehicle rollouts: players under every pattern, others coasting.
        centers: dict[int, np.ndarray] = {}   # (n_opts, h, 3, 2)
        radius: dict[int, float] = {}
        leaving: dict[int, np.ndarray] = {}   # (n_opts, h) bool
        speeds: dict[int, np.ndarray] = {}    # (n_opts, h)
        for j, cfg in configs.items():
            options = self.patterns if j in self._axis else ((0.0,) * h,)
            cs, lv, vs = [], [], []
            for pat in options:
                state = cfg
                row_c, row_l, row_v = [], [], []
                for s in range(h):
                    disks = occupancy_disks((state.x, state.y, state.heading),
                                            dims[j].length, dims[j].width)
                    row_c.append(disks.centers)
                    row_l.append(state.status is Status.LEAVING)
                    row_v.append(state.v)
                    if s + 1 < h:
                        state = next_config(state, pat[s], dt, paths[j],
                                            dims[j], layout)
                cs.append(row_c)
                lv.append(row_l)
                vs.append(row_v)
            centers[j] = np.asarray(cs)
            radius[j] = occupancy_disks((cfg.x, cfg.y, cfg.heading),
                                        dims[j].length, dims[j].width).radius
            leaving[j] = np.asarray(lv)
            speeds[j] = np.asarray(vs)

        # Discounted velocity feature per (player, pattern).
        self._velo: dict[int, np.ndarray] = {}
        for j in self.players:
            v = speeds[j]
            gap = params.speed_limit - v
            coef = np.where(v <= params.speed_limit, params.c_under,
                            params.c_over)
            self._velo[j] = (coef * gap * gap) @ weights

        # Discounted pairwise safety terms, split by case.
        pair_caution: dict[tuple[int, int], np.ndarray] = {}
        pair_danger: dict[tuple[int, int], np.ndarray] = {}
        solo_caution = {j: np.zeros(self.m) for j in self.players}
        solo_danger = {j: np.zeros(self.m) for j in self.players}
        ids = list(configs)
        for j in self.players:
            for k in ids:
                if k == j or not paths_conflict(paths[j], paths[k]):
                    continue
                diff = (centers[j][:, None, :, :, None, :]
                        - centers[k][None, :, :, None, :, :])
                d = np.sqrt((diff * diff).sum(-1)).min(axis=(3, 4))
                d = np.maximum(d - (radius[j] + radius[k]), 0.0)
                quad = (params.safe_distance - d) ** 2
                alive = ~leaving[j][:, None, :]
                caution = np.where(
                    alive & (d > params.danger_distance)
                    & (d < params.safe_distance),
                    params.c_caution * quad, 0.0) @ weights
                danger = np.where(
                    alive & (d <= params.danger_distance),
                    params.c_danger * quad, 0.0) @ weights
                if k in self._axis:
                    pair_caution[(j, k)] = caution
                    pair_danger[(j, k)] = danger
                else:
                    solo_caution[j] += caution[:, 0]
                    solo_danger[j] += danger[:, 0]

        # Full-profile tensors on canonical axes (players sorted by id).
        shape = (self.m,) * self.n
        self._base: dict[int, np.ndarray] = {}
        self._with_caution: dict[int, np.ndarray] = {}
        for j in self.players:
            aj = self._axis[j]
            base = np.zeros(shape)
            base += self._expand1(self._velo[j] + solo_danger[j], aj)
            caution = np.zeros(shape)
            caution += self._expand1(solo_caution[j], aj)
            for k in self.players:
                if (j, k) in pair_danger:
                    base += self._expand2(pair_danger[(j, k)], aj, self._axis[k])
                    caution += self._expand2(pair_caution[(j, k)], aj,
                                             self._axis[k])
            self._base[j] = base
            self._with_caution[j] = base + caution

    def _expand1(self, vec: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.n
        shape[axis] = self.m
        return vec.reshape(shape)

    def _expand2(self, mat: np.ndarray, axis_a: int, axis_b: int) -> np.ndarray:
        shape = [1] * self.n
        shape[axis_a] = self.m
        shape[axis_b] = self.m
        if axis_a < axis_b:
            return mat.reshape(shape)
        return mat.T.reshape(shape)

    def cost_tensor(self, j: int, order: PriorityOrder) -> np.ndarray:
        """Accumulated cost of ``j`` for every profile, canonical axes."""
        return self._base[j] if j == order[0] else self._with_caution[j]

    def game_for(self, order: PriorityOrder) -> SequentialGame:
        """The decision game under ``order`` (highest priority commits first)."""
        if sorted(order) != list(self.players):
            raise ValueError("order must cover exactly the active vehicles")
        tensors = {j: self.cost_tensor(j, order) for j in order}
        players = tuple(order)
        axis = self._axis

        def cost(j: int, profile: StrategyProfile) -> float:
            idx = [0] * self.n
            for p in players:
                idx[axis[p]] = profile[p]
            return float(tensors[j][tuple(idx)])

        return SequentialGame(players=players, strategies=self.patterns,
                              cost=cost, tables=self)

    def solve(self, order: PriorityOrder) -> StrategyProfile:
        got = self._cache.get(tuple(order))
        if got is not None:
            return dict(got)
        self.solve_many([tuple(order)])
        return dict(self._cache[tuple(order)])

    def solve_many(self, orders: Sequence[PriorityOrder]) -> dict:
        """Solve the decision games of several orders in one batch."""
        todo = [tuple(o) for o in orders if tuple(o) not in self._cache]
        if todo:
            self._solve_batch(todo)
        return {tuple(o): dict(self._cache[tuple(o)]) for o in orders}

    def _solve_batch(self, orders: list[tuple[int, ...]]) -> None:
        n = self.n
        perms = [tuple(self._axis[v] for v in o) for o in orders]
        work = []
        for pos in range(n):
            mats = [
                np.transpose(self.cost_tensor(o[pos], o), perms[b])
                for b, o in enumerate(orders)
            ]
            work.append(np.stack(mats))
        choices = []
        for pos in range(n - 1, 0, -1):
            idx = np.argmin(work[pos], axis=pos + 1)
            choices.append(idx)
            exp = np.expand_dims(idx, pos + 1)
            for q in range(pos):
                work[q] = np.take_along_axis(work[q], exp,
                                             axis=pos + 1).squeeze(pos + 1)
        first = np.argmin(work[0], axis=1)
        choices.reverse()
        for b, order in enumerate(orders):
            picked = [int(first[b])]
            for pos in range(1, n):
                picked.append(int(choices[pos - 1][b][tuple(picked)]))
            self._cache[order] = {order[pos]: picked[pos] for pos in range(n)}

    def equilibrium_heads(self, order: PriorityOrder) -> dict[int, float]:
        """First pattern element of every player's equilibrium strategy."""
        profile = self.solve(order)
        return {j: self.patterns[profile[j]][0] for j in order}

    def count_last_mover_violations(self) -> int:
        """Solved games where a unilateral swap would help the last mover.

        Backward induction guarantees none; this is the cheap runtime check
        behind the equilibrium-verification mode.
        """
        violations = 0
        for order, profile in self._cache.items():
            last = order[-1]
            tensor = self.cost_tensor(last, order)
            idx = [0] * self.n
            for j, choice in profile.items():
                idx[self._axis[j]] = choice
            achieved = tensor[tuple(idx)]
            axis = self._axis[last]
            for alt in range(self.m):
                idx[axis] = alt
                if tensor[tuple(idx)] < achieved:
                    violations += 1
                    break
            idx[axis] = profile[last]
        return violations


def build_decision_game(configs: Mapping[int, Configuration],
                        paths: Mapping[int, NavigationPath],
                        dims: Mapping[int, VehicleDims], order: PriorityOrder,
                        params: CostParams,
                        patterns: Sequence[Sequence[float]],
                        layout: IntersectionLayout) -> SequentialGame:
    """Decision game at snapshot ``configs`` under priority order ``order``.

    Players are the vehicles of ``order`` in priority sequence; every
    other vehicle present in ``configs`` is treated as a coasting obstacle.
    """
    tables = DecisionTables(configs, paths, dims, params, patterns, layout,
                            active=order)
    return tables.game_for(order)
