"""Target movement strategies: how a road-bound target picks its route.

Each strategy turns (graph, entry edge, rng) into a full edge path that ends
on a goal edge. Strategies are the ground truth behind both simulated targets
and the offline traces that transition models are compiled from. A registry
maps config names to constructors, and `split_pool` carves a strategy pool
into disjoint train / test halves for unknown-behavior experiments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .road_graph import RoadGraph, goal_distance_map, shortest_path, travel_to_go

# A walk that has traveled more than this multiple of the shortest route is
# declared lost rather than sampled forever.
MAX_LENGTH_FACTOR = 50.0


class UnreachableGoalError(ValueError):
    """No goal edge can be reached from the requested entry."""


class WanderingError(RuntimeError):
    """A stochastic walk exceeded the maximum path length (or dead-ended)."""


class InvalidPathError(ValueError):
    """A produced path is not a connected walk ending on a goal edge."""


def validate_path(g: RoadGraph, path: list[int], entry: int) -> None:
    """Check a strategy path: connected, starts at `entry`, ends on the first
    goal edge it touches. Raises InvalidPathError naming the offending hop."""
    if not path:
        raise InvalidPathError("empty path")
    if path[0] != entry:
        raise InvalidPathError(f"path starts at edge {path[0]}, expected entry {entry}")
    for a, b in zip(path, path[1:]):
        if g.edges[b].tail != g.edges[a].head:
            raise InvalidPathError(f"disconnected hop {a} -> {b}")
    if path[-1] not in g.goal_union:
        raise InvalidPathError(f"path ends on non-goal edge {path[-1]}")
    for eid in path[:-1]:
        if eid in g.goal_union:
            raise InvalidPathError(f"goal edge {eid} appears before the end of the path")


def _truncate_at_goal(g: RoadGraph, path: list[int]) -> list[int]:
    # A target wins on entering any goal edge, so the path ends at the first one.
    for i, eid in enumerate(path):
        if eid in g.goal_union:
            return path[: i + 1]
    return path


def _reachable_goals(g: RoadGraph, entry: int) -> list[int]:
    out = []
    for gi, goal_set in enumerate(g.goals):
        dmap = goal_distance_map(g, goal_set)
        if travel_to_go(g, entry, goal_set, dmap) < math.inf:
            out.append(gi)
    return out


def _draw_goal(g: RoadGraph, entry: int, rng: np.random.Generator) -> int:
    reachable = _reachable_goals(g, entry)
    if not reachable:
        raise UnreachableGoalError(f"no goal reachable from entry edge {entry}")
    return reachable[int(rng.integers(len(reachable)))]


@dataclass(frozen=True)
class ShortestPathStrategy:
    """Pick a goal uniformly, then follow the minimal-travel route to it."""

    name: str = "shortest"

    def path(
        self, g: RoadGraph, entry: int, rng: np.random.Generator, goal_index: int | None = None
    ) -> list[int]:
        gi = _draw_goal(g, entry, rng) if goal_index is None else goal_index
        route = shortest_path(g, entry, g.goals[gi])
        if route is None:
            raise UnreachableGoalError(f"goal set {gi} unreachable from entry edge {entry}")
        return _truncate_at_goal(g, route)


@dataclass(frozen=True)
class RandomWalkStrategy:
    """Goal-biased random walk.

    At each junction the next edge is drawn with probability proportional to
    exp(-beta * delta), delta being the change in shortest travel-to-goal the
    hop causes. beta = 0 is a uniform walk; beta -> inf recovers the shortest
    path. Walks exceeding MAX_LENGTH_FACTOR times the shortest route (or
    hitting a dead end) raise WanderingError.
    """

    beta: float
    name: str = "random_walk"

    def path(
        self, g: RoadGraph, entry: int, rng: np.random.Generator, goal_index: int | None = None
    ) -> list[int]:
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        gi = _draw_goal(g, entry, rng) if goal_index is None else goal_index
        goal_set = g.goals[gi]
        dmap = goal_distance_map(g, goal_set)
        base = travel_to_go(g, entry, goal_set, dmap)
        if base == math.inf:
            raise UnreachableGoalError(f"goal set {gi} unreachable from entry edge {entry}")
        max_travel = MAX_LENGTH_FACTOR * base

        path = [entry]
        traveled = 0.0
        cur = entry
        while cur not in g.goal_union:
            if traveled > max_travel:
                raise WanderingError(
                    f"walk from entry {entry} exceeded {MAX_LENGTH_FACTOR:g}x the shortest route"
                )
            cands = g.outgoing(cur)
            if not cands:
                raise WanderingError(f"walk from entry {entry} dead-ended at edge {cur}")
            togo = np.array([travel_to_go(g, e, goal_set, dmap) for e in cands])
            if self.beta == 0.0:
                weights = np.ones(len(cands))
            else:
                finite = togo[np.isfinite(togo)]
                if finite.size == 0:
                    raise WanderingError(f"walk from entry {entry} lost all routes at edge {cur}")
                weights = np.exp(-self.beta * (togo - finite.min()))
            total = weights.sum()
            if total <= 0:
                raise WanderingError(f"walk from entry {entry} lost all routes at edge {cur}")
            cur = cands[int(rng.choice(len(cands), p=weights / total))]
            path.append(cur)
            traveled += g.edges[cur].length
        return path


@dataclass(frozen=True)
class SideRoadsStrategy:
    """Shortest route under weights inflated near well-connected junctions.

    Edge weight is length * (1 + penalty * centrality(head)), centrality being
    the head vertex degree normalized by the graph maximum. penalty = 0 is
    exactly the shortest-path strategy.
    """

    penalty: float
    name: str = "side_roads"

    def path(
        self, g: RoadGraph, entry: int, rng: np.random.Generator, goal_index: int | None = None
    ) -> list[int]:
        if self.penalty < 0:
            raise ValueError("penalty must be non-negative")
        gi = _draw_goal(g, entry, rng) if goal_index is None else goal_index
        degree = {v: len(g.out_of_vertex(v)) + len(g.in_of_vertex(v)) for v in g.vertices}
        max_deg = max(degree.values()) or 1

        def weight(eid: int) -> float:
            e = g.edges[eid]
            return e.length * (1.0 + self.penalty * degree[e.head] / max_deg)

        route = shortest_path(g, entry, g.goals[gi], weight=weight)
        if route is None:
            raise UnreachableGoalError(f"goal set {gi} unreachable from entry edge {entry}")
        return _truncate_at_goal(g, route)


Strategy = ShortestPathStrategy | RandomWalkStrategy | SideRoadsStrategy

_REGISTRY = {
    "shortest": (ShortestPathStrategy, ()),
    "random_walk": (RandomWalkStrategy, ("beta",)),
    "side_roads": (SideRoadsStrategy, ("penalty",)),
}


def make_strategy(name: str, params: dict | None = None) -> Strategy:
    """Build a strategy from its registry name and parameter map."""
    if name not in _REGISTRY:
        raise KeyError(f"unknown strategy {name!r}; known: {sorted(_REGISTRY)}")
    cls, wanted = _REGISTRY[name]
    params = dict(params or {})
    unknown = set(params) - set(wanted)
    if unknown:
        raise ValueError(f"strategy {name!r} got unknown parameters {sorted(unknown)}")
    missing = set(wanted) - set(params)
    if missing:
        raise ValueError(f"strategy {name!r} missing parameters {sorted(missing)}")
    return cls(**{k: float(v) for k, v in params.items()})


def strategy_names() -> list[str]:
    return sorted(_REGISTRY)


@dataclass(frozen=True)
class StrategyPool:
    """Disjoint train / test strategy subsets of a larger pool."""

    train: tuple[Strategy, ...]
    test: tuple[Strategy, ...]


def default_pool(size: int = 40) -> list[Strategy]:
    """A deterministic pool of behaviorally distinct strategies.

    One shortest-path agent, goal-biased random walkers over a log-spaced
    beta grid, and side-road preferrers over a linear penalty grid.
    """
    if size < 3:
        raise ValueError("pool needs at least 3 strategies")
    n_walk = (size - 1) * 3 // 5
    n_side = size - 1 - n_walk
    pool: list[Strategy] = [ShortestPathStrategy()]
    pool.extend(RandomWalkStrategy(beta=float(b)) for b in np.geomspace(3e-4, 3e-2, n_walk))
    pool.extend(SideRoadsStrategy(penalty=float(p)) for p in np.linspace(0.25, 4.0, n_side))
    return pool


def split_pool(pool: list[Strategy], train_count: int, test_count: int, seed: int) -> StrategyPool:
    """Draw disjoint train / test subsets uniformly at random."""
    if train_count + test_count > len(pool):
        raise ValueError(
            f"cannot draw {train_count}+{test_count} strategies from a pool of {len(pool)}"
        )
    if test_count == 0:
        warnings.warn("empty test split: every pool strategy is in training", stacklevel=2)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pool))
    train = tuple(pool[i] for i in order[:train_count])
    test = tuple(pool[i] for i in order[train_count : train_count + test_count])
    return StrategyPool(train=train, test=test)
