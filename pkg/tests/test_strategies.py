"""Route strategies, path validation, and strategy pool management."""

import math

import numpy as np
import pytest

from uav_search.road_graph import Edge, RoadGraph, Vertex
from uav_search.strategies import (
    InvalidPathError,
    RandomWalkStrategy,
    ShortestPathStrategy,
    SideRoadsStrategy,
    UnreachableGoalError,
    WanderingError,
    default_pool,
    make_strategy,
    split_pool,
    strategy_names,
    validate_path,
)


def _graph(coords, edge_pairs, entries=(), goals=()):
    vs = {i: Vertex(i, float(x), float(y)) for i, (x, y) in enumerate(coords)}
    es = {}
    for eid, (t, h) in enumerate(edge_pairs):
        a, b = vs[t], vs[h]
        es[eid] = Edge(eid, t, h, math.hypot(b.x - a.x, b.y - a.y))
    return RoadGraph(vs, es, frozenset(entries), tuple(frozenset(g) for g in goals))


@pytest.fixture
def detour_graph():
    """Two routes to one goal: direct 100 m or 150 + 180 m around."""
    return _graph(
        [(0, 0), (100, 0), (200, 0), (100, 150), (300, 0)],
        [(0, 1), (1, 2), (1, 3), (3, 2), (2, 4)],
        entries={0},
        goals=[{4}],
    )


class TestShortestPath:
    def test_fixed_goal_routes(self, fork_graph):
        rng = np.random.default_rng(0)
        s = ShortestPathStrategy()
        assert s.path(fork_graph, 0, rng, goal_index=0) == [0, 1, 3]
        assert s.path(fork_graph, 0, rng, goal_index=1) == [0, 2, 4]

    def test_goal_drawn_uniformly(self, fork_graph):
        s = ShortestPathStrategy()
        ends = [s.path(fork_graph, 0, np.random.default_rng(seed))[-1] for seed in range(1000)]
        count_first = sum(1 for e in ends if e == 3)
        assert 450 <= count_first <= 550

    def test_truncates_at_first_goal_edge(self):
        # the route to goal set 1 crosses goal set 0 first and stops there
        g = _graph(
            [(0, 0), (100, 0), (200, 0), (300, 0)],
            [(0, 1), (1, 2), (2, 3)],
            entries={0},
            goals=[{1}, {2}],
        )
        path = ShortestPathStrategy().path(g, 0, np.random.default_rng(0), goal_index=1)
        assert path == [0, 1]

    def test_unreachable_goal_index(self):
        # goal set 1 lives on a disconnected component
        g = _graph(
            [(0, 0), (100, 0), (200, 0), (500, 500), (600, 500)],
            [(0, 1), (1, 2), (3, 4)],
            entries={0},
            goals=[{1}, {2}],
        )
        with pytest.raises(UnreachableGoalError, match="goal set 1 unreachable"):
            ShortestPathStrategy().path(g, 0, np.random.default_rng(0), goal_index=1)
        # without a pinned goal only reachable sets are drawn
        for seed in range(10):
            assert ShortestPathStrategy().path(g, 0, np.random.default_rng(seed)) == [0, 1]

    def test_no_goal_reachable(self):
        # the only goal edge sits on a disconnected component
        g = _graph(
            [(0, 0), (100, 0), (500, 500), (600, 500)],
            [(0, 1), (2, 3)],
            entries={0},
            goals=[{1}],
        )
        with pytest.raises(UnreachableGoalError, match="no goal reachable"):
            ShortestPathStrategy().path(g, 0, np.random.default_rng(0))


class TestRandomWalk:
    def test_uniform_walk_splits_even(self, fork_graph):
        s = RandomWalkStrategy(beta=0.0)
        ends = [s.path(fork_graph, 0, np.random.default_rng(seed), goal_index=0)[-1] for seed in range(1000)]
        count_left = sum(1 for e in ends if e == 3)
        assert 450 <= count_left <= 550

    def test_high_beta_recovers_shortest(self, detour_graph):
        s = RandomWalkStrategy(beta=1e6)
        for seed in range(50):
            assert s.path(detour_graph, 0, np.random.default_rng(seed)) == [0, 1, 4]

    def test_walks_end_on_goal(self, detour_graph):
        s = RandomWalkStrategy(beta=0.01)
        for seed in range(100):
            path = s.path(detour_graph, 0, np.random.default_rng(seed))
            assert path[-1] == 4
            validate_path(detour_graph, path, 0)

    def test_dead_end_raises(self):
        # candidate edge 1 leads nowhere; picking it strands the walk
        g = _graph(
            [(0, 0), (100, 0), (100, 100), (200, 0), (300, 0)],
            [(0, 1), (1, 2), (1, 3), (3, 4)],
            entries={0},
            goals=[{3}],
        )
        s = RandomWalkStrategy(beta=0.0)
        outcomes = {"ok": 0, "dead": 0}
        for seed in range(200):
            try:
                s.path(g, 0, np.random.default_rng(seed))
                outcomes["ok"] += 1
            except WanderingError as err:
                assert "dead-ended" in str(err)
                outcomes["dead"] += 1
        assert outcomes["ok"] > 0 and outcomes["dead"] > 0

    def test_endless_wandering_raises(self):
        # a closed cycle with no way out: entering it forces the length cap
        g = _graph(
            [(0, 0), (100, 0), (200, 0), (100, 100), (200, 100), (150, 200)],
            [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (5, 3)],
            entries={0},
            goals=[{1}],
        )
        s = RandomWalkStrategy(beta=0.0)
        outcomes = {"ok": 0, "lost": 0}
        for seed in range(40):
            try:
                path = s.path(g, 0, np.random.default_rng(seed))
                assert path == [0, 1]
                outcomes["ok"] += 1
            except WanderingError as err:
                assert "exceeded" in str(err)
                outcomes["lost"] += 1
        assert outcomes["ok"] > 0 and outcomes["lost"] > 0

    def test_negative_beta_rejected(self, fork_graph):
        with pytest.raises(ValueError, match="beta"):
            RandomWalkStrategy(beta=-1.0).path(fork_graph, 0, np.random.default_rng(0))


class TestSideRoads:
    def test_zero_penalty_is_shortest(self, detour_graph, fork_graph):
        rng = np.random.default_rng(0)
        for g in (detour_graph, fork_graph):
            for gi in range(len(g.goals)):
                assert SideRoadsStrategy(penalty=0.0).path(g, 0, rng, goal_index=gi) == \
                    ShortestPathStrategy().path(g, 0, rng, goal_index=gi)

    def test_penalty_diverts_around_hub(self):
        """A high enough penalty flips the route, exactly where the inflated
        weights say it should."""
        coords = [
            (0, 0), (100, 0), (200, 0), (300, 0),  # v0 v1(start) v2(hub) v3
            (100, 60), (200, 60),                  # detour vertices
            (200, -80), (280, 60), (120, -70),     # hub spurs
        ]
        pairs = [
            (0, 1),                  # e0 entry
            (1, 2), (2, 3),          # e1 e2: direct route through the hub
            (1, 4), (4, 5), (5, 3),  # e3 e4 e5: detour
            (2, 6), (2, 7), (2, 8),  # e6 e7 e8: spurs making v2 a hub
            (3, 6),                  # e9: goal edge leaving v3
        ]
        g = _graph(coords, pairs, entries={0}, goals=[{9}])

        degree = {v: len(g.out_of_vertex(v)) + len(g.in_of_vertex(v)) for v in g.vertices}
        max_deg = max(degree.values())

        def route_cost(route, penalty):
            return sum(
                g.edges[e].length * (1.0 + penalty * degree[g.edges[e].head] / max_deg)
                for e in route[1:-1]  # entry not traveled, goal hop costs 0
            )

        direct, around = [0, 1, 2, 9], [0, 3, 4, 5, 9]
        assert route_cost(direct, 0.0) < route_cost(around, 0.0)
        assert route_cost(direct, 6.0) > route_cost(around, 6.0)
        rng = np.random.default_rng(0)
        assert SideRoadsStrategy(penalty=0.0).path(g, 0, rng, goal_index=0) == direct
        assert SideRoadsStrategy(penalty=6.0).path(g, 0, rng, goal_index=0) == around

    def test_single_route_immune_to_penalty(self, line_graph):
        rng = np.random.default_rng(0)
        for penalty in (0.0, 10.0):
            assert SideRoadsStrategy(penalty=penalty).path(line_graph, 0, rng, goal_index=0) == [0, 1]

    def test_negative_penalty_rejected(self, fork_graph):
        with pytest.raises(ValueError, match="penalty"):
            SideRoadsStrategy(penalty=-0.5).path(fork_graph, 0, np.random.default_rng(0))


class TestValidatePath:
    def test_accepts_good_path(self, fork_graph):
        validate_path(fork_graph, [0, 1, 3], 0)

    @pytest.mark.parametrize(
        "path,needle",
        [
            ([], "empty path"),
            ([1, 3], "expected entry 0"),
            ([0, 3], "disconnected hop 0 -> 3"),
            ([0, 1], "ends on non-goal edge 1"),
        ],
    )
    def test_rejects_bad_paths(self, fork_graph, path, needle):
        with pytest.raises(InvalidPathError) as err:
            validate_path(fork_graph, path, 0)
        assert needle in str(err.value)

    def test_rejects_goal_crossed_mid_path(self):
        # chain where goal set 0 sits between the entry and goal set 1
        g = _graph(
            [(0, 0), (100, 0), (200, 0), (300, 0)],
            [(0, 1), (1, 2), (2, 3)],
            entries={0},
            goals=[{1}, {2}],
        )
        with pytest.raises(InvalidPathError, match="goal edge 1 appears before the end"):
            validate_path(g, [0, 1, 2], 0)


class TestRegistry:
    def test_names(self):
        assert strategy_names() == ["random_walk", "shortest", "side_roads"]

    def test_build_each(self):
        assert make_strategy("shortest") == ShortestPathStrategy()
        assert make_strategy("random_walk", {"beta": "0.5"}) == RandomWalkStrategy(beta=0.5)
        assert make_strategy("side_roads", {"penalty": 2}) == SideRoadsStrategy(penalty=2.0)

    def test_unknown_name(self):
        with pytest.raises(KeyError, match="unknown strategy"):
            make_strategy("teleport")

    def test_unknown_parameter(self):
        with pytest.raises(ValueError, match="unknown parameters"):
            make_strategy("shortest", {"beta": 1.0})

    def test_missing_parameter(self):
        with pytest.raises(ValueError, match="missing parameters"):
            make_strategy("random_walk")


class TestPool:
    def test_default_composition(self):
        pool = default_pool(40)
        assert len(pool) == 40
        kinds = {
            ShortestPathStrategy: 0,
            RandomWalkStrategy: 0,
            SideRoadsStrategy: 0,
        }
        for s in pool:
            kinds[type(s)] += 1
        assert kinds[ShortestPathStrategy] == 1
        assert kinds[RandomWalkStrategy] == 23
        assert kinds[SideRoadsStrategy] == 16
        betas = [s.beta for s in pool if isinstance(s, RandomWalkStrategy)]
        assert betas[0] == pytest.approx(3e-4) and betas[-1] == pytest.approx(3e-2)
        penalties = [s.penalty for s in pool if isinstance(s, SideRoadsStrategy)]
        assert penalties[0] == pytest.approx(0.25) and penalties[-1] == pytest.approx(4.0)

    def test_deterministic(self):
        assert default_pool(40) == default_pool(40)
        assert len(set(map(repr, default_pool(40)))) == 40  # all distinct

    def test_minimum_size(self):
        with pytest.raises(ValueError, match="at least 3"):
            default_pool(2)
        assert len(default_pool(3)) == 3

    def test_split_disjoint_and_seeded(self):
        pool = default_pool(40)
        split = split_pool(pool, 30, 10, seed=7)
        assert len(split.train) == 30 and len(split.test) == 10
        assert not set(map(repr, split.train)) & set(map(repr, split.test))
        again = split_pool(pool, 30, 10, seed=7)
        assert split == again
        other = split_pool(pool, 30, 10, seed=8)
        assert split != other

    def test_split_overflow(self):
        with pytest.raises(ValueError, match="cannot draw"):
            split_pool(default_pool(10), 8, 3, seed=0)

    def test_empty_test_split_warns(self):
        with pytest.warns(UserWarning, match="empty test split"):
            split_pool(default_pool(5), 3, 0, seed=0)

    def test_every_pool_strategy_routes_the_bundled_map(self, border_refined):
        refined, _ = border_refined
        entry = sorted(refined.entries)[0]
        for i, s in enumerate(default_pool(12)):
            path = s.path(refined, entry, np.random.default_rng(100 + i))
            validate_path(refined, path, entry)
