import math

import pytest

from wcbs.config import SolverConfig, Variant, W_SO_INFINITY
from wcbs.conflicts import edge, vertex
from wcbs.grid import AgentTask, GridMap, build_heuristic_table
from wcbs.lowlevel import (
    ConflictTable, SearchTimeout, SearchTrace, SpaceTimeNode,
    count_transition_conflicts, low_level_search,
)
from wcbs.prioritized import cbspp_config

from oracles import constrained_optimal_cost, make_rng, pairwise_collisions, random_instance, satisfies

OPEN4 = GridMap.from_rows(["...."] * 4)

CONFIGS = {
    "vanilla": SolverConfig(w_so=2),
    "vanilla-tight": SolverConfig(w_so=1.2),
    "wo": SolverConfig(w_so=2, variant=Variant.WEIGHTED_OPEN, w_h=1.5),
    "wo-lb+": SolverConfig(w_so=2, variant=Variant.WEIGHTED_OPEN, w_h=1.5, improved_lb=True),
    "wo-saturated": SolverConfig(w_so=2, variant=Variant.WEIGHTED_OPEN, w_h=2),
    # 1.2 is not exact in binary, so w_so * (F / w_h) can round below F
    "wo-saturated-inexact": SolverConfig(w_so=1.2, variant=Variant.WEIGHTED_OPEN, w_h=1.2, improved_lb=True),
    "wf": SolverConfig(w_so=2, variant=Variant.WEIGHTED_FOCAL, w_h=4, r=5),
    "wf-tight": SolverConfig(w_so=1.2, variant=Variant.WEIGHTED_FOCAL, w_h=8, r=2.5),
    "cbspp": cbspp_config(2),
}


def search(grid, task, constraints=(), others=(), cfg=CONFIGS["vanilla"], **kw):
    return low_level_search(grid, task, constraints, list(others), cfg,
                            build_heuristic_table(grid, task.goal), **kw)


def is_valid_path(grid, path):
    return all(grid.is_passable(c) for c in path) and all(
        abs(a[0] - b[0]) + abs(a[1] - b[1]) <= 1 for a, b in zip(path, path[1:]))


@pytest.mark.parametrize("name", ["vanilla", "wf", "cbspp"])
def test_unconstrained_open_grid(name):
    task = AgentTask(0, (0, 0), (3, 2))
    res = search(OPEN4, task, cfg=CONFIGS[name])
    assert res.cost == 5
    assert res.path[0] == task.start and res.path[-1] == task.goal
    if name != "cbspp":
        assert res.lb == 5


def test_unconstrained_weighted_open_bounds():
    task = AgentTask(0, (0, 0), (3, 2))
    for name in ("wo", "wo-lb+"):
        cfg = CONFIGS[name]
        trace = SearchTrace()
        res = search(OPEN4, task, cfg=cfg, trace=trace)
        assert res.cost == 5
        # real-valued bounds, rounded up to whole costs
        naive = max(f / 1.5 for f, _ in trace.bound_inputs)
        improved = max((f + 0.5 * g) / 1.5 for f, g in trace.bound_inputs)
        assert res.lb_naive == math.ceil(naive - 1e-9)
        assert res.lb_improved == math.ceil(improved - 1e-9)
        assert res.lb == (res.lb_improved if cfg.improved_lb else res.lb_naive)
        assert res.lb_naive <= res.lb_improved <= 5


def test_goal_vertex_constraint_forces_delay():
    task = AgentTask(0, (0, 0), (0, 3))
    cons = (vertex(0, (0, 3), 3),)
    for cfg in CONFIGS.values():
        res = search(OPEN4, task, cons, cfg=cfg)
        oracle = constrained_optimal_cost(OPEN4, task, cons)
        assert oracle == 4
        assert res.cost >= oracle
        assert res.lb <= oracle
        assert res.cost <= cfg.w_so * res.lb
        assert satisfies(res.path, 0, cons)


def test_goal_constraint_after_arrival():
    # arriving early is useless: the goal is forbidden later on
    task = AgentTask(0, (0, 0), (0, 2))
    cons = (vertex(0, (0, 2), 6),)
    res = search(OPEN4, task, cons)
    assert res.cost == 7
    assert satisfies(res.path, 0, cons)


def test_edge_constraint():
    corridor = GridMap.from_rows(["...."])
    task = AgentTask(0, (0, 0), (0, 3))
    cons = (edge(0, (0, 0), (0, 1), 1),)
    res = search(corridor, task, cons)
    assert res.path == ((0, 0), (0, 0), (0, 1), (0, 2), (0, 3))
    assert res.lb == 4


def test_no_solution():
    grid = GridMap.from_rows([".@."])
    res = search(grid, AgentTask(0, (0, 0), (0, 2)))
    assert not res.found
    blocked = search(OPEN4, AgentTask(0, (0, 0), (0, 1)), (vertex(0, (0, 0), 0),))
    assert not blocked.found


def test_conflict_avoidance_within_bound():
    # the other agent sits on the straight route at t=2; a wait avoids it
    corridor = GridMap.from_rows(["....", "...."])
    other = ((1, 2), (0, 2), (1, 2))
    task = AgentTask(0, (0, 0), (0, 3))
    res = search(corridor, task, others=[other], cfg=SolverConfig(w_so=2))
    assert res.conflicts == 0
    assert pairwise_collisions([res.path, other]) == []
    tight = search(corridor, task, others=[other], cfg=SolverConfig(w_so=1))
    assert tight.cost == 3


def test_timeout():
    grid = GridMap.from_rows(["." * 30] * 30)
    with pytest.raises(SearchTimeout):
        search(grid, AgentTask(0, (0, 0), (29, 29)), (vertex(0, (29, 29), 600),),
               deadline=0.0)


def test_forbid_conflicts_prunes():
    corridor = GridMap.from_rows(["...."])
    parked = ((0, 2),)
    res = search(corridor, AgentTask(0, (0, 0), (0, 3)), others=[parked],
                 cfg=cbspp_config(1), forbid_conflicts=True)
    assert not res.found


# -------------------------------------------------------- conflict counting


def node_at(cell, t):
    return SpaceTimeNode(cell, t, t, 0, 0, 0, 0, None, 0)


def test_transition_conflicts_examples():
    assert count_transition_conflicts(node_at((0, 0), 0), ((0, 1), 1), []) == 0
    other = ((1, 1), (0, 1))
    assert count_transition_conflicts(node_at((0, 0), 0), ((0, 1), 1), [other]) == 1
    swap = ((0, 1), (0, 0))
    assert count_transition_conflicts(node_at((0, 0), 0), ((0, 1), 1), [swap]) == 1
    parked = ((0, 1),)
    assert count_transition_conflicts(node_at((0, 0), 4), ((0, 1), 5), [parked]) == 1
    with pytest.raises(ValueError):
        count_transition_conflicts(node_at((0, 0), 0), ((0, 1), 2), [])


@pytest.mark.parametrize("seed", range(20))
def test_transition_counts_match_brute_force(seed):
    rng = make_rng(seed)
    grid, tasks = random_instance(rng, 5, 5, 4, 0.1)
    paths = []
    for task in tasks:
        path = [task.start]
        for _ in range(rng.randint(0, 8)):
            path.append(rng.choice([*grid.neighbors(path[-1]), path[-1]]))
        paths.append(tuple(path))
    mine, others = paths[0], paths[1:]
    table = ConflictTable(others)
    total = 0
    horizon = max(len(p) for p in paths)
    for t in range(1, horizon):
        u = mine[min(t - 1, len(mine) - 1)]
        v = mine[min(t, len(mine) - 1)]
        n = count_transition_conflicts(node_at(u, t - 1), (v, t), others)
        assert n == table.transition(u, v, t)
        total += n
    brute = [c for c in pairwise_collisions(paths) if c[1] == 0 and c[0] >= 1]
    assert total == len(brute)


def test_head_on_swap_counted_once():
    a = ((0, 0), (0, 1))
    b = ((0, 1), (0, 0))
    assert count_transition_conflicts(node_at((0, 0), 0), ((0, 1), 1), [b]) == 1
    assert pairwise_collisions([a, b]) == [(1, 0, 1, "edge")]


# ------------------------------------------------------------- properties


def random_low_level_case(seed):
    rng = make_rng(seed)
    size = rng.randint(4, 8)
    grid, tasks = random_instance(rng, size, size, 4, 0.15)
    task = tasks[0]
    others = []
    for t in tasks[1:]:
        h = build_heuristic_table(grid, t.goal)
        path = [t.start]
        while path[-1] != t.goal:
            options = [v for v in (*grid.neighbors(path[-1]), path[-1]) if h[v] <= h[path[-1]]]
            path.append(rng.choice(options))
        others.append(tuple(path))
    cons = []
    for _ in range(rng.randint(0, 5)):
        cell = rng.choice(grid.free_cells())
        t = rng.randint(1, 2 * size)
        if (cell, t) != (task.start, 0):
            cons.append(vertex(0, cell, t))
    return grid, task, tuple(cons), others


@pytest.mark.parametrize("seed", range(40))
@pytest.mark.parametrize("name", list(CONFIGS))
def test_bound_admissibility_and_monotonicity(seed, name):
    cfg = CONFIGS[name]
    grid, task, cons, others = random_low_level_case(seed)
    trace = SearchTrace(check_focal=True)
    res = search(grid, task, cons, others, cfg=cfg, trace=trace)
    oracle = constrained_optimal_cost(grid, task, cons)
    if oracle is None:
        assert not res.found
        return
    assert res.found
    assert is_valid_path(grid, res.path)
    assert res.path[0] == task.start and res.path[-1] == task.goal
    assert satisfies(res.path, 0, cons)
    assert res.lb <= oracle <= res.cost
    assert res.cost <= cfg.w_so * res.lb
    assert all(a <= b for a, b in zip(trace.lbs, trace.lbs[1:]))
    assert all(n.g == n.t for n in trace.generated)
    for n in trace.generated:
        if n.parent is not None:
            assert n.c >= n.parent.c
    if cfg.variant is Variant.WEIGHTED_OPEN:
        assert res.lb_naive <= res.lb_improved <= oracle


@pytest.mark.parametrize("seed", range(30))
def test_weighted_open_unit_weight_is_vanilla_node_for_node(seed):
    grid, task, cons, others = random_low_level_case(seed)
    runs = []
    for cfg in (SolverConfig(w_so=1.5), SolverConfig(w_so=1.5, variant=Variant.WEIGHTED_OPEN, w_h=1)):
        trace = SearchTrace()
        res = search(grid, task, cons, others, cfg=cfg, trace=trace)
        runs.append((res.path, res.lb, [(n.cell, n.t, n.c, n.f_open, n.f_focal) for n in trace.expansions]))
    assert runs[0] == runs[1]


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("cfg", [SolverConfig(w_so=W_SO_INFINITY), cbspp_config(1), cbspp_config(2)])
def test_unbounded_focal_swallows_open(seed, cfg):
    # FOCAL holds all of OPEN, so every pop is the (conflicts, f_open) minimum of OPEN
    grid, task, cons, others = random_low_level_case(seed)
    if task.start == task.goal:
        return
    trace = SearchTrace(check_focal=True)
    search(grid, task, cons, others, cfg=cfg, trace=trace)
    assert trace.focal_covers_open and all(trace.focal_covers_open)
    assert all(trace.pop_is_open_min)
    if cfg.w_h == 1:
        # with an unweighted (consistent) key the whole sequence is sorted
        keys = [(n.c, n.f_open) for n in trace.expansions]
        assert keys == sorted(keys)
