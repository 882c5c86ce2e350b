"""Single-agent space-time focal search with vanilla, weighted-open and
weighted-focal priority functions.

OPEN is ordered by ``f_open`` and certifies the lower bound; FOCAL holds the
OPEN nodes whose ``f_open`` is within the focal bound of the best OPEN key and
is ordered by ``f_focal``.  Every action, including wait, costs 1 until the
agent arrives, so ``g == t`` for every node.
"""
from __future__ import annotations

import heapq
import math
import time
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .config import ConfigError, SolverConfig, Variant
from .conflicts import Constraint, ConstraintIndex, Path, position
from .grid import AgentTask, Cell, GridMap, HeuristicTable

_TIME_CHECK_EVERY = 256
# Slack for float rounding when a bound is rounded up to a whole cost.
_CERTIFY_EPS = 1e-9


class SearchTimeout(Exception):
    """Wall-clock budget exhausted."""


# ------------------------------------------------------------ priority keys


def f_open(g: float, h: float, cfg: SolverConfig) -> float:
    if cfg.variant is Variant.WEIGHTED_OPEN:
        return g + cfg.w_h * h
    return g + h


def f_focal(g: float, h: float, c: int, cfg: SolverConfig) -> float:
    if cfg.variant is Variant.WEIGHTED_FOCAL:
        return g + cfg.w_h * (h + cfg.r * c)
    return c


def focal_bound(cfg: SolverConfig) -> float:
    if cfg.variant is Variant.WEIGHTED_OPEN:
        if cfg.w_h > cfg.w_so:
            raise ConfigError("weighted-open focal bound would drop below 1")
        return cfg.w_so / cfg.w_h
    return cfg.w_so


def naive_lower_bound(f_best: float, w_h: float) -> float:
    return f_best / w_h


def improved_lower_bound(f_best: float, g_min: float, w_h: float) -> float:
    return (f_best + (w_h - 1) * g_min) / w_h


def lower_bound(f_best: float, g_min: float, cfg: SolverConfig) -> float:
    if cfg.variant is not Variant.WEIGHTED_OPEN:
        return f_best
    if cfg.improved_lb:
        return improved_lower_bound(f_best, g_min, cfg.w_h)
    return naive_lower_bound(f_best, cfg.w_h)


def certify(bound: float) -> float:
    """Round a real lower bound up to the next whole cost.

    Path costs are integers, so any valid bound may be raised to its ceiling.
    Subtracting a small slack first absorbs float error in the weighted
    formulas, which could otherwise push a bound a few ulps past the optimum.
    """
    return float(math.ceil(bound - _CERTIFY_EPS))


def focal_threshold(f_best: float, cfg: SolverConfig) -> float:
    """Largest ``f_open`` admitted to FOCAL, i.e. ``focal_bound(cfg) * f_best``.

    Written as ``w_so * naive_lb`` so that it never exceeds ``w_so`` times the
    certified bound reported alongside the path.
    """
    if cfg.variant is Variant.WEIGHTED_OPEN:
        return cfg.w_so * naive_lower_bound(f_best, cfg.w_h)
    return cfg.w_so * f_best


# --------------------------------------------------------- conflict counting


class ConflictTable:
    """Occupancy of the other agents' paths, for counting conflicts of a
    candidate transition.  Agents stay parked at their last cell forever."""

    def __init__(self, paths: Iterable[Optional[Path]]):
        self.vertex: Dict[Tuple[Cell, int], int] = defaultdict(int)
        self.edge: Dict[Tuple[Cell, Cell, int], int] = defaultdict(int)
        parked: Dict[Cell, List[int]] = defaultdict(list)
        visits: Dict[Cell, List[int]] = defaultdict(list)
        for p in paths:
            if not p:
                continue
            arrival = len(p) - 1
            for t in range(arrival):
                self.vertex[(p[t], t)] += 1
                visits[p[t]].append(t)
                if p[t] != p[t + 1]:
                    self.edge[(p[t], p[t + 1], t + 1)] += 1
            parked[p[arrival]].append(arrival)
        self.parked = {cell: sorted(ts) for cell, ts in parked.items()}
        self.visits = {cell: sorted(ts) for cell, ts in visits.items()}
        self.vertex = dict(self.vertex)
        self.edge = dict(self.edge)

    def occupancy(self, cell: Cell, t: int) -> int:
        n = self.vertex.get((cell, t), 0)
        arrivals = self.parked.get(cell)
        if arrivals:
            n += bisect_right(arrivals, t)
        return n

    def transition(self, u: Cell, v: Cell, t: int) -> int:
        """Conflicts incurred by moving ``u -> v`` arriving at ``t``."""
        n = self.occupancy(v, t)
        if u != v:
            n += self.edge.get((v, u, t), 0)
        return n

    def future(self, cell: Cell, t: int) -> int:
        """Conflicts incurred by parking at ``cell`` from ``t`` onwards:
        later visits by other agents plus agents parked on the cell."""
        n = len(self.parked.get(cell, ()))
        times = self.visits.get(cell)
        if times:
            n += len(times) - bisect_right(times, t)
        return n


@dataclass
class SpaceTimeNode:
    cell: Cell
    t: int
    g: int
    h: int
    c: int
    f_open: float
    f_focal: float
    parent: Optional["SpaceTimeNode"]
    seq: int
    terminal: bool = False
    in_open: bool = True
    in_focal: bool = False

    def path(self) -> Path:
        cells = []
        node = self
        while node is not None:
            if not node.terminal:
                cells.append(node.cell)
            node = node.parent
        return tuple(reversed(cells))


def count_transition_conflicts(
    from_node: SpaceTimeNode, to: Tuple[Cell, int], other_paths: Iterable[Path]
) -> int:
    """Vertex plus edge conflicts of one transition against ``other_paths``."""
    cell, t = to
    if t != from_node.t + 1:
        raise ValueError("transition must advance time by exactly one step")
    n = 0
    for p in other_paths:
        if not p:
            continue
        if position(p, t) == cell:
            n += 1
        elif cell != from_node.cell and position(p, t - 1) == cell and position(p, t) == from_node.cell:
            n += 1
    return n


# ----------------------------------------------------------------- search


@dataclass
class LowLevelResult:
    path: Optional[Path]
    lb: float
    expanded: int = 0
    generated: int = 0
    conflicts: int = 0
    # Running maxima of both weighted-open bounds (equal to lb otherwise).
    lb_naive: float = 0.0
    lb_improved: float = 0.0

    @property
    def found(self) -> bool:
        return self.path is not None

    @property
    def cost(self) -> int:
        return len(self.path) - 1


@dataclass
class SearchTrace:
    """Optional instrumentation: expansion order and lower-bound history.

    With ``check_focal`` the search verifies the OPEN/FOCAL membership rule
    after every update by rescanning OPEN (slow)."""

    expansions: List[SpaceTimeNode] = field(default_factory=list)
    lbs: List[float] = field(default_factory=list)
    bound_inputs: List[Tuple[float, float]] = field(default_factory=list)
    generated: List[SpaceTimeNode] = field(default_factory=list)
    check_focal: bool = False
    # With check_focal: per update, whether FOCAL held every OPEN node, and
    # per pop, whether the popped node was the FOCAL-order minimum of OPEN.
    focal_covers_open: List[bool] = field(default_factory=list)
    pop_is_open_min: List[bool] = field(default_factory=list)


def default_horizon(grid: GridMap, index: ConstraintIndex) -> int:
    return grid.free_states + index.latest + 1


def low_level_search(
    grid: GridMap,
    task: AgentTask,
    constraints: Iterable[Constraint],
    other_paths: Iterable[Optional[Path]] | ConflictTable,
    cfg: SolverConfig,
    h_table: HeuristicTable,
    *,
    deadline: Optional[float] = None,
    forbid_conflicts: bool = False,
    trace: Optional[SearchTrace] = None,
) -> LowLevelResult:
    """Bounded-suboptimal space-time focal search for one agent.

    Returns a path whose cost is at most ``w_so`` times the returned lower
    bound, or a result with ``path=None`` if OPEN empties within the horizon.
    With ``forbid_conflicts`` any successor colliding with ``other_paths`` is
    pruned (prioritized planning).  Raises ``SearchTimeout`` past ``deadline``.
    """
    index = ConstraintIndex(constraints, task.id, task.goal)
    table = other_paths if isinstance(other_paths, ConflictTable) else ConflictTable(other_paths)
    horizon = cfg.horizon if cfg.horizon is not None else default_horizon(grid, index)
    dist = h_table.dist
    goal = task.goal
    weighted_open = cfg.variant is Variant.WEIGHTED_OPEN
    w_h = cfg.w_h

    lb = lb_naive = lb_improved = 0.0
    result = LowLevelResult(None, 0.0)
    if task.start not in dist or (task.start, 0) in index.vertices:
        return result

    seq = 0
    open_heap: list = []
    focal_heap: list = []
    pending: list = []  # OPEN nodes not yet in FOCAL, by f_open
    gmin_heap: list = []
    states: Dict[Tuple[Cell, int, bool], SpaceTimeNode] = {}

    def push(node: SpaceTimeNode) -> None:
        heapq.heappush(open_heap, (node.f_open, -node.g, node.seq, node))
        heapq.heappush(pending, (node.f_open, node.seq, node))
        if weighted_open:
            heapq.heappush(gmin_heap, (node.g, node.seq, node))
        if trace is not None:
            trace.generated.append(node)

    def to_focal(node: SpaceTimeNode) -> None:
        node.in_focal = True
        heapq.heappush(focal_heap, (node.f_focal, node.f_open, -node.g, node.seq, node))

    h0 = dist[task.start]
    start = SpaceTimeNode(task.start, 0, 0, h0, 0, f_open(0, h0, cfg), f_focal(0, h0, 0, cfg), None, seq)
    states[(task.start, 0, False)] = start
    push(start)
    heapq.heappop(pending)
    to_focal(start)
    f_best = 0.0
    g_min = 0.0
    generated = 1
    expanded = 0

    while focal_heap:
        if trace is not None and trace.check_focal:
            best_open = min(_focal_key(e[-1]) for e in open_heap if e[-1].in_open)
        node = heapq.heappop(focal_heap)[-1]
        if not node.in_open:
            continue
        if trace is not None and trace.check_focal:
            trace.pop_is_open_min.append(_focal_key(node) == best_open)
        node.in_open = False
        expanded += 1
        if deadline is not None and expanded % _TIME_CHECK_EVERY == 0 and time.perf_counter() > deadline:
            raise SearchTimeout()

        lb = max(lb, certify(lower_bound(f_best, g_min, cfg)))
        if weighted_open:
            lb_naive = max(lb_naive, certify(naive_lower_bound(f_best, w_h)))
            lb_improved = max(lb_improved, certify(improved_lower_bound(f_best, g_min, w_h)))
        if trace is not None:
            trace.expansions.append(node)
            trace.lbs.append(lb)
            trace.bound_inputs.append((f_best, g_min))

        if node.terminal:
            return _finish(result, node, lb, lb_naive, lb_improved, weighted_open, expanded, generated)

        if node.cell == goal and node.t >= index.goal_hold:
            extra = table.future(goal, node.t)
            if extra == 0:
                return _finish(result, node, lb, lb_naive, lb_improved, weighted_open, expanded, generated)
            if not forbid_conflicts:
                # Finishing here collides with later traffic; offer it as a
                # separate terminal candidate carrying those conflicts.
                key = (goal, node.t, True)
                c2 = node.c + extra
                old = states.get(key)
                if old is None or c2 < old.c:
                    if old is not None:
                        old.in_open = False
                    seq += 1
                    term = SpaceTimeNode(goal, node.t, node.g, 0, c2, node.f_open,
                                         f_focal(node.g, 0, c2, cfg), node, seq, terminal=True)
                    states[key] = term
                    push(term)
                    generated += 1

        t2 = node.t + 1
        if t2 <= horizon:
            g2 = node.g + 1
            u = node.cell
            for v in (*grid.neighbors(u), u):
                h2 = dist.get(v)
                if h2 is None or not index.allowed(u, v, t2):
                    continue
                inc = table.transition(u, v, t2)
                if inc and forbid_conflicts:
                    continue
                c2 = node.c + inc
                key = (v, t2, False)
                old = states.get(key)
                if old is not None:
                    if old.c <= c2:
                        continue
                    old.in_open = False
                seq += 1
                child = SpaceTimeNode(v, t2, g2, h2, c2, f_open(g2, h2, cfg),
                                      f_focal(g2, h2, c2, cfg), node, seq)
                states[key] = child
                push(child)
                generated += 1

        # Update FOCAL
        while open_heap and not open_heap[0][-1].in_open:
            heapq.heappop(open_heap)
        if not open_heap:
            break
        f_best = open_heap[0][0]
        if weighted_open:
            while not gmin_heap[0][-1].in_open:
                heapq.heappop(gmin_heap)
            g_min = gmin_heap[0][0]
        bound = focal_threshold(f_best, cfg)
        while pending and pending[0][0] <= bound:
            n = heapq.heappop(pending)[-1]
            if n.in_open and not n.in_focal:
                to_focal(n)
        while focal_heap and not focal_heap[0][-1].in_open:
            heapq.heappop(focal_heap)
        if not focal_heap:
            # w_f = 1 can round the threshold just below F_best; the OPEN
            # minimum always qualifies over the reals.
            to_focal(open_heap[0][-1])
        if trace is not None and trace.check_focal:
            trace.focal_covers_open.append(_check_focal(open_heap, bound))

    result.lb, result.lb_naive, result.lb_improved = lb, lb_naive, lb_improved
    result.expanded, result.generated = expanded, generated
    return result


def _finish(result, node, lb, lb_naive, lb_improved, weighted_open, expanded, generated):
    path = node.path()
    # Trailing waits at the goal occupy the same cells as parking there.
    end = len(path)
    while end > 1 and path[end - 2] == path[-1]:
        end -= 1
    result.path = path[:end]
    result.lb = lb
    result.lb_naive = lb_naive if weighted_open else lb
    result.lb_improved = lb_improved if weighted_open else lb
    result.expanded = expanded
    result.generated = generated
    result.conflicts = node.c
    return result


def _focal_key(n: SpaceTimeNode) -> tuple:
    return (n.f_focal, n.f_open, -n.g, n.seq)


def _check_focal(open_heap, bound: float) -> bool:
    covers = True
    for entry in open_heap:
        n = entry[-1]
        if not n.in_open:
            continue
        if n.f_open <= bound and not n.in_focal:
            raise AssertionError(f"OPEN node {n.cell}@{n.t} within bound but not in FOCAL")
        covers = covers and n.in_focal
    return covers
