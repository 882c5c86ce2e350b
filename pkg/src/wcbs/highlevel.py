"""Constraint-tree search: optimal CBS and the focal (ECBS-style) high level."""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .config import HighLevel, SolverConfig
from .conflicts import (
    Cardinality, Conflict, Constraint, MDDCache, Path, classify_conflict,
    conflict_priority, conflicts_with_agent, detect_conflicts, path_cost,
    split_conflict, with_cardinality,
)
from .grid import AgentTask, GridMap, HeuristicCache, validate_tasks
from .lowlevel import ConflictTable, LowLevelResult, SearchTimeout, low_level_search

SOLVED = "solved"
TIMEOUT = "timeout"
INFEASIBLE = "infeasible"


@dataclass(eq=False)
class CTNode:
    id: int
    constraints: Tuple[Constraint, ...]
    paths: List[Path]
    lbs: List[float]
    cost: int
    lb_sum: float
    conflicts: List[Conflict]
    parent: Optional["CTNode"] = None
    in_open: bool = True

    @property
    def num_conflicts(self) -> int:
        return len(self.conflicts)


@dataclass
class SolveStats:
    generated: int = 0
    expanded: int = 0
    low_level_calls: int = 0
    low_level_expanded: int = 0
    low_level_generated: int = 0
    cardinal: int = 0
    semi_cardinal: int = 0
    non_cardinal: int = 0
    unknown: int = 0
    wall_time: float = 0.0

    def count(self, cardinality: Cardinality) -> None:
        if cardinality is Cardinality.CARDINAL:
            self.cardinal += 1
        elif cardinality is Cardinality.SEMI:
            self.semi_cardinal += 1
        elif cardinality is Cardinality.NON:
            self.non_cardinal += 1
        else:
            self.unknown += 1


@dataclass
class Solution:
    outcome: str
    paths: Optional[List[Path]] = None
    sum_of_costs: Optional[int] = None
    lb_sum: Optional[float] = None
    stats: SolveStats = field(default_factory=SolveStats)
    root: Optional[CTNode] = None

    @property
    def solved(self) -> bool:
        return self.outcome == SOLVED


class CBSSolver:
    """One constraint-tree search over a fixed instance.

    ``on_node`` is called with every generated CT node and ``on_low_level``
    with ``(task, constraints, result)`` after every low-level call.
    """

    def __init__(
        self,
        grid: GridMap,
        tasks: Sequence[AgentTask],
        cfg: SolverConfig,
        *,
        heuristics: Optional[HeuristicCache] = None,
        on_node: Optional[Callable[[CTNode], None]] = None,
        on_low_level: Optional[Callable[[AgentTask, Tuple[Constraint, ...], LowLevelResult], None]] = None,
    ):
        validate_tasks(grid, tasks)
        if [t.id for t in tasks] != list(range(len(tasks))):
            raise ValueError("agent ids must be 0..n-1 in order")
        self.grid = grid
        self.tasks = list(tasks)
        self.cfg = cfg
        self.heuristics = heuristics or HeuristicCache(grid)
        self.mdds = MDDCache(grid)
        self.on_node = on_node
        self.on_low_level = on_low_level
        self.stats = SolveStats()
        self.deadline: Optional[float] = None
        self._next_id = 0

    # -- low level

    def plan(self, agent: int, constraints: Tuple[Constraint, ...],
             others: Sequence[Optional[Path]]) -> LowLevelResult:
        task = self.tasks[agent]
        res = low_level_search(
            self.grid, task, constraints, ConflictTable(others), self.cfg,
            self.heuristics[task.goal], deadline=self.deadline,
        )
        self.stats.low_level_calls += 1
        self.stats.low_level_expanded += res.expanded
        self.stats.low_level_generated += res.generated
        if self.on_low_level is not None:
            self.on_low_level(task, constraints, res)
        return res

    def _new_node(self, constraints, paths, lbs, conflicts, parent) -> CTNode:
        node = CTNode(self._next_id, constraints, paths, lbs,
                      sum(path_cost(p) for p in paths), sum(lbs), conflicts, parent)
        self._next_id += 1
        self.stats.generated += 1
        if self.on_node is not None:
            self.on_node(node)
        return node

    def root(self) -> Optional[CTNode]:
        """Plan agents in id order, each against the agents planned before it."""
        paths: List[Path] = []
        lbs: List[float] = []
        for agent in range(len(self.tasks)):
            res = self.plan(agent, (), paths)
            if not res.found:
                return None
            paths.append(res.path)
            lbs.append(res.lb)
        return self._new_node((), paths, lbs, detect_conflicts(paths), None)

    def replan_child(self, parent: CTNode, constraint: Constraint) -> Optional[CTNode]:
        agent = constraint.agent
        constraints = parent.constraints + (constraint,)
        others = [p if a != agent else None for a, p in enumerate(parent.paths)]
        res = self.plan(agent, constraints, others)
        if not res.found:
            return None
        paths = list(parent.paths)
        paths[agent] = res.path
        lbs = list(parent.lbs)
        lbs[agent] = max(parent.lbs[agent], res.lb)
        if max(map(len, paths)) == max(map(len, parent.paths)):
            conflicts = [c for c in parent.conflicts if not c.involves(agent)]
            conflicts.extend(conflicts_with_agent(paths, agent))
            conflicts.sort(key=Conflict.sort_key)
        else:
            # a new horizon changes how long parked pairs collide
            conflicts = detect_conflicts(paths)
        return self._new_node(constraints, paths, lbs, conflicts, parent)

    # -- conflict selection

    def classify(self, conflict: Conflict, node: CTNode) -> Cardinality:
        def mdd_of(task, constraints, cost):
            return self.mdds.get(task, constraints, cost, self.heuristics[task.goal])

        return classify_conflict(conflict, self.tasks, node.paths, node.lbs, node.constraints, mdd_of)

    def choose_conflict(self, node: CTNode) -> Conflict:
        if not self.cfg.prioritize_conflicts:
            return min(node.conflicts, key=Conflict.sort_key)
        classified = [with_cardinality(c, self.classify(c, node)) for c in node.conflicts]
        chosen = min(classified, key=lambda c: conflict_priority(c, True))
        self.stats.count(chosen.cardinality)
        return chosen

    # -- search

    def solve(self) -> Solution:
        started = time.perf_counter()
        if self.cfg.timeout != float("inf"):
            self.deadline = started + self.cfg.timeout
        try:
            solution = self._search()
        except SearchTimeout:
            solution = Solution(TIMEOUT)
        solution.stats = self.stats
        self.stats.wall_time = time.perf_counter() - started
        return solution

    def _timed_out(self) -> bool:
        return self.deadline is not None and time.perf_counter() > self.deadline

    def _search(self) -> Solution:
        root = self.root()
        if root is None:
            return Solution(INFEASIBLE)
        if self.cfg.high_level is HighLevel.OPTIMAL:
            return self._search_optimal(root)
        return self._search_focal(root)

    def _expand(self, node: CTNode) -> List[CTNode]:
        self.stats.expanded += 1
        conflict = self.choose_conflict(node)
        children = []
        for constraint in split_conflict(conflict):
            child = self.replan_child(node, constraint)
            if child is not None:
                children.append(child)
        return children

    def _done(self, node: CTNode, lb_sum: float, root: CTNode) -> Solution:
        return Solution(SOLVED, list(node.paths), node.cost, lb_sum, root=root)

    def _search_optimal(self, root: CTNode) -> Solution:
        open_heap = [(root.cost, root.num_conflicts, root.id, root)]
        while open_heap:
            if self._timed_out():
                raise SearchTimeout()
            node = heapq.heappop(open_heap)[-1]
            if not node.conflicts:
                return self._done(node, node.cost, root)
            for child in self._expand(node):
                heapq.heappush(open_heap, (child.cost, child.num_conflicts, child.id, child))
        return Solution(INFEASIBLE, root=root)

    def _search_focal(self, root: CTNode) -> Solution:
        w_so = self.cfg.w_so
        open_heap: list = []   # by lb_sum
        pending: list = []     # OPEN nodes not yet in FOCAL, by cost
        focal: list = []       # by (conflicts, cost, id)

        def push(node: CTNode) -> None:
            heapq.heappush(open_heap, (node.lb_sum, node.id, node))
            heapq.heappush(pending, (node.cost, node.id, node))

        push(root)
        while True:
            if self._timed_out():
                raise SearchTimeout()
            while open_heap and not open_heap[0][-1].in_open:
                heapq.heappop(open_heap)
            if not open_heap:
                return Solution(INFEASIBLE, root=root)
            lb_min = open_heap[0][0]
            bound = w_so * lb_min
            while pending and pending[0][0] <= bound:
                n = heapq.heappop(pending)[-1]
                heapq.heappush(focal, (n.num_conflicts, n.cost, n.id, n))
            node = None
            while focal:
                cand = heapq.heappop(focal)[-1]
                if cand.in_open:
                    node = cand
                    break
            if node is None:
                # Only reachable through float rounding of the bound.
                node = open_heap[0][-1]
            node.in_open = False
            if not node.conflicts:
                return self._done(node, lb_min, root)
            for child in self._expand(node):
                push(child)


def solve(grid: GridMap, tasks: Sequence[AgentTask], cfg: SolverConfig, **hooks) -> Solution:
    return CBSSolver(grid, tasks, cfg, **hooks).solve()
