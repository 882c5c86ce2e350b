"""Constraints, conflicts, MDDs and cardinal-conflict classification."""
from __future__ import annotations

import threading
from collections import defaultdict
from dataclasses import dataclass, replace
from enum import Enum
from typing import (
    Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple,
)

from .grid import AgentTask, Cell, GridMap, HeuristicTable

Path = Tuple[Cell, ...]  # cells[t] for t = 0..cost; the agent stays at cells[-1] afterwards


def path_cost(path: Path) -> int:
    return len(path) - 1


def position(path: Path, t: int) -> Cell:
    return path[t] if t < len(path) else path[-1]


@dataclass(frozen=True, order=True)
class Constraint:
    """Prohibits ``agent`` from being at ``cell`` at time ``t`` (vertex) or,
    when ``from_cell`` is set, from moving ``from_cell -> cell`` arriving at ``t``."""

    agent: int
    t: int
    cell: Cell
    from_cell: Optional[Cell] = None

    @property
    def is_edge(self) -> bool:
        return self.from_cell is not None

    def __post_init__(self) -> None:
        if self.is_edge and self.t < 1:
            raise ValueError("edge constraints need t >= 1")
        if self.t < 0:
            raise ValueError("constraint time must be nonnegative")


def vertex(agent: int, cell: Cell, t: int) -> Constraint:
    return Constraint(agent, t, cell)


def edge(agent: int, from_cell: Cell, to_cell: Cell, t: int) -> Constraint:
    return Constraint(agent, t, to_cell, from_cell)


def violates(path: Path, constraint: Constraint) -> bool:
    t = constraint.t
    if constraint.is_edge:
        return (
            t < len(path)
            and path[t - 1] == constraint.from_cell
            and path[t] == constraint.cell
        )
    return position(path, t) == constraint.cell


class Cardinality(str, Enum):
    CARDINAL = "cardinal"
    SEMI = "semi-cardinal"
    NON = "non-cardinal"
    UNKNOWN = "unknown"


CARDINALITY_RANK = {
    Cardinality.CARDINAL: 0,
    Cardinality.SEMI: 1,
    Cardinality.NON: 2,
    Cardinality.UNKNOWN: 3,
}


@dataclass(frozen=True)
class Conflict:
    """Collision between agents ``i < j``.

    Vertex: both at ``cell`` at ``t``.  Edge: ``i`` moves ``cell -> cell_b`` and
    ``j`` moves ``cell_b -> cell``, both arriving at ``t``.
    """

    i: int
    j: int
    t: int
    cell: Cell
    cell_b: Optional[Cell] = None
    cardinality: Optional[Cardinality] = None

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise ValueError("a conflict needs two distinct agents")
        if self.t < 0:
            raise ValueError("conflict time must be nonnegative")

    @property
    def is_edge(self) -> bool:
        return self.cell_b is not None

    @property
    def agents(self) -> Tuple[int, int]:
        return (self.i, self.j)

    def sort_key(self) -> tuple:
        return (self.t, self.i, self.j, self.is_edge, self.cell, self.cell_b or self.cell)

    def involves(self, agent: int) -> bool:
        return agent == self.i or agent == self.j


def _make_conflict(a: int, b: int, t: int, cell: Cell, cell_b: Optional[Cell] = None) -> Conflict:
    if a < b:
        return Conflict(a, b, t, cell, cell_b)
    if cell_b is None:
        return Conflict(b, a, t, cell)
    return Conflict(b, a, t, cell_b, cell)


def _pair_conflicts(a: int, pa: Path, b: int, pb: Path, horizon: int) -> List[Conflict]:
    out = []
    for t in range(horizon + 1):
        ca, cb = position(pa, t), position(pb, t)
        if ca == cb:
            out.append(_make_conflict(a, b, t, ca))
        elif t > 0:
            prev_a, prev_b = position(pa, t - 1), position(pb, t - 1)
            if prev_a == cb and prev_b == ca:
                out.append(_make_conflict(a, b, t, prev_a, ca))
    return out


def detect_conflicts(paths: Sequence[Path]) -> List[Conflict]:
    """All vertex and edge collisions, agents parked at their last cell after
    arrival.  Sorted by (t, i, j)."""
    if not paths:
        return []
    horizon = max(len(p) for p in paths) - 1
    out: List[Conflict] = []
    for t in range(horizon + 1):
        here: Dict[Cell, List[int]] = defaultdict(list)
        for a, p in enumerate(paths):
            here[position(p, t)].append(a)
        for agents in here.values():
            for x in range(len(agents)):
                for y in range(x + 1, len(agents)):
                    out.append(Conflict(agents[x], agents[y], t, position(paths[agents[x]], t)))
        if t == 0:
            continue
        moves: Dict[Tuple[Cell, Cell], List[int]] = defaultdict(list)
        for a, p in enumerate(paths):
            u, v = position(p, t - 1), position(p, t)
            if u != v:
                moves[(u, v)].append(a)
        for (u, v), movers in moves.items():
            if u < v:
                for a in movers:
                    for b in moves.get((v, u), ()):
                        out.append(_make_conflict(a, b, t, u, v))
    out.sort(key=Conflict.sort_key)
    return out


def conflicts_with_agent(paths: Sequence[Path], agent: int) -> List[Conflict]:
    """Collisions between ``agent`` and every other agent."""
    mine = paths[agent]
    # same horizon as detect_conflicts, so incremental counts match a recount
    horizon = max(len(p) for p in paths) - 1
    out: List[Conflict] = []
    for b, other in enumerate(paths):
        if b != agent:
            out.extend(_pair_conflicts(agent, mine, b, other, horizon))
    return out


def split_conflict(conflict: Conflict) -> Tuple[Constraint, Constraint]:
    """Branching constraints for the two children: one per agent."""
    i, j, t = conflict.i, conflict.j, conflict.t
    if conflict.is_edge:
        return (
            edge(i, conflict.cell, conflict.cell_b, t),
            edge(j, conflict.cell_b, conflict.cell, t),
        )
    return vertex(i, conflict.cell, t), vertex(j, conflict.cell, t)


# --------------------------------------------------------------------- MDDs


class ConstraintIndex:
    """Per-agent constraint lookup used by the planners."""

    __slots__ = ("vertices", "edges", "goal_hold", "latest")

    def __init__(self, constraints: Iterable[Constraint], agent: int, goal: Cell):
        self.vertices: Set[Tuple[Cell, int]] = set()
        self.edges: Set[Tuple[Cell, Cell, int]] = set()
        self.goal_hold = 0
        self.latest = 0
        for c in constraints:
            if c.agent != agent:
                continue
            self.latest = max(self.latest, c.t)
            if c.is_edge:
                self.edges.add((c.from_cell, c.cell, c.t))
            else:
                self.vertices.add((c.cell, c.t))
                if c.cell == goal:
                    self.goal_hold = max(self.goal_hold, c.t)

    def allowed(self, u: Cell, v: Cell, t: int) -> bool:
        """May the agent move ``u -> v`` arriving at ``t``?"""
        return (v, t) not in self.vertices and (u, v, t) not in self.edges


@dataclass(frozen=True)
class MDD:
    agent: int
    cost: int
    levels: Tuple[FrozenSet[Cell], ...]

    @property
    def empty(self) -> bool:
        return not self.levels

    def level(self, t: int) -> FrozenSet[Cell]:
        if t < len(self.levels):
            return self.levels[t]
        return self.levels[-1]

    def singleton_at(self, cell: Cell, t: int) -> bool:
        return not self.empty and self.level(t) == {cell}

    def forced_edge(self, u: Cell, v: Cell, t: int) -> bool:
        return self.singleton_at(u, t - 1) and self.singleton_at(v, t)


def build_mdd(
    grid: GridMap,
    task: AgentTask,
    constraints: Iterable[Constraint],
    cost: int,
    h_table: HeuristicTable,
) -> MDD:
    """All (cell, t) lying on some constraint-respecting path that ends at the
    goal at exactly ``cost`` and stays there without hitting a constraint."""
    index = ConstraintIndex(constraints, task.id, task.goal)
    empty = MDD(task.id, cost, ())
    dist = h_table.dist
    if cost < 0 or task.start not in dist or dist[task.start] > cost or cost < index.goal_hold:
        return empty
    if (task.start, 0) in index.vertices:
        return empty

    forward: List[Set[Cell]] = [{task.start}]
    for t in range(1, cost + 1):
        nxt: Set[Cell] = set()
        budget = cost - t
        for u in forward[-1]:
            for v in (*grid.neighbors(u), u):
                if v not in nxt and dist.get(v, budget + 1) <= budget and index.allowed(u, v, t):
                    nxt.add(v)
        if not nxt:
            return empty
        forward.append(nxt)
    if task.goal not in forward[cost]:
        return empty

    levels: List[Set[Cell]] = [set() for _ in range(cost + 1)]
    levels[cost] = {task.goal}
    for t in range(cost - 1, -1, -1):
        above = levels[t + 1]
        levels[t] = {
            u for u in forward[t]
            if any(v in above and index.allowed(u, v, t + 1) for v in (*grid.neighbors(u), u))
        }
    return MDD(task.id, cost, tuple(frozenset(level) for level in levels))


class MDDCache:
    """Memo of MDDs keyed by (agent, that agent's constraints, cost)."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._memo: Dict[tuple, MDD] = {}
        self._lock = threading.Lock()

    def get(self, task: AgentTask, constraints: Iterable[Constraint], cost: int,
            h_table: HeuristicTable) -> MDD:
        own = frozenset(c for c in constraints if c.agent == task.id)
        key = (task.id, own, cost)
        mdd = self._memo.get(key)
        if mdd is None:
            mdd = build_mdd(self.grid, task, own, cost, h_table)
            with self._lock:
                mdd = self._memo.setdefault(key, mdd)
        return mdd

    def __len__(self) -> int:
        return len(self._memo)


# Floating lower bounds (weighted-open) are compared to integer costs.
_LB_EPS = 1e-9


def is_eligible(cost: int, lb: float) -> bool:
    """An agent's side can be classified only when its path is provably optimal."""
    return cost <= lb + _LB_EPS


def classify_conflict(
    conflict: Conflict,
    tasks: Sequence[AgentTask],
    paths: Sequence[Path],
    lbs: Sequence[float],
    constraints: Iterable[Constraint],
    mdd_of,
) -> Cardinality:
    """Cardinality of ``conflict`` in a CT node.

    ``mdd_of(task, constraints, cost)`` returns the agent's MDD.  A side is
    narrow when its cost equals its lower bound and its MDD is forced through
    the conflict; a side whose cost exceeds its bound is unclassifiable.
    """
    constraints = tuple(constraints)
    eligible = narrow = 0
    for side, agent in enumerate(conflict.agents):
        cost = path_cost(paths[agent])
        if not is_eligible(cost, lbs[agent]):
            continue
        eligible += 1
        mdd = mdd_of(tasks[agent], constraints, cost)
        if conflict.is_edge:
            u, v = (conflict.cell, conflict.cell_b) if side == 0 else (conflict.cell_b, conflict.cell)
            forced = mdd.forced_edge(u, v, conflict.t)
        else:
            forced = mdd.singleton_at(conflict.cell, conflict.t)
        narrow += forced
    if narrow == 2:
        return Cardinality.CARDINAL
    if narrow == 1:
        return Cardinality.SEMI
    if eligible == 2:
        return Cardinality.NON
    return Cardinality.UNKNOWN


def with_cardinality(conflict: Conflict, cardinality: Cardinality) -> Conflict:
    return replace(conflict, cardinality=cardinality)


def conflict_priority(conflict: Conflict, prioritize: bool) -> tuple:
    if prioritize:
        rank = CARDINALITY_RANK[conflict.cardinality or Cardinality.UNKNOWN]
        return (rank, *conflict.sort_key())
    return conflict.sort_key()
