"""Weighted prioritized planning and its CBS counterpart (CBSPP).

PP plans agents in id order with the same space-time search as the CBS low
level, pruning every successor that collides with an earlier agent.  Under
``cbspp_config`` the CBS root node reproduces PP exactly whenever PP succeeds.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .config import W_SO_INFINITY, HighLevel, SolverConfig, Variant
from .conflicts import Path, path_cost
from .grid import AgentTask, GridMap, HeuristicCache, validate_tasks
from .lowlevel import ConflictTable, low_level_search

SOLVED = "solved"
FAILED = "failed"


@dataclass
class PPResult:
    outcome: str
    paths: Optional[List[Path]] = None
    costs: List[int] = field(default_factory=list)
    failed_agent: Optional[int] = None
    expanded: int = 0
    wall_time: float = 0.0

    @property
    def solved(self) -> bool:
        return self.outcome == SOLVED


def cbspp_config(w_h: float, w_so_sentinel: float = W_SO_INFINITY, **overrides) -> SolverConfig:
    """Weighted-open with an effectively unbounded suboptimality factor."""
    return SolverConfig(
        w_so=w_so_sentinel,
        variant=Variant.WEIGHTED_OPEN,
        w_h=w_h,
        improved_lb=False,
        high_level=HighLevel.FOCAL,
        **overrides,
    )


def prioritized_plan(
    grid: GridMap,
    tasks: Sequence[AgentTask],
    w_h: float = 1.0,
    *,
    timeout: Optional[float] = None,
    heuristics: Optional[HeuristicCache] = None,
) -> PPResult:
    """Plan agents sequentially, earlier agents acting as moving obstacles.

    Raises ``SearchTimeout`` when ``timeout`` seconds elapse."""
    validate_tasks(grid, tasks)
    started = time.perf_counter()
    deadline = started + timeout if timeout is not None else None
    heuristics = heuristics or HeuristicCache(grid)
    cfg = cbspp_config(w_h)
    paths: List[Path] = []
    expanded = 0
    for task in tasks:
        res = low_level_search(
            grid, task, (), ConflictTable(paths), cfg, heuristics[task.goal],
            deadline=deadline, forbid_conflicts=True,
        )
        expanded += res.expanded
        if not res.found:
            return PPResult(FAILED, costs=[path_cost(p) for p in paths], failed_agent=task.id,
                            expanded=expanded, wall_time=time.perf_counter() - started)
        paths.append(res.path)
    return PPResult(SOLVED, paths, [path_cost(p) for p in paths], expanded=expanded,
                    wall_time=time.perf_counter() - started)
