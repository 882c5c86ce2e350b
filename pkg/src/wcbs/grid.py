"""Occupancy grids, MovingAI map/scenario ingestion and cost-to-go tables.

Symbols: ``.`` and ``G`` are passable; ``@``, ``O``, ``T`` and ``W`` are
blocked.  Motion is 4-connected (plus wait).
"""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Cell = Tuple[int, int]  # (row, col)

PASSABLE = frozenset(".G")
BLOCKED = frozenset("@OTW")
MOVES: Tuple[Cell, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))

# Fixed, named shuffle generator: Python's Mersenne Twister seeded with the
# integer seed, driving random.Random.shuffle.
SHUFFLE_PRNG = "mt19937"

UNREACHABLE = -1


class ParseError(ValueError):
    """Malformed map or scenario file."""

    def __init__(self, message: str, line: Optional[int] = None, source: str = ""):
        self.line = line
        self.source = source
        where = source or "<input>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    passable: Tuple[bool, ...]
    name: str = ""
    _neighbors: Dict[Cell, Tuple[Cell, ...]] = field(
        default=None, init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(self.passable) != self.width * self.height:
            raise ValueError(
                f"expected {self.width * self.height} cells, got {len(self.passable)}"
            )
        object.__setattr__(self, "passable", tuple(bool(p) for p in self.passable))
        nbrs: Dict[Cell, Tuple[Cell, ...]] = {}
        for r in range(self.height):
            for c in range(self.width):
                if not self.passable[r * self.width + c]:
                    continue
                nbrs[(r, c)] = tuple(
                    (r + dr, c + dc)
                    for dr, dc in MOVES
                    if self.is_passable((r + dr, c + dc))
                )
        object.__setattr__(self, "_neighbors", nbrs)

    @property
    def free_states(self) -> int:
        return sum(self.passable)

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.passable[cell[0] * self.width + cell[1]]

    def neighbors(self, cell: Cell) -> Tuple[Cell, ...]:
        """Passable 4-neighbours of a passable cell (wait not included)."""
        return self._neighbors[cell]

    def free_cells(self) -> List[Cell]:
        return list(self._neighbors)

    @classmethod
    def from_rows(cls, rows: Sequence[str], name: str = "") -> "GridMap":
        height = len(rows)
        width = len(rows[0]) if rows else 0
        return cls(width, height, tuple(ch in PASSABLE for row in rows for ch in row), name)


@dataclass(frozen=True)
class AgentTask:
    id: int
    start: Cell
    goal: Cell
    optimal_length: Optional[float] = None  # scenario metadata only


def parse_map(text: str, name: str = "") -> GridMap:
    lines = text.splitlines()
    header: Dict[str, str] = {}
    i = 0
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw:
            continue
        if raw == "map":
            break
        key, _, value = raw.partition(" ")
        if key not in ("type", "height", "width"):
            raise ParseError(f"unexpected header line {raw!r}", i, name)
        header[key] = value.strip()
    else:
        raise ParseError("missing 'map' line", i, name)
    for key in ("type", "height", "width"):
        if key not in header:
            raise ParseError(f"missing '{key}' header", i, name)
    try:
        height = int(header["height"])
        width = int(header["width"])
    except ValueError:
        raise ParseError("non-integer height/width", i, name) from None
    if height <= 0 or width <= 0:
        raise ParseError("height and width must be positive", i, name)

    rows: List[str] = []
    for lineno in range(i + 1, len(lines) + 1):
        row = lines[lineno - 1].rstrip()
        if not row and len(rows) == height:
            continue
        if len(rows) == height:
            raise ParseError("more rows than declared height", lineno, name)
        if len(row) != width:
            raise ParseError(f"row has {len(row)} symbols, expected {width}", lineno, name)
        bad = set(row) - PASSABLE - BLOCKED
        if bad:
            raise ParseError(f"unknown symbol(s) {''.join(sorted(bad))!r}", lineno, name)
        rows.append(row)
    if len(rows) != height:
        raise ParseError(f"found {len(rows)} rows, expected {height}", len(lines), name)
    return GridMap.from_rows(rows, name)


def serialize_map(grid: GridMap) -> str:
    rows = [
        "".join(
            "." if grid.passable[r * grid.width + c] else "@" for c in range(grid.width)
        )
        for r in range(grid.height)
    ]
    return "\n".join(
        ["type octile", f"height {grid.height}", f"width {grid.width}", "map", *rows]
    ) + "\n"


def parse_scen(text: str, name: str = "") -> List[AgentTask]:
    """Parse a version-1 scenario file.  Coordinates are stored as (x=col, y=row)."""
    lines = text.splitlines()
    idx = 0
    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx == len(lines) or lines[idx].split() != ["version", "1"]:
        raise ParseError("missing 'version 1' header", idx + 1, name)
    tasks: List[AgentTask] = []
    for lineno in range(idx + 2, len(lines) + 1):
        raw = lines[lineno - 1].strip()
        if not raw:
            continue
        parts = raw.split("\t") if "\t" in raw else raw.split()
        if len(parts) != 9:
            raise ParseError(f"expected 9 fields, got {len(parts)}", lineno, name)
        try:
            width, height, sx, sy, gx, gy = (int(p) for p in parts[2:8])
            opt = float(parts[8])
        except ValueError:
            raise ParseError("non-numeric field", lineno, name) from None
        for x, y in ((sx, sy), (gx, gy)):
            if not (0 <= x < width and 0 <= y < height):
                raise ParseError(
                    f"coordinate ({x}, {y}) outside declared {width}x{height}", lineno, name
                )
        tasks.append(AgentTask(len(tasks), (sy, sx), (gy, gx), opt))
    return tasks


def format_scen(tasks: Iterable[AgentTask], grid: GridMap, map_name: str) -> str:
    out = ["version 1"]
    for t in tasks:
        opt = t.optimal_length if t.optimal_length is not None else 0
        out.append(
            "\t".join(
                str(v)
                for v in (0, map_name, grid.width, grid.height,
                          t.start[1], t.start[0], t.goal[1], t.goal[0], opt)
            )
        )
    return "\n".join(out) + "\n"


def validate_tasks(grid: GridMap, tasks: Sequence[AgentTask]) -> None:
    seen = set()
    for t in tasks:
        if t.id in seen:
            raise ValueError(f"duplicate agent id {t.id}")
        seen.add(t.id)
        for cell in (t.start, t.goal):
            if not grid.is_passable(cell):
                raise ValueError(f"agent {t.id}: cell {cell} is not passable")


@dataclass(frozen=True)
class HeuristicTable:
    goal: Cell
    dist: Dict[Cell, int]

    def __getitem__(self, cell: Cell) -> int:
        return self.dist.get(cell, UNREACHABLE)

    def reachable(self, cell: Cell) -> bool:
        return cell in self.dist


def build_heuristic_table(grid: GridMap, goal: Cell) -> HeuristicTable:
    """Exact 4-connected distance to ``goal``; unreachable cells are absent."""
    if not grid.is_passable(goal):
        raise ValueError(f"goal {goal} is blocked or out of bounds")
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for v in grid.neighbors(u):
            if v not in dist:
                dist[v] = du
                queue.append(v)
    return HeuristicTable(goal, dist)


class HeuristicCache:
    """Lazily built heuristic tables, one per distinct goal."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._tables: Dict[Cell, HeuristicTable] = {}

    def __getitem__(self, goal: Cell) -> HeuristicTable:
        table = self._tables.get(goal)
        if table is None:
            table = self._tables[goal] = build_heuristic_table(self.grid, goal)
        return table

    def __len__(self) -> int:
        return len(self._tables)


def select_agents(tasks: Sequence[AgentTask], n: int, seed: int) -> List[AgentTask]:
    """Seeded shuffle (see ``SHUFFLE_PRNG``), keep the first ``n``, renumber 0..n-1."""
    if n > len(tasks):
        raise ValueError(f"requested {n} agents but only {len(tasks)} tasks available")
    if n < 0:
        raise ValueError("agent count must be nonnegative")
    order = list(tasks)
    random.Random(seed).shuffle(order)
    return [AgentTask(i, t.start, t.goal, t.optimal_length) for i, t in enumerate(order[:n])]
