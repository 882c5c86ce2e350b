"""Regenerate the synthetic benchmark files under tests/data/.

empty-32-32.map is identical to the public benchmark map.  The random map is
a stand-in with the same dimensions and free-state count (819) as
random-32-32-20; its obstacle layout is our own.  Scenarios hold unique
starts and unique goals drawn with a fixed seed.
"""
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wcbs.grid import AgentTask, GridMap, build_heuristic_table, format_scen, serialize_map  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"


def connected(grid: GridMap) -> bool:
    cells = grid.free_cells()
    return len(build_heuristic_table(grid, cells[0]).dist) == len(cells)


def random_map(size: int, free: int, seed: int) -> GridMap:
    rng = random.Random(seed)
    while True:
        blocked = set(rng.sample(range(size * size), size * size - free))
        grid = GridMap(size, size, tuple(i not in blocked for i in range(size * size)))
        if connected(grid):
            return grid


def scenario(grid: GridMap, n: int, seed: int):
    rng = random.Random(seed)
    cells = grid.free_cells()
    starts = rng.sample(cells, n)
    goals = rng.sample(cells, n)
    tasks = []
    for i, (s, g) in enumerate(zip(starts, goals)):
        tasks.append(AgentTask(i, s, g, float(build_heuristic_table(grid, g)[s])))
    return tasks


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    empty = GridMap(32, 32, (True,) * 1024)
    (OUT / "empty-32-32.map").write_text(serialize_map(empty))
    (OUT / "empty-32-32-random-1.scen").write_text(
        format_scen(scenario(empty, 300, 1), empty, "empty-32-32.map"))
    rnd = random_map(32, 819, 20)
    (OUT / "synthetic-random-32-32-20.map").write_text(serialize_map(rnd))
    (OUT / "synthetic-random-32-32-20-random-1.scen").write_text(
        format_scen(scenario(rnd, 200, 1), rnd, "synthetic-random-32-32-20.map"))


if __name__ == "__main__":
    main()
