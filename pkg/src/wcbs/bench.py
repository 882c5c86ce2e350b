"""Benchmark harness: seeded agent sweeps, CSV rows, speedup summaries.

Row schema (one column per ``ResultRow`` field, in declaration order)::

    map, method, variant, w_so, w_h, r, improved_lb, high_level,
    prioritize_conflicts, agents, seed, outcome, wall_time, sum_of_costs,
    lb_sum, ct_generated, ct_expanded, ll_expanded, cardinal, semi_cardinal,
    non_cardinal, unknown

``wall_time`` is the only column that differs between identical runs.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path as FsPath
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .config import W_SO_INFINITY, ConfigError, HighLevel, SolverConfig, Variant
from .grid import AgentTask, GridMap, ParseError, parse_map, parse_scen, select_agents
from .highlevel import solve
from .lowlevel import SearchTimeout
from .prioritized import cbspp_config, prioritized_plan

log = logging.getLogger(__name__)

METHOD_KINDS = ("vanilla", "wo", "wf", "pp", "cbspp")
DEFAULT_TIMEOUT = 10.0
DEFAULT_SEEDS = (0, 1, 2)

CENSORED = None  # speedup marker for baseline timeouts


@dataclass(frozen=True)
class MethodSpec:
    kind: str = "vanilla"
    w_so: float = 2.0
    w_h: float = 1.0
    r: float = 5.0
    improved_lb: bool = False
    high_level: str = "focal"
    prioritize_conflicts: bool = False

    def __post_init__(self) -> None:
        if self.kind not in METHOD_KINDS:
            raise ConfigError(f"unknown method {self.kind!r}; expected one of {METHOD_KINDS}")
        if self.kind not in ("pp",):
            self.solver_config()  # validates

    @property
    def effective_w_so(self) -> float:
        if self.kind == "cbspp":
            return W_SO_INFINITY
        if self.kind == "pp":
            return math.inf
        if self.high_level == "optimal":
            return 1.0
        return self.w_so

    @property
    def label(self) -> str:
        if self.kind == "vanilla" and self.high_level == "optimal":
            name = "cbs"
        elif self.kind == "vanilla":
            name = f"vanilla_wso{self.w_so:g}"
        elif self.kind == "wo":
            name = f"wo_wso{self.w_so:g}_wh{self.w_h:g}" + ("_lb+" if self.improved_lb else "")
        elif self.kind == "wf":
            name = f"wf_wso{self.w_so:g}_wh{self.w_h:g}_r{self.r:g}"
        else:
            name = f"{self.kind}_wh{self.w_h:g}"
        if self.prioritize_conflicts and self.kind != "pp":
            name += "+pc"
        return name

    def solver_config(self, timeout: float = math.inf) -> SolverConfig:
        if self.kind == "cbspp":
            return cbspp_config(self.w_h, timeout=timeout,
                                prioritize_conflicts=self.prioritize_conflicts)
        if self.kind == "pp":
            raise ConfigError("prioritized planning has no CBS configuration")
        optimal = self.high_level == "optimal"
        variant = {"vanilla": Variant.VANILLA, "wo": Variant.WEIGHTED_OPEN,
                   "wf": Variant.WEIGHTED_FOCAL}[self.kind]
        return SolverConfig(
            w_so=1.0 if optimal else self.w_so,
            variant=variant,
            w_h=self.w_h if variant is not Variant.VANILLA else 1.0,
            r=self.r,
            improved_lb=self.improved_lb,
            timeout=timeout,
            high_level=HighLevel.OPTIMAL if optimal else HighLevel.FOCAL,
            prioritize_conflicts=self.prioritize_conflicts,
        )


@dataclass
class RunSpec:
    map_path: str
    scen_path: str
    agents: Sequence[int]
    seeds: Sequence[int] = DEFAULT_SEEDS
    methods: Sequence[MethodSpec] = (MethodSpec(),)
    timeout: float = DEFAULT_TIMEOUT
    out_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.agents or any(n <= 0 for n in self.agents):
            raise ConfigError("agent counts must be positive")
        if not self.timeout > 0:
            raise ConfigError("timeout must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")


@dataclass
class ResultRow:
    map: str
    method: str
    variant: str
    w_so: float
    w_h: float
    r: float
    improved_lb: bool
    high_level: str
    prioritize_conflicts: bool
    agents: int
    seed: int
    outcome: str
    wall_time: float
    sum_of_costs: Optional[int] = None
    lb_sum: Optional[float] = None
    ct_generated: int = 0
    ct_expanded: int = 0
    ll_expanded: int = 0
    cardinal: int = 0
    semi_cardinal: int = 0
    non_cardinal: int = 0
    unknown: int = 0


CSV_COLUMNS = tuple(f.name for f in fields(ResultRow))


def parse_agent_counts(text: str) -> List[int]:
    """``"50,100,150"`` or ``"START:STEP:MAX"``."""
    try:
        if ":" in text:
            start, step, stop = (int(x) for x in text.split(":"))
            if step <= 0:
                raise ConfigError("agent step must be positive")
            return list(range(start, stop + 1, step))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad agent count list {text!r}") from None


def run_instance(grid: GridMap, tasks: Sequence[AgentTask], method: MethodSpec,
                 timeout: float, map_name: str, seed: int) -> ResultRow:
    row = ResultRow(
        map=map_name, method=method.label, variant=method.kind, w_so=method.effective_w_so,
        w_h=method.w_h, r=method.r if method.kind == "wf" else math.inf,
        improved_lb=method.improved_lb, high_level=method.high_level,
        prioritize_conflicts=method.prioritize_conflicts,
        agents=len(tasks), seed=seed, outcome="", wall_time=0.0,
    )
    started = time.perf_counter()
    if method.kind == "pp":
        try:
            res = prioritized_plan(grid, tasks, method.w_h, timeout=timeout)
        except SearchTimeout:
            row.outcome = "timeout"
        else:
            row.outcome = res.outcome
            row.ll_expanded = res.expanded
            if res.solved:
                row.sum_of_costs = sum(res.costs)
        row.wall_time = time.perf_counter() - started
    else:
        sol = solve(grid, tasks, method.solver_config(timeout))
        st = sol.stats
        row.outcome = sol.outcome
        row.wall_time = st.wall_time
        row.sum_of_costs = sol.sum_of_costs
        row.lb_sum = sol.lb_sum
        row.ct_generated, row.ct_expanded, row.ll_expanded = st.generated, st.expanded, st.low_level_expanded
        row.cardinal, row.semi_cardinal = st.cardinal, st.semi_cardinal
        row.non_cardinal, row.unknown = st.non_cardinal, st.unknown
    if row.outcome == "timeout":
        row.wall_time = max(row.wall_time, timeout)
    return row


def _run_job(job) -> ResultRow:
    return run_instance(*job)


def _load(path: str, parser, kind: str):
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {kind} file {path}: {exc}") from None
    return parser(text, name=path)


class RowWriter:
    """Serialised CSV writer, flushing after every row."""

    def __init__(self, path: Optional[str]):
        self._fh = open(path, "w", newline="", encoding="utf-8") if path else None
        self._csv = csv.writer(self._fh) if self._fh else None
        if self._csv:
            self._csv.writerow(CSV_COLUMNS)
            self._fh.flush()

    def write(self, row: ResultRow) -> None:
        if self._csv:
            self._csv.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
            self._fh.flush()

    def close(self) -> None:
        if self._fh:
            self._fh.close()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_benchmark(spec: RunSpec) -> List[ResultRow]:
    """One row per (method, agent count, seed).

    Within a method's series, once every seed times out at some agent count,
    larger counts are skipped.
    """
    grid = _load(spec.map_path, parse_map, "map")
    tasks = _load(spec.scen_path, parse_scen, "scenario")
    counts = sorted(spec.agents)
    if counts[-1] > len(tasks):
        raise ConfigError(f"{spec.scen_path} has {len(tasks)} tasks, need {counts[-1]}")
    map_name = FsPath(spec.map_path).stem
    rows: List[ResultRow] = []
    writer = RowWriter(spec.out_path)
    pool = ProcessPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        for method in spec.methods:
            for n in counts:
                jobs = [(grid, select_agents(tasks, n, seed), method, spec.timeout, map_name, seed)
                        for seed in spec.seeds]
                batch = list(pool.map(_run_job, jobs)) if pool else [_run_job(j) for j in jobs]
                for row in batch:
                    writer.write(row)
                    rows.append(row)
                    log.info("%s n=%d seed=%d %s %.3fs", row.method, n, row.seed,
                             row.outcome, row.wall_time)
                if all(r.outcome == "timeout" for r in batch):
                    log.info("%s timed out on every seed at %d agents; stopping series",
                             method.label, n)
                    break
    finally:
        writer.close()
        if pool:
            pool.shutdown()
    return rows


# ----------------------------------------------------------------- summaries


def speedup(t_baseline: float, t_method: float, baseline_outcome: str) -> Optional[float]:
    """``t_baseline / t_method``, or ``CENSORED`` when the baseline timed out."""
    if not (t_baseline > 0 and t_method > 0):
        raise ValueError("times must be positive")
    if baseline_outcome == "timeout":
        return CENSORED
    return t_baseline / t_method


@dataclass
class SummaryRow:
    method: str
    max_speedup: Optional[float]
    median_speedup: Optional[float]
    pct_faster: Optional[float]
    n_compared: int
    n_solved: int
    n_instances: int


SUMMARY_COLUMNS = tuple(f.name for f in fields(SummaryRow))


def _instance(row: ResultRow) -> Tuple[str, int, int]:
    return (row.map, row.agents, row.seed)


def summarize(rows: Iterable[ResultRow], baseline: str) -> List[SummaryRow]:
    """Per method: max/median speedup and % strictly faster over instances the
    baseline did not time out on, plus the number solved."""
    rows = list(rows)
    base: Dict[tuple, ResultRow] = {_instance(r): r for r in rows if r.method == baseline}
    if not base:
        raise ValueError(f"baseline {baseline!r} not found in rows")
    methods: Dict[str, List[ResultRow]] = {}
    for r in rows:
        methods.setdefault(r.method, []).append(r)
    out = []
    for name, mrows in methods.items():
        ratios = []
        faster = 0
        for r in mrows:
            b = base.get(_instance(r))
            if b is None:
                continue
            s = speedup(b.wall_time, r.wall_time, b.outcome)
            if s is CENSORED:
                continue
            ratios.append(s)
            faster += r.wall_time < b.wall_time
        out.append(SummaryRow(
            method=name,
            max_speedup=max(ratios) if ratios else None,
            median_speedup=statistics.median(ratios) if ratios else None,
            pct_faster=100.0 * faster / len(ratios) if ratios else None,
            n_compared=len(ratios),
            n_solved=sum(r.outcome == "solved" for r in mrows),
            n_instances=len(mrows),
        ))
    return out


@dataclass
class MeanRow:
    map: str
    method: str
    agents: int
    seeds: int
    solved: int
    mean_wall_time: float
    mean_sum_of_costs: Optional[float]
    mean_ct_generated: float
    mean_cardinal: float


MEAN_COLUMNS = tuple(f.name for f in fields(MeanRow))


def seed_means(rows: Iterable[ResultRow]) -> List[MeanRow]:
    """Mean over seeds per (map, method, agents); cost averaged over solved seeds."""
    groups: Dict[tuple, List[ResultRow]] = {}
    for r in rows:
        groups.setdefault((r.map, r.method, r.agents), []).append(r)
    out = []
    for (map_name, method, agents), g in groups.items():
        solved = [r for r in g if r.outcome == "solved" and r.sum_of_costs is not None]
        out.append(MeanRow(
            map_name, method, agents, len(g), len(solved),
            statistics.fmean(r.wall_time for r in g),
            statistics.fmean(r.sum_of_costs for r in solved) if solved else None,
            statistics.fmean(r.ct_generated for r in g),
            statistics.fmean(r.cardinal for r in g),
        ))
    return out


def write_csv(path: str, columns: Sequence[str], records: Iterable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(getattr(rec, c)) for c in columns])


def _parse_value(name: str, text: str):
    if name in ("improved_lb", "prioritize_conflicts"):
        return text == "True"
    if name in ("agents", "seed", "ct_generated", "ct_expanded", "ll_expanded",
                "cardinal", "semi_cardinal", "non_cardinal", "unknown"):
        return int(text)
    if name == "sum_of_costs":
        return int(text) if text else None
    if name == "lb_sum":
        return float(text) if text else None
    if name in ("w_so", "w_h", "r", "wall_time"):
        return float(text)
    return text


def read_rows(path: str) -> List[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"{path}: unexpected CSV header")
        return [ResultRow(**{k: _parse_value(k, v) for k, v in rec.items()}) for rec in reader]


# ----------------------------------------------------------------------- CLI


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wcbs-bench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an agent sweep and write result rows")
    run.add_argument("--map", required=True)
    run.add_argument("--scen", required=True)
    run.add_argument("--agents", required=True, help="LIST or START:STEP:MAX")
    run.add_argument("--seeds", default=",".join(map(str, DEFAULT_SEEDS)))
    run.add_argument("--variant", choices=METHOD_KINDS, default="vanilla")
    run.add_argument("--wso", type=float, default=2.0)
    run.add_argument("--wh", type=float, default=1.0)
    run.add_argument("--r", type=float, default=5.0)
    run.add_argument("--improved-lb", action="store_true")
    run.add_argument("--prioritize-conflicts", action="store_true")
    run.add_argument("--high-level", choices=("optimal", "focal"), default="focal")
    run.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    run.add_argument("--out", required=True)
    run.add_argument("--workers", type=int, default=1)

    summ = sub.add_parser("summarize", help="speedup table against a baseline method")
    summ.add_argument("rows", nargs="+", help="result CSV files from 'run'")
    summ.add_argument("--baseline", required=True, help="method label of the baseline")
    summ.add_argument("--out", required=True)
    summ.add_argument("--means", help="also write per-agent-count seed means here")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        if args.command == "run":
            method = MethodSpec(args.variant, args.wso, args.wh, args.r, args.improved_lb,
                                args.high_level, args.prioritize_conflicts)
            spec = RunSpec(args.map, args.scen, parse_agent_counts(args.agents),
                           [int(s) for s in args.seeds.split(",")], [method],
                           args.timeout, args.out, args.workers)
            rows = run_benchmark(spec)
            print(f"wrote {len(rows)} rows to {args.out}")
        else:
            rows = [r for path in args.rows for r in read_rows(path)]
            write_csv(args.out, SUMMARY_COLUMNS, summarize(rows, args.baseline))
            if args.means:
                write_csv(args.means, MEAN_COLUMNS, seed_means(rows))
    except (ConfigError, ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
