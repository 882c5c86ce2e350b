"""Bounded-suboptimal conflict-based search with weighted low-level heuristics."""
from .config import W_SO_INFINITY, ConfigError, HighLevel, SolverConfig, Variant
from .conflicts import (
    MDD, Cardinality, Conflict, Constraint, build_mdd, classify_conflict,
    detect_conflicts, split_conflict,
)
from .grid import (
    AgentTask, GridMap, HeuristicTable, ParseError, build_heuristic_table,
    parse_map, parse_scen, select_agents, serialize_map,
)
from .highlevel import CBSSolver, CTNode, Solution, SolveStats, solve
from .lowlevel import (
    LowLevelResult, SearchTimeout, count_transition_conflicts, f_focal, f_open,
    focal_bound, low_level_search, lower_bound,
)
from .prioritized import PPResult, cbspp_config, prioritized_plan

__all__ = [
    "W_SO_INFINITY",
    "ConfigError",
    "HighLevel",
    "SolverConfig",
    "Variant",
    "MDD",
    "Cardinality",
    "Conflict",
    "Constraint",
    "build_mdd",
    "classify_conflict",
    "detect_conflicts",
    "split_conflict",
    "AgentTask",
    "GridMap",
    "HeuristicTable",
    "ParseError",
    "build_heuristic_table",
    "parse_map",
    "parse_scen",
    "select_agents",
    "serialize_map",
    "CBSSolver",
    "CTNode",
    "Solution",
    "SolveStats",
    "solve",
    "LowLevelResult",
    "SearchTimeout",
    "count_transition_conflicts",
    "f_focal",
    "f_open",
    "focal_bound",
    "low_level_search",
    "lower_bound",
    "PPResult",
    "cbspp_config",
    "prioritized_plan",
]

__version__ = "0.1.0"
