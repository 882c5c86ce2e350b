"""Solver configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

# Stand-in for an unbounded suboptimality factor.
W_SO_INFINITY = 10000.0


class ConfigError(ValueError):
    pass


class Variant(str, Enum):
    VANILLA = "vanilla"
    WEIGHTED_OPEN = "weighted-open"
    WEIGHTED_FOCAL = "weighted-focal"


class HighLevel(str, Enum):
    OPTIMAL = "optimal-cbs"
    FOCAL = "focal-ecbs"


@dataclass(frozen=True)
class SolverConfig:
    w_so: float = 1.0
    variant: Variant = Variant.VANILLA
    w_h: float = 1.0
    r: float = 5.0
    improved_lb: bool = False
    horizon: int | None = None  # None: derived per search from map size and constraints
    timeout: float = math.inf
    high_level: HighLevel = HighLevel.FOCAL
    prioritize_conflicts: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "high_level", HighLevel(self.high_level))
        if not self.w_so >= 1:
            raise ConfigError(f"w_so must be >= 1, got {self.w_so}")
        if not self.w_h >= 1:
            raise ConfigError(f"w_h must be >= 1, got {self.w_h}")
        if self.variant is Variant.WEIGHTED_OPEN and self.w_h > self.w_so:
            raise ConfigError(
                f"weighted-open needs w_h <= w_so (got w_h={self.w_h}, w_so={self.w_so})"
            )
        if self.variant is Variant.WEIGHTED_FOCAL and not self.r >= 0:
            raise ConfigError(f"r must be >= 0, got {self.r}")
        if self.high_level is HighLevel.OPTIMAL and (
            self.w_so != 1 or self.variant is not Variant.VANILLA
        ):
            raise ConfigError("optimal-cbs requires w_so = 1 and the vanilla variant")
        if self.horizon is not None and self.horizon < 0:
            raise ConfigError("horizon must be nonnegative")
        if not self.timeout > 0:
            raise ConfigError("timeout must be positive")

    @property
    def w_c(self) -> float:
        return self.r * self.w_h

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


OPTIMAL = SolverConfig(high_level=HighLevel.OPTIMAL)
