"""Stopping rules understood by the solver outputs and the simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidSpec


@dataclass(frozen=True)
class Interval:
    """Stop at the first exit from the open interval (lower, upper)."""
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidSpec(f"empty continuation interval ({self.lower}, {self.upper})")


def Threshold(level: float) -> Interval:
    """First passage above ``level``: T = inf{t: X_t >= level}."""
    return Interval(-math.inf, level)


@dataclass(frozen=True)
class FixedTime:
    t: float

    def __post_init__(self):
        if not self.t >= 0:
            raise InvalidSpec(f"fixed stopping time must be nonnegative, got {self.t}")
