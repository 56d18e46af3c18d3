"""Error types shared across the solver suite."""

from __future__ import annotations


class ScenarioError(ValueError):
    """A scenario file failed parsing or validation."""


class NumericFailure(RuntimeError):
    """A solver produced NaN/Inf; carries the (time level, state) location."""

    def __init__(self, message: str, level: int | None = None, state_bits: int | None = None):
        super().__init__(message)
        self.level = level
        self.state_bits = state_bits
