"""Piecewise-linear step schedules (learning rate and penalty ramps)."""

from __future__ import annotations

from dataclasses import dataclass

from .. import ConfigurationError


@dataclass(frozen=True)
class LinearSchedule:
    """Constant at `start_value` until `start_step`, then linear to
    `end_value` at `end_step`, constant afterwards."""

    start_value: float
    end_value: float
    start_step: int
    end_step: int

    def __post_init__(self):
        if not 0 <= self.start_step <= self.end_step:
            raise ConfigurationError(
                f"need 0 <= start_step <= end_step, got {self.start_step}, {self.end_step}"
            )

    def at(self, k: int) -> float:
        if k < 0:
            raise ConfigurationError(f"step index must be >= 0, got {k}")
        if k <= self.start_step:
            return self.start_value
        if k >= self.end_step:
            return self.end_value
        frac = (k - self.start_step) / (self.end_step - self.start_step)
        return self.start_value + frac * (self.end_value - self.start_value)
