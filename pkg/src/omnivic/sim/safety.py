"""Force-limit safety rule: fail after N consecutive samples above the limit."""

from __future__ import annotations

from dataclasses import dataclass

from omnivic.errors import ContractViolation


@dataclass(frozen=True)
class SafetyConfig:
    f_max: float = 30.0
    consecutive: int = 3
    t_max: int = 5000

    def __post_init__(self):
        if not (self.f_max > 0 and self.consecutive >= 1 and self.t_max >= 1):
            raise ContractViolation("safety limits must be positive")


class SafetyMonitor:
    """Run-length counter over force magnitudes; comparison is strictly greater."""

    def __init__(self, config: SafetyConfig = SafetyConfig()):
        self.config = config
        self.run = 0
        self.violated = False

    def reset(self) -> None:
        self.run = 0
        self.violated = False

    def update(self, force_magnitude: float) -> bool:
        """Feed one sample; return True once the rule is violated."""
        if force_magnitude > self.config.f_max:
            self.run += 1
        else:
            self.run = 0
        if self.run >= self.config.consecutive:
            self.violated = True
        return self.violated


def safety_update(monitor: SafetyMonitor, force_magnitude: float) -> str:
    return "violated" if monitor.update(force_magnitude) else "ok"
