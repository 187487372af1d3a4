"""Phase labels from proprioception (twist and contact wrench)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from omnivic.bank import Phase
from omnivic.errors import ContractViolation
from omnivic.geometry import Frame, Twist, Wrench


@dataclass(frozen=True)
class PhaseThresholds:
    contact_force: float = 1.0   # N
    motion_speed: float = 0.005  # m/s
    approach_window: int = 5     # steps

    def __post_init__(self):
        if not (self.contact_force > 0 and self.motion_speed > 0 and self.approach_window > 0):
            raise ContractViolation("phase thresholds must be positive")


@dataclass(frozen=True)
class PhaseHistory:
    """What the labeler needs to remember about earlier steps of a segment."""

    previous: Phase | None = None
    steps_since_contact: int | None = None
    contact_seen: bool = False

    @classmethod
    def from_labels(cls, labels: Sequence[Phase]) -> "PhaseHistory":
        h = cls()
        for p in labels:
            h = h.push(p)
        return h

    def push(self, label: Phase) -> "PhaseHistory":
        if label is Phase.CONTACT:
            return PhaseHistory(label, 0, True)
        since = None if self.steps_since_contact is None else self.steps_since_contact + 1
        return PhaseHistory(label, since, self.contact_seen)


def label_phase(twist: Twist, wrench: Wrench, history: PhaseHistory | Sequence[Phase],
                thresholds: PhaseThresholds = PhaseThresholds()) -> Phase:
    """Contact > Retreat > Approaching > FreeMotion, decided by force, speed and history.

    Retreat holds while moving for up to ``approach_window`` steps after the
    last contact. Approaching means moving before any contact in the segment.
    """
    if twist.frame is not Frame.WORLD or wrench.frame is not Frame.WORLD:
        raise ContractViolation("phase labeling expects World-frame signals")
    if not isinstance(history, PhaseHistory):
        history = PhaseHistory.from_labels(history)
    if float(np.linalg.norm(wrench.force)) >= thresholds.contact_force:
        return Phase.CONTACT
    moving = float(np.linalg.norm(twist.linear)) >= thresholds.motion_speed
    if moving and history.previous in (Phase.CONTACT, Phase.RETREAT):
        # steps_since_contact counts from the contact step itself
        if history.steps_since_contact is not None and history.steps_since_contact < thresholds.approach_window:
            return Phase.RETREAT
    if moving and not history.contact_seen:
        return Phase.APPROACHING
    return Phase.FREE_MOTION


class PhaseLabeler:
    """Stateful wrapper; one instance per episode."""

    def __init__(self, thresholds: PhaseThresholds = PhaseThresholds()):
        self.thresholds = thresholds
        self.history = PhaseHistory()

    def reset(self) -> None:
        self.history = PhaseHistory()

    def __call__(self, twist: Twist, wrench: Wrench) -> Phase:
        label = label_phase(twist, wrench, self.history, self.thresholds)
        self.history = self.history.push(label)
        return label
