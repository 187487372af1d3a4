"""Contact-stiffness sweep that makes the fixed-gain baseline fail on the ramp."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from omnivic.bank import OutcomeLabel
from omnivic.sim.controllers import FixedGainController
from omnivic.sim.envs import with_contact_stiffness
from omnivic.sim.episode import Task, run_episode

FIXTURE_VERSION = 1


@dataclass(frozen=True)
class SweepPoint:
    contact_stiffness: float
    outcome: OutcomeLabel
    peak_force: float


@dataclass(frozen=True)
class Calibration:
    task: Task
    sweep: tuple

    @property
    def contact_stiffness(self) -> float:
        return self.task.env.contact_stiffness

    def to_dict(self) -> dict:
        return {
            "version": FIXTURE_VERSION,
            "procedure": "raise contact_stiffness by a constant factor until the k=150 baseline "
                         "records 3 consecutive samples above 30 N",
            "task": self.task.to_dict(),
            "sweep": [{"contact_stiffness": p.contact_stiffness, "outcome": p.outcome.value,
                       "peak_force": round(p.peak_force, 3)} for p in self.sweep],
        }


def calibrate_ramp(task: Task, k_start: float = 250.0, factor: float = 1.5,
                   k_limit: float = 2.5e4, controller=None) -> Calibration:
    """Smallest swept contact stiffness at which the baseline ends in FailureForce.

    The sweep is ``k_start * factor**i`` up to ``k_limit``; raises
    ``RuntimeError`` if the baseline never fails.
    """
    if not (k_start > 0 and factor > 1):
        raise ValueError("need k_start > 0 and factor > 1")
    controller = controller or FixedGainController()
    sweep = []
    k = k_start
    while k <= k_limit:
        trial = replace(task, env=with_contact_stiffness(task.env, k))
        res = run_episode(trial, controller)
        sweep.append(SweepPoint(k, res.outcome, res.peak_force))
        if res.outcome is OutcomeLabel.FAILURE_FORCE:
            return Calibration(trial, tuple(sweep))
        k *= factor
    raise RuntimeError(f"baseline never failed up to contact stiffness {k_limit}")


def write_fixture(cal: Calibration, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cal.to_dict(), fh, indent=2)
        fh.write("\n")
