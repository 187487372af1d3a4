"""Success / violation / peak-force table over tasks x methods x seeds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from omnivic.bank import OutcomeLabel
from omnivic.sim.episode import run_episode
from omnivic.sim.safety import SafetyConfig


@dataclass(frozen=True)
class Cell:
    task: str
    method: str
    episodes: int
    successes: int
    violations: int
    mean_peak_force: float
    fallbacks: int = 0

    @property
    def success_rate(self) -> float:
        return self.successes / self.episodes

    @property
    def violation_rate(self) -> float:
        return self.violations / self.episodes


def episode_seeds(n: int, seed: int = 0) -> list:
    return [seed + i for i in range(n)]


def evaluate_suite(tasks, methods: dict, episodes_per_cell: int, seeds=None,
                   safety: SafetyConfig | None = None, on_episode=None) -> list:
    """Run every (task, method) pair ``episodes_per_cell`` times.

    ``methods`` maps a name to a zero-argument controller factory. Episode
    ``i`` of every cell uses ``seeds[i]`` (default ``0..n-1``), so methods
    face identical perturbations. ``safety`` sets the force rule; the time
    budget always comes from the task. ``on_episode(result)`` sees each result
    before it is dropped.
    """
    if episodes_per_cell < 1:
        raise ValueError("episodes_per_cell must be >= 1")
    seeds = list(seeds) if seeds is not None else episode_seeds(episodes_per_cell)
    if len(seeds) < episodes_per_cell:
        raise ValueError("need one seed per episode")
    cells = []
    for task in tasks:
        rule = None if safety is None else SafetyConfig(safety.f_max, safety.consecutive, task.t_max)
        for name, factory in methods.items():
            ok = bad = fb = 0
            peaks = []
            for s in seeds[:episodes_per_cell]:
                res = run_episode(task, factory(), rule, seed=s)
                res.method = name
                ok += res.outcome is OutcomeLabel.SUCCESS
                bad += res.outcome is OutcomeLabel.FAILURE_FORCE
                fb += res.fallbacks
                peaks.append(res.peak_force)
                if on_episode is not None:
                    on_episode(res)
            cells.append(Cell(task.name, name, episodes_per_cell, ok, bad, float(np.mean(peaks)), fb))
    return cells


def overall_success(cells, method: str) -> float:
    mine = [c for c in cells if c.method == method]
    return sum(c.successes for c in mine) / sum(c.episodes for c in mine)


def format_table(cells) -> str:
    rows = ["task\tmethod\tepisodes\tsuccess_rate\tviolation_rate\tmean_peak_force\tfallbacks"]
    for c in cells:
        rows.append(f"{c.task}\t{c.method}\t{c.episodes}\t{c.success_rate:.4f}\t"
                    f"{c.violation_rate:.4f}\t{c.mean_peak_force:.4f}\t{c.fallbacks}")
    return "\n".join(rows) + "\n"
