"""
Closing a drawer with constant gains
====================================

Sweeps a few constant stiffness values on the drawer task. The drawer's
friction is low enough that every setting closes it; stiffer gains only
finish sooner. The adaptive controller is shown for reference.
"""

from omnivic.impedance import fixed_params
from omnivic.sim.collect import collect_bank
from omnivic.sim.controllers import FixedGainController, OmniVICController
from omnivic.sim.episode import run_episode
from omnivic.sim.tasks import knowledge_base_tasks, query_tasks

task = query_tasks()["drawer"]

print(f"{'controller':>12s} {'outcome':>16s} {'steps':>6s} {'peak N':>7s}")
for k in (50.0, 150.0, 500.0):
    res = run_episode(task, FixedGainController(fixed_params(k), name=f"k={k:g}"))
    print(f"{res.method:>12s} {res.outcome.value:>16s} {res.steps_used:6d} {res.peak_force:7.1f}")

bank, _ = collect_bank(knowledge_base_tasks(), seed=0)
res = run_episode(task, OmniVICController(bank))
print(f"{res.method:>12s} {res.outcome.value:>16s} {res.steps_used:6d} {res.peak_force:7.1f}")
