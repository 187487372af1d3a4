"""
Contact force over the calibrated ramp
======================================

Runs the fixed-gain baseline and the retrieval-augmented controller on the
calibrated ramp and prints a coarse force and stiffness profile. The
baseline presses through the crest; the adaptive run drops Kz in contact.
Pass a directory as the first argument to also write the CSV traces.
"""

import sys
from pathlib import Path

import numpy as np

from omnivic.bank import Phase
from omnivic.sim.collect import collect_bank
from omnivic.sim.controllers import FixedGainController, OmniVICController
from omnivic.sim.episode import run_episode
from omnivic.sim.tasks import knowledge_base_tasks, load_calibrated_ramp
from omnivic.sim.trace import write_trace

task = load_calibrated_ramp()
print(f"ramp contact stiffness {task.env.contact_stiffness:g} N/m")
bank, _ = collect_bank(knowledge_base_tasks(), seed=0)

runs = {
    "baseline": run_episode(task, FixedGainController()),
    "omnivic": run_episode(task, OmniVICController(bank)),
}

for name, res in runs.items():
    print(f"\n{name}: {res.outcome.value}, peak {res.peak_force:.1f} N after {res.steps_used} steps")
    for phase in Phase:
        print(f"  mean Kz in {phase.value:12s} {res.mean_gain(phase):7.1f}")
    # from first touch, every 0.2 s of simulated time
    touch = int(np.argmax(res.force_magnitude > 0))
    stride = int(0.2 / res.dt)
    for i in range(touch, res.steps_used, stride):
        f = res.force_magnitude[i]
        bar = "#" * int(round(f))
        print(f"  t={i * res.dt:5.2f}s  |F|={f:5.1f}  Kz={res.k[i, 2]:6.1f}  {bar}")

if len(sys.argv) > 1:
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    for name, res in runs.items():
        write_trace(res, out / f"ramp_{name}.csv")
    print(f"\ntraces written to {out}")
