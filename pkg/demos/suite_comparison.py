"""
Success rates across the query tasks
====================================

Evaluates baseline, rag-only and the full controller on every query task
with seeded randomization and prints the metrics table. Ten episodes per
cell keeps this under a minute; raise EPISODES for tighter estimates.
"""

from omnivic.sim.collect import collect_bank
from omnivic.sim.controllers import FixedGainController, OmniVICController, RagOnlyController
from omnivic.sim.suite import evaluate_suite, format_table, overall_success
from omnivic.sim.tasks import knowledge_base_tasks, query_tasks

EPISODES = 10

bank, _ = collect_bank(knowledge_base_tasks(), seed=0)
methods = {
    "baseline": FixedGainController,
    "rag-only": lambda: RagOnlyController(bank),
    "omnivic": lambda: OmniVICController(bank),
}
cells = evaluate_suite(list(query_tasks().values()), methods, EPISODES)
print(format_table(cells))
for m in methods:
    print(f"{m:>9s} overall success {overall_success(cells, m):.2f}")
