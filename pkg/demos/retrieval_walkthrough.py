"""
Retrieving impedance exemplars from a collected bank
====================================================

Builds a memory bank from the knowledge-base tasks, then asks it for
exemplars the way the controller does mid-episode: an instruction, the
current phase, and the measured twist and wrench.
"""

import numpy as np

from omnivic.bank import Phase
from omnivic.embedding import HashingEmbedder
from omnivic.geometry import Frame, Twist, Wrench
from omnivic.retrieval import QueryContext, retrieve, step1_instruction_filter
from omnivic.sim.collect import collect_bank
from omnivic.sim.tasks import knowledge_base_tasks

bank, report = collect_bank(knowledge_base_tasks(), seed=0)
print("\n".join(report.lines()))
print(bank.stats())

# A query that was never collected: the closest instructions should win.
embedder = HashingEmbedder(bank.config.embedding_dim)
text = "move along negative y at constant height over the ramp"
query = QueryContext(
    text, embedder.embed(text), Phase.CONTACT,
    Twist(np.array([0.0, -0.1, 0.02]), np.zeros(3), Frame.WORLD),
    Wrench(np.array([0.0, 2.0, 12.0]), np.zeros(3), Frame.WORLD, gravity_compensated=True),
)

kept = step1_instruction_filter(bank, query.instruction_embedding, 20.0)
print(f"\ninstructions surviving the top-20% filter: {len(kept)}")

for rank, ex in enumerate(retrieve(bank, query), 1):
    r = ex.record
    print(f"{rank}. {r.instruction_text!r:50s} score {ex.aggregate:5.2f} "
          f"K = {np.round(r.k_trans, 1)}")
