"""Fill a memory bank from successful knowledge-base episodes."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from omnivic.bank import BankConfig, MemoryBank, OutcomeLabel, RagRecord
from omnivic.embedding import EmbeddingProvider, HashingEmbedder
from omnivic.geometry import Frame, Twist, Wrench
from omnivic.sim.controllers import OmniVICController
from omnivic.sim.episode import run_episode

DEFAULT_QUOTA = 5


@dataclass
class CollectionReport:
    episodes: int = 0
    successes: int = 0
    inserted: int = 0
    per_pair: Counter = field(default_factory=Counter)

    def lines(self) -> list:
        out = [f"episodes {self.episodes}  successes {self.successes}  inserted {self.inserted}"]
        for (text, phase), n in sorted(self.per_pair.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            out.append(f"{n:4d}  {phase:<12} {text}")
        return out


def episode_records(result, instruction: str, embedding: np.ndarray) -> dict:
    """Per-step records of one episode, grouped by phase label."""
    zero = np.zeros(3)
    groups = {}
    for i, phase in enumerate(result.phases):
        rec = RagRecord(
            instruction, embedding, phase,
            Twist(result.twist[i, :3], zero, Frame.WORLD),
            Wrench(result.wrench[i, :3], zero, Frame.WORLD, gravity_compensated=True),
            result.k[i], result.d[i],
        )
        groups.setdefault(phase, []).append(rec)
    return groups


def collect_bank(tasks, quota: int = DEFAULT_QUOTA, episodes: int = 1, seed: int = 0,
                 bank_config: BankConfig | None = None, embedder: EmbeddingProvider | None = None,
                 controller_factory=None) -> tuple[MemoryBank, CollectionReport]:
    """Run each task ``episodes`` times and keep up to ``quota`` records per
    (instruction, phase) pair, drawn at random from the successful episodes.

    ``controller_factory(bank)`` builds the data-collection controller; by
    default OmniVIC with the heuristic backend reading the bank under
    construction. Failed episodes contribute nothing.
    """
    if quota < 1 or episodes < 1:
        raise ValueError("quota and episodes must be >= 1")
    config = bank_config or BankConfig()
    rng = np.random.default_rng(seed)
    bank = MemoryBank(config, rng=np.random.default_rng(rng.integers(2 ** 32)))
    embedder = embedder or HashingEmbedder(config.embedding_dim)
    factory = controller_factory or (lambda b: OmniVICController(b, embedder=embedder))
    report = CollectionReport()

    for task in tasks:
        embedding = embedder.embed(task.instruction)
        pool = {}
        for _ in range(episodes):
            res = run_episode(task, factory(bank), seed=int(rng.integers(2 ** 31)))
            report.episodes += 1
            if res.outcome is not OutcomeLabel.SUCCESS:
                continue
            report.successes += 1
            for phase, recs in episode_records(res, task.instruction, embedding).items():
                pool.setdefault(phase, []).extend(recs)
        for phase in sorted(pool, key=lambda p: p.value):
            recs = pool[phase]
            pick = rng.choice(len(recs), size=min(quota, len(recs)), replace=False)
            for i in sorted(int(j) for j in pick):
                if bank.insert(recs[i]).added:
                    report.inserted += 1
    for r in bank.records:
        report.per_pair[(r.instruction_text, r.phase.value)] += 1
    return bank, report
