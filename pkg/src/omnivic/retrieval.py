"""Four-step exemplar retrieval over a memory bank.

1. keep the top-M% distinct instructions by embedding cosine similarity,
2. keep records whose phase matches the query,
3. score force, torque, linear and angular velocity by cosine similarity,
4. rank by the summed score and return the best ``top_n``.

Ties are broken by smaller ``record_id`` everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from omnivic.bank import MemoryBank, Phase, RagRecord
from omnivic.embedding import EmbeddingProvider
from omnivic.errors import ContractViolation
from omnivic.geometry import Frame, Twist, Wrench
from omnivic.similarity import ZERO_NORM, cosine_rows, cosine_sim, signal_scores

__all__ = [
    "QueryContext", "RetrievalConfig", "Exemplar", "embed", "cosine_sim",
    "step1_instruction_filter", "step2_phase_filter", "step3_scores",
    "retrieve", "brute_force_retrieve",
]


@dataclass(frozen=True)
class QueryContext:
    instruction_text: str
    instruction_embedding: np.ndarray
    phase: Phase
    twist: Twist
    wrench: Wrench

    def __post_init__(self):
        emb = np.asarray(self.instruction_embedding, dtype=float)
        if abs(float(np.linalg.norm(emb)) - 1.0) > 1e-6:
            raise ContractViolation("query embedding must be unit-normalized")
        object.__setattr__(self, "instruction_embedding", emb)
        if self.twist.frame is not Frame.WORLD or self.wrench.frame is not Frame.WORLD:
            raise ContractViolation("query twist and wrench must be in the World frame")


@dataclass(frozen=True)
class RetrievalConfig:
    m_percent: float = 20.0
    top_n: int = 5

    def __post_init__(self):
        if not (0 < self.m_percent <= 100):
            raise ContractViolation(f"m_percent must be in (0, 100], got {self.m_percent}")
        if self.top_n < 1:
            raise ContractViolation("top_n must be positive")


@dataclass(frozen=True)
class Exemplar:
    record: RagRecord
    force_sim: float
    torque_sim: float
    linvel_sim: float
    angvel_sim: float
    aggregate: float


def embed(text: str, provider: EmbeddingProvider) -> np.ndarray:
    return provider.embed(text)


def _n_keep(m_percent: float, n_distinct: int) -> int:
    # small guard so e.g. 20% of 10 is exactly 2 despite float rounding
    return max(1, math.ceil(m_percent * n_distinct / 100.0 - 1e-9))


# -- vectorized index over one bank snapshot ---------------------------------


class _Index:
    def __init__(self, records: tuple):
        self.records = records
        first: dict[str, int] = {}
        for i, r in enumerate(records):
            if r.instruction_text not in first or r.record_id < records[first[r.instruction_text]].record_id:
                first[r.instruction_text] = i
        self.instructions = list(first)
        n = len(records)
        self.instr_of = np.array([self.instructions.index(r.instruction_text) for r in records]
                                 if n else [], dtype=int)
        if self.instructions:
            self.instr_emb = np.stack([records[first[t]].instruction_embedding for t in self.instructions])
        else:
            self.instr_emb = np.zeros((0, 0))
        self.instr_min_id = np.array([records[first[t]].record_id for t in self.instructions])
        self.ids = np.array([r.record_id for r in records], dtype=np.int64)
        self.phase = np.array([list(Phase).index(r.phase) for r in records], dtype=int)
        sig = np.stack([r.signal_vector() for r in records]) if n else np.zeros((0, 12))
        self.units = [_unit_rows(sig[:, lo:lo + 3]) for lo in range(0, 12, 3)]


def _unit_rows(block: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", block, block))
    out = np.zeros_like(block)
    ok = norms >= ZERO_NORM
    out[ok] = block[ok] / norms[ok, None]
    return out


def _unit(v: np.ndarray) -> np.ndarray:
    n = math.sqrt(float(v @ v))
    return v / n if n >= ZERO_NORM else np.zeros_like(v)


def _index(bank: MemoryBank) -> _Index:
    snap = bank.snapshot()
    idx = snap.cache.get("retrieval")
    if idx is None:
        idx = snap.cache["retrieval"] = _Index(snap.records)
    return idx


def _kept_instruction_ids(idx: _Index, query_embedding, m_percent: float) -> np.ndarray:
    u = len(idx.instructions)
    if u == 0:
        return np.zeros(0, dtype=int)
    q = np.asarray(query_embedding, dtype=float)
    if q.shape != (idx.instr_emb.shape[1],):
        raise ContractViolation("query embedding dimension does not match the bank")
    sims = cosine_rows(idx.instr_emb, q)
    order = np.lexsort((idx.instr_min_id, -sims))
    return order[:_n_keep(m_percent, u)]


# -- pipeline steps ------------------------------------------------------------


def step1_instruction_filter(bank: MemoryBank, query_embedding, m_percent: float) -> set:
    idx = _index(bank)
    return {idx.instructions[i] for i in _kept_instruction_ids(idx, query_embedding, m_percent)}


def step2_phase_filter(candidates, phase: Phase) -> list:
    return [r for r in candidates if r.phase is phase]


def step3_scores(query: QueryContext, record: RagRecord) -> tuple:
    if record.twist.frame is not query.twist.frame or record.wrench.frame is not query.wrench.frame:
        raise ContractViolation("query and record signals are in different frames")
    return signal_scores(
        query.wrench.force, query.wrench.torque, query.twist.linear, query.twist.angular,
        record.wrench.force, record.wrench.torque, record.twist.linear, record.twist.angular,
    )


def retrieve(bank: MemoryBank, query: QueryContext, config: RetrievalConfig = RetrievalConfig()) -> list:
    """Run the four retrieval steps and return up to ``config.top_n`` exemplars."""
    idx = _index(bank)
    kept = _kept_instruction_ids(idx, query.instruction_embedding, config.m_percent)
    if kept.size == 0:
        return []
    mask = np.isin(idx.instr_of, kept) & (idx.phase == list(Phase).index(query.phase))
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        return []
    q_blocks = (query.wrench.force, query.wrench.torque, query.twist.linear, query.twist.angular)
    scores = [np.clip(u[rows] @ _unit(q), -1.0, 1.0) for u, q in zip(idx.units, q_blocks)]
    agg = scores[0] + scores[1] + scores[2] + scores[3]
    order = np.lexsort((idx.ids[rows], -agg))[:config.top_n]
    out = []
    for j in order:
        f, t, lv, av = (float(s[j]) for s in scores)
        out.append(Exemplar(idx.records[rows[j]], f, t, lv, av, f + t + lv + av))
    return out


# -- exhaustive oracle -----------------------------------------------------------


def _py_cos(a, b) -> float:
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na < ZERO_NORM or nb < ZERO_NORM:
        return 0.0
    return min(1.0, max(-1.0, sum(x * y for x, y in zip(a, b)) / (na * nb)))


def brute_force_retrieve(bank: MemoryBank, query: QueryContext,
                         config: RetrievalConfig = RetrievalConfig()) -> list:
    """Plain full scan with the same contract as :func:`retrieve`."""
    records = list(bank.records)
    if not records:
        return []
    rep: dict[str, RagRecord] = {}
    for r in records:
        cur = rep.get(r.instruction_text)
        if cur is None or r.record_id < cur.record_id:
            rep[r.instruction_text] = r
    ranked = sorted(
        rep.values(),
        key=lambda r: (-_py_cos(query.instruction_embedding, r.instruction_embedding), r.record_id),
    )
    n_keep = max(1, math.ceil(config.m_percent * len(ranked) / 100.0 - 1e-9))
    keep = {r.instruction_text for r in ranked[:n_keep]}

    scored = []
    for r in records:
        if r.instruction_text not in keep or r.phase is not query.phase:
            continue
        f = _py_cos(query.wrench.force, r.wrench.force)
        t = _py_cos(query.wrench.torque, r.wrench.torque)
        lv = _py_cos(query.twist.linear, r.twist.linear)
        av = _py_cos(query.twist.angular, r.twist.angular)
        scored.append(Exemplar(r, f, t, lv, av, f + t + lv + av))
    scored.sort(key=lambda e: (-e.aggregate, e.record.record_id))
    return scored[:config.top_n]
