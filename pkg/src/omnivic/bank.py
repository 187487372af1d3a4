"""Experience memory: success-labeled records with closest-pair replacement.

The bank holds at most ``capacity_b`` records. Once full, a new record is
pooled with the stored records sharing its instruction; the most similar pair
in that pool is found and one member, chosen at random, is dropped.
"""

from __future__ import annotations

import enum
import json
import threading
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from omnivic.errors import BankFormatError, ContractViolation, RecordRejected
from omnivic.geometry import Frame, Twist, Wrench
from omnivic.similarity import ZERO_NORM

EMBEDDING_DIGITS = 9


class Phase(enum.Enum):
    FREE_MOTION = "Free_motion"
    APPROACHING = "Approaching"
    CONTACT = "Contact"
    RETREAT = "Retreat"


class OutcomeLabel(enum.Enum):
    SUCCESS = "Success"
    FAILURE_FORCE = "FailureForce"
    FAILURE_TIMEOUT = "FailureTimeout"


def label_outcome(force_trace: Sequence[float], step_count: int, f_max: float,
                  t_max: int, consecutive: int = 3) -> OutcomeLabel:
    """Label a trial from its force-magnitude trace and duration.

    A force failure needs ``consecutive`` samples in a row strictly above
    ``f_max``.
    """
    if consecutive < 1:
        raise ContractViolation("consecutive must be >= 1")
    if len(force_trace) == 0 and step_count > 0:
        raise ContractViolation("empty force trace for a non-empty trial")
    run = 0
    for f in force_trace:
        run = run + 1 if f > f_max else 0
        if run >= consecutive:
            return OutcomeLabel.FAILURE_FORCE
    if step_count > t_max:
        return OutcomeLabel.FAILURE_TIMEOUT
    return OutcomeLabel.SUCCESS


def quantize_embedding(vec) -> np.ndarray:
    """Round to the digits kept on disk so save/load is exact."""
    return np.array([float(f"{x:.{EMBEDDING_DIGITS}g}") for x in np.asarray(vec, dtype=float)])


def _positive3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ContractViolation(f"{name} must be 3 positive numbers, got {arr}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class RagRecord:
    instruction_text: str
    instruction_embedding: np.ndarray
    phase: Phase
    twist: Twist
    wrench: Wrench
    k_trans: np.ndarray
    d_trans: np.ndarray
    record_id: int | None = None

    def __post_init__(self):
        if not self.instruction_text:
            raise ContractViolation("instruction_text must be non-empty")
        emb = quantize_embedding(self.instruction_embedding)
        if not np.all(np.isfinite(emb)) or abs(float(np.linalg.norm(emb)) - 1.0) > 1e-6:
            raise ContractViolation("instruction_embedding must be unit-normalized")
        emb.flags.writeable = False
        object.__setattr__(self, "instruction_embedding", emb)
        if not isinstance(self.phase, Phase):
            raise ContractViolation(f"phase must be a Phase, got {self.phase!r}")
        if self.twist.frame is not Frame.WORLD:
            raise ContractViolation("stored twists must be in the World frame")
        if self.wrench.frame is not Frame.WORLD or not self.wrench.gravity_compensated:
            raise ContractViolation("stored wrenches must be World-frame and gravity compensated")
        object.__setattr__(self, "k_trans", _positive3(self.k_trans, "k_trans"))
        object.__setattr__(self, "d_trans", _positive3(self.d_trans, "d_trans"))

    def signal_vector(self) -> np.ndarray:
        """``[force, torque, linear, angular]`` as one 12-vector."""
        return np.concatenate([self.wrench.force, self.wrench.torque,
                               self.twist.linear, self.twist.angular])

    def same_content(self, other: "RagRecord") -> bool:
        """Equality on everything except ``record_id``."""
        return (
            self.instruction_text == other.instruction_text
            and self.phase is other.phase
            and np.array_equal(self.instruction_embedding, other.instruction_embedding)
            and np.array_equal(self.signal_vector(), other.signal_vector())
            and np.array_equal(self.k_trans, other.k_trans)
            and np.array_equal(self.d_trans, other.d_trans)
        )


@dataclass(frozen=True)
class BankConfig:
    capacity_b: int = 200
    embedding_dim: int = 256

    def __post_init__(self):
        if self.capacity_b < 1 or self.embedding_dim < 1:
            raise ContractViolation("capacity_b and embedding_dim must be positive")


@dataclass(frozen=True)
class InsertReport:
    added: bool
    record_id: int
    evicted_id: int | None = None


@dataclass(frozen=True)
class BankStats:
    size: int
    distinct_instructions: int
    per_phase: dict
    per_pair: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class BankSnapshot:
    """An immutable view of the bank at one version.

    ``cache`` lets readers memoize derived indexes for this exact content.
    """

    records: tuple
    version: int
    cache: dict = field(default_factory=dict, repr=False)


def pairwise_signal_similarity(signals: np.ndarray) -> np.ndarray:
    """Sum of the four per-signal cosine matrices for ``(n, 12)`` signal rows."""
    n = signals.shape[0]
    total = np.zeros((n, n))
    for lo in range(0, 12, 3):
        block = signals[:, lo:lo + 3]
        norms = np.sqrt(np.einsum("ij,ij->i", block, block))
        unit = np.zeros_like(block)
        ok = norms >= ZERO_NORM
        unit[ok] = block[ok] / norms[ok, None]
        total += np.clip(unit @ unit.T, -1.0, 1.0)
    return total


class MemoryBank:
    """Capacity-bounded record store.

    Writers are serialized by a lock and publish a fresh immutable snapshot;
    readers only ever see complete snapshots.
    """

    def __init__(self, config: BankConfig | None = None, rng=None):
        self.config = config or BankConfig()
        self._rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self._lock = threading.Lock()
        self._snapshot = BankSnapshot((), 0)
        self._next_id = 0

    # -- read side --

    def snapshot(self) -> BankSnapshot:
        return self._snapshot

    @property
    def records(self) -> tuple:
        return self._snapshot.records

    def __len__(self) -> int:
        return len(self._snapshot.records)

    def __iter__(self):
        return iter(self._snapshot.records)

    def stats(self) -> BankStats:
        recs = self._snapshot.records
        per_phase = {p: 0 for p in Phase}
        per_phase.update(Counter(r.phase for r in recs))
        per_pair = dict(Counter((r.instruction_text, r.phase) for r in recs))
        return BankStats(len(recs), len({r.instruction_text for r in recs}), per_phase, per_pair)

    # -- write side --

    def _check(self, record: RagRecord) -> None:
        if record.instruction_embedding.shape != (self.config.embedding_dim,):
            raise RecordRejected(
                f"embedding has dimension {record.instruction_embedding.shape[0]}, "
                f"bank expects {self.config.embedding_dim}"
            )

    def insert(self, record: RagRecord, outcome: OutcomeLabel = OutcomeLabel.SUCCESS) -> InsertReport:
        if outcome is not OutcomeLabel.SUCCESS:
            raise RecordRejected(f"only successful experiences are stored, got {outcome.value}")
        self._check(record)
        with self._lock:
            recs = list(self._snapshot.records)
            if record.record_id is None:
                record = replace(record, record_id=self._next_id)
            elif any(r.record_id == record.record_id for r in recs):
                raise RecordRejected(f"duplicate record_id {record.record_id}")
            self._next_id = max(self._next_id, record.record_id + 1)

            if len(recs) < self.config.capacity_b:
                recs.append(record)
                report = InsertReport(True, record.record_id)
            else:
                report = self._replace_closest(recs, record)
            self._snapshot = BankSnapshot(tuple(recs), self._snapshot.version + 1)
        return report

    def _replace_closest(self, recs: list, record: RagRecord) -> InsertReport:
        pool_idx = [i for i, r in enumerate(recs) if r.instruction_text == record.instruction_text]
        if not pool_idx:
            # Novel instruction on a full bank: fall back to the whole bank.
            pool_idx = list(range(len(recs)))
        pool = [record] + [recs[i] for i in pool_idx]
        signals = np.stack([r.signal_vector() for r in pool])
        score = pairwise_signal_similarity(signals)
        n = len(pool)
        iu, ju = np.triu_indices(n, k=1)
        dup = np.all(signals[iu] == signals[ju], axis=1)
        involves_new = iu == 0
        # Exact duplicates are the closest possible pair whatever the cosine
        # scores say (zero-norm signals score 0 against themselves). Among
        # duplicates, those of the new record go first so re-inserting a
        # stored record never adds a copy.
        new_dup = dup & involves_new
        order = np.lexsort((-involves_new.astype(int), -score[iu, ju], -new_dup.astype(int), -dup.astype(int)))
        best = order[0]
        pair = (int(iu[best]), int(ju[best]))
        drop = pair[int(self._rng.integers(2))]
        if drop == 0:
            return InsertReport(False, record.record_id, record.record_id)
        victim = pool_idx[drop - 1]
        evicted = recs[victim].record_id
        del recs[victim]
        recs.append(record)
        return InsertReport(True, record.record_id, evicted)

    def extend(self, records: Iterable[RagRecord]) -> list:
        return [self.insert(r) for r in records]

    # -- persistence --

    def save(self, path) -> None:
        text = "".join(_encode(r) + "\n" for r in self._snapshot.records)
        Path(path).write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path, config: BankConfig | None = None, rng=None) -> "MemoryBank":
        config = config or BankConfig()
        text = Path(path).read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines[-1] != "":
            raise BankFormatError("file is truncated (missing final newline)", line=len(lines))
        records = []
        for lineno, line in enumerate(lines[:-1], start=1):
            rec = _decode(line, lineno)
            if rec.instruction_embedding.shape != (config.embedding_dim,):
                raise BankFormatError(
                    f"embedding dimension {rec.instruction_embedding.shape[0]} "
                    f"does not match configured {config.embedding_dim}", line=lineno)
            records.append(rec)
        if len(records) > config.capacity_b:
            raise BankFormatError(f"{len(records)} records exceed capacity {config.capacity_b}")
        ids = [r.record_id for r in records]
        if len(set(ids)) != len(ids):
            raise BankFormatError("duplicate record_id in file")
        bank = cls(config, rng)
        bank._snapshot = BankSnapshot(tuple(records), 1)
        bank._next_id = max(ids) + 1 if ids else 0
        return bank


def _floats(values) -> list:
    return [float(v) for v in values]


def _encode(r: RagRecord) -> str:
    obj = {
        "record_id": r.record_id,
        "instruction_text": r.instruction_text,
        "embedding": _floats(r.instruction_embedding),
        "phase": r.phase.value,
        "twist": _floats(r.twist.as_vector()),
        "wrench": _floats(r.wrench.as_vector()),
        "gravity_compensated": r.wrench.gravity_compensated,
        "k": _floats(r.k_trans),
        "d": _floats(r.d_trans),
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _decode(line: str, lineno: int) -> RagRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise BankFormatError(f"invalid JSON: {exc.msg}", line=lineno) from exc
    try:
        twist = [float(x) for x in obj["twist"]]
        wrench = [float(x) for x in obj["wrench"]]
        if len(twist) != 6 or len(wrench) != 6:
            raise ValueError("twist and wrench need 6 numbers")
        if obj["gravity_compensated"] is not True:
            raise ValueError("stored wrench must be gravity compensated")
        rid = obj["record_id"]
        if not isinstance(rid, int):
            raise ValueError("record_id must be an integer")
        return RagRecord(
            instruction_text=obj["instruction_text"],
            instruction_embedding=np.asarray(obj["embedding"], dtype=float),
            phase=Phase(obj["phase"]),
            twist=Twist(twist[:3], twist[3:], Frame.WORLD),
            wrench=Wrench(wrench[:3], wrench[3:], Frame.WORLD, gravity_compensated=True),
            k_trans=obj["k"],
            d_trans=obj["d"],
            record_id=rid,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BankFormatError(f"bad record: {exc}", line=lineno) from exc
