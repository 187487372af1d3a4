"""Gain schedulers driving the impedance law inside an episode."""

from __future__ import annotations

from omnivic.bank import MemoryBank, Phase
from omnivic.embedding import EmbeddingProvider, HashingEmbedder
from omnivic.geometry import Twist, Wrench
from omnivic.impedance import (
    DEFAULT_EPSILON, DEFAULT_ZETA, ImpedanceParams, ImpedanceRange, baseline_params, clamp_params,
)
from omnivic.paramgen import HeuristicGenerator
from omnivic.retrieval import QueryContext, RetrievalConfig, retrieve


class FixedGainController:
    """Constant gains every step; the baseline is ``FixedGainController()``."""

    def __init__(self, params: ImpedanceParams | None = None, name: str = "baseline"):
        self.params = params or baseline_params()
        self.name = name
        self.fallbacks = 0

    def start(self, instruction: str) -> None:
        pass

    def command(self, step: int, phase: Phase, twist: Twist, wrench: Wrench) -> ImpedanceParams:
        return self.params


class _RetrievingController:
    def __init__(self, bank: MemoryBank, embedder: EmbeddingProvider | None = None,
                 retrieval: RetrievalConfig = RetrievalConfig(),
                 impedance_range: ImpedanceRange | None = None, period: int = 10,
                 epsilon: float = DEFAULT_EPSILON, zeta: float = DEFAULT_ZETA):
        if period < 1:
            raise ValueError("generator period must be >= 1")
        self.bank = bank
        self.embedder = embedder or HashingEmbedder(bank.config.embedding_dim)
        self.retrieval = retrieval
        self.range = impedance_range or ImpedanceRange.simulation()
        self.period = period
        self.epsilon = epsilon
        self.zeta = zeta
        self.fallbacks = 0
        self._instruction = None
        self._embedding = None
        self._current: ImpedanceParams | None = None

    def start(self, instruction: str) -> None:
        if instruction != self._instruction:
            self._instruction = instruction
            self._embedding = self.embedder.embed(instruction)
        self._current = None

    def _query(self, phase: Phase, twist: Twist, wrench: Wrench) -> QueryContext:
        return QueryContext(self._instruction, self._embedding, phase, twist, wrench)

    def command(self, step: int, phase: Phase, twist: Twist, wrench: Wrench) -> ImpedanceParams:
        if self._current is None or step % self.period == 0:
            self._current = self._update(self._query(phase, twist, wrench))
        return self._current


class OmniVICController(_RetrievingController):
    """Retrieve exemplars, then let the generator backend propose clamped gains."""

    name = "omnivic"

    def __init__(self, bank: MemoryBank, generator=None, **kwargs):
        super().__init__(bank, **kwargs)
        self.generator = generator or HeuristicGenerator()

    def _update(self, query: QueryContext) -> ImpedanceParams:
        exemplars = retrieve(self.bank, query, self.retrieval)
        before = getattr(self.generator, "fallbacks", 0)
        out = self.generator.generate(query, exemplars, self.range)
        self.fallbacks += getattr(self.generator, "fallbacks", 0) - before
        return clamp_params(out.to_params(self.epsilon, self.zeta), self.range)


class RagOnlyController(_RetrievingController):
    """Apply the top-ranked exemplar's gains directly, without a generator.

    With nothing retrieved the previous gains are held; before the first hit
    the baseline gains are used.
    """

    name = "rag-only"

    def _update(self, query: QueryContext) -> ImpedanceParams:
        exemplars = retrieve(self.bank, query, self.retrieval)
        if not exemplars:
            prev = self._current or baseline_params(self.epsilon, self.zeta)
            return clamp_params(prev, self.range)
        top = exemplars[0].record
        return clamp_params(ImpedanceParams(top.k_trans, top.d_trans, self.epsilon, self.zeta), self.range)
