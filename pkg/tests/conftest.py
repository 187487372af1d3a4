import numpy as np
import pytest

from omnivic.bank import MemoryBank, BankConfig, Phase, RagRecord
from omnivic.embedding import HashingEmbedder
from omnivic.geometry import Frame, Twist, Wrench
from omnivic.retrieval import QueryContext

DIM = 16


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def make_record(text="close the drawer", emb=None, phase=Phase.CONTACT, force=(0, 5, 0), torque=(0, 0, 0),
                lin=(0, -0.1, 0), ang=(0, 0, 0), k=(100, 100, 100), d=(20, 20, 20), dim=DIM):
    if emb is None:
        emb = HashingEmbedder(dim).embed(text)
    return RagRecord(text, emb, phase, Twist(lin, ang, Frame.WORLD),
                     Wrench(force, torque, Frame.WORLD, gravity_compensated=True), k, d)


def make_query(text="close the drawer", emb=None, phase=Phase.CONTACT, force=(0, 5, 0), torque=(0, 0, 0),
               lin=(0, -0.1, 0), ang=(0, 0, 0), dim=DIM):
    if emb is None:
        emb = HashingEmbedder(dim).embed(text)
    return QueryContext(text, emb, phase, Twist(lin, ang, Frame.WORLD),
                        Wrench(force, torque, Frame.WORLD, gravity_compensated=True))


def random_bank(rng, n, n_texts=6, dim=DIM, capacity=None, zero_prob=0.1):
    """Random bank; some signal vectors are zeroed and some records share signals."""
    texts = [f"task number {i}" for i in range(n_texts)]
    embs = {t: unit(rng.normal(size=dim)) for t in texts}
    bank = MemoryBank(BankConfig(capacity or max(n, 1), dim), rng=np.random.default_rng(0))

    def vec():
        if rng.random() < zero_prob:
            return np.zeros(3)
        return np.round(rng.normal(size=3), 2)

    for _ in range(n):
        t = texts[int(rng.integers(n_texts))]
        bank.insert(make_record(t, embs[t], Phase(list(Phase)[int(rng.integers(4))].value),
                                vec(), vec(), vec(), vec(),
                                k=rng.uniform(50, 500, 3), d=rng.uniform(5, 60, 3), dim=dim))
    return bank, texts, embs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def kb_bank():
    from omnivic.sim.collect import collect_bank
    from omnivic.sim.tasks import knowledge_base_tasks
    bank, _ = collect_bank(knowledge_base_tasks(), seed=0)
    return bank


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
