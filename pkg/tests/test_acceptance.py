"""Acceptance gate: nine criteria, each printed as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

import functools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import make_query, make_record, unit  # noqa: E402
from omnivic.bank import BankConfig, MemoryBank, OutcomeLabel, Phase, RagRecord  # noqa: E402
from omnivic.geometry import Frame, Pose, Twist, Wrench  # noqa: E402
from omnivic.impedance import ImpedanceParams, baseline_params, impedance_wrench  # noqa: E402
from omnivic.paramgen import (  # noqa: E402
    Backend, EndpointConfig, GeneratorOutput, build_prompt, parse_response, remote_generate,
)
from omnivic.errors import ParseError  # noqa: E402
from omnivic.impedance import ImpedanceRange  # noqa: E402
from omnivic.retrieval import QueryContext, RetrievalConfig, brute_force_retrieve, retrieve  # noqa: E402
from omnivic.similarity import cosine_sim  # noqa: E402
from omnivic.sim.collect import collect_bank  # noqa: E402
from omnivic.sim.controllers import FixedGainController, OmniVICController, RagOnlyController  # noqa: E402
from omnivic.sim.dynamics import SimState, step_dynamics  # noqa: E402
from omnivic.sim.envs import EnvKind, EnvSpec, RampGeometry  # noqa: E402
from omnivic.sim.episode import run_episode  # noqa: E402
from omnivic.sim.safety import SafetyConfig, SafetyMonitor  # noqa: E402
from omnivic.sim.suite import evaluate_suite, overall_success  # noqa: E402
from omnivic.sim.tasks import knowledge_base_tasks, load_calibrated_ramp, query_tasks  # noqa: E402

RESULTS = {}
LIMITS = {1: 1, 2: 30, 3: 5, 4: 10, 5: 5, 6: 30, 7: 300, 8: 1, 9: 5}
TITLES = {
    1: "impedance law numerics",
    2: "retrieval oracle equivalence",
    3: "cosine properties",
    4: "bank capacity and diversity",
    5: "safety monitor",
    6: "contact-compliance pattern on the calibrated ramp",
    7: "direction-only success rates",
    8: "prompt goldens and parser",
    9: "integrator sanity",
}


def criterion(n):
    """Time the body, fold the runtime limit into the verdict, record the line."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            detail, err = "", None
            try:
                detail = fn(*args, **kwargs) or ""
            except AssertionError as exc:
                err = exc
            dt = time.perf_counter() - t0
            slow = dt >= LIMITS[n]
            ok = err is None and not slow
            why = detail if err is None else f"assertion failed: {err}"
            if slow:
                why += f" (too slow: limit {LIMITS[n]} s)"
            RESULTS[n] = f"{'PASS' if ok else 'FAIL'} criterion {n} ({TITLES[n]}): {dt:.2f} s. {why}".rstrip()
            if err is not None:
                raise err
            assert not slow, RESULTS[n]

        return run

    return wrap


# 1 -----------------------------------------------------------------------------


@criterion(1)
def test_c1_impedance_law():
    rng = np.random.default_rng(1)
    p = baseline_params()
    worst = 0.0
    for _ in range(100):
        e, v = rng.uniform(-0.5, 0.5, 6), rng.uniform(-1, 1, 6)
        w = impedance_wrench(p, e, v).as_vector()
        # written out per component: translational row uses (150, 24.494), rotational (15, 2.4494)
        expect = [24.494 * v[i] + 150.0 * e[i] for i in range(3)] + \
                 [2.4494 * v[i] + 15.0 * e[i] for i in range(3, 6)]
        worst = max(worst, max(abs(a - b) for a, b in zip(w, expect)))
    assert worst <= 1e-9
    return f"max error {worst:.1e} over 100 pairs"


# 2 -----------------------------------------------------------------------------


def _fast_bank(rng, size=200, n_texts=10, dim=32):
    texts = [f"instruction {i}" for i in range(n_texts)]
    embs = [unit(rng.normal(size=dim)) for _ in texts]
    bank = MemoryBank(BankConfig(size, dim))
    phases = list(Phase)
    for _ in range(size):
        i = int(rng.integers(n_texts))
        sig = np.round(rng.normal(size=12), 2)
        sig[rng.random(4).repeat(3) < 0.1] = 0.0
        bank.insert(RagRecord(texts[i], embs[i], phases[int(rng.integers(4))],
                              Twist(sig[6:9], sig[9:], Frame.WORLD),
                              Wrench(sig[:3], sig[3:6], Frame.WORLD, True),
                              rng.uniform(50, 500, 3), rng.uniform(5, 60, 3)))
    return bank, texts, embs


@criterion(2)
def test_c2_retrieval_oracle():
    rng = np.random.default_rng(2)
    cfg = RetrievalConfig(20.0, 5)
    nonempty = 0
    for _ in range(1000):
        bank, texts, embs = _fast_bank(rng)
        i = int(rng.integers(len(texts)))
        emb = embs[i] if rng.random() < 0.5 else unit(rng.normal(size=len(embs[i])))
        sig = np.round(rng.normal(size=12), 2)
        q = QueryContext(texts[i], emb, list(Phase)[int(rng.integers(4))],
                         Twist(sig[6:9], sig[9:], Frame.WORLD), Wrench(sig[:3], sig[3:6], Frame.WORLD, True))
        fast = [e.record.record_id for e in retrieve(bank, q, cfg)]
        slow = [e.record.record_id for e in brute_force_retrieve(bank, q, cfg)]
        assert fast == slow
        nonempty += bool(fast)
    return f"1000/1000 identical rankings ({nonempty} non-empty)"


# 3 -----------------------------------------------------------------------------


@criterion(3)
def test_c3_cosine_properties():
    rng = np.random.default_rng(3)
    for _ in range(10_000):
        a = rng.normal(size=3) * 10 ** rng.uniform(-3, 3)
        b = rng.normal(size=3) * 10 ** rng.uniform(-3, 3)
        c = 10 ** rng.uniform(-3, 3)
        s = cosine_sim(a, b)
        assert s == cosine_sim(b, a)
        assert abs(s) <= 1.0
        assert abs(cosine_sim(c * a, b) - s) <= 1e-12
        assert cosine_sim(np.zeros(3), b) == 0.0 and cosine_sim(a, np.zeros(3)) == 0.0
    return "10000 cases"


# 4 -----------------------------------------------------------------------------


@criterion(4)
def test_c4_bank_capacity(tmp_path):
    rng = np.random.default_rng(4)
    dim = 16
    texts = [f"t{i}" for i in range(10)]
    embs = [unit(rng.normal(size=dim)) for _ in texts]
    bank = MemoryBank(BankConfig(200, dim), rng=np.random.default_rng(44))
    phases = list(Phase)
    dup_checks = 0
    for n in range(10_000):
        if len(bank) == 200 and n % 50 == 0:
            target = bank.records[int(rng.integers(200))]
            dup = RagRecord(target.instruction_text, target.instruction_embedding, target.phase,
                            target.twist, target.wrench, target.k_trans, target.d_trans)
            before = sum(r.same_content(dup) for r in bank)
            bank.insert(dup)
            assert sum(r.same_content(dup) for r in bank) <= before
            dup_checks += 1
        else:
            i = int(rng.integers(10))
            sig = np.round(rng.normal(size=12), 1)
            bank.insert(RagRecord(texts[i], embs[i], phases[int(rng.integers(4))],
                                  Twist(sig[6:9], sig[9:], Frame.WORLD),
                                  Wrench(sig[:3], sig[3:6], Frame.WORLD, True),
                                  rng.uniform(50, 500, 3), rng.uniform(5, 60, 3)))
        assert len(bank) <= 200
    bank.save(tmp_path / "b.jsonl")
    back = MemoryBank.load(tmp_path / "b.jsonl", BankConfig(200, dim))
    assert [r.record_id for r in back] == [r.record_id for r in bank]
    assert all(a.same_content(b) for a, b in zip(back, bank))
    return f"size {len(bank)}, {dup_checks} duplicate checks, round trip identical"


# 5 -----------------------------------------------------------------------------


def _scan(trace, f_max=30.0, n=3):
    return any(all(x > f_max for x in trace[i:i + n]) for i in range(len(trace) - n + 1))


def _monitor(trace):
    m = SafetyMonitor(SafetyConfig(30.0, 3))
    return any([m.update(x) for x in trace])


@criterion(5)
def test_c5_safety_monitor():
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        trace = list(rng.choice([29.0, 30.0, 31.0], size=int(rng.integers(0, 20))))
        assert _monitor(trace) == _scan(trace)
    assert _monitor([31, 31, 31])
    assert not _monitor([31, 31, 29, 31, 31, 29])
    return "10000 traces agree with the reference scanner"


# 6 -----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def bank():
    b, _ = collect_bank(knowledge_base_tasks(), seed=0)
    return b


@criterion(6)
def test_c6_ramp_pattern(bank):
    task = load_calibrated_ramp()
    omni = run_episode(task, OmniVICController(bank))
    base = run_episode(task, FixedGainController())
    kz_c, kz_f = omni.mean_gain(Phase.CONTACT), omni.mean_gain(Phase.FREE_MOTION)
    base_run = np.convolve(base.force_magnitude > 30.0, np.ones(3), "valid").max()
    assert omni.outcome is OutcomeLabel.SUCCESS
    assert kz_c < kz_f
    assert omni.peak_force < 30.0
    assert base.outcome is OutcomeLabel.FAILURE_FORCE and base_run >= 3
    return (f"OmniVIC Kz contact {kz_c:.1f} < free {kz_f:.1f}, peak {omni.peak_force:.1f} N; "
            f"baseline FailureForce, peak {base.peak_force:.1f} N")


# 7 -----------------------------------------------------------------------------


@criterion(7)
def test_c7_success_direction(bank):
    tasks = [load_calibrated_ramp(), query_tasks()["drawer"]]
    methods = {
        "baseline": FixedGainController,
        "omnivic": lambda: OmniVICController(bank),
        "rag-only": lambda: RagOnlyController(bank),
    }
    cells = evaluate_suite(tasks, methods, 50)
    rate = {m: overall_success(cells, m) for m in methods}
    assert rate["omnivic"] > rate["baseline"]
    assert rate["omnivic"] >= rate["rag-only"]
    return "success " + ", ".join(f"{m} {r:.2f}" for m, r in rate.items())


# 8 -----------------------------------------------------------------------------


@criterion(8)
def test_c8_prompts_and_parser():
    from golden_cases import cases
    golden = Path(__file__).parent / "golden"
    for name, (q, ex, rng) in cases().items():
        assert build_prompt(q, ex, rng).render() == (golden / f"{name}.txt").read_text(encoding="utf-8")
    sim = ImpedanceRange.simulation()
    canon = GeneratorOutput(np.array([400.0, 350, 500]), np.array([40.0, 35, 45]), "", Backend.REMOTE)
    out = parse_response(canon.canonical_text(), sim)
    assert np.array_equal(out.k_trans, canon.k_trans) and np.array_equal(out.d_trans, canon.d_trans)
    with pytest.raises(ParseError):
        parse_response("I cannot comply", sim)
    res = remote_generate(make_query(), [], sim, EndpointConfig(transport=lambda p: {"content": "garbage"}))
    assert res.backend_tag is Backend.HEURISTIC
    return "3 goldens byte-identical, round trip exact, garbage degrades to heuristic"


# 9 -----------------------------------------------------------------------------


@criterion(9)
def test_c9_integrator():
    k, m = 100.0, 2.0
    free = EnvSpec(EnvKind.RAMP, RampGeometry(((-1.0, -5.0), (1.0, -5.0))))
    goal = (Pose((0, 0, 0)), Twist())

    crit = ImpedanceParams((k, k, k), (2 * math.sqrt(k * m),) * 3)
    s = SimState(Pose((0.1, 0, 0)), Twist())
    xs = []
    for _ in range(3000):
        s, _ = step_dynamics(s, crit, goal, free, mass=m)
        xs.append(s.ee_pose.position[0])
    xs = np.array(xs)
    assert np.all(np.diff(xs) <= 0) and xs.min() >= -1e-3 and abs(xs[-1]) < 1e-3
    monotone_steps = len(xs)

    worst = -np.inf
    for d in (2.0, 5.0, 2 * math.sqrt(k * m)):
        params = ImpedanceParams((k, k, k), (d, d, d))
        s = SimState(Pose((0.1, -0.05, 0.02)), Twist((0.0, 0.3, 0.0), (0, 0, 0)))
        energy = []
        for _ in range(3000):
            p, v = s.ee_pose.position, s.ee_twist.linear
            energy.append(0.5 * k * float(p @ p) + 0.5 * m * float(v @ v))
            s, _ = step_dynamics(s, params, goal, free, mass=m)
        worst = max(worst, float(np.max(np.diff(energy))))
    assert worst <= 1e-6
    return f"{monotone_steps} monotone steps, largest per-step energy rise {worst:.1e} J"


def summary_lines():
    return [RESULTS[n] for n in sorted(RESULTS)]


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
