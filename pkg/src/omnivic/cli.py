"""Command-line entry point: collect, retrieve, run, bank-stats.

Exit status: 0 ok, 2 config error, 3 I/O error, 4 finished on a degraded
backend, 5 no data collected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from omnivic.bank import BankConfig, BankFormatError, MemoryBank, Phase
from omnivic.embedding import HashingEmbedder
from omnivic.errors import ContractViolation
from omnivic.geometry import Frame, Twist, Wrench
from omnivic.impedance import ImpedanceRange
from omnivic.paramgen import EndpointConfig, HeuristicGenerator, RemoteGenerator
from omnivic.retrieval import QueryContext, RetrievalConfig, retrieve
from omnivic.sim.collect import DEFAULT_QUOTA, collect_bank
from omnivic.sim.controllers import FixedGainController, OmniVICController, RagOnlyController
from omnivic.sim.episode import Task
from omnivic.sim.safety import SafetyConfig
from omnivic.sim.suite import episode_seeds, evaluate_suite, format_table
from omnivic.sim.tasks import knowledge_base_tasks, query_tasks
from omnivic.sim.trace import write_trace

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DEGRADED = 4
EXIT_NO_DATA = 5

METHODS = ("baseline", "omnivic", "rag-only")


class ConfigError(Exception):
    pass


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def resolve_tasks(spec) -> list:
    """Task names (``"kb"`` expands to the knowledge-base set) or inline task objects."""
    catalog = None
    out = []
    for item in spec:
        if isinstance(item, dict):
            out.append(Task.from_dict(item))
        elif item == "kb":
            out.extend(knowledge_base_tasks())
        else:
            catalog = catalog or {**query_tasks(), **{t.name: t for t in knowledge_base_tasks()}}
            if item not in catalog:
                raise ConfigError(f"unknown task {item!r}; known: {sorted(catalog)}")
            out.append(catalog[item])
    if not out:
        raise ConfigError("no tasks configured")
    return out


class Settings:
    """Config file values with command-line overrides applied."""

    def __init__(self, cfg: dict, args):
        def pick(flag, key, default):
            val = getattr(args, flag, None)
            return val if val is not None else cfg.get(key, default)

        self.seed = int(pick("seed", "seed", 0))
        self.episodes = int(pick("episodes", "episodes", 1))
        self.out = Path(pick("out", "out", "out"))
        self.bank_path = pick("bank", "bank", None)
        self.backend = pick("backend", "backend", "heuristic")
        self.methods = list(args.method or cfg.get("methods", ["baseline", "omnivic"]))
        self.tasks = cfg.get("tasks", ["ramp", "drawer"])
        self.period = int(cfg.get("generator_period", 10))
        self.endpoint = dict(cfg.get("endpoint", {}))
        self.traces = bool(cfg.get("traces", True))
        collect = dict(cfg.get("collect", {}))
        self.collect_tasks = collect.get("tasks", ["kb"])
        self.quota = int(collect.get("quota", DEFAULT_QUOTA))
        self.collect_episodes = int(pick("episodes", "collect_episodes", collect.get("episodes", 1)))
        try:
            bank = dict(cfg.get("bank_config", {}))
            self.bank_config = BankConfig(int(bank.get("capacity_b", 200)), int(bank.get("embedding_dim", 256)))
            r = dict(cfg.get("retrieval", {}))
            self.retrieval = RetrievalConfig(float(r.get("m_percent", 20.0)), int(r.get("top_n", 5)))
            s = dict(cfg.get("safety", {}))
            self.safety = SafetyConfig(float(s.get("f_max", 30.0)), int(s.get("consecutive", 3)))
            ir = cfg.get("impedance_range", "simulation")
            if ir == "simulation":
                self.range = ImpedanceRange.simulation()
            elif ir == "real_world":
                self.range = ImpedanceRange.real_world()
            else:
                self.range = ImpedanceRange(**ir)
        except (ContractViolation, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.backend not in ("heuristic", "remote"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        if self.episodes < 1 or self.period < 1:
            raise ConfigError("episodes and generator_period must be >= 1")
        if self.backend == "remote" and not self.endpoint.get("url"):
            raise ConfigError("remote backend needs endpoint.url in the config")

    def generator(self):
        if self.backend == "remote":
            ep = self.endpoint
            return RemoteGenerator(EndpointConfig(
                url=ep["url"], model=ep.get("model", "gpt-4o-mini"),
                api_key_env=ep.get("api_key_env", "OMNIVIC_API_KEY"),
                retries=int(ep.get("retries", 2)), timeout=float(ep.get("timeout", 30.0)),
            ))
        return HeuristicGenerator()

    def controller_factory(self, method: str, bank: MemoryBank | None, embedder):
        kw = dict(embedder=embedder, retrieval=self.retrieval, impedance_range=self.range, period=self.period)
        if method == "baseline":
            return FixedGainController
        if bank is None:
            raise ConfigError(f"method {method!r} needs --bank")
        if method == "omnivic":
            return lambda: OmniVICController(bank, generator=self.generator(), **kw)
        return lambda: RagOnlyController(bank, **kw)


def open_bank(path, config: BankConfig, seed: int = 0) -> MemoryBank:
    return MemoryBank.load(path, config, rng=np.random.default_rng(seed))


# -- commands ------------------------------------------------------------------


def cmd_collect(args, out=sys.stdout) -> int:
    st = Settings(load_config(args.config), args)
    if st.bank_path is None:
        raise ConfigError("collect needs --bank (output path)")
    tasks = resolve_tasks(st.collect_tasks)
    embedder = HashingEmbedder(st.bank_config.embedding_dim)
    gen = st.generator
    kw = dict(embedder=embedder, retrieval=st.retrieval, impedance_range=st.range, period=st.period)
    controllers = []

    def factory(bank):
        c = OmniVICController(bank, generator=gen(), **kw)
        controllers.append(c)
        return c

    bank, report = collect_bank(tasks, quota=st.quota, episodes=st.collect_episodes, seed=st.seed,
                                bank_config=st.bank_config, embedder=embedder, controller_factory=factory)
    bank.save(st.bank_path)
    for line in report.lines():
        print(line, file=out)
    if len(bank) == 0:
        print("warning: no successful episodes, bank is empty", file=out)
        return EXIT_NO_DATA
    if sum(c.fallbacks for c in controllers):
        print("warning: remote backend degraded to heuristic during collection", file=out)
        return EXIT_DEGRADED
    return EXIT_OK


def _vec3(values, name):
    if values is None:
        return np.zeros(3)
    if len(values) != 3:
        raise ConfigError(f"{name} needs 3 numbers")
    return np.array(values, dtype=float)


def cmd_retrieve(args, out=sys.stdout) -> int:
    st = Settings(load_config(args.config), args)
    if st.bank_path is None:
        raise ConfigError("retrieve needs --bank")
    bank = open_bank(st.bank_path, st.bank_config, st.seed)
    try:
        phase = Phase(args.phase)
    except ValueError as exc:
        raise ConfigError(f"unknown phase {args.phase!r}; one of {[p.value for p in Phase]}") from exc
    embedder = HashingEmbedder(st.bank_config.embedding_dim)
    try:
        emb = embedder.embed(args.instruction)
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from exc
    query = QueryContext(
        args.instruction, emb, phase,
        Twist(_vec3(args.linvel, "--linvel"), _vec3(args.angvel, "--angvel"), Frame.WORLD),
        Wrench(_vec3(args.force, "--force"), _vec3(args.torque, "--torque"), Frame.WORLD,
               gravity_compensated=True),
    )
    cfg = RetrievalConfig(st.retrieval.m_percent, args.top_n or st.retrieval.top_n)
    print("rank\trecord_id\tforce\ttorque\tlinvel\tangvel\taggregate\tK\tinstruction", file=out)
    for i, ex in enumerate(retrieve(bank, query, cfg), 1):
        k = ",".join(f"{x:.6g}" for x in ex.record.k_trans)
        print(f"{i}\t{ex.record.record_id}\t{ex.force_sim:.6f}\t{ex.torque_sim:.6f}\t{ex.linvel_sim:.6f}\t"
              f"{ex.angvel_sim:.6f}\t{ex.aggregate:.6f}\t{k}\t{ex.record.instruction_text}", file=out)
    return EXIT_OK


def cmd_run(args, out=sys.stdout) -> int:
    st = Settings(load_config(args.config), args)
    tasks = resolve_tasks(st.tasks)
    bank = None
    if any(m != "baseline" for m in st.methods):
        if st.bank_path is None:
            raise ConfigError("omnivic and rag-only need --bank")
        bank = open_bank(st.bank_path, st.bank_config, st.seed)
    embedder = HashingEmbedder(st.bank_config.embedding_dim)
    methods = {m: st.controller_factory(m, bank, embedder) for m in st.methods}

    trace_dir = st.out / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)

    def keep(res):
        if st.traces:
            write_trace(res, trace_dir / f"{res.task}_{res.method}_seed{res.seed}.csv")

    cells = evaluate_suite(tasks, methods, st.episodes, episode_seeds(st.episodes, st.seed),
                           safety=st.safety, on_episode=keep)
    table = format_table(cells)
    (st.out / "metrics.tsv").write_text(table, encoding="utf-8")
    out.write(table)
    if any(c.fallbacks for c in cells):
        print("warning: remote backend unreachable or unparsable; heuristic fallback was used", file=out)
        return EXIT_DEGRADED
    return EXIT_OK


def cmd_bank_stats(args, out=sys.stdout) -> int:
    st = Settings(load_config(args.config), args)
    if st.bank_path is None:
        raise ConfigError("bank-stats needs --bank")
    s = open_bank(st.bank_path, st.bank_config).stats()
    print(f"records {s.size}", file=out)
    print(f"distinct instructions {s.distinct_instructions}", file=out)
    for p in Phase:
        print(f"phase {p.value} {s.per_phase[p]}", file=out)
    for (text, p), n in sorted(s.per_pair.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        print(f"pair {n}\t{p.value}\t{text}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--bank", help="bank file (JSONL)")
    common.add_argument("--seed", type=int)
    common.add_argument("--episodes", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--backend", choices=("heuristic", "remote"))
    common.add_argument("--method", action="append", choices=METHODS,
                        help="repeat to compare several methods")

    ap = argparse.ArgumentParser(prog="omnivic", description="Retrieval-augmented variable impedance control")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("collect", parents=[common], help="build a bank from knowledge-base episodes")
    r = sub.add_parser("retrieve", parents=[common], help="print the exemplars for one query")
    r.add_argument("--instruction", required=True)
    r.add_argument("--phase", required=True, help="Free_motion, Approaching, Contact or Retreat")
    for name in ("force", "torque", "linvel", "angvel"):
        r.add_argument(f"--{name}", type=float, nargs=3)
    r.add_argument("--top-n", type=int)
    sub.add_parser("run", parents=[common], help="evaluate methods on tasks and write traces")
    sub.add_parser("bank-stats", parents=[common], help="summarize a bank file")
    return ap


COMMANDS = {"collect": cmd_collect, "retrieve": cmd_retrieve, "run": cmd_run, "bank-stats": cmd_bank_stats}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractViolation as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BankFormatError as exc:
        print(f"bank error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
