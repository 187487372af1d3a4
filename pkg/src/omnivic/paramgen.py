"""Impedance parameter generation from retrieved exemplars.

Two backends share one contract: a remote chat model that receives the
rendered few-shot prompt, and a deterministic rule-based generator that
applies the same phase and motion-direction principles numerically. The
remote backend degrades to the rule-based one instead of failing.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from omnivic.bank import Phase
from omnivic.errors import BackendError, ContractViolation, ParseError
from omnivic.impedance import (
    DEFAULT_EPSILON, DEFAULT_ZETA, ImpedanceParams, ImpedanceRange, damping_from_stiffness,
)
from omnivic.remote import Transport
from omnivic.retrieval import Exemplar, QueryContext

MAX_EXEMPLARS = 5

SYSTEM_PREAMBLE = (
    "You are an expert robotic impedance controller capable of analyzing visual "
    "scenes and physical interaction states."
)

_PRINCIPLES = """\
Apply phase-based impedance principles:
- Highest for free motion (precise control)
- Lowest for contact (maximum compliance)

Consider motion direction adaptation:
- Increase stiffness in the primary motion direction when overcoming resistance.
- Decrease stiffness in the primary motion direction when maintaining accuracy."""

_OUTPUT_SPEC = "Output: K = [K_x, K_y, K_z], D = [D_x, D_y, D_z]"
_NO_EXAMPLES = "No similar successful examples are available."


class Backend(enum.Enum):
    REMOTE = "Remote"
    HEURISTIC = "Heuristic"


def fmt(x: float) -> str:
    """Four significant digits, no negative zero."""
    return f"{float(x) + 0.0:.4g}"


def fmt_vec(values) -> str:
    return "[" + ", ".join(fmt(v) for v in values) + "]"


def fmt_range(r: ImpedanceRange) -> str:
    return f"K in [{fmt(r.k_min)}, {fmt(r.k_max)}] N/m, D in [{fmt(r.d_min)}, {fmt(r.d_max)}] N s/m"


def format_exemplar(rank: int, ex: Exemplar) -> str:
    r = ex.record
    return "\n".join([
        f"Reference similar successful example {rank} with similarity score {fmt(ex.aggregate)}:",
        f"- Task: {r.instruction_text}",
        f"- Phase: {r.phase.value}",
        f"- Twist: {fmt_vec(r.twist.as_vector())}",
        f"- Wrench: {fmt_vec(r.wrench.as_vector())}",
        f"- Parameters: K = {fmt_vec(r.k_trans)}, D = {fmt_vec(r.d_trans)}",
    ])


@dataclass(frozen=True)
class PromptBundle:
    system_preamble: str
    instruction: str
    phase: Phase
    twist: tuple
    wrench: tuple
    impedance_range: ImpedanceRange
    exemplars: tuple = ()

    def user_text(self) -> str:
        parts = [
            "\n".join([
                f"Given the instruction: {self.instruction}",
                f"current phase: {self.phase.value}",
                f"twist [vx, vy, vz, wx, wy, wz]: {fmt_vec(self.twist)}",
                f"wrench [Fx, Fy, Fz, Tx, Ty, Tz]: {fmt_vec(self.wrench)}",
                f"impedance range: {fmt_range(self.impedance_range)}",
                "determine optimal impedance parameters.",
            ]),
            _PRINCIPLES,
        ]
        parts.extend(self.exemplars if self.exemplars else [_NO_EXAMPLES])
        parts.append(_OUTPUT_SPEC)
        return "\n\n".join(parts) + "\n"

    def render(self) -> str:
        return self.system_preamble + "\n\n" + self.user_text()

    def messages(self) -> list:
        return [
            {"role": "system", "content": self.system_preamble},
            {"role": "user", "content": self.user_text()},
        ]


def build_prompt(query: QueryContext, exemplars, impedance_range: ImpedanceRange) -> PromptBundle:
    exemplars = list(exemplars)
    if len(exemplars) > MAX_EXEMPLARS:
        raise ContractViolation(f"at most {MAX_EXEMPLARS} exemplars fit the prompt, got {len(exemplars)}")
    return PromptBundle(
        system_preamble=SYSTEM_PREAMBLE,
        instruction=query.instruction_text,
        phase=query.phase,
        twist=tuple(float(v) for v in query.twist.as_vector()),
        wrench=tuple(float(v) for v in query.wrench.as_vector()),
        impedance_range=impedance_range,
        exemplars=tuple(format_exemplar(i, ex) for i, ex in enumerate(exemplars, start=1)),
    )


@dataclass(frozen=True)
class GeneratorOutput:
    k_trans: np.ndarray
    d_trans: np.ndarray
    raw_response: str
    backend_tag: Backend

    def to_params(self, epsilon: float = DEFAULT_EPSILON, zeta: float = DEFAULT_ZETA) -> ImpedanceParams:
        return ImpedanceParams(self.k_trans, self.d_trans, epsilon, zeta)

    def canonical_text(self) -> str:
        return f"K = {fmt_vec(self.k_trans)}\nD = {fmt_vec(self.d_trans)}"


_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_TRIPLE = r"\[\s*({n})\s*,\s*({n})\s*,\s*({n})\s*\]".format(n=_NUM)
_K_RE = re.compile(r"\bK\s*=\s*" + _TRIPLE)
_D_RE = re.compile(r"\bD\s*=\s*" + _TRIPLE)


def parse_response(text: str, impedance_range: ImpedanceRange) -> GeneratorOutput:
    """Extract the first ``K = [..]`` and ``D = [..]`` triples and clamp them."""
    km = _K_RE.search(text)
    dm = _D_RE.search(text)
    if km is None or dm is None:
        raise ParseError("response has no K = [a, b, c] / D = [a, b, c] pattern", text)
    k = np.array([float(g) for g in km.groups()])
    d = np.array([float(g) for g in dm.groups()])
    if not (np.all(np.isfinite(k)) and np.all(np.isfinite(d))):
        raise ParseError("non-finite gains in response", text)
    return GeneratorOutput(
        np.clip(k, impedance_range.k_min, impedance_range.k_max),
        np.clip(d, impedance_range.d_min, impedance_range.d_max),
        text,
        Backend.REMOTE,
    )


# -- rule-based backend ----------------------------------------------------------


@dataclass(frozen=True)
class HeuristicConfig:
    approach_frac: float = 0.6
    retreat_frac: float = 0.4
    boost: float = 1.25
    relax: float = 0.85
    resistance_threshold: float = 2.0
    blend: float = 0.5


def phase_stiffness(phase: Phase, r: ImpedanceRange, cfg: HeuristicConfig = HeuristicConfig()) -> float:
    span = r.k_max - r.k_min
    return {
        Phase.FREE_MOTION: r.k_max,
        Phase.APPROACHING: r.k_min + cfg.approach_frac * span,
        Phase.RETREAT: r.k_min + cfg.retreat_frac * span,
        Phase.CONTACT: r.k_min,
    }[phase]


def heuristic_generate(query: QueryContext, exemplars, impedance_range: ImpedanceRange,
                       cfg: HeuristicConfig = HeuristicConfig()) -> GeneratorOutput:
    r = impedance_range
    k = np.full(3, phase_stiffness(query.phase, r, cfg))
    v = query.twist.linear
    f = query.wrench.force
    a = int(np.argmax(np.abs(v)))  # first axis wins ties
    resisting = f[a] * v[a] < 0 and abs(f[a]) > cfg.resistance_threshold
    k[a] *= cfg.boost if resisting else cfg.relax
    k = np.clip(k, r.k_min, r.k_max)

    exemplars = list(exemplars)
    if exemplars:
        w = np.array([max(ex.aggregate, 0.0) for ex in exemplars])
        if w.sum() <= 0:
            w = np.ones(len(exemplars))
        ex_k = np.stack([ex.record.k_trans for ex in exemplars])
        k = (1 - cfg.blend) * k + cfg.blend * (w @ ex_k) / w.sum()
        k = np.clip(k, r.k_min, r.k_max)

    d = np.clip([damping_from_stiffness(x) for x in k], r.d_min, r.d_max)
    text = f"K = {fmt_vec(k)}\nD = {fmt_vec(d)}"
    return GeneratorOutput(k, d, text, Backend.HEURISTIC)


class HeuristicGenerator:
    def __init__(self, cfg: HeuristicConfig = HeuristicConfig()):
        self.cfg = cfg
        self.fallbacks = 0

    def generate(self, query: QueryContext, exemplars, impedance_range: ImpedanceRange) -> GeneratorOutput:
        return heuristic_generate(query, exemplars, impedance_range, self.cfg)


# -- remote backend ----------------------------------------------------------------


@dataclass
class EndpointConfig:
    """How to reach a chat-completion endpoint.

    ``transport`` overrides the HTTP client (used by tests); otherwise an
    :class:`~omnivic.remote.HttpTransport` is built from ``url``.
    """

    url: str = ""
    model: str = "gpt-4o-mini"
    api_key_env: str | None = "OMNIVIC_API_KEY"
    retries: int = 2
    timeout: float = 30.0
    image_b64: str | None = None
    transport: Transport | None = field(default=None, repr=False)

    def make_transport(self) -> Transport:
        if self.transport is not None:
            return self.transport
        from omnivic.remote import HttpTransport
        return HttpTransport(self.url, self.api_key_env, self.timeout)


def chat_request(bundle: PromptBundle, model: str, image_b64: str | None = None) -> dict:
    payload = {"model": model, "messages": bundle.messages(), "temperature": 0}
    if image_b64 is not None:
        payload["image"] = image_b64
    return payload


def reply_text(reply: dict) -> str:
    if isinstance(reply.get("content"), str):
        return reply["content"]
    try:
        return reply["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"response carries no assistant text: {reply!r}") from exc


def remote_generate(query: QueryContext, exemplars, impedance_range: ImpedanceRange,
                    endpoint: EndpointConfig,
                    heuristic: HeuristicConfig = HeuristicConfig()) -> GeneratorOutput:
    """Query the remote model; fall back to the rule-based backend on failure.

    Transport errors are retried ``endpoint.retries`` times. An unparseable
    reply falls back immediately, since temperature 0 would repeat it.
    """
    exemplars = list(exemplars)
    bundle = build_prompt(query, exemplars, impedance_range)
    payload = chat_request(bundle, endpoint.model, endpoint.image_b64)
    transport = endpoint.make_transport()
    text = None
    for _ in range(endpoint.retries + 1):
        try:
            text = reply_text(transport(payload))
            break
        except BackendError:
            continue
        except (TimeoutError, OSError):
            continue
    if text is not None:
        try:
            return parse_response(text, impedance_range)
        except ParseError:
            pass
    fallback = heuristic_generate(query, exemplars, impedance_range, heuristic)
    return GeneratorOutput(fallback.k_trans, fallback.d_trans, text or "", Backend.HEURISTIC)


class RemoteGenerator:
    def __init__(self, endpoint: EndpointConfig, heuristic: HeuristicConfig = HeuristicConfig()):
        self.endpoint = endpoint
        self.heuristic = heuristic
        self.fallbacks = 0

    def generate(self, query: QueryContext, exemplars, impedance_range: ImpedanceRange) -> GeneratorOutput:
        out = remote_generate(query, exemplars, impedance_range, self.endpoint, self.heuristic)
        if out.backend_tag is Backend.HEURISTIC:
            self.fallbacks += 1
        return out
