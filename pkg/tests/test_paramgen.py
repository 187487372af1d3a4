import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_query, make_record
from golden_cases import cases
from omnivic.bank import Phase
from omnivic.errors import BackendError, ContractViolation, ParseError
from omnivic.impedance import ImpedanceRange, damping_from_stiffness
from omnivic.paramgen import (
    Backend, EndpointConfig, GeneratorOutput, HeuristicGenerator, RemoteGenerator, build_prompt,
    chat_request, fmt, heuristic_generate, parse_response, phase_stiffness, remote_generate,
)
from omnivic.remote import HttpTransport
from omnivic.retrieval import Exemplar

GOLDEN = Path(__file__).parent / "golden"
SIM = ImpedanceRange.simulation()
REAL = ImpedanceRange.real_world()


@pytest.mark.parametrize("name", sorted(cases()))
def test_golden_prompts(name):
    query, exemplars, rng = cases()[name]
    expected = (GOLDEN / f"{name}.txt").read_text(encoding="utf-8")
    assert build_prompt(query, exemplars, rng).render() == expected


def test_prompt_without_examples():
    text = build_prompt(make_query(), [], SIM).render()
    assert "Lowest for contact" in text and "Reference similar" not in text
    assert text.rstrip().endswith("D = [D_x, D_y, D_z]")


def test_prompt_caps_exemplars():
    ex = Exemplar(make_record(), 1, 1, 1, 1, 4)
    build_prompt(make_query(), [ex] * 5, SIM)
    with pytest.raises(ContractViolation):
        build_prompt(make_query(), [ex] * 7, SIM)


def test_prompt_messages_and_payload():
    bundle = build_prompt(make_query(), [], SIM)
    msgs = bundle.messages()
    assert [m["role"] for m in msgs] == ["system", "user"]
    assert bundle.render() == msgs[0]["content"] + "\n\n" + msgs[1]["content"]
    payload = chat_request(bundle, "m", image_b64="aGk=")
    assert payload["temperature"] == 0 and payload["model"] == "m" and payload["image"] == "aGk="
    assert "image" not in chat_request(bundle, "m")


def test_number_format():
    assert fmt(-0.0) == "0"
    assert fmt(24.494) == "24.49"
    assert fmt(0.000123456) == "0.0001235"
    assert fmt(123456) == "1.235e+05"


def test_parse_examples():
    out = parse_response("K = [400, 350, 500]\nD = [40, 35, 45]", SIM)
    assert np.array_equal(out.k_trans, [400, 350, 500]) and np.array_equal(out.d_trans, [40, 35, 45])
    out = parse_response("K = [400, 350, 500]\nD = [40, 35, 44]", REAL)
    assert np.array_equal(out.k_trans, [400, 350, 500])
    assert np.array_equal(out.d_trans, [40, 35, 44])
    assert out.backend_tag is Backend.REMOTE
    out = parse_response("K=[2000,400,400] D=[40,40,40]", REAL)
    assert np.array_equal(out.k_trans, [1000, 400, 400])
    out = parse_response("Sure. K = [ 1.5e2 , 2e2, .5e3 ], and D = [10,10.5,20.]", SIM)
    assert np.array_equal(out.k_trans, [150, 200, 500])
    with pytest.raises(ParseError) as exc:
        parse_response("I cannot comply", SIM)
    assert exc.value.raw == "I cannot comply"
    with pytest.raises(ParseError):
        parse_response("K = [1, 2] D = [1, 2, 3]", SIM)


@given(st.lists(st.floats(0, 2000), min_size=3, max_size=3), st.lists(st.floats(0, 100), min_size=3, max_size=3))
def test_parse_inverts_canonical_text(k, d):
    clamped_k = np.clip(k, SIM.k_min, SIM.k_max)
    clamped_d = np.clip(d, SIM.d_min, SIM.d_max)
    text = GeneratorOutput(clamped_k, clamped_d, "", Backend.HEURISTIC).canonical_text()
    out = parse_response(text, SIM)
    # canonical text keeps 4 significant digits
    assert np.allclose(out.k_trans, clamped_k, rtol=5e-4)
    assert np.allclose(out.d_trans, clamped_d, rtol=5e-4)
    again = parse_response(out.canonical_text(), SIM)
    assert np.array_equal(again.k_trans, out.k_trans)


def test_heuristic_examples():
    rest = make_query(phase=Phase.CONTACT, force=(0, 0, 0), lin=(0, 0, 0))
    out = heuristic_generate(rest, [], SIM)
    assert np.array_equal(out.k_trans, [50, 50, 50])
    assert np.allclose(out.d_trans, np.clip(damping_from_stiffness(50), 5, 60))
    assert out.backend_tag is Backend.HEURISTIC

    free = make_query(phase=Phase.FREE_MOTION, force=(0, 0, 0), lin=(0, -0.1, 0))
    assert np.allclose(heuristic_generate(free, [], SIM).k_trans, [500, 425, 500])

    push = make_query(phase=Phase.CONTACT, force=(0, 5, 0), lin=(0, -0.1, 0))
    assert np.allclose(heuristic_generate(push, [], SIM).k_trans, [50, 62.5, 50])

    rule = heuristic_generate(free, [], SIM)
    ex = Exemplar(make_record(k=rule.k_trans, d=rule.d_trans), 1, 1, 1, 1, 4.0)
    assert np.allclose(heuristic_generate(free, [ex], SIM).k_trans, rule.k_trans)


def test_heuristic_blending_weights():
    q = make_query(phase=Phase.CONTACT, force=(0, 0, 0), lin=(0, 0, 0))
    hi = Exemplar(make_record(k=(450, 450, 450)), 1, 1, 0, 0, 2.0)
    lo = Exemplar(make_record(k=(50, 50, 50)), 0, 0, 0, 0, -1.0)
    # negative aggregate gets zero weight
    assert np.allclose(heuristic_generate(q, [hi, lo], SIM).k_trans, 0.5 * 50 + 0.5 * 450)
    zero_w = [Exemplar(make_record(k=(450, 450, 450)), 0, 0, 0, 0, 0.0),
              Exemplar(make_record(k=(250, 250, 250)), 0, 0, 0, 0, 0.0)]
    assert np.allclose(heuristic_generate(q, zero_w, SIM).k_trans, 0.5 * 50 + 0.5 * 350)


def test_phase_schedule():
    assert phase_stiffness(Phase.FREE_MOTION, SIM) == 500
    assert phase_stiffness(Phase.APPROACHING, SIM) == pytest.approx(320)
    assert phase_stiffness(Phase.RETREAT, SIM) == pytest.approx(230)
    assert phase_stiffness(Phase.CONTACT, SIM) == 50


vec = st.lists(st.floats(-50, 50), min_size=3, max_size=3)


@settings(max_examples=200)
@given(vec, vec, st.sampled_from(list(Phase)), st.lists(st.floats(-4, 4), max_size=5),
       st.sampled_from([SIM, REAL]))
def test_heuristic_in_range_and_pure(force, lin, phase, aggs, rng):
    exemplars = [Exemplar(make_record(k=(60 + 100 * i, 900, 300), d=(6, 30, 50)), 0, 0, 0, 0, a)
                 for i, a in enumerate(aggs)]
    q = make_query(phase=phase, force=force, lin=lin)
    a = heuristic_generate(q, exemplars, rng)
    b = heuristic_generate(q, exemplars, rng)
    assert np.array_equal(a.k_trans, b.k_trans) and a.raw_response == b.raw_response
    assert np.all((a.k_trans >= rng.k_min) & (a.k_trans <= rng.k_max))
    assert np.all((a.d_trans >= rng.d_min) & (a.d_trans <= rng.d_max))


@given(vec, vec)
def test_heuristic_monotone_over_phase_order(force, lin):
    order = [Phase.FREE_MOTION, Phase.APPROACHING, Phase.RETREAT, Phase.CONTACT]
    ks = [heuristic_generate(make_query(phase=p, force=force, lin=lin), [], SIM).k_trans for p in order]
    for hi, lo in zip(ks, ks[1:]):
        assert np.all(hi >= lo)


# -- remote backend --------------------------------------------------------------


class Scripted:
    """Transport that replays a list of replies; exceptions are raised."""

    def __init__(self, *script):
        self.script = list(script)
        self.calls = []

    def __call__(self, payload):
        self.calls.append(payload)
        item = self.script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def reply(text):
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def endpoint(transport, **kw):
    return EndpointConfig(transport=transport, **kw)


def test_remote_happy_path():
    t = Scripted(reply("K = [400, 350, 450]\nD = [40, 35, 45]"))
    out = remote_generate(make_query(), [], SIM, endpoint(t, model="m1"))
    assert out.backend_tag is Backend.REMOTE
    assert np.array_equal(out.k_trans, [400, 350, 450]) and np.array_equal(out.d_trans, [40, 35, 45])
    sent = t.calls[0]
    assert sent["model"] == "m1" and sent["temperature"] == 0
    assert sent["messages"][1]["content"] == build_prompt(make_query(), [], SIM).user_text()


def test_remote_garbage_falls_back():
    t = Scripted({"content": "no idea"})
    q = make_query(phase=Phase.FREE_MOTION)
    out = remote_generate(q, [], SIM, endpoint(t))
    assert out.backend_tag is Backend.HEURISTIC
    assert np.array_equal(out.k_trans, heuristic_generate(q, [], SIM).k_trans)
    assert len(t.calls) == 1


def test_remote_retries_then_succeeds():
    t = Scripted(BackendError("timeout"), TimeoutError("slow"), reply("K = [100, 100, 100] D = [20, 20, 20]"))
    out = remote_generate(make_query(), [], SIM, endpoint(t, retries=2))
    assert out.backend_tag is Backend.REMOTE and len(t.calls) == 3


def test_remote_gives_up_after_retries():
    t = Scripted(*[BackendError("down")] * 3)
    gen = RemoteGenerator(endpoint(t, retries=2))
    out = gen.generate(make_query(), [], SIM)
    assert out.backend_tag is Backend.HEURISTIC and gen.fallbacks == 1 and len(t.calls) == 3


def test_remote_malformed_reply_is_retried():
    t = Scripted({"unexpected": True}, reply("K = [60, 60, 60] D = [9, 9, 9]"))
    out = remote_generate(make_query(), [], SIM, endpoint(t))
    assert out.backend_tag is Backend.REMOTE


def test_heuristic_generator_object():
    gen = HeuristicGenerator()
    assert gen.generate(make_query(), [], SIM).backend_tag is Backend.HEURISTIC and gen.fallbacks == 0


class _Handler(BaseHTTPRequestHandler):
    replies = []
    seen = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((body, self.headers.get("Authorization")))
        status, payload = type(self).replies.pop(0)
        data = json.dumps(payload).encode() if not isinstance(payload, bytes) else payload
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    _Handler.replies, _Handler.seen = [], []
    httpd = HTTPServer(("127.0.0.1", 0), _Handler)
    th = threading.Thread(target=httpd.serve_forever, daemon=True)
    th.start()
    yield f"http://127.0.0.1:{httpd.server_port}/v1/chat", _Handler
    httpd.shutdown()
    httpd.server_close()


def test_http_transport_round_trip(server, monkeypatch):
    url, handler = server
    monkeypatch.setenv("TEST_KEY", "abc")
    handler.replies = [(200, reply("K = [300, 310, 320]\nD = [30, 31, 32]"))]
    out = remote_generate(make_query(), [], SIM, EndpointConfig(url=url, api_key_env="TEST_KEY", timeout=5))
    assert np.array_equal(out.k_trans, [300, 310, 320])
    body, auth = handler.seen[0]
    assert auth == "Bearer abc" and body["messages"][0]["role"] == "system"


def test_http_errors_degrade(server):
    url, handler = server
    handler.replies = [(500, {"error": "boom"}), (200, b"not json"), (200, reply("K = [9, 9, 9] D = [9, 9, 9]"))]
    out = remote_generate(make_query(), [], SIM, EndpointConfig(url=url, api_key_env=None, timeout=5))
    # two failed attempts, then a parseable reply clamped into range
    assert out.backend_tag is Backend.REMOTE and np.array_equal(out.k_trans, [50, 50, 50])


def test_http_unreachable_raises_backend_error():
    with pytest.raises(BackendError):
        HttpTransport("http://127.0.0.1:9/none", None, timeout=0.5)({"x": 1})
