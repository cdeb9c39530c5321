import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from faceqa.batch import BatchAborted, BatchLimits, RateLimiter, run_ordered
from faceqa.endpoint import EndpointError, EndpointResponse, HttpEndpoint
from faceqa.schema import FaceImageRef
from faceqa.seeding import derive_seed, rng_for

NO_SLEEP = dict(sleep=lambda s: None)


def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, "a") == derive_seed(1, "a")
    assert derive_seed(1, "a") != derive_seed(1, "b") != derive_seed(2, "a")
    assert 0 <= derive_seed("x") < 2**64
    assert rng_for(3, "x").random() == rng_for(3, "x").random()


def test_output_in_input_order_despite_completion_order():
    def call(i):
        time.sleep((10 - i % 10) / 2000)
        return EndpointResponse(str(i), 0.0)

    out = list(run_ordered(range(60), call, BatchLimits(max_concurrency=8), **NO_SLEEP))
    assert [o.response.text for o in out] == [str(i) for i in range(60)]
    assert [o.index for o in out] == list(range(60))


@pytest.mark.parametrize("limit", [1, 3, 16])
def test_in_flight_bounded(limit):
    lock = threading.Lock()
    state = {"now": 0, "peak": 0}

    def call(i):
        with lock:
            state["now"] += 1
            state["peak"] = max(state["peak"], state["now"])
        time.sleep(0.002)
        with lock:
            state["now"] -= 1
        return EndpointResponse("ok", 0.0)

    list(run_ordered(range(80), call, BatchLimits(max_concurrency=limit), **NO_SLEEP))
    assert state["peak"] <= limit


def test_exponential_backoff_delays():
    delays = []
    attempts = {"n": 0}

    def call(i):
        attempts["n"] += 1
        if attempts["n"] <= 3:
            raise EndpointError("busy", retryable=True)
        return EndpointResponse("ok", 0.0)

    limits = BatchLimits(max_retries=3, backoff_base=0.5, backoff_cap=1.5)
    (out,) = run_ordered([0], call, limits, sleep=delays.append)
    assert out.ok and out.attempts == 4
    assert delays == [0.5, 1.0, 1.5]


def test_non_retryable_error_not_retried():
    def call(i):
        raise EndpointError("auth", retryable=False)

    gen = run_ordered([0, 1], call, BatchLimits(max_retries=5), **NO_SLEEP)
    first = next(gen)
    assert first.attempts == 1 and not first.ok
    with pytest.raises(BatchAborted):
        next(gen)


def test_rate_limiter_spacing():
    clock = {"t": 0.0}
    slept = []

    def sleep(s):
        slept.append(s)
        clock["t"] += s

    limiter = RateLimiter(4.0, clock=lambda: clock["t"], sleep=sleep)
    for _ in range(5):
        limiter.acquire()
    assert slept == pytest.approx([0.25, 0.25, 0.25, 0.25])
    RateLimiter(None).acquire()  # no cap: returns immediately


def test_limits_validation():
    with pytest.raises(ValueError):
        BatchLimits(max_concurrency=0)
    with pytest.raises(ValueError):
        BatchLimits(max_retries=-1)


# ── HTTP endpoint wire format ───────────────────────────────────────────────


class _Handler(BaseHTTPRequestHandler):
    script: list = []
    seen: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((self.headers.get("Authorization"), body))
        status, payload = type(self).script.pop(0) if type(self).script else (200, {"text": "Yes"})
        data = payload if isinstance(payload, bytes) else json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    _Handler.script = []
    _Handler.seen = []
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}/v1/complete", _Handler
    srv.shutdown()


IMG = FaceImageRef("img1", "images/img1.jpg", "laion_face")


def test_http_request_shape(server, monkeypatch):
    url, handler = server
    monkeypatch.setenv("FACEQA_TEST_TOKEN", "s3cret")
    ep = HttpEndpoint(url, credential_env="FACEQA_TEST_TOKEN")
    resp = ep.complete(IMG, "Is it? Answer directly with Yes or No.", system="Be brief.")
    assert resp.text == "Yes"
    assert resp.latency_ms >= 0
    auth, body = handler.seen[0]
    assert auth == "Bearer s3cret"
    assert body == {"image_uri": "images/img1.jpg", "prompt": "Is it? Answer directly with Yes or No.",
                    "system": "Be brief."}


def test_http_inline_image(server, tmp_path):
    url, handler = server
    path = tmp_path / "face.jpg"
    path.write_bytes(b"\xff\xd8jpeg")
    HttpEndpoint(url, inline_images=True).complete(FaceImageRef("f", str(path), "other"), "Q")
    _, body = handler.seen[0]
    assert body["image_base64"] == "/9hqcGVn" and "image_uri" not in body


@pytest.mark.parametrize("status, retryable", [(429, True), (503, True), (408, True),
                                               (401, False), (403, False), (400, False)])
def test_http_error_classes(server, status, retryable):
    url, handler = server
    handler.script = [(status, {"error": "x"})]
    with pytest.raises(EndpointError) as err:
        HttpEndpoint(url).complete(IMG, "Q")
    assert err.value.retryable is retryable


def test_http_malformed_body_is_fatal(server):
    url, handler = server
    handler.script = [(200, b"not json")]
    with pytest.raises(EndpointError) as err:
        HttpEndpoint(url).complete(IMG, "Q")
    assert not err.value.retryable


def test_http_unreachable_is_retryable():
    with pytest.raises(EndpointError) as err:
        HttpEndpoint("http://127.0.0.1:9/none", timeout=0.5).complete(IMG, "Q")
    assert err.value.retryable


def test_http_rate_limited_then_ok_through_runner(server):
    url, handler = server
    handler.script = [(429, {}), (429, {}), (200, {"text": "No"})]
    ep = HttpEndpoint(url)
    (out,) = run_ordered([IMG], lambda img: ep.complete(img, "Q"), BatchLimits(max_retries=3),
                         **NO_SLEEP)
    assert out.ok and out.attempts == 3 and out.response.text == "No"
