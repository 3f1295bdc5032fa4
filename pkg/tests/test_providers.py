"""Provider backends: wire format, retries, auth header, rate limiter."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from apksecrets.errors import ProviderError
from apksecrets.llm_pipeline import (
    HttpProvider,
    MockProvider,
    MockRules,
    PromptPayload,
    ProviderSpec,
    RateLimiter,
    TOKEN_ENV_VAR,
)

PAYLOAD = PromptPayload(kind="label", candidate="x")


class _ChatHandler(BaseHTTPRequestHandler):
    server_version = "test"
    requests_seen: list[dict] = []
    fail_next = 0
    status_for_all = 200

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        type(self).requests_seen.append({
            "body": body,
            "auth": self.headers.get("Authorization"),
            "path": self.path,
        })
        if type(self).fail_next > 0:
            type(self).fail_next -= 1
            self.send_response(503)
            self.end_headers()
            return
        if type(self).status_for_all != 200:
            self.send_response(type(self).status_for_all)
            self.end_headers()
            self.wfile.write(b"nope")
            return
        reply = {
            "choices": [{"message": {"role": "assistant",
                                     "content": '{"label": "GOOGLE_API_KEY"}'}}],
            "usage": {"prompt_tokens": 42, "completion_tokens": 7},
        }
        data = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_server():
    _ChatHandler.requests_seen = []
    _ChatHandler.fail_next = 0
    _ChatHandler.status_for_all = 200
    server = HTTPServer(("127.0.0.1", 0), _ChatHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1/chat/completions"
    server.shutdown()
    thread.join(timeout=5)


class TestHttpProvider:
    def spec(self, endpoint, **kw):
        return ProviderSpec(model_id="test-model", endpoint=endpoint,
                            request_timeout=5.0, **kw)

    def test_request_and_response_shape(self, chat_server, monkeypatch):
        monkeypatch.setenv(TOKEN_ENV_VAR, "sekrit-token")
        provider = HttpProvider(self.spec(chat_server), retry_delay=0.01)
        resp = provider.complete("label this", "A2", PAYLOAD)
        assert resp.text == '{"label": "GOOGLE_API_KEY"}'
        assert resp.prompt_tokens == 42
        assert resp.completion_tokens == 7
        assert resp.latency_ms > 0
        seen = _ChatHandler.requests_seen[-1]
        assert seen["body"]["model"] == "test-model"
        assert seen["body"]["messages"] == [
            {"role": "user", "content": "label this"}]
        assert seen["body"]["temperature"] == 0.0
        assert seen["auth"] == "Bearer sekrit-token"

    def test_no_token_no_auth_header(self, chat_server, monkeypatch):
        monkeypatch.delenv(TOKEN_ENV_VAR, raising=False)
        provider = HttpProvider(self.spec(chat_server), retry_delay=0.01)
        provider.complete("x", "A2", PAYLOAD)
        assert _ChatHandler.requests_seen[-1]["auth"] is None

    def test_retry_on_server_error_then_success(self, chat_server):
        _ChatHandler.fail_next = 2
        provider = HttpProvider(self.spec(chat_server, max_retries=2),
                                retry_delay=0.01)
        resp = provider.complete("x", "B1", PAYLOAD)
        assert resp.prompt_tokens == 42
        assert len(_ChatHandler.requests_seen) == 3

    def test_exhausted_retries_raise(self, chat_server):
        _ChatHandler.fail_next = 10
        provider = HttpProvider(self.spec(chat_server, max_retries=1),
                                retry_delay=0.01)
        with pytest.raises(ProviderError):
            provider.complete("x", "B1", PAYLOAD)
        assert len(_ChatHandler.requests_seen) == 2

    def test_client_error_fails_immediately(self, chat_server):
        _ChatHandler.status_for_all = 401
        provider = HttpProvider(self.spec(chat_server, max_retries=3),
                                retry_delay=0.01)
        with pytest.raises(ProviderError):
            provider.complete("x", "A1", PAYLOAD)
        assert len(_ChatHandler.requests_seen) == 1

    def test_unreachable_endpoint(self):
        provider = HttpProvider(
            ProviderSpec(model_id="m", endpoint="http://127.0.0.1:1/nope",
                         request_timeout=0.2, max_retries=0),
            retry_delay=0.01)
        with pytest.raises(ProviderError):
            provider.complete("x", "A1", PAYLOAD)


class TestMockProvider:
    def test_deterministic(self):
        spec = ProviderSpec(model_id="m")
        payload = PromptPayload(kind="identify", values=("AIzaX", "plain"),
                                numbering=(1, 2))
        r1 = MockProvider(spec, MockRules()).complete("p", "B1", payload)
        r2 = MockProvider(spec, MockRules()).complete("p", "B1", payload)
        assert r1 == r2
        assert r1.latency_ms == 0.0

    def test_token_counts_follow_heuristic(self):
        spec = ProviderSpec(model_id="m", token_divisor=4)
        prompt = "z" * 400
        resp = MockProvider(spec, MockRules()).complete(
            "z" * 400, "A1", PromptPayload(kind="identify"))
        assert resp.prompt_tokens == len(prompt) // 4


class TestRateLimiter:
    def test_disabled_is_noop(self):
        limiter = RateLimiter()
        for _ in range(1000):
            limiter.acquire(10)

    def test_request_cap_blocks(self):
        import time
        limiter = RateLimiter(requests_per_minute=10_000)
        start = time.monotonic()
        for _ in range(50):
            limiter.acquire()
        assert time.monotonic() - start < 1.0
