"""Completion providers: live chat-completions HTTP backend and the
rule-driven mock that makes the whole pipeline testable offline.

Every provider receives both the rendered prompt and a structured view of
the payload; the HTTP backend uses only the prompt, while the mock keys its
scripted behavior off the structured view so tests never scrape prompts.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal

import requests

from ..errors import ProviderError

TOKEN_ENV_VAR = "APKSECRETS_API_TOKEN"

# Example operating point quoted in configs: a small hosted model priced
# per 1k tokens so a standard scan lands around $0.008 per app.
EXAMPLE_PROMPT_PRICE = Decimal("0.00015")
EXAMPLE_COMPLETION_PRICE = Decimal("0.0006")


@dataclass(frozen=True)
class ProviderSpec:
    model_id: str
    endpoint: str = "mock"
    price_per_1k_prompt_tokens: Decimal = Decimal("0")
    price_per_1k_completion_tokens: Decimal = Decimal("0")
    max_context_tokens: int = 128_000
    request_timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    token_divisor: int = 4  # chars-per-token heuristic

    def __post_init__(self):
        if self.price_per_1k_prompt_tokens < 0 or self.price_per_1k_completion_tokens < 0:
            raise ValueError("prices must be non-negative")
        if self.max_context_tokens <= 0:
            raise ValueError("max_context_tokens must be positive")
        if self.token_divisor <= 0:
            raise ValueError("token_divisor must be positive")

    def estimate_tokens(self, text: str) -> int:
        return max(1, len(text) // self.token_divisor)


@dataclass(frozen=True)
class PromptPayload:
    """Structured view of what a prompt contains."""

    kind: str                            # identify | label | contextual
    values: tuple[str, ...] = ()         # listed strings (identify phases)
    numbering: tuple[int, ...] = ()      # list numbers shown next to values
    candidate: str = ""
    context: str = ""


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: float


class Provider:
    """Interface: one completion call per prompt."""

    spec: ProviderSpec

    def complete(self, prompt: str, phase: str, payload: PromptPayload) -> ProviderResponse:
        raise NotImplementedError


class RateLimiter:
    """Global requests/minute and tokens/minute gate shared by all workers."""

    def __init__(self, requests_per_minute: int | None = None,
                 tokens_per_minute: int | None = None):
        self.requests_per_minute = requests_per_minute
        self.tokens_per_minute = tokens_per_minute
        self._lock = threading.Lock()
        self._requests: deque[float] = deque()
        self._tokens: deque[tuple[float, int]] = deque()

    def _wait_time(self, now: float, tokens: int) -> float:
        wait = 0.0
        if self.requests_per_minute:
            while self._requests and now - self._requests[0] > 60.0:
                self._requests.popleft()
            if len(self._requests) >= self.requests_per_minute:
                wait = max(wait, 60.0 - (now - self._requests[0]))
        if self.tokens_per_minute:
            while self._tokens and now - self._tokens[0][0] > 60.0:
                self._tokens.popleft()
            used = sum(n for _, n in self._tokens)
            if used + tokens > self.tokens_per_minute and self._tokens:
                wait = max(wait, 60.0 - (now - self._tokens[0][0]))
        return wait

    def acquire(self, tokens: int = 0) -> None:
        if not self.requests_per_minute and not self.tokens_per_minute:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                wait = self._wait_time(now, tokens)
                if wait <= 0:
                    self._requests.append(now)
                    self._tokens.append((now, tokens))
                    return
            time.sleep(min(wait, 1.0))


@dataclass(frozen=True)
class MockRules:
    """Behavior script for the offline provider.

    ``marker_prefixes`` drive identification; ``label_rules`` map value
    prefixes to labels; ``context_rules`` map context keywords to labels
    (used by contextual identification and as a labeling fallback).
    ``hallucinate`` values are injected into identification responses to
    exercise the hallucination filter.
    """

    marker_prefixes: tuple[str, ...] = (
        "AIza", "QUl6Y", "eyJ", "-----BEGIN", "sk-", "sk_live_", "rzp_",
        "ghp_", "AKIA", "KakaoAK ")
    label_rules: tuple[tuple[str, str], ...] = (
        ("AIza", "GOOGLE_API_KEY"),
        ("QUl6Y", "GOOGLE_API_KEY"),
        ("eyJ", "JWT_TOKEN"),
        ("-----BEGIN RSA", "RSA_PRIVATE_KEY"),
        ("-----BEGIN", "RSA_PRIVATE_KEY"),
        ("sk-", "OPENAI_API_KEY"),
        ("sk_live_", "STRIPE_STANDARD_API_KEY"),
        ("rzp_live_", "RAZORPAY_LIVE_API_KEY"),
        ("rzp_test_", "RAZORPAY_TEST_API_KEY"),
        ("ghp_", "GITHUB_PAT"),
        ("AKIA", "AWS_ACCESS_KEY_ID"),
        ("KakaoAK ", "KAKAO_API_KEY"),
    )
    context_rules: tuple[tuple[str, str], ...] = ()
    hallucinate: tuple[str, ...] = ()
    respond_with_indices: bool = True


class MockProvider(Provider):
    """Deterministic scripted backend; token counts derive from text length."""

    def __init__(self, spec: ProviderSpec, rules: MockRules | None = None):
        self.spec = spec
        self.rules = rules or MockRules()
        self.calls = 0
        self._lock = threading.Lock()

    def _flagged(self, value: str) -> bool:
        return any(value.startswith(p) for p in self.rules.marker_prefixes)

    def _label_for(self, candidate: str, context: str) -> str:
        for prefix, label in self.rules.label_rules:
            if candidate.startswith(prefix):
                return label
        for keyword, label in self.rules.context_rules:
            if keyword in context:
                return label
        return "NOT-SECRET"

    def _respond(self, prompt: str, payload: PromptPayload) -> str:
        if payload.kind == "identify":
            if self.rules.respond_with_indices and payload.numbering:
                hits: list[object] = [
                    num for num, value in zip(payload.numbering, payload.values)
                    if self._flagged(value)]
            else:
                hits = [v for v in payload.values if self._flagged(v)]
            hits.extend(self.rules.hallucinate)
            return json.dumps(hits)
        if payload.kind == "label":
            return json.dumps(
                {"label": self._label_for(payload.candidate, payload.context)})
        if payload.kind == "contextual":
            secret = self._flagged(payload.candidate) or any(
                kw in payload.context for kw, _ in self.rules.context_rules)
            return json.dumps({"secret": secret})
        raise ProviderError(f"mock cannot answer payload kind {payload.kind!r}")

    def complete(self, prompt: str, phase: str, payload: PromptPayload) -> ProviderResponse:
        with self._lock:
            self.calls += 1
        text = self._respond(prompt, payload)
        return ProviderResponse(
            text=text,
            prompt_tokens=self.spec.estimate_tokens(prompt),
            completion_tokens=self.spec.estimate_tokens(text),
            latency_ms=0.0,
        )


class HttpProvider(Provider):
    """Chat-completions JSON endpoint with bounded retries.

    Authentication comes from the ``APKSECRETS_API_TOKEN`` environment
    variable; 5xx and transport errors retry up to ``spec.max_retries``
    times, 4xx fail immediately.
    """

    def __init__(self, spec: ProviderSpec, rate_limiter: RateLimiter | None = None,
                 session: requests.Session | None = None,
                 retry_delay: float = 1.0):
        self.spec = spec
        self.rate_limiter = rate_limiter
        self.session = session or requests.Session()
        self.retry_delay = retry_delay

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(TOKEN_ENV_VAR)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, prompt: str, phase: str, payload: PromptPayload) -> ProviderResponse:
        body = {
            "model": self.spec.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.spec.temperature,
        }
        est_tokens = self.spec.estimate_tokens(prompt)
        last_error: Exception | None = None
        for attempt in range(self.spec.max_retries + 1):
            if self.rate_limiter is not None:
                self.rate_limiter.acquire(est_tokens)
            start = time.perf_counter()
            try:
                resp = self.session.post(
                    self.spec.endpoint, json=body, headers=self._headers(),
                    timeout=self.spec.request_timeout)
            except requests.RequestException as exc:
                last_error = exc
                time.sleep(self.retry_delay * (attempt + 1))
                continue
            latency_ms = (time.perf_counter() - start) * 1000.0
            if resp.status_code >= 500:
                last_error = ProviderError(f"server error {resp.status_code}")
                time.sleep(self.retry_delay * (attempt + 1))
                continue
            if resp.status_code != 200:
                raise ProviderError(
                    f"{phase}: provider returned {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
                text = data["choices"][0]["message"]["content"]
                usage = data.get("usage", {})
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProviderError(f"{phase}: malformed provider envelope: {exc}") from exc
            return ProviderResponse(
                text=text or "",
                prompt_tokens=int(usage.get("prompt_tokens", est_tokens)),
                completion_tokens=int(usage.get(
                    "completion_tokens", self.spec.estimate_tokens(text or ""))),
                latency_ms=latency_ms,
            )
        raise ProviderError(
            f"{phase}: provider failed after {self.spec.max_retries + 1} attempts: "
            f"{last_error}")
