"""Client for OpenAI-compatible chat-completion endpoints plus a mock backend.

Real backends are called over ``POST {base_url}/chat/completions`` with retry
on transient failures and a per-backend in-flight cap.  Mock backends resolve
requests against a transcript mapping request hashes to canned responses,
which keeps every test offline and deterministic.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import httpx

from .config import BackendConfig

RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


class GatewayError(Exception):
    pass


class ProtocolError(GatewayError):
    pass


@dataclass(frozen=True)
class Completion:
    text: str
    backend: str
    retries: int = 0
    usage: dict[str, Any] = field(default_factory=dict)


def request_key(model: str, messages: list[dict[str, str]], temperature: float) -> str:
    payload = json.dumps(
        {"model": model, "messages": messages, "temperature": temperature},
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class MockTranscript:
    """Request-hash to response mapping; an optional default catches the rest."""

    def __init__(self, responses: dict[str, str] | None = None, default: str | None = None):
        self.responses = dict(responses or {})
        self.default = default

    @classmethod
    def load(cls, path: str) -> "MockTranscript":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(data.get("responses", {}), data.get("default"))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"responses": self.responses, "default": self.default},
                fh,
                ensure_ascii=False,
                indent=2,
                sort_keys=True,
            )

    def record(self, model: str, messages: list[dict[str, str]], temperature: float, response: str) -> None:
        self.responses[request_key(model, messages, temperature)] = response

    def lookup(self, key: str) -> str:
        if key in self.responses:
            return self.responses[key]
        if self.default is not None:
            return self.default
        raise GatewayError(f"mock transcript has no response for request {key[:12]}...")


class ChatClient:
    """Shareable, thread-safe client over a set of configured backends."""

    def __init__(
        self,
        backends: dict[str, BackendConfig],
        transcripts: dict[str, MockTranscript] | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backends = dict(backends)
        self._transcripts = dict(transcripts or {})
        self._semaphores = {
            name: threading.Semaphore(cfg.max_in_flight) for name, cfg in self.backends.items()
        }
        self._sleep = sleep
        self._http = httpx.Client(transport=transport) if transport else httpx.Client()

    def close(self) -> None:
        self._http.close()

    def _transcript(self, cfg: BackendConfig) -> MockTranscript:
        if cfg.name not in self._transcripts:
            self._transcripts[cfg.name] = MockTranscript.load(cfg.transcript_path)
        return self._transcripts[cfg.name]

    def complete(self, backend: str, messages: list[dict[str, str]]) -> Completion:
        cfg = self.backends.get(backend)
        if cfg is None:
            raise GatewayError(f"unknown backend {backend!r}")
        with self._semaphores[backend]:
            if cfg.is_mock:
                key = request_key(cfg.model, messages, cfg.temperature)
                return Completion(text=self._transcript(cfg).lookup(key), backend=backend)
            return self._complete_http(cfg, messages)

    def _complete_http(self, cfg: BackendConfig, messages: list[dict[str, str]]) -> Completion:
        headers = {"Content-Type": "application/json"}
        if cfg.api_key_env:
            key = os.environ.get(cfg.api_key_env, "")
            if not key:
                raise GatewayError(
                    f"backend {cfg.name!r}: API key env {cfg.api_key_env!r} not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        body = {"model": cfg.model, "messages": messages, "temperature": cfg.temperature}
        url = cfg.base_url.rstrip("/") + "/chat/completions"
        last_error: str = "no attempt made"
        for attempt in range(cfg.max_attempts):
            if attempt:
                self._sleep(cfg.backoff_base * 2 ** (attempt - 1))
            try:
                resp = self._http.post(url, json=body, headers=headers, timeout=cfg.timeout)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise GatewayError(f"backend {cfg.name!r}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
                text = data["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProtocolError(f"backend {cfg.name!r}: malformed response ({exc})") from exc
            return Completion(
                text=text,
                backend=cfg.name,
                retries=attempt,
                usage=data.get("usage") or {},
            )
        raise GatewayError(
            f"backend {cfg.name!r}: exhausted {cfg.max_attempts} attempts ({last_error})"
        )
