"""Chat-completion gateway.

Two interchangeable backends sit behind `complete`: a live client for any
OpenAI-compatible endpoint, and a replay backend that answers from recorded
fixtures so the whole test suite runs with networking disabled. A record
backend wraps the live one and writes fixtures as it goes.
"""

from __future__ import annotations

import hashlib
import json
import time
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import requests

ENV_ENDPOINT = "MAKEBELIEVE_ENDPOINT"
ENV_API_KEY = "MAKEBELIEVE_API_KEY"
ENV_MODEL = "MAKEBELIEVE_MODEL"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class BackendFailure(Exception):
    """The language-model backend could not produce a response."""

    def __init__(self, kind: str, message: str):
        self.kind = kind  # transport | auth | rate-limit | protocol
        super().__init__(f"{kind}: {message}")


class FixtureMiss(Exception):
    """Replay backend has no recorded response for this request."""

    def __init__(self, digest: str, summary: str = ""):
        self.digest = digest
        detail = f" ({summary})" if summary else ""
        super().__init__(f"no fixture for digest {digest}{detail}")


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: tuple[tuple[str, str], ...]  # (role, text), roles alternate from "user"
    temperature: float = 0.7
    max_tokens: int = 800


def validate_request(request: ChatRequest) -> None:
    if not request.messages:
        raise ValueError("request has no messages")
    for index, (role, _) in enumerate(request.messages):
        expected = "user" if index % 2 == 0 else "assistant"
        if role != expected:
            raise ValueError(f"message {index} has role {role!r}, expected {expected!r}")
    if not 0.0 <= request.temperature <= 2.0:
        raise ValueError(f"temperature {request.temperature} outside [0, 2]")
    if request.max_tokens <= 0:
        raise ValueError("max_tokens must be positive")


def _normalize_text(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).split())


def request_digest(request: ChatRequest) -> str:
    """Stable content hash of the prompt, ignoring sampling parameters.

    Whitespace runs collapse to single spaces and text is NFC-normalized,
    so cosmetically reformatted prompts keep hitting the same fixture.
    """
    hasher = hashlib.sha256()
    hasher.update(_normalize_text(request.system_prompt).encode("utf-8"))
    for role, text in request.messages:
        hasher.update(b"\x1e")
        hasher.update(role.encode("utf-8"))
        hasher.update(b"\x1f")
        hasher.update(_normalize_text(text).encode("utf-8"))
    return hasher.hexdigest()


def _summarize(request: ChatRequest) -> str:
    last_user = next((t for r, t in reversed(request.messages) if r == "user"), "")
    return _normalize_text(last_user)[:120]


# ---------------------------------------------------------------------------
# Fixture storage

class FixtureStore:
    """Digest-keyed canned responses, stored as a readable JSON array."""

    def __init__(self, entries: dict[str, str] | None = None,
                 summaries: dict[str, str] | None = None):
        self.entries: dict[str, str] = dict(entries or {})
        self.summaries: dict[str, str] = dict(summaries or {})

    @classmethod
    def load(cls, path: str | Path) -> "FixtureStore":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        store = cls()
        for item in raw:
            store.entries[item["digest"]] = item["response"]
            store.summaries[item["digest"]] = item.get("request_summary", "")
        return store

    def save(self, path: str | Path) -> None:
        rows = [
            {
                "digest": digest,
                "request_summary": self.summaries.get(digest, ""),
                "response": response,
            }
            for digest, response in self.entries.items()
        ]
        Path(path).write_text(
            json.dumps(rows, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def put(self, digest: str, summary: str, response: str) -> None:
        self.entries[digest] = response
        self.summaries[digest] = summary


# ---------------------------------------------------------------------------
# Backends

class ReplayBackend:
    """Answers only from fixtures; a missing digest raises FixtureMiss."""

    def __init__(self, store: FixtureStore | str | Path):
        self.store = store if isinstance(store, FixtureStore) else FixtureStore.load(store)

    def complete(self, request: ChatRequest) -> str:
        digest = request_digest(request)
        if digest not in self.store.entries:
            raise FixtureMiss(digest, _summarize(request))
        return self.store.entries[digest]


class LiveBackend:
    """HTTP client for an OpenAI-compatible /chat/completions endpoint.

    Retries timeouts, connection drops, 429 and 5xx with exponential
    backoff, for at most 3 attempts in total. Other 4xx fail immediately.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "gpt-3.5-turbo",
        timeout: float = 60.0,
        max_retries: int = 2,
        sleep: Callable[[float], None] = time.sleep,
        post: Callable | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout = timeout
        self.max_retries = max_retries
        self._sleep = sleep
        self._post = post or requests.post

    def complete(self, request: ChatRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "system", "content": request.system_prompt}]
            + [{"role": role, "content": text} for role, text in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_failure: BackendFailure | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(0.5 * 2 ** (attempt - 1))
            try:
                response = self._post(
                    f"{self.endpoint}/chat/completions",
                    json=payload, headers=headers, timeout=self.timeout,
                )
            except requests.exceptions.RequestException as err:
                last_failure = BackendFailure("transport", str(err))
                continue
            status = response.status_code
            if status in _RETRYABLE_STATUS:
                kind = "rate-limit" if status == 429 else "transport"
                last_failure = BackendFailure(kind, f"HTTP {status}")
                continue
            if status in (401, 403):
                raise BackendFailure("auth", f"HTTP {status}")
            if status >= 400:
                raise BackendFailure("protocol", f"HTTP {status}")
            try:
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as err:
                raise BackendFailure("protocol", f"malformed response: {err}")
        assert last_failure is not None
        raise last_failure


class RecordBackend:
    """Forwards to a live backend and saves every exchange as a fixture."""

    def __init__(self, live: LiveBackend, path: str | Path):
        self.live = live
        self.path = Path(path)
        self.store = FixtureStore.load(path) if self.path.exists() else FixtureStore()

    def complete(self, request: ChatRequest) -> str:
        response = self.live.complete(request)
        self.store.put(request_digest(request), _summarize(request), response)
        self.store.save(self.path)
        return response


Backend = ReplayBackend | LiveBackend | RecordBackend


def complete(request: ChatRequest, backend: Backend) -> str:
    """Validate the request and dispatch it to the chosen backend."""
    validate_request(request)
    return backend.complete(request)
