"""Uniform client for text-generation providers plus deterministic mocks.

Remote providers speak either the common JSON chat-completions shape
(single user message) or a plain-completions shape for local servers.
Three mock providers keep everything runnable offline:

* echo: returns the last hypothesis line of the prompt verbatim, tags
  included, imitating a model that copies its input;
* reference: returns the stored reference of the prompt's test item,
  the oracle closure for end-to-end tests;
* recorded: replays responses from a digest-keyed fixture map.

Responses are cached on disk keyed by (prompt digest, model, params) so
reruns are free and deterministic, and every request is logged with its
digest for replay.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

from .errors import ContextOverflow, ProviderUnavailable, RateLimited
from .prompting import strip_marks
from .records import TripleRecord

API_KEY_ENV = "PETM_LLM_API_KEY"

DEFAULT_STOP = ("\n\n", "\nEnglish:")


@dataclass
class GenerationParams:
    model: str = "mock"
    temperature: float = 0.0
    max_tokens: int | None = 512
    stop: tuple[str, ...] = DEFAULT_STOP
    max_prompt_chars: int | None = None

    def digest(self) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
                "stop": list(self.stop),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:8]


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


class CompletionProvider(Protocol):
    name: str

    def complete(self, prompt: str, params: GenerationParams) -> str: ...


# --- remote providers --------------------------------------------------------


class ChatCompletionsProvider:
    """POSTs {model, messages: [single user message], temperature, ...}."""

    def __init__(self, url: str, timeout: float = 60.0, api_key: str | None = None):
        self.name = "chat"
        self.url = url
        self.timeout = timeout
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)

    def _payload(self, prompt: str, params: GenerationParams) -> dict:
        payload: dict = {
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
        }
        if params.max_tokens is not None:
            payload["max_tokens"] = params.max_tokens
        if params.stop:
            payload["stop"] = list(params.stop)
        return payload

    def _extract(self, body: dict) -> str:
        return body["choices"][0]["message"]["content"]

    def complete(self, prompt: str, params: GenerationParams) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                self.url, json=self._payload(prompt, params), headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"provider unreachable: {exc}") from exc
        if response.status_code == 429:
            retry_after = response.headers.get("Retry-After")
            raise RateLimited(
                "provider rate limited",
                retry_after=float(retry_after) if retry_after else None,
            )
        if response.status_code != 200:
            raise ProviderUnavailable(f"provider returned {response.status_code}")
        try:
            return self._extract(response.json())
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderUnavailable(f"malformed provider response: {exc}") from exc


class PlainCompletionsProvider(ChatCompletionsProvider):
    """POSTs {model, prompt, ...} for local completion servers."""

    def __init__(self, url: str, timeout: float = 60.0, api_key: str | None = None):
        super().__init__(url, timeout=timeout, api_key=api_key)
        self.name = "completion"

    def _payload(self, prompt: str, params: GenerationParams) -> dict:
        payload = super()._payload(prompt, params)
        del payload["messages"]
        payload["prompt"] = prompt
        return payload

    def _extract(self, body: dict) -> str:
        return body["choices"][0]["text"]


# --- mock providers -----------------------------------------------------------


class EchoHypothesisMock:
    """Returns the test item's hypothesis line verbatim, tags and all."""

    def __init__(self, hypothesis_label: str = "Hypothesis"):
        self.name = "mock-echo"
        self._pattern = re.compile(rf"^{re.escape(hypothesis_label)}: (.*)$", re.MULTILINE)

    def complete(self, prompt: str, params: GenerationParams) -> str:
        matches = self._pattern.findall(prompt)
        return matches[-1] if matches else ""


class ReturnReferenceMock:
    """Returns the reference of the record whose source ends the prompt."""

    def __init__(self, records: Iterable[TripleRecord], source_label: str = "English"):
        self.name = "mock-reference"
        self._by_source = {rec.source: rec.reference for rec in records}
        self._pattern = re.compile(rf"^{re.escape(source_label)}: (.*)$", re.MULTILINE)

    def complete(self, prompt: str, params: GenerationParams) -> str:
        matches = self._pattern.findall(prompt)
        if not matches:
            raise ProviderUnavailable("prompt has no source line to answer")
        source = matches[-1]
        if source not in self._by_source:
            raise ProviderUnavailable(f"no record with source {source!r}")
        return self._by_source[source]


class RecordedMock:
    """Replays a committed digest -> response map; total over its fixture set."""

    def __init__(self, responses: dict[str, str]):
        self.name = "mock-recorded"
        self._responses = dict(responses)

    @classmethod
    def from_file(cls, path: str | Path) -> "RecordedMock":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, prompt: str, params: GenerationParams) -> str:
        digest = prompt_digest(prompt)
        if digest not in self._responses:
            raise ProviderUnavailable(f"no recorded response for digest {digest}")
        return self._responses[digest]


# --- post-processing ----------------------------------------------------------


@dataclass(frozen=True)
class PostprocessResult:
    text: str
    empty: bool


def postprocess(raw: str, stop_markers: tuple[str, ...] = DEFAULT_STOP) -> PostprocessResult:
    """Isolate the first generated translation line and strip error tags.

    The raw text is truncated at the earliest stop marker (a blank line or
    a following source-label line), then tags are removed and whitespace
    collapsed. ``empty`` flags outputs with nothing left; callers fall
    back to the original hypothesis in that case.
    """
    text = raw.lstrip("\n ").replace("\r\n", "\n")
    cut = len(text)
    for marker in stop_markers:
        pos = text.find(marker)
        if pos != -1:
            cut = min(cut, pos)
    text = strip_marks(text[:cut])
    return PostprocessResult(text=text, empty=(text == ""))


# --- cache, log, gateway --------------------------------------------------------


class ResponseCache:
    """JSON file of raw responses keyed by prompt digest, model, and params."""

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._data: dict[str, str] = {}
        if self.path is not None and self.path.exists():
            self._data = json.loads(self.path.read_text(encoding="utf-8"))

    @staticmethod
    def key(digest: str, params: GenerationParams) -> str:
        return f"{digest}:{params.model}:{params.digest()}"

    def get(self, digest: str, params: GenerationParams) -> str | None:
        with self._lock:
            return self._data.get(self.key(digest, params))

    def put(self, digest: str, params: GenerationParams, response: str) -> None:
        with self._lock:
            self._data[self.key(digest, params)] = response
            if self.path is not None:
                tmp = self.path.with_suffix(".tmp")
                tmp.write_text(
                    json.dumps(self._data, ensure_ascii=False, sort_keys=True, indent=0),
                    encoding="utf-8",
                )
                tmp.replace(self.path)

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)


class RequestLog:
    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()

    def record(self, digest: str, params: GenerationParams, cached: bool,
               ok: bool, error: str | None = None) -> None:
        if self.path is None:
            return
        entry = {
            "ts": time.time(),
            "digest": digest,
            "model": params.model,
            "cached": cached,
            "ok": ok,
        }
        if error is not None:
            entry["error"] = error
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


@dataclass
class Gateway:
    """Provider-agnostic completion front end with retries and caching."""

    provider: CompletionProvider
    params: GenerationParams = field(default_factory=GenerationParams)
    cache: ResponseCache = field(default_factory=lambda: ResponseCache(None))
    log: RequestLog = field(default_factory=lambda: RequestLog(None))
    max_retries: int = 3
    backoff: float = 0.5
    concurrency: int = 4

    @property
    def calls_made(self) -> int:
        return getattr(self, "_calls", 0)

    def complete(self, prompt: str) -> str:
        """Raw response text for a single user message."""
        if not prompt:
            raise ValueError("prompt is empty")
        if (
            self.params.max_prompt_chars is not None
            and len(prompt) > self.params.max_prompt_chars
        ):
            raise ContextOverflow(
                f"prompt of {len(prompt)} chars exceeds limit "
                f"{self.params.max_prompt_chars}"
            )
        digest = prompt_digest(prompt)
        cached = self.cache.get(digest, self.params)
        if cached is not None:
            self.log.record(digest, self.params, cached=True, ok=True)
            return cached

        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                response = self.provider.complete(prompt, self.params)
            except ProviderUnavailable as exc:
                last_error = exc
                wait = self.backoff * (2**attempt)
                if exc.retry_after is not None:
                    wait = max(wait, exc.retry_after)
                if attempt + 1 < self.max_retries:
                    time.sleep(wait)
                continue
            self._calls = self.calls_made + 1
            self.cache.put(digest, self.params, response)
            self.log.record(digest, self.params, cached=False, ok=True)
            return response

        self.log.record(
            digest, self.params, cached=False, ok=False, error=str(last_error)
        )
        raise last_error  # type: ignore[misc]


def make_mock(
    mode: str,
    records: Iterable[TripleRecord] | None = None,
    recorded: dict[str, str] | str | Path | None = None,
) -> CompletionProvider:
    if mode == "echo-hypothesis":
        return EchoHypothesisMock()
    if mode == "return-reference":
        if records is None:
            raise ValueError("return-reference mock needs records")
        return ReturnReferenceMock(records)
    if mode == "recorded":
        if isinstance(recorded, (str, Path)):
            return RecordedMock.from_file(recorded)
        if recorded is None:
            raise ValueError("recorded mock needs a response map")
        return RecordedMock(recorded)
    raise ValueError(f"unknown mock mode {mode!r}")
