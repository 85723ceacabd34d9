"""Chat-completion and embedding providers, retries and transcripts."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import httpx

from .prompts import ChatRequest

log = logging.getLogger(__name__)


class GatewayError(RuntimeError):
    """A request failed for good; ``status`` is the last transport status."""

    def __init__(self, message: str, status: int | str | None = None):
        super().__init__(message)
        self.status = status


class TransportError(RuntimeError):
    """A retryable failure (connection error, 429, 5xx)."""

    def __init__(self, message: str, status: int | str | None = None):
        super().__init__(message)
        self.status = status


class ScriptGapError(GatewayError):
    """The replay script has no answer for this tag/occurrence."""


@dataclass(frozen=True)
class TranscriptEntry:
    tag: str
    digest: str
    response: str
    latency: float = 0.0


class Transcript:
    """Append-only log of every provider call in one run."""

    def __init__(self, entries=()):
        self._entries: list[TranscriptEntry] = list(entries)
        self._lock = threading.Lock()

    def append(self, entry: TranscriptEntry) -> None:
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> tuple[TranscriptEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(e), sort_keys=True, ensure_ascii=False) + "\n" for e in self._entries)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(TranscriptEntry(**json.loads(l)) for l in lines if l.strip())


@dataclass
class ProviderConfig:
    kind: str = "http"  # http | replay
    endpoint_url: str = ""
    model_name: str = ""
    embedding_model: str | None = None
    credential_env: str = "LLM_API_KEY"
    request_timeout_seconds: float = 120.0
    max_retries: int = 3
    backoff_seconds: float = 1.0
    max_concurrency: int = 4
    script: str | None = None  # replay: script file, or a directory of <task_id>.json

    @classmethod
    def from_dict(cls, d: dict | None) -> "ProviderConfig":
        d = dict(d or {})
        if any(k in d for k in ("api_key", "credential", "token")):
            raise ValueError("put the credential in an environment variable named by credential_env")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


class Provider:
    """Base class; subclasses implement ``send`` and ``send_embedding``."""

    name = "provider"
    max_retries = 0
    backoff_seconds = 0.0

    def __init__(self):
        self.embedding_cache: dict[str, list[float]] = {}
        self.sleep: Callable[[float], None] = time.sleep

    def send(self, req: ChatRequest) -> str:
        raise NotImplementedError

    def send_embedding(self, text: str) -> list[float]:
        raise GatewayError(f"{self.name} does not support embeddings")


def _with_retries(provider: Provider, fn, what: str):
    delay = provider.backoff_seconds
    last: TransportError | None = None
    for attempt in range(provider.max_retries + 1):
        try:
            return fn()
        except TransportError as e:
            last = e
            log.warning("%s failed (attempt %d/%d): %s", what, attempt + 1, provider.max_retries + 1, e)
            if attempt < provider.max_retries:
                provider.sleep(delay)
                delay *= 2
    raise GatewayError(f"{what}: retries exhausted ({last})", last.status if last else None)


def complete(req: ChatRequest, provider: Provider, transcript: Transcript | None = None) -> str:
    """One chat response, retried on transport errors and logged to ``transcript``."""
    t0 = time.monotonic()
    text = _with_retries(provider, lambda: provider.send(req), f"completion {req.tag!r}")
    if transcript is not None:
        transcript.append(TranscriptEntry(req.tag, req.digest(), text, round(time.monotonic() - t0, 6)))
    return text


def embed(text: str, provider: Provider, transcript: Transcript | None = None) -> list[float]:
    key = hashlib.sha256(text.encode("utf-8")).hexdigest()
    hit = provider.embedding_cache.get(key)
    if hit is not None:
        return list(hit)
    t0 = time.monotonic()
    vec = _with_retries(provider, lambda: provider.send_embedding(text), "embedding")
    vec = [float(x) for x in vec]
    provider.embedding_cache[key] = vec
    if transcript is not None:
        transcript.append(TranscriptEntry("embed", key, json.dumps(vec), round(time.monotonic() - t0, 6)))
    return list(vec)


class HttpProvider(Provider):
    """OpenAI-style ``/chat/completions`` and ``/embeddings`` endpoints."""

    name = "http"

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        super().__init__()
        if not config.endpoint_url or not config.model_name:
            raise ValueError("http provider needs endpoint_url and model_name")
        self.config = config
        self.max_retries = config.max_retries
        self.backoff_seconds = config.backoff_seconds
        self._slots = threading.BoundedSemaphore(max(1, config.max_concurrency))
        self._client = httpx.Client(timeout=config.request_timeout_seconds, transport=transport)

    def _headers(self) -> dict:
        key = os.environ.get(self.config.credential_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _post(self, path: str, body: dict) -> dict:
        url = self.config.endpoint_url.rstrip("/") + path
        with self._slots:
            try:
                resp = self._client.post(url, json=body, headers=self._headers())
            except httpx.TransportError as e:
                raise TransportError(f"{type(e).__name__}: {e}", type(e).__name__) from None
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}", resp.status_code)
        if resp.status_code >= 400:
            raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:500]}", resp.status_code)
        try:
            return resp.json()
        except ValueError:
            raise GatewayError("response is not JSON", resp.status_code) from None

    def send(self, req: ChatRequest) -> str:
        body = {"model": self.config.model_name, **req.payload()}
        data = self._post("/chat/completions", body)
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError):
            raise GatewayError("malformed chat response") from None

    def send_embedding(self, text: str) -> list[float]:
        model = self.config.embedding_model or self.config.model_name
        data = self._post("/embeddings", {"model": model, "input": text})
        try:
            return data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError):
            raise GatewayError("malformed embedding response") from None


class ReplayProvider(Provider):
    """Answers from a script keyed by request tag.

    Script values are a string (answer to the first call) or a list (answers in
    call order).  A ``"tag#n"`` key pins the n-th call (1-based) explicitly.
    Unscripted calls raise :class:`ScriptGapError`.
    """

    name = "replay"

    def __init__(self, script: dict, embeddings: dict[str, list[float]] | None = None):
        super().__init__()
        self.script = dict(script)
        self.embeddings = dict(embeddings or {})
        self._seen: dict[str, int] = {}
        self._lock = threading.Lock()

    def send(self, req: ChatRequest) -> str:
        with self._lock:
            n = self._seen.get(req.tag, 0) + 1
            self._seen[req.tag] = n
        pinned = self.script.get(f"{req.tag}#{n}")
        if pinned is not None:
            return pinned
        value = self.script.get(req.tag)
        if isinstance(value, str) and n == 1:
            return value
        if isinstance(value, list) and n <= len(value):
            return value[n - 1]
        raise ScriptGapError(f"no scripted answer for tag {req.tag!r} (call {n})", "scripted-gap")

    def send_embedding(self, text: str) -> list[float]:
        if text in self.embeddings:
            return self.embeddings[text]
        raise ScriptGapError(f"no scripted embedding for {text[:40]!r}", "scripted-gap")

    @classmethod
    def from_transcript(cls, transcript: Transcript) -> "ReplayProvider":
        script: dict[str, list[str]] = {}
        embeddings: dict = {}
        for e in transcript.entries:
            if e.tag != "embed":
                script.setdefault(e.tag, []).append(e.response)
        return cls(script, embeddings)

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if "responses" in data:
            return cls(data["responses"], data.get("embeddings"))
        return cls(data)


def replay_provider(script: dict, embeddings: dict | None = None) -> ReplayProvider:
    return ReplayProvider(script, embeddings)


def make_provider(config: ProviderConfig, task_id: str | None = None) -> Provider:
    """Build a provider; replay scripts may be one file or a per-task directory."""
    if config.kind == "http":
        return HttpProvider(config)
    if config.kind == "replay":
        if not config.script:
            raise ValueError("replay provider needs a script path")
        path = Path(config.script)
        if path.is_dir():
            if task_id is None:
                raise ValueError("a per-task replay directory needs a task id")
            path = path / f"{task_id}.json"
        return ReplayProvider.from_file(path)
    raise ValueError(f"unknown provider kind {config.kind!r}")
