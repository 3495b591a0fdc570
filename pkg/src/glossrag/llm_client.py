"""Chat-completion client for OpenAI-compatible endpoints.

Responses are cached on disk under the SHA-256 of the full request, so a
re-run with a warm cache makes no network calls. Offline work uses the mock
backends at the bottom of this module.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

from .corpus import GlossList, tokenize_words
from .prompt import GLOSSLIST_INSTRUCTION

_logger = logging.getLogger(__name__)


class LLMError(RuntimeError):
    pass


class AuthError(LLMError):
    pass


class RateLimited(LLMError):
    pass


class TransportError(LLMError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    system: str
    user: str
    model_id: str
    temperature: float = 0.0
    seed: int = 0
    max_tokens: int = 1024
    # bumped to force a fresh completion after an unparseable answer
    attempt: int = 0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    def cache_key(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def payload(self) -> dict:
        return {
            "model": self.model_id,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": self.user},
            ],
            "temperature": self.temperature,
            "seed": self.seed,
            "max_tokens": self.max_tokens,
        }


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    name: str = "openai"
    timeout: float = 120.0
    max_attempts: int = 3
    backoff: float = 1.0
    max_concurrency: int = 4
    requests_per_second: Optional[float] = None

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "").strip()
        if not key:
            raise AuthError(f"environment variable {self.api_key_env} is not set")
        return key


class ResponseCache:
    """Directory of ``<request hash>.txt`` files, one response body each."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.txt"

    def get(self, key: str) -> Optional[str]:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8", newline="") as handle:
            return handle.read()

    def put(self, key: str, text: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".txt")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            os.replace(tmp, self._path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def __contains__(self, key: str) -> bool:
        return self._path(key).exists()

    def __len__(self) -> int:
        return sum(1 for _ in self.directory.glob("*.txt"))


class TokenBucket:
    def __init__(self, rate: float, capacity: Optional[float] = None):
        self.rate = rate
        self.capacity = capacity or max(1.0, rate)
        self._tokens = self.capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            time.sleep(wait)


def _message_text(body: dict) -> str:
    """Assistant text from a chat-completions body; refusals come back empty."""
    choices = body.get("choices") or []
    if not choices:
        return ""
    choice = choices[0]
    message = choice.get("message") or {}
    if message.get("refusal") or choice.get("finish_reason") == "content_filter":
        return ""
    content = message.get("content")
    if isinstance(content, list):
        content = "".join(part.get("text", "") for part in content if isinstance(part, dict))
    return content or ""


class HttpBackend:
    """POSTs requests to ``{base_url}/chat/completions`` with retries."""

    def __init__(self, provider: ProviderConfig, client: Optional[httpx.Client] = None, sleep=time.sleep):
        self.provider = provider
        self.client = client or httpx.Client(timeout=provider.timeout)
        self.sleep = sleep

    def __call__(self, request: CompletionRequest) -> str:
        provider = self.provider
        url = provider.base_url.rstrip("/") + "/chat/completions"
        headers = {"Authorization": f"Bearer {provider.api_key()}"}
        last_error: Optional[Exception] = None
        rate_limited = False
        for attempt in range(provider.max_attempts):
            if attempt:
                self.sleep(provider.backoff * 2 ** (attempt - 1))
            try:
                response = self.client.post(url, json=request.payload(), headers=headers)
            except httpx.HTTPError as exc:
                last_error, rate_limited = exc, False
                _logger.warning("transport error on attempt %d: %s", attempt + 1, exc)
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"{provider.name}: HTTP {response.status_code}")
            if response.status_code == 429:
                last_error, rate_limited = LLMError("HTTP 429"), True
                continue
            if response.status_code >= 500:
                last_error, rate_limited = LLMError(f"HTTP {response.status_code}"), False
                continue
            if response.status_code >= 400:
                raise TransportError(f"{provider.name}: HTTP {response.status_code}: {response.text[:200]}")
            try:
                return _message_text(response.json())
            except ValueError as exc:
                raise TransportError(f"{provider.name}: response is not JSON") from exc
        if rate_limited:
            raise RateLimited(f"{provider.name}: still rate limited after {provider.max_attempts} attempts")
        raise TransportError(f"{provider.name}: {last_error}")


Backend = Callable[[CompletionRequest], str]


class ChatClient:
    """Cache-first completion client.

    ``backend`` is any callable taking a :class:`CompletionRequest` and
    returning response text; by default an :class:`HttpBackend` for
    ``provider``. ``calls`` counts requests that reached the backend.
    """

    def __init__(self, provider: Optional[ProviderConfig] = None, cache: Optional[ResponseCache] = None,
                 backend: Optional[Backend] = None):
        if backend is None:
            if provider is None:
                raise ValueError("need a provider or a backend")
            backend = HttpBackend(provider)
        self.provider = provider or ProviderConfig()
        self.cache = cache
        self.backend = backend
        self.calls = 0
        self._lock = threading.Lock()
        rps = self.provider.requests_per_second
        self._bucket = TokenBucket(rps) if rps else None

    def complete(self, request: CompletionRequest) -> str:
        key = request.cache_key()
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        if self._bucket is not None:
            self._bucket.acquire()
        with self._lock:
            self.calls += 1
        text = self.backend(request)
        if self.cache is not None:
            self.cache.put(key, text)
        return text

    def complete_many(self, requests: Sequence[CompletionRequest]) -> list[str]:
        workers = max(1, self.provider.max_concurrency)
        if workers == 1 or len(requests) <= 1:
            return [self.complete(r) for r in requests]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.complete, requests))


@dataclass(frozen=True)
class GlossPrediction:
    gloss_line: Optional[str]
    raw: str
    refusal: bool = False
    format_error: bool = False

    def __post_init__(self):
        if (self.gloss_line is not None) + self.refusal + self.format_error != 1:
            raise ValueError("exactly one of gloss_line, refusal, format_error must hold")

    @property
    def ok(self) -> bool:
        return self.gloss_line is not None


_GLOSSLIST_LEAD = GLOSSLIST_INSTRUCTION.split(".")[0]
_GLOSS_LINE = re.compile(r"^\s*glosses:(.*)$", re.IGNORECASE)


def parse_gloss_line(raw: str) -> GlossPrediction:
    """Pull the first ``Glosses:`` line out of a model response."""
    if not raw.strip():
        return GlossPrediction(None, raw, refusal=True)
    for line in raw.splitlines():
        match = _GLOSS_LINE.match(line)
        if match:
            gloss = match.group(1).strip()
            if gloss:
                return GlossPrediction(gloss, raw)
            break
    return GlossPrediction(None, raw, format_error=True)


# ---------------------------------------------------------------------------
# Offline backends


def _request_rng(request: CompletionRequest) -> random.Random:
    return random.Random(int(request.cache_key()[:16], 16))


def _target_transcription(user: str) -> str:
    lines = [line for line in user.splitlines() if line.startswith("Transcription:")]
    return lines[-1][len("Transcription:"):].strip() if lines else ""


class EchoMock:
    """Answers with a few-shot ``Glosses:`` line from the prompt (the last one by default)."""

    def __init__(self, which: str = "last"):
        if which not in ("first", "last"):
            raise ValueError("which must be 'first' or 'last'")
        self.which = which

    def __call__(self, request: CompletionRequest) -> str:
        lines = [line for line in request.user.splitlines() if _GLOSS_LINE.match(line)]
        if not lines:
            return "I am unable to gloss this example without examples."
        return lines[-1] if self.which == "last" else lines[0]


class LabelMock:
    """Emits one gloss word per target word, ``stem-LABEL-...``.

    With a gloss list, functional labels are drawn from it (a model that
    always follows the list). Without one, a list found in the system
    prompt is obeyed instead when ``follow_prompt`` is set; otherwise
    labels are random uppercase strings, only some of which happen to be
    real.
    """

    def __init__(self, glosslist: Optional[GlossList] = None, noise_labels: Sequence[str] = (),
                 max_affixes: int = 2, follow_prompt: bool = True):
        self.glosslist = glosslist
        self.follow_prompt = follow_prompt
        self.noise_labels = list(noise_labels)
        self.max_affixes = max_affixes

    def _allowed(self, request: CompletionRequest) -> Sequence[str]:
        if self.glosslist is not None:
            return self.glosslist.entries
        if self.follow_prompt:
            _, found, tail = request.system.partition(_GLOSSLIST_LEAD)
            if found:
                paragraphs = [p for p in tail.split("\n\n") if p.strip()]
                if len(paragraphs) >= 2:
                    return [e.strip() for e in paragraphs[-1].split(", ") if e.strip()]
        return ()

    def _label(self, rng: random.Random, allowed: Sequence[str]) -> str:
        if allowed:
            return rng.choice(list(allowed))
        pool = self.noise_labels
        if pool and rng.random() < 0.5:
            return rng.choice(pool)
        return "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ") for _ in range(rng.randint(2, 4)))

    def __call__(self, request: CompletionRequest) -> str:
        rng = _request_rng(request)
        words = tokenize_words(_target_transcription(request.user)) or ["x"]
        allowed = self._allowed(request)
        glossed = []
        for _ in words:
            morphs = ["stem"] + [self._label(rng, allowed) for _ in range(rng.randint(1, self.max_affixes))]
            glossed.append("-".join(morphs))
        return "Glosses: " + " ".join(glossed)
