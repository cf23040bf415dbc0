"""Chat-completion endpoints: HTTP client with retries and a deterministic mock."""

from __future__ import annotations

import hashlib
import math
import os
import random
import re
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from .records import CLASSES


class EndpointError(RuntimeError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    model_id: str = "gpt-4-1106-preview"
    temperature: float = 0.6
    max_retries: int = 5
    parallelism: int = 4
    request_timeout: float = 60.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass
class ChatExchange:
    request_messages: list[dict[str, str]]
    response_text: str
    usage: tuple[int, int]  # (input_tokens, output_tokens)
    status: str = "ok"  # ok | retried(n) | failed
    retries: int = 0


class ChatEndpoint(Protocol):
    def complete(
        self, messages: list[dict[str, str]], config: GenerationConfig
    ) -> ChatExchange: ...


def estimate_tokens(text: str) -> int:
    """Whitespace-word count x 1.3; a documented estimate, not a tokenizer."""
    return math.ceil(len(text.split()) * 1.3)


class HttpChatEndpoint:
    """Client for the de-facto chat-completions wire shape.

    Retries with exponential backoff and jitter; each request is
    self-contained, so retry is idempotent.
    """

    def __init__(self, url: str, api_key_env: str = "CMAUG_API_KEY"):
        self.url = url
        key = os.environ.get(api_key_env)
        if not key:
            raise EndpointError(
                f"API key environment variable {api_key_env} is not set; "
                "set it or run with --mock"
            )
        self._headers = {"Authorization": f"Bearer {key}"}

    def complete(self, messages, config: GenerationConfig) -> ChatExchange:
        payload = {
            "model": config.model_id,
            "messages": messages,
            "temperature": config.temperature,
        }
        last_exc: Exception | None = None
        for attempt in range(config.max_retries + 1):
            try:
                resp = httpx.post(
                    self.url,
                    json=payload,
                    headers=self._headers,
                    timeout=config.request_timeout,
                )
                resp.raise_for_status()
                body = resp.json()
                text = body["choices"][0]["message"]["content"]
                usage = body.get("usage", {})
                return ChatExchange(
                    request_messages=messages,
                    response_text=text,
                    usage=(
                        int(usage.get("prompt_tokens", 0)),
                        int(usage.get("completion_tokens", 0)),
                    ),
                    status="ok" if attempt == 0 else f"retried({attempt})",
                    retries=attempt,
                )
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last_exc = exc
                if attempt < config.max_retries:
                    delay = min(30.0, (2**attempt) * 0.5)
                    time.sleep(delay * (0.5 + random.random() / 2))
        raise EndpointError(f"request failed after {config.max_retries} retries: {last_exc}")


_BATCH_RE = re.compile(r"exactly (\d+) lines")
_TEMPLATES = {
    "positive": [
        "me encanta this {noun} so much",
        "this {noun} es increible loved it",
        "que buena vibe today feeling great",
        "best {noun} ever lo juro",
    ],
    "negative": [
        "no me gusta this {noun} at all",
        "que lata terrible {noun} today",
        "this {noun} fue horrible worst day",
        "odio waiting for the {noun}",
    ],
    "neutral": [
        "voy al store for a {noun} later",
        "the {noun} esta on the table",
        "manana tengo class about {noun}",
        "just watching el {noun} right now",
    ],
}
_NOUNS = ["movie", "cancion", "game", "partido", "cafe", "show", "libro", "playlist"]


@dataclass
class MockChatEndpoint:
    """Deterministic in-process endpoint for tests and dry runs.

    The per-request RNG is derived from (seed, request content), so output is
    reproducible regardless of call order or concurrency. A configurable
    fraction of lines is emitted without the delimiter to exercise reject
    handling.
    """

    seed: int = 0
    malformed_rate: float = 0.0
    classes: tuple[str, ...] = CLASSES
    calls: int = 0
    fail_every: int | None = None  # raise on every Nth call, for retry tests
    _counter: int = field(default=0, repr=False)

    def _rng_for(self, messages) -> random.Random:
        blob = repr((self.seed, [m["content"] for m in messages])).encode("utf-8")
        digest = hashlib.sha256(blob).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def complete(self, messages, config: GenerationConfig) -> ChatExchange:
        self.calls += 1
        if self.fail_every and self.calls % self.fail_every == 0:
            raise EndpointError("injected mock failure")
        prompt = messages[-1]["content"]
        rng = self._rng_for(messages)
        m = _BATCH_RE.search(prompt)
        if m:
            text = self._generate_batch(int(m.group(1)), rng)
        else:
            text = self._classify(prompt, rng)
        in_tokens = sum(estimate_tokens(msg["content"]) for msg in messages)
        out_tokens = estimate_tokens(text)
        return ChatExchange(
            request_messages=messages,
            response_text=text,
            usage=(in_tokens, out_tokens),
            status="ok",
        )

    def _generate_batch(self, n: int, rng: random.Random) -> str:
        lines = []
        for _ in range(n):
            label = rng.choice(self.classes)
            sentence = rng.choice(_TEMPLATES[label]).format(noun=rng.choice(_NOUNS))
            if rng.random() < self.malformed_rate:
                lines.append(sentence)  # missing delimiter -> reject
            else:
                lines.append(f"{sentence} ||| {label}")
        return "\n".join(lines)

    def _classify(self, prompt: str, rng: random.Random) -> str:
        return rng.choice(self.classes)
