"""Chat-completion providers.

All model interactions (generation, style judging, feedback translation)
go through one ``complete(request)`` interface. Two implementations:
an HTTP client for a local Ollama-compatible server, and a fully
deterministic scripted provider for tests and offline runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import httpx

from .errors import ProviderError, ScriptExhaustedError

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model_name: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.7
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "messages",
            tuple(
                m if isinstance(m, ChatMessage) else ChatMessage(**m)
                for m in self.messages
            ),
        )
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be system or user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    provider_id: str
    latency_ms: int = 0


class ChatProvider(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class OllamaProvider:
    """Pure transport to an Ollama-compatible ``/api/chat`` endpoint.

    Never interprets narrative semantics; retries transient transport
    failures with exponential backoff.
    """

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        timeout: float = 60.0,
        retries: int = 3,
        backoff_base: float = 0.25,
        client: httpx.Client | None = None,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.retries = max(1, retries)
        self.backoff_base = backoff_base
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleeper

    @property
    def provider_id(self) -> str:
        return f"ollama:{self.endpoint}"

    def complete(self, request: ChatRequest) -> ChatResponse:
        options: dict = {"temperature": request.temperature, "num_predict": request.max_tokens}
        if request.seed is not None:
            options["seed"] = request.seed
        payload = {
            "model": self.model or request.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "options": options,
            "stream": False,
        }
        last_error: Exception | None = None
        for attempt in range(self.retries):
            started = time.monotonic()
            try:
                response = self._client.post(f"{self.endpoint}/api/chat", json=payload)
                response.raise_for_status()
                data = response.json()
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_error = exc
                if attempt + 1 < self.retries:
                    self._sleep(self.backoff_base * (2**attempt))
                continue
            except ValueError as exc:
                raise ProviderError(f"malformed provider payload: {exc}") from exc
            try:
                content = data["message"]["content"]
            except (KeyError, TypeError) as exc:
                raise ProviderError("malformed provider payload: missing message.content") from exc
            latency = int((time.monotonic() - started) * 1000)
            return ChatResponse(content=content, provider_id=self.provider_id, latency_ms=latency)
        raise ProviderError(
            f"transport error after {self.retries} attempts: {last_error}"
        ) from last_error

    def close(self) -> None:
        self._client.close()


@dataclass
class ScriptedProvider:
    """Deterministic FIFO script of replies, with optional injected faults.

    ``fault_schedule`` maps 0-based call indices to error messages; a
    faulted call raises without consuming a reply.
    """

    replies: list[str] = field(default_factory=list)
    fault_schedule: dict[int, str] = field(default_factory=dict)
    provider_id: str = "scripted"
    calls: int = 0
    request_log: list[ChatRequest] = field(default_factory=list)

    def complete(self, request: ChatRequest) -> ChatResponse:
        index = self.calls
        self.calls += 1
        self.request_log.append(request)
        if index in self.fault_schedule:
            raise ProviderError(self.fault_schedule[index] or f"injected fault at call {index}")
        if not self.replies:
            raise ScriptExhaustedError("script exhausted")
        content = self.replies.pop(0)
        return ChatResponse(content=content, provider_id=self.provider_id, latency_ms=0)


def mock_with_script(
    replies: Sequence[str] | None = None,
    fault_schedule: Iterable[int] | dict[int, str] | None = None,
) -> ScriptedProvider:
    """Build a scripted provider; at least one reply or fault required."""
    replies = list(replies or [])
    if isinstance(fault_schedule, dict):
        faults = {int(k): v for k, v in fault_schedule.items()}
    else:
        faults = {int(i): "" for i in (fault_schedule or [])}
    if not replies and not faults:
        raise ValueError("script needs replies or a fault schedule")
    return ScriptedProvider(replies=replies, fault_schedule=faults)
