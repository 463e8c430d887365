"""Uniform gateway to LLM/VLM backends: templating, routing, retries, mocks.

Mock backends use endpoint "mock:<table>" and resolve prompts by hash lookup
into a canned-response table, so every stage can run fully offline.
"""

from __future__ import annotations

import hashlib
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources

import requests

from .errors import (ExhaustedRetries, MissingSlot, NoEligibleBackend, Timeout,
                     TransportError)

logger = logging.getLogger(__name__)

_LATENCY_ORDER = {"fast": 0, "standard": 1, "slow": 2}
_SLOT_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

TOKEN_WORD_FACTOR = 1.3    # crude words -> tokens estimate, routing headroom only
CONTEXT_HEADROOM = 1.2


@dataclass(frozen=True)
class BackendSpec:
    name: str
    kind: str                       # llm | vlm | tts
    endpoint: str
    context_limit_tokens: int
    latency_class: str = "standard"  # fast | standard | slow
    priority: int = 10               # lower wins for high-complexity work
    auth_env: str | None = None

    @property
    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock:")


@dataclass(frozen=True)
class RoutingRequest:
    role: str                        # outline | edits | narration | quiz | subjective
    token_estimate: int
    complexity: str = "low"          # low | high
    latency_budget: str = "standard"


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str


@dataclass(frozen=True)
class Completion:
    text: str
    backend_name: str
    latency_ms: float
    attempt_count: int


@dataclass(frozen=True)
class CallOptions:
    max_tokens: int = 1024
    temperature: float = 0.0
    timeout_s: float = 60.0
    max_attempts: int = 3
    backoff_base_s: float = 1.0


@dataclass
class CallRecord:
    backend_name: str
    mock: bool
    attempt_count: int


def estimate_tokens(text: str) -> int:
    return int(len(text.split()) * TOKEN_WORD_FACTOR)


def load_template(template_id: str) -> PromptTemplate:
    body = (resources.files("slidecast.data.prompts") / f"{template_id}.txt").read_text("utf-8")
    return PromptTemplate(id=template_id, body=body)


def render_prompt(template: PromptTemplate, slots: dict[str, str]) -> str:
    names = set(_SLOT_RE.findall(template.body))
    unbound = sorted(names - set(slots))
    if unbound:
        raise MissingSlot(f"template {template.id}: unbound slots {unbound}")
    return _SLOT_RE.sub(lambda m: str(slots[m.group(1)]), template.body)


def route(request: RoutingRequest, backends: list[BackendSpec]) -> BackendSpec:
    """Filter by kind, context headroom, and latency budget, then select.

    High complexity picks the most capable backend (lowest priority number);
    low complexity picks the fastest latency class. Ties break on name.
    """
    kind = "vlm" if request.role in ("quiz", "subjective") else "llm"
    budget = _LATENCY_ORDER[request.latency_budget]
    survivors = [b for b in backends
                 if b.kind == kind
                 and b.context_limit_tokens >= request.token_estimate * CONTEXT_HEADROOM
                 and _LATENCY_ORDER[b.latency_class] <= budget]
    if not survivors:
        raise NoEligibleBackend(
            f"no {kind} backend fits role={request.role} "
            f"tokens={request.token_estimate} budget={request.latency_budget}")
    if request.complexity == "high":
        return min(survivors, key=lambda b: (b.priority, b.name))
    return min(survivors, key=lambda b: (_LATENCY_ORDER[b.latency_class], b.name))


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class MockTable:
    """Canned completions keyed by prompt hash, with optional regex rules."""

    def __init__(self) -> None:
        self._by_hash: dict[str, str | list[str]] = {}
        self._rules: list[tuple[re.Pattern, str]] = []
        self._hits: dict[str, int] = {}

    def add(self, prompt: str, text: str | list[str]) -> None:
        self._by_hash[prompt_hash(prompt)] = text

    def add_rule(self, pattern: str, text: str) -> None:
        self._rules.append((re.compile(pattern, re.DOTALL), text))

    def lookup(self, prompt: str) -> str | None:
        key = prompt_hash(prompt)
        entry = self._by_hash.get(key)
        if entry is not None:
            if isinstance(entry, list):   # sequential responses for retry tests
                n = self._hits.get(key, 0)
                self._hits[key] = n + 1
                return entry[min(n, len(entry) - 1)]
            return entry
        for pattern, text in self._rules:
            if pattern.search(prompt):
                return text
        return None


class ModelGateway:
    """Routes and transports completion calls; thread-safe, bounded in flight."""

    def __init__(self, backends: list[BackendSpec],
                 mock_tables: dict[str, MockTable] | None = None,
                 max_in_flight: int = 4,
                 sleep=time.sleep,
                 transport=None) -> None:
        self.backends = list(backends)
        self.mock_tables = mock_tables or {}
        self.call_log: list[CallRecord] = []
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._log_lock = threading.Lock()
        self._sleep = sleep
        self._transport = transport or self._http_transport

    def ask(self, role: str, prompt: str, complexity: str = "low",
            latency_budget: str = "standard",
            opts: CallOptions | None = None) -> Completion:
        request = RoutingRequest(role=role, token_estimate=estimate_tokens(prompt),
                                 complexity=complexity, latency_budget=latency_budget)
        backend = route(request, self.backends)
        return self.complete(backend, prompt, opts)

    def complete(self, backend: BackendSpec, prompt: str,
                 opts: CallOptions | None = None) -> Completion:
        opts = opts or CallOptions()
        if backend.is_mock:
            return self._complete_mock(backend, prompt)

        start = time.monotonic()
        last_exc: Exception | None = None
        for attempt in range(1, opts.max_attempts + 1):
            try:
                with self._sem:
                    text = self._transport(backend, prompt, opts)
                self._record(backend, mock=False, attempts=attempt)
                return Completion(text=text, backend_name=backend.name,
                                  latency_ms=(time.monotonic() - start) * 1000.0,
                                  attempt_count=attempt)
            except TransportError as exc:
                last_exc = exc
                logger.warning("backend %s attempt %d failed: %s", backend.name, attempt, exc)
                if attempt < opts.max_attempts:
                    self._sleep(opts.backoff_base_s * 2 ** (attempt - 1))
        self._record(backend, mock=False, attempts=opts.max_attempts)
        raise ExhaustedRetries(f"backend {backend.name} failed "
                               f"{opts.max_attempts} attempts: {last_exc}")

    def _complete_mock(self, backend: BackendSpec, prompt: str) -> Completion:
        table_name = backend.endpoint.split(":", 1)[1] or "default"
        table = self.mock_tables.get(table_name)
        text = table.lookup(prompt) if table else None
        self._record(backend, mock=True, attempts=1)
        if text is None:
            # deterministic miss: no point retrying, let callers fall back
            raise ExhaustedRetries(f"mock table {table_name!r} has no canned "
                                   f"response for prompt hash {prompt_hash(prompt)[:12]}")
        return Completion(text=text, backend_name=backend.name,
                          latency_ms=0.0, attempt_count=1)

    def _record(self, backend: BackendSpec, mock: bool, attempts: int) -> None:
        with self._log_lock:
            self.call_log.append(CallRecord(backend.name, mock, attempts))

    @staticmethod
    def _http_transport(backend: BackendSpec, prompt: str, opts: CallOptions) -> str:
        import os
        headers = {}
        if backend.auth_env and os.environ.get(backend.auth_env):
            headers["Authorization"] = f"Bearer {os.environ[backend.auth_env]}"
        body = {"prompt": prompt, "max_tokens": opts.max_tokens,
                "temperature": opts.temperature}
        try:
            resp = requests.post(backend.endpoint, json=body, headers=headers,
                                 timeout=opts.timeout_s)
        except requests.Timeout as exc:
            raise Timeout(f"{backend.name}: {exc}") from exc
        except requests.RequestException as exc:
            raise TransportError(f"{backend.name}: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"{backend.name}: HTTP {resp.status_code}")
        try:
            return resp.json()["text"]
        except (ValueError, KeyError) as exc:
            raise TransportError(f"{backend.name}: malformed response body") from exc


def mock_backends() -> list[BackendSpec]:
    """Offline backend set covering every kind, all resolving from table 'default'."""
    return [
        BackendSpec("mock-llm", "llm", "mock:default", 128_000, "fast", 1),
        BackendSpec("mock-vlm", "vlm", "mock:default", 128_000, "fast", 1),
        BackendSpec("mock-tts", "tts", "mock:default", 128_000, "fast", 1),
    ]
