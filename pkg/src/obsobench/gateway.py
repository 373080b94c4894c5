"""Inference backends (HTTP completion + deterministic stub) and the response cache."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import CacheCorrupt, ConfigError

CACHE_SCHEMA_VERSION = 1

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_EMPTY = "empty"
STATUS_CACHE_MISS = "cache_miss"  # replay-only mode, row never dispatched


def http_error_status(code: int) -> str:
    return f"http_error({code})"


def fingerprint(prompt: str) -> str:
    """Collision-resistant fingerprint of the prompt bytes."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http_completion" | "stub"
    model_id: str
    endpoint_url: str = ""
    max_new_tokens: int = 8
    request_timeout: float = 30.0
    max_retries: int = 2
    max_in_flight: int = 4
    retry_backoff: float = 0.5  # seconds, doubled per attempt
    api_key_env: str | None = None
    stub_table_path: str | None = None
    stub_default: str | None = None

    def __post_init__(self):
        if self.kind not in ("http_completion", "stub"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.max_new_tokens < 1:
            raise ConfigError("max_new_tokens must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.kind == "http_completion" and not self.endpoint_url:
            raise ConfigError("http_completion backend requires endpoint_url")


@dataclass(frozen=True)
class RawResponse:
    row_id: str | int
    model_id: str
    prompt_fingerprint: str
    completion_text: str
    transport_status: str

    @property
    def ok(self) -> bool:
        return self.transport_status == STATUS_OK


class StubBackend:
    """Table-driven fake backend keyed by prompt fingerprint.

    Tracks total and concurrent call counts so tests can assert dispatch
    behavior (cache hits, in-flight ceilings) without a network.
    """

    def __init__(self, config: BackendConfig, table: dict[str, str] | None = None,
                 default: str | None = None, delay: float = 0.0):
        self.config = config
        self.table = dict(table or {})
        self.default = default if default is not None else config.stub_default
        self.delay = delay
        self.calls = 0
        self.in_flight = 0
        self.max_observed_in_flight = 0
        self._lock = threading.Lock()
        if config.stub_table_path:
            loaded = json.loads(Path(config.stub_table_path).read_text(encoding="utf-8"))
            self.table.update(loaded.get("table", {}))
            if self.default is None:
                self.default = loaded.get("default")

    def classify(self, prompt: str, row_id: str | int = "") -> RawResponse:
        with self._lock:
            self.calls += 1
            self.in_flight += 1
            self.max_observed_in_flight = max(self.max_observed_in_flight, self.in_flight)
        try:
            if self.delay:
                time.sleep(self.delay)
            fp = fingerprint(prompt)
            text = self.table.get(fp, self.default)
            if text is None:
                return RawResponse(row_id, self.config.model_id, fp, "", STATUS_EMPTY)
            return RawResponse(row_id, self.config.model_id, fp, text, STATUS_OK)
        finally:
            with self._lock:
                self.in_flight -= 1


class HttpCompletionBackend:
    """Client for completion-style JSON-over-HTTP inference endpoints."""

    def __init__(self, config: BackendConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_env:
            key = os.environ.get(self.config.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def classify(self, prompt: str, row_id: str | int = "") -> RawResponse:
        cfg = self.config
        fp = fingerprint(prompt)
        body = {
            "model": cfg.model_id,
            "prompt": prompt,
            "max_tokens": cfg.max_new_tokens,
            "temperature": 0,
        }
        status = STATUS_TIMEOUT
        for attempt in range(cfg.max_retries + 1):
            if attempt and cfg.retry_backoff:
                time.sleep(cfg.retry_backoff * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(
                    cfg.endpoint_url,
                    json=body,
                    headers=self._headers(),
                    timeout=cfg.request_timeout,
                )
            except requests.Timeout:
                status = STATUS_TIMEOUT
                continue
            except requests.RequestException:
                status = http_error_status(0)
                continue
            if resp.status_code != 200:
                status = http_error_status(resp.status_code)
                # retry on server-side errors only
                if resp.status_code < 500:
                    break
                continue
            try:
                text = resp.json()["choices"][0]["text"]
            except (ValueError, KeyError, IndexError, TypeError):
                return RawResponse(row_id, cfg.model_id, fp, "", STATUS_EMPTY)
            if not text:
                return RawResponse(row_id, cfg.model_id, fp, "", STATUS_EMPTY)
            return RawResponse(row_id, cfg.model_id, fp, text, STATUS_OK)
        return RawResponse(row_id, cfg.model_id, fp, "", status)


def build_backend(config: BackendConfig):
    if config.kind == "stub":
        return StubBackend(config)
    return HttpCompletionBackend(config)


def classify_prompt(prompt: str, backend, row_id: str | int = "") -> RawResponse:
    """Dispatch one prompt; transport problems come back in transport_status."""
    return backend.classify(prompt, row_id=row_id)


class ResponseCache:
    """Append-only JSONL cache keyed by (model_id, prompt_fingerprint).

    Only ok-status responses are persisted; appends are serialized under a
    lock so concurrent workers can share one cache.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, str], RawResponse] = {}
        self._load()

    def _load(self):
        if not self.path.exists():
            return
        with self.path.open("r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    if doc.get("v") != CACHE_SCHEMA_VERSION:
                        raise ValueError(f"unsupported schema version {doc.get('v')!r}")
                    resp = RawResponse(
                        row_id=doc["row_id"],
                        model_id=doc["model_id"],
                        prompt_fingerprint=doc["prompt_fingerprint"],
                        completion_text=doc["completion_text"],
                        transport_status=doc["transport_status"],
                    )
                except (ValueError, KeyError, TypeError) as e:
                    raise CacheCorrupt(lineno, str(e)) from e
                self._entries[(resp.model_id, resp.prompt_fingerprint)] = resp

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, model_id: str, prompt_fingerprint: str) -> RawResponse | None:
        with self._lock:
            return self._entries.get((model_id, prompt_fingerprint))

    def put(self, response: RawResponse):
        if not response.ok:
            return
        doc = {
            "v": CACHE_SCHEMA_VERSION,
            "row_id": response.row_id,
            "model_id": response.model_id,
            "prompt_fingerprint": response.prompt_fingerprint,
            "completion_text": response.completion_text,
            "transport_status": response.transport_status,
        }
        line = json.dumps(doc, sort_keys=True)
        with self._lock:
            key = (response.model_id, response.prompt_fingerprint)
            if key in self._entries:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
            self._entries[key] = response


def cached_classify(prompt: str, backend, cache: ResponseCache,
                    row_id: str | int = "") -> RawResponse:
    """Cache-first dispatch: hits return stored responses with no network call."""
    fp = fingerprint(prompt)
    hit = cache.get(backend.config.model_id, fp)
    if hit is not None:
        return hit
    resp = classify_prompt(prompt, backend, row_id=row_id)
    cache.put(resp)
    return resp
