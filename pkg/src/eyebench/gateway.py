"""Uniform LLM backend client: temperature-0 chat completions with retries,
a per-backend rate limiter, and a content-addressed response cache.

Backends whose endpoint starts with "mock:" are served by a deterministic
in-process generator, so desk-scale runs need no network at all.
"""

import hashlib
import json
import logging
import os
import random
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .storage import atomic_write_text, canonical_json

log = logging.getLogger(__name__)


class GatewayError(Exception):
    pass


class AuthMissing(GatewayError):
    """The configured auth environment variable is unset."""


class RateLimitExhausted(GatewayError):
    """Retries ran out while the backend kept rate-limiting us."""


class BackendError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend error {status}: {body[:200]}")
        self.status = status
        self.body = body


@dataclass
class BackendConfig:
    model_id: str
    endpoint_url: str
    auth_env_var: str = ""
    max_retries: int = 3
    requests_per_minute: int = 60
    timeout_seconds: float = 60.0
    default_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.requests_per_minute < 1:
            raise ValueError("requests_per_minute must be >= 1")
        self.default_params.setdefault("temperature", 0)


@dataclass(frozen=True)
class RawResponse:
    request_digest: str
    text: str
    latency_ms: float
    cached: bool
    timestamp: float

    def to_record(self) -> dict:
        return {
            "request_digest": self.request_digest,
            "text": self.text,
            "latency_ms": self.latency_ms,
            "cached": self.cached,
            "timestamp": self.timestamp,
        }


def request_digest(model_id: str, prompt: str, params: dict) -> str:
    """Content hash of the full request; the cache key."""
    payload = canonical_json({"model": model_id, "prompt": prompt, "params": params})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Content-addressed response files; writes are temp-then-rename atomic."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> RawResponse | None:
        path = self._path(digest)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as f:
            rec = json.load(f)
        return RawResponse(
            request_digest=rec["request_digest"],
            text=rec["text"],
            latency_ms=rec["latency_ms"],
            cached=True,
            timestamp=rec["timestamp"],
        )

    def put(self, response: RawResponse) -> None:
        with self._lock:
            atomic_write_text(self._path(response.request_digest),
                              canonical_json(response.to_record()))


class RateLimiter:
    """Sliding-window limiter: at most `per_minute` acquisitions per 60 s."""

    def __init__(self, per_minute: int, clock=time.monotonic, sleeper=time.sleep):
        self.per_minute = per_minute
        self.clock = clock
        self.sleeper = sleeper
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.per_minute:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self.sleeper(max(wait, 0.001))


# ---------------------------------------------------------------------------
# Transports: (backend, prompt, params) -> (status_code, text_or_error_body)

_MCQ_TAIL = "Please answer with A, B, C, or D only."


def _stable_int(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def mock_completion(model_id: str, prompt: str) -> str:
    """Deterministic stand-in completion.

    MCQ prompts get a letter; free-form prompts get a degraded echo of the
    prompt tail, with the degradation rate derived from the model id so mock
    models differ in apparent quality.
    """
    seed = _stable_int(f"{model_id}\x00{prompt}")
    rng = random.Random(seed)
    if _MCQ_TAIL in prompt:
        return rng.choice(["A", "B", "C", "D", "The correct answer is A.",
                           "B. I believe this is right.", "I'm not sure."])
    body = prompt.split("\n\n", 1)[-1]
    words = body.split()
    keep = 1.0 - 0.08 * (1 + _stable_int(model_id) % 5)
    kept = [w for w in words if rng.random() < keep]
    if not kept:
        kept = words[:3] or ["response"]
    return " ".join(kept[:80])


def _mock_transport(backend: BackendConfig, prompt: str, params: dict):
    return 200, mock_completion(backend.model_id, prompt)


def _http_transport(backend: BackendConfig, prompt: str, params: dict):
    headers = {"Content-Type": "application/json"}
    if backend.auth_env_var:
        headers["Authorization"] = f"Bearer {os.environ[backend.auth_env_var]}"
    payload = {
        "model": backend.model_id,
        "messages": [{"role": "user", "content": prompt}],
        **params,
    }
    resp = requests.post(backend.endpoint_url, json=payload, headers=headers,
                         timeout=backend.timeout_seconds)
    if resp.status_code != 200:
        return resp.status_code, resp.text
    data = resp.json()
    return 200, data["choices"][0]["message"]["content"]


TRANSIENT_STATUSES = {429, 500, 502, 503, 504}


def complete(backend: BackendConfig, prompt: str, *, cache: ResponseCache | None = None,
             limiter: RateLimiter | None = None, transport=None, extra_params=None,
             sleeper=time.sleep) -> RawResponse:
    """One completion with cache lookup, rate limiting, and retry/backoff."""
    if not prompt:
        raise ValueError("prompt must be non-empty")
    params = dict(backend.default_params)
    if extra_params:
        params.update(extra_params)
    digest = request_digest(backend.model_id, prompt, params)

    if cache is not None:
        hit = cache.get(digest)
        if hit is not None:
            return hit

    if transport is None:
        transport = _mock_transport if backend.endpoint_url.startswith("mock:") else _http_transport
    if transport is _http_transport and backend.auth_env_var and \
            not os.environ.get(backend.auth_env_var):
        raise AuthMissing(f"environment variable {backend.auth_env_var} is not set")

    last_status, last_body = None, ""
    for attempt in range(backend.max_retries + 1):
        if limiter is not None:
            limiter.acquire()
        started = time.monotonic()
        try:
            status, body = transport(backend, prompt, params)
        except requests.RequestException as exc:
            status, body = -1, str(exc)
        latency_ms = (time.monotonic() - started) * 1000.0
        if status == 200:
            response = RawResponse(
                request_digest=digest,
                text=body,
                latency_ms=latency_ms,
                cached=False,
                timestamp=time.time(),
            )
            if cache is not None:
                cache.put(response)
            return response
        last_status, last_body = status, body
        if status not in TRANSIENT_STATUSES and status != -1:
            raise BackendError(status, body)
        if attempt < backend.max_retries:
            sleeper(min(0.5 * 2 ** attempt, 30.0))
    if last_status == 429:
        raise RateLimitExhausted(
            f"{backend.model_id}: rate limited after {backend.max_retries} retries")
    raise BackendError(last_status if last_status is not None else -1, last_body)


def batch_complete(backend: BackendConfig, prompts, max_in_flight: int = 4, *,
                   cache: ResponseCache | None = None, limiter: RateLimiter | None = None,
                   transport=None, sleeper=time.sleep) -> list:
    """Complete many prompts; results align with `prompts` index-for-index.

    A failed prompt contributes its GatewayError at that index instead of
    aborting the batch. One shared limiter keeps the backend's global rate.
    """
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")

    def run_one(prompt):
        try:
            return complete(backend, prompt, cache=cache, limiter=limiter,
                            transport=transport, sleeper=sleeper)
        except GatewayError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(run_one, prompts))
