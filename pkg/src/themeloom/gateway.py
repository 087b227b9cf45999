"""Provider-agnostic chat-completion client with a content-addressed record/replay cache.

Every model interaction in the pipeline goes through ``Gateway.complete`` so
that a run can be recorded once and replayed offline byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import requests

log = logging.getLogger(__name__)

MODES = ("live", "replay", "record")

# Smallest nucleus the request schema accepts; stands in for "top_p at zero"
# which the wire format does not allow.
TOP_P_FLOOR = 0.01

API_KEY_ENV_VARS = ("THEMELOOM_API_KEY", "OPENAI_API_KEY")

_REPAIR_SUFFIX = (
    "\n\nYour previous reply was not valid JSON. "
    "Respond again with only the valid JSON, no prose and no code fences."
)


class GatewayError(Exception):
    """Base class for gateway failures."""


class TransportError(GatewayError):
    """Network or HTTP failure that survived the retry budget."""


class CacheMissError(GatewayError):
    def __init__(self, digest: str):
        super().__init__(f"cache miss for digest {digest}")
        self.digest = digest


class MalformedOutputError(GatewayError):
    """Model output from which no JSON value could be extracted."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class FinishReason(str, Enum):
    COMPLETE = "complete"
    TRUNCATED = "truncated"
    ERROR = "error"


class Provenance(str, Enum):
    LIVE = "live"
    REPLAY = "replay"


@dataclass(frozen=True)
class GenerationParams:
    model: str
    temperature: float = 0.0
    top_p: float = TOP_P_FLOOR
    max_output_tokens: int = 4096

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p {self.top_p} outside (0, 1]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    @classmethod
    def coding_defaults(cls, model: str, **kw: Any) -> "GenerationParams":
        """Stage defaults for coding and deduplication: fully deterministic."""
        return cls(model=model, temperature=0.0, top_p=TOP_P_FLOOR, **kw)

    @classmethod
    def theming_defaults(cls, model: str, **kw: Any) -> "GenerationParams":
        """Stage defaults for theming: minimal creativity."""
        return cls(model=model, temperature=0.1, top_p=1.0, **kw)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_output_tokens": self.max_output_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationParams":
        return cls(**data)


@dataclass(frozen=True)
class ChatRequest:
    params: GenerationParams
    user_text: str
    system_text: str | None = None

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")

    def cache_key(self) -> "CacheKey":
        return CacheKey.of(self)

    def to_dict(self) -> dict:
        return {
            "model": self.params.model,
            "temperature": self.params.temperature,
            "top_p": self.params.top_p,
            "max_output_tokens": self.params.max_output_tokens,
            "system_text": self.system_text,
            "user_text": self.user_text,
        }


@dataclass(frozen=True)
class ChatResponse:
    raw_text: str
    finish_reason: FinishReason
    provenance: Provenance


@dataclass(frozen=True)
class CacheKey:
    digest: str

    @classmethod
    def of(cls, request: ChatRequest) -> "CacheKey":
        material = json.dumps(
            {
                "model": request.params.model,
                "temperature": request.params.temperature,
                "top_p": request.params.top_p,
                "system_text": request.system_text,
                "user_text": request.user_text,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return cls(hashlib.sha256(material.encode("utf-8")).hexdigest())


class ResponseCache:
    """Directory of ``<digest>.json`` files, each holding request + response."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def path_for(self, key: CacheKey) -> Path:
        return self.directory / f"{key.digest}.json"

    def get(self, key: CacheKey) -> dict | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: CacheKey, request: ChatRequest, raw_text: str, finish_reason: FinishReason) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        record = {
            "digest": key.digest,
            "request": request.to_dict(),
            "response": {"raw_text": raw_text, "finish_reason": finish_reason.value},
        }
        payload = json.dumps(record, indent=2, ensure_ascii=False) + "\n"
        # Atomic write: concurrent recorders of the same digest both land a
        # complete file, never a torn one.
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, self.path_for(key))
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)


class Gateway:
    """Chat-completion client speaking the OpenAI-compatible wire protocol.

    Modes: ``live`` calls the endpoint, ``record`` calls then caches,
    ``replay`` reads the cache and never touches the network.
    """

    def __init__(
        self,
        mode: str = "replay",
        cache_dir: str | Path | None = None,
        base_url: str = "https://api.openai.com/v1",
        api_key: str | None = None,
        timeout: float = 120.0,
        max_attempts: int = 3,
        backoff_base: float = 0.5,
        max_in_flight: int = 4,
        on_call: Callable[[dict], None] | None = None,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self.base_url = base_url.rstrip("/")
        self._api_key = api_key
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.on_call = on_call
        self._sem = threading.Semaphore(max_in_flight)
        self._counter_lock = threading.Lock()
        self.live_calls = 0

    def _resolve_key(self) -> str | None:
        if self._api_key:
            return self._api_key
        for var in API_KEY_ENV_VARS:
            value = os.environ.get(var, "").strip()
            if value:
                return value
        return None

    def complete(self, request: ChatRequest, mode: str | None = None) -> ChatResponse:
        mode = mode or self.mode
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        key = request.cache_key()

        if mode == "replay":
            if self.cache is None:
                raise GatewayError("replay mode requires a cache directory")
            record = self.cache.get(key)
            if record is None:
                raise CacheMissError(key.digest)
            response = ChatResponse(
                raw_text=record["response"]["raw_text"],
                finish_reason=FinishReason(record["response"]["finish_reason"]),
                provenance=Provenance.REPLAY,
            )
        else:
            raw_text, finish = self._post_with_retries(request)
            if mode == "record":
                if self.cache is None:
                    raise GatewayError("record mode requires a cache directory")
                self.cache.put(key, request, raw_text, finish)
            response = ChatResponse(raw_text, finish, Provenance.LIVE)

        if self.on_call is not None:
            self.on_call(
                {
                    "digest": key.digest,
                    "mode": mode,
                    "model": request.params.model,
                    "params": request.params.to_dict(),
                    "provenance": response.provenance.value,
                    "finish_reason": response.finish_reason.value,
                }
            )
        return response

    def _post_with_retries(self, request: ChatRequest) -> tuple[str, FinishReason]:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        payload = {
            "model": request.params.model,
            "messages": messages,
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "max_tokens": request.params.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = self._resolve_key()
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                with self._sem:
                    with self._counter_lock:
                        self.live_calls += 1
                    resp = requests.post(
                        f"{self.base_url}/chat/completions",
                        json=payload,
                        headers=headers,
                        timeout=self.timeout,
                    )
            except requests.RequestException as exc:
                last_error = exc
                log.warning("transport error (attempt %d/%d): %s", attempt + 1, self.max_attempts, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                log.warning("retryable HTTP %d (attempt %d/%d)", resp.status_code, attempt + 1, self.max_attempts)
                continue
            if resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                body = resp.json()
                choice = body["choices"][0]
                raw_text = choice["message"]["content"] or ""
                finish = choice.get("finish_reason", "stop")
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"unparseable completion payload: {exc}") from exc
            reason = {
                "stop": FinishReason.COMPLETE,
                "length": FinishReason.TRUNCATED,
            }.get(finish, FinishReason.COMPLETE)
            return raw_text, reason
        raise TransportError(f"request failed after {self.max_attempts} attempts: {last_error}")


_JSON_START = re.compile(r"[\[{]")


def parse_json_payload(text: str) -> Any:
    """Locate and parse the first balanced JSON object or array in text.

    Tolerates code fences, prose preambles, and trailing commentary: the scan
    tries a strict parse at every ``{`` / ``[`` from left to right and returns
    the first value that decodes.
    """
    decoder = json.JSONDecoder()
    for match in _JSON_START.finditer(text):
        try:
            value, _ = decoder.raw_decode(text, match.start())
        except ValueError:
            continue
        return value
    raise MalformedOutputError("no parseable JSON in model output", raw_text=text)


def extract_json(response: ChatResponse) -> Any:
    """Parse the first JSON value out of a completed response."""
    if response.finish_reason is not FinishReason.COMPLETE:
        raise MalformedOutputError(
            f"response not complete (finish_reason={response.finish_reason.value})",
            raw_text=response.raw_text,
        )
    return parse_json_payload(response.raw_text)


def request_json(gateway: Gateway, request: ChatRequest, mode: str | None = None) -> tuple[Any, ChatResponse]:
    """Complete a request and extract JSON, with one automatic repair retry.

    The repair retry appends a terse emit-only-JSON instruction; a second
    malformed reply fails the item so runs always terminate.
    """
    response = gateway.complete(request, mode)
    try:
        return extract_json(response), response
    except MalformedOutputError:
        log.warning("malformed model output; issuing one repair retry")
    repaired = replace(request, user_text=request.user_text + _REPAIR_SUFFIX)
    response = gateway.complete(repaired, mode)
    return extract_json(response), response
