"""HTTP client for chat-completions endpoints, plus agents backed by it.

Requests follow the widely adopted chat-completions JSON schema: a messages
array with optional image content parts, model name, temperature. The API key
is read from a named environment variable and never written to logs.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import httpx

from ..pddl import GroundAtom


class ConfigurationError(Exception):
    """The endpoint configuration is unusable before any request is made."""


class EndpointError(Exception):
    """The endpoint kept failing after the configured retries."""


@dataclass(frozen=True)
class ChatEndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "CHAT_API_KEY"
    temperature: float = 0.0  # deterministic decoding by default
    max_tokens: int = 1024
    timeout: float = 60.0
    retries: int = 2
    backoff: float = 1.0
    in_flight_cap: int = 4

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ConfigurationError(f"environment variable {self.api_key_env!r} is not set")
        return key


def image_part(image_bytes: bytes, media_type: str = "image/png") -> dict:
    encoded = base64.b64encode(image_bytes).decode("ascii")
    return {"type": "image_url", "image_url": {"url": f"data:{media_type};base64,{encoded}"}}


def text_part(text: str) -> dict:
    return {"type": "text", "text": text}


def _redact(payload: dict) -> dict:
    clone = dict(payload)
    clone.pop("api_key", None)
    return clone


class _AuditLog:
    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()

    def write(self, entry: dict) -> None:
        if self.path is None:
            return
        line = json.dumps(entry, sort_keys=True)
        with self._lock:
            with open(self.path, "a") as handle:
                handle.write(line + "\n")


def chat_request(
    cfg: ChatEndpointConfig,
    messages: Sequence[dict],
    *,
    transport: httpx.BaseTransport | None = None,
    log_path: str | Path | None = None,
    metadata: dict | None = None,
    sleep=time.sleep,
) -> str:
    """Send one completion request and return the assistant text.

    Retries transient failures (connection errors, 5xx) with backoff; raises
    EndpointError once the retry budget is spent. The full exchange is logged
    to ``log_path`` as JSONL with the key redacted.
    """
    key = cfg.api_key()  # fail fast before any network activity
    payload = {
        "model": cfg.model,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "messages": list(messages),
    }
    audit = _AuditLog(log_path)
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    last_error: Exception | None = None
    with httpx.Client(transport=transport, timeout=cfg.timeout) as client:
        for attempt in range(cfg.retries + 1):
            if attempt > 0:
                sleep(cfg.backoff * attempt)
            try:
                response = client.post(url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                last_error = exc
                audit.write({"event": "transport-error", "attempt": attempt, "error": str(exc)})
                continue
            if response.status_code >= 500:
                last_error = EndpointError(f"server returned {response.status_code}")
                audit.write({"event": "server-error", "attempt": attempt, "status": response.status_code})
                continue
            if response.status_code != 200:
                audit.write({"event": "client-error", "status": response.status_code, "body": response.text})
                raise EndpointError(f"endpoint returned {response.status_code}: {response.text[:200]}")
            try:
                body = response.json()
                text = body["choices"][0]["message"]["content"]
            except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
                raise EndpointError(f"malformed response body: {exc}") from exc
            entry = {
                "event": "completion",
                "attempt": attempt,
                "request": _redact(payload),
                "response_text": text,
            }
            if metadata:
                entry.update(metadata)
            audit.write(entry)
            return text
    raise EndpointError(f"request failed after {cfg.retries + 1} attempts: {last_error}")


def _message_payload(prompt_messages, question_suffix_image: bytes | None = None) -> list[dict]:
    payload = []
    for message in prompt_messages:
        if message.image_ref is None and question_suffix_image is None:
            payload.append({"role": message.role, "content": message.text})
        else:
            parts = [text_part(message.text)]
            if question_suffix_image is not None and message.role == "user":
                parts.append(image_part(question_suffix_image))
                question_suffix_image = None
            payload.append({"role": message.role, "content": parts})
    return payload


class ChatAnswerer:
    """Grounding answerer backed by a chat endpoint.

    ``image_provider`` returns PNG bytes for the current observation; when
    absent the textual scene description substitutes and the exchange is
    logged with modality "text".
    """

    def __init__(
        self,
        cfg: ChatEndpointConfig,
        kind: str,
        cot: bool = False,
        *,
        image_provider: Callable[[], bytes] | None = None,
        transport: httpx.BaseTransport | None = None,
        log_path: str | Path | None = None,
        prompts_dir: str | None = None,
    ):
        from ..protocol import fill_template, load_prompt

        self.cfg = cfg
        self.cot = cot
        self._template = load_prompt("grounder", kind, cot, prompts_dir)
        self._fill = fill_template
        self._image_provider = image_provider
        self._transport = transport
        self._log_path = log_path
        self._semaphore = threading.Semaphore(cfg.in_flight_cap)

    def answer(self, question: str, atom: GroundAtom, observation) -> str:
        image = self._image_provider() if self._image_provider else None
        messages = self._fill(
            self._template,
            image_text="" if image is not None else observation.description,
            question=question,
        )
        with self._semaphore:
            return chat_request(
                self.cfg,
                _message_payload(messages, image),
                transport=self._transport,
                log_path=self._log_path,
                metadata={"modality": "image" if image is not None else "text"},
            )


class ChatPlanAgent:
    """Plan-proposal agent backed by a chat endpoint."""

    def __init__(
        self,
        cfg: ChatEndpointConfig,
        kind: str,
        cot: bool = False,
        *,
        image_provider: Callable[[], bytes] | None = None,
        transport: httpx.BaseTransport | None = None,
        log_path: str | Path | None = None,
        prompts_dir: str | None = None,
    ):
        from ..protocol import fill_template, load_prompt, previous_actions_text

        self.cfg = cfg
        self.cot = cot
        self._template = load_prompt("planner", kind, cot, prompts_dir)
        self._fill = fill_template
        self._previous = previous_actions_text
        self._image_provider = image_provider
        self._transport = transport
        self._log_path = log_path
        self._semaphore = threading.Semaphore(cfg.in_flight_cap)

    def propose(self, context) -> str:
        image = self._image_provider() if self._image_provider else None
        image_text = "" if image is not None else context.description
        if context.parse_error:
            image_text = f"{image_text}\n\n{context.parse_error}"
        messages = self._fill(
            self._template,
            image_text=image_text,
            goal_string=context.goal_string,
            previous_actions=self._previous(list(context.previous_actions)),
            privileged_info=context.privileged,
        )
        with self._semaphore:
            return chat_request(
                self.cfg,
                _message_payload(messages, image),
                transport=self._transport,
                log_path=self._log_path,
                metadata={"modality": "image" if image is not None else "text"},
            )
