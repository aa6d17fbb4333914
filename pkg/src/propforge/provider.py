"""Chat-completion providers: an OpenAI-compatible HTTP client and an offline
mock that replays canned responses keyed by a hash of the serialized prompt.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

DEFAULT_CONCURRENCY = 4


class ProviderError(Exception):
    """Transport, HTTP, or fixture-lookup failure."""


@dataclass(frozen=True)
class Attachment:
    """Binary payload carried alongside a message (screenshots, crops)."""

    name: str
    media_type: str
    data: bytes

    def digest(self) -> str:
        return hashlib.sha256(self.data).hexdigest()


@dataclass(frozen=True)
class Message:
    role: str
    text: str
    attachments: tuple[Attachment, ...] = ()


def serialize_messages(messages: list[Message] | tuple[Message, ...]) -> str:
    """Canonical textual form of a prompt, stable across runs.

    Attachments are represented by name, type, size, and content hash rather
    than raw bytes so the serialization stays printable and diff-friendly.
    """
    parts: list[str] = []
    for msg in messages:
        parts.append(f"=== {msg.role} ===")
        parts.append(msg.text)
        for att in msg.attachments:
            parts.append(
                f"[attachment {att.name}: {att.media_type} "
                f"{len(att.data)} bytes sha256={att.digest()}]"
            )
    return "\n".join(parts) + "\n"


def prompt_key(messages: list[Message] | tuple[Message, ...]) -> str:
    """Fixture-map key: SHA-256 of the serialized prompt."""
    return hashlib.sha256(serialize_messages(messages).encode("utf-8")).hexdigest()


class ChatProvider(Protocol):
    def complete(self, messages: list[Message], *, temperature: float = 0.0) -> str:
        ...


class OpenAIChatProvider:
    """Client for any chat-completions endpoint speaking the OpenAI schema.

    Configuration comes from the environment only:
      PF_LLM_BASE_URL   e.g. https://api.example.com/v1
      PF_LLM_API_KEY    bearer token
      PF_LLM_MODEL      model for text-only prompts
      PF_MLLM_MODEL     model used when a prompt carries image attachments
    """

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model: str,
        mllm_model: Optional[str] = None,
        timeout: float = 120.0,
        max_transport_retries: int = 2,
        retry_sleep: float = 1.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.mllm_model = mllm_model or model
        self.timeout = timeout
        self.max_transport_retries = max_transport_retries
        self.retry_sleep = retry_sleep

    @classmethod
    def from_env(cls) -> "OpenAIChatProvider":
        base_url = os.environ.get("PF_LLM_BASE_URL", "")
        api_key = os.environ.get("PF_LLM_API_KEY", "")
        model = os.environ.get("PF_LLM_MODEL", "")
        if not base_url or not model:
            raise ProviderError(
                "provider not configured: set PF_LLM_BASE_URL and PF_LLM_MODEL "
                "(and PF_LLM_API_KEY if the endpoint needs one)"
            )
        return cls(base_url, api_key, model, os.environ.get("PF_MLLM_MODEL"))

    def _payload(self, messages: list[Message], temperature: float) -> dict:
        has_images = any(m.attachments for m in messages)
        wire_messages = []
        for msg in messages:
            if not msg.attachments:
                wire_messages.append({"role": msg.role, "content": msg.text})
                continue
            content: list[dict] = [{"type": "text", "text": msg.text}]
            for att in msg.attachments:
                b64 = base64.b64encode(att.data).decode("ascii")
                content.append(
                    {
                        "type": "image_url",
                        "image_url": {"url": f"data:{att.media_type};base64,{b64}"},
                    }
                )
            wire_messages.append({"role": msg.role, "content": content})
        return {
            "model": self.mllm_model if has_images else self.model,
            "temperature": temperature,
            "messages": wire_messages,
        }

    def complete(self, messages: list[Message], *, temperature: float = 0.0) -> str:
        import requests

        payload = self._payload(messages, temperature)
        url = f"{self.base_url}/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Optional[str] = None
        for attempt in range(self.max_transport_retries + 1):
            if attempt and self.retry_sleep:
                time.sleep(self.retry_sleep * attempt)
            try:
                resp = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code >= 500:
                last_error = f"server error HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            try:
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProviderError(f"unexpected response shape: {exc}") from exc
        raise ProviderError(f"gave up after {self.max_transport_retries + 1} attempts: {last_error}")


class MockChatProvider:
    """Replays canned responses from fixture files.

    Fixtures are JSON objects mapping prompt_key hex strings to response
    strings; multiple files merge into one read-only map.  Unknown prompts
    raise ProviderError so fixture drift fails loudly instead of silently.
    """

    def __init__(self, fixtures: dict[str, str]):
        self._fixtures = dict(fixtures)
        self.calls: list[str] = []

    @classmethod
    def from_dir(cls, path: str | Path) -> "MockChatProvider":
        merged: dict[str, str] = {}
        for file in sorted(Path(path).glob("*.json")):
            entries = json.loads(file.read_text(encoding="utf-8"))
            if not isinstance(entries, dict):
                raise ProviderError(f"fixture file {file} must hold a JSON object")
            for key, value in entries.items():
                if key in merged and merged[key] != value:
                    raise ProviderError(f"conflicting fixture entries for key {key}")
                merged[key] = value
        return cls(merged)

    def complete(self, messages: list[Message], *, temperature: float = 0.0) -> str:
        key = prompt_key(messages)
        self.calls.append(key)
        try:
            return self._fixtures[key]
        except KeyError:
            preview = serialize_messages(messages)[:300].replace("\n", " | ")
            raise ProviderError(f"no fixture for prompt key {key} ({preview}...)") from None


def concurrency_bound() -> int:
    """Worker bound for annotation/synthesis fan-out, from PF_CONCURRENCY."""
    raw = os.environ.get("PF_CONCURRENCY", "")
    try:
        value = int(raw)
    except ValueError:
        return DEFAULT_CONCURRENCY
    return value if value >= 1 else DEFAULT_CONCURRENCY
