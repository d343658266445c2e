"""Caption providers: a remote HTTP endpoint and an offline fixture reader."""

from __future__ import annotations

import base64
import os
import threading
import time
from pathlib import Path

import requests

from .errors import ImageUnresolvable, ProviderTransientError, ProviderUnavailable
from .prompts import ComposedQuery

RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class CaptionProvider:
    """Interface: turn (query, rendered prompt) into raw response text."""

    provider_id: str

    def complete(self, query: ComposedQuery, prompt_text: str) -> str:
        raise NotImplementedError


class FixtureProvider(CaptionProvider):
    """Reads canned responses from a directory keyed by query_id.

    Looks for <dir>/<query_id>.txt (raw response as the model would have
    produced it). Deterministic and offline; the whole test suite runs on it.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.provider_id = "fixture"
        self.calls = 0

    def complete(self, query: ComposedQuery, prompt_text: str) -> str:
        self.calls += 1
        path = self.directory / f"{query.query_id}.txt"
        if not path.is_file():
            raise ProviderUnavailable(f"no fixture response for query {query.query_id!r}")
        return path.read_text()


class HttpProvider(CaptionProvider):
    """OpenAI-style chat-completions client with rate limiting.

    Endpoint, model, key variable, timeout, and temperature all come from
    config; nothing is hard-coded. One call per complete(); retry/backoff is
    the caller's job so fixture and HTTP providers share one policy.
    """

    def __init__(
        self,
        endpoint: str,
        api_key_env: str,
        model: str,
        timeout: float = 60.0,
        temperature: float = 0.0,
        min_interval: float = 0.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.model = model
        self.timeout = timeout
        self.temperature = temperature
        self.min_interval = min_interval
        self.provider_id = f"http:{model}"
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self._last_call = 0.0

    def _throttle(self) -> None:
        if self.min_interval <= 0:
            return
        with self._lock:
            wait = self._last_call + self.min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()

    def _image_payload(self, query: ComposedQuery) -> dict:
        path = Path(query.reference_image)
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise ImageUnresolvable(f"{query.query_id}: cannot read {path} ({e})") from e
        suffix = path.suffix.lstrip(".").lower() or "png"
        url = f"data:image/{suffix};base64," + base64.b64encode(raw).decode("ascii")
        return {"type": "image_url", "image_url": {"url": url}}

    def complete(self, query: ComposedQuery, prompt_text: str) -> str:
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise ProviderUnavailable(f"environment variable {self.api_key_env} is not set")
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt_text},
                        self._image_payload(query),
                    ],
                }
            ],
        }
        self._throttle()
        try:
            resp = self._session.post(
                self.endpoint,
                json=body,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout,
            )
        except (requests.Timeout, requests.ConnectionError) as e:
            raise ProviderTransientError(str(e)) from e
        if resp.status_code in RETRYABLE_STATUS:
            raise ProviderTransientError(f"HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ProviderUnavailable(f"malformed provider response: {e}") from e
