"""Caption generation: response parsing, persistent cache, provider driving."""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import ParseFailure, ProviderTransientError, ProviderUnavailable
from .prompts import OUTPUT_KEYS, ComposedQuery, ReasoningPrompt
from .providers import CaptionProvider

log = logging.getLogger(__name__)

REPROMPT_REMINDER = (
    "Reminder: your previous reply could not be parsed. Reply again and make"
    " sure the final line is a JSON object with exactly the two string keys"
    ' "modification_focused" and "integration_focused", both non-empty.'
)


@dataclass(frozen=True)
class CaptionPair:
    """The two generated captions plus provenance for cache keying."""

    modification_caption: str
    integration_caption: str
    reasoning_trace: str
    provider_id: str
    prompt_hash: str


def parse_response(raw: str) -> tuple[str, str, str]:
    """Extract (modification, integration, reasoning trace) from raw output.

    Tolerates prose and code-fence wrappers around the answer object. Raises
    ParseFailure with category no-object-found, missing-key, or empty-caption;
    a key holding a non-string counts as missing.
    """
    if not raw or not raw.strip():
        raise ParseFailure("no-object-found", "empty response")
    text = raw.replace("```json", "\n").replace("```", "\n")

    decoder = json.JSONDecoder()
    best = None  # (object, start index)
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict):
            if all(k in obj for k in OUTPUT_KEYS):
                best = (obj, start)
                break
            if best is None:
                best = (obj, start)
        start = text.find("{", start + 1)

    if best is None:
        raise ParseFailure("no-object-found", "no JSON object in response")
    obj, at = best
    for key in OUTPUT_KEYS:
        if key not in obj or not isinstance(obj[key], str):
            raise ParseFailure("missing-key", f"no usable {key!r} caption")
    modification, integration = (obj[k].strip() for k in OUTPUT_KEYS)
    if not modification or not integration:
        raise ParseFailure("empty-caption", "a caption is empty or whitespace")
    return modification, integration, text[:at].strip()


class CaptionCache:
    """Append-only JSONL cache of caption pairs; last record for a key wins.

    Record fields: query_id, prompt_hash, provider_id, c_modi, c_integ,
    reasoning_trace, raw_response, created_at (RFC 3339 UTC). The index is
    rebuilt from the file on open, so the file is the source of truth.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, str, str], CaptionPair] = {}
        if self.path.is_file():
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._index[(rec["query_id"], rec["prompt_hash"], rec["provider_id"])] = CaptionPair(
                    modification_caption=rec["c_modi"],
                    integration_caption=rec["c_integ"],
                    reasoning_trace=rec.get("reasoning_trace", ""),
                    provider_id=rec["provider_id"],
                    prompt_hash=rec["prompt_hash"],
                )

    def __len__(self) -> int:
        return len(self._index)

    def get(self, query_id: str, prompt_hash: str, provider_id: str) -> CaptionPair | None:
        return self._index.get((query_id, prompt_hash, provider_id))

    def put(self, query_id: str, pair: CaptionPair, raw_response: str) -> None:
        record = {
            "query_id": query_id,
            "prompt_hash": pair.prompt_hash,
            "provider_id": pair.provider_id,
            "c_modi": pair.modification_caption,
            "c_integ": pair.integration_caption,
            "reasoning_trace": pair.reasoning_trace,
            "raw_response": raw_response,
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as f:
                f.write(json.dumps(record) + "\n")
            self._index[(query_id, pair.prompt_hash, pair.provider_id)] = pair


def generate_captions(
    query: ComposedQuery,
    prompt: ReasoningPrompt,
    provider: CaptionProvider,
    cache: CaptionCache,
    max_attempts: int = 3,
    backoff: float = 0.5,
    sleep=time.sleep,
) -> CaptionPair:
    """Produce (or fetch) the caption pair for one query.

    Cache hits return without touching the provider. Transient provider
    failures retry with bounded exponential backoff; an unparseable response
    earns one reprompt with a stricter format reminder. The result is written
    to the cache before returning.
    """
    cached = cache.get(query.query_id, prompt.prompt_hash, provider.provider_id)
    if cached is not None:
        return cached

    def call(prompt_text: str) -> str:
        last = None
        for attempt in range(max_attempts):
            try:
                return provider.complete(query, prompt_text)
            except ProviderTransientError as e:
                last = e
                if attempt + 1 < max_attempts:
                    sleep(backoff * (2**attempt))
        raise ProviderUnavailable(
            f"{provider.provider_id} failed {max_attempts} attempts for {query.query_id!r}: {last}"
        )

    raw = call(prompt.rendered)
    try:
        modification, integration, trace = parse_response(raw)
    except ParseFailure:
        raw = call(prompt.rendered + "\n\n" + REPROMPT_REMINDER)
        modification, integration, trace = parse_response(raw)

    if modification == integration:
        log.warning("query %s: both captions are identical", query.query_id)
    pair = CaptionPair(
        modification_caption=modification,
        integration_caption=integration,
        reasoning_trace=trace,
        provider_id=provider.provider_id,
        prompt_hash=prompt.prompt_hash,
    )
    cache.put(query.query_id, pair, raw)
    return pair
