"""Batch extraction jobs: images or cached captions into embedding stores."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .storefile import write_store

log = logging.getLogger(__name__)

MODI_SUFFIX = "#modi"
INTEG_SUFFIX = "#integ"


class ManifestError(Exception):
    """The input manifest or caption cache is unusable."""


@dataclass
class ExtractionJob:
    manifest: str
    encoder_name: str
    out_path: str
    batch_size: int = 16
    device: str | None = None


@dataclass
class ExtractionOutcome:
    written: int
    failures: list[tuple[str, str]]

    @property
    def ok(self) -> bool:
        return not self.failures


def read_image_manifest(path: str | Path) -> list[tuple[str, Path]]:
    """One image per line: either "<path>" (id = file stem) or "<id>\\t<path>"."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    items = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            item_id, image_path = line.split("\t", 1)
        else:
            item_id, image_path = Path(line).stem, line
        items.append((item_id, Path(image_path)))
    return items


def extract_images(job: ExtractionJob, encoder) -> ExtractionOutcome:
    """Encode every readable manifest image; skipped files are reported."""
    items = read_image_manifest(job.manifest)
    if not items:
        log.warning("empty manifest %s: writing an empty store", job.manifest)

    entries: list[tuple[str, np.ndarray]] = []
    failures: list[tuple[str, str]] = []
    batch: list[tuple[str, Image.Image]] = []

    def flush():
        if not batch:
            return
        vectors = encoder.encode_images([im for _, im in batch])
        entries.extend((item_id, vectors[i]) for i, (item_id, _) in enumerate(batch))
        for _, im in batch:
            im.close()
        batch.clear()

    for item_id, image_path in items:
        try:
            image = Image.open(image_path)
            image.load()
        except (OSError, UnidentifiedImageError) as e:
            failures.append((item_id, f"{image_path}: {e}"))
            continue
        batch.append((item_id, image))
        if len(batch) >= job.batch_size:
            flush()
    flush()

    write_store(entries, encoder.dim, encoder.name, job.out_path)
    return ExtractionOutcome(written=len(entries), failures=failures)


def read_caption_cache(path: str | Path) -> dict[str, tuple[str, str]]:
    """Last record per query wins, mirroring the cache's own replay rule."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"caption cache not found: {path}")
    captions: dict[str, tuple[str, str]] = {}
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            captions[record["query_id"]] = (record["c_modi"], record["c_integ"])
        except (json.JSONDecodeError, KeyError) as e:
            raise ManifestError(f"{path}:{n}: bad cache record ({e})") from e
    return captions


def extract_captions(job: ExtractionJob, encoder) -> ExtractionOutcome:
    """Two entries per cached query: <query_id>#modi and <query_id>#integ."""
    captions = read_caption_cache(job.manifest)
    failures = [
        (qid, "empty caption")
        for qid, (modification, integration) in captions.items()
        if not modification.strip() or not integration.strip()
    ]
    usable = sorted(qid for qid in captions if qid not in {q for q, _ in failures})

    entries: list[tuple[str, np.ndarray]] = []
    for start in range(0, len(usable), job.batch_size):
        chunk = usable[start : start + job.batch_size]
        texts = []
        for qid in chunk:
            modification, integration = captions[qid]
            texts += [modification, integration]
        vectors = encoder.encode_texts(texts)
        for i, qid in enumerate(chunk):
            entries.append((qid + MODI_SUFFIX, vectors[2 * i]))
            entries.append((qid + INTEG_SUFFIX, vectors[2 * i + 1]))

    write_store(entries, encoder.dim, encoder.name, job.out_path)
    return ExtractionOutcome(written=len(entries), failures=failures)
