"""Versioned binary embedding store shared with the offline extractor.

Layout (all integers little-endian):

    magic   4 bytes  b"MCRE"
    version u32      currently 1
    dim     u32      coordinates per vector
    count   u64      number of entries
    tag     u16 length + UTF-8 bytes   encoder/source label
    ids     per entry: u16 length + UTF-8 identifier
    payload count * dim float32, row-major, in id-table order

Round-trips are bit-exact: vectors are stored and returned as float32 and
compared by raw byte pattern in the tests.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadMagic, DuplicateId, TruncatedFile, UnsupportedVersion

MAGIC = b"MCRE"
VERSION = 1

MODI_SUFFIX = "#modi"
INTEG_SUFFIX = "#integ"


def caption_keys(query_id: str) -> tuple[str, str]:
    """Store keys for a query's modification / integration caption embeddings."""
    return query_id + MODI_SUFFIX, query_id + INTEG_SUFFIX


@dataclass
class EmbeddingStore:
    """An ordered list of (identifier, float32 vector) with a source label."""

    dim: int
    entries: list[tuple[str, np.ndarray]] = field(default_factory=list)
    source_tag: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        seen = set()
        normalized = []
        for item_id, vec in self.entries:
            if not item_id:
                raise ValueError("store identifiers must be non-empty")
            if item_id in seen:
                raise DuplicateId(item_id)
            seen.add(item_id)
            v = np.asarray(vec, dtype=np.float32)
            if v.shape != (self.dim,):
                raise ValueError(f"entry {item_id!r} has shape {v.shape}, expected ({self.dim},)")
            normalized.append((item_id, v))
        self.entries = normalized

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [item_id for item_id, _ in self.entries]

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(self.entries)


def write_embedding_store(store: EmbeddingStore, file: str | Path) -> None:
    """Serialize a store to the versioned binary layout above."""
    tag = store.source_tag.encode("utf-8")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<IIQ", VERSION, store.dim, len(store.entries))
    out += struct.pack("<H", len(tag)) + tag
    for item_id, _ in store.entries:
        raw = item_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError(f"identifier too long for the id table: {item_id[:32]!r}...")
        out += struct.pack("<H", len(raw)) + raw
    for _, vec in store.entries:
        out += vec.astype("<f4", copy=False).tobytes()
    Path(file).write_bytes(bytes(out))


def read_embedding_store(file: str | Path) -> EmbeddingStore:
    """Parse a store file, rejecting any length or header inconsistency."""
    data = Path(file).read_bytes()
    pos = 0

    def take(n: int, what: str) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise TruncatedFile(f"{file}: ran out of bytes reading {what}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(4, "magic") != MAGIC:
        raise BadMagic(f"{file}: expected magic {MAGIC!r}")
    version, dim, count = struct.unpack("<IIQ", take(16, "header"))
    if version != VERSION:
        raise UnsupportedVersion(f"{file}: version {version}, reader supports {VERSION}")
    (tag_len,) = struct.unpack("<H", take(2, "source tag length"))
    source_tag = take(tag_len, "source tag").decode("utf-8")

    ids: list[str] = []
    seen: set[str] = set()
    for i in range(count):
        (id_len,) = struct.unpack("<H", take(2, f"id length #{i}"))
        item_id = take(id_len, f"id #{i}").decode("utf-8")
        if item_id in seen:
            raise DuplicateId(f"{file}: identifier {item_id!r} appears twice")
        seen.add(item_id)
        ids.append(item_id)

    payload = take(count * dim * 4, "payload")
    if pos != len(data):
        raise TruncatedFile(f"{file}: {len(data) - pos} trailing bytes after payload")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim) if count else np.empty((0, dim), "<f4")
    entries = [(item_id, vectors[i].copy()) for i, item_id in enumerate(ids)]
    return EmbeddingStore(dim=dim, entries=entries, source_tag=source_tag)
