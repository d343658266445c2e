"""Writer for the shared binary embedding-store format.

Deliberately independent of the retrieval engine's reader: this sidecar
talks to it only through the bytes. Layout (integers little-endian):

    b"MCRE" | u32 version=1 | u32 dim | u64 count
    u16 tag length + UTF-8 source tag
    per entry: u16 id length + UTF-8 id
    count * dim float32 payload, row-major, id-table order

Writes are atomic: temp file in the same directory, then rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"MCRE"
VERSION = 1


def write_store(
    entries: list[tuple[str, np.ndarray]],
    dim: int,
    source_tag: str,
    out_path: str | Path,
) -> None:
    seen = set()
    for item_id, vec in entries:
        if not item_id:
            raise ValueError("empty identifier")
        if item_id in seen:
            raise ValueError(f"duplicate identifier {item_id!r}")
        seen.add(item_id)
        if np.asarray(vec).shape != (dim,):
            raise ValueError(f"{item_id!r}: expected shape ({dim},)")

    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<IIQ", VERSION, dim, len(entries))
    tag = source_tag.encode("utf-8")
    blob += struct.pack("<H", len(tag)) + tag
    for item_id, _ in entries:
        raw = item_id.encode("utf-8")
        blob += struct.pack("<H", len(raw)) + raw
    for _, vec in entries:
        blob += np.asarray(vec, dtype="<f4").tobytes()

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=out_path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(bytes(blob))
        os.replace(tmp_name, out_path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
