"""FashionIQ and CIRR annotation ingestion into one evaluation schema."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import MalformedAnnotation, MissingField

FASHIONIQ_CATEGORIES = ("shirt", "dress", "toptee")
CAPTION_JOIN = "; "


@dataclass(frozen=True)
class EvalRecord:
    """One composed query with its acceptable targets.

    subset_ids is CIRR's visually-similar set (reference excluded); category
    is the FashionIQ garment category. target_ids may be empty only for
    withheld-ground-truth splits used to emit submission files.
    """

    query_id: str
    reference_id: str
    modification_text: str
    target_ids: frozenset[str]
    subset_ids: frozenset[str] | None = None
    category: str | None = None

    def __post_init__(self):
        if not self.query_id:
            raise MalformedAnnotation("query_id must be non-empty")
        if not self.modification_text:
            raise MalformedAnnotation(f"{self.query_id}: modification text is empty")
        if self.reference_id in self.target_ids:
            raise MalformedAnnotation(f"{self.query_id}: reference listed among targets")
        if self.subset_ids is not None:
            if self.reference_id in self.subset_ids:
                raise MalformedAnnotation(f"{self.query_id}: reference inside subset")
            if self.target_ids and not (self.target_ids & self.subset_ids):
                raise MalformedAnnotation(f"{self.query_id}: subset contains no target")


def _load_json_list(path: str | Path) -> list:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise MalformedAnnotation(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, list):
        raise MalformedAnnotation(f"{path}: expected a top-level list")
    return data


def load_fashioniq(captions_file: str | Path, category: str) -> list[EvalRecord]:
    """Read a FashionIQ caption file (one JSON list per category/split).

    Each annotation holds a candidate (reference) id, a target id, and a pair
    of human captions, which are joined order-preserving with "; " into one
    modification text. Query ids are synthesized as <category>-<index>.
    """
    if category not in FASHIONIQ_CATEGORIES:
        raise MalformedAnnotation(f"unknown FashionIQ category {category!r}")
    records = []
    for i, entry in enumerate(_load_json_list(captions_file)):
        where = f"{captions_file}[{i}]"
        if not isinstance(entry, dict):
            raise MalformedAnnotation(f"{where}: expected an object")
        for key in ("candidate", "target", "captions"):
            if key not in entry:
                raise MissingField(f"{where}: missing {key!r}")
        captions = entry["captions"]
        if not isinstance(captions, list) or not captions or not all(
            isinstance(c, str) and c.strip() for c in captions
        ):
            raise MalformedAnnotation(f"{where}: captions must be a non-empty list of text")
        reference = str(entry["candidate"])
        target = str(entry["target"])
        if not reference or not target:
            raise MalformedAnnotation(f"{where}: empty candidate/target id")
        if reference == target:
            raise MalformedAnnotation(f"{where}: candidate equals target")
        records.append(
            EvalRecord(
                query_id=f"{category}-{i:05d}",
                reference_id=reference,
                modification_text=CAPTION_JOIN.join(c.strip() for c in captions),
                target_ids=frozenset({target}),
                category=category,
            )
        )
    return records


def load_cirr(split_file: str | Path, require_targets: bool = True) -> list[EvalRecord]:
    """Read a CIRR split file into eval records.

    subset_ids is the pair's image-set membership minus the reference. The
    official test split withholds targets; pass require_targets=False there
    and use the records for submission files only.
    """
    records = []
    for i, entry in enumerate(_load_json_list(split_file)):
        where = f"{split_file}[{i}]"
        if not isinstance(entry, dict):
            raise MalformedAnnotation(f"{where}: expected an object")
        for key in ("pairid", "reference", "caption"):
            if key not in entry:
                raise MissingField(f"{where}: missing {key!r}")
        reference = str(entry["reference"])
        caption = entry["caption"]
        if not isinstance(caption, str) or not caption.strip():
            raise MalformedAnnotation(f"{where}: caption must be non-empty text")

        target = entry.get("target_hard", entry.get("target"))
        if target is None and require_targets:
            raise MissingField(f"{where}: missing target")
        target_ids = frozenset({str(target)}) if target is not None else frozenset()
        if target is not None and str(target) == reference:
            raise MalformedAnnotation(f"{where}: reference equals target")

        img_set = entry.get("img_set")
        subset_ids = None
        if img_set is not None:
            members = img_set.get("members") if isinstance(img_set, dict) else img_set
            if not isinstance(members, list) or not members:
                raise MalformedAnnotation(f"{where}: img_set members must be a non-empty list")
            subset_ids = frozenset(str(m) for m in members) - {reference}
            if target_ids and not (target_ids & subset_ids):
                raise MalformedAnnotation(f"{where}: target missing from img_set")

        records.append(
            EvalRecord(
                query_id=str(entry["pairid"]),
                reference_id=reference,
                modification_text=caption.strip(),
                target_ids=target_ids,
                subset_ids=subset_ids,
            )
        )
    _check_unique_query_ids(records, split_file)
    return records


def _check_unique_query_ids(records: list[EvalRecord], path) -> None:
    seen: set[str] = set()
    for r in records:
        if r.query_id in seen:
            raise MalformedAnnotation(f"{path}: duplicate query id {r.query_id!r}")
        seen.add(r.query_id)
