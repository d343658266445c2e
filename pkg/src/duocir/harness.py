"""Benchmark and ablation runner over precomputed embedding stores."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Mapping, Sequence

import numpy as np

from .datasets import EvalRecord
from .engine import (
    GalleryIndex,
    QueryEmbeddings,
    RankedResult,
    RetrievalConfig,
    RetrievalMode,
    retrieve,
)
from .errors import DanglingId, MissingCaptionEmbedding, UnsupportedFormat
from .metrics import MetricReport, recall_at_k, recall_subset_at_k, render_csv, render_table
from .store import caption_keys

ABLATION_MODES = (
    RetrievalMode.FULL,
    RetrievalMode.NO_FILTERING,
    RetrievalMode.NO_RERANK,
    RetrievalMode.MODI_ONLY,
    RetrievalMode.INTEG_ONLY,
)


def validate_ids(
    records: Sequence[EvalRecord],
    gallery: GalleryIndex,
    caption_embeddings: Mapping[str, np.ndarray] | None = None,
) -> None:
    """Cross-check every record against the stores before any retrieval.

    Reference and target ids must resolve in the gallery (DanglingId);
    every query needs both caption embeddings (MissingCaptionEmbedding).
    """
    dangling = set()
    for rec in records:
        if rec.reference_id not in gallery:
            dangling.add(rec.reference_id)
        dangling.update(t for t in rec.target_ids if t not in gallery)
    if dangling:
        raise DanglingId(dangling)
    if caption_embeddings is not None:
        missing = []
        for rec in records:
            missing += [k for k in caption_keys(rec.query_id) if k not in caption_embeddings]
        if missing:
            raise MissingCaptionEmbedding(f"missing caption embeddings: {sorted(missing)[:10]}")


def query_embeddings_for(
    record: EvalRecord,
    gallery: GalleryIndex,
    caption_embeddings: Mapping[str, np.ndarray],
) -> QueryEmbeddings:
    modi_key, integ_key = caption_keys(record.query_id)
    try:
        modification = caption_embeddings[modi_key]
        integration = caption_embeddings[integ_key]
    except KeyError as e:
        raise MissingCaptionEmbedding(str(e)) from e
    return QueryEmbeddings(
        modification=np.asarray(modification, dtype=np.float64),
        integration=np.asarray(integration, dtype=np.float64),
        reference=gallery.vector(record.reference_id),
    )


def run_queries(
    records: Sequence[EvalRecord],
    gallery: GalleryIndex,
    caption_embeddings: Mapping[str, np.ndarray],
    cfg: RetrievalConfig,
    workers: int = 1,
) -> list[RankedResult]:
    """Retrieve every record; output order follows the record order."""
    validate_ids(records, gallery, caption_embeddings)

    def one(record: EvalRecord) -> RankedResult:
        q = query_embeddings_for(record, gallery, caption_embeddings)
        return retrieve(record.query_id, q, gallery, cfg, reference_id=record.reference_id)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, records))
    else:
        results = [one(r) for r in records]
    return results


def run_benchmark(
    records: Sequence[EvalRecord],
    gallery: GalleryIndex,
    caption_embeddings: Mapping[str, np.ndarray],
    cfg: RetrievalConfig,
    Ks: Sequence[int],
    subset_Ks: Sequence[int] | None = None,
    dataset: str = "synthetic",
    category: str | None = None,
    workers: int = 1,
) -> MetricReport:
    """Full benchmark pass: retrieve all queries, aggregate recall metrics."""
    if not Ks:
        raise ValueError("Ks must be non-empty")
    results = run_queries(records, gallery, caption_embeddings, cfg, workers)
    recall = {int(K): recall_at_k(results, records, int(K)) for K in Ks}
    subset = None
    if subset_Ks:
        subset = {int(K): recall_subset_at_k(results, records, int(K)) for K in subset_Ks}
    return MetricReport(
        dataset=dataset,
        category=category,
        mode=cfg.mode,
        k_filter=cfg.k,
        weights=cfg.weights,
        recall_at=recall,
        recall_subset_at=subset,
        query_count=len(records),
    )


def run_ablations(
    records: Sequence[EvalRecord],
    gallery: GalleryIndex,
    caption_embeddings: Mapping[str, np.ndarray],
    base_cfg: RetrievalConfig,
    Ks: Sequence[int],
    subset_Ks: Sequence[int] | None = None,
    dataset: str = "synthetic",
    category: str | None = None,
    workers: int = 1,
) -> list[MetricReport]:
    """One report per retrieval mode over the identical query set."""
    return [
        run_benchmark(
            records,
            gallery,
            caption_embeddings,
            replace(base_cfg, mode=mode),
            Ks,
            subset_Ks,
            dataset,
            category,
            workers,
        )
        for mode in ABLATION_MODES
    ]


def render_submission(results: Sequence[RankedResult], top: int = 50) -> str:
    """Prediction file: one JSON line per query mapping it to its top ids."""
    lines = [
        json.dumps({"query_id": r.query_id, "ranking": r.ranked_ids()[:top]})
        for r in results
    ]
    return "\n".join(lines) + "\n"


def emit_report(
    reports: Sequence[MetricReport],
    format: str = "table",
    results: Sequence[RankedResult] | None = None,
    submission_top: int = 50,
) -> str:
    """Render reports as a grouped table, CSV rows, or a submission file.

    The submission format works off rankings rather than aggregate metrics,
    so `results` must be supplied for it.
    """
    if format != "submission" and not reports:
        raise ValueError("no reports to render")
    if format == "table":
        return render_table(reports)
    if format == "csv":
        return render_csv(reports)
    if format == "submission":
        if results is None:
            raise ValueError("submission format needs ranked results")
        return render_submission(results, submission_top)
    raise UnsupportedFormat(format)
