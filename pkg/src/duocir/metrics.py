"""Recall@K and subset Recall@K over ranked retrieval results."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .datasets import EvalRecord
from .engine import RankedResult, RetrievalMode
from .errors import MissingSubset, QueryMismatch
from .vectors import FusionWeights


@dataclass(frozen=True)
class MetricReport:
    """One benchmark run's recall figures and the settings that produced it."""

    dataset: str
    category: str | None
    mode: RetrievalMode
    k_filter: int
    weights: FusionWeights
    recall_at: dict[int, float]
    recall_subset_at: dict[int, float] | None
    query_count: int

    def __post_init__(self):
        for table in (self.recall_at, self.recall_subset_at or {}):
            for k, v in table.items():
                if not (0.0 <= v <= 1.0):
                    raise ValueError(f"recall@{k} = {v} outside [0, 1]")
        ordered = sorted(self.recall_at)
        values = [self.recall_at[k] for k in ordered]
        if any(a > b for a, b in zip(values, values[1:])):
            raise ValueError("recall_at must be non-decreasing in K")
        if self.query_count < 1:
            raise ValueError("query_count must be positive")


def _pair_up(
    results: Sequence[RankedResult], records: Sequence[EvalRecord]
) -> list[tuple[RankedResult, EvalRecord]]:
    by_qid = {r.query_id: r for r in results}
    record_qids = {rec.query_id for rec in records}
    missing = record_qids - by_qid.keys()
    extra = by_qid.keys() - record_qids
    if missing or extra:
        raise QueryMismatch(f"missing results: {sorted(missing)}; extra results: {sorted(extra)}")
    return [(by_qid[rec.query_id], rec) for rec in records]


def recall_at_k(results: Sequence[RankedResult], records: Sequence[EvalRecord], K: int) -> float:
    """Fraction of queries with any target in the first K ranked positions."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    pairs = _pair_up(results, records)
    hits = sum(
        1
        for result, record in pairs
        if any(s.id in record.target_ids for s in result.ranking[:K])
    )
    return hits / len(pairs)


def recall_subset_at_k(
    results: Sequence[RankedResult], records: Sequence[EvalRecord], K: int
) -> float:
    """Recall@K after restricting each ranking to the query's subset ids."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    pairs = _pair_up(results, records)
    hits = 0
    for result, record in pairs:
        if record.subset_ids is None:
            raise MissingSubset(record.query_id)
        restricted = [s.id for s in result.ranking if s.id in record.subset_ids]
        if any(i in record.target_ids for i in restricted[:K]):
            hits += 1
    return hits / len(pairs)


def render_table(reports: Sequence[MetricReport]) -> str:
    """Fixed-width table grouped by dataset, one row per report.

    Columns follow each report's K grid: R@K for every K, then Rs@K for the
    subset grid when present.
    """
    lines = []
    by_dataset: dict[str, list[MetricReport]] = {}
    for r in reports:
        by_dataset.setdefault(r.dataset, []).append(r)
    for dataset, group in by_dataset.items():
        ks = sorted({k for r in group for k in r.recall_at})
        subset_ks = sorted({k for r in group for k in (r.recall_subset_at or {})})
        header = ["category", "mode", "k"] + [f"R@{k}" for k in ks] + [
            f"Rs@{k}" for k in subset_ks
        ]
        rows = [header]
        for r in group:
            row = [r.category or "-", r.mode.value, str(r.k_filter)]
            row += [_fmt(r.recall_at.get(k)) for k in ks]
            row += [_fmt((r.recall_subset_at or {}).get(k)) for k in subset_ks]
            rows.append(row)
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        lines.append(f"== {dataset} ==")
        for row in rows:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{100.0 * value:.2f}"


CSV_HEADER = "dataset,category,mode,k_filter,alpha,beta,metric,K,value,query_count"


def render_csv(reports: Sequence[MetricReport]) -> str:
    """One row per (metric, K), stable column and row order."""
    lines = [CSV_HEADER]
    for r in reports:
        base = (
            f"{r.dataset},{r.category or ''},{r.mode.value},{r.k_filter},"
            f"{r.weights.alpha},{r.weights.beta}"
        )
        for k in sorted(r.recall_at):
            lines.append(f"{base},recall,{k},{r.recall_at[k]:.6f},{r.query_count}")
        for k in sorted(r.recall_subset_at or {}):
            lines.append(f"{base},recall_subset,{k},{r.recall_subset_at[k]:.6f},{r.query_count}")
    return "\n".join(lines) + "\n"
