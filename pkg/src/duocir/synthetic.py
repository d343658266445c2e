"""Synthetic planted-signal benchmarks for offline pipeline validation.

Targets are planted near one of the caption embeddings so the ablation modes
separate measurably: an integration-signal benchmark also plants a "trap"
item hugging the modification caption, which fools single-caption retrieval
but not the fused query.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datasets import EvalRecord
from .store import EmbeddingStore, caption_keys, write_embedding_store

SIGNALS = ("integration", "modification", "dual")


@dataclass
class SyntheticBenchmark:
    records: list[EvalRecord]
    gallery: dict[str, np.ndarray]
    caption_embeddings: dict[str, np.ndarray]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def make_planted_benchmark(
    n_queries: int = 200,
    n_distractors: int = 100,
    dim: int = 32,
    seed: int = 0,
    signal: str = "integration",
    subset_size: int = 5,
) -> SyntheticBenchmark:
    """Build a benchmark whose targets lean on one caption embedding.

    signal="integration": target ~ 0.9 * integration caption + 0.1 * noise,
    modification caption is a noisy pointer at the target, and a trap item
    sits almost on top of the modification caption. signal="modification"
    mirrors the construction onto the modification caption, with the
    integration caption pure noise and no trap. signal="dual" plants a trap
    on each caption with margins tuned (at the 0.05/0.9 default weights) so
    only the fused query ranks the target first.
    """
    if signal not in SIGNALS:
        raise ValueError(f"signal must be one of {SIGNALS}, got {signal!r}")
    if signal == "dual" and dim < 8:
        raise ValueError("dual signal needs dim >= 8")
    rng = np.random.default_rng(seed)
    gallery: dict[str, np.ndarray] = {}
    captions: dict[str, np.ndarray] = {}
    records: list[EvalRecord] = []

    def noise() -> np.ndarray:
        return _unit(rng.standard_normal(dim))

    for j in range(n_distractors):
        gallery[f"d{j:04d}"] = noise()

    distractor_ids = sorted(gallery)
    for i in range(n_queries):
        qid = f"q{i:04d}"
        target_id, reference_id = f"t{i:04d}", f"r{i:04d}"
        if signal == "integration":
            integration = noise()
            target = _unit(0.9 * integration + 0.1 * noise())
            modification = _unit(target + noise())
            gallery[f"x{i:04d}"] = _unit(modification + 0.05 * noise())  # trap
            reference = noise()
        elif signal == "modification":
            modification = noise()
            target = _unit(0.9 * modification + 0.1 * noise())
            integration = noise()
            reference = noise()
        else:
            # orthonormal frame: target direction, two caption offsets, a
            # trap offset, and a reference kept orthogonal to all of them
            frame, _ = np.linalg.qr(rng.standard_normal((dim, 5)))
            target, n, m, p, reference = frame.T
            integration = 0.9 * target + np.sqrt(1.0 - 0.81) * n
            modification = _unit(target + 0.3 * m)
            # barely out-ranks the target on its own caption, loses fused
            gallery[f"xi{i:04d}"] = _unit(integration - 0.55 * target)
            gallery[f"xm{i:04d}"] = _unit(modification + 0.1 * p)
        gallery[target_id] = target
        gallery[reference_id] = reference
        modi_key, integ_key = caption_keys(qid)
        captions[modi_key] = modification
        captions[integ_key] = integration

        subset = {target_id}
        picks = rng.choice(len(distractor_ids), size=min(subset_size - 1, len(distractor_ids)), replace=False)
        subset.update(distractor_ids[p] for p in picks)
        records.append(
            EvalRecord(
                query_id=qid,
                reference_id=reference_id,
                modification_text=f"synthetic edit request {i}",
                target_ids=frozenset({target_id}),
                subset_ids=frozenset(subset),
            )
        )
    return SyntheticBenchmark(records=records, gallery=gallery, caption_embeddings=captions)


def write_benchmark(bench: SyntheticBenchmark, out_dir: str | Path, dataset: str = "cirr") -> Path:
    """Materialize a benchmark as CIRR-style files plus a ready config.

    Writes annotations, gallery and caption embedding stores, well-formed
    fixture caption responses, and config.ini; returns the config path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixtures = out / "fixtures"
    fixtures.mkdir(exist_ok=True)

    annotations = []
    for rec in bench.records:
        annotations.append(
            {
                "pairid": rec.query_id,
                "reference": rec.reference_id,
                "caption": rec.modification_text,
                "target_hard": next(iter(rec.target_ids)),
                "img_set": {"members": sorted(rec.subset_ids or rec.target_ids)},
            }
        )
        response = {
            "modification_focused": f"requested change for {rec.query_id}",
            "integration_focused": f"requested change for {rec.query_id}, original scene kept",
        }
        (fixtures / f"{rec.query_id}.txt").write_text(
            "Step-by-step reasoning elided for the synthetic fixture.\n"
            + json.dumps(response)
            + "\n"
        )
    (out / "annotations.json").write_text(json.dumps(annotations, indent=1))

    dim = len(next(iter(bench.gallery.values())))
    write_embedding_store(
        EmbeddingStore(dim=dim, entries=sorted(bench.gallery.items()), source_tag="synthetic"),
        out / "gallery.mcre",
    )
    write_embedding_store(
        EmbeddingStore(dim=dim, entries=sorted(bench.caption_embeddings.items()), source_tag="synthetic"),
        out / "captions.mcre",
    )

    cfg = configparser.ConfigParser()
    cfg["dataset"] = {"name": dataset, "split": "val"}
    cfg["paths"] = {
        "annotations": str(out / "annotations.json"),
        "gallery_store": str(out / "gallery.mcre"),
        "caption_store": str(out / "captions.mcre"),
        "caption_cache": str(out / "caption_cache.jsonl"),
        "output_dir": str(out / "reports"),
    }
    cfg["retrieval"] = {"k": "50"}
    cfg["provider"] = {"kind": "fixture", "fixture_dir": str(fixtures)}
    config_path = out / "config.ini"
    with config_path.open("w") as f:
        cfg.write(f)
    return config_path
