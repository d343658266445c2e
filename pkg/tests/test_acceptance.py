"""Acceptance criteria for the retrieval engine and harness.

One test per criterion; each prints a PASS line on success (run with -s or
-rA to see them). Tolerances are pinned here, not configurable.
"""

import json
import struct
import time

import numpy as np
import pytest

from duocir.captions import CaptionCache, generate_captions, parse_response
from duocir.config import RunConfig, load_config
from duocir.datasets import EvalRecord
from duocir.engine import (
    GalleryIndex,
    QueryEmbeddings,
    RankedResult,
    RetrievalConfig,
    RetrievalMode,
    retrieve,
)
from duocir.errors import BadMagic, DuplicateId, ParseFailure, TruncatedFile, UnsupportedVersion
from duocir.harness import run_benchmark
from duocir.metrics import recall_at_k, recall_subset_at_k, render_table
from duocir.prompts import ComposedQuery, build_prompt
from duocir.providers import FixtureProvider
from duocir.store import EmbeddingStore, read_embedding_store, write_embedding_store
from duocir.synthetic import make_planted_benchmark
from duocir.vectors import FusionWeights, Scored, fuse, normalize

import oracle
from conftest import random_gallery, random_unitish
from test_metrics import make_record, make_result


def passed(n, text):
    print(f"\nACCEPTANCE {n} PASS - {text}")


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 501))
    dim = int(rng.integers(2, 65))
    k = int(rng.integers(1, n + 1))
    alpha = float(rng.uniform(0.0, 1.0))
    beta = float(rng.uniform(0.0, 1.0 - alpha))
    raw = random_gallery(rng, n, dim)
    q = QueryEmbeddings(
        modification=random_unitish(rng, dim),
        integration=random_unitish(rng, dim),
        reference=random_unitish(rng, dim),
    )
    return raw, q, k, alpha, beta


def test_criterion_1_oracle_equivalence_full_pipeline():
    started = time.monotonic()
    mismatches = 0
    for seed in range(100):
        raw, q, k, alpha, beta = random_instance(seed)
        gallery = GalleryIndex(raw)
        cfg = RetrievalConfig(k=k, weights=FusionWeights(alpha, beta))
        got = retrieve(f"q{seed}", q, gallery, cfg).ranked_ids()
        want = oracle.full_pipeline(
            list(q.modification), list(q.integration), list(q.reference),
            {i: list(v) for i, v in raw.items()}, k, alpha, beta,
        )
        mismatches += got != want
    elapsed = time.monotonic() - started
    assert mismatches == 0
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    passed(1, f"100 random instances match the brute-force oracle exactly ({elapsed:.1f}s)")


def test_criterion_2_ablation_coherence():
    for seed in range(100):
        raw, q, k, alpha, beta = random_instance(seed)
        gallery = GalleryIndex(raw)
        w = FusionWeights(alpha, beta)

        full_all = retrieve("q", q, gallery, RetrievalConfig(k=len(gallery), weights=w))
        unfiltered = retrieve(
            "q", q, gallery, RetrievalConfig(k=k, weights=w, mode=RetrievalMode.NO_FILTERING)
        )
        assert full_all.ranked_ids() == unfiltered.ranked_ids()

        pinned = retrieve("q", q, gallery, RetrievalConfig(k=k, weights=FusionWeights(1.0, 0.0)))
        plain = retrieve(
            "q", q, gallery, RetrievalConfig(k=k, weights=w, mode=RetrievalMode.NO_RERANK)
        )
        assert pinned.ranked_ids() == plain.ranked_ids()
    passed(2, "full(k=N) == no_filtering and full(alpha=1) == no_rerank on 100 instances")


def test_criterion_3_fusion_collapse():
    rng = np.random.default_rng(77)
    for _ in range(50):
        dim = int(rng.integers(2, 65))
        a, b, c = (random_unitish(rng, dim) for _ in range(3))
        first = fuse(a, b, c, FusionWeights(1.0, 0.0))
        assert np.max(np.abs(first - normalize(a))) < 1e-6
        third = fuse(a, b, c, FusionWeights(0.0, 0.0))
        assert np.max(np.abs(third - normalize(c))) < 1e-6
    passed(3, "fuse collapses onto the normalized caption/reference argument within 1e-6")


def test_criterion_4_gallery_scaling_invariance():
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(3, 80))
        dim = int(rng.integers(2, 32))
        raw = random_gallery(rng, n, dim)
        q = QueryEmbeddings(
            modification=random_unitish(rng, dim),
            integration=random_unitish(rng, dim),
            reference=random_unitish(rng, dim),
        )
        k = int(rng.integers(1, n + 1))
        cfg = RetrievalConfig(k=k, weights=FusionWeights(0.05, 0.9))
        c = float(rng.uniform(1e-3, 1e3))
        baseline = retrieve("q", q, GalleryIndex(raw), cfg)
        scaled = retrieve("q", q, GalleryIndex({i: c * v for i, v in raw.items()}), cfg)
        assert baseline.ranked_ids() == scaled.ranked_ids()
        assert [s.id for s in baseline.stage1_candidates] == [
            s.id for s in scaled.stage1_candidates
        ]
    passed(4, "identifier order invariant under positive gallery scaling, 50 trials")


def test_criterion_5_metric_correctness():
    # targets planted at 1-based ranks 1,2,3,5,8,10,20,30,50 and one absent
    ranks = [1, 2, 3, 5, 8, 10, 20, 30, 50, None]
    results, records = [], []
    for qi, rank in enumerate(ranks):
        qid = f"q{qi}"
        ids = [f"{qid}:f{j}" for j in range(60)]
        target = f"{qid}:target"
        if rank is not None:
            ids[rank - 1] = target
        results.append(make_result(qid, ids))
        records.append(make_record(qid, target))
    assert recall_at_k(results, records, 1) == 0.1
    assert recall_at_k(results, records, 5) == 0.4
    assert recall_at_k(results, records, 10) == 0.6
    assert recall_at_k(results, records, 50) == 0.9

    # subset fixture: target is the 1st/2nd/3rd subset member to appear, or absent
    positions = [1, 1, 1, 1, 2, 2, 2, 3, 3, None]
    sub_results, sub_records = [], []
    for qi, position in enumerate(positions):
        qid = f"s{qi}"
        others = [f"{qid}:m1", f"{qid}:m2"]
        target = f"{qid}:target"
        ranking = [f"{qid}:f{j}" for j in range(10)]
        if position is not None:
            members_in_order = others[: position - 1] + [target] + others[position - 1 :]
        else:
            members_in_order = others
        for slot, member in zip((2, 5, 8), members_in_order):
            ranking[slot] = member
        sub_results.append(make_result(qid, ranking))
        sub_records.append(make_record(qid, target, subset={target, *others}))
    assert recall_subset_at_k(sub_results, sub_records, 1) == 0.4
    assert recall_subset_at_k(sub_results, sub_records, 2) == 0.7
    assert recall_subset_at_k(sub_results, sub_records, 3) == 0.9

    rng = np.random.default_rng(5)
    for _ in range(100):
        n_queries = int(rng.integers(1, 12))
        results, records = [], []
        for qi in range(n_queries):
            qid = f"r{qi}"
            ids = [f"{qid}:{j}" for j in range(int(rng.integers(2, 40)))]
            target = ids[int(rng.integers(0, len(ids)))] if rng.random() < 0.8 else f"{qid}:absent"
            results.append(make_result(qid, ids))
            records.append(make_record(qid, target))
        values = [recall_at_k(results, records, K) for K in range(1, 21)]
        assert all(a <= b for a, b in zip(values, values[1:]))
    passed(5, "hand-computed recall values exact; monotone in K on 100 random fixtures")


def test_criterion_6_default_hyperparameters(tmp_path):
    fiq = RunConfig(dataset="fashioniq")
    assert fiq.retrieval.weights == FusionWeights(0.05, 0.9)
    assert fiq.retrieval.k == 150
    assert fiq.Ks == (10, 50) and fiq.subset_Ks == ()

    cirr = RunConfig(dataset="cirr")
    assert cirr.retrieval.weights == FusionWeights(0.05, 0.9)
    assert cirr.retrieval.k == 200
    assert cirr.Ks == (1, 5, 10) and cirr.subset_Ks == (1, 2, 3)

    minimal = tmp_path / "minimal.ini"
    minimal.write_text("[dataset]\nname = cirr\n")
    loaded = load_config(minimal)
    assert loaded.retrieval.k == 200
    assert loaded.retrieval.weights == FusionWeights(0.05, 0.9)

    bench = make_planted_benchmark(n_queries=6, n_distractors=20, dim=8, seed=2)
    gallery = GalleryIndex(bench.gallery)
    cirr_report = run_benchmark(
        bench.records, gallery, bench.caption_embeddings,
        RetrievalConfig(k=10, weights=FusionWeights(0.05, 0.9)),
        Ks=cirr.Ks, subset_Ks=cirr.subset_Ks, dataset="cirr",
    )
    header = render_table([cirr_report]).splitlines()[1]
    for column in ("R@1", "R@5", "R@10", "Rs@1", "Rs@2", "Rs@3"):
        assert column in header
    fiq_report = run_benchmark(
        bench.records, gallery, bench.caption_embeddings,
        RetrievalConfig(k=10, weights=FusionWeights(0.05, 0.9)),
        Ks=fiq.Ks, dataset="fashioniq", category="shirt",
    )
    header = render_table([fiq_report]).splitlines()[1]
    assert "R@10" in header and "R@50" in header and "Rs@" not in header
    passed(6, "defaults alpha=0.05 beta=0.9, k=150/200, K grids 10/50 and 1/5/10 + 1/2/3")


def test_criterion_7_planted_signal_directional():
    cfg = RetrievalConfig(k=200, weights=FusionWeights(0.05, 0.9))

    integ_bench = make_planted_benchmark(
        n_queries=200, n_distractors=100, dim=32, seed=42, signal="integration"
    )
    gallery = GalleryIndex(integ_bench.gallery)
    r1 = {}
    for mode in (RetrievalMode.FULL, RetrievalMode.MODI_ONLY):
        report = run_benchmark(
            integ_bench.records, gallery, integ_bench.caption_embeddings,
            RetrievalConfig(k=cfg.k, weights=cfg.weights, mode=mode), Ks=[1],
        )
        r1[mode] = report.recall_at[1]
    assert r1[RetrievalMode.FULL] > r1[RetrievalMode.MODI_ONLY], r1

    modi_bench = make_planted_benchmark(
        n_queries=200, n_distractors=100, dim=32, seed=43, signal="modification"
    )
    gallery = GalleryIndex(modi_bench.gallery)
    r1b = {}
    for mode in (RetrievalMode.MODI_ONLY, RetrievalMode.INTEG_ONLY):
        report = run_benchmark(
            modi_bench.records, gallery, modi_bench.caption_embeddings,
            RetrievalConfig(k=cfg.k, weights=cfg.weights, mode=mode), Ks=[1],
        )
        r1b[mode] = report.recall_at[1]
    assert r1b[RetrievalMode.MODI_ONLY] >= r1b[RetrievalMode.INTEG_ONLY], r1b
    passed(
        7,
        f"planted signals: full R@1 {r1[RetrievalMode.FULL]:.3f} > modi_only "
        f"{r1[RetrievalMode.MODI_ONLY]:.3f}; modi_only {r1b[RetrievalMode.MODI_ONLY]:.3f} "
        f">= integ_only {r1b[RetrievalMode.INTEG_ONLY]:.3f}",
    )


GOOD = {"modification_focused": "a red shirt", "integration_focused": "a red shirt, same studio"}

MALFORMED = [
    ("prose with no structure at all", "no-object-found"),
    ('{"modification_focused": "only one key"}', "missing-key"),
    ('{"modification_focused": "", "integration_focused": "x"}', "empty-caption"),
    ('{"modification_focused": 7, "integration_focused": "x"}', "missing-key"),
    ("```json\n{broken json", "no-object-found"),
]


def test_criterion_8_caption_pipeline_offline_determinism(tmp_path):
    fixtures = tmp_path / "fixtures"
    fixtures.mkdir()
    queries = []
    for i in range(20):
        qid = f"q{i:02d}"
        response = dict(GOOD)
        response["modification_focused"] += f" variant {i}"
        (fixtures / f"{qid}.txt").write_text(
            f"Reasoning for {qid}.\n```json\n{json.dumps(response)}\n```"
        )
        queries.append(ComposedQuery(qid, f"images/{qid}.png", f"edit request {i}"))

    cache_path = tmp_path / "cache.jsonl"

    first_provider = FixtureProvider(fixtures)
    cache = CaptionCache(cache_path)
    for query in queries:
        pair = generate_captions(query, build_prompt(query), first_provider, cache)
        assert pair.reasoning_trace.startswith("Reasoning for")
    assert first_provider.calls == 20
    snapshot = cache_path.read_bytes()

    second_provider = FixtureProvider(fixtures)
    reopened = CaptionCache(cache_path)
    for query in queries:
        generate_captions(query, build_prompt(query), second_provider, reopened)
    assert second_provider.calls == 0
    assert cache_path.read_bytes() == snapshot

    for raw, expected_category in MALFORMED:
        with pytest.raises(ParseFailure) as err:
            parse_response(raw)
        assert err.value.category == expected_category
    passed(8, "20-query fixture cache byte-stable with zero second-pass provider calls")


def test_criterion_9_store_roundtrip_and_corruption(tmp_path):
    rng = np.random.default_rng(99)
    for i in range(1000):
        dim = int(rng.integers(1, 65)) if i % 100 else int(rng.integers(65, 513))
        count = int(rng.integers(0, 33))
        ids = [f"v{i}-{j}" for j in range(count)]
        entries = [(x, rng.standard_normal(dim).astype(np.float32)) for x in ids]
        store = EmbeddingStore(dim=dim, entries=entries, source_tag=f"tag{i % 5}")
        path = tmp_path / "probe.mcre"
        write_embedding_store(store, path)
        back = read_embedding_store(path)
        assert back.dim == store.dim and back.ids() == store.ids()
        assert back.source_tag == store.source_tag
        assert all(
            a.tobytes() == b.tobytes() for (_, a), (_, b) in zip(store.entries, back.entries)
        )

    target = tmp_path / "victim.mcre"
    write_embedding_store(
        EmbeddingStore(
            dim=4,
            entries=[("aa", np.ones(4, np.float32)), ("bb", np.zeros(4, np.float32))],
            source_tag="t",
        ),
        target,
    )
    pristine = target.read_bytes()

    for cut in (0, 3, 12, 19, 24, 30, len(pristine) - 1):
        target.write_bytes(pristine[:cut])
        with pytest.raises(TruncatedFile):
            read_embedding_store(target)

    mutated = bytearray(pristine)
    mutated[:4] = b"XXXX"
    target.write_bytes(bytes(mutated))
    with pytest.raises(BadMagic):
        read_embedding_store(target)

    mutated = bytearray(pristine)
    mutated[4:8] = struct.pack("<I", 99)
    target.write_bytes(bytes(mutated))
    with pytest.raises(UnsupportedVersion):
        read_embedding_store(target)

    mutated = bytearray(pristine)
    at = 20 + 2 + 1  # header + tag length + tag "t"
    mutated[at + 2 : at + 4] = b"aa"  # first id slot
    mutated[at + 6 : at + 8] = b"aa"  # second id slot
    target.write_bytes(bytes(mutated))
    with pytest.raises(DuplicateId):
        read_embedding_store(target)
    passed(9, "1000 random stores round-trip bit-exactly; corruptions categorized")
