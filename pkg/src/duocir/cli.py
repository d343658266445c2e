"""Operator CLI: captions, embed-ingest, retrieve, eval, ablate, sweep.

Exit codes: 0 success, 1 operational failure, 2 config/validation error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import captions as cap
from . import harness
from .config import ConfigError, ProviderConfig, RunConfig, load_config
from .datasets import EvalRecord, load_cirr, load_fashioniq
from .engine import GalleryIndex, RetrievalMode, retrieve
from .errors import InvalidWeights, PipelineError
from .prompts import ComposedQuery, build_prompt
from .providers import CaptionProvider, FixtureProvider, HttpProvider
from .store import read_embedding_store, write_embedding_store
from .vectors import FusionWeights

OK, FAILURE, BAD_CONFIG = 0, 1, 2


def load_records(cfg: RunConfig) -> list[EvalRecord]:
    cfg.require_paths("annotations")
    if cfg.dataset == "fashioniq":
        if not cfg.category:
            raise ConfigError("dataset.category is required for fashioniq")
        return load_fashioniq(cfg.annotations, cfg.category)
    return load_cirr(cfg.annotations)


def load_gallery(cfg: RunConfig) -> GalleryIndex:
    cfg.require_paths("gallery_store")
    return GalleryIndex.from_store(read_embedding_store(cfg.gallery_store))


def load_caption_embeddings(cfg: RunConfig) -> dict[str, np.ndarray]:
    cfg.require_paths("caption_store")
    return read_embedding_store(cfg.caption_store).as_dict()


def make_provider(p: ProviderConfig) -> CaptionProvider:
    if p.kind == "fixture":
        if not p.fixture_dir:
            raise ConfigError("provider.fixture_dir is required for the fixture provider")
        return FixtureProvider(p.fixture_dir)
    if p.kind == "http":
        if not p.endpoint or not p.model:
            raise ConfigError("provider.endpoint and provider.model are required for http")
        return HttpProvider(
            endpoint=p.endpoint,
            api_key_env=p.api_key_env,
            model=p.model,
            timeout=p.timeout,
            temperature=p.temperature,
            min_interval=p.min_interval,
        )
    raise ConfigError(f"unknown provider kind {p.kind!r}")


def _out_path(cfg: RunConfig, name: str) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def cmd_captions(cfg: RunConfig, args) -> int:
    records = load_records(cfg)
    if args.limit:
        records = records[: args.limit]
    if args.provider:
        cfg.provider.kind = args.provider
    if args.dry_run:
        print(f"captions: would process {len(records)} queries with {cfg.provider.kind} provider")
        return OK
    provider = make_provider(cfg.provider)
    cache = cap.CaptionCache(cfg.caption_cache)

    generated = cached = 0
    failures: list[tuple[str, str]] = []

    def one(rec: EvalRecord) -> str:
        query = ComposedQuery(rec.query_id, _image_ref(cfg, rec.reference_id), rec.modification_text)
        prompt = build_prompt(query, cfg.template_id)
        if cache.get(query.query_id, prompt.prompt_hash, provider.provider_id) is not None:
            return "cached"
        cap.generate_captions(
            query, prompt, provider, cache, max_attempts=cfg.provider.max_retries
        )
        return "generated"

    with ThreadPoolExecutor(max_workers=max(1, cfg.provider.in_flight)) as pool:
        futures = {pool.submit(one, rec): rec for rec in records}
        for future, rec in futures.items():
            try:
                outcome = future.result()
                generated += outcome == "generated"
                cached += outcome == "cached"
            except PipelineError as e:
                failures.append((rec.query_id, str(e)))

    print(f"captions: {generated} generated, {cached} cached, {len(failures)} failed")
    for qid, why in failures:
        print(f"  FAILED {qid}: {why}", file=sys.stderr)
    return FAILURE if failures else OK


def _image_ref(cfg: RunConfig, reference_id: str) -> str:
    """Opaque handle without images_dir; otherwise the resolved image path."""
    if not cfg.images_dir:
        return reference_id
    base = Path(cfg.images_dir)
    for suffix in ("", ".png", ".jpg", ".jpeg", ".webp"):
        candidate = base / f"{reference_id}{suffix}"
        if candidate.is_file():
            return str(candidate)
    return str(base / reference_id)


def cmd_embed_ingest(cfg: RunConfig, args) -> int:
    store = read_embedding_store(args.store_in)
    records = load_records(cfg)
    keys = set(store.ids())
    if args.role == "gallery":
        wanted = {r.reference_id for r in records} | {t for r in records for t in r.target_ids}
    else:
        wanted = {k for r in records for k in harness.caption_keys(r.query_id)}
    missing = sorted(wanted - keys)
    print(
        f"embed-ingest: {len(store)} vectors, dim {store.dim}, tag {store.source_tag!r}; "
        f"{len(missing)} unresolved {args.role} ids"
    )
    if args.dry_run:
        return OK if not missing else FAILURE
    if missing:
        for item in missing[:20]:
            print(f"  MISSING {item}", file=sys.stderr)
        return FAILURE
    write_embedding_store(store, args.store_out or args.store_in)
    return OK


def cmd_retrieve(cfg: RunConfig, args) -> int:
    records = load_records(cfg)
    by_qid = {r.query_id: r for r in records}
    if args.query_id not in by_qid:
        print(f"unknown query id {args.query_id!r}", file=sys.stderr)
        return FAILURE
    if args.dry_run:
        print(f"retrieve: would rank query {args.query_id}")
        return OK
    record = by_qid[args.query_id]
    gallery = load_gallery(cfg)
    caption_embeddings = load_caption_embeddings(cfg)
    harness.validate_ids([record], gallery, caption_embeddings)
    q = harness.query_embeddings_for(record, gallery, caption_embeddings)
    result = retrieve(record.query_id, q, gallery, cfg.retrieval, reference_id=record.reference_id)

    print(f"query {record.query_id} (mode {result.mode.value}), top {args.top}:")
    print(f"{'rank':>4}  {'id':<24}  {'S_1st':>9}  {'S_2nd':>9}")
    for rank, scored in enumerate(result.ranking[: args.top], start=1):
        s1 = result.stage1_score(scored.id)
        s1_text = f"{s1:9.6f}" if s1 is not None else "        -"
        s2_text = f"{scored.score:9.6f}" if result.mode != RetrievalMode.NO_RERANK else "        -"
        print(f"{rank:>4}  {scored.id:<24}  {s1_text}  {s2_text}")
    return OK


def _benchmark_inputs(cfg: RunConfig):
    records = load_records(cfg)
    gallery = load_gallery(cfg)
    caption_embeddings = load_caption_embeddings(cfg)
    return records, gallery, caption_embeddings


def cmd_eval(cfg: RunConfig, args) -> int:
    if args.mode:
        cfg.retrieval = replace(cfg.retrieval, mode=RetrievalMode(args.mode))
    if args.dry_run:
        records = load_records(cfg)
        cfg.require_paths("gallery_store", "caption_store")
        print(f"eval: would score {len(records)} queries in mode {cfg.retrieval.mode.value}")
        return OK
    records, gallery, caption_embeddings = _benchmark_inputs(cfg)

    if args.format == "submission":
        results = harness.run_queries(records, gallery, caption_embeddings, cfg.retrieval, cfg.workers)
        text = harness.emit_report([], "submission", results=results, submission_top=args.submission_top)
        path = _out_path(cfg, f"submission_{cfg.dataset}.jsonl")
    else:
        report = harness.run_benchmark(
            records,
            gallery,
            caption_embeddings,
            cfg.retrieval,
            cfg.Ks,
            cfg.subset_Ks or None,
            dataset=cfg.dataset,
            category=cfg.category,
            workers=cfg.workers,
        )
        text = harness.emit_report([report], args.format)
        path = _out_path(cfg, f"eval_{cfg.dataset}.{args.format if args.format != 'table' else 'txt'}")
    path.write_text(text)
    print(text, end="")
    print(f"wrote {path}")
    return OK


def cmd_ablate(cfg: RunConfig, args) -> int:
    if args.dry_run:
        records = load_records(cfg)
        cfg.require_paths("gallery_store", "caption_store")
        print(f"ablate: would run {len(harness.ABLATION_MODES)} modes over {len(records)} queries")
        return OK
    records, gallery, caption_embeddings = _benchmark_inputs(cfg)
    reports = harness.run_ablations(
        records,
        gallery,
        caption_embeddings,
        cfg.retrieval,
        cfg.Ks,
        cfg.subset_Ks or None,
        dataset=cfg.dataset,
        category=cfg.category,
        workers=cfg.workers,
    )
    print(harness.emit_report(reports, "table"), end="")
    path = _out_path(cfg, f"ablations_{cfg.dataset}.csv")
    path.write_text(harness.emit_report(reports, "csv"))
    print(f"wrote {path}")
    return OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    alphas = [float(x) for x in args.alpha_grid.split(",") if x]
    betas = [float(x) for x in args.beta_grid.split(",") if x]
    ks = [int(x) for x in args.k_grid.split(",")] if args.k_grid else [cfg.retrieval.k]
    grid = [(a, b, k) for a in alphas for b in betas for k in ks]
    if args.dry_run:
        print(f"sweep: {len(grid)} grid points")
        return OK
    records, gallery, caption_embeddings = _benchmark_inputs(cfg)

    reports = []
    skipped = 0
    for alpha, beta, k in grid:
        if alpha + beta > 1.0:
            skipped += 1
            print(f"skipping alpha={alpha} beta={beta}: alpha + beta > 1", file=sys.stderr)
            continue
        trial = replace(cfg.retrieval, weights=FusionWeights(alpha, beta), k=k)
        reports.append(
            harness.run_benchmark(
                records,
                gallery,
                caption_embeddings,
                trial,
                cfg.Ks,
                cfg.subset_Ks or None,
                dataset=cfg.dataset,
                category=cfg.category,
                workers=cfg.workers,
            )
        )
    path = _out_path(cfg, f"sweep_{cfg.dataset}.csv")
    path.write_text(harness.emit_report(reports, "csv"))
    print(f"sweep: {len(reports)} points evaluated, {skipped} skipped")
    print(f"wrote {path}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duocir", description=__doc__)
    parser.add_argument("--config", required=True, help="INI run configuration")
    parser.add_argument("--dry-run", action="store_true", help="validate config and paths only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("captions", help="generate and cache caption pairs")
    p.add_argument("--split", default=None)
    p.add_argument("--limit", type=int, default=0)
    p.add_argument("--provider", choices=["http", "fixture"], default=None)
    p.set_defaults(func=cmd_captions)

    p = sub.add_parser("embed-ingest", help="validate and re-serialize an embedding store")
    p.add_argument("--in", dest="store_in", required=True)
    p.add_argument("--out", dest="store_out", default=None)
    p.add_argument("--role", choices=["gallery", "captions"], default="gallery")
    p.set_defaults(func=cmd_embed_ingest)

    p = sub.add_parser("retrieve", help="rank the gallery for one query")
    p.add_argument("--query-id", required=True)
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("eval", help="run the benchmark and report metrics")
    p.add_argument("--mode", choices=[m.value for m in RetrievalMode], default=None)
    p.add_argument("--format", choices=["table", "csv", "submission"], default="table")
    p.add_argument("--submission-top", type=int, default=50)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run all five retrieval modes")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("sweep", help="grid-search fusion weights and k")
    p.add_argument("--alpha-grid", required=True)
    p.add_argument("--beta-grid", required=True)
    p.add_argument("--k-grid", default="")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.dry_run:
            cfg.require_paths("annotations")
        return args.func(cfg, args)
    except (ConfigError, InvalidWeights, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return BAD_CONFIG
    except PipelineError as e:
        print(f"error: {e}", file=sys.stderr)
        return FAILURE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
