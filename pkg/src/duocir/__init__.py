"""Two-stage composed image retrieval with dual-caption queries."""

from .captions import CaptionCache, CaptionPair, generate_captions, parse_response
from .datasets import EvalRecord, load_cirr, load_fashioniq
from .engine import (
    GalleryIndex,
    QueryEmbeddings,
    RankedResult,
    RetrievalConfig,
    RetrievalMode,
    retrieve,
    stage1_filter,
    stage2_rerank,
)
from .harness import emit_report, run_ablations, run_benchmark, run_queries, validate_ids
from .metrics import MetricReport, recall_at_k, recall_subset_at_k
from .prompts import ComposedQuery, PromptTemplate, ReasoningPrompt, build_prompt, register_template
from .providers import CaptionProvider, FixtureProvider, HttpProvider
from .store import EmbeddingStore, caption_keys, read_embedding_store, write_embedding_store
from .vectors import FusionWeights, Scored, cosine_sim, fuse, normalize, top_k

__version__ = "0.1.0"
