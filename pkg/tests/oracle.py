"""Independent brute-force reference for the two-stage retrieval math.

Pure Python on purpose: no numpy, no imports from the package under test.
Everything is spelled out directly from the definitions so the engine and
this file cannot share a bug.
"""

import math


def dot(a, b):
    return math.fsum(x * y for x, y in zip(a, b))


def norm(v):
    return math.sqrt(math.fsum(x * x for x in v))


def unit(v):
    n = norm(v)
    return [x / n for x in v]


def cosine(a, b):
    score = dot(unit(a), unit(b))
    return min(1.0, max(-1.0, score))


def combine(modification, integration, reference, alpha, beta, pre_normalize=True):
    parts = [modification, integration, reference]
    if pre_normalize:
        parts = [unit(p) for p in parts]
    coeffs = [alpha, beta, 1.0 - alpha - beta]
    return [
        math.fsum(c * p[i] for c, p in zip(coeffs, parts))
        for i in range(len(parts[0]))
    ]


def rank_desc(scored):
    """Descending score, ties by ascending id; returns the full ordering."""
    return sorted(scored, key=lambda pair: (-pair[1], pair[0]))


def filter_top_k(query, gallery, k, exclude=None):
    """Stage 1: cosine of the caption embedding against every gallery item."""
    scored = [
        (item_id, cosine(query, vec))
        for item_id, vec in gallery.items()
        if item_id != exclude
    ]
    return rank_desc(scored)[:k]


def rerank(modification, integration, reference, alpha, beta, candidate_ids, gallery,
           pre_normalize=True):
    """Stage 2: cosine of the fused query against each candidate."""
    fused = combine(modification, integration, reference, alpha, beta, pre_normalize)
    scored = [(item_id, cosine(fused, gallery[item_id])) for item_id in candidate_ids]
    return rank_desc(scored)


def full_pipeline(modification, integration, reference, gallery, k, alpha, beta,
                  exclude=None, pre_normalize=True):
    """Filter then re-rank; returns the final identifier order."""
    candidates = [item_id for item_id, _ in filter_top_k(modification, gallery, k, exclude)]
    return [item_id for item_id, _ in
            rerank(modification, integration, reference, alpha, beta, candidates, gallery,
                   pre_normalize)]


def recall_fraction(rankings, targets, K):
    """rankings/targets: dicts keyed by query id; any-target-in-top-K rule."""
    hits = sum(
        1 for qid in targets if any(i in targets[qid] for i in rankings[qid][:K])
    )
    return hits / len(targets)
