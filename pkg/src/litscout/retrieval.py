"""Offline search: Okapi BM25 inverted index, bag-of-words and hybrid search,
and two-stage retrieval behind a pluggable reranking scorer.

All searches return `(doc_id, score)` pairs in descending score order with
ties broken by ascending doc id, so rankings are total orders and exports
stay byte-identical across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

from .textproc import cosine, fit_tfidf, tokenize, vectorize

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75


@dataclass(frozen=True)
class Bm25Index:
    postings: dict[str, list[tuple[str, int]]]  # term -> [(doc_id, term frequency)]
    doc_lengths: dict[str, int]
    avg_doc_length: float
    n_docs: int
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


class RerankScorer(Protocol):
    """Second-stage scorer for (query, document) pairs; higher means more relevant."""

    name: str

    def score(self, query: str, doc: str) -> float: ...


@dataclass(frozen=True)
class TokenOverlapScorer:
    """Reference reranker: |query tokens ∩ doc tokens| / |query tokens|."""

    name: str = "token_overlap"

    def score(self, query: str, doc: str) -> float:
        q = set(tokenize(query))
        if not q:
            return 0.0
        return len(q & set(tokenize(doc))) / len(q)


def build_index(docs: list[tuple[str, str]], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    """Build an immutable BM25 inverted index over (doc_id, text) pairs."""
    if not docs:
        raise ValueError("cannot index an empty document list")
    if k1 <= 0:
        raise ValueError("k1 must be > 0")
    if not 0 <= b <= 1:
        raise ValueError("b must lie in [0, 1]")
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc_id, text in docs:
        if doc_id in doc_lengths:
            raise ValueError(f"duplicate doc id {doc_id!r}")
        tokens = tokenize(text)
        doc_lengths[doc_id] = len(tokens)
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((doc_id, tf))
    avgdl = sum(doc_lengths.values()) / len(doc_lengths)
    return Bm25Index(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avgdl,
        n_docs=len(doc_lengths),
        k1=k1,
        b=b,
    )


def bm25_idf(index: Bm25Index, term: str) -> float:
    """Okapi idf: ln(1 + (N - df + 0.5) / (df + 0.5))."""
    df = len(index.postings.get(term, ()))
    return math.log(1 + (index.n_docs - df + 0.5) / (df + 0.5))


def bm25_scores(index: Bm25Index, query: str) -> dict[str, float]:
    """Raw BM25 scores for every document matching at least one query token.

    Query tokens are treated as a sequence: repeated tokens contribute
    once per occurrence.
    """
    scores: dict[str, float] = {}
    k1, b = index.k1, index.b
    avgdl = index.avg_doc_length
    for term in tokenize(query):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = bm25_idf(index, term)
        for doc_id, tf in plist:
            norm = k1 * (1 - b + b * index.doc_lengths[doc_id] / avgdl)
            contribution = idf * tf * (k1 + 1) / (tf + norm)
            scores[doc_id] = scores.get(doc_id, 0.0) + contribution
    return scores


def _ranked(scores: dict[str, float], k: int | None) -> list[tuple[str, float]]:
    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ordered if k is None else ordered[:k]


def bm25_search(index: Bm25Index, query: str, k: int | None = None) -> list[tuple[str, float]]:
    """Top-k documents by raw BM25 score; zero-score documents excluded."""
    scores = {d: s for d, s in bm25_scores(index, query).items() if s > 0.0}
    return _ranked(scores, k)


def cosine_scores(query: str, docs: list[tuple[str, str]]) -> dict[str, float]:
    """TF-IDF cosine of the query against each document, fit on the documents."""
    if not docs:
        return {}
    model = fit_tfidf([text for _, text in docs])
    qv = vectorize(model, query)
    return {doc_id: cosine(qv, vectorize(model, text)) for doc_id, text in docs}


def simple_search(query: str, docs: list[tuple[str, str]], k: int | None = None) -> list[tuple[str, float]]:
    """Bag-of-words baseline: rank by TF-IDF cosine similarity."""
    scores = {d: s for d, s in cosine_scores(query, docs).items() if s > 0.0}
    return _ranked(scores, k)


def _min_max(raw: dict[str, float], candidates: list[str]) -> dict[str, float]:
    values = [raw.get(c, 0.0) for c in candidates]
    lo, hi = min(values), max(values)
    if hi == lo:
        level = 1.0 if hi > 0 else 0.0
        return {c: level for c in candidates}
    return {c: (raw.get(c, 0.0) - lo) / (hi - lo) for c in candidates}


def hybrid_search(
    index: Bm25Index, docs: list[tuple[str, str]], query: str, k: int | None = None
) -> list[tuple[str, float]]:
    """Fuse BM25 and bag-of-words signals with an equal-weight min-max mix."""
    bm_raw = {d: s for d, s in bm25_scores(index, query).items() if s > 0.0}
    cos_raw = {d: s for d, s in cosine_scores(query, docs).items() if s > 0.0}
    candidates = sorted(set(bm_raw) | set(cos_raw))
    if not candidates:
        return []
    bm_norm = _min_max(bm_raw, candidates)
    cos_norm = _min_max(cos_raw, candidates)
    fused = {c: 0.5 * bm_norm[c] + 0.5 * cos_norm[c] for c in candidates}
    return _ranked(fused, k)


def multistage_search(
    index: Bm25Index,
    docs: list[tuple[str, str]],
    scorer: RerankScorer,
    query: str,
    first_k: int = 200,
    final_k: int | None = None,
) -> list[tuple[str, float]]:
    """Two-stage retrieval: BM25 candidate generation, then rerank by `scorer`.

    The rerank sort is stable with respect to first-stage order, so a
    constant scorer reproduces the BM25 ranking.
    """
    if final_k is None:
        final_k = first_k
    if final_k > first_k:
        raise ValueError(f"final_k ({final_k}) must be <= first_k ({first_k})")
    stage_one = bm25_search(index, query, first_k)
    texts = dict(docs)
    rescored: list[tuple[str, float]] = []
    for doc_id, _ in stage_one:
        try:
            rescored.append((doc_id, scorer.score(query, texts[doc_id])))
        except Exception as exc:
            raise RuntimeError(
                f"rerank scorer {scorer.name!r} failed on query={query!r} doc={doc_id!r}: {exc}"
            ) from exc
    rescored.sort(key=lambda item: item[1], reverse=True)  # stable: ties keep stage-1 order
    return rescored[:final_k]
