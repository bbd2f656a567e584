"""Shared text machinery: tokenization, TF-IDF vectors, cosine, centroid.

Everything here is pure and deterministic; models and vectors are plain
immutable-by-convention containers that are safe to share across threads.
Vectors are sparse maps from vocabulary index to weight.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

# Split on any non-alphanumeric character (underscore is not alphanumeric).
_SPLIT = re.compile(r"[\W_]+", re.UNICODE)

TfIdfVector = dict[int, float]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop tokens shorter than 2."""
    return [t for t in _SPLIT.split(text.lower()) if len(t) >= 2]


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: dict[str, int]      # term -> vector index
    document_frequency: dict[str, int]
    n_docs: int


def fit_tfidf(docs: list[str]) -> TfIdfModel:
    """Fit a TF-IDF model on a document collection.

    Document frequency counts each term once per document. Vocabulary
    indices are assigned in sorted term order so equal corpora always
    produce identical models.
    """
    if not docs:
        raise ValueError("cannot fit a TF-IDF model on an empty document list")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(tokenize(doc)))
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    return TfIdfModel(vocabulary=vocabulary, document_frequency=dict(df), n_docs=len(docs))


def idf(model: TfIdfModel, term: str) -> float:
    """Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1."""
    d = model.document_frequency.get(term, 0)
    return math.log((1 + model.n_docs) / (1 + d)) + 1.0


def vectorize(model: TfIdfModel, text: str) -> TfIdfVector:
    """Map text to an L2-normalized sparse tf·idf vector.

    Out-of-vocabulary tokens are ignored; text with no in-vocabulary
    tokens yields the zero vector (an empty map).
    """
    counts = Counter(t for t in tokenize(text) if t in model.vocabulary)
    if not counts:
        return {}
    weights = {model.vocabulary[t]: tf * idf(model, t) for t, tf in counts.items()}
    norm = math.sqrt(sum(w * w for w in weights.values()))
    return {i: w / norm for i, w in weights.items()}


def cosine(a: TfIdfVector, b: TfIdfVector) -> float:
    """Cosine similarity a·b / (|a||b|); 0.0 when either vector is zero."""
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[i] for i, w in a.items() if i in b)
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def centroid(vectors: list[TfIdfVector]) -> TfIdfVector:
    """Component-wise mean of vectors.

    The result is intentionally not re-normalized: novelty compares
    against it with cosine, which is scale-invariant.
    """
    if not vectors:
        raise ValueError("centroid of an empty vector list is undefined")
    total: dict[int, float] = {}
    for vec in vectors:
        for i, w in vec.items():
            total[i] = total.get(i, 0.0) + w
    n = len(vectors)
    return {i: w / n for i, w in sorted(total.items())}
