"""Per-paper criterion scores, mode weights, combined score, and sorting.

The three search modes carry fixed default weight sets; a weighted sum of
similarity, recency, novelty and normalized BM25 (plus an optional
citation term, disabled by default) produces the combined score.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .corpus import PaperRecord, scoring_text
from .textproc import TfIdfModel, TfIdfVector, cosine, vectorize

WEIGHT_SUM_TOLERANCE = 1e-9


class SearchMode(str, enum.Enum):
    STABLE = "stable"
    DISCOVERY = "discovery"
    BALANCED = "balanced"


@dataclass(frozen=True)
class ModeWeights:
    """Weights combining the score dimensions; must be non-negative and sum to 1.

    The citation weight w_c defaults to 0 so that the combined score is,
    by default, exactly the four-term similarity/recency/novelty/bm25 mix.
    """

    w_s: float
    w_r: float
    w_n: float
    w_b: float
    w_c: float = 0.0

    def __post_init__(self) -> None:
        weights = (self.w_s, self.w_r, self.w_n, self.w_b, self.w_c)
        if any(w < 0 for w in weights):
            raise ValueError(f"weights must be non-negative, got {weights}")
        total = sum(weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise ValueError(f"weights must sum to 1, got {total!r}")


MODE_WEIGHTS: dict[SearchMode, ModeWeights] = {
    SearchMode.STABLE: ModeWeights(0.5, 0.2, 0.1, 0.2),
    SearchMode.DISCOVERY: ModeWeights(0.3, 0.1, 0.4, 0.2),
    SearchMode.BALANCED: ModeWeights(0.3, 0.2, 0.2, 0.3),
}


@dataclass(frozen=True)
class ScoreVector:
    similarity: float = 0.0
    recency: float = 0.0
    novelty: float = 0.0
    bm25_norm: float = 0.0
    combined: float = 0.0


SORT_CRITERIA = ("recency", "citations", "similarity", "novelty", "bm25", "combined")


def score_similarity(query: str, p: PaperRecord, model: TfIdfModel) -> float:
    """TF-IDF cosine between the query and the paper's title+abstract text."""
    return cosine(vectorize(model, query), vectorize(model, scoring_text(p)))


def score_recency(p: PaperRecord, year_min: int | None, year_max: int | None) -> float:
    """Publication year normalized over the candidate set's year span.

    Papers without a year score 0 (unknown age must not inflate rank).
    A single-year candidate set scores 1 for every dated paper.
    """
    if p.year is None or year_min is None or year_max is None:
        return 0.0
    if year_max == year_min:
        return 1.0
    return (p.year - year_min) / (year_max - year_min)


def score_novelty(p: PaperRecord, centroid_vec: TfIdfVector, model: TfIdfModel) -> float:
    """1 - cosine distance from the candidate-set centroid, clamped to [0, 1]."""
    value = 1.0 - cosine(vectorize(model, scoring_text(p)), centroid_vec)
    return min(1.0, max(0.0, value))


def normalize_bm25(raw_scores: list[float]) -> list[float]:
    """Scale raw BM25 scores into [0, 1] by dividing by the maximum."""
    top = max(raw_scores, default=0.0)
    if top <= 0.0:
        return [0.0] * len(raw_scores)
    return [s / top for s in raw_scores]


def normalize_citations(papers: list[PaperRecord]) -> list[float]:
    """Min-max normalize citation counts over the candidate set; absent -> 0."""
    present = [p.citations for p in papers if p.citations is not None]
    if not present:
        return [0.0] * len(papers)
    lo, hi = min(present), max(present)
    out = []
    for p in papers:
        if p.citations is None:
            out.append(0.0)
        elif hi == lo:
            out.append(1.0)
        else:
            out.append((p.citations - lo) / (hi - lo))
    return out


def combined_score(sv: ScoreVector, w: ModeWeights, citations_norm: float = 0.0) -> float:
    return (
        w.w_s * sv.similarity
        + w.w_r * sv.recency
        + w.w_n * sv.novelty
        + w.w_b * sv.bm25_norm
        + w.w_c * citations_norm
    )


def _criterion_key(p: PaperRecord, criterion: str) -> float:
    if criterion == "citations":
        return float(p.citations) if p.citations is not None else 0.0
    if p.scores is None:
        raise ValueError(f"paper {p.id!r} has no scores; run scoring before sorting by {criterion!r}")
    if criterion == "recency":
        return p.scores.recency
    if criterion == "similarity":
        return p.scores.similarity
    if criterion == "novelty":
        return p.scores.novelty
    if criterion == "bm25":
        return p.scores.bm25_norm
    return p.scores.combined


def sort_papers(papers: list[PaperRecord], criterion: str = "combined") -> list[PaperRecord]:
    """Stable descending sort on one criterion; ranks reassigned 1..n afterwards."""
    if criterion not in SORT_CRITERIA:
        raise ValueError(f"unknown sort criterion {criterion!r}; expected one of {SORT_CRITERIA}")
    ordered = sorted(papers, key=lambda p: _criterion_key(p, criterion), reverse=True)
    return assign_ranks(ordered)


def assign_ranks(papers: list[PaperRecord]) -> list[PaperRecord]:
    """Set rank = position (1-based) on every paper, in place, and return the list."""
    for position, p in enumerate(papers, start=1):
        p.rank = position
    return papers
