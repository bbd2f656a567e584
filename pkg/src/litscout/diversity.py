"""MMR diversification of the top ranking plus hidden-gem and canonical views."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import PaperRecord, scoring_text
from .scoring import SearchMode
from .textproc import TfIdfModel, cosine, vectorize

MODE_LAMBDA: dict[SearchMode, float] = {
    SearchMode.STABLE: 0.8,
    SearchMode.DISCOVERY: 0.5,
    SearchMode.BALANCED: 0.65,
}

# Venue names used to seed the canonical-papers view; configurable.
DEFAULT_TOP_VENUES = frozenset(
    {"iclr", "neurips", "icml", "cvpr", "iros", "icra", "aaai", "acl", "iccv", "emnlp"}
)


def mode_lambda(mode: SearchMode) -> float:
    """Relevance-diversity trade-off for a search mode (1 = pure relevance)."""
    return MODE_LAMBDA[mode]


@dataclass(frozen=True)
class DiversityConfig:
    lambda_: float = 0.65
    window: int = 50
    gems_rank_floor: int = 20
    gems_take: int = 10
    canonical_percentile: float = 90.0
    top_venues: frozenset[str] = DEFAULT_TOP_VENUES

    def __post_init__(self) -> None:
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if not 0.0 < self.canonical_percentile <= 100.0:
            raise ValueError("canonical_percentile must lie in (0, 100]")


def mmr_rerank(
    papers: list[PaperRecord],
    query: str,
    lambda_: float,
    window: int,
    model: TfIdfModel,
) -> list[PaperRecord]:
    """Greedy maximal-marginal-relevance reorder of the top `window` papers.

    Each step selects argmax over remaining candidates of
    lambda * sim(p, query) - (1 - lambda) * max over selected s of sim(p, s),
    with query relevance taken from the papers' similarity scores and
    pairwise similarity as TF-IDF cosine over title+abstract. The first
    pick maximizes lambda * sim(p, query) alone; ties keep the earlier
    prior rank. Papers beyond the window are appended unchanged.
    """
    window = min(window, len(papers))
    if window <= 1:
        return list(papers)
    head, tail = papers[:window], papers[window:]
    relevance = [p.scores.similarity if p.scores else 0.0 for p in head]
    vectors = [vectorize(model, scoring_text(p)) for p in head]

    remaining = list(range(window))
    selected: list[int] = []
    while remaining:
        best_index = 0
        best_value = -math.inf
        for pos, cand in enumerate(remaining):
            penalty = max((cosine(vectors[cand], vectors[s]) for s in selected), default=0.0)
            value = lambda_ * relevance[cand] - (1 - lambda_) * penalty
            if value > best_value:
                best_value = value
                best_index = pos
        selected.append(remaining.pop(best_index))
    return [head[i] for i in selected] + tail


def hidden_gems(papers: list[PaperRecord], rank_floor: int = 20, take: int = 10) -> list[PaperRecord]:
    """High-novelty papers ranked below `rank_floor` in the combined ranking."""
    below = [p for p in papers if p.rank is not None and p.rank > rank_floor and p.scores is not None]
    below.sort(key=lambda p: (-p.scores.novelty, p.rank))
    return below[:take]


def nearest_rank_percentile(values: list[int], percentile: float) -> int:
    """Nearest-rank percentile: smallest value with at least P% of values <= it."""
    if not values:
        raise ValueError("percentile of an empty list is undefined")
    ordered = sorted(values)
    rank = math.ceil(percentile / 100.0 * len(ordered))
    return ordered[max(rank, 1) - 1]


def canonical_papers(
    papers: list[PaperRecord],
    percentile: float = 90.0,
    top_venues: frozenset[str] = DEFAULT_TOP_VENUES,
) -> list[PaperRecord]:
    """Papers with citations at or above the percentile cut, or in a top venue.

    Original rank order is preserved; with no citation data and no venue
    matches the view is empty.
    """
    counts = [p.citations for p in papers if p.citations is not None]
    threshold = nearest_rank_percentile(counts, percentile) if counts else None
    venues = {v.lower() for v in top_venues}

    def qualifies(p: PaperRecord) -> bool:
        if threshold is not None and p.citations is not None and p.citations >= threshold:
            return True
        venue = p.venue.lower()
        return bool(venue) and any(v in venue for v in venues)

    return [p for p in papers if qualifies(p)]
