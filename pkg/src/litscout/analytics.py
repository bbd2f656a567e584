"""Aggregate statistics and templated, deterministic insight lines."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .corpus import PaperRecord
from .textproc import tokenize

# Fixed English stopword list used for keyword counts and query expansion.
STOPWORDS = frozenset("""
a about above after again against all also am an and any are as at back be
because been before being below between both but by can cannot could did do
does doing down during each even few for from further had has have having he
her here hers herself him himself his how i if in into is it its itself just
like me more most my myself new no nor not now of off on once one only or
other our ours ourselves out over own same she should so some still such than
that the their theirs them themselves then there these they this those
through to too under until up us use used using very via was we were what
when where which while who whom why will with within without would you your
yours yourself
""".split())

TOP_LIST_SIZE = 10
KEYWORD_LIST_SIZE = 20
PROLIFIC_THRESHOLD = 2


@dataclass
class Stats:
    year_distribution: dict[int, int] = field(default_factory=dict)
    missing_year: int = 0
    source_distribution: dict[str, int] = field(default_factory=dict)
    top_authors: list[tuple[str, int]] = field(default_factory=list)
    top_venues: list[tuple[str, int]] = field(default_factory=list)
    keyword_frequency: list[tuple[str, int]] = field(default_factory=list)
    citation_stats: dict[str, float] | None = None
    score_stats: dict[str, float] | None = None


def _top(counter: Counter[str], limit: int) -> list[tuple[str, int]]:
    return sorted(counter.items(), key=lambda item: (-item[1], item[0]))[:limit]


def _median_lower(ordered: list[int]) -> float:
    # lower median for even-length lists
    return float(ordered[(len(ordered) - 1) // 2])


def compute_stats(papers: list[PaperRecord]) -> Stats:
    """All aggregate statistics over the current paper list; empty-safe."""
    stats = Stats()
    if not papers:
        return stats

    years = Counter(p.year for p in papers if p.year is not None)
    stats.year_distribution = dict(sorted(years.items()))
    stats.missing_year = sum(1 for p in papers if p.year is None)
    stats.source_distribution = dict(sorted(Counter(p.source for p in papers).items()))
    stats.top_authors = _top(Counter(a for p in papers for a in p.authors if a), TOP_LIST_SIZE)
    stats.top_venues = _top(Counter(p.venue for p in papers if p.venue), TOP_LIST_SIZE)

    title_terms = Counter(
        t for p in papers for t in tokenize(p.title) if t not in STOPWORDS
    )
    stats.keyword_frequency = _top(title_terms, KEYWORD_LIST_SIZE)

    citations = sorted(p.citations for p in papers if p.citations is not None)
    if citations:
        stats.citation_stats = {
            "total": float(sum(citations)),
            "mean": sum(citations) / len(citations),
            "median": _median_lower(citations),
            "min": float(citations[0]),
            "max": float(citations[-1]),
        }

    scored = [p.scores for p in papers if p.scores is not None]
    if scored:
        n = len(scored)
        stats.score_stats = {
            "similarity": sum(s.similarity for s in scored) / n,
            "novelty": sum(s.novelty for s in scored) / n,
            "recency": sum(s.recency for s in scored) / n,
            "bm25": sum(s.bm25_norm for s in scored) / n,
        }
    return stats


def generate_insights(stats: Stats, papers: list[PaperRecord]) -> list[str]:
    """Fixed-template insight lines in a fixed order; inapplicable lines omitted."""
    if not papers:
        return []
    lines: list[str] = []

    if stats.year_distribution:
        # most publications; ties resolved toward the most recent year
        year, count = max(stats.year_distribution.items(), key=lambda item: (item[1], item[0]))
        lines.append(f"Most papers ({count} of {len(papers)}) were published in {year}.")

    if stats.source_distribution:
        source, count = min(stats.source_distribution.items(), key=lambda item: (-item[1], item[0]))
        lines.append(f"Primary source: {source} contributed {count} of {len(papers)} papers.")

    prolific = [(name, n) for name, n in stats.top_authors if n >= PROLIFIC_THRESHOLD][:3]
    if prolific:
        listed = ", ".join(f"{name} ({n})" for name, n in prolific)
        lines.append(f"Prolific authors: {listed}.")

    cited = [p for p in papers if p.citations is not None]
    if cited:
        leader = min(cited, key=lambda p: (-p.citations, p.title))
        lines.append(f"Most cited: \"{leader.title}\" with {leader.citations} citations.")

    if stats.keyword_frequency:
        hot = ", ".join(term for term, _ in stats.keyword_frequency[:5])
        lines.append(f"Hot topics: {hot}.")

    with_pdf = sum(1 for p in papers if p.pdf_url)
    percent = 100.0 * with_pdf / len(papers)
    lines.append(f"Open access: {percent:.0f}% of papers have direct PDF links.")
    return lines
