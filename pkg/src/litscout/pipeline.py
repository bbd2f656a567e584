"""Stage orchestration, pipeline state, and two-stage deduplication.

The orchestrator executes the stage sequence selected by the structure
flag, appends exactly one step-log entry per stage, and regenerates every
export artifact after each stage so the output directory is auditable at
step granularity. Runs are deterministic: with the default logical clock,
equal inputs produce byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import datetime
import re
from dataclasses import dataclass, field
from typing import Callable

from . import exports
from .analytics import Stats, compute_stats, generate_insights
from .connectors import (
    FetchOutcome,
    SourceConfig,
    Transport,
    aggregate_online,
    default_source_configs,
)
from .corpus import CorpusFilter, PaperRecord, load_corpus, searchable_text, scoring_text
from .diversity import DiversityConfig, mmr_rerank, mode_lambda
from .intent import QueryIntent, SearchSpec, classify_intent, expand_query
from .retrieval import (
    RerankScorer,
    TokenOverlapScorer,
    build_index,
    bm25_scores,
    bm25_search,
    hybrid_search,
    multistage_search,
    simple_search,
)
from .scoring import (
    MODE_WEIGHTS,
    ModeWeights,
    ScoreVector,
    SearchMode,
    assign_ranks,
    combined_score,
    normalize_bm25,
    normalize_citations,
    score_novelty,
    score_recency,
    score_similarity,
    sort_papers,
)
from .textproc import TfIdfModel, centroid, fit_tfidf, vectorize

STRUCTURES: dict[str, tuple[str, ...]] = {
    "full": ("intent", "search", "dedup", "score", "sort", "diversify", "analyze", "export"),
    "minimal": ("search", "dedup", "export"),
    "search_sort": ("search", "dedup", "score", "sort", "export"),
    "search_analysis": ("search", "dedup", "analyze", "export"),
    "no_intent": ("search", "dedup", "score", "sort", "diversify", "analyze", "export"),
}

RETRIEVAL_KINDS = ("bm25", "simple", "hybrid", "bm25_rerank")
SEARCH_MODES = ("offline", "online", "both")

PREVIEW_LIMIT = 200

_NON_ALNUM = re.compile(r"[\W_]+", re.UNICODE)


def normalize_title(t: str) -> str:
    """Lowercase, strip punctuation to spaces, collapse whitespace, trim."""
    return _NON_ALNUM.sub(" ", t.lower()).strip()


RICHNESS_FIELDS = ("abstract", "pdf_url", "doi", "citations", "venue")


def richness(p: PaperRecord) -> int:
    """Number of present-and-non-empty metadata fields; higher survives dedup."""
    count = 0
    for name in RICHNESS_FIELDS:
        value = getattr(p, name)
        if value is not None and value != "":
            count += 1
    return count


def _dedup_by(papers: list[PaperRecord], key_of: Callable[[PaperRecord], str | None]) -> list[PaperRecord]:
    slots: dict[str, int] = {}
    survivors: list[PaperRecord | None] = []
    for p in papers:
        key = key_of(p)
        if key is None or key == "":
            survivors.append(p)
            continue
        if key not in slots:
            slots[key] = len(survivors)
            survivors.append(p)
        else:
            slot = slots[key]
            incumbent = survivors[slot]
            if richness(p) > richness(incumbent):  # ties keep the earlier record
                survivors[slot] = p
    return [p for p in survivors if p is not None]


def dedup(papers: list[PaperRecord]) -> list[PaperRecord]:
    """Two-stage dedup: exact DOI groups, then normalized-title groups.

    Each group keeps its richest record at the group's first-occurrence
    position; ties keep the earlier record.
    """
    stage_one = _dedup_by(papers, lambda p: p.doi)
    return _dedup_by(stage_one, lambda p: normalize_title(p.title))


@dataclass
class StepEntry:
    timestamp: str
    stage_name: str
    action: str
    params: dict
    result_preview: str
    paper_count: int

    def __post_init__(self) -> None:
        self.result_preview = self.result_preview[:PREVIEW_LIMIT]


@dataclass
class PipelineConfig:
    structure: str = "full"
    mode: SearchMode = SearchMode.BALANCED
    retrieval: str = "bm25"
    search_mode: str = "offline"
    filter: CorpusFilter = field(default_factory=CorpusFilter)
    max_results: int = 50
    weights: ModeWeights | None = None
    seed: int = 0
    corpus_path: str | None = None
    diversity: DiversityConfig | None = None
    bm25_k1: float = 1.5
    bm25_b: float = 0.75
    rerank_first_k: int = 200

    def __post_init__(self) -> None:
        if self.structure not in STRUCTURES:
            raise ValueError(f"unknown structure {self.structure!r}; expected one of {tuple(STRUCTURES)}")
        if self.retrieval not in RETRIEVAL_KINDS:
            raise ValueError(f"unknown retrieval {self.retrieval!r}; expected one of {RETRIEVAL_KINDS}")
        if self.search_mode not in SEARCH_MODES:
            raise ValueError(f"unknown search_mode {self.search_mode!r}; expected one of {SEARCH_MODES}")
        if self.max_results < 1:
            raise ValueError("max_results must be >= 1")


@dataclass
class PipelineState:
    query: str
    config: PipelineConfig
    output_dir: str
    step: int = 0
    papers: list[PaperRecord] = field(default_factory=list)
    step_log: list[StepEntry] = field(default_factory=list)
    stats: Stats | None = None
    insights: list[str] = field(default_factory=list)
    intent: QueryIntent | None = None
    search_spec: SearchSpec | None = None
    fetch_outcomes: list[FetchOutcome] = field(default_factory=list)
    benchmark_report: dict | None = None


def logical_clock(start: datetime.datetime | None = None) -> Callable[[], str]:
    """Deterministic clock: a fixed base instant advancing one second per call.

    This is the default so that repeated runs over identical inputs yield
    byte-identical artifacts, including logged timestamps.
    """
    base = start or datetime.datetime(2000, 1, 1, tzinfo=datetime.timezone.utc)
    counter = {"n": 0}

    def tick() -> str:
        stamp = base + datetime.timedelta(seconds=counter["n"])
        counter["n"] += 1
        return stamp.isoformat().replace("+00:00", "Z")

    return tick


def wall_clock() -> Callable[[], str]:
    """Real wall time, for interactive runs where audit times matter."""

    def tick() -> str:
        return datetime.datetime.now(datetime.timezone.utc).isoformat()

    return tick


@dataclass
class _RunContext:
    transport: Transport | None
    scorer: RerankScorer
    sources: list[SourceConfig] | None
    corpus: list[PaperRecord] | None
    filter: CorpusFilter = field(default_factory=CorpusFilter)
    mode: SearchMode = SearchMode.BALANCED
    search_mode: str = "offline"
    max_results: int = 50
    sort_criterion: str = "combined"
    model: TfIdfModel | None = None


def _offline_candidates(config: PipelineConfig, ctx: _RunContext) -> list[PaperRecord]:
    if ctx.corpus is not None:
        records = [p for p in ctx.corpus if ctx.filter.matches(p)]
    else:
        if not config.corpus_path:
            raise ValueError("offline search requires a corpus (corpus_path or preloaded records)")
        records, _ = load_corpus(config.corpus_path, ctx.filter)
    # fresh copies: loaded corpora stay immutable and shareable across runs
    return [dataclasses.replace(p, scores=None, rank=None) for p in records]


def _offline_search(query: str, config: PipelineConfig, ctx: _RunContext) -> list[PaperRecord]:
    pool = _offline_candidates(config, ctx)
    if not pool:
        return []
    docs = [(p.id, searchable_text(p)) for p in pool]
    by_id = {p.id: p for p in pool}
    k = ctx.max_results
    if config.retrieval == "simple":
        ranked = simple_search(query, docs, k)
    else:
        index = build_index(docs, k1=config.bm25_k1, b=config.bm25_b)
        if config.retrieval == "bm25":
            ranked = bm25_search(index, query, k)
        elif config.retrieval == "hybrid":
            ranked = hybrid_search(index, docs, query, k)
        else:  # bm25_rerank
            first_k = max(config.rerank_first_k, k)
            ranked = multistage_search(index, docs, ctx.scorer, query, first_k=first_k, final_k=k)
    return [by_id[doc_id] for doc_id, _ in ranked]


def _online_search(query: str, ctx: _RunContext) -> tuple[list[PaperRecord], list[FetchOutcome]]:
    configs = ctx.sources if ctx.sources is not None else default_source_configs()
    if ctx.transport is None:
        # Hermetic by default: online sources are skipped unless a transport
        # (live or recorded) is supplied explicitly.
        return [], [FetchOutcome(source=c.source, status="skipped", detail="no transport") for c in configs]
    records, outcomes = aggregate_online(configs, query, ctx.max_results, ctx.transport)
    return [p for p in records if ctx.filter.matches(p)], outcomes


def _stage_intent(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    intent = classify_intent(state.query)
    spec = expand_query(state.query)
    state.intent = intent
    state.search_spec = spec
    if intent.conferences or intent.year_min is not None or intent.year_max is not None:
        ctx.filter = CorpusFilter(
            conferences=frozenset(ctx.filter.conferences | intent.conferences),
            year_min=intent.year_min if intent.year_min is not None else ctx.filter.year_min,
            year_max=intent.year_max if intent.year_max is not None else ctx.filter.year_max,
        )
    if intent.mode != SearchMode.BALANCED:
        ctx.mode = intent.mode
    if intent.search_mode != "offline":
        ctx.search_mode = intent.search_mode
    if intent.max_results is not None:
        ctx.max_results = intent.max_results
    if intent.sort_preference is not None:
        ctx.sort_criterion = intent.sort_preference
    params = {
        "conferences": sorted(intent.conferences),
        "year_min": intent.year_min,
        "year_max": intent.year_max,
        "search_mode": ctx.search_mode,
        "mode": ctx.mode.value,
        "sort": ctx.sort_criterion,
    }
    preview = f"keywords={','.join(spec.core_keywords[:5])} filters={len(intent.conferences)} venue(s)"
    return "classify_intent", params, preview


def _stage_search(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    papers: list[PaperRecord] = []
    if ctx.search_mode in ("offline", "both"):
        papers.extend(_offline_search(state.query, state.config, ctx))
    if ctx.search_mode in ("online", "both"):
        online, outcomes = _online_search(state.query, ctx)
        papers.extend(online)
        state.fetch_outcomes = outcomes
    state.papers = papers
    params = {
        "retrieval": state.config.retrieval,
        "search_mode": ctx.search_mode,
        "max_results": ctx.max_results,
        "sources": ",".join(f"{o.source}:{o.status}:{len(o.records)}" for o in state.fetch_outcomes),
    }
    if papers:
        preview = f"retrieved {len(papers)} papers; top: {papers[0].title}"
    else:
        preview = "WARNING: retrieval returned zero papers"
    return "search", params, preview


def _stage_dedup(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    before = len(state.papers)
    state.papers = dedup(state.papers)[: ctx.max_results]
    removed = before - len(state.papers)
    return "dedup", {"before": before, "after": len(state.papers)}, f"removed {removed} duplicates"


def _stage_score(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    papers = state.papers
    weights = state.config.weights or MODE_WEIGHTS[ctx.mode]
    if papers:
        model = fit_tfidf([scoring_text(p) for p in papers])
        ctx.model = model
        vectors = [vectorize(model, scoring_text(p)) for p in papers]
        center = centroid(vectors)
        years = [p.year for p in papers if p.year is not None]
        year_min = min(years) if years else None
        year_max = max(years) if years else None
        index = build_index(
            [(p.id, searchable_text(p)) for p in papers],
            k1=state.config.bm25_k1,
            b=state.config.bm25_b,
        )
        raw = bm25_scores(index, state.query)
        bm25_norm = normalize_bm25([raw.get(p.id, 0.0) for p in papers])
        citations_norm = normalize_citations(papers) if weights.w_c > 0 else [0.0] * len(papers)
        # scores are stored at 6 decimals so JSON artifacts round-trip exactly
        for i, p in enumerate(papers):
            sv = ScoreVector(
                similarity=round(score_similarity(state.query, p, model), 6),
                recency=round(score_recency(p, year_min, year_max), 6),
                novelty=round(score_novelty(p, center, model), 6),
                bm25_norm=round(bm25_norm[i], 6),
            )
            p.scores = dataclasses.replace(
                sv, combined=round(combined_score(sv, weights, citations_norm[i]), 6)
            )
    params = {
        "mode": ctx.mode.value,
        "weights": [weights.w_s, weights.w_r, weights.w_n, weights.w_b, weights.w_c],
    }
    return "score", params, f"scored {len(papers)} papers ({ctx.mode.value} weights)"


def _stage_sort(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    state.papers = sort_papers(state.papers, ctx.sort_criterion)
    top = state.papers[0].title if state.papers else "none"
    return "sort", {"criterion": ctx.sort_criterion}, f"sorted by {ctx.sort_criterion}; top: {top}"


def _diversity_config(state: PipelineState, ctx: _RunContext) -> DiversityConfig:
    if state.config.diversity is not None:
        return state.config.diversity
    return DiversityConfig(lambda_=mode_lambda(ctx.mode))


def _stage_diversify(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    dcfg = _diversity_config(state, ctx)
    scored = [p for p in state.papers if p.scores is not None]
    if state.papers and ctx.model is not None and len(scored) == len(state.papers):
        window = min(dcfg.window, len(state.papers))
        state.papers = mmr_rerank(state.papers, state.query, dcfg.lambda_, window, ctx.model)
        assign_ranks(state.papers)
        preview = f"MMR over top {window} (lambda={dcfg.lambda_})"
    else:
        preview = "skipped: papers are unscored"
    return "diversify", {"lambda": dcfg.lambda_, "window": dcfg.window}, preview


def _stage_analyze(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    state.stats = compute_stats(state.papers)
    state.insights = generate_insights(state.stats, state.papers)
    preview = state.insights[0] if state.insights else "no insights (empty result set)"
    return "analyze", {"insights": len(state.insights)}, preview


def _stage_export(state: PipelineState, ctx: _RunContext) -> tuple[str, dict, str]:
    names = ", ".join(exports.ARTIFACT_FILENAMES)
    return "export", {"artifacts": len(exports.ARTIFACT_FILENAMES)}, f"synchronized: {names}"


_STAGE_FUNCTIONS = {
    "intent": _stage_intent,
    "search": _stage_search,
    "dedup": _stage_dedup,
    "score": _stage_score,
    "sort": _stage_sort,
    "diversify": _stage_diversify,
    "analyze": _stage_analyze,
    "export": _stage_export,
}


def run_pipeline(
    query: str,
    config: PipelineConfig,
    out_dir: str,
    corpus: list[PaperRecord] | None = None,
    transport: Transport | None = None,
    scorer: RerankScorer | None = None,
    sources: list[SourceConfig] | None = None,
    clock: Callable[[], str] | None = None,
) -> PipelineState:
    """Run the stage sequence selected by config.structure and return final state.

    Every stage appends exactly one step-log entry and regenerates all
    artifacts under out_dir. Zero retrieved papers is a valid outcome,
    recorded as a warning entry, never an error.
    """
    tick = clock or logical_clock()
    state = PipelineState(query=query, config=config, output_dir=str(out_dir))
    ctx = _RunContext(
        transport=transport,
        scorer=scorer or TokenOverlapScorer(),
        sources=sources,
        corpus=corpus,
        filter=config.filter,
        mode=config.mode,
        search_mode=config.search_mode,
        max_results=config.max_results,
    )
    for stage_name in STRUCTURES[config.structure]:
        action, params, preview = _STAGE_FUNCTIONS[stage_name](state, ctx)
        state.step += 1
        state.step_log.append(
            StepEntry(
                timestamp=tick(),
                stage_name=stage_name,
                action=action,
                params=params,
                result_preview=preview,
                paper_count=len(state.papers),
            )
        )
        exports.write_all(state, state.output_dir)
    return state
