"""Rule-based query intent classification and structured query expansion.

Both operations are total and deterministic: unknown phrasing degrades to
defaults instead of failing. External classifiers can be plugged in by
providing any callable with the same text-in / (QueryIntent, SearchSpec)-out
contract.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass, field

from .analytics import STOPWORDS
from .scoring import SearchMode
from .textproc import tokenize

# Canonical venue names keyed by lowercase alias.
CONFERENCE_ALIASES = {
    "iclr": "ICLR",
    "neurips": "NeurIPS",
    "nips": "NeurIPS",
    "icml": "ICML",
    "cvpr": "CVPR",
    "iros": "IROS",
    "icra": "ICRA",
    "aaai": "AAAI",
    "acl": "ACL",
    "iccv": "ICCV",
    "emnlp": "EMNLP",
    "aistats": "AISTATS",
    "rss": "RSS",
    "siggraph": "SIGGRAPH",
    "wacv": "WACV",
}

# Static synonym table used to expand recall; keys are single tokens.
SYNONYMS: dict[str, list[str]] = {
    "llm": ["large language model"],
    "llms": ["large language models"],
    "language": ["nlp"],
    "nlp": ["natural language processing"],
    "transformer": ["attention model"],
    "transformers": ["attention models"],
    "attention": ["transformer"],
    "bert": ["pretrained language model"],
    "gpt": ["large language model"],
    "embedding": ["representation"],
    "embeddings": ["representations"],
    "retrieval": ["search"],
    "search": ["retrieval"],
    "ranking": ["retrieval"],
    "rag": ["retrieval augmented generation"],
    "ir": ["information retrieval"],
    "bm25": ["lexical ranking"],
    "rl": ["reinforcement learning"],
    "reinforcement": ["rl"],
    "gan": ["generative adversarial network"],
    "gans": ["generative adversarial networks"],
    "vae": ["variational autoencoder"],
    "diffusion": ["generative model"],
    "generative": ["synthesis"],
    "cnn": ["convolutional neural network"],
    "convolutional": ["cnn"],
    "rnn": ["recurrent neural network"],
    "lstm": ["recurrent neural network"],
    "gnn": ["graph neural network"],
    "graph": ["network"],
    "vision": ["image"],
    "image": ["vision"],
    "segmentation": ["dense prediction"],
    "detection": ["recognition"],
    "classification": ["recognition"],
    "distillation": ["knowledge transfer"],
    "pruning": ["model compression"],
    "quantization": ["model compression"],
    "compression": ["efficiency"],
    "sparsity": ["pruning"],
    "finetuning": ["transfer learning"],
    "pretraining": ["self supervised learning"],
    "ssl": ["self supervised learning"],
    "contrastive": ["representation learning"],
    "fewshot": ["low resource"],
    "zeroshot": ["generalization"],
    "multimodal": ["vision language"],
    "robotics": ["control"],
    "planning": ["decision making"],
    "agent": ["autonomous system"],
    "agents": ["multi agent systems"],
    "federated": ["distributed learning"],
    "privacy": ["differential privacy"],
    "robustness": ["adversarial"],
    "adversarial": ["robustness"],
    "interpretability": ["explainability"],
    "explainability": ["interpretability"],
    "causal": ["causality"],
    "bayesian": ["probabilistic"],
    "optimization": ["training"],
}

NEGATION_MARKERS = ("not", "excluding", "without")

_RANGE = re.compile(r"\b(19\d{2}|20\d{2})\s*(?:-|–|—|\bto\b)\s*(19\d{2}|20\d{2})\b")
_SINCE = re.compile(r"\b(?:since|after|from)\s+(19\d{2}|20\d{2})\b")
_BEFORE = re.compile(r"\b(?:before|until|up to)\s+(19\d{2}|20\d{2})\b")
_LAST_N = re.compile(r"\blast\s+(\d{1,2})\s+years?\b")
_BARE_YEAR = re.compile(r"\b(19\d{2}|20\d{2})\b")
_TOP_N = re.compile(r"\btop\s+(\d{1,3})\b|\b(\d{1,3})\s+(?:papers|results)\b")
_QUOTED = re.compile(r'"([^"]+)"')


@dataclass
class QueryIntent:
    search_mode: str = "offline"                 # offline | online | both
    conferences: set[str] = field(default_factory=set)
    year_min: int | None = None
    year_max: int | None = None
    max_results: int | None = None
    sort_preference: str | None = None
    mode: SearchMode = SearchMode.BALANCED


@dataclass
class SearchSpec:
    core_keywords: list[str] = field(default_factory=list)
    required_constraints: list[str] = field(default_factory=list)
    related_terms: list[str] = field(default_factory=list)
    negative_keywords: list[str] = field(default_factory=list)
    plausible_titles: list[str] = field(default_factory=list)


def classify_intent(text: str, current_year: int | None = None) -> QueryIntent:
    """Parse free text into search mode, venue filters, year bounds and preferences."""
    if current_year is None:
        current_year = datetime.date.today().year
    lowered = text.lower()
    intent = QueryIntent()

    for alias, canonical in CONFERENCE_ALIASES.items():
        if re.search(rf"\b{re.escape(alias)}\b", lowered):
            intent.conferences.add(canonical)

    remaining = lowered
    match = _RANGE.search(remaining)
    if match:
        intent.year_min, intent.year_max = int(match.group(1)), int(match.group(2))
        remaining = remaining[: match.start()] + remaining[match.end():]
    match = _SINCE.search(remaining)
    if match:
        intent.year_min = int(match.group(1))
        remaining = remaining[: match.start()] + remaining[match.end():]
    match = _BEFORE.search(remaining)
    if match:
        intent.year_max = int(match.group(1))
        remaining = remaining[: match.start()] + remaining[match.end():]
    match = _LAST_N.search(remaining)
    if match:
        intent.year_min = current_year - int(match.group(1))
        remaining = remaining[: match.start()] + remaining[match.end():]
    if intent.year_min is None and intent.year_max is None:
        match = _BARE_YEAR.search(remaining)
        if match:
            intent.year_min = intent.year_max = int(match.group(1))
    if intent.year_min is not None and intent.year_max is not None and intent.year_min > intent.year_max:
        intent.year_min, intent.year_max = intent.year_max, intent.year_min

    match = _TOP_N.search(lowered)
    if match:
        n = int(match.group(1) or match.group(2))
        if n >= 1:
            intent.max_results = n

    if re.search(r"\bmost.cited\b|\bhighly.cited\b|\bciting\b", lowered):
        intent.sort_preference = "citations"
    elif re.search(r"\brecent\b|\blatest\b|\bnewest\b", lowered):
        intent.sort_preference = "recency"

    if re.search(r"\bnovel\b|\bunusual\b|\bsurprising\b|\bhidden\b", lowered):
        intent.mode = SearchMode.DISCOVERY

    if re.search(r"\bboth\b|\beverywhere\b", lowered):
        intent.search_mode = "both"
    elif re.search(r"\bonline\b|\barxiv\b|\bsemantic scholar\b|\bopenalex\b|\bdblp\b", lowered):
        intent.search_mode = "online"
    elif re.search(r"\boffline\b|\blocal\b", lowered):
        intent.search_mode = "offline"

    return intent


def expand_query(text: str) -> SearchSpec:
    """Turn free text into a structured search specification.

    Core keywords never come out empty for non-empty input: stopword-only
    queries fall back to the raw token list, then to the trimmed text.
    """
    spec = SearchSpec()
    if not text.strip():
        return spec

    spec.required_constraints = _QUOTED.findall(text)

    tokens = tokenize(text)
    negatives: set[str] = set()
    for position, token in enumerate(tokens):
        if token in NEGATION_MARKERS and position + 1 < len(tokens):
            negatives.add(tokens[position + 1])
    spec.negative_keywords = [t for t in dict.fromkeys(tokens) if t in negatives]

    core = [
        t
        for t in dict.fromkeys(tokens)
        if t not in STOPWORDS and t not in NEGATION_MARKERS and t not in negatives
    ]
    if not core:
        core = list(dict.fromkeys(tokens))
    if not core:
        core = [text.strip().lower()]
    spec.core_keywords = core

    related: list[str] = []
    for token in core:
        for term in SYNONYMS.get(token, ()):
            if term not in related and term not in core:
                related.append(term)
    spec.related_terms = related
    return spec
