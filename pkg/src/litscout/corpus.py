"""Canonical paper record, local JSON corpus loading, and searchable text.

The corpus file is a UTF-8 JSON array of objects using the PaperRecord
field names. Unknown fields are ignored for forward compatibility;
malformed entries are skipped and reported, never fatal.
"""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:  # pragma: no cover
    from .scoring import ScoreVector

SOURCES = ("offline", "arxiv", "semantic_scholar", "openalex", "dblp")

YEAR_FLOOR = 1900


class CorpusError(Exception):
    """Fatal corpus problem: unreadable path or unparseable top-level document."""


@dataclass
class PaperRecord:
    """One paper's metadata plus attached scores and rank.

    This is the unit that flows through every pipeline stage. Optional
    metadata is None when a source does not provide it; `scores` and
    `rank` are attached by the scoring and sorting stages.
    """

    id: str
    title: str
    authors: list[str] = field(default_factory=list)
    abstract: str = ""
    venue: str = ""
    year: int | None = None
    track: str | None = None
    keywords: list[str] = field(default_factory=list)
    doi: str | None = None
    url: str | None = None
    pdf_url: str | None = None
    citations: int | None = None
    source: str = "offline"
    scores: "ScoreVector | None" = None
    rank: int | None = None

    def __post_init__(self) -> None:
        self.title = self.title.strip()
        if not self.title:
            raise ValueError("title must be non-empty")
        if self.year is not None and not (YEAR_FLOOR <= self.year <= _current_year() + 1):
            raise ValueError(f"year {self.year} outside [{YEAR_FLOOR}, current+1]")
        if self.citations is not None and self.citations < 0:
            raise ValueError("citations must be >= 0")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")


@dataclass(frozen=True)
class CorpusFilter:
    """Conference / year-range filter. Empty conference set means no venue filter.

    Venue matching is a case-insensitive substring test so that e.g.
    "NeurIPS" matches the stored venue "NeurIPS 2023". Records without
    a year pass year filters only when no year bound is set.
    """

    conferences: frozenset[str] = frozenset()
    year_min: int | None = None
    year_max: int | None = None

    def __post_init__(self) -> None:
        if self.year_min is not None and self.year_max is not None and self.year_min > self.year_max:
            raise ValueError("year_min must be <= year_max")

    def matches(self, record: PaperRecord) -> bool:
        if self.conferences:
            venue = record.venue.lower()
            if not any(c.lower() in venue for c in self.conferences):
                return False
        if self.year_min is not None or self.year_max is not None:
            if record.year is None:
                return False
            if self.year_min is not None and record.year < self.year_min:
                return False
            if self.year_max is not None and record.year > self.year_max:
                return False
        return True


@dataclass
class LoadReport:
    loaded: int = 0
    skipped: int = 0
    filtered: int = 0
    reasons: list[str] = field(default_factory=list)


def _current_year() -> int:
    return datetime.date.today().year


def stable_id(title: str) -> str:
    """Deterministic identifier from a normalized title (stable run-to-run)."""
    key = " ".join(title.lower().split())
    return "t-" + hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def _opt_str(raw: dict[str, Any], name: str) -> str | None:
    value = raw.get(name)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueError(f"{name} must be a string")
    return value

def _opt_int(raw: dict[str, Any], name: str) -> int | None:
    value = raw.get(name)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be numeric")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"{name} must be an integer")
        value = int(value)
    return value

def _str_list(raw: dict[str, Any], name: str) -> list[str]:
    value = raw.get(name)
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueError(f"{name} must be a list of strings")
    return list(value)


def record_from_dict(raw: dict[str, Any]) -> PaperRecord:
    """Build a PaperRecord from one corpus entry; raises ValueError on schema violations."""
    if not isinstance(raw, dict):
        raise ValueError("entry is not an object")
    title = raw.get("title")
    if not isinstance(title, str) or not title.strip():
        raise ValueError("missing or empty title")
    rec_id = _opt_str(raw, "id")
    return PaperRecord(
        id=rec_id if rec_id else stable_id(title),
        title=title,
        authors=_str_list(raw, "authors"),
        abstract=_opt_str(raw, "abstract") or "",
        venue=_opt_str(raw, "venue") or "",
        year=_opt_int(raw, "year"),
        track=_opt_str(raw, "track"),
        keywords=_str_list(raw, "keywords"),
        doi=_opt_str(raw, "doi"),
        url=_opt_str(raw, "url"),
        pdf_url=_opt_str(raw, "pdf_url"),
        citations=_opt_int(raw, "citations"),
        source=raw.get("source", "offline"),
    )


def load_corpus(path: str | Path, corpus_filter: CorpusFilter | None = None) -> tuple[list[PaperRecord], LoadReport]:
    """Load and filter a JSON corpus file.

    Returns records in file order. Per-record schema violations are
    skipped and counted in the report; an unreadable path or a broken
    top-level document raises CorpusError.
    """
    corpus_filter = corpus_filter or CorpusFilter()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    try:
        entries = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"corpus file {path} is not valid JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise CorpusError(f"corpus file {path} must contain a JSON array of records")

    report = LoadReport()
    records: list[PaperRecord] = []
    seen_ids: set[str] = set()
    for index, raw in enumerate(entries):
        try:
            record = record_from_dict(raw)
        except ValueError as exc:
            report.skipped += 1
            report.reasons.append(f"entry {index}: {exc}")
            continue
        if record.id in seen_ids:
            report.skipped += 1
            report.reasons.append(f"entry {index}: duplicate id {record.id!r}")
            continue
        seen_ids.add(record.id)
        if not corpus_filter.matches(record):
            report.filtered += 1
            continue
        records.append(record)
    report.loaded = len(records)
    return records, report


def searchable_text(p: PaperRecord) -> str:
    """Title, abstract, and keywords joined by single spaces; empty parts dropped."""
    parts = [p.title]
    if p.abstract:
        parts.append(p.abstract)
    parts.extend(k for k in p.keywords if k)
    return " ".join(parts)


def scoring_text(p: PaperRecord) -> str:
    """Concatenated title and abstract, the text similarity and MMR operate on."""
    return f"{p.title} {p.abstract}" if p.abstract else p.title
