"""Online retrieval clients for arXiv, Semantic Scholar, OpenAlex, and DBLP.

Each source is fetched through a swappable Transport so that tests replay
recorded responses; live HTTP happens only when a RequestsTransport is
supplied explicitly. Failures never escape the FetchOutcome boundary.
The merged record order is fixed by source priority, never by response
arrival order.
"""

from __future__ import annotations

import json
import threading
import time
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol

from .corpus import PaperRecord

SOURCE_PRIORITY = ("arxiv", "semantic_scholar", "openalex", "dblp")

DEFAULT_BASE_URLS = {
    "arxiv": "https://export.arxiv.org/api/query",
    "semantic_scholar": "https://api.semanticscholar.org/graph/v1/paper/search",
    "openalex": "https://api.openalex.org/works",
    "dblp": "https://dblp.org/search/publ/api",
}

BACKOFF_BASE_S = 1.0  # retries sleep 1, 2, 4, ... seconds


class TransportTimeout(Exception):
    """Raised by transports when a request times out."""


@dataclass(frozen=True)
class TransportResponse:
    status: int
    body: str


class Transport(Protocol):
    """Minimal HTTP GET abstraction; implementations must be thread-safe."""

    def get(self, url: str, params: dict, headers: dict, timeout: float) -> TransportResponse: ...


class RequestsTransport:
    """Live transport backed by the requests library."""

    def get(self, url: str, params: dict, headers: dict, timeout: float) -> TransportResponse:
        import requests

        try:
            response = requests.get(url, params=params, headers=headers, timeout=timeout)
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        return TransportResponse(status=response.status_code, body=response.text)


class RecordedTransport:
    """Replay transport for tests: responses keyed by base-url prefix.

    Values may be TransportResponse objects, exceptions to raise, or lists
    consumed one element per request (to script retry sequences). Optional
    per-key delays let tests permute response arrival order.
    """

    def __init__(
        self,
        playbook: dict[str, object],
        delays: dict[str, float] | None = None,
    ) -> None:
        self._playbook = dict(playbook)
        self._delays = dict(delays or {})
        self._lock = threading.Lock()
        self.requests: list[str] = []

    def get(self, url: str, params: dict, headers: dict, timeout: float) -> TransportResponse:
        key = next((k for k in self._playbook if url.startswith(k)), None)
        if key is None:
            raise TransportTimeout(f"no recorded response for {url}")
        delay = self._delays.get(key, 0.0)
        if delay:
            time.sleep(delay)
        with self._lock:
            self.requests.append(url)
            entry = self._playbook[key]
            if isinstance(entry, list):
                entry = entry.pop(0) if entry else TransportTimeout("playbook exhausted")
        if isinstance(entry, Exception):
            raise entry
        assert isinstance(entry, TransportResponse)
        return entry


@dataclass(frozen=True)
class SourceConfig:
    source: str
    base_url: str
    api_key: str | None = None
    timeout: float = 10.0
    max_retries: int = 3
    min_request_interval: float = 1.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class FetchOutcome:
    source: str
    records: list[PaperRecord] = field(default_factory=list)
    status: str = "ok"  # ok | timeout | http_error | parse_error | skipped
    latency: float = 0.0
    detail: str = ""


class AggregateError(Exception):
    """All enabled sources failed; carries every FetchOutcome for diagnosis."""

    def __init__(self, outcomes: list[FetchOutcome]) -> None:
        self.outcomes = outcomes
        summary = ", ".join(f"{o.source}={o.status}" for o in outcomes)
        super().__init__(f"all online sources failed: {summary}")


def default_source_configs(environ: dict[str, str] | None = None) -> list[SourceConfig]:
    """One config per supported source, honoring env-var overrides."""
    import os

    env = environ if environ is not None else dict(os.environ)
    configs = []
    for source in SOURCE_PRIORITY:
        configs.append(
            SourceConfig(
                source=source,
                base_url=env.get(f"{source.upper()}_BASE_URL", DEFAULT_BASE_URLS[source]),
                api_key=env.get("SEMANTIC_SCHOLAR_API_KEY") if source == "semantic_scholar" else None,
            )
        )
    return configs


# ---------------------------------------------------------------------------
# Per-source request construction and response normalization. These mappings
# are the single point of schema truth for each upstream API.
# ---------------------------------------------------------------------------

def _build_request(config: SourceConfig, query: str, max_results: int) -> tuple[dict, dict]:
    if config.source == "arxiv":
        params = {"search_query": f"all:{query}", "start": 0, "max_results": max_results}
        headers = {}
    elif config.source == "semantic_scholar":
        params = {
            "query": query,
            "limit": max_results,
            "fields": "title,abstract,authors,year,venue,citationCount,externalIds,openAccessPdf,url",
        }
        headers = {"x-api-key": config.api_key} if config.api_key else {}
    elif config.source == "openalex":
        params = {"search": query, "per-page": max_results}
        headers = {}
    elif config.source == "dblp":
        params = {"q": query, "h": max_results, "format": "json"}
        headers = {}
    else:
        raise ValueError(f"unknown source {config.source!r}")
    return params, headers


_ATOM = "{http://www.w3.org/2005/Atom}"
_ARXIV = "{http://arxiv.org/schemas/atom}"


def _clean(text: str | None) -> str:
    return " ".join(text.split()) if text else ""


def parse_arxiv(body: str, max_results: int) -> list[PaperRecord]:
    root = ET.fromstring(body)
    records = []
    for entry in root.iter(f"{_ATOM}entry"):
        title = _clean(entry.findtext(f"{_ATOM}title"))
        if not title:
            continue
        entry_url = _clean(entry.findtext(f"{_ATOM}id"))
        arxiv_id = entry_url.rsplit("/", 1)[-1] if entry_url else ""
        pdf_url = None
        for link in entry.iter(f"{_ATOM}link"):
            if link.get("type") == "application/pdf" or link.get("title") == "pdf":
                pdf_url = link.get("href")
        published = entry.findtext(f"{_ATOM}published") or ""
        year = int(published[:4]) if published[:4].isdigit() else None
        records.append(
            PaperRecord(
                id=f"arxiv:{arxiv_id}" if arxiv_id else f"arxiv:{title[:40]}",
                title=title,
                authors=[
                    _clean(a.findtext(f"{_ATOM}name"))
                    for a in entry.iter(f"{_ATOM}author")
                    if _clean(a.findtext(f"{_ATOM}name"))
                ],
                abstract=_clean(entry.findtext(f"{_ATOM}summary")),
                year=year,
                keywords=[c.get("term", "") for c in entry.iter(f"{_ATOM}category") if c.get("term")],
                doi=_clean(entry.findtext(f"{_ARXIV}doi")) or None,
                url=entry_url or None,
                pdf_url=pdf_url,
                source="arxiv",
            )
        )
        if len(records) >= max_results:
            break
    return records


def parse_semantic_scholar(body: str, max_results: int) -> list[PaperRecord]:
    payload = json.loads(body)
    records = []
    for item in payload.get("data", []):
        title = _clean(item.get("title"))
        if not title:
            continue
        external = item.get("externalIds") or {}
        open_access = item.get("openAccessPdf") or {}
        records.append(
            PaperRecord(
                id=f"s2:{item.get('paperId', title[:40])}",
                title=title,
                authors=[_clean(a.get("name")) for a in item.get("authors") or [] if a.get("name")],
                abstract=_clean(item.get("abstract")),
                venue=_clean(item.get("venue")),
                year=item.get("year"),
                doi=external.get("DOI"),
                url=item.get("url"),
                pdf_url=open_access.get("url"),
                citations=item.get("citationCount"),
                source="semantic_scholar",
            )
        )
        if len(records) >= max_results:
            break
    return records


def _openalex_abstract(inverted: dict[str, list[int]] | None) -> str:
    if not inverted:
        return ""
    positions = [(pos, word) for word, occurrences in inverted.items() for pos in occurrences]
    return " ".join(word for _, word in sorted(positions))


def parse_openalex(body: str, max_results: int) -> list[PaperRecord]:
    payload = json.loads(body)
    records = []
    for item in payload.get("results", []):
        title = _clean(item.get("display_name") or item.get("title"))
        if not title:
            continue
        work_id = item.get("id") or ""
        doi = item.get("doi") or None
        if doi and doi.startswith("https://doi.org/"):
            doi = doi[len("https://doi.org/"):]
        location = item.get("primary_location") or {}
        source_meta = location.get("source") or {}
        venue = _clean(source_meta.get("display_name"))
        best_oa = item.get("best_oa_location") or {}
        records.append(
            PaperRecord(
                id=f"openalex:{work_id.rsplit('/', 1)[-1]}" if work_id else f"openalex:{title[:40]}",
                title=title,
                authors=[
                    _clean((a.get("author") or {}).get("display_name"))
                    for a in item.get("authorships") or []
                    if (a.get("author") or {}).get("display_name")
                ],
                abstract=_openalex_abstract(item.get("abstract_inverted_index")),
                venue=venue,
                year=item.get("publication_year"),
                doi=doi,
                url=work_id or None,
                pdf_url=location.get("pdf_url") or best_oa.get("pdf_url"),
                citations=item.get("cited_by_count"),
                source="openalex",
            )
        )
        if len(records) >= max_results:
            break
    return records


def parse_dblp(body: str, max_results: int) -> list[PaperRecord]:
    payload = json.loads(body)
    hits = ((payload.get("result") or {}).get("hits") or {}).get("hit") or []
    records = []
    for hit in hits:
        info = hit.get("info") or {}
        title = _clean(info.get("title"))
        if not title:
            continue
        raw_authors = (info.get("authors") or {}).get("author") or []
        if isinstance(raw_authors, dict):  # DBLP collapses single-author lists
            raw_authors = [raw_authors]
        authors = []
        for author in raw_authors:
            name = author.get("text") if isinstance(author, dict) else author
            if name:
                authors.append(_clean(name))
        year_text = info.get("year")
        records.append(
            PaperRecord(
                id=f"dblp:{info.get('key', title[:40])}",
                title=title,
                authors=authors,
                venue=_clean(info.get("venue")),
                year=int(year_text) if isinstance(year_text, str) and year_text.isdigit() else None,
                doi=info.get("doi"),
                url=info.get("ee") or info.get("url"),
                source="dblp",
            )
        )
        if len(records) >= max_results:
            break
    return records


_PARSERS: dict[str, Callable[[str, int], list[PaperRecord]]] = {
    "arxiv": parse_arxiv,
    "semantic_scholar": parse_semantic_scholar,
    "openalex": parse_openalex,
    "dblp": parse_dblp,
}

# Per-(source, base_url) pacing state shared across fetches in this process.
_rate_lock = threading.Lock()
_last_request_at: dict[tuple[str, str], float] = {}


def _respect_rate_limit(config: SourceConfig, clock: Callable[[], float], sleep: Callable[[float], None]) -> None:
    key = (config.source, config.base_url)
    with _rate_lock:
        now = clock()
        wait = _last_request_at.get(key, -1e9) + config.min_request_interval - now
        _last_request_at[key] = now + max(wait, 0.0)
    if wait > 0:
        sleep(wait)


def fetch_source(
    config: SourceConfig,
    query: str,
    max_results: int,
    transport: Transport,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> FetchOutcome:
    """Fetch one source and normalize its records; never raises."""
    start = clock()
    if max_results <= 0:
        return FetchOutcome(source=config.source, status="ok", latency=clock() - start)
    params, headers = _build_request(config, query, max_results)
    parser = _PARSERS[config.source]

    status = "timeout"
    detail = ""
    for attempt in range(config.max_retries + 1):
        if attempt > 0:
            sleep(BACKOFF_BASE_S * 2 ** (attempt - 1))
        _respect_rate_limit(config, clock, sleep)
        try:
            response = transport.get(config.base_url, params=params, headers=headers, timeout=config.timeout)
        except TransportTimeout as exc:
            status, detail = "timeout", str(exc)
            continue
        except Exception as exc:  # network layer misbehavior stays contained
            status, detail = "http_error", str(exc)
            continue
        if response.status >= 500 or response.status == 429:
            status, detail = "http_error", f"HTTP {response.status}"
            continue
        if not 200 <= response.status < 300:
            return FetchOutcome(
                source=config.source, status="http_error", latency=clock() - start,
                detail=f"HTTP {response.status}",
            )
        try:
            records = parser(response.body, max_results)
        except Exception as exc:
            return FetchOutcome(
                source=config.source, status="parse_error", latency=clock() - start, detail=str(exc)
            )
        return FetchOutcome(source=config.source, records=records, status="ok", latency=clock() - start)
    return FetchOutcome(source=config.source, status=status, latency=clock() - start, detail=detail)


def aggregate_online(
    configs: list[SourceConfig],
    query: str,
    max_results: int,
    transport: Transport,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[list[PaperRecord], list[FetchOutcome]]:
    """Fetch all sources concurrently; merge in fixed source priority order.

    max_results applies per source before the merge. Failed sources
    contribute no records but always appear in the outcome list; if every
    source fails, AggregateError carries all outcomes.
    """
    if not configs:
        raise ValueError("at least one source must be enabled")

    def priority(config: SourceConfig) -> tuple[int, str]:
        try:
            return (SOURCE_PRIORITY.index(config.source), config.source)
        except ValueError:
            return (len(SOURCE_PRIORITY), config.source)

    ordered = sorted(configs, key=priority)
    with ThreadPoolExecutor(max_workers=len(ordered)) as pool:
        outcomes = list(pool.map(lambda c: fetch_source(c, query, max_results, transport, sleep), ordered))

    if all(o.status not in ("ok", "skipped") for o in outcomes):
        raise AggregateError(outcomes)
    records: list[PaperRecord] = []
    for outcome in outcomes:
        records.extend(outcome.records)
    return records, outcomes
