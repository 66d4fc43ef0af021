"""Best-effort downloader for the public app-store review feed.

Pages are cached to disk so an interrupted fetch resumes where it stopped;
the transport is injectable so tests never touch the network.
"""

from __future__ import annotations

import json
import time
import urllib.request
from pathlib import Path
from typing import Callable, Sequence

from . import corpus
from .errors import TransportError

FEED_URL = ("https://itunes.apple.com/{country}/rss/customerreviews/"
            "page={page}/id={app_id}/sortby=mostrecent/json")

Transport = Callable[[str], bytes]


def _default_transport(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=30) as resp:
        return resp.read()


def fetch_pages(
    app_id: str,
    country: str = "us",
    pages: int = 1,
    *,
    transport: Transport | None = None,
    cache_dir: str | None = None,
    rate_limit: float = 1.0,
    max_retries: int = 3,
    sleep: Callable[[float], None] = time.sleep,
) -> list[bytes]:
    """Download feed pages 1..pages, reusing any cached page files.

    Each page retries up to max_retries times before raising TransportError
    with the attempt count and last failure.
    """
    transport = transport or _default_transport
    cache = Path(cache_dir) if cache_dir else None
    if cache:
        cache.mkdir(parents=True, exist_ok=True)

    raw_pages: list[bytes] = []
    fetched_any = False
    for page in range(1, pages + 1):
        page_file = cache / f"page_{page:04d}.json" if cache else None
        if page_file is not None and page_file.exists():
            raw_pages.append(page_file.read_bytes())
            continue
        url = FEED_URL.format(country=country, page=page, app_id=app_id)
        last_error: Exception | None = None
        data = None
        for attempt in range(1, max_retries + 1):
            if fetched_any and rate_limit > 0:
                sleep(rate_limit)
            try:
                data = transport(url)
                fetched_any = True
                break
            except Exception as exc:  # network errors come in many shapes
                last_error = exc
                if attempt < max_retries and rate_limit > 0:
                    sleep(rate_limit * attempt)  # linear backoff
        if data is None:
            raise TransportError(
                f"page {page} failed after {max_retries} attempts: {last_error}"
            )
        if page_file is not None:
            page_file.write_bytes(data)
        raw_pages.append(data)
    return raw_pages


def pages_to_jsonl(raw_pages: Sequence[bytes], app_id: str) -> str:
    """Convert raw feed pages to canonical review JSONL.

    Pages can overlap at the edges; the first occurrence of a review id
    wins.
    """
    seen: set[str] = set()
    reviews = []
    for idx, raw in enumerate(raw_pages, start=1):
        rs = corpus.ingest_reviews(raw, "appstore-feed-json", app_id=app_id,
                                   source=f"<page {idx}>")
        for r in rs.reviews:
            if r.review_id in seen:
                continue
            seen.add(r.review_id)
            reviews.append(r)
    reviews.sort(key=lambda r: r.created_at)
    return corpus.write_reviews_jsonl(reviews)
