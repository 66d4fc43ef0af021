"""Ingestion and normalization of the two raw streams: user reviews and update logs.

Reviews arrive as JSONL/CSV/app-store feed JSON and are normalized into a
time-ordered ReviewSet; update logs are cleaned of vague and duplicated
entries and ordered into an EntryTimeline.
"""

from __future__ import annotations

import csv
import io
import json
import re
import unicodedata
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable, Sequence

from .errors import DataError

REVIEW_FORMATS = ("jsonl", "csv", "appstore-feed-json")

DEFAULT_RESPONSE_MARKERS = ("开发者回复:", "开发者回复", "Developer Response:")
DEFAULT_SYMBOL_BLOCKLIST = ("^_^", "$-$", "#", "*")
DEFAULT_VAGUE_PATTERNS = (
    r"fix(ed)? (some )?(known )?bugs",
    r"性能优化",
    r"修复了一些问题",
)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Review:
    review_id: str
    app_id: str
    body: str
    created_at: datetime  # always UTC-aware
    title: str | None = None
    rating: int | None = None
    developer_response: str | None = None


@dataclass
class ReviewSet:
    """Reviews of one app, ascending by created_at."""

    app_id: str
    reviews: list[Review]
    cutoff: datetime | None = None

    def __len__(self) -> int:
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)


@dataclass(frozen=True)
class UpdateLogEntry:
    entry_id: str
    app_id: str
    version: str
    released_at: datetime
    text: str
    vague: bool = False
    duplicate_of: str | None = None


@dataclass
class EntryTimeline:
    """Surviving update-log entries, ascending by (released_at, version)."""

    app_id: str
    entries: list[UpdateLogEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def last_release(self) -> datetime:
        if not self.entries:
            raise DataError("timeline is empty, last release time undefined")
        return max(e.released_at for e in self.entries)


@dataclass
class NormalizationRules:
    """Configurable text-cleanup rules.

    ``response_markers`` are literal substrings; the earliest occurrence wins
    and, at equal positions, the longest marker. ``symbol_blocklist`` holds
    characters and multi-character sequences deleted outright. "@" is always
    kept while ``keep_at_sign`` is true because mention syntax is a feature
    signal.
    """

    response_markers: tuple[str, ...] = DEFAULT_RESPONSE_MARKERS
    symbol_blocklist: tuple[str, ...] = DEFAULT_SYMBOL_BLOCKLIST
    keep_at_sign: bool = True
    vague_patterns: tuple[str, ...] = DEFAULT_VAGUE_PATTERNS

    def __post_init__(self):
        if self.keep_at_sign and any("@" in s for s in self.symbol_blocklist):
            raise ValueError('"@" cannot be blocklisted while keep_at_sign is true')
        self._vague_res = [re.compile(p, re.IGNORECASE) for p in self.vague_patterns]

    def is_vague(self, text: str) -> bool:
        return any(r.search(text) for r in self._vague_res)


def load_rules(path: str) -> NormalizationRules:
    """Read rules from a key-value file; repeated keys append to list fields."""
    markers: list[str] = []
    symbols: list[str] = []
    vague: list[str] = []
    keep_at = True
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError("expected 'key = value'", source=path, line=lineno)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "response_marker":
                markers.append(value)
            elif key == "symbol":
                symbols.append(value)
            elif key == "vague_pattern":
                vague.append(value)
            elif key == "keep_at_sign":
                keep_at = value.lower() in ("1", "true", "yes")
            else:
                raise DataError(f"unknown rules key {key!r}", source=path, line=lineno)
    return NormalizationRules(
        response_markers=tuple(markers) or DEFAULT_RESPONSE_MARKERS,
        symbol_blocklist=tuple(symbols) or DEFAULT_SYMBOL_BLOCKLIST,
        keep_at_sign=keep_at,
        vague_patterns=tuple(vague) or DEFAULT_VAGUE_PATTERNS,
    )


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------

def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into a UTC-aware datetime.

    Accepts a trailing 'Z' (fromisoformat cannot before 3.11) and treats a
    missing offset as UTC.
    """
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValueError(f"invalid timestamp {value!r}: {exc}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Review ingestion
# ---------------------------------------------------------------------------

def _decode_stream(stream: IO[bytes] | bytes | str) -> str:
    if isinstance(stream, str):
        return stream
    if isinstance(stream, bytes):
        data = stream
    else:
        data = stream.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"input is not valid UTF-8: {exc}") from None


def _make_review(rec: dict, source: str, line: int) -> Review:
    for req in ("review_id", "app_id", "body", "created_at"):
        if rec.get(req) in (None, ""):
            raise DataError(f"missing required field {req!r}", source=source, line=line)
    rating = rec.get("rating")
    if rating not in (None, ""):
        try:
            rating = int(rating)
        except (TypeError, ValueError):
            raise DataError(f"rating {rating!r} is not an integer", source=source, line=line) from None
        if not 1 <= rating <= 5:
            raise DataError(f"rating {rating} outside 1..5", source=source, line=line)
    else:
        rating = None
    try:
        created = parse_timestamp(str(rec["created_at"]))
    except ValueError as exc:
        raise DataError(str(exc), source=source, line=line) from None
    title = rec.get("title") or None
    response = rec.get("developer_response") or None
    return Review(
        review_id=str(rec["review_id"]),
        app_id=str(rec["app_id"]),
        body=str(rec["body"]),
        created_at=created,
        title=title,
        rating=rating,
        developer_response=response,
    )


def _feed_label(node, *keys):
    cur = node
    for key in keys:
        if not isinstance(cur, dict) or key not in cur:
            return None
        cur = cur[key]
    return cur


def _parse_feed(text: str, source: str, app_id: str | None) -> list[Review]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid feed JSON: {exc.msg}", source=source, line=exc.lineno) from None
    feed = doc.get("feed") if isinstance(doc, dict) else None
    if not isinstance(feed, dict):
        raise DataError("feed JSON lacks a 'feed' object", source=source)
    if app_id is None:
        for probe in (_feed_label(feed, "id", "label"), _feed_label(feed, "link", "attributes", "href")):
            if isinstance(probe, str):
                m = re.search(r"id=(\d+)", probe)
                if m:
                    app_id = m.group(1)
                    break
    if app_id is None:
        raise DataError("cannot determine app id from feed; pass app_id explicitly", source=source)
    entries = feed.get("entry", [])
    if isinstance(entries, dict):
        entries = [entries]
    reviews = []
    for pos, e in enumerate(entries, start=1):
        rec = {
            "review_id": _feed_label(e, "id", "label"),
            "app_id": app_id,
            "title": _feed_label(e, "title", "label"),
            "body": _feed_label(e, "content", "label"),
            "rating": _feed_label(e, "im:rating", "label"),
            "created_at": _feed_label(e, "updated", "label"),
        }
        reviews.append(_make_review(rec, source, pos))
    return reviews


def ingest_reviews(
    stream: IO[bytes] | bytes | str,
    format: str = "jsonl",
    *,
    app_id: str | None = None,
    source: str = "<reviews>",
) -> ReviewSet:
    """Parse raw reviews into a ReviewSet sorted ascending by created_at.

    Duplicate review ids are a hard error naming both positions; malformed
    records raise a positioned DataError.
    """
    if format not in REVIEW_FORMATS:
        raise DataError(f"unknown review format {format!r}; expected one of {REVIEW_FORMATS}")
    text = _decode_stream(stream)

    reviews: list[Review] = []
    if format == "jsonl":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", source=source, line=lineno) from None
            if not isinstance(rec, dict):
                raise DataError("record is not a JSON object", source=source, line=lineno)
            reviews.append(_make_review(rec, source, lineno))
    elif format == "csv":
        reader = csv.DictReader(io.StringIO(text))
        for lineno, rec in enumerate(reader, start=2):  # header is line 1
            reviews.append(_make_review(rec, source, lineno))
    else:
        reviews = _parse_feed(text, source, app_id)

    seen: dict[str, int] = {}
    for pos, r in enumerate(reviews, start=1):
        if r.review_id in seen:
            raise DataError(
                f"duplicate review_id {r.review_id!r} at records {seen[r.review_id]} and {pos}",
                source=source,
            )
        seen[r.review_id] = pos

    app_ids = {r.app_id for r in reviews}
    if len(app_ids) > 1:
        raise DataError(f"reviews mix app ids {sorted(app_ids)}", source=source)
    resolved_app = app_id or (reviews[0].app_id if reviews else "")

    reviews.sort(key=lambda r: r.created_at)  # stable: ties keep input order
    return ReviewSet(app_id=resolved_app, reviews=reviews)


def write_reviews_jsonl(reviews: Iterable[Review]) -> str:
    """Serialize reviews to the canonical JSONL interchange format."""
    lines = []
    for r in reviews:
        rec = {"review_id": r.review_id, "app_id": r.app_id, "body": r.body,
               "created_at": format_timestamp(r.created_at)}
        if r.title is not None:
            rec["title"] = r.title
        if r.rating is not None:
            rec["rating"] = r.rating
        if r.developer_response is not None:
            rec["developer_response"] = r.developer_response
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Log ingestion
# ---------------------------------------------------------------------------

def ingest_logs(stream: IO[bytes] | bytes | str, *, source: str = "<logs>") -> list[UpdateLogEntry]:
    """Parse canonical log JSONL into raw entries (no filtering yet)."""
    text = _decode_stream(stream)
    entries: list[UpdateLogEntry] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}", source=source, line=lineno) from None
        for req in ("entry_id", "app_id", "version", "released_at", "text"):
            if rec.get(req) in (None, ""):
                raise DataError(f"missing required field {req!r}", source=source, line=lineno)
        try:
            released = parse_timestamp(str(rec["released_at"]))
        except ValueError as exc:
            raise DataError(str(exc), source=source, line=lineno) from None
        entry_id = str(rec["entry_id"])
        if entry_id in seen:
            raise DataError(
                f"duplicate entry_id {entry_id!r} at lines {seen[entry_id]} and {lineno}",
                source=source,
            )
        seen[entry_id] = lineno
        entries.append(UpdateLogEntry(
            entry_id=entry_id,
            app_id=str(rec["app_id"]),
            version=str(rec["version"]),
            released_at=released,
            text=str(rec["text"]),
        ))
    return entries


def write_logs_jsonl(entries: Iterable[UpdateLogEntry]) -> str:
    lines = []
    for e in entries:
        rec = {"entry_id": e.entry_id, "app_id": e.app_id, "version": e.version,
               "released_at": format_timestamp(e.released_at), "text": e.text}
        lines.append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Text normalization
# ---------------------------------------------------------------------------

def strip_developer_response(body: str, rules: NormalizationRules) -> tuple[str, str | None]:
    """Split a developer reply off a review body.

    Everything from the first matching marker to end of text becomes the
    response (the marker itself is dropped). Idempotent because the returned
    body contains no marker.
    """
    best: tuple[int, int] | None = None  # (position, -len(marker))
    best_marker = None
    for marker in rules.response_markers:
        if not marker:
            continue
        pos = body.find(marker)
        if pos < 0:
            continue
        key = (pos, -len(marker))
        if best is None or key < best:
            best = key
            best_marker = marker
    if best is None:
        return body, None
    pos = best[0]
    response = body[pos + len(best_marker):].strip()
    return body[:pos].strip(), response


# Extended_Pictographic ranges (emoji-data.txt) plus emoji components:
# skin-tone modifiers, regional indicators, ZWJ, variation selectors, keycap.
_EMOJI_RANGES: tuple[tuple[int, int], ...] = (
    (0x00A9, 0x00A9), (0x00AE, 0x00AE), (0x200D, 0x200D), (0x203C, 0x203C),
    (0x2049, 0x2049), (0x20E3, 0x20E3), (0x2122, 0x2122), (0x2139, 0x2139),
    (0x2194, 0x2199), (0x21A9, 0x21AA), (0x231A, 0x231B), (0x2328, 0x2328),
    (0x2388, 0x2388), (0x23CF, 0x23CF), (0x23E9, 0x23F3), (0x23F8, 0x23FA),
    (0x24C2, 0x24C2), (0x25AA, 0x25AB), (0x25B6, 0x25B6), (0x25C0, 0x25C0),
    (0x25FB, 0x25FE), (0x2600, 0x2605), (0x2607, 0x2612), (0x2614, 0x2685),
    (0x2690, 0x2705), (0x2708, 0x2712), (0x2714, 0x2714), (0x2716, 0x2716),
    (0x271D, 0x271D), (0x2721, 0x2721), (0x2728, 0x2728), (0x2733, 0x2734),
    (0x2744, 0x2744), (0x2747, 0x2747), (0x274C, 0x274C), (0x274E, 0x274E),
    (0x2753, 0x2755), (0x2757, 0x2757), (0x2763, 0x2767), (0x2795, 0x2797),
    (0x27A1, 0x27A1), (0x27B0, 0x27B0), (0x27BF, 0x27BF), (0x2934, 0x2935),
    (0x2B05, 0x2B07), (0x2B1B, 0x2B1C), (0x2B50, 0x2B50), (0x2B55, 0x2B55),
    (0x3030, 0x3030), (0x303D, 0x303D), (0x3297, 0x3297), (0x3299, 0x3299),
    (0xFE0E, 0xFE0F),
    (0x1F000, 0x1F0FF), (0x1F10D, 0x1F10F), (0x1F12F, 0x1F12F),
    (0x1F16C, 0x1F171), (0x1F17E, 0x1F17F), (0x1F18E, 0x1F18E),
    (0x1F191, 0x1F19A), (0x1F1AD, 0x1F1FF), (0x1F201, 0x1F20F),
    (0x1F21A, 0x1F21A), (0x1F22F, 0x1F22F), (0x1F232, 0x1F23A),
    (0x1F23C, 0x1F23F), (0x1F249, 0x1F3FF), (0x1F400, 0x1F53D),
    (0x1F546, 0x1F64F), (0x1F680, 0x1F6FF), (0x1F774, 0x1F77F),
    (0x1F7D5, 0x1F7FF), (0x1F80C, 0x1F80F), (0x1F848, 0x1F84F),
    (0x1F85A, 0x1F85F), (0x1F888, 0x1F88F), (0x1F8AE, 0x1F8FF),
    (0x1F90C, 0x1F93A), (0x1F93C, 0x1F945), (0x1F947, 0x1FAFF),
    (0x1FC00, 0x1FFFD),
)


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    for lo, hi in _EMOJI_RANGES:
        if lo <= cp <= hi:
            return True
    return False


def normalize_text(text: str, rules: NormalizationRules | None = None) -> str:
    """Delete emoji and blocklisted symbols, collapse whitespace.

    Runs the removal passes to a fixed point, so the result is idempotent
    even when one deletion exposes another blocklisted sequence.
    """
    if rules is None:
        rules = NormalizationRules()
    sequences = sorted((s for s in rules.symbol_blocklist if len(s) > 1), key=len, reverse=True)
    singles = {s for s in rules.symbol_blocklist if len(s) == 1}

    current = text
    while True:
        step = current
        for seq in sequences:
            if seq in step:
                step = step.replace(seq, "")
        step = "".join(ch for ch in step if ch not in singles and not _is_emoji(ch))
        step = " ".join(step.split())
        if step == current:
            return step
        current = step


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

_CJK_RANGES: tuple[tuple[int, int], ...] = (
    (0x1100, 0x11FF),   # Hangul Jamo
    (0x3040, 0x309F),   # Hiragana
    (0x30A0, 0x30FF),   # Katakana
    (0x31F0, 0x31FF),   # Katakana phonetic extensions
    (0x3400, 0x4DBF),   # CJK ext A
    (0x4E00, 0x9FFF),   # CJK unified
    (0xAC00, 0xD7A3),   # Hangul syllables
    (0xF900, 0xFAFF),   # CJK compatibility
    (0x20000, 0x2FA1F),  # CJK ext B..F + supplement
)


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    for lo, hi in _CJK_RANGES:
        if lo <= cp <= hi:
            return True
    return False


def _strip_edge_punct(piece: str) -> str:
    start, end = 0, len(piece)
    while start < end and unicodedata.category(piece[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(piece[end - 1]).startswith("P"):
        end -= 1
    return piece[start:end]


def _word_tokens(segment: str) -> list[str]:
    out = []
    for piece in segment.split():
        word = _strip_edge_punct(piece)  # interior punctuation ("10/10") survives
        if word:
            out.append(word.lower())
    return out


def _cjk_bigrams(run: str) -> list[str]:
    if len(run) == 1:
        return [run]
    return [run[i:i + 2] for i in range(len(run) - 1)]


def tokenize(text: str, script_mode: str = "auto") -> list[str]:
    """Split normalized text into matching/classification tokens.

    CJK runs become overlapping character bigrams; everything else becomes
    lowercased whitespace-separated words with edge punctuation stripped.
    ``script_mode="latin"`` disables the bigram rule. Total and deterministic.
    """
    if script_mode not in ("auto", "latin", "cjk"):
        raise ValueError(f"unknown script_mode {script_mode!r}")
    if script_mode == "latin":
        return _word_tokens(text)

    tokens: list[str] = []
    buf: list[str] = []
    buf_cjk = False
    for ch in text:
        cjk = _is_cjk(ch)
        if buf and cjk != buf_cjk:
            run = "".join(buf)
            tokens.extend(_cjk_bigrams(run) if buf_cjk else _word_tokens(run))
            buf = []
        buf.append(ch)
        buf_cjk = cjk
    if buf:
        run = "".join(buf)
        tokens.extend(_cjk_bigrams(run) if buf_cjk else _word_tokens(run))
    return tokens


# ---------------------------------------------------------------------------
# Review preprocessing
# ---------------------------------------------------------------------------

def preprocess_reviews(
    review_set: ReviewSet, rules: NormalizationRules | None = None
) -> tuple[ReviewSet, int]:
    """Strip developer replies, normalize bodies, drop empties.

    Returns the surviving set (relative order preserved) and the count of
    reviews dropped for an empty body.
    """
    if rules is None:
        rules = NormalizationRules()
    kept: list[Review] = []
    dropped = 0
    for r in review_set.reviews:
        body, response = strip_developer_response(r.body, rules)
        body = normalize_text(body, rules)
        if not body:
            dropped += 1
            continue
        kept.append(replace(r, body=body,
                            developer_response=response if response is not None else r.developer_response))
    return ReviewSet(app_id=review_set.app_id, reviews=kept, cutoff=review_set.cutoff), dropped


# ---------------------------------------------------------------------------
# Log preprocessing
# ---------------------------------------------------------------------------

def version_key(version: str) -> tuple[int, ...]:
    """Numeric dotted-segment ordering; non-numeric segments compare as 0."""
    parts = []
    for seg in version.split("."):
        m = re.match(r"\d+", seg.strip())
        parts.append(int(m.group()) if m else 0)
    return tuple(parts)


def load_vague_overrides(path: str) -> dict[str, bool]:
    """Read the manual override file: lines "entry_id<TAB>vague|keep"."""
    overrides: dict[str, bool] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in ("vague", "keep"):
                raise DataError('expected "entry_id<TAB>vague|keep"', source=path, line=lineno)
            overrides[parts[0]] = parts[1] == "vague"
    return overrides


def preprocess_logs(
    raw_entries: Sequence[UpdateLogEntry],
    rules: NormalizationRules | None = None,
    overrides: dict[str, bool] | None = None,
) -> tuple[EntryTimeline, list[UpdateLogEntry]]:
    """Clean raw log entries into a timeline.

    Vague entries (pattern match, or empty after normalization) are excluded
    with vague=True; among byte-identical normalized texts only the lowest
    version survives, the rest excluded with duplicate_of set. Overrides
    force an entry vague or kept regardless of patterns.
    """
    if rules is None:
        rules = NormalizationRules()
    overrides = overrides or {}

    candidates: list[UpdateLogEntry] = []
    excluded: list[UpdateLogEntry] = []
    app_ids = set()
    for e in raw_entries:
        if e.released_at is None or not e.version:
            raise DataError(f"entry {e.entry_id!r} missing released_at or version")
        app_ids.add(e.app_id)
        text = normalize_text(e.text, rules)
        forced = overrides.get(e.entry_id)
        vague = rules.is_vague(text) if forced is None else forced
        if not text or vague:
            excluded.append(replace(e, text=text, vague=True))
            continue
        candidates.append(replace(e, text=text))
    if len(app_ids) > 1:
        raise DataError(f"log entries mix app ids {sorted(app_ids)}")

    by_text: dict[str, list[UpdateLogEntry]] = {}
    for e in candidates:
        by_text.setdefault(e.text, []).append(e)

    survivors: list[UpdateLogEntry] = []
    for group in by_text.values():
        group = sorted(group, key=lambda e: (version_key(e.version), e.released_at, e.entry_id))
        survivors.append(group[0])
        for dup in group[1:]:
            excluded.append(replace(dup, duplicate_of=group[0].entry_id))

    survivors.sort(key=lambda e: (e.released_at, version_key(e.version), e.entry_id))
    app_id = raw_entries[0].app_id if raw_entries else ""
    return EntryTimeline(app_id=app_id, entries=survivors), excluded


# ---------------------------------------------------------------------------
# Review window
# ---------------------------------------------------------------------------

def apply_review_window(
    reviews: ReviewSet, timeline: EntryTimeline, window_days: int = 183
) -> ReviewSet:
    """Drop reviews later than the final release plus the feedback window."""
    if window_days < 0:
        raise DataError(f"window_days must be >= 0, got {window_days}")
    cutoff = timeline.last_release() + timedelta(days=window_days)
    kept = [r for r in reviews.reviews if r.created_at <= cutoff]
    return ReviewSet(app_id=reviews.app_id, reviews=kept, cutoff=cutoff)
