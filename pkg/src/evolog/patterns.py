"""Time-aware feedback patterns: partition matched reviews around each
entry's release, classify the four patterns, and aggregate the
developer-driven vs user-driven contribution rates.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from .corpus import UpdateLogEntry, format_timestamp, parse_timestamp
from .errors import DataError


class FeedbackPattern(str, enum.Enum):
    P00 = "0-0"
    P01 = "0-1"
    P10 = "1-0"
    P11 = "1-1"


DEVELOPER_DRIVEN = (FeedbackPattern.P00, FeedbackPattern.P01)
USER_DRIVEN = (FeedbackPattern.P10, FeedbackPattern.P11)


@dataclass
class PartitionedMatches:
    entry_id: str
    pre_reviews: list[str]
    post_reviews: list[str]
    release_time: datetime  # effective boundary (release minus lead time)


@dataclass
class PatternSummary:
    app_id: str
    counts: dict[FeedbackPattern, int]
    developer_driven: int
    user_driven: int
    developer_rate: float  # percent, one decimal, rounded half-up
    user_rate: float

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def partition(
    entry: UpdateLogEntry,
    matched: Iterable[tuple[str, datetime]],
    lead_time_days: int = 0,
) -> PartitionedMatches:
    """Split an entry's matched reviews at its release boundary.

    A review stamped exactly at the boundary counts as post: it cannot have
    driven an update that was already shipping. ``lead_time_days`` moves the
    boundary earlier to allow for development time (inert at 0).
    """
    boundary = entry.released_at - timedelta(days=lead_time_days)
    pre: list[str] = []
    post: list[str] = []
    for review_id, created_at in matched:
        if created_at < boundary:
            pre.append(review_id)
        else:
            post.append(review_id)
    return PartitionedMatches(entry_id=entry.entry_id, pre_reviews=pre,
                              post_reviews=post, release_time=boundary)


def classify_pattern(n_pre: int, n_post: int) -> FeedbackPattern:
    if n_pre < 0 or n_post < 0:
        raise DataError(f"counts must be non-negative, got ({n_pre}, {n_post})")
    if n_pre == 0:
        return FeedbackPattern.P00 if n_post == 0 else FeedbackPattern.P01
    return FeedbackPattern.P10 if n_post == 0 else FeedbackPattern.P11


def _percent(numerator: int, denominator: int) -> float:
    value = Decimal(100 * numerator) / Decimal(denominator)
    return float(value.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def summarize(app_id: str, patterns: Iterable[FeedbackPattern]) -> PatternSummary:
    """Aggregate per-entry patterns into the app's contribution summary."""
    counts = {p: 0 for p in FeedbackPattern}
    for p in patterns:
        counts[FeedbackPattern(p)] += 1
    total = sum(counts.values())
    if total == 0:
        raise DataError(f"no entries to summarize for app {app_id!r}")
    developer = counts[FeedbackPattern.P00] + counts[FeedbackPattern.P01]
    user = counts[FeedbackPattern.P10] + counts[FeedbackPattern.P11]
    return PatternSummary(
        app_id=app_id,
        counts=counts,
        developer_driven=developer,
        user_driven=user,
        developer_rate=_percent(developer, total),
        user_rate=_percent(user, total),
    )


# ---------------------------------------------------------------------------
# Timeline binning
# ---------------------------------------------------------------------------

BINS = ("day", "week", "month")


@dataclass
class TimelineSeries:
    entry_id: str
    bin: str
    points: list[tuple[datetime, int]]  # (bin start UTC, match count), contiguous
    release_time: datetime


def _bin_start(dt: datetime, bin: str) -> datetime:
    dt = dt.astimezone(timezone.utc)
    day = dt.replace(hour=0, minute=0, second=0, microsecond=0)
    if bin == "day":
        return day
    if bin == "week":
        return day - timedelta(days=day.weekday())  # ISO week, Monday start
    return day.replace(day=1)


def _next_bin(start: datetime, bin: str) -> datetime:
    if bin == "day":
        return start + timedelta(days=1)
    if bin == "week":
        return start + timedelta(days=7)
    if start.month == 12:
        return start.replace(year=start.year + 1, month=1)
    return start.replace(month=start.month + 1)


def timeline_series(
    entry: UpdateLogEntry,
    matched: Iterable[tuple[str, datetime]],
    bin: str = "week",
) -> TimelineSeries:
    """Histogram of an entry's matched reviews per calendar bin (UTC).

    Bins with zero matches inside the observed span are emitted explicitly;
    no matches gives an empty series (the release marker still renders).
    """
    if bin not in BINS:
        raise DataError(f"bin must be one of {BINS}, got {bin!r}")
    stamps = sorted(created for _, created in matched)
    if not stamps:
        return TimelineSeries(entry_id=entry.entry_id, bin=bin, points=[],
                              release_time=entry.released_at)

    counts: dict[datetime, int] = {}
    for ts in stamps:
        start = _bin_start(ts, bin)
        counts[start] = counts.get(start, 0) + 1

    points: list[tuple[datetime, int]] = []
    cursor = _bin_start(stamps[0], bin)
    last = _bin_start(stamps[-1], bin)
    while cursor <= last:
        points.append((cursor, counts.get(cursor, 0)))
        cursor = _next_bin(cursor, bin)
    return TimelineSeries(entry_id=entry.entry_id, bin=bin, points=points,
                          release_time=entry.released_at)


# ---------------------------------------------------------------------------
# Per-entry detail interchange
# ---------------------------------------------------------------------------

@dataclass
class EntryDetail:
    entry_id: str
    pattern: FeedbackPattern
    n_pre: int
    n_post: int
    release_time: datetime


def mine_patterns(
    timeline_entries: Sequence[UpdateLogEntry],
    matches_by_entry: Mapping[str, list[tuple[str, datetime]]],
    lead_time_days: int = 0,
) -> list[EntryDetail]:
    """Partition and classify every surviving entry (absent entries have no
    matches and land in 0-0)."""
    details: list[EntryDetail] = []
    for entry in timeline_entries:
        matched = matches_by_entry.get(entry.entry_id, [])
        part = partition(entry, matched, lead_time_days)
        pattern = classify_pattern(len(part.pre_reviews), len(part.post_reviews))
        details.append(EntryDetail(
            entry_id=entry.entry_id,
            pattern=pattern,
            n_pre=len(part.pre_reviews),
            n_post=len(part.post_reviews),
            release_time=entry.released_at,
        ))
    return details


def details_to_jsonl(details: Iterable[EntryDetail]) -> str:
    lines = [
        json.dumps({"entry_id": d.entry_id, "pattern": d.pattern.value,
                    "n_pre": d.n_pre, "n_post": d.n_post,
                    "release_time": format_timestamp(d.release_time)},
                   sort_keys=True)
        for d in details
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def details_from_jsonl(text: str, *, source: str = "<details>") -> list[EntryDetail]:
    details = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}", source=source, line=lineno) from None
        try:
            details.append(EntryDetail(
                entry_id=str(rec["entry_id"]),
                pattern=FeedbackPattern(rec["pattern"]),
                n_pre=int(rec["n_pre"]),
                n_post=int(rec["n_post"]),
                release_time=parse_timestamp(rec["release_time"]),
            ))
        except (KeyError, ValueError) as exc:
            raise DataError(f"bad detail row: {exc}", source=source, line=lineno) from None
    return details
