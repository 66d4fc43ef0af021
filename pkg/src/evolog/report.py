"""Report rendering: the per-app pattern summary table in CSV/JSON/markdown
and the per-entry timeline figure (SVG with a CSV twin).

All output is deterministic byte-for-byte for fixed inputs.
"""

from __future__ import annotations

import io
import json
from datetime import timedelta
from typing import Sequence

from .corpus import format_timestamp
from .errors import UsageError
from .patterns import FeedbackPattern, PatternSummary, TimelineSeries

FORMATS = ("csv", "json", "md")


def _fmt_rate(rate: float) -> str:
    return f"{rate:.1f}%"


def summary_rows(summaries: Sequence[PatternSummary]) -> list[dict]:
    rows = []
    for s in summaries:
        rows.append({
            "app": s.app_id,
            "0-0": s.counts[FeedbackPattern.P00],
            "0-1": s.counts[FeedbackPattern.P01],
            "developer_total": s.developer_driven,
            "developer_rate": s.developer_rate,
            "1-0": s.counts[FeedbackPattern.P10],
            "1-1": s.counts[FeedbackPattern.P11],
            "user_total": s.user_driven,
            "user_rate": s.user_rate,
        })
    return rows


def render_summary(summaries: Sequence[PatternSummary], format: str = "md") -> str:
    if format == "markdown":
        format = "md"
    if format not in FORMATS:
        raise UsageError(f"format must be one of {FORMATS}, got {format!r}")
    rows = summary_rows(summaries)

    if format == "json":
        return json.dumps(rows, ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    if format == "csv":
        buf = io.StringIO()
        header = ["app", "0-0", "0-1", "developer_total", "developer_rate",
                  "1-0", "1-1", "user_total", "user_rate"]
        buf.write(",".join(header) + "\n")
        for r in rows:
            buf.write(",".join([
                r["app"], str(r["0-0"]), str(r["0-1"]),
                str(r["developer_total"]), f"{r['developer_rate']:.1f}",
                str(r["1-0"]), str(r["1-1"]),
                str(r["user_total"]), f"{r['user_rate']:.1f}",
            ]) + "\n")
        return buf.getvalue()

    lines = [
        "| App | 0-0 | 0-1 | Developer | 1-0 | 1-1 | User |",
        "| --- | --- | --- | --- | --- | --- | --- |",
    ]
    for r in rows:
        lines.append(
            f"| {r['app']} | {r['0-0']} | {r['0-1']} "
            f"| {r['developer_total']} ({_fmt_rate(r['developer_rate'])}) "
            f"| {r['1-0']} | {r['1-1']} "
            f"| {r['user_total']} ({_fmt_rate(r['user_rate'])}) |"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Timeline figure
# ---------------------------------------------------------------------------

_W, _H = 640, 360
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 30, 50


def timeline_to_csv(series: TimelineSeries) -> str:
    lines = ["bin_start,count"]
    for start, count in series.points:
        lines.append(f"{format_timestamp(start)},{count}")
    return "\n".join(lines) + "\n"


def timeline_to_svg(series: TimelineSeries) -> str:
    """Bar chart of matched reviews over time with a dashed release marker."""
    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B
    x0, y0 = _MARGIN_L, _MARGIN_T + plot_h  # plot origin (bottom-left)

    points = series.points
    if points:
        # widen the domain so the release marker stays visible when it
        # falls outside the matched-review span
        lo = min(points[0][0], series.release_time)
        hi = max(points[-1][0], series.release_time)
        span = max((hi - lo).total_seconds(), 1.0) * 1.1
    else:
        lo = series.release_time - timedelta(days=7)
        span = timedelta(days=14).total_seconds()

    def x_of(dt) -> float:
        return x0 + plot_w * (dt - lo).total_seconds() / span

    max_count = max((c for _, c in points), default=1) or 1

    def y_of(count: int) -> float:
        return y0 - plot_h * (count / max_count)

    bar_w = max(4.0, min(40.0, plot_w / (len(points) * 1.5))) if points else 0.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<title>matched reviews over time: {series.entry_id}</title>',
        # axes
        f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" stroke="black"/>',
        f'<line class="axis" x1="{x0}" y1="{_MARGIN_T}" x2="{x0}" y2="{y0}" stroke="black"/>',
        f'<text x="{x0 + plot_w / 2:.2f}" y="{_H - 10}" text-anchor="middle" '
        f'font-size="12">time ({series.bin} bins)</text>',
        f'<text x="15" y="{_MARGIN_T + plot_h / 2:.2f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {_MARGIN_T + plot_h / 2:.2f})">matched reviews</text>',
    ]

    for start, count in points:
        bx = x_of(start)
        by = y_of(count)
        parts.append(
            f'<rect class="bar" x="{bx - bar_w / 2:.2f}" y="{by:.2f}" '
            f'width="{bar_w:.2f}" height="{y0 - by:.2f}" fill="#4477aa"/>'
        )
        parts.append(
            f'<text class="bar-label" x="{bx:.2f}" y="{by - 4:.2f}" '
            f'text-anchor="middle" font-size="11">{count}</text>'
        )

    rx = x_of(series.release_time)
    parts.append(
        f'<line class="release-marker" x1="{rx:.2f}" y1="{_MARGIN_T}" '
        f'x2="{rx:.2f}" y2="{y0}" stroke="#9944bb" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{rx:.2f}" y="{_MARGIN_T - 8}" text-anchor="middle" font-size="11" '
        f'fill="#9944bb">release {format_timestamp(series.release_time)}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_timeline_figure(series: TimelineSeries, format: str = "svg") -> str:
    if format == "svg":
        return timeline_to_svg(series)
    if format == "csv":
        return timeline_to_csv(series)
    raise UsageError(f"figure format must be svg or csv, got {format!r}")
