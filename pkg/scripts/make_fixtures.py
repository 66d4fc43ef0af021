#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/data/.

Everything here is deterministic; rerunning must reproduce the committed
files byte-for-byte.
"""

from __future__ import annotations

import json
import random
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def ts(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(json.dumps(r, ensure_ascii=False, sort_keys=True) for r in rows)
    path.write_text(text + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# End-to-end synthetic corpus: 20 surviving entries, 200 surviving reviews,
# 8 entries planted with pre-update matches -> user rate exactly 40.0%.
# ---------------------------------------------------------------------------

ENTRY_WORDS = [
    ["watermark", "overlay", "screenshare", "protection"],
    ["virtual", "background", "blur", "camera"],
    ["breakout", "rooms", "subgroup", "discussion"],
    ["cloud", "recording", "playback", "archive"],
    ["live", "captions", "subtitles", "transcript"],
    ["calendar", "sync", "outlook", "invites"],
    ["dark", "mode", "theme", "night"],
    ["noise", "suppression", "echo", "cancellation"],
    ["waiting", "lobby", "admit", "knock"],
    ["polls", "voting", "quiz", "results"],
    ["whiteboard", "drawing", "annotate", "sketch"],
    ["reactions", "emotes", "raise", "hand"],
    ["ipad", "split", "view", "multitask"],
    ["keyboard", "shortcuts", "hotkeys", "bindings"],
    ["attendance", "roster", "export", "spreadsheet"],
    ["bandwidth", "saver", "data", "usage"],
    ["widget", "homescreen", "glance", "tile"],
    ["passcode", "lock", "biometric", "faceid"],
    ["translation", "interpret", "channels", "language"],
    ["gallery", "grid", "pagination", "tiles"],
]

NOISE_WORDS = [
    "great", "love", "nice", "awesome", "cool", "best", "amazing", "fun",
    "super", "happy", "fantastic", "wonderful", "perfect", "enjoy", "thanks",
    "brilliant", "smooth", "fast", "easy", "simple", "clean", "helpful",
    "useful", "solid", "stable", "reliable", "worth", "recommend", "daily",
    "everyone", "family", "friends", "work", "school", "meetings", "classes",
]

PATTERN_PLAN = (["1-1"] * 5) + (["1-0"] * 3) + (["0-1"] * 4) + (["0-0"] * 8)


def make_e2e() -> None:
    flat = [w for quad in ENTRY_WORDS for w in quad]
    assert len(flat) == len(set(flat)), "entry vocabularies must be disjoint"
    assert not set(flat) & set(NOISE_WORDS), "noise vocabulary must avoid entry words"
    assert "please" not in set(flat) | set(NOISE_WORDS)
    assert len(ENTRY_WORDS) == len(PATTERN_PLAN) == 20

    rng = random.Random(20240401)
    app = "fitflow"
    base = datetime(2020, 1, 15, 12, 0, 0, tzinfo=timezone.utc)

    def release(i: int) -> datetime:
        # one release a month: 2020-01-15 .. 2021-08-15
        month = i % 12
        year = 2020 + i // 12
        return base.replace(year=year, month=month + 1)

    logs: list[dict] = []
    releases: list[datetime] = []
    for i, quad in enumerate(ENTRY_WORDS):
        released = release(i)
        releases.append(released)
        logs.append({
            "entry_id": f"E{i + 1:02d}",
            "app_id": app,
            "version": f"{1 + i // 10}.{i % 10}",
            "released_at": ts(released),
            # exactly the quad: entry vocabularies stay pairwise disjoint so
            # every planted review hits its own entry and nothing else
            "text": " ".join(quad),
        })
    last_release = max(releases)
    cutoff = last_release + timedelta(days=183)

    # vague and duplicate raw entries, removed by preprocessing
    logs.append({"entry_id": "EV1", "app_id": app, "version": "1.0.1",
                 "released_at": ts(release(0) + timedelta(days=3)),
                 "text": "Fix some known bugs"})
    logs.append({"entry_id": "EV2", "app_id": app, "version": "1.5.1",
                 "released_at": ts(release(5) + timedelta(days=3)),
                 "text": "Fixed known bugs"})
    logs.append({"entry_id": "ED1", "app_id": app, "version": "2.8.1",
                 "released_at": ts(release(18) + timedelta(days=10)),
                 "text": logs[2]["text"]})
    logs.append({"entry_id": "ED2", "app_id": app, "version": "2.9.1",
                 "released_at": ts(release(19) + timedelta(days=10)),
                 "text": logs[6]["text"]})

    reviews: list[dict] = []
    rid = 0

    def add_review(body: str, created: datetime, title: str | None = None) -> None:
        nonlocal rid
        rid += 1
        rec = {"review_id": f"r{rid:03d}", "app_id": app, "body": body,
               "created_at": ts(created), "rating": rng.randint(1, 5)}
        if title:
            rec["title"] = title
        reviews.append(rec)

    def matched_body(i: int, style: int) -> str:
        quad = ENTRY_WORDS[i]
        if style == 0:
            return " ".join(quad)  # exact entry text, sim 1.0
        if style == 1:
            return "please " + " ".join(quad[:3])  # sim 3/(2*2) = 0.75
        return " ".join(quad) + " " + NOISE_WORDS[i % len(NOISE_WORDS)]  # 4/(2*sqrt(5))

    n_matches = 0
    for i, pattern in enumerate(PATTERN_PLAN):
        released = releases[i]
        if pattern in ("1-1", "1-0"):
            add_review(matched_body(i, 0), released - timedelta(days=21, hours=i))
            n_matches += 1
        if pattern == "1-1":
            add_review(matched_body(i, 1), released - timedelta(days=8, hours=i))
            n_matches += 1
        if pattern in ("1-1", "0-1"):
            add_review(matched_body(i, 2), released + timedelta(days=6, hours=i))
            n_matches += 1
        if pattern == "0-1":
            add_review(matched_body(i, 1), released + timedelta(days=19, hours=i))
            n_matches += 1
    assert n_matches == 26

    # candidate-only pairs: one entry word + one noise word, sim 1/(2*sqrt(2))
    add_review(ENTRY_WORDS[12][0] + " " + NOISE_WORDS[0],
               releases[12] - timedelta(days=40))
    add_review(ENTRY_WORDS[13][1] + " " + NOISE_WORDS[1],
               releases[13] - timedelta(days=35))

    # filler reviews, token-disjoint from every entry
    n_fillers = 200 - rid
    span_start = base - timedelta(days=100)
    span = (cutoff - span_start).total_seconds()
    for k in range(n_fillers):
        words = rng.sample(NOISE_WORDS, rng.randint(3, 7))
        created = span_start + timedelta(seconds=rng.randint(0, int(span) - 3600))
        add_review(" ".join(words), created,
                   title="quick take" if k % 17 == 0 else None)
    assert rid == 200

    # dropped as empty after normalization
    add_review("\U0001F600\U0001F389", base + timedelta(days=2))
    add_review("#### ^_^", base + timedelta(days=30))
    add_review("Developer Response: thanks for all the feedback!",
               base + timedelta(days=60))

    # dropped by the review window
    for extra in range(1, 4):
        words = rng.sample(NOISE_WORDS, 4)
        add_review(" ".join(words), cutoff + timedelta(days=extra))

    assert rid == 206
    rng.shuffle(reviews)  # ingest must re-sort by created_at

    out = DATA / "e2e"
    write_jsonl(out / "reviews.jsonl", reviews)
    write_jsonl(out / "logs.jsonl", logs)
    (out / "config.evolog").write_text(
        "# end-to-end fixture configuration\n"
        "app_id = fitflow\n"
        "reviews = reviews.jsonl\n"
        "logs = logs.jsonl\n"
        "window_days = 183\n"
        "seed = 7\n"
        "formats = csv,json,md\n",
        encoding="utf-8",
    )
    expected = {
        "counts": {
            "reviews_ingested": 206,
            "logs_ingested": 24,
            "dropped_empty": 3,
            "window_dropped": 3,
            "vague_excluded": 2,
            "deduped": 2,
            "entries_surviving": 20,
            "relevant": 200,
            "candidates": 28,
            "matches": 26,
            "patterns": 20,
        },
        "patterns": {"0-0": 8, "0-1": 4, "1-0": 3, "1-1": 5},
        "developer_driven": 12,
        "user_driven": 8,
        "developer_rate": 60.0,
        "user_rate": 40.0,
    }
    (out / "expected.json").write_text(
        json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Per-entry detail fixture reproducing the published Tencent Meeting row
# (60 / 15 / 6 / 51 -> developer 75 at 56.8%, user 57 at 43.2%).
# ---------------------------------------------------------------------------

def make_tencent_details() -> None:
    rng = random.Random(77)
    plan = [("0-0", 60), ("0-1", 15), ("1-0", 6), ("1-1", 51)]
    rows = []
    idx = 0
    base = datetime(2020, 1, 10, tzinfo=timezone.utc)
    for pattern, count in plan:
        for _ in range(count):
            idx += 1
            n_pre = 0 if pattern.startswith("0") else rng.randint(1, 6)
            n_post = 0 if pattern.endswith("0") else rng.randint(1, 9)
            rows.append({
                "entry_id": f"TM{idx:03d}",
                "pattern": pattern,
                "n_pre": n_pre,
                "n_post": n_post,
                "release_time": ts(base + timedelta(days=5 * idx)),
            })
    assert idx == 132
    write_jsonl(DATA / "tencent_details.jsonl", rows)


# ---------------------------------------------------------------------------
# Linearly separable labeled corpus: 500 reviews, class-disjoint vocabulary.
# ---------------------------------------------------------------------------

REL_WORDS = [
    "crash", "upload", "sync", "widget", "export", "login", "notification",
    "offline", "camera", "filter", "bluetooth", "import", "resolution",
    "playlist", "backup", "shortcut", "calendar", "timer", "zoom", "freeze",
    "lag", "bug",
]
IRR_WORDS = [
    "good", "love", "awesome", "cool", "best", "amazing", "fun", "super",
    "happy", "great", "fantastic", "wonderful", "excellent", "like",
    "enjoy", "okay", "fine", "nice",
]
SHARED_WORDS = ["app", "version", "update", "time", "phone"]


def make_nb500() -> None:
    rng = random.Random(5150)
    assert not set(REL_WORDS) & set(IRR_WORDS)
    base = datetime(2021, 6, 1, tzinfo=timezone.utc)
    reviews = []
    labels = []
    for k in range(500):
        label = "relevant" if k < 250 else "irrelevant"
        bank = REL_WORDS if label == "relevant" else IRR_WORDS
        words = rng.sample(bank, rng.randint(4, 7))
        if rng.random() < 0.6:
            words.append(rng.choice(SHARED_WORDS))
        rng.shuffle(words)
        rid = f"n{k + 1:04d}"
        reviews.append({
            "review_id": rid, "app_id": "nbfix", "body": " ".join(words),
            "created_at": ts(base + timedelta(minutes=k)),
        })
        labels.append(f"{rid}\t{label}")
    out = DATA / "nb500"
    write_jsonl(out / "reviews.jsonl", reviews)
    (out / "labels.tsv").write_text("\n".join(labels) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Published per-app reference counts used by the consistency tests.
# ---------------------------------------------------------------------------

def make_reference_counts() -> None:
    doc = {
        "annotated_reviews": [
            {"app": "Tencent Meeting", "annotated": 5309, "relevant": 1699, "irrelevant": 3610},
            {"app": "TikTok", "annotated": 63834, "relevant": 1480, "irrelevant": 62354},
            {"app": "DingTalk", "annotated": 10846, "relevant": 3283, "irrelevant": 7563},
            {"app": "Keep", "annotated": 6829, "relevant": 1744, "irrelevant": 5085},
            {"app": "Zoom", "annotated": 7045, "relevant": 980, "irrelevant": 6065},
        ],
        "annotated_reviews_total": {"annotated": 93863, "relevant": 9186, "irrelevant": 84677},
        "update_log_counts": {
            "Tencent Meeting": 132, "TikTok": 149, "DingTalk": 827,
            "Keep": 463, "Zoom": 607,
        },
        "update_log_total": 2178,
        "matching_dataset": [
            {"app": "Tencent Meeting", "logs": 60, "reviews": 1699, "positives": 636},
            {"app": "TikTok", "logs": 68, "reviews": 1480, "positives": 532},
            {"app": "DingTalk", "logs": 411, "reviews": 3283, "positives": 338},
            {"app": "Keep", "logs": 152, "reviews": 1744, "positives": 170},
            {"app": "Zoom", "logs": 309, "reviews": 980, "positives": 183},
        ],
        "pattern_summaries": [
            {"app": "Tencent Meeting", "0-0": 60, "0-1": 15, "1-0": 6, "1-1": 51,
             "developer_total": 75, "developer_rate": 56.8, "user_total": 57, "user_rate": 43.2},
            {"app": "TikTok", "0-0": 51, "0-1": 65, "1-0": 4, "1-1": 29,
             "developer_total": 116, "developer_rate": 77.9, "user_total": 33, "user_rate": 22.1},
            {"app": "DingTalk", "0-0": 371, "0-1": 247, "1-0": 37, "1-1": 172,
             "developer_total": 618, "developer_rate": 74.7, "user_total": 209, "user_rate": 25.3},
            {"app": "Keep", "0-0": 284, "0-1": 42, "1-0": 28, "1-1": 109,
             "developer_total": 326, "developer_rate": 70.4, "user_total": 137, "user_rate": 29.6},
            {"app": "Zoom", "0-0": 355, "0-1": 151, "1-0": 44, "1-1": 57,
             "developer_total": 506, "developer_rate": 83.4, "user_total": 101, "user_rate": 16.6},
        ],
    }
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "reference_counts.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def main() -> int:
    make_reference_counts()
    make_e2e()
    make_tencent_details()
    make_nb500()
    print(f"fixtures written under {DATA}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
