"""End-to-end pipeline: ingest -> preprocess -> filter -> match -> mine ->
report, with a machine-readable run manifest.

Every run is deterministic for a fixed config and seed; the manifest's
timing block is the only non-deterministic output.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, classify, corpus, match, patterns, report
from .config import PipelineConfig
from .errors import DataError

FILTER_NONE = "none"
FILTER_NB = "nb"
FILTER_IMPORTED = "imported"

STAGES = ("ingest", "preprocess", "filter", "match", "mine", "report")


@dataclass
class RunManifest:
    config: dict
    counts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    filter_mode: str = FILTER_NONE
    match_mode: str = match.MODE_NATIVE
    status: str = "ok"
    failed_stage: str | None = None
    tool: str = f"evolog {__version__}"

    def to_json(self) -> str:
        doc = {
            "tool": self.tool,
            "status": self.status,
            "failed_stage": self.failed_stage,
            "filter_mode": self.filter_mode,
            "match_mode": self.match_mode,
            "config": self.config,
            "counts": self.counts,
            "timings": self.timings,
        }
        return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


class _StageTimer:
    def __init__(self, manifest: RunManifest, name: str):
        self.manifest = manifest
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.manifest.timings[self.name] = round(time.perf_counter() - self.t0, 6)
        if exc_type is not None:
            self.manifest.status = "error"
            self.manifest.failed_stage = self.name
        return False


def run(config: PipelineConfig) -> RunManifest:
    """Execute the full pipeline and write all artifacts to config.out_dir.

    On a stage failure the manifest (with the failing stage recorded) is
    still written before the error propagates.
    """
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=config.snapshot())

    try:
        _run_stages(config, manifest, out_dir)
    finally:
        (out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def _run_stages(config: PipelineConfig, manifest: RunManifest, out_dir: Path) -> None:
    counts = manifest.counts
    rules = corpus.load_rules(config.rules) if config.rules else corpus.NormalizationRules()

    with _StageTimer(manifest, "ingest"):
        if not config.reviews or not config.logs:
            raise DataError("config must name both a reviews file and a logs file")
        with open(config.reviews, "rb") as fh:
            review_set = corpus.ingest_reviews(fh, config.reviews_format,
                                               app_id=config.app_id or None,
                                               source=config.reviews)
        with open(config.logs, "rb") as fh:
            raw_entries = corpus.ingest_logs(fh, source=config.logs)
        counts["reviews_ingested"] = len(review_set)
        counts["logs_ingested"] = len(raw_entries)

    with _StageTimer(manifest, "preprocess"):
        overrides = corpus.load_vague_overrides(config.overrides) if config.overrides else None
        timeline, excluded = corpus.preprocess_logs(raw_entries, rules, overrides)
        counts["vague_excluded"] = sum(1 for e in excluded if e.vague)
        counts["deduped"] = sum(1 for e in excluded if e.duplicate_of is not None)
        counts["entries_surviving"] = len(timeline)

        review_set, dropped_empty = corpus.preprocess_reviews(review_set, rules)
        counts["dropped_empty"] = dropped_empty
        before_window = len(review_set)
        review_set = corpus.apply_review_window(review_set, timeline, config.window_days)
        counts["window_dropped"] = before_window - len(review_set)

    with _StageTimer(manifest, "filter"):
        if len(review_set) == 0:
            raise DataError("no reviews left to filter")
        if config.review_scores:
            manifest.filter_mode = FILTER_IMPORTED
            scores = classify.load_review_scores(config.review_scores)
            result = classify.filter_reviews(scores, review_set, config.threshold_relevance)
        elif config.labels:
            manifest.filter_mode = FILTER_NB
            labeled = classify.load_labels(config.labels, review_set)
            if config.downsample:
                labeled = classify.downsample_majority(labeled, config.seed)
            split = classify.split_dataset(labeled, seed=config.seed)
            model = classify.train_nb(split.train)
            result = classify.filter_reviews(classify.relevance_scorer(model),
                                             review_set, config.threshold_relevance)
        else:
            manifest.filter_mode = FILTER_NONE
            result = classify.filter_reviews(lambda r: 1.0, review_set,
                                             config.threshold_relevance)
        review_set = result.kept
        counts["relevant"] = len(review_set)
        audit_lines = [f"{rid}\t{score!r}\t{int(kept)}" for rid, score, kept in result.audit]
        (out_dir / "filter_audit.tsv").write_text(
            "\n".join(audit_lines) + ("\n" if audit_lines else ""), encoding="utf-8")

    with _StageTimer(manifest, "match"):
        candidates = match.candidate_pairs(timeline, review_set, config.threshold_candidate)
        counts["candidates"] = len(candidates)
        if config.pair_scores:
            manifest.match_mode = match.MODE_IMPORTED
            scorer = match.import_scores(
                config.pair_scores,
                entry_ids=[e.entry_id for e in timeline.entries],
                review_ids=[r.review_id for r in review_set.reviews],
            )
            records = match.match_all(timeline, review_set, scorer, match.MODE_IMPORTED,
                                      threshold=config.threshold_decision)
        else:
            manifest.match_mode = match.MODE_NATIVE
            records = match.match_all(timeline, review_set, mode=match.MODE_NATIVE,
                                      threshold=config.threshold_decision)
        matched = [m for m in records if m.decision == 1]
        counts["matches"] = len(matched)
        (out_dir / "matches.jsonl").write_text(match.matches_to_jsonl(matched),
                                               encoding="utf-8")

    with _StageTimer(manifest, "mine"):
        created_at = {r.review_id: r.created_at for r in review_set.reviews}
        by_entry: dict[str, list[tuple[str, object]]] = {}
        for m in matched:
            by_entry.setdefault(m.entry_id, []).append((m.review_id, created_at[m.review_id]))
        details = patterns.mine_patterns(timeline.entries, by_entry, config.lead_time_days)
        counts["patterns"] = len(details)
        summary = patterns.summarize(timeline.app_id or config.app_id,
                                     (d.pattern for d in details))
        (out_dir / "entries.jsonl").write_text(patterns.details_to_jsonl(details),
                                               encoding="utf-8")

    with _StageTimer(manifest, "report"):
        for fmt in config.formats:
            text = report.render_summary([summary], fmt)
            (out_dir / f"summary.{fmt}").write_text(text, encoding="utf-8")
        series_csv = ["entry_id,bin_start,count"]
        for entry in timeline.entries:
            series = patterns.timeline_series(entry, by_entry.get(entry.entry_id, []),
                                              config.timeline_bin)
            for start, count in series.points:
                series_csv.append(f"{entry.entry_id},{corpus.format_timestamp(start)},{count}")
        (out_dir / "timelines.csv").write_text("\n".join(series_csv) + "\n", encoding="utf-8")
