"""Command-line interface.

One subcommand per pipeline stage plus `run` for the whole thing. Exit
codes: 0 success, 2 usage error, 3 data error, 4 transport error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from . import __version__, classify, corpus, fetch, match, patterns, pipeline, report
from .config import load_config
from .errors import DataError, TransportError, UsageError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRANSPORT = 4


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from None


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from None


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")


def _load_rules(args) -> corpus.NormalizationRules:
    if getattr(args, "rules", None):
        return corpus.load_rules(args.rules)
    return corpus.NormalizationRules()


def _load_timeline(path: str) -> corpus.EntryTimeline:
    entries = corpus.ingest_logs(_read_bytes(path), source=path)
    app_id = entries[0].app_id if entries else ""
    return corpus.EntryTimeline(app_id=app_id, entries=entries)


def _load_reviews(path: str) -> corpus.ReviewSet:
    return corpus.ingest_reviews(_read_bytes(path), "jsonl", source=path)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    if args.kind == "reviews":
        rs = corpus.ingest_reviews(_read_bytes(args.input), args.format,
                                   app_id=args.app, source=args.input)
        _write_text(args.out, corpus.write_reviews_jsonl(rs.reviews))
    else:
        entries = corpus.ingest_logs(_read_bytes(args.input), source=args.input)
        _write_text(args.out, corpus.write_logs_jsonl(entries))
    return EXIT_OK


def cmd_preprocess(args) -> int:
    rules = _load_rules(args)
    if args.kind == "logs":
        entries = corpus.ingest_logs(_read_bytes(args.input), source=args.input)
        overrides = corpus.load_vague_overrides(args.overrides) if args.overrides else None
        timeline, excluded = corpus.preprocess_logs(entries, rules, overrides)
        _write_text(args.out, corpus.write_logs_jsonl(timeline.entries))
        if args.excluded_out:
            lines = []
            for e in excluded:
                reason = "vague" if e.vague else f"duplicate_of={e.duplicate_of}"
                lines.append(f"{e.entry_id}\t{reason}")
            _write_text(args.excluded_out, "\n".join(lines) + ("\n" if lines else ""))
    else:
        rs = corpus.ingest_reviews(_read_bytes(args.input), "jsonl", source=args.input)
        rs, _dropped = corpus.preprocess_reviews(rs, rules)
        if args.logs:
            timeline = _load_timeline(args.logs)
            rs = corpus.apply_review_window(rs, timeline, args.window_days)
        _write_text(args.out, corpus.write_reviews_jsonl(rs.reviews))
    return EXIT_OK


def cmd_train(args) -> int:
    rs = _load_reviews(args.reviews)
    labeled = classify.load_labels(args.labels, rs)
    if args.downsample:
        labeled = classify.downsample_majority(labeled, args.seed)
    split = classify.split_dataset(labeled, seed=args.seed)
    model = classify.train_nb(split.train, alpha=args.alpha)

    metrics = {}
    for name, part in (("validation", split.validation), ("test", split.test)):
        if not part:
            continue
        scorer = classify.relevance_scorer(model)
        preds = {}
        for item in part:
            p = scorer(item.review)
            preds[item.review.review_id] = classify.RELEVANT if p >= 0.5 else classify.IRRELEVANT
        gold = {item.review.review_id: item.label for item in part}
        metrics[name] = classify.metrics_to_dict(classify.evaluate(preds, gold))

    _write_text(args.model_out, classify.model_to_json(model))
    if args.metrics_out:
        _write_text(args.metrics_out,
                    json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_filter(args) -> int:
    rs = _load_reviews(args.reviews)
    if args.scores:
        scorer = classify.load_review_scores(args.scores)
    elif args.model:
        model = classify.model_from_json(_read_text(args.model), source=args.model)
        scorer = classify.relevance_scorer(model)
    else:
        scorer = lambda r: 1.0  # pass-through keeps `run` and stage chains composable
    result = classify.filter_reviews(scorer, rs, args.threshold)
    _write_text(args.out, corpus.write_reviews_jsonl(result.kept.reviews))
    if args.audit_out:
        lines = [f"{rid}\t{score!r}\t{int(kept)}" for rid, score, kept in result.audit]
        _write_text(args.audit_out, "\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK


def cmd_candidates(args) -> int:
    timeline = _load_timeline(args.logs)
    rs = _load_reviews(args.reviews)
    pairs = match.candidate_pairs(timeline, rs, args.threshold_candidate)
    buf = io.StringIO()
    match.write_worklist(pairs, timeline, rs, buf)
    _write_text(args.worklist_out, buf.getvalue())
    if args.pairs_out:
        lines = [json.dumps({"entry_id": p.entry_id, "review_id": p.review_id, "sim": p.sim},
                            sort_keys=True) for p in pairs]
        _write_text(args.pairs_out, "\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK


def cmd_match(args) -> int:
    timeline = _load_timeline(args.logs)
    rs = _load_reviews(args.reviews)
    if args.mode == match.MODE_IMPORTED:
        if not args.scores:
            raise UsageError("--mode imported requires --scores")
        scorer = match.import_scores(args.scores,
                                     entry_ids=[e.entry_id for e in timeline.entries],
                                     review_ids=[r.review_id for r in rs.reviews])
        records = match.match_all(timeline, rs, scorer, match.MODE_IMPORTED,
                                  threshold=args.threshold_decision)
    else:
        records = match.match_all(timeline, rs, mode=match.MODE_NATIVE,
                                  threshold=args.threshold_decision)
    if not args.keep_all:
        records = [m for m in records if m.decision == 1]
    _write_text(args.out, match.matches_to_jsonl(records))
    return EXIT_OK


def cmd_mine(args) -> int:
    timeline = _load_timeline(args.logs)
    rs = _load_reviews(args.reviews)
    records = match.matches_from_jsonl(_read_text(args.matches), source=args.matches)
    created_at = {r.review_id: r.created_at for r in rs.reviews}
    by_entry: dict[str, list] = {}
    for m in records:
        if m.decision != 1:
            continue
        if m.review_id not in created_at:
            raise DataError(f"match references unknown review {m.review_id!r}")
        by_entry.setdefault(m.entry_id, []).append((m.review_id, created_at[m.review_id]))
    details = patterns.mine_patterns(timeline.entries, by_entry, args.lead_time_days)
    _write_text(args.out, patterns.details_to_jsonl(details))
    return EXIT_OK


def cmd_report(args) -> int:
    details = patterns.details_from_jsonl(_read_text(args.details), source=args.details)
    summary = patterns.summarize(args.app, (d.pattern for d in details))
    _write_text(args.out, report.render_summary([summary], args.format))

    if args.figure_entry:
        if not (args.logs and args.reviews and args.matches):
            raise UsageError("--figure-entry requires --logs, --reviews and --matches")
        timeline = _load_timeline(args.logs)
        entry = next((e for e in timeline.entries if e.entry_id == args.figure_entry), None)
        if entry is None:
            raise DataError(f"entry {args.figure_entry!r} not in timeline")
        rs = _load_reviews(args.reviews)
        created_at = {r.review_id: r.created_at for r in rs.reviews}
        records = match.matches_from_jsonl(_read_text(args.matches), source=args.matches)
        matched = [(m.review_id, created_at[m.review_id]) for m in records
                   if m.decision == 1 and m.entry_id == entry.entry_id]
        series = patterns.timeline_series(entry, matched, args.bin)
        _write_text(args.figure_out, report.emit_timeline_figure(series, args.figure_format))
    return EXIT_OK


def cmd_fetch(args) -> int:
    raw_pages = fetch.fetch_pages(
        args.app, country=args.country, pages=args.pages,
        cache_dir=args.cache_dir, rate_limit=args.rate_limit,
        max_retries=args.max_retries,
    )
    _write_text(args.out, fetch.pages_to_jsonl(raw_pages, args.app))
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.app:
        config.app_id = args.app
    if args.out:
        config.out_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    if args.format:
        config.formats = tuple(args.format.split(","))
    if args.window_days is not None:
        config.window_days = args.window_days
    if args.lead_time_days is not None:
        config.lead_time_days = args.lead_time_days
    if args.threshold_candidate is not None:
        config.threshold_candidate = args.threshold_candidate
    if args.threshold_decision is not None:
        config.threshold_decision = args.threshold_decision
    pipeline.run(config)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evolog",
        description="Quantify how much of an app's evolution is driven by user feedback.",
    )
    parser.add_argument("--version", action="version", version=f"evolog {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize raw reviews or logs to canonical JSONL")
    p.add_argument("--kind", choices=("reviews", "logs"), default="reviews")
    p.add_argument("--format", choices=corpus.REVIEW_FORMATS, default="jsonl")
    p.add_argument("--app", help="app id (required for feed JSON without one)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="clean reviews or logs")
    p.add_argument("--kind", choices=("reviews", "logs"), default="reviews")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rules", help="normalization rules file")
    p.add_argument("--overrides", help="vague/keep override file (logs)")
    p.add_argument("--excluded-out", help="write excluded entries + reasons (logs)")
    p.add_argument("--logs", help="preprocessed logs; clips reviews to the feedback window")
    p.add_argument("--window-days", type=int, default=183)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train the native NB relevance filter")
    p.add_argument("--reviews", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--downsample", action="store_true",
                   help="downsample the majority class before splitting")
    p.add_argument("--model-out", required=True)
    p.add_argument("--metrics-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("filter", help="keep feature-relevant reviews")
    p.add_argument("--reviews", required=True)
    p.add_argument("--model", help="NB model JSON")
    p.add_argument("--scores", help="imported relevance score JSONL")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--audit-out")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("candidates", help="cosine pre-labeling worklist")
    p.add_argument("--logs", required=True)
    p.add_argument("--reviews", required=True)
    p.add_argument("--threshold-candidate", type=float, default=match.CANDIDATE_THRESHOLD)
    p.add_argument("--worklist-out", required=True)
    p.add_argument("--pairs-out")
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("match", help="score and decide all entry-review pairs")
    p.add_argument("--logs", required=True)
    p.add_argument("--reviews", required=True)
    p.add_argument("--mode", choices=(match.MODE_NATIVE, match.MODE_IMPORTED),
                   default=match.MODE_NATIVE)
    p.add_argument("--scores", help="pair score JSONL (imported mode)")
    p.add_argument("--keep-all", action="store_true",
                   help="emit decision-0 records too")
    p.add_argument("--threshold-decision", type=float, default=match.DECISION_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("mine", help="classify feedback patterns per entry")
    p.add_argument("--logs", required=True)
    p.add_argument("--reviews", required=True)
    p.add_argument("--matches", required=True)
    p.add_argument("--lead-time-days", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("report", help="render the contribution summary")
    p.add_argument("--details", required=True, help="per-entry detail JSONL")
    p.add_argument("--app", required=True)
    p.add_argument("--format", choices=("csv", "json", "md", "markdown"), default="md")
    p.add_argument("--out", default="-")
    p.add_argument("--figure-entry", help="also emit a timeline figure for this entry")
    p.add_argument("--figure-format", choices=("svg", "csv"), default="svg")
    p.add_argument("--figure-out", default="timeline.svg")
    p.add_argument("--bin", choices=patterns.BINS, default="week")
    p.add_argument("--logs")
    p.add_argument("--reviews")
    p.add_argument("--matches")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("fetch", help="download public review-feed pages")
    p.add_argument("--app", required=True)
    p.add_argument("--country", default="us")
    p.add_argument("--pages", type=int, default=1)
    p.add_argument("--cache-dir", help="page cache for resumable fetches")
    p.add_argument("--rate-limit", type=float, default=1.0)
    p.add_argument("--max-retries", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("run", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--app")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", help="comma-separated report formats (csv,json,md)")
    p.add_argument("--window-days", type=int)
    p.add_argument("--lead-time-days", type=int)
    p.add_argument("--threshold-candidate", type=float)
    p.add_argument("--threshold-decision", type=float)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
