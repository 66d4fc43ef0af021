"""Readers and writers for the core pipeline's interchange files.

These formats are the entire contract with the core: review/log JSONL in,
score JSONL out. The trainer deliberately never imports the core package.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path


class FormatError(ValueError):
    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        prefix = f"{source}:{line}: " if source and line else (f"{source}: " if source else "")
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ReviewRow:
    review_id: str
    body: str


@dataclass(frozen=True)
class LogRow:
    entry_id: str
    text: str


def read_reviews(path: str | Path) -> dict[str, ReviewRow]:
    """Review JSONL -> id-keyed rows (only id and body matter here)."""
    rows: dict[str, ReviewRow] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", source=str(path), line=lineno) from None
            for req in ("review_id", "body"):
                if not rec.get(req):
                    raise FormatError(f"missing field {req!r}", source=str(path), line=lineno)
            rid = str(rec["review_id"])
            if rid in rows:
                raise FormatError(f"duplicate review_id {rid!r}", source=str(path), line=lineno)
            rows[rid] = ReviewRow(review_id=rid, body=str(rec["body"]))
    return rows


def read_logs(path: str | Path) -> dict[str, LogRow]:
    rows: dict[str, LogRow] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", source=str(path), line=lineno) from None
            for req in ("entry_id", "text"):
                if not rec.get(req):
                    raise FormatError(f"missing field {req!r}", source=str(path), line=lineno)
            eid = str(rec["entry_id"])
            if eid in rows:
                raise FormatError(f"duplicate entry_id {eid!r}", source=str(path), line=lineno)
            rows[eid] = LogRow(entry_id=eid, text=str(rec["text"]))
    return rows


def read_labels(path: str | Path) -> dict[str, str]:
    """Label TSV: review_id<TAB>relevant|irrelevant."""
    labels: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in ("relevant", "irrelevant"):
                raise FormatError('expected "review_id<TAB>relevant|irrelevant"',
                                  source=str(path), line=lineno)
            if parts[0] in labels:
                raise FormatError(f"duplicate label for {parts[0]!r}", source=str(path), line=lineno)
            labels[parts[0]] = parts[1]
    return labels


def read_pairs(path: str | Path, labeled: bool = True) -> dict[tuple[str, str], int | None]:
    """Gold pair TSV: entry_id<TAB>review_id<TAB>1|0 (label optional for
    prediction requests)."""
    pairs: dict[tuple[str, str], int | None] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if labeled:
                if len(parts) != 3 or parts[2] not in ("0", "1"):
                    raise FormatError('expected "entry_id<TAB>review_id<TAB>1|0"',
                                      source=str(path), line=lineno)
                label = int(parts[2])
            else:
                if len(parts) not in (2, 3):
                    raise FormatError('expected "entry_id<TAB>review_id"',
                                      source=str(path), line=lineno)
                label = None
            key = (parts[0], parts[1])
            if key in pairs:
                raise FormatError(f"duplicate pair {key}", source=str(path), line=lineno)
            pairs[key] = label
    return pairs


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_review_scores(path: str | Path, rows: list[tuple[str, float]]) -> None:
    """Relevance score JSONL, sorted by review id, written atomically."""
    lines = [json.dumps({"review_id": rid, "p": p}, sort_keys=True)
             for rid, p in sorted(rows)]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def write_pair_scores(path: str | Path, rows: list[tuple[str, str, float]]) -> None:
    """Pair score JSONL, sorted by (entry id, review id), written atomically."""
    lines = [json.dumps({"entry_id": e, "review_id": r, "p": p}, sort_keys=True)
             for e, r, p in sorted(rows)]
    _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def write_manifest(path: str | Path, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
