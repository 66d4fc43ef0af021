"""Entry-review matching: term-frequency cosine similarity, candidate-pair
generation, balanced negative sampling, and the probability-threshold match
decision.

Whole log lines are matched against whole review bodies; feature-phrase
extraction is deliberately not used. Pairwise scoring runs through the
kernel backend (compiled when available).
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import corpus, kernels
from .corpus import EntryTimeline, ReviewSet
from .errors import DataError

Tokenizer = Callable[[str], list[str]]

CANDIDATE_THRESHOLD = 0.3
DECISION_THRESHOLD = 0.5

MODE_NATIVE = "native-cosine"
MODE_IMPORTED = "imported"


# ---------------------------------------------------------------------------
# Term-frequency vectors and cosine
# ---------------------------------------------------------------------------

class TFVector:
    """Sparse token -> positive count map with its squared Euclidean norm."""

    __slots__ = ("counts", "normsq")

    def __init__(self, counts: Mapping[str, int]):
        for tok, c in counts.items():
            if c <= 0:
                raise ValueError(f"count for {tok!r} must be positive, got {c}")
        self.counts = dict(counts)
        self.normsq = sum(c * c for c in self.counts.values())

    def __eq__(self, other):
        return isinstance(other, TFVector) and self.counts == other.counts

    def __repr__(self):
        return f"TFVector({self.counts!r})"

    def __len__(self):
        return len(self.counts)

    def scaled(self, k: int) -> "TFVector":
        return TFVector({t: k * c for t, c in self.counts.items()})


def tf_vector(tokens: Iterable[str]) -> TFVector:
    counts: dict[str, int] = {}
    for tok in tokens:
        counts[tok] = counts.get(tok, 0) + 1
    return TFVector(counts)


def cosine(v1: TFVector, v2: TFVector) -> float:
    """dot(v1,v2) / (||v1|| * ||v2||); 0.0 when either vector is empty.

    The denominator is computed as sqrt(normsq1 * normsq2) so identical
    vectors score exactly 1.0.
    """
    if not v1.counts or not v2.counts:
        return 0.0
    small, large = (v1.counts, v2.counts) if len(v1.counts) <= len(v2.counts) else (v2.counts, v1.counts)
    dot = 0
    for tok, c in small.items():
        other = large.get(tok)
        if other is not None:
            dot += c * other
    if dot == 0:
        return 0.0
    return dot / math.sqrt(v1.normsq * v2.normsq)


# ---------------------------------------------------------------------------
# Pair types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidatePair:
    entry_id: str
    review_id: str
    sim: float


@dataclass(frozen=True)
class MatchRecord:
    entry_id: str
    review_id: str
    score: float
    decision: int
    source: str  # MODE_NATIVE or MODE_IMPORTED


@dataclass
class GoldPairSet:
    positives: list[tuple[str, str]]
    negatives: list[tuple[str, str]]
    seed: int

    def __post_init__(self):
        if len(self.negatives) != len(self.positives):
            raise DataError(
                f"gold set must be balanced: {len(self.positives)} positives vs "
                f"{len(self.negatives)} negatives"
            )
        if set(self.positives) & set(self.negatives):
            raise DataError("positives and negatives overlap")


def decide(score: float) -> int:
    """Binary match decision: 1 iff score >= 0.5."""
    if not 0.0 <= score <= 1.0:
        raise DataError(f"score {score!r} outside [0,1]")
    return 1 if score >= DECISION_THRESHOLD else 0


# ---------------------------------------------------------------------------
# Batch scoring through the kernel
# ---------------------------------------------------------------------------

def _default_tokenizer(text: str) -> list[str]:
    return corpus.tokenize(text, "auto")


def _corpus_arrays(entry_vecs: Sequence[TFVector], review_vecs: Sequence[TFVector]):
    """Encode both vector lists as CSR int64 arrays over a shared vocabulary."""
    vocab: dict[str, int] = {}

    def encode(vecs):
        indptr = [0]
        tokens: list[int] = []
        counts: list[int] = []
        for v in vecs:
            ids = sorted((vocab.setdefault(t, len(vocab)), c) for t, c in v.counts.items())
            tokens.extend(i for i, _ in ids)
            counts.extend(c for _, c in ids)
            indptr.append(len(tokens))
        return (np.asarray(indptr, dtype=np.int64),
                np.asarray(tokens, dtype=np.int64),
                np.asarray(counts, dtype=np.int64))

    e_indptr, e_tokens, e_counts = encode(entry_vecs)
    r_indptr, r_tokens, r_counts = encode(review_vecs)
    e_normsq = np.asarray([float(v.normsq) for v in entry_vecs], dtype=np.float64)
    r_normsq = np.asarray([float(v.normsq) for v in review_vecs], dtype=np.float64)
    return (e_indptr, e_tokens, e_counts, e_normsq,
            r_indptr, r_tokens, r_counts, r_normsq)


def _scan(timeline: EntryTimeline, reviews: ReviewSet, theta: float, tokenizer: Tokenizer):
    entry_vecs = [tf_vector(tokenizer(e.text)) for e in timeline.entries]
    review_vecs = [tf_vector(tokenizer(r.body)) for r in reviews.reviews]
    arrays = _corpus_arrays(entry_vecs, review_vecs)
    return kernels.scan_pairs(*arrays, theta)


def candidate_pairs(
    timeline: EntryTimeline,
    reviews: ReviewSet,
    theta: float = CANDIDATE_THRESHOLD,
    tokenizer: Tokenizer | None = None,
) -> list[CandidatePair]:
    """All (entry, review) pairs with cosine >= theta, sorted by entry id
    then descending similarity."""
    tokenizer = tokenizer or _default_tokenizer
    ii, jj, ss = _scan(timeline, reviews, theta, tokenizer)
    pairs = [
        CandidatePair(entry_id=timeline.entries[i].entry_id,
                      review_id=reviews.reviews[j].review_id,
                      sim=float(s))
        for i, j, s in zip(ii.tolist(), jj.tolist(), ss.tolist())
    ]
    pairs.sort(key=lambda p: (p.entry_id, -p.sim, p.review_id))
    return pairs


# ---------------------------------------------------------------------------
# Imported pair scores
# ---------------------------------------------------------------------------

class PairScorer:
    """Total scorer over entry x review: listed pairs score p, the rest 0.0."""

    def __init__(self, scores: Mapping[tuple[str, str], float]):
        self.scores = dict(scores)

    def __call__(self, entry_id: str, review_id: str) -> float:
        return self.scores.get((entry_id, review_id), 0.0)


def import_scores(
    path: str,
    entry_ids: Iterable[str] | None = None,
    review_ids: Iterable[str] | None = None,
) -> PairScorer:
    """Load a pair score JSONL ({entry_id, review_id, p}).

    Duplicate pairs, out-of-range probabilities, and (when id sets are
    given) unknown ids are positioned errors.
    """
    known_e = set(entry_ids) if entry_ids is not None else None
    known_r = set(review_ids) if review_ids is not None else None
    scores: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", source=path, line=lineno) from None
            for req in ("entry_id", "review_id", "p"):
                if req not in rec:
                    raise DataError(f"row missing field {req!r}", source=path, line=lineno)
            p = rec["p"]
            if not isinstance(p, (int, float)) or not 0.0 <= float(p) <= 1.0:
                raise DataError(f"p={p!r} outside [0,1]", source=path, line=lineno)
            key = (str(rec["entry_id"]), str(rec["review_id"]))
            if key in scores:
                raise DataError(f"duplicate score row for pair {key}", source=path, line=lineno)
            if known_e is not None and key[0] not in known_e:
                raise DataError(f"unknown entry_id {key[0]!r}", source=path, line=lineno)
            if known_r is not None and key[1] not in known_r:
                raise DataError(f"unknown review_id {key[1]!r}", source=path, line=lineno)
            scores[key] = float(p)
    return PairScorer(scores)


# ---------------------------------------------------------------------------
# Full matching
# ---------------------------------------------------------------------------

def match_all(
    timeline: EntryTimeline,
    reviews: ReviewSet,
    scorer: PairScorer | Callable[[str, str], float] | None = None,
    mode: str = MODE_NATIVE,
    tokenizer: Tokenizer | None = None,
    threshold: float = DECISION_THRESHOLD,
) -> list[MatchRecord]:
    """One MatchRecord per (entry, review) pair, ascending by ids.

    Native mode scores min(1, cosine); imported mode requires a total pair
    scorer (unlisted pairs are 0.0 by construction). The default threshold
    is the standard decision rule; overriding it is a pipeline-level
    sensitivity knob.
    """
    if mode not in (MODE_NATIVE, MODE_IMPORTED):
        raise DataError(f"unknown match mode {mode!r}")
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold {threshold!r} outside [0,1]")

    def decision(score: float) -> int:
        return 1 if score >= threshold else 0

    records: list[MatchRecord] = []
    if mode == MODE_NATIVE:
        tokenizer = tokenizer or _default_tokenizer
        ii, jj, ss = _scan(timeline, reviews, 0.0, tokenizer)  # theta 0 keeps every pair
        for i, j, s in zip(ii.tolist(), jj.tolist(), ss.tolist()):
            score = min(1.0, float(s))
            records.append(MatchRecord(
                entry_id=timeline.entries[i].entry_id,
                review_id=reviews.reviews[j].review_id,
                score=score,
                decision=decision(score),
                source=MODE_NATIVE,
            ))
    else:
        if scorer is None:
            raise DataError("imported mode requires a pair scorer")
        for e in timeline.entries:
            for r in reviews.reviews:
                score = scorer(e.entry_id, r.review_id)
                if not 0.0 <= score <= 1.0:
                    raise DataError(
                        f"scorer returned {score!r} for pair ({e.entry_id}, {r.review_id})"
                    )
                records.append(MatchRecord(
                    entry_id=e.entry_id,
                    review_id=r.review_id,
                    score=score,
                    decision=decision(score),
                    source=MODE_IMPORTED,
                ))
    records.sort(key=lambda m: (m.entry_id, m.review_id))
    return records


def matches_to_jsonl(records: Iterable[MatchRecord]) -> str:
    lines = [
        json.dumps({"entry_id": m.entry_id, "review_id": m.review_id,
                    "score": m.score, "decision": m.decision, "source": m.source},
                   sort_keys=True)
        for m in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def matches_from_jsonl(text: str, *, source: str = "<matches>") -> list[MatchRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON: {exc.msg}", source=source, line=lineno) from None
        records.append(MatchRecord(
            entry_id=str(rec["entry_id"]), review_id=str(rec["review_id"]),
            score=float(rec["score"]), decision=int(rec["decision"]),
            source=str(rec.get("source", MODE_NATIVE)),
        ))
    return records


# ---------------------------------------------------------------------------
# Gold pairs and negative sampling
# ---------------------------------------------------------------------------

def sample_negatives(
    positives: Sequence[tuple[str, str]],
    entries: Sequence[str],
    reviews: Sequence[str],
    seed: int = 0,
) -> list[tuple[str, str]]:
    """Uniform without-replacement sample of non-positive pairs, one per
    positive, deterministic under seed."""
    n, m = len(entries), len(reviews)
    pos = set(positives)
    entry_idx = {e: i for i, e in enumerate(entries)}
    review_idx = {r: i for i, r in enumerate(reviews)}
    for e, r in pos:
        if e not in entry_idx or r not in review_idx:
            raise DataError(f"positive pair ({e!r}, {r!r}) outside the entry/review space")

    needed = len(positives)
    available = n * m - len(pos)
    if available < needed:
        raise DataError(
            f"negative pool too small: need {needed}, only {available} non-positive pairs"
        )

    rng = random.Random(seed)
    # A uniform sample of distinct pair indices, filtered to the complement,
    # is a uniform without-replacement sample of the complement.
    draw = rng.sample(range(n * m), min(n * m, needed + len(pos)))
    negatives: list[tuple[str, str]] = []
    for idx in draw:
        pair = (entries[idx // m], reviews[idx % m])
        if pair in pos:
            continue
        negatives.append(pair)
        if len(negatives) == needed:
            break
    return negatives


def build_gold_pairs(
    positives: Sequence[tuple[str, str]],
    entries: Sequence[str],
    reviews: Sequence[str],
    seed: int = 0,
) -> GoldPairSet:
    negatives = sample_negatives(positives, entries, reviews, seed)
    return GoldPairSet(positives=list(positives), negatives=negatives, seed=seed)


def load_gold_pairs(path: str) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Read a gold TSV (entry_id<TAB>review_id<TAB>1|0) into (positives, negatives)."""
    positives: list[tuple[str, str]] = []
    negatives: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("0", "1"):
                raise DataError('expected "entry_id<TAB>review_id<TAB>1|0"', source=path, line=lineno)
            pair = (parts[0], parts[1])
            if pair in seen:
                raise DataError(f"duplicate gold pair {pair}", source=path, line=lineno)
            seen.add(pair)
            (positives if parts[2] == "1" else negatives).append(pair)
    return positives, negatives


def write_gold_pairs(gold: GoldPairSet) -> str:
    lines = [f"{e}\t{r}\t1" for e, r in gold.positives]
    lines += [f"{e}\t{r}\t0" for e, r in gold.negatives]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Manual-verification worklist
# ---------------------------------------------------------------------------

def write_worklist(
    pairs: Sequence[CandidatePair],
    timeline: EntryTimeline,
    reviews: ReviewSet,
    fh,
) -> None:
    """CSV worklist for human correction of cosine-prelabeled pairs."""
    entry_text = {e.entry_id: e.text for e in timeline.entries}
    review_text = {r.review_id: r.body for r in reviews.reviews}
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["entry_id", "review_id", "sim", "entry_text", "review_text", "label"])
    for p in pairs:
        writer.writerow([p.entry_id, p.review_id, repr(p.sim),
                         entry_text[p.entry_id], review_text[p.review_id], ""])
