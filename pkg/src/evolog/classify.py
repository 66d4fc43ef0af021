"""Review-relevance filtering: dataset splits, multinomial Naive Bayes,
precision/recall/F1, and threshold filtering with an audit trail.

External transformer predictions enter through the same score-file format
the matcher uses (review_id only); the native NB path keeps the pipeline
self-contained.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from . import corpus
from .corpus import Review, ReviewSet
from .errors import DataError, UsageError

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"
LABELS = (RELEVANT, IRRELEVANT)

Tokenizer = Callable[[str], list[str]]


@dataclass(frozen=True)
class LabeledReview:
    review: Review
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise DataError(f"label must be one of {LABELS}, got {self.label!r}")


@dataclass
class DatasetSplit:
    train: list[LabeledReview]
    validation: list[LabeledReview]
    test: list[LabeledReview]
    seed: int


@dataclass
class NBModel:
    """Multinomial NB with Laplace smoothing, all scores in log space."""

    class_log_priors: dict[str, float]
    token_log_likelihoods: dict[str, dict[str, float]]
    vocabulary: set[str]
    alpha: float
    class_token_totals: dict[str, int]
    tokenizer_mode: str = "auto"

    def unseen_log_likelihood(self, label: str) -> float:
        # smoothing mass for a token absent from the vocabulary
        total = self.class_token_totals[label]
        return math.log(self.alpha / (total + self.alpha * len(self.vocabulary)))


@dataclass
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    degenerate_flags: set[str] = field(default_factory=set)


@dataclass
class Metrics:
    per_class: dict[str, ClassMetrics]


# ---------------------------------------------------------------------------
# Dataset handling
# ---------------------------------------------------------------------------

def split_dataset(
    items: Sequence[LabeledReview],
    ratios: tuple[float, float, float] = (0.70, 0.20, 0.10),
    seed: int = 0,
) -> DatasetSplit:
    """Deterministic shuffled split; floor sizes, remainder to train, then
    validation, then test."""
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise UsageError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise UsageError(f"ratios must sum to 1, got {sum(ratios)!r}")
    if not items:
        raise DataError("cannot split an empty dataset")

    shuffled = list(items)
    random.Random(seed).shuffle(shuffled)
    n = len(shuffled)
    sizes = [int(n * r) for r in ratios]
    for i in range(n - sum(sizes)):
        sizes[i % 3] += 1
    train = shuffled[:sizes[0]]
    validation = shuffled[sizes[0]:sizes[0] + sizes[1]]
    test = shuffled[sizes[0] + sizes[1]:]
    return DatasetSplit(train=train, validation=validation, test=test, seed=seed)


def load_labels(path: str, reviews: ReviewSet) -> list[LabeledReview]:
    """Join a label TSV (review_id<TAB>relevant|irrelevant) against reviews."""
    by_id = {r.review_id: r for r in reviews.reviews}
    labeled: list[LabeledReview] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError('expected "review_id<TAB>label"', source=path, line=lineno)
            rid, label = parts
            if label not in LABELS:
                raise DataError(f"label must be one of {LABELS}, got {label!r}",
                                source=path, line=lineno)
            if rid in seen:
                raise DataError(f"duplicate label for review {rid!r} (first at line {seen[rid]})",
                                source=path, line=lineno)
            seen[rid] = lineno
            if rid not in by_id:
                raise DataError(f"label references unknown review {rid!r}", source=path, line=lineno)
            labeled.append(LabeledReview(review=by_id[rid], label=label))
    return labeled


def downsample_majority(items: Sequence[LabeledReview], seed: int = 0) -> list[LabeledReview]:
    """Optional class rebalancing: sample the majority class down to parity."""
    groups: dict[str, list[LabeledReview]] = {lbl: [] for lbl in LABELS}
    for it in items:
        groups[it.label].append(it)
    minority = min(len(g) for g in groups.values())
    rng = random.Random(seed)
    out: list[LabeledReview] = []
    for lbl in LABELS:
        g = groups[lbl]
        out.extend(g if len(g) == minority else rng.sample(g, minority))
    out.sort(key=lambda it: it.review.review_id)
    return out


# ---------------------------------------------------------------------------
# Naive Bayes
# ---------------------------------------------------------------------------

def train_nb(
    train: Sequence[LabeledReview],
    alpha: float = 1.0,
    tokenizer: Tokenizer | None = None,
    tokenizer_mode: str = "auto",
) -> NBModel:
    """Fit multinomial NB: priors from document counts, likelihoods
    Laplace-smoothed over the training vocabulary."""
    if alpha <= 0:
        raise UsageError(f"alpha must be > 0, got {alpha}")
    if not train:
        raise DataError("cannot train on an empty corpus")
    if tokenizer is None:
        tokenizer = lambda text: corpus.tokenize(text, tokenizer_mode)

    doc_counts = {lbl: 0 for lbl in LABELS}
    token_counts: dict[str, dict[str, int]] = {lbl: {} for lbl in LABELS}
    vocabulary: set[str] = set()
    for item in train:
        doc_counts[item.label] += 1
        for tok in tokenizer(item.review.body):
            vocabulary.add(tok)
            token_counts[item.label][tok] = token_counts[item.label].get(tok, 0) + 1
    if any(c == 0 for c in doc_counts.values()):
        missing = [lbl for lbl, c in doc_counts.items() if c == 0]
        raise DataError(f"training corpus has no documents for class(es) {missing}")

    n = len(train)
    v = len(vocabulary)
    priors = {lbl: math.log(doc_counts[lbl] / n) for lbl in LABELS}
    totals = {lbl: sum(token_counts[lbl].values()) for lbl in LABELS}
    likelihoods: dict[str, dict[str, float]] = {}
    for lbl in LABELS:
        denom = totals[lbl] + alpha * v
        likelihoods[lbl] = {
            tok: math.log((token_counts[lbl].get(tok, 0) + alpha) / denom)
            for tok in vocabulary
        }
    return NBModel(
        class_log_priors=priors,
        token_log_likelihoods=likelihoods,
        vocabulary=vocabulary,
        alpha=alpha,
        class_token_totals=totals,
        tokenizer_mode=tokenizer_mode,
    )


def predict_nb(model: NBModel, tokens: Sequence[str]) -> tuple[str, float]:
    """Score a token bag; returns (label, posterior of that label).

    Unseen tokens get the smoothing mass instead of being dropped; an exact
    posterior tie goes to "irrelevant" so ambiguous reviews never pollute
    matching.
    """
    scores = {}
    for lbl in LABELS:
        ll = model.token_log_likelihoods[lbl]
        unseen = model.unseen_log_likelihood(lbl)
        s = model.class_log_priors[lbl]
        for tok in tokens:
            s += ll.get(tok, unseen)
        scores[lbl] = s

    delta = scores[IRRELEVANT] - scores[RELEVANT]
    try:
        p_relevant = 1.0 / (1.0 + math.exp(delta))
    except OverflowError:
        p_relevant = 0.0
    if scores[RELEVANT] > scores[IRRELEVANT]:
        return RELEVANT, p_relevant
    return IRRELEVANT, 1.0 - p_relevant


def relevance_scorer(model: NBModel, tokenizer: Tokenizer | None = None) -> Callable[[Review], float]:
    """Wrap a model as a per-review relevance probability."""
    if tokenizer is None:
        tokenizer = lambda text: corpus.tokenize(text, model.tokenizer_mode)

    def score(review: Review) -> float:
        label, posterior = predict_nb(model, tokenizer(review.body))
        return posterior if label == RELEVANT else 1.0 - posterior

    return score


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def evaluate(predictions: Mapping[str, str], gold: Mapping[str, str]) -> Metrics:
    """Per-class precision/recall/F1 from aligned id->label maps.

    Degenerate denominators yield 0.0 plus a flag instead of dividing by
    zero.
    """
    missing = sorted(set(gold) - set(predictions))
    extra = sorted(set(predictions) - set(gold))
    if missing or extra:
        raise DataError(
            f"prediction/gold id mismatch: missing={missing[:5]} extra={extra[:5]}"
        )

    classes = sorted(set(gold.values()) | set(predictions.values()))
    per_class: dict[str, ClassMetrics] = {}
    for cls in classes:
        tp = sum(1 for k in gold if predictions[k] == cls and gold[k] == cls)
        fp = sum(1 for k in gold if predictions[k] == cls and gold[k] != cls)
        fn = sum(1 for k in gold if predictions[k] != cls and gold[k] == cls)
        flags: set[str] = set()
        if tp + fp == 0:
            precision = 0.0
            flags.add("no-positive-predictions")
        else:
            precision = tp / (tp + fp)
        if tp + fn == 0:
            recall = 0.0
            flags.add("no-positive-golds")
        else:
            recall = tp / (tp + fn)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[cls] = ClassMetrics(tp=tp, fp=fp, fn=fn, precision=precision,
                                      recall=recall, f1=f1, degenerate_flags=flags)
    return Metrics(per_class=per_class)


def metrics_to_dict(metrics: Metrics) -> dict:
    return {
        cls: {
            "tp": m.tp, "fp": m.fp, "fn": m.fn,
            "precision": m.precision, "recall": m.recall, "f1": m.f1,
            "degenerate_flags": sorted(m.degenerate_flags),
        }
        for cls, m in metrics.per_class.items()
    }


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------

@dataclass
class FilterResult:
    kept: ReviewSet
    audit: list[tuple[str, float, bool]]  # (review_id, score, kept?)


def filter_reviews(
    scorer: Callable[[Review], float] | Mapping[str, float],
    reviews: ReviewSet,
    threshold: float = 0.5,
) -> FilterResult:
    """Keep reviews whose relevance probability is >= threshold.

    ``scorer`` is either a callable Review -> probability or an imported
    id -> probability mapping; a mapping missing any review id is an error
    listing the gaps.
    """
    if not 0.0 <= threshold <= 1.0:
        raise UsageError(f"threshold must be in [0,1], got {threshold}")
    if isinstance(scorer, Mapping):
        missing = [r.review_id for r in reviews.reviews if r.review_id not in scorer]
        if missing:
            raise DataError(f"imported scores missing for review ids: {missing}")
        get_score = lambda r: scorer[r.review_id]
    else:
        get_score = scorer

    kept: list[Review] = []
    audit: list[tuple[str, float, bool]] = []
    for r in reviews.reviews:
        p = get_score(r)
        keep = p >= threshold
        audit.append((r.review_id, p, keep))
        if keep:
            kept.append(r)
    return FilterResult(
        kept=ReviewSet(app_id=reviews.app_id, reviews=kept, cutoff=reviews.cutoff),
        audit=audit,
    )


def load_review_scores(path: str, review_ids: Iterable[str] | None = None) -> dict[str, float]:
    """Read a relevance score JSONL ({review_id, p}) with validation."""
    known = set(review_ids) if review_ids is not None else None
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg}", source=path, line=lineno) from None
            if "review_id" not in rec or "p" not in rec:
                raise DataError("row must have review_id and p", source=path, line=lineno)
            rid, p = str(rec["review_id"]), rec["p"]
            if not isinstance(p, (int, float)) or not 0.0 <= float(p) <= 1.0:
                raise DataError(f"p={p!r} outside [0,1]", source=path, line=lineno)
            if rid in scores:
                raise DataError(f"duplicate score row for review {rid!r}", source=path, line=lineno)
            if known is not None and rid not in known:
                raise DataError(f"score references unknown review {rid!r}", source=path, line=lineno)
            scores[rid] = float(p)
    return scores


# ---------------------------------------------------------------------------
# Model persistence
# ---------------------------------------------------------------------------

_MODEL_FORMAT = "evolog-nb-model"
_MODEL_VERSION = 1


def model_to_json(model: NBModel) -> str:
    doc = {
        "format": _MODEL_FORMAT,
        "format_version": _MODEL_VERSION,
        "alpha": model.alpha,
        "tokenizer_mode": model.tokenizer_mode,
        "class_log_priors": model.class_log_priors,
        "class_token_totals": model.class_token_totals,
        "token_log_likelihoods": model.token_log_likelihoods,
        "vocabulary": sorted(model.vocabulary),
    }
    return json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=1)


def model_from_json(text: str, *, source: str = "<model>") -> NBModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid model JSON: {exc.msg}", source=source) from None
    if doc.get("format") != _MODEL_FORMAT:
        raise DataError(f"not an NB model file (format={doc.get('format')!r})", source=source)
    return NBModel(
        class_log_priors=doc["class_log_priors"],
        token_log_likelihoods=doc["token_log_likelihoods"],
        vocabulary=set(doc["vocabulary"]),
        alpha=doc["alpha"],
        class_token_totals=doc["class_token_totals"],
        tokenizer_mode=doc.get("tokenizer_mode", "auto"),
    )
