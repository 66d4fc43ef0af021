"""Training job definition and pre-flight validation.

All schema problems (bad files, unknown ids, overlapping splits) surface
here, before any model is touched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import formats

TASK_REVIEW = "review-classify"
TASK_PAIR = "pair-match"
TASKS = (TASK_REVIEW, TASK_PAIR)


@dataclass
class Hyperparameters:
    learning_rate: float = 2e-5
    epochs: int = 3
    batch_size: int = 16
    max_length: int = 128
    seed: int = 0

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "epochs": self.epochs,
                "batch_size": self.batch_size, "max_length": self.max_length,
                "seed": self.seed}


@dataclass
class Example:
    key: str | tuple[str, str]
    text_a: str
    text_b: str | None
    label: int | None


@dataclass
class TrainJob:
    task: str
    checkpoint: str            # local path or upstream model identifier
    reviews: str               # review JSONL (texts for both tasks)
    train: str                 # label TSV or gold pair TSV
    validation: str
    test: str
    predict: str | None = None  # reviews JSONL / pairs TSV to export scores for
    logs: str | None = None     # log JSONL (pair task only)
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)

    def validate(self, require_splits: bool = True) -> "LoadedJob":
        if self.task not in TASKS:
            raise formats.FormatError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.hyperparameters.epochs <= 0 or self.hyperparameters.batch_size <= 0:
            raise formats.FormatError("epochs and batch_size must be positive")
        if self.task == TASK_PAIR and not self.logs:
            raise formats.FormatError("pair-match jobs need a logs file")
        reviews = formats.read_reviews(self.reviews)
        logs = formats.read_logs(self.logs) if self.logs else {}

        def load(path: str, labeled: bool) -> list[Example]:
            if self.task == TASK_REVIEW:
                return self._review_examples(path, reviews, labeled=labeled)
            return self._pair_examples(path, reviews, logs, labeled=labeled)

        splits: dict[str, list[Example]] = {}
        if require_splits:
            for name, path in (("train", self.train), ("validation", self.validation),
                               ("test", self.test)):
                if not path:
                    raise formats.FormatError(f"job is missing the {name} file")
                splits[name] = load(path, labeled=True)
            _check_disjoint(splits)
        predict = load(self.predict, labeled=False) if self.predict else []
        return LoadedJob(job=self, splits=splits, predict=predict)

    def _review_examples(self, path, reviews, labeled=True) -> list[Example]:
        out: list[Example] = []
        if labeled:
            rows = formats.read_labels(path)
            items = [(rid, 1 if lbl == "relevant" else 0) for rid, lbl in rows.items()]
        else:
            items = [(rid, None) for rid in formats.read_reviews(path)]
        unknown = sorted(rid for rid, _ in items if rid not in reviews)
        if unknown:
            raise formats.FormatError(f"{path}: unknown review ids {unknown[:5]}")
        for rid, label in sorted(items):
            out.append(Example(key=rid, text_a=reviews[rid].body, text_b=None, label=label))
        return out

    def _pair_examples(self, path, reviews, logs, labeled=True) -> list[Example]:
        pairs = formats.read_pairs(path, labeled=labeled)
        unknown = sorted(f"{e}/{r}" for e, r in pairs
                         if e not in logs or r not in reviews)
        if unknown:
            raise formats.FormatError(f"{path}: unknown entry/review ids {unknown[:5]}")
        return [Example(key=(e, r), text_a=logs[e].text, text_b=reviews[r].body, label=lbl)
                for (e, r), lbl in sorted(pairs.items())]


@dataclass
class LoadedJob:
    job: TrainJob
    splits: dict[str, list[Example]]
    predict: list[Example]


def _check_disjoint(splits: dict[str, list[Example]]) -> None:
    names = list(splits)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            overlap = {e.key for e in splits[a]} & {e.key for e in splits[b]}
            if overlap:
                raise formats.FormatError(
                    f"splits {a} and {b} overlap on {sorted(map(str, overlap))[:5]}")
