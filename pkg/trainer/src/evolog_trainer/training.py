"""Fine-tuning and batch prediction for both downstream tasks.

One job per process; seeds and single-threaded torch make runs
reproducible. Exports are written atomically in the core's score-file
formats.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass
from pathlib import Path

os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import torch
import transformers
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from . import formats, metrics
from .jobs import TASK_PAIR, TASK_REVIEW, Example, LoadedJob, TrainJob

transformers.logging.set_verbosity_error()

JOB_FILE = "job.json"
MODEL_DIR = "model"
SCORES_FILE = "scores.jsonl"
MANIFEST_FILE = "manifest.json"


@dataclass
class TrainResult:
    out_dir: str
    manifest: dict
    scores: list  # (id, p) or (entry_id, review_id, p)


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    torch.manual_seed(seed)
    torch.set_num_threads(1)


def _encode(tokenizer, batch: list[Example], max_length: int):
    text_a = [e.text_a for e in batch]
    if batch[0].text_b is not None:
        enc = tokenizer(text_a, [e.text_b for e in batch], padding=True,
                        truncation=True, max_length=max_length, return_tensors="pt")
    else:
        enc = tokenizer(text_a, padding=True, truncation=True,
                        max_length=max_length, return_tensors="pt")
    return enc


def _count_truncated(tokenizer, examples: list[Example], max_length: int) -> int:
    count = 0
    for e in examples:
        ids = tokenizer(e.text_a, e.text_b, truncation=False)["input_ids"]
        if len(ids) > max_length:
            count += 1
    return count


def _predict_probs(model, tokenizer, examples: list[Example], hp) -> list[float]:
    """Positive-class probability per example, in input order."""
    model.eval()
    probs: list[float] = []
    with torch.no_grad():
        for start in range(0, len(examples), hp.batch_size):
            batch = examples[start:start + hp.batch_size]
            enc = _encode(tokenizer, batch, hp.max_length)
            logits = model(**enc).logits
            probs.extend(torch.softmax(logits, dim=-1)[:, 1].tolist())
    return probs


def _split_metrics(model, tokenizer, examples: list[Example], hp) -> dict:
    probs = _predict_probs(model, tokenizer, examples, hp)
    preds = {str(e.key): int(p >= 0.5) for e, p in zip(examples, probs)}
    gold = {str(e.key): e.label for e in examples}
    return {
        "per_class": metrics.evaluate(preds, gold),
        "accuracy": metrics.accuracy(preds, gold),
        "n": len(examples),
    }


def _export_rows(task: str, examples: list[Example], probs: list[float]):
    if task == TASK_REVIEW:
        return [(e.key, p) for e, p in zip(examples, probs)]
    return [(e.key[0], e.key[1], p) for e, p in zip(examples, probs)]


def _write_export(task: str, out_dir: Path, rows) -> None:
    if task == TASK_REVIEW:
        formats.write_review_scores(out_dir / SCORES_FILE, rows)
    else:
        formats.write_pair_scores(out_dir / SCORES_FILE, rows)


def train(job: TrainJob, out_dir: str | Path) -> TrainResult:
    """Fine-tune from the job's checkpoint, evaluate, and export scores.

    Writes ``model/`` (reloadable artifact), ``scores.jsonl`` for the
    prediction file, and ``manifest.json`` with config and metrics.
    """
    loaded = job.validate()  # schema errors surface before any model work
    hp = job.hyperparameters
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    _seed_everything(hp.seed)
    tokenizer = AutoTokenizer.from_pretrained(job.checkpoint)
    model = AutoModelForSequenceClassification.from_pretrained(job.checkpoint, num_labels=2)

    train_examples = loaded.splits["train"]
    truncated = _count_truncated(tokenizer, train_examples, hp.max_length)

    optimizer = torch.optim.AdamW(model.parameters(), lr=hp.learning_rate)
    order_rng = random.Random(hp.seed)
    model.train()
    for _ in range(hp.epochs):
        order = list(range(len(train_examples)))
        order_rng.shuffle(order)
        for start in range(0, len(order), hp.batch_size):
            batch = [train_examples[i] for i in order[start:start + hp.batch_size]]
            enc = _encode(tokenizer, batch, hp.max_length)
            labels = torch.tensor([e.label for e in batch])
            optimizer.zero_grad()
            out = model(**enc, labels=labels)
            out.loss.backward()
            optimizer.step()

    split_metrics = {name: _split_metrics(model, tokenizer, examples, hp)
                     for name, examples in loaded.splits.items()}

    probs = _predict_probs(model, tokenizer, loaded.predict, hp) if loaded.predict else []
    rows = _export_rows(job.task, loaded.predict, probs)
    _write_export(job.task, out_dir, rows)

    model_dir = out_dir / MODEL_DIR
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    job_doc = {
        "task": job.task, "checkpoint": job.checkpoint, "reviews": job.reviews,
        "logs": job.logs, "train": job.train, "validation": job.validation,
        "test": job.test, "hyperparameters": hp.to_dict(),
    }
    formats.write_manifest(model_dir / JOB_FILE, job_doc)

    manifest = {
        "format": "evolog-trainer-manifest",
        "task": job.task,
        "checkpoint": job.checkpoint,
        "hyperparameters": hp.to_dict(),
        "seed": hp.seed,
        "metrics": split_metrics,
        "truncated_train_examples": truncated,
        "exported_rows": len(rows),
    }
    formats.write_manifest(out_dir / MANIFEST_FILE, manifest)
    return TrainResult(out_dir=str(out_dir), manifest=manifest, scores=rows)


def predict(model_dir: str | Path, job: TrainJob, out_dir: str | Path) -> TrainResult:
    """Score a prediction file with a previously trained artifact.

    ``job`` supplies the corpus files and the prediction request; the task
    and hyperparameters are read back from the artifact's job.json.
    """
    model_dir = Path(model_dir)
    job_doc = json.loads((model_dir / JOB_FILE).read_text(encoding="utf-8"))
    job.task = job_doc["task"]
    job.hyperparameters.max_length = job_doc["hyperparameters"]["max_length"]
    job.hyperparameters.batch_size = job_doc["hyperparameters"]["batch_size"]
    loaded = job.validate(require_splits=False)

    _seed_everything(job.hyperparameters.seed)
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = AutoModelForSequenceClassification.from_pretrained(model_dir)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    probs = _predict_probs(model, tokenizer, loaded.predict, job.hyperparameters) \
        if loaded.predict else []
    rows = _export_rows(job.task, loaded.predict, probs)
    _write_export(job.task, out_dir, rows)
    manifest = {
        "format": "evolog-trainer-manifest",
        "task": job.task,
        "checkpoint": str(model_dir),
        "hyperparameters": job.hyperparameters.to_dict(),
        "seed": job.hyperparameters.seed,
        "metrics": {},
        "exported_rows": len(rows),
    }
    formats.write_manifest(out_dir / MANIFEST_FILE, manifest)
    return TrainResult(out_dir=str(out_dir), manifest=manifest, scores=rows)
