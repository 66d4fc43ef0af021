import json
import re
from pathlib import Path

import pytest

from evolog_trainer.checkpoints import make_tiny_checkpoint
from evolog_trainer.jobs import Hyperparameters, TrainJob

DATA = Path(__file__).parent / "data"

# toy-scale settings: a 2-layer random-init model needs a larger step than
# the full-size defaults to memorize 10 examples in 20 epochs
TOY_HP = dict(learning_rate=2e-3, epochs=20, batch_size=16, max_length=32)


def corpus_words() -> list[str]:
    words = set()
    for name in ("reviews.jsonl", "pair_reviews.jsonl", "logs.jsonl"):
        for line in (DATA / name).read_text().splitlines():
            rec = json.loads(line)
            text = rec.get("body") or rec.get("text")
            words.update(re.findall(r"[a-z]+", text.lower()))
    return sorted(words)


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    out = tmp_path_factory.mktemp("ckpt")
    return make_tiny_checkpoint(out, corpus_words(), seed=0)


def review_job(checkpoint: str, seed: int = 0, **hp_overrides) -> TrainJob:
    hp = Hyperparameters(**{**TOY_HP, **hp_overrides, "seed": seed})
    return TrainJob(
        task="review-classify",
        checkpoint=checkpoint,
        reviews=str(DATA / "reviews.jsonl"),
        train=str(DATA / "labels_train.tsv"),
        validation=str(DATA / "labels_val.tsv"),
        test=str(DATA / "labels_test.tsv"),
        predict=str(DATA / "reviews.jsonl"),
        hyperparameters=hp,
    )


def pair_job(checkpoint: str, seed: int = 0, **hp_overrides) -> TrainJob:
    hp = Hyperparameters(**{**TOY_HP, "epochs": 40, **hp_overrides, "seed": seed})
    return TrainJob(
        task="pair-match",
        checkpoint=checkpoint,
        reviews=str(DATA / "pair_reviews.jsonl"),
        logs=str(DATA / "logs.jsonl"),
        train=str(DATA / "pairs_train.tsv"),
        validation=str(DATA / "pairs_val.tsv"),
        test=str(DATA / "pairs_test.tsv"),
        predict=str(DATA / "predict_pairs.tsv"),
        hyperparameters=hp,
    )
