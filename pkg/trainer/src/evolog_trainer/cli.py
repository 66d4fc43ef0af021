"""Command line for the fine-tuning component.

`train` fits a checkpoint on one of the two downstream tasks and exports
scores; `predict` reuses a saved artifact on new prediction files. All
inputs and outputs are the core pipeline's file formats.
"""

from __future__ import annotations

import argparse
import sys

from .checkpoints import DEFAULT_CHECKPOINT
from .formats import FormatError
from .jobs import TASKS, Hyperparameters, TrainJob


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reviews", required=True, help="review JSONL (texts)")
    p.add_argument("--logs", help="log JSONL (pair task)")
    p.add_argument("--predict", help="reviews JSONL / pairs TSV to export scores for")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--max-length", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evolog-trainer",
        description="Fine-tune transformer classifiers for the review pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune and export scores")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT,
                   help="local path or published model identifier")
    p.add_argument("--train", required=True, dest="train_file")
    p.add_argument("--val", required=True, dest="val_file")
    p.add_argument("--test", required=True, dest="test_file")
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--epochs", type=int, default=3)
    _add_common(p)

    p = sub.add_parser("predict", help="score ids with a trained artifact")
    p.add_argument("--model", required=True, help="model directory from train")
    _add_common(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    from . import training  # import deferred: torch startup is slow

    try:
        if args.command == "train":
            hp = Hyperparameters(learning_rate=args.learning_rate, epochs=args.epochs,
                                 batch_size=args.batch_size, max_length=args.max_length,
                                 seed=args.seed)
            job = TrainJob(task=args.task, checkpoint=args.checkpoint,
                           reviews=args.reviews, logs=args.logs,
                           train=args.train_file, validation=args.val_file,
                           test=args.test_file, predict=args.predict,
                           hyperparameters=hp)
            result = training.train(job, args.out)
        else:
            hp = Hyperparameters(batch_size=args.batch_size, max_length=args.max_length,
                                 seed=args.seed)
            job = TrainJob(task=TASKS[0], checkpoint="", reviews=args.reviews,
                           logs=args.logs, train="", validation="", test="",
                           predict=args.predict, hyperparameters=hp)
            result = training.predict(args.model, job, args.out)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {result.manifest['exported_rows']} score rows to {result.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
