"""Precision/recall/F1 with the same definitions the core pipeline uses,
so exported manifests agree with its evaluation to float precision."""

from __future__ import annotations


def evaluate(predictions: dict, gold: dict) -> dict:
    missing = sorted(set(gold) - set(predictions))
    extra = sorted(set(predictions) - set(gold))
    if missing or extra:
        raise ValueError(f"prediction/gold key mismatch: missing={missing[:5]} extra={extra[:5]}")

    classes = sorted({*gold.values(), *predictions.values()}, key=str)
    out = {}
    for cls in classes:
        tp = sum(1 for k in gold if predictions[k] == cls and gold[k] == cls)
        fp = sum(1 for k in gold if predictions[k] == cls and gold[k] != cls)
        fn = sum(1 for k in gold if predictions[k] != cls and gold[k] == cls)
        flags = []
        if tp + fp == 0:
            precision = 0.0
            flags.append("no-positive-predictions")
        else:
            precision = tp / (tp + fp)
        if tp + fn == 0:
            recall = 0.0
            flags.append("no-positive-golds")
        else:
            recall = tp / (tp + fn)
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        out[str(cls)] = {"tp": tp, "fp": fp, "fn": fn, "precision": precision,
                         "recall": recall, "f1": f1, "degenerate_flags": sorted(flags)}
    return out


def accuracy(predictions: dict, gold: dict) -> float:
    if not gold:
        return 0.0
    return sum(1 for k in gold if predictions[k] == gold[k]) / len(gold)
