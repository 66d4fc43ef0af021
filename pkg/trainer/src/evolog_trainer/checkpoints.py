"""Checkpoint selection and a tiny local checkpoint builder for offline use."""

from __future__ import annotations

import os
from pathlib import Path

CHINESE_CHECKPOINT = "bert-base-chinese"
DEFAULT_CHECKPOINT = "bert-base-uncased"

_SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def _cjk_share(texts) -> float:
    total = cjk = 0
    for text in texts:
        for ch in text:
            if ch.isspace():
                continue
            total += 1
            cp = ord(ch)
            if 0x3400 <= cp <= 0x9FFF or 0xF900 <= cp <= 0xFAFF or 0x20000 <= cp <= 0x2FA1F:
                cjk += 1
    return cjk / total if total else 0.0


def route_checkpoint(texts, threshold: float = 0.3) -> str:
    """Pick a locale-appropriate pretrained model for the corpus."""
    return CHINESE_CHECKPOINT if _cjk_share(texts) >= threshold else DEFAULT_CHECKPOINT


def make_tiny_checkpoint(
    out_dir: str | Path,
    words: list[str],
    seed: int = 0,
    hidden_size: int = 32,
    num_layers: int = 2,
) -> str:
    """Write a small randomly initialized BERT checkpoint covering ``words``.

    Lets the trainer run fully offline: tests and demos fine-tune from this
    instead of downloading a published checkpoint.
    """
    import torch
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizerFast

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab = _SPECIAL_TOKENS + sorted({w.lower() for w in words})
    vocab_file = out_dir / "vocab.txt"
    vocab_file.write_text("\n".join(vocab) + "\n", encoding="utf-8")

    tokenizer = BertTokenizerFast(vocab=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=2,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=128,
        num_labels=2,
    )
    torch.manual_seed(seed)
    model = BertForSequenceClassification(config)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return str(out_dir)
