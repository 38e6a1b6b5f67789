"""Token-classification inference projected onto the interchange tokens."""

from __future__ import annotations

import logging
from typing import Iterable

import torch
from transformers import AutoModelForTokenClassification, AutoTokenizer

from .config import AdapterConfig, AdapterConfigError, resolve_checkpoint
from .interchange import interchange_tokens, repair_bio, valid_tag

log = logging.getLogger("lpaf_adapter")


def load_token_classifier(config: AdapterConfig):
    path = resolve_checkpoint(config)
    tokenizer = AutoTokenizer.from_pretrained(path, cache_dir=config.cache_dir)
    model = AutoModelForTokenClassification.from_pretrained(path, cache_dir=config.cache_dir)
    model.eval()
    bad = [label for label in model.config.id2label.values() if not valid_tag(label)]
    if bad:
        raise AdapterConfigError(
            f"checkpoint {config.checkpoint!r} has labels outside the BIO tag alphabet: {bad}"
        )
    return tokenizer, model


def _project_first_subword(tokens: list[dict], subwords: list[tuple[int, int, str]]) -> list[str]:
    """Label of the first subword starting inside each token; "O" if none."""
    tags = []
    for token in tokens:
        label = "O"
        for start, _, sub_label in subwords:
            if token["start"] <= start < token["end"]:
                label = sub_label
                break
        tags.append(label)
    return tags


def predict_tags(problems: Iterable[dict], config: AdapterConfig) -> list[dict]:
    """predictions.jsonl records for each problem, aligned to interchange tokens."""
    tokenizer, model = load_token_classifier(config)
    torch.manual_seed(config.seed)
    records = []
    with torch.no_grad():
        for problem in problems:
            text = problem["text"]
            tokens = interchange_tokens(text)
            encoded = tokenizer(
                text,
                return_offsets_mapping=True,
                truncation=True,
                max_length=config.max_length,
                return_tensors="pt",
            )
            offsets = encoded.pop("offset_mapping")[0].tolist()
            logits = model(**encoded).logits[0]
            label_ids = logits.argmax(-1).tolist()
            subwords = [
                (start, end, model.config.id2label[label_id])
                for (start, end), label_id in zip(offsets, label_ids)
                if end > start
            ]
            if tokens and subwords and subwords[-1][1] < tokens[-1]["end"]:
                log.warning("%s: input truncated at %d characters", problem["id"], subwords[-1][1])
            tags = repair_bio(_project_first_subword(tokens, subwords))
            records.append(
                {"id": problem["id"], "model": config.checkpoint, "tokens": tokens, "tags": tags}
            )
    return records
