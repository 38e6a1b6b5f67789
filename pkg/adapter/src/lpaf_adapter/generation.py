"""Sequence-to-sequence generation of declaration text from prompted inputs."""

from __future__ import annotations

from typing import Iterable

import torch
from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

from .config import AdapterConfig, resolve_checkpoint
from .interchange import MARKER_TOKENS


def load_generator(config: AdapterConfig):
    """Tokenizer and model with the prompt markers registered as atomic tokens."""
    path = resolve_checkpoint(config)
    tokenizer = AutoTokenizer.from_pretrained(path, cache_dir=config.cache_dir)
    model = AutoModelForSeq2SeqLM.from_pretrained(path, cache_dir=config.cache_dir)
    model.eval()
    added = tokenizer.add_tokens([m for m in MARKER_TOKENS if m not in tokenizer.get_vocab()])
    if added:
        model.resize_token_embeddings(len(tokenizer))
    return tokenizer, model


def generate_declarations(prompted_inputs: Iterable[dict], config: AdapterConfig) -> list[dict]:
    """One declarations.jsonl record per prompted input, in input order.

    Decoding is greedy (or fixed-width beam search when num_beams > 1);
    unparseable output is legitimate here, the scorer downstream deals
    with it.
    """
    tokenizer, model = load_generator(config)
    torch.manual_seed(config.seed)
    records = []
    with torch.no_grad():
        for request in prompted_inputs:
            encoded = tokenizer(
                request["text"],
                truncation=True,
                max_length=config.max_length,
                return_tensors="pt",
            )
            output_ids = model.generate(
                **encoded,
                num_beams=config.num_beams,
                do_sample=False,
                max_new_tokens=config.max_length,
            )
            text = tokenizer.decode(output_ids[0], skip_special_tokens=True)
            records.append(
                {
                    "problem_id": request["problem_id"],
                    "slot_index": request["slot_index"],
                    "target_kind": request["target_kind"],
                    "ir_text": text,
                }
            )
    return records
