"""Fixture problems and tiny randomly-initialized checkpoints.

The sandbox has no model-hub access, so the smoke tests build miniature
real-architecture checkpoints (proper tokenizer, config, label map) and
load them through the same cache-directory resolution a public checkpoint
id would use. Quality is irrelevant: the contracts under test are schema
validity, alignment, and determinism.
"""

import json
import os

os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

import pytest
import torch

from lpaf_adapter.interchange import ENTITY_TYPES, MARKER_TOKENS

LABELS = ["O"] + [f"{prefix}-{etype}" for etype in ENTITY_TYPES for prefix in ("B", "I")]


def _span(text, needle, etype, occurrence=0):
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(needle, start + 1)
    return {"start": start, "end": start + len(needle), "type": etype}


def _objective(direction, name, terms):
    parts = [f"<DECLARATION><OBJ_DIR>{direction}</OBJ_DIR><OBJ_NAME>{name}</OBJ_NAME>"]
    parts += [f"<TERM><PARAM>{c}</PARAM><VAR>{v}</VAR></TERM>" for c, v in terms]
    return "".join(parts) + "</DECLARATION>"


def _constraint(direction, operator, terms, limit):
    parts = [f"<DECLARATION><CONST_DIR>{direction}</CONST_DIR><OPERATOR>{operator}</OPERATOR>"]
    parts += [f"<TERM><PARAM>{c}</PARAM><VAR>{v}</VAR></TERM>" for c, v in terms]
    return "".join(parts) + f"<LIMIT>{limit}</LIMIT></DECLARATION>"


def fixture_problems() -> list[dict]:
    problems = []

    text = (
        "The juice stand wants to maximize the total profit from apple juice and mango juice. "
        "Profits are 3 and 2 dollars per liter. They must sell at least 100 liters."
    )
    problems.append(
        {
            "id": "juice",
            "text": text,
            "entities": [
                _span(text, "maximize", "OBJ_DIR"),
                _span(text, "the total profit", "OBJ_NAME"),
                _span(text, "apple juice", "VAR"),
                _span(text, "mango juice", "VAR"),
                _span(text, "at least", "CONST_DIR"),
                _span(text, "100", "LIMIT"),
            ],
            "order_mapping": {"apple juice": 0, "mango juice": 1},
            "gold_declarations": [
                _objective("maximize", "the total profit", [(3, "apple juice"), (2, "mango juice")]),
                _constraint(
                    "at least", "GREATER_OR_EQUAL", [(1, "apple juice"), (1, "mango juice")], 100
                ),
            ],
        }
    )

    text = (
        "A bakery maximizes its daily revenue of 5 dollars per chocolate cake and 4 dollars per "
        "vanilla cake. It can bake at most 20 chocolate cakes and 30 vanilla cakes."
    )
    problems.append(
        {
            "id": "cakes",
            "text": text,
            "entities": [
                _span(text, "maximizes", "OBJ_DIR"),
                _span(text, "its daily revenue", "OBJ_NAME"),
                _span(text, "at most", "CONST_DIR"),
                _span(text, "20", "LIMIT"),
                _span(text, "chocolate cakes", "VAR"),
                _span(text, "30", "LIMIT"),
                _span(text, "vanilla cakes", "VAR"),
            ],
            "order_mapping": {"chocolate cakes": 0, "vanilla cakes": 1},
            "gold_declarations": [
                _objective(
                    "maximizes", "its daily revenue", [(5, "chocolate cakes"), (4, "vanilla cakes")]
                ),
                _constraint("at most", "LESS_OR_EQUAL", [(1, "chocolate cakes")], 20),
                _constraint("at most", "LESS_OR_EQUAL", [(1, "vanilla cakes")], 30),
            ],
        }
    )

    text = (
        "Formulate an LP to minimize the wage bill. The hotel employs cleaners and requires a "
        "minimum of 100 workers at 350 dollars each."
    )
    problems.append(
        {
            "id": "hotel",
            "text": text,
            "entities": [
                _span(text, "minimize", "OBJ_DIR"),
                _span(text, "the wage bill", "OBJ_NAME"),
                _span(text, "cleaners", "VAR"),
                _span(text, "minimum", "CONST_DIR"),
                _span(text, "100", "LIMIT"),
                _span(text, "350", "PARAM"),
            ],
            "order_mapping": {"cleaners": 0},
            "gold_declarations": [
                _objective("minimize", "the wage bill", [(350, "cleaners")]),
                _constraint("minimum", "GREATER_OR_EQUAL", [(1, "cleaners")], 100),
            ],
        }
    )

    text = (
        "A farm plants corn and wheat to maximize the harvest value of 7 per corn acre and 6 per "
        "wheat acre, with no more than 40 acres of corn."
    )
    problems.append(
        {
            "id": "farm",
            "text": text,
            "entities": [
                _span(text, "maximize", "OBJ_DIR"),
                _span(text, "the harvest value", "OBJ_NAME"),
                _span(text, "corn", "VAR"),
                _span(text, "wheat", "VAR"),
                _span(text, "no more than", "CONST_DIR"),
                _span(text, "40", "LIMIT"),
            ],
            "order_mapping": {"corn": 0, "wheat": 1},
            "gold_declarations": [
                _objective("maximize", "the harvest value", [(7, "corn"), (6, "wheat")]),
                _constraint("no more than", "LESS_OR_EQUAL", [(1, "corn")], 40),
            ],
        }
    )

    text = (
        "The gym buys treadmills and bikes and wants to minimize the equipment cost of 900 per "
        "treadmill and 400 per bike, needing at least 15 machines."
    )
    problems.append(
        {
            "id": "gym",
            "text": text,
            "entities": [
                _span(text, "minimize", "OBJ_DIR"),
                _span(text, "the equipment cost", "OBJ_NAME"),
                _span(text, "treadmills", "VAR"),
                _span(text, "bikes", "VAR"),
                _span(text, "at least", "CONST_DIR"),
                _span(text, "15", "LIMIT"),
            ],
            "order_mapping": {"treadmills": 0, "bikes": 1},
            "gold_declarations": [
                _objective("minimize", "the equipment cost", [(900, "treadmills"), (400, "bikes")]),
                _constraint("at least", "GREATER_OR_EQUAL", [(1, "treadmills"), (1, "bikes")], 15),
            ],
        }
    )
    return problems


def _build_fast_tokenizer(texts):
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import Whitespace
    from transformers import PreTrainedTokenizerFast

    pre = Whitespace()
    vocab = {"<pad>": 0, "<unk>": 1, "<s>": 2, "</s>": 3}
    for text in texts:
        for word, _ in pre.pre_tokenize_str(text):
            if word not in vocab:
                vocab[word] = len(vocab)
    backend = Tokenizer(WordLevel(vocab, unk_token="<unk>"))
    backend.pre_tokenizer = Whitespace()
    return PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="<unk>",
        pad_token="<pad>",
        bos_token="<s>",
        eos_token="</s>",
    )


def _training_texts():
    texts = [p["text"] for p in fixture_problems()]
    texts += [" ".join(MARKER_TOKENS)]
    texts += ["<DECLARATION> <OBJ_DIR> <OBJ_NAME> <CONST_DIR> <OPERATOR> <TERM> <PARAM> <VAR> <RHS> <LIMIT>"]
    texts += ["GREATER_OR_EQUAL LESS_OR_EQUAL maximize minimize 1 2 3 100"]
    return texts


def build_tagger_checkpoint(directory):
    from transformers import RobertaConfig, RobertaForTokenClassification

    tokenizer = _build_fast_tokenizer(_training_texts())
    torch.manual_seed(7)
    config = RobertaConfig(
        vocab_size=len(tokenizer),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=514,
        type_vocab_size=1,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
        num_labels=len(LABELS),
        id2label=dict(enumerate(LABELS)),
        label2id={label: i for i, label in enumerate(LABELS)},
    )
    model = RobertaForTokenClassification(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)


def build_generator_checkpoint(directory):
    from transformers import BartConfig, BartForConditionalGeneration

    tokenizer = _build_fast_tokenizer(_training_texts())
    torch.manual_seed(11)
    config = BartConfig(
        vocab_size=len(tokenizer),
        d_model=32,
        encoder_layers=1,
        decoder_layers=1,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=64,
        decoder_ffn_dim=64,
        max_position_embeddings=512,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.eos_token_id,
        decoder_start_token_id=tokenizer.bos_token_id,
    )
    model = BartForConditionalGeneration(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)


@pytest.fixture(scope="session")
def checkpoint_cache(tmp_path_factory) -> str:
    """Local cache directory holding both tiny checkpoints by id."""
    cache = tmp_path_factory.mktemp("checkpoints")
    build_tagger_checkpoint(cache / "tiny-tagger")
    build_generator_checkpoint(cache / "tiny-generator")
    return str(cache)


@pytest.fixture(scope="session")
def problems_file(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("data") / "problems.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for problem in fixture_problems():
            handle.write(json.dumps(problem, ensure_ascii=False) + "\n")
    return str(path)
