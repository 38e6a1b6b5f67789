"""The lpaf JSONL interchange surface, reimplemented from its documented contract.

The adapter talks to the core toolkit only through these files, so the
token rule (maximal alphanumeric runs, single-character symbols, original
offsets) is replicated here rather than imported.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

ENTITY_TYPES = ("VAR", "PARAM", "LIMIT", "CONST_DIR", "OBJ_DIR", "OBJ_NAME")
TYPE_ALIASES = ("V", "P", "L", "CD", "OD", "ON")

MARKER_TOKENS = ["<prompt>", "</prompt>", "<target>", "</target>"]
MARKER_TOKENS += [f"<{t}>" for t in ENTITY_TYPES] + [f"</{t}>" for t in ENTITY_TYPES]


def interchange_tokens(text: str) -> list[dict]:
    """Tokens in the predictions.jsonl shape: {"text", "start", "end"}."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
        else:
            j = i + 1
        tokens.append({"text": text[i:j], "start": i, "end": j})
        i = j
    return tokens


def valid_tag(tag: str) -> bool:
    if tag == "O":
        return True
    if len(tag) < 3 or tag[0] not in "BI" or tag[1] != "-":
        return False
    return tag[2:] in ENTITY_TYPES or tag[2:] in TYPE_ALIASES


def repair_bio(tags: list[str]) -> list[str]:
    """Lenient repair: an inside tag without a matching head becomes a head."""
    repaired = []
    previous = "O"
    for tag in tags:
        if tag.startswith("I-") and previous[2:] != tag[2:]:
            tag = "B-" + tag[2:]
        repaired.append(tag)
        previous = tag
    return repaired


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False, separators=(", ", ": ")))
            handle.write("\n")
