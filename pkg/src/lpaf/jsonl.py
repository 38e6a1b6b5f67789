"""JSONL ingestion and emission for every interchange file.

One object per line, UTF-8. Unknown fields are preserved on read and
re-emitted verbatim after the known ones. All writers are atomic
(temp file in the target directory, then rename) and byte-deterministic.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .core import EntitySpan, EntityType, LabeledSequence, OrderMapping, ProblemDocument, Token
from .errors import SchemaError

PROBLEM_FIELDS = ("id", "text", "entities", "order_mapping", "gold_declarations")
PREDICTION_FIELDS = ("id", "model", "tokens", "tags")
PROMPT_FIELDS = ("problem_id", "variant", "slot_index", "target_kind", "text", "direction_start", "direction_end")
DECLARATION_FIELDS = ("problem_id", "slot_index", "target_kind", "ir_text")


@dataclass(frozen=True)
class PredictionRecord:
    """One model's BIO tagging of one problem."""

    id: str
    model: str
    sequence: LabeledSequence
    extra: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class DeclarationRecord:
    """One generated IR declaration, addressed by problem and slot."""

    problem_id: str
    slot_index: int
    target_kind: str  # "objective" | "constraint"
    ir_text: str
    extra: dict = field(default_factory=dict, compare=False)


def read_lines(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, parsed_object) for every non-blank line."""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno, path=str(path)) from None
            if not isinstance(obj, dict):
                raise SchemaError("expected a JSON object", line=lineno, path=str(path))
            yield lineno, obj


def write_atomic(path: str | Path, lines: Iterable[str]) -> None:
    """Write text lines to `path` via a temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            for line in lines:
                handle.write(line)
                handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def _require(obj: dict, key: str, lineno: int, path: str):
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", line=lineno, path=path)
    return obj[key]


def _extras(obj: dict, known: tuple[str, ...]) -> dict:
    return {k: v for k, v in obj.items() if k not in known}


def problem_from_obj(obj: dict, lineno: int = 0, path: str = "") -> ProblemDocument:
    try:
        spans = tuple(
            EntitySpan(int(e["start"]), int(e["end"]), EntityType.from_string(str(e["type"])))
            for e in _require(obj, "entities", lineno, path)
        )
        mapping = OrderMapping({str(k): int(v) for k, v in _require(obj, "order_mapping", lineno, path).items()})
        gold = obj.get("gold_declarations")
        return ProblemDocument(
            id=str(_require(obj, "id", lineno, path)),
            text=str(_require(obj, "text", lineno, path)),
            entities=spans,
            order_mapping=mapping,
            gold_declarations=None if gold is None else tuple(str(g) for g in gold),
            extra=_extras(obj, PROBLEM_FIELDS),
        )
    except SchemaError as exc:
        if exc.line is None and lineno:
            raise SchemaError(str(exc), line=lineno, path=path) from None
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad problem record: {exc}", line=lineno, path=path) from None


def problem_to_obj(doc: ProblemDocument) -> dict:
    obj: dict[str, Any] = {
        "id": doc.id,
        "text": doc.text,
        "entities": [{"start": s.start, "end": s.end, "type": s.etype.value} for s in doc.entities],
        "order_mapping": dict(doc.order_mapping.entries),
    }
    if doc.gold_declarations is not None:
        obj["gold_declarations"] = list(doc.gold_declarations)
    obj.update(doc.extra)
    return obj


def prediction_from_obj(obj: dict, lineno: int = 0, path: str = "") -> PredictionRecord:
    try:
        tokens = tuple(
            Token(str(t["text"]), int(t["start"]), int(t["end"])) for t in _require(obj, "tokens", lineno, path)
        )
        seq = LabeledSequence(tokens, tuple(str(t) for t in _require(obj, "tags", lineno, path)))
        return PredictionRecord(
            id=str(_require(obj, "id", lineno, path)),
            model=str(_require(obj, "model", lineno, path)),
            sequence=seq,
            extra=_extras(obj, PREDICTION_FIELDS),
        )
    except SchemaError as exc:
        if exc.line is None and lineno:
            raise SchemaError(str(exc), line=lineno, path=path) from None
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad prediction record: {exc}", line=lineno, path=path) from None


def prediction_to_obj(rec: PredictionRecord) -> dict:
    obj: dict[str, Any] = {
        "id": rec.id,
        "model": rec.model,
        "tokens": [{"text": t.text, "start": t.start, "end": t.end} for t in rec.sequence.tokens],
        "tags": list(rec.sequence.tags),
    }
    obj.update(rec.extra)
    return obj


def declaration_from_obj(obj: dict, lineno: int = 0, path: str = "") -> DeclarationRecord:
    try:
        kind = str(_require(obj, "target_kind", lineno, path))
        if kind not in ("objective", "constraint"):
            raise SchemaError(f"bad target_kind {kind!r}", line=lineno, path=path)
        return DeclarationRecord(
            problem_id=str(_require(obj, "problem_id", lineno, path)),
            slot_index=int(_require(obj, "slot_index", lineno, path)),
            target_kind=kind,
            ir_text=str(_require(obj, "ir_text", lineno, path)),
            extra=_extras(obj, DECLARATION_FIELDS),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad declaration record: {exc}", line=lineno, path=path) from None


def declaration_to_obj(rec: DeclarationRecord) -> dict:
    obj: dict[str, Any] = {
        "problem_id": rec.problem_id,
        "slot_index": rec.slot_index,
        "target_kind": rec.target_kind,
        "ir_text": rec.ir_text,
    }
    obj.update(rec.extra)
    return obj


def read_problems(path: str | Path) -> Iterator[ProblemDocument]:
    for lineno, obj in read_lines(path):
        yield problem_from_obj(obj, lineno, str(path))


def write_problems(path: str | Path, docs: Iterable[ProblemDocument]) -> None:
    write_atomic(path, (dumps(problem_to_obj(d)) for d in docs))


def read_predictions(path: str | Path) -> Iterator[PredictionRecord]:
    for lineno, obj in read_lines(path):
        yield prediction_from_obj(obj, lineno, str(path))


def write_predictions(path: str | Path, recs: Iterable[PredictionRecord]) -> None:
    write_atomic(path, (dumps(prediction_to_obj(r)) for r in recs))


def read_declarations(path: str | Path) -> Iterator[DeclarationRecord]:
    for lineno, obj in read_lines(path):
        yield declaration_from_obj(obj, lineno, str(path))


def write_declarations(path: str | Path, recs: Iterable[DeclarationRecord]) -> None:
    write_atomic(path, (dumps(declaration_to_obj(r)) for r in recs))
