"""Construction of per-declaration generation inputs.

Three decoration styles over the same document, plus the
direction-repetition rewrite that splits a shared constraint direction
into one input per limit. Marker strings ("<prompt>", "<target>",
"<VAR>", ...) are this artifact's concrete vocabulary and are confined
to the formatting functions below; downstream models register them as
atomic tokens.
"""

from __future__ import annotations

import enum
import re
import warnings
from dataclasses import dataclass

from .core import EntitySpan, EntityType, ProblemDocument
from .errors import PipelineWarning, SchemaError
from .textedit import apply_replacements


class PromptVariant(enum.Enum):
    PREFIX_BASELINE = "prefix_baseline"
    POSITION_AWARE = "position_aware"
    ENTITY_ENHANCED = "entity_enhanced"

    @classmethod
    def from_string(cls, value: str) -> "PromptVariant":
        aliases = {
            "prefix": cls.PREFIX_BASELINE,
            "position": cls.POSITION_AWARE,
            "entity": cls.ENTITY_ENHANCED,
        }
        for variant in cls:
            aliases[variant.value] = variant
        try:
            return aliases[value.casefold()]
        except KeyError:
            raise SchemaError(f"unknown prompt variant {value!r}") from None


OBJECTIVE = "objective"
CONSTRAINT = "constraint"


@dataclass(frozen=True)
class PromptedInput:
    """One generation request targeting a single declaration slot."""

    problem_id: str
    variant: PromptVariant
    direction_span: EntitySpan
    text: str
    target_kind: str  # OBJECTIVE | CONSTRAINT
    slot_index: int


def expand_repeated_const_dirs(doc: ProblemDocument) -> ProblemDocument:
    """Repeat a constraint direction that governs two or more limits.

    For each CONST_DIR followed by >=2 LIMIT entities before the next
    CONST_DIR (or end of text), a copy of the direction text is inserted
    immediately before the second LIMIT, with its own CONST_DIR span.
    Applied left to right until nothing changes, so a direction with k
    limits ends up copied k-1 times.
    """
    while True:
        insertion = _first_insertion(doc)
        if insertion is None:
            return doc
        position, direction_text = insertion
        doc = apply_replacements(doc, [(position, position, direction_text + " ")])
        new_span = EntitySpan(position, position + len(direction_text), EntityType.CONST_DIR)
        doc = doc.replace(entities=tuple(doc.entities) + (new_span,))


def _first_insertion(doc: ProblemDocument) -> tuple[int, str] | None:
    const_dirs = doc.spans_of(EntityType.CONST_DIR)
    limits = doc.spans_of(EntityType.LIMIT)
    for i, cd in enumerate(const_dirs):
        region_end = const_dirs[i + 1].start if i + 1 < len(const_dirs) else len(doc.text) + 1
        governed = [l for l in limits if cd.end <= l.start < region_end]
        if len(governed) >= 2:
            return governed[1].start, cd.text(doc.text)
    return None


def _wrap(text: str) -> str:
    return f"<prompt> {text} </prompt>"


def _type_open(etype: EntityType) -> str:
    return f"<{etype.value}>"


def _type_close(etype: EntityType) -> str:
    return f"</{etype.value}>"


def _decorate(doc: ProblemDocument, target: EntitySpan, variant: PromptVariant) -> str:
    direction_text = target.text(doc.text)
    if variant is PromptVariant.PREFIX_BASELINE:
        return f"{_wrap(direction_text)} {doc.text}"
    if variant is PromptVariant.POSITION_AWARE:
        return doc.text[: target.start] + _wrap(direction_text) + doc.text[target.end :]
    parts = []
    cursor = 0
    for span in doc.entities:
        parts.append(doc.text[cursor : span.start])
        marked = f"{_type_open(span.etype)} {span.text(doc.text)} {_type_close(span.etype)}"
        if span == target:
            marked = f"<target> {marked} </target>"
        parts.append(marked)
        cursor = span.end
    parts.append(doc.text[cursor:])
    return f"{_wrap(direction_text)} {''.join(parts)}"


def strip_decoration(text: str, variant: PromptVariant) -> str:
    """Invert `_decorate`: recover the (expanded) document text exactly."""
    if variant in (PromptVariant.PREFIX_BASELINE, PromptVariant.ENTITY_ENHANCED):
        text = re.sub(r"^<prompt> .*? </prompt> ", "", text, count=1)
    markers = ["<prompt>", "</prompt>", "<target>", "</target>"]
    markers += [_type_open(t) for t in EntityType] + [_type_close(t) for t in EntityType]
    for marker in markers:
        text = text.replace(marker + " ", "").replace(" " + marker, "").replace(marker, "")
    return text


def build_prompted_inputs(doc: ProblemDocument, variant: PromptVariant) -> list[PromptedInput]:
    """One decorated input per objective/constraint direction span.

    The repeated-direction expansion runs first so each constraint slot has
    its own direction span; two directions with identical surface forms
    still yield distinct POSITION_AWARE texts because the markers sit at
    different offsets.
    """
    doc = expand_repeated_const_dirs(doc)
    inputs: list[PromptedInput] = []
    slot_counts = {OBJECTIVE: 0, CONSTRAINT: 0}
    for span in doc.entities:
        if span.etype is EntityType.OBJ_DIR:
            kind = OBJECTIVE
        elif span.etype is EntityType.CONST_DIR:
            kind = CONSTRAINT
        else:
            continue
        inputs.append(
            PromptedInput(
                problem_id=doc.id,
                variant=variant,
                direction_span=span,
                text=_decorate(doc, span, variant),
                target_kind=kind,
                slot_index=slot_counts[kind],
            )
        )
        slot_counts[kind] += 1
    if not inputs:
        warnings.warn(PipelineWarning("prompts-no-directions", f"{doc.id}: no direction entities"), stacklevel=2)
    return inputs


def route_by_kind(inputs: list[PromptedInput]) -> tuple[list[PromptedInput], list[PromptedInput]]:
    """Split inputs into (objectives, constraints), preserving order."""
    objectives = [p for p in inputs if p.target_kind == OBJECTIVE]
    constraints = [p for p in inputs if p.target_kind == CONSTRAINT]
    return objectives, constraints


def prompted_input_to_obj(p: PromptedInput) -> dict:
    return {
        "problem_id": p.problem_id,
        "variant": p.variant.value,
        "slot_index": p.slot_index,
        "target_kind": p.target_kind,
        "text": p.text,
        "direction_start": p.direction_span.start,
        "direction_end": p.direction_span.end,
    }


def prompted_input_from_obj(obj: dict, lineno: int = 0, path: str = "") -> PromptedInput:
    try:
        kind = str(obj["target_kind"])
        if kind not in (OBJECTIVE, CONSTRAINT):
            raise SchemaError(f"bad target_kind {kind!r}", line=lineno, path=path)
        return PromptedInput(
            problem_id=str(obj["problem_id"]),
            variant=PromptVariant.from_string(str(obj["variant"])),
            direction_span=EntitySpan(
                int(obj["direction_start"]),
                int(obj["direction_end"]),
                EntityType.OBJ_DIR if kind == OBJECTIVE else EntityType.CONST_DIR,
            ),
            text=str(obj["text"]),
            target_kind=kind,
            slot_index=int(obj["slot_index"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad prompted input: {exc}", line=lineno, path=path) from None
