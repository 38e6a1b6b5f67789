"""Deterministic repairs of predicted BIO tags, and the per-category ensemble.

Rules never touch token texts or offsets, only tags; each rule is
idempotent and preserves BIO well-formedness. Trigger words are matched
case-insensitively.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import EntitySpan, EntityType, LabeledSequence, TYPE_PRIORITY, bio_to_spans, split_tag
from .errors import AlignmentError, ConfigError

MULTIPLIER_WORDS = ("times", "percent", "%")
TOTAL_MIDDLE_WORDS = ("number", "amount", "units")


def _is_entity_tag(tag: str, *etypes: EntityType) -> bool:
    prefix, etype = split_tag(tag)
    return prefix != "O" and etype in etypes


def rule1_multiplier_words(seq: LabeledSequence) -> LabeledSequence:
    """Pull "times"/"percent"/"%" into the preceding PARAM or LIMIT entity."""
    tags = list(seq.tags)
    for i in range(1, len(tags)):
        if (
            tags[i] == "O"
            and seq.tokens[i].text.casefold() in MULTIPLIER_WORDS
            and _is_entity_tag(tags[i - 1], EntityType.PARAM, EntityType.LIMIT)
        ):
            tags[i] = f"I-{split_tag(tags[i - 1])[1].value}"
    return seq.retag(tags)


def rule2_total_prefix(seq: LabeledSequence) -> LabeledSequence:
    """Absorb a "total number/amount/units of" window into a following objective name.

    The window's first token becomes the new entity start and everything up
    to and including the old start is inside, so the result is one
    contiguous entity.
    """
    tags = list(seq.tags)
    words = [t.text.casefold() for t in seq.tokens]
    # Right-to-left so chained windows fuse in one pass (keeps the rule idempotent).
    for i in range(len(tags) - 4, -1, -1):
        if (
            words[i] == "total"
            and words[i + 1] in TOTAL_MIDDLE_WORDS
            and words[i + 2] == "of"
            and tags[i + 3] == "B-OBJ_NAME"
        ):
            tags[i] = "B-OBJ_NAME"
            tags[i + 1] = tags[i + 2] = tags[i + 3] = "I-OBJ_NAME"
    return seq.retag(tags)


def rule3_must_prefix(seq: LabeledSequence) -> LabeledSequence:
    """Fuse "must"/"must be" with a following CONST_DIR or PARAM entity.

    The trigger tokens become the new constraint-direction start and the
    whole following entity is retagged inside it.
    """
    tags = list(seq.tags)
    words = [t.text.casefold() for t in seq.tokens]

    def absorb(trigger_start: int, entity_start: int):
        etype = split_tag(tags[entity_start])[1]
        tags[trigger_start] = "B-CONST_DIR"
        for k in range(trigger_start + 1, entity_start):
            tags[k] = "I-CONST_DIR"
        k = entity_start
        while k < len(tags) and (k == entity_start or tags[k] == f"I-{etype.value}"):
            tags[k] = "I-CONST_DIR"
            k += 1

    # Right-to-left so "must must exceed" fuses in one pass (keeps the rule idempotent).
    for i in range(len(tags) - 1, -1, -1):
        if words[i] != "must":
            continue
        if i + 2 < len(tags) and words[i + 1] == "be" and tags[i + 2] in ("B-CONST_DIR", "B-PARAM"):
            absorb(i, i + 2)
        elif i + 1 < len(tags) and tags[i + 1] in ("B-CONST_DIR", "B-PARAM"):
            absorb(i, i + 1)
    return seq.retag(tags)


def rule4_fake_more(seq: LabeledSequence, window: int = 10) -> LabeledSequence:
    """Drop a lone "more" tagged CONST_DIR right before a variable.

    Applies only when the entity is the single token "more", the next token
    starts a VAR entity, and no other CONST_DIR entity starts within
    `window` tokens on either side.
    """
    tags = list(seq.tags)
    starts = [i for i, t in enumerate(tags) if t == "B-CONST_DIR"]
    for i in starts:
        if seq.tokens[i].text.casefold() != "more":
            continue
        if i + 1 >= len(tags) or tags[i + 1] != "B-VAR":
            continue
        if any(j != i and abs(j - i) <= window for j in starts):
            continue
        tags[i] = "O"
    return seq.retag(tags)


def apply_postprocessing(
    seq: LabeledSequence,
    rules: tuple[str, ...] = ("rule1", "rule2", "rule3", "rule4"),
    window: int = 10,
) -> LabeledSequence:
    """Apply the enabled repair rules in fixed order 1 -> 2 -> 3 -> 4.

    Extension rules run before the deletion rule so nothing is removed that
    a later rule would have grown.
    """
    if "rule1" in rules:
        seq = rule1_multiplier_words(seq)
    if "rule2" in rules:
        seq = rule2_total_prefix(seq)
    if "rule3" in rules:
        seq = rule3_must_prefix(seq)
    if "rule4" in rules:
        seq = rule4_fake_more(seq, window=window)
    return seq


@dataclass(frozen=True)
class EnsembleAssignment:
    """Which model predicts each entity category. The map must be total."""

    per_type: dict[EntityType, str]

    def __post_init__(self):
        missing = [t.value for t in EntityType if t not in self.per_type]
        if missing:
            raise ConfigError(f"ensemble assignment missing entity types: {', '.join(missing)}")

    @classmethod
    def single_model(cls, model_id: str) -> "EnsembleAssignment":
        return cls({t: model_id for t in EntityType})

    @classmethod
    def four_way(cls, obj_dir: str, var: str, obj_name: str, numeric: str) -> "EnsembleAssignment":
        """Specialist models for directions, variables and names; one shared
        model for the numeric classes (CONST_DIR, LIMIT, PARAM)."""
        return cls(
            {
                EntityType.OBJ_DIR: obj_dir,
                EntityType.VAR: var,
                EntityType.OBJ_NAME: obj_name,
                EntityType.CONST_DIR: numeric,
                EntityType.LIMIT: numeric,
                EntityType.PARAM: numeric,
            }
        )


def ensemble_by_category(
    preds: dict[str, LabeledSequence], assignment: EnsembleAssignment
) -> list[EntitySpan]:
    """Merge per-model predictions by routing each entity class to its model.

    Spans of type T come from the sequence of assignment[T] (lenient
    decoding). Overlaps between classes are resolved by class priority,
    then span length, then start offset.
    """
    token_lists = {m: tuple((t.start, t.end, t.text) for t in seq.tokens) for m, seq in preds.items()}
    if len(set(token_lists.values())) > 1:
        raise AlignmentError("prediction sequences do not share one token list")
    candidates: list[EntitySpan] = []
    for etype in EntityType:
        model = assignment.per_type[etype]
        if model not in preds:
            raise ConfigError(f"no prediction from assigned model {model!r}")
        candidates.extend(s for s in bio_to_spans(preds[model], lenient=True) if s.etype is etype)

    rank = {t: i for i, t in enumerate(TYPE_PRIORITY)}
    candidates.sort(key=lambda s: (rank[s.etype], s.start - s.end, s.start))
    kept: list[EntitySpan] = []
    for span in candidates:
        if all(span.end <= other.start or span.start >= other.end for other in kept):
            kept.append(span)
    kept.sort(key=lambda s: (s.start, s.end))
    return kept
