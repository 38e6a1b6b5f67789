"""Domain types, the offset-preserving tokenizer, and BIO<->span conversion.

Character offsets (0-based, end-exclusive) are the persistent span
representation; token indices are always derived by re-tokenizing, so
every value here survives being handed between tools that tokenize
differently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import AlignmentError, MalformedBioError, SchemaError


class EntityType(enum.Enum):
    """The closed set of entity classes found in LP word problems."""

    VAR = "VAR"
    PARAM = "PARAM"
    LIMIT = "LIMIT"
    CONST_DIR = "CONST_DIR"
    OBJ_DIR = "OBJ_DIR"
    OBJ_NAME = "OBJ_NAME"

    @classmethod
    def from_string(cls, value: str) -> "EntityType":
        try:
            return _TYPE_ALIASES[value]
        except KeyError:
            raise SchemaError(f"unknown entity type {value!r}") from None


# Short aliases appear in third-party label columns; full names are canonical.
_TYPE_ALIASES = {t.value: t for t in EntityType}
_TYPE_ALIASES.update(
    {
        "V": EntityType.VAR,
        "P": EntityType.PARAM,
        "L": EntityType.LIMIT,
        "CD": EntityType.CONST_DIR,
        "OD": EntityType.OBJ_DIR,
        "ON": EntityType.OBJ_NAME,
    }
)

#: Overlap arbitration used by the prediction ensemble: numerically critical
#: classes first.
TYPE_PRIORITY = (
    EntityType.CONST_DIR,
    EntityType.LIMIT,
    EntityType.PARAM,
    EntityType.OBJ_DIR,
    EntityType.OBJ_NAME,
    EntityType.VAR,
)


@dataclass(frozen=True)
class EntitySpan:
    """A typed character span; `end` is exclusive."""

    start: int
    end: int
    etype: EntityType

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SchemaError(f"bad span offsets [{self.start}, {self.end})")

    def text(self, document_text: str) -> str:
        return document_text[self.start : self.end]


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int

    def __post_init__(self):
        if not self.text:
            raise SchemaError("empty token")
        if self.end - self.start != len(self.text):
            raise SchemaError(f"token offsets [{self.start}, {self.end}) do not cover {self.text!r}")


@dataclass(frozen=True)
class OrderMapping:
    """Variable surface form -> 0-based column index of the canonical form."""

    entries: dict[str, int]

    def __post_init__(self):
        indices = sorted(self.entries.values())
        if indices != list(range(len(self.entries))):
            raise SchemaError(f"order mapping indices {indices} are not contiguous from 0")

    def __len__(self) -> int:
        return len(self.entries)

    def index_of(self, surface: str) -> int | None:
        """Case-folded lookup; returns None when the surface is unknown."""
        hit = self.entries.get(surface)
        if hit is not None:
            return hit
        folded = surface.casefold()
        for key, idx in self.entries.items():
            if key.casefold() == folded:
                return idx
        return None

    def surfaces_by_index(self) -> list[str]:
        return [s for s, _ in sorted(self.entries.items(), key=lambda kv: kv[1])]


@dataclass(frozen=True)
class ProblemDocument:
    """One word problem: text, typed spans, variable order, optional gold IR.

    Entities are stored sorted by offset and must not overlap. Every VAR
    span's surface form must resolve in the order mapping (case-folded).
    Unknown JSONL fields ride along in `extra` and are re-emitted verbatim.
    """

    id: str
    text: str
    entities: tuple[EntitySpan, ...] = ()
    order_mapping: OrderMapping = field(default_factory=lambda: OrderMapping({}))
    gold_declarations: tuple[str, ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        spans = tuple(sorted(self.entities, key=lambda s: (s.start, s.end)))
        object.__setattr__(self, "entities", spans)
        prev_end = 0
        for span in spans:
            if span.end > len(self.text):
                raise SchemaError(f"{self.id}: span [{span.start}, {span.end}) exceeds text length {len(self.text)}")
            if span.start < prev_end:
                raise SchemaError(f"{self.id}: overlapping entity spans at offset {span.start}")
            prev_end = span.end
            if span.etype is EntityType.VAR and self.order_mapping.index_of(span.text(self.text)) is None:
                raise SchemaError(f"{self.id}: VAR surface {span.text(self.text)!r} missing from order mapping")

    def spans_of(self, etype: EntityType) -> list[EntitySpan]:
        return [s for s in self.entities if s.etype is etype]

    def replace(self, **changes) -> "ProblemDocument":
        fields = {
            "id": self.id,
            "text": self.text,
            "entities": self.entities,
            "order_mapping": self.order_mapping,
            "gold_declarations": self.gold_declarations,
            "extra": self.extra,
        }
        fields.update(changes)
        return ProblemDocument(**fields)


def check_gold_document(doc: ProblemDocument) -> None:
    """Extra validation for documents used as gold annotations.

    An annotated problem carries exactly one objective-direction span.
    """
    if doc.entities and len(doc.spans_of(EntityType.OBJ_DIR)) != 1:
        raise SchemaError(
            f"{doc.id}: gold document must have exactly one OBJ_DIR span, "
            f"found {len(doc.spans_of(EntityType.OBJ_DIR))}"
        )


@dataclass(frozen=True)
class LabeledSequence:
    """Tokens plus parallel BIO tags; the unit exchanged with NER models.

    Tags must be syntactically valid ("O", "B-<TYPE>", "I-<TYPE>").
    Sequence-level well-formedness (no dangling I-) is only enforced by
    strict decoding, because model output may be malformed while gold
    data must not be.
    """

    tokens: tuple[Token, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise SchemaError(f"{len(self.tags)} tags for {len(self.tokens)} tokens")
        canonical = tuple(_canonical_tag(t) for t in self.tags)
        object.__setattr__(self, "tags", canonical)

    def retag(self, tags: list[str] | tuple[str, ...]) -> "LabeledSequence":
        return LabeledSequence(self.tokens, tuple(tags))


def _canonical_tag(tag: str) -> str:
    if tag == "O":
        return tag
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return f"{tag[0]}-{EntityType.from_string(tag[2:]).value}"
    raise SchemaError(f"malformed tag {tag!r}")


def split_tag(tag: str) -> tuple[str, EntityType | None]:
    """Split a canonical tag into its prefix ("O", "B", "I") and type."""
    if tag == "O":
        return "O", None
    return tag[0], EntityType(tag[2:])


def tokenize(text: str) -> list[Token]:
    """Segment text into maximal alphanumeric runs and single-char symbols.

    Whitespace is skipped; every offset indexes into the original text, so
    `text[t.start:t.end] == t.text` for every token.
    """
    tokens: list[Token] = []
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
        tokens.append(Token(text[i:j], i, j))
        i = j
    return tokens


def tags_for_spans(tokens: list[Token] | tuple[Token, ...], spans, text: str = "") -> list[str]:
    """BIO-encode spans over an existing token list.

    Raises AlignmentError when a span boundary falls inside a token or
    outside the tokenized region.
    """
    tags = ["O"] * len(tokens)
    starts = {t.start: i for i, t in enumerate(tokens)}
    ends = {t.end: i for i, t in enumerate(tokens)}
    for span in spans:
        if span.start not in starts or span.end not in ends:
            shown = f" {span.text(text)!r}" if text else ""
            raise AlignmentError(
                f"span [{span.start}, {span.end}){shown} of type {span.etype.value} "
                "does not align with token boundaries"
            )
        first, last = starts[span.start], ends[span.end]
        tags[first] = f"B-{span.etype.value}"
        for k in range(first + 1, last + 1):
            tags[k] = f"I-{span.etype.value}"
    return tags


def spans_to_bio(doc: ProblemDocument) -> LabeledSequence:
    """Encode a document's entity spans as a BIO-tagged token sequence."""
    tokens = tokenize(doc.text)
    return LabeledSequence(tuple(tokens), tuple(tags_for_spans(tokens, doc.entities, doc.text)))


def bio_to_spans(seq: LabeledSequence, lenient: bool = False) -> list[EntitySpan]:
    """Decode BIO tags back to character spans, in document order.

    A dangling I- tag (no same-type B-/I- immediately before it) is an
    error in strict mode and starts a fresh span in lenient mode.
    """
    spans: list[EntitySpan] = []
    open_type: EntityType | None = None
    open_start = 0
    open_end = 0

    def close():
        nonlocal open_type
        if open_type is not None:
            spans.append(EntitySpan(open_start, open_end, open_type))
            open_type = None

    for i, (token, tag) in enumerate(zip(seq.tokens, seq.tags)):
        prefix, etype = split_tag(tag)
        if prefix == "O":
            close()
        elif prefix == "B":
            close()
            open_type, open_start, open_end = etype, token.start, token.end
        else:  # I-
            if open_type is etype:
                open_end = token.end
            elif lenient:
                close()
                open_type, open_start, open_end = etype, token.start, token.end
            else:
                raise MalformedBioError(f"dangling {tag}", token_index=i)
    close()
    return spans
