"""Training-set expansion and label standardization.

All operations are pure: the input document is never mutated, the RNG is
seeded from (seed, document id), and re-running with the same seed gives
byte-identical results.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field

from .core import EntitySpan, EntityType, ProblemDocument, tokenize
from .errors import ConfigError, PipelineWarning
from .textedit import apply_replacements


@dataclass(frozen=True)
class AugmentationConfig:
    seed: int = 0
    synonym_map: dict[str, list[str]] = field(default_factory=dict)
    digit_policy: bool = True

    def __post_init__(self):
        for token, choices in self.synonym_map.items():
            if not choices:
                raise ConfigError(f"empty synonym list for {token!r}")


def _rng_for(seed: int, doc_id: str) -> random.Random:
    return random.Random(f"{seed}:{doc_id}")


def augment_swap_variables(doc: ProblemDocument, seed: int = 0) -> ProblemDocument:
    """Exchange two seeded-randomly chosen variables at every VAR occurrence.

    Only spans whose text equals a mapping surface form exactly are
    rewritten, which makes a second swap of the same pair restore the
    original document byte for byte. The order mapping is unchanged: each
    surface form keeps its column index.
    """
    surfaces = sorted(doc.order_mapping.entries)
    if len(surfaces) < 2:
        warnings.warn(PipelineWarning("swap-too-few-variables", f"{doc.id}: needs >=2 variables"), stacklevel=2)
        return doc
    first, second = _rng_for(seed, doc.id).sample(surfaces, 2)
    swapped = {first: second, second: first}
    replacements = []
    for span in doc.spans_of(EntityType.VAR):
        target = swapped.get(span.text(doc.text))
        if target is not None:
            replacements.append((span.start, span.end, target))
    return apply_replacements(doc, replacements)


def augment_objname_synonyms(doc: ProblemDocument, config: AugmentationConfig) -> ProblemDocument:
    """Replace objective-name tokens with seeded-random synonyms.

    Every token inside an OBJ_NAME span with an entry in the synonym map is
    replaced independently; text outside objective names is untouched.
    """
    folded_map = {k.casefold(): v for k, v in config.synonym_map.items()}
    rng = _rng_for(config.seed, doc.id)
    replacements = []
    tokens = tokenize(doc.text)
    for span in doc.spans_of(EntityType.OBJ_NAME):
        for token in tokens:
            if token.start >= span.start and token.end <= span.end:
                choices = folded_map.get(token.text.casefold())
                if choices:
                    replacements.append((token.start, token.end, rng.choice(choices)))
    if not replacements:
        warnings.warn(PipelineWarning("synonyms-no-coverage", f"{doc.id}: no objective-name token covered"), stacklevel=2)
        return doc
    return apply_replacements(doc, replacements)


def augment_digits(doc: ProblemDocument, seed: int = 0) -> ProblemDocument:
    """Replace every digit inside PARAM/LIMIT spans with a seeded-random digit.

    Substitution is one-for-one so offsets never move; the leading digit of
    a multi-digit number is drawn from 1-9 to avoid creating leading zeros.
    """
    rng = _rng_for(seed, doc.id)
    chars = list(doc.text)
    covered = set()
    for span in doc.entities:
        if span.etype in (EntityType.PARAM, EntityType.LIMIT):
            covered.update(range(span.start, span.end))
    for i in sorted(covered):
        if not chars[i].isdigit():
            continue
        prev_is_digit = i > 0 and doc.text[i - 1].isdigit()
        next_is_digit = i + 1 < len(doc.text) and doc.text[i + 1].isdigit()
        if not prev_is_digit and next_is_digit:
            chars[i] = rng.choice("123456789")
        else:
            chars[i] = rng.choice("0123456789")
    return doc.replace(text="".join(chars))


def standardize_times(doc: ProblemDocument) -> ProblemDocument:
    """Shrink PARAM/LIMIT spans that end in the word "times" after a number.

    The text is unchanged; only the span end moves, so the span can never
    grow. Spans not matching the number-then-"times" shape are untouched.
    """
    tokens = tokenize(doc.text)
    new_spans = []
    for span in doc.entities:
        new_spans.append(span)
        if span.etype not in (EntityType.PARAM, EntityType.LIMIT):
            continue
        inside = [t for t in tokens if t.start >= span.start and t.end <= span.end]
        if len(inside) < 2:
            continue
        if inside[-1].text.casefold() == "times" and inside[-1].end == span.end and inside[-2].text.isdigit():
            new_spans[-1] = EntitySpan(span.start, inside[-2].end, span.etype)
    return doc.replace(entities=tuple(new_spans))


def expand(doc: ProblemDocument, config: AugmentationConfig) -> list[ProblemDocument]:
    """Emit the original document followed by its augmented copies.

    Copies get id suffixes ".aug1", ".aug2", ... in emission order; copies
    whose operation degraded to a no-op are dropped.
    """
    out = [doc]
    candidates = [augment_swap_variables(doc, config.seed)]
    if config.synonym_map:
        candidates.append(augment_objname_synonyms(doc, config))
    if config.digit_policy:
        candidates.append(augment_digits(doc, config.seed))
    n = 0
    for cand in candidates:
        if cand == doc:
            continue
        n += 1
        out.append(cand.replace(id=f"{doc.id}.aug{n}"))
    return out
