"""Offset-preserving text surgery for documents.

A replacement is (start, end, new_text) in original coordinates; zero-width
replacements are insertions. Replacements must not overlap each other and
must not straddle an entity-span boundary.
"""

from __future__ import annotations

from .core import EntitySpan, ProblemDocument

Replacement = tuple[int, int, str]


def shift_for_start(replacements: list[Replacement], pos: int) -> int:
    """Offset delta for a span *start* at `pos` (insertions at pos push it right)."""
    return sum(len(new) - (end - start) for start, end, new in replacements if end <= pos)


def shift_for_end(replacements: list[Replacement], pos: int) -> int:
    """Offset delta for a span *end* at `pos` (insertions at pos stay outside)."""
    return sum(
        len(new) - (end - start)
        for start, end, new in replacements
        if end < pos or (end == pos and start < end)
    )


def apply_replacements(doc: ProblemDocument, replacements: list[Replacement]) -> ProblemDocument:
    """Rewrite the document text and remap all entity spans."""
    if not replacements:
        return doc
    replacements = sorted(replacements)
    for (_, left_end, _), (right_start, _, _) in zip(replacements, replacements[1:]):
        if right_start < left_end:
            raise ValueError("overlapping replacements")

    parts = []
    cursor = 0
    for start, end, new in replacements:
        parts.append(doc.text[cursor:start])
        parts.append(new)
        cursor = end
    parts.append(doc.text[cursor:])

    spans = tuple(
        EntitySpan(
            s.start + shift_for_start(replacements, s.start),
            s.end + shift_for_end(replacements, s.end),
            s.etype,
        )
        for s in doc.entities
    )
    return doc.replace(text="".join(parts), entities=spans)
