"""Shared fixture builders and seeded random generators."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from lpaf.core import EntitySpan, EntityType, LabeledSequence, OrderMapping, ProblemDocument, Token
from lpaf.ir import DeclKind, IRDeclaration, Operator, Term


def span_on(text: str, needle: str, etype: EntityType, occurrence: int = 0) -> EntitySpan:
    """Span over the nth occurrence of `needle` in `text`."""
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(needle, start + 1)
    return EntitySpan(start, start + len(needle), etype)


def seq_from(pairs: list[tuple[str, str]]) -> LabeledSequence:
    """Build a space-joined token sequence with explicit tags."""
    tokens = []
    cursor = 0
    for word, _ in pairs:
        tokens.append(Token(word, cursor, cursor + len(word)))
        cursor += len(word) + 1
    return LabeledSequence(tuple(tokens), tuple(tag for _, tag in pairs))


@pytest.fixture
def hotel_doc() -> ProblemDocument:
    text = "A hotel employs cleaners and receptionists."
    return ProblemDocument(
        id="hotel",
        text=text,
        entities=(
            span_on(text, "cleaners", EntityType.VAR),
            span_on(text, "receptionists", EntityType.VAR),
        ),
        order_mapping=OrderMapping({"cleaners": 0, "receptionists": 1}),
    )


@pytest.fixture
def wage_doc() -> ProblemDocument:
    text = "Formulate an LP to minimize the wage bill."
    return ProblemDocument(
        id="wage",
        text=text,
        entities=(
            span_on(text, "minimize", EntityType.OBJ_DIR),
            span_on(text, "the wage bill", EntityType.OBJ_NAME),
        ),
        order_mapping=OrderMapping({}),
    )


@pytest.fixture
def cakes_doc() -> ProblemDocument:
    """One constraint direction governing two limits."""
    text = "The bakery can make at most 20 chocolate cakes and 30 vanilla cakes every day."
    return ProblemDocument(
        id="cakes",
        text=text,
        entities=(
            span_on(text, "at most", EntityType.CONST_DIR),
            span_on(text, "20", EntityType.LIMIT),
            span_on(text, "chocolate cakes", EntityType.VAR),
            span_on(text, "30", EntityType.LIMIT),
            span_on(text, "vanilla cakes", EntityType.VAR),
        ),
        order_mapping=OrderMapping({"chocolate cakes": 0, "vanilla cakes": 1}),
    )


# ---------------------------------------------------------------------------
# seeded random generators

FILLER_WORDS = (
    "the factory makes widgets every day and sells them for profit while keeping quality high".split()
)
TRIGGER_WORDS = ("times", "percent", "%", "total", "number", "amount", "units", "of", "must", "be", "more")


def random_bio_sequence(rng: random.Random, min_len: int = 1, max_len: int = 30) -> LabeledSequence:
    """Well-formed random BIO over a vocabulary rich in rule trigger words."""
    n = rng.randint(min_len, max_len)
    pairs = []
    open_type = None
    for _ in range(n):
        word = rng.choice(TRIGGER_WORDS) if rng.random() < 0.4 else rng.choice(FILLER_WORDS)
        roll = rng.random()
        if open_type is not None and roll < 0.35:
            pairs.append((word, f"I-{open_type.value}"))
            continue
        if roll < 0.65:
            open_type = rng.choice(list(EntityType))
            pairs.append((word, f"B-{open_type.value}"))
        else:
            open_type = None
            pairs.append((word, "O"))
    return seq_from(pairs)


def random_document(rng: random.Random, min_vars: int = 0, with_gold: bool = False) -> ProblemDocument:
    """Random aligned document exercising every entity type."""
    num_vars = rng.randint(min_vars, 4)
    surfaces = [f"item{chr(ord('a') + i)}" for i in range(num_vars)]
    mapping = OrderMapping({s: i for i, s in enumerate(surfaces)})

    units: list[tuple[str, EntityType | None]] = [("maximize" if rng.random() < 0.5 else "minimize", EntityType.OBJ_DIR)]
    units.append(("the total profit", EntityType.OBJ_NAME))
    for surface in surfaces:
        units.append((rng.choice(FILLER_WORDS), None))
        units.append((surface, EntityType.VAR))
    for _ in range(rng.randint(0, 3)):
        units.append((rng.choice(["at most", "at least", "minimum", "maximum"]), EntityType.CONST_DIR))
        units.append((str(rng.randint(1, 9999)), EntityType.LIMIT))
        if rng.random() < 0.5:
            units.append((f"{rng.randint(1, 500)} times", EntityType.PARAM))
        units.append((rng.choice(FILLER_WORDS), None))
    rng.shuffle(units)
    units.insert(0, ("problem:", None))

    parts = []
    spans = []
    cursor = 0
    for text, etype in units:
        if parts:
            cursor += 1
        if etype is not None:
            spans.append(EntitySpan(cursor, cursor + len(text), etype))
        parts.append(text)
        cursor += len(text)
    doc = ProblemDocument(
        id=f"doc{rng.randrange(10**6)}",
        text=" ".join(parts),
        entities=tuple(spans),
        order_mapping=mapping,
    )
    if with_gold:
        doc = doc.replace(gold_declarations=tuple())
    return doc


def random_term(rng: random.Random, mapping: OrderMapping, integer_only: bool = False) -> Term:
    surfaces = mapping.surfaces_by_index()
    surface = rng.choice(surfaces)
    if integer_only:
        coeff = Fraction(rng.choice([c for c in range(-10, 11) if c != 0]))
    else:
        coeff = Fraction(rng.randint(-200, 200), rng.choice([1, 1, 2, 3, 4, 5, 7, 10, 100]))
        if coeff == 0:
            coeff = Fraction(1)
    return Term(coeff, mapping.entries[surface], surface)


OBJ_DIRECTIONS = ("minimize", "maximise", "maximize", "minimise", "most profit", "least cost", "largest income")
CONST_DIRECTIONS = ("at least", "at most", "minimum", "maximum", "up to", "no less than", "requires", "exceeds limit")


def random_declaration(rng: random.Random, mapping: OrderMapping, integer_only: bool = False) -> IRDeclaration:
    if rng.random() < 0.4:
        terms = tuple(random_term(rng, mapping, integer_only) for _ in range(rng.randint(1, 4)))
        return IRDeclaration(
            kind=DeclKind.OBJECTIVE,
            direction_text=rng.choice(OBJ_DIRECTIONS),
            obj_name=" ".join(rng.sample(FILLER_WORDS, rng.randint(1, 3))),
            lhs_terms=terms,
        )
    lhs = tuple(random_term(rng, mapping, integer_only) for _ in range(rng.randint(0, 3)))
    rhs = tuple(random_term(rng, mapping, integer_only) for _ in range(rng.randint(0, 2)))
    if not lhs and not rhs:
        lhs = (random_term(rng, mapping, integer_only),)
    if integer_only:
        limit = Fraction(rng.randint(-50, 50))
    else:
        limit = Fraction(rng.randint(-10000, 10000), rng.choice([1, 1, 1, 2, 4, 5, 10]))
    return IRDeclaration(
        kind=DeclKind.CONSTRAINT,
        direction_text=rng.choice(CONST_DIRECTIONS),
        operator=rng.choice([Operator.GREATER_OR_EQUAL, Operator.LESS_OR_EQUAL]),
        lhs_terms=lhs,
        rhs_terms=rhs,
        limit=limit,
    )


def grid_mapping(num_vars: int = 4) -> OrderMapping:
    return OrderMapping({f"x{i}": i for i in range(num_vars)})


# ---------------------------------------------------------------------------
# on-disk corpus for CLI and acceptance tests

def _decl(direction, operator, terms, limit, rhs=()):
    return IRDeclaration(
        kind=DeclKind.CONSTRAINT,
        direction_text=direction,
        operator=operator,
        lhs_terms=tuple(Term(Fraction(c), i, s) for c, i, s in terms),
        rhs_terms=tuple(Term(Fraction(c), i, s) for c, i, s in rhs),
        limit=Fraction(limit),
    )


def _obj(direction, name, terms):
    return IRDeclaration(
        kind=DeclKind.OBJECTIVE,
        direction_text=direction,
        obj_name=name,
        lhs_terms=tuple(Term(Fraction(c), i, s) for c, i, s in terms),
    )


def corpus_problems() -> list[ProblemDocument]:
    from lpaf.ir import serialize_ir

    p1_text = (
        "The juice stand wants to maximize the total profit from apple juice and mango juice. "
        "Profits are 3 and 2 dollars per liter. Each liter uses 3 times the sugar. They must "
        "sell at least 100 liters and larger than 20 bottles. The budget is 65000 dollars."
    )
    p1 = ProblemDocument(
        id="p1",
        text=p1_text,
        entities=(
            span_on(p1_text, "maximize", EntityType.OBJ_DIR),
            span_on(p1_text, "the total profit", EntityType.OBJ_NAME),
            span_on(p1_text, "apple juice", EntityType.VAR),
            span_on(p1_text, "mango juice", EntityType.VAR),
            span_on(p1_text, "3 times", EntityType.PARAM),
            span_on(p1_text, "at least", EntityType.CONST_DIR),
            span_on(p1_text, "100", EntityType.LIMIT),
            span_on(p1_text, "larger than", EntityType.CONST_DIR),
            span_on(p1_text, "20", EntityType.LIMIT),
        ),
        order_mapping=OrderMapping({"apple juice": 0, "mango juice": 1}),
        gold_declarations=tuple(
            serialize_ir(d)
            for d in (
                _obj("maximize", "the total profit", [(3, 0, "apple juice"), (2, 1, "mango juice")]),
                _decl(
                    "at least",
                    Operator.GREATER_OR_EQUAL,
                    [(1, 0, "apple juice"), (1, 1, "mango juice")],
                    100,
                ),
                _decl("larger than", Operator.GREATER_OR_EQUAL, [(1, 0, "apple juice")], 20),
            )
        ),
    )

    p2_text = (
        "The bakery wants to maximize its daily profit of 5 dollars per chocolate cake and "
        "4 dollars per vanilla cake. It can make at most 20 chocolate cakes and 30 vanilla "
        "cakes every day."
    )
    p2 = ProblemDocument(
        id="p2",
        text=p2_text,
        entities=(
            span_on(p2_text, "maximize", EntityType.OBJ_DIR),
            span_on(p2_text, "its daily profit", EntityType.OBJ_NAME),
            span_on(p2_text, "at most", EntityType.CONST_DIR),
            span_on(p2_text, "20", EntityType.LIMIT),
            span_on(p2_text, "chocolate cakes", EntityType.VAR),
            span_on(p2_text, "30", EntityType.LIMIT),
            span_on(p2_text, "vanilla cakes", EntityType.VAR),
        ),
        order_mapping=OrderMapping({"chocolate cakes": 0, "vanilla cakes": 1}),
        gold_declarations=tuple(
            serialize_ir(d)
            for d in (
                _obj("maximize", "its daily profit", [(5, 0, "chocolate cakes"), (4, 1, "vanilla cakes")]),
                _decl("at most", Operator.LESS_OR_EQUAL, [(1, 0, "chocolate cakes")], 20),
                _decl("at most", Operator.LESS_OR_EQUAL, [(1, 1, "vanilla cakes")], 30),
            )
        ),
    )

    p3_text = (
        "Formulate an LP to minimize the wage bill. The hotel employs cleaners and requires "
        "a minimum of 100 workers."
    )
    p3 = ProblemDocument(
        id="p3",
        text=p3_text,
        entities=(
            span_on(p3_text, "minimize", EntityType.OBJ_DIR),
            span_on(p3_text, "the wage bill", EntityType.OBJ_NAME),
            span_on(p3_text, "cleaners", EntityType.VAR),
            span_on(p3_text, "minimum", EntityType.CONST_DIR),
            span_on(p3_text, "100", EntityType.LIMIT),
        ),
        order_mapping=OrderMapping({"cleaners": 0}),
        gold_declarations=tuple(
            serialize_ir(d)
            for d in (
                _obj("minimize", "the wage bill", [(1, 0, "cleaners")]),
                _decl("minimum", Operator.GREATER_OR_EQUAL, [(1, 0, "cleaners")], 100),
            )
        ),
    )
    return [p1, p2, p3]


def corpus_predictions(docs: list[ProblemDocument]):
    """Four specialist models per document, each reliable only for the
    entity classes routed to it by the default four-way assignment."""
    from lpaf.core import spans_to_bio, tags_for_spans
    from lpaf.jsonl import PredictionRecord

    routing = {
        "m1": {EntityType.OBJ_DIR},
        "m2": {EntityType.VAR},
        "m3": {EntityType.OBJ_NAME},
        "m4": {EntityType.CONST_DIR, EntityType.LIMIT, EntityType.PARAM},
    }
    records = []
    for doc in docs:
        base = spans_to_bio(doc)
        for model, types in routing.items():
            spans = [s for s in doc.entities if s.etype in types]
            tags = tags_for_spans(list(base.tokens), spans)
            if model == "m3":
                # simulate a model emitting dangling inside tags
                tags = [t.replace("B-OBJ_NAME", "I-OBJ_NAME") for t in tags]
            records.append(PredictionRecord(doc.id, model, LabeledSequence(base.tokens, tuple(tags))))
    return records


def corpus_declarations():
    """Predicted declarations: two repairable mistakes plus one garbage line."""
    from lpaf.ir import serialize_ir

    wrong_limit = _decl("at least", Operator.GREATER_OR_EQUAL, [(1, 0, "apple juice"), (1, 1, "mango juice")], 1000)
    wrong_operator = _decl("larger than", Operator.LESS_OR_EQUAL, [(1, 0, "apple juice")], 20)
    return [
        ("p1", 0, "objective", serialize_ir(_obj("maximize", "the total profit", [(3, 0, "apple juice"), (2, 1, "mango juice")]))),
        ("p1", 0, "constraint", serialize_ir(wrong_limit)),
        ("p1", 1, "constraint", serialize_ir(wrong_operator)),
        ("p2", 0, "objective", serialize_ir(_obj("maximize", "its daily profit", [(5, 0, "chocolate cakes"), (4, 1, "vanilla cakes")]))),
        ("p2", 0, "constraint", serialize_ir(_decl("at most", Operator.LESS_OR_EQUAL, [(1, 0, "chocolate cakes")], 20))),
        ("p2", 1, "constraint", "<DECLARATION><CONST_DIR>broken"),
        ("p3", 0, "objective", serialize_ir(_obj("minimize", "the wage bill", [(1, 0, "cleaners")]))),
        ("p3", 0, "constraint", serialize_ir(_decl("minimum", Operator.GREATER_OR_EQUAL, [(1, 0, "cleaners")], 100))),
    ]


@pytest.fixture(scope="session")
def corpus(tmp_path_factory) -> dict:
    from lpaf.jsonl import DeclarationRecord, write_declarations, write_predictions, write_problems

    root = tmp_path_factory.mktemp("corpus")
    docs = corpus_problems()
    write_problems(root / "problems.jsonl", docs)
    write_predictions(root / "predictions.jsonl", corpus_predictions(docs))
    write_declarations(
        root / "declarations.jsonl",
        [DeclarationRecord(p, s, k, t) for p, s, k, t in corpus_declarations()],
    )
    (root / "assignment.conf").write_text(
        "OBJ_DIR = m1\nVAR = m2\nOBJ_NAME = m3\nCONST_DIR = m4\nLIMIT = m4\nPARAM = m4\n",
        encoding="utf-8",
    )
    (root / "pipeline.conf").write_text(
        "problems = {0}/problems.jsonl\n"
        "predictions = {0}/predictions.jsonl\n"
        "declarations = {0}/declarations.jsonl\n"
        "ensemble_assignment = {0}/assignment.conf\n"
        "seed = 0\n".format(root),
        encoding="utf-8",
    )
    return {
        "root": root,
        "problems": str(root / "problems.jsonl"),
        "predictions": str(root / "predictions.jsonl"),
        "declarations": str(root / "declarations.jsonl"),
        "assignment": str(root / "assignment.conf"),
        "config": str(root / "pipeline.conf"),
    }
