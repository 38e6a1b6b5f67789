"""Parse, repair, and lower the XML-like declaration language.

All arithmetic is exact rational (`fractions.Fraction`): accuracy is
judged by exact canonical-form equality and 0.3 is not representable in
binary floating point. The grammar:

    declaration = <DECLARATION> (objective | constraint) </DECLARATION>
    objective   = OBJ_DIR OBJ_NAME term+
    constraint  = CONST_DIR OPERATOR term* [<RHS> term* </RHS>] [LIMIT]
    term        = <TERM> [PARAM] VAR </TERM>

Whitespace between tags is insignificant. PARAM defaults to 1; LIMIT
defaults to 0 (purely inter-variable constraints). A constraint means
lhs-terms OPERATOR rhs-terms + limit.
"""

from __future__ import annotations

import enum
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .core import OrderMapping
from .errors import (
    CardinalityError,
    DegenerateRowError,
    DimensionError,
    IRSyntaxError,
    NumberValueError,
    PipelineWarning,
    SchemaError,
    VariableResolutionError,
)

Rational = Fraction


class DeclKind(enum.Enum):
    OBJECTIVE = "objective"
    CONSTRAINT = "constraint"


class ObjectiveSense(enum.Enum):
    MAXIMIZE = "MAXIMIZE"
    MINIMIZE = "MINIMIZE"


class Operator(enum.Enum):
    GREATER_OR_EQUAL = "GREATER_OR_EQUAL"
    LESS_OR_EQUAL = "LESS_OR_EQUAL"


_MAX_WORDS = frozenset("maximize maximise maximum max most largest greatest highest biggest".split())
_MIN_WORDS = frozenset("minimize minimise minimum min least smallest lowest fewest cheapest".split())


def _word_forms(word: str) -> set[str]:
    """The word plus de-inflected candidates ("maximizes", "maximizing" -> "maximize")."""
    forms = {word}
    for suffix in ("s", "es", "d", "ed", "ing"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            stripped = word[: -len(suffix)]
            forms.add(stripped)
            if suffix == "ing":
                forms.add(stripped + "e")
    return forms


def sense_of_direction(direction_text: str) -> ObjectiveSense:
    """Objective sense from the direction surface form; unknown phrasing is an error."""
    words = set()
    for word in re.findall(r"[a-z]+", direction_text.casefold()):
        words |= _word_forms(word)
    is_max = bool(words & _MAX_WORDS)
    is_min = bool(words & _MIN_WORDS)
    if is_max == is_min:
        raise SchemaError(f"cannot infer objective sense from {direction_text!r}")
    return ObjectiveSense.MAXIMIZE if is_max else ObjectiveSense.MINIMIZE


@dataclass(frozen=True)
class Term:
    coeff: Rational
    var_index: int
    surface: str

    def __post_init__(self):
        object.__setattr__(self, "coeff", Fraction(self.coeff))
        if self.var_index < 0:
            raise SchemaError(f"negative variable index {self.var_index}")
        if not self.surface or self.surface != self.surface.strip():
            raise SchemaError(f"bad variable surface {self.surface!r}")


@dataclass(frozen=True)
class IRDeclaration:
    """One objective or constraint in structured form."""

    kind: DeclKind
    direction_text: str
    obj_sense: ObjectiveSense | None = None
    obj_name: str = ""
    operator: Operator | None = None
    lhs_terms: tuple[Term, ...] = ()
    rhs_terms: tuple[Term, ...] = ()
    limit: Rational = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "limit", Fraction(self.limit))
        object.__setattr__(self, "lhs_terms", tuple(self.lhs_terms))
        object.__setattr__(self, "rhs_terms", tuple(self.rhs_terms))
        if not self.direction_text or self.direction_text != self.direction_text.strip():
            raise SchemaError(f"bad direction text {self.direction_text!r}")
        if self.kind is DeclKind.OBJECTIVE:
            if self.operator is not None or self.limit != 0 or self.rhs_terms:
                raise SchemaError("objective carries constraint-only fields")
            if not self.lhs_terms:
                raise SchemaError("objective needs at least one term")
            if not self.obj_name or self.obj_name != self.obj_name.strip():
                raise SchemaError(f"bad objective name {self.obj_name!r}")
            sense = sense_of_direction(self.direction_text)
            if self.obj_sense is None:
                object.__setattr__(self, "obj_sense", sense)
            elif self.obj_sense is not sense:
                raise SchemaError(f"objective sense {self.obj_sense.value} contradicts {self.direction_text!r}")
        else:
            if self.operator is None:
                raise SchemaError("constraint needs an operator")
            if self.obj_sense is not None or self.obj_name:
                raise SchemaError("constraint carries objective-only fields")
            if not self.lhs_terms and not self.rhs_terms:
                raise SchemaError("constraint needs at least one term")


# ---------------------------------------------------------------------------
# numeric literals

_NUMBER_RE = re.compile(r"-?\d+/\d+|-?\d+(?:\.\d+)?%?")


def parse_rational_literal(text: str) -> Rational:
    """Parse "42", "-3", "2.5", "30%" or "7/3" into an exact rational."""
    if text.endswith("%"):
        return Fraction(text[:-1]) / 100
    return Fraction(text)


def extract_number(content: str) -> Rational:
    match = _NUMBER_RE.search(content)
    if match is None:
        raise NumberValueError(f"no numeric value in {content!r}")
    return parse_rational_literal(match.group())


def format_rational(value: Rational) -> str:
    """Canonical surface: integer, exact finite decimal, or "num/den"."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    places = max(twos, fives)
    scaled = abs(value.numerator) * 10**places // value.denominator
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if value.numerator < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def rational_pair(value: Rational) -> list[str]:
    """["numerator", "denominator"] as decimal strings, for JSON payloads."""
    return [str(value.numerator), str(value.denominator)]


def rational_from_pair(pair) -> Rational:
    num, den = pair
    return Fraction(int(num), int(den))


# ---------------------------------------------------------------------------
# surface syntax

_KNOWN_TAGS = frozenset(
    ["DECLARATION", "OBJ_DIR", "OBJ_NAME", "CONST_DIR", "OPERATOR", "TERM", "PARAM", "VAR", "RHS", "LIMIT"]
)
_TAG_RE = re.compile(r"<(/?)([A-Za-z_]+)>")


@dataclass(frozen=True)
class _Lexeme:
    kind: str  # "open" | "close" | "text"
    value: str
    pos: int


def _lex(text: str) -> list[_Lexeme]:
    out: list[_Lexeme] = []
    cursor = 0
    for match in _TAG_RE.finditer(text):
        gap = text[cursor : match.start()]
        if gap.strip():
            out.append(_Lexeme("text", gap.strip(), cursor))
        name = match.group(2)
        if name not in _KNOWN_TAGS:
            raise IRSyntaxError(f"unknown tag <{match.group(1)}{name}>", match.start())
        out.append(_Lexeme("close" if match.group(1) else "open", name, match.start()))
        cursor = match.end()
    tail = text[cursor:]
    if tail.strip():
        out.append(_Lexeme("text", tail.strip(), cursor))
    return out


class _Parser:
    def __init__(self, text: str, mapping: OrderMapping):
        self.lexemes = _lex(text)
        self.mapping = mapping
        self.index = 0
        self.length = len(text)

    def _peek(self) -> _Lexeme | None:
        return self.lexemes[self.index] if self.index < len(self.lexemes) else None

    def _next(self, kind: str, value: str | None = None) -> _Lexeme:
        lexeme = self._peek()
        if lexeme is None:
            raise IRSyntaxError(f"unexpected end of declaration, wanted {value or kind}", self.length)
        if lexeme.kind != kind or (value is not None and lexeme.value != value):
            wanted = f"<{'/' if kind == 'close' else ''}{value}>" if value else kind
            raise IRSyntaxError(f"expected {wanted}, found {lexeme.value!r}", lexeme.pos)
        self.index += 1
        return lexeme

    def _at_open(self, name: str) -> bool:
        lexeme = self._peek()
        return lexeme is not None and lexeme.kind == "open" and lexeme.value == name

    def _leaf(self, name: str) -> str:
        self._next("open", name)
        content = self._next("text")
        self._next("close", name)
        if not content.value:
            raise IRSyntaxError(f"empty <{name}>", content.pos)
        return content.value

    def _term(self) -> Term:
        self._next("open", "TERM")
        coeff = Fraction(1)
        if self._at_open("PARAM"):
            raw = self._leaf("PARAM")
            coeff = extract_number(raw)
        pos = self._peek().pos if self._peek() else self.length
        surface = self._leaf("VAR")
        index = self.mapping.index_of(surface)
        if index is None:
            raise VariableResolutionError(f"unknown variable {surface!r} at offset {pos}")
        self._next("close", "TERM")
        return Term(coeff, index, surface)

    def _terms(self) -> tuple[Term, ...]:
        terms = []
        while self._at_open("TERM"):
            terms.append(self._term())
        return tuple(terms)

    def parse(self) -> IRDeclaration:
        self._next("open", "DECLARATION")
        if self._at_open("OBJ_DIR"):
            direction = self._leaf("OBJ_DIR")
            name = self._leaf("OBJ_NAME")
            terms = self._terms()
            self._next("close", "DECLARATION")
            self._end()
            return IRDeclaration(
                kind=DeclKind.OBJECTIVE, direction_text=direction, obj_name=name, lhs_terms=terms
            )
        direction = self._leaf("CONST_DIR")
        pos = self._peek().pos if self._peek() else self.length
        op_text = self._leaf("OPERATOR")
        try:
            operator = Operator(op_text)
        except ValueError:
            raise IRSyntaxError(f"unknown operator {op_text!r}", pos) from None
        lhs = self._terms()
        rhs: tuple[Term, ...] = ()
        if self._at_open("RHS"):
            self._next("open", "RHS")
            rhs = self._terms()
            self._next("close", "RHS")
        limit = Fraction(0)
        if self._at_open("LIMIT"):
            limit = extract_number(self._leaf("LIMIT"))
        self._next("close", "DECLARATION")
        self._end()
        return IRDeclaration(
            kind=DeclKind.CONSTRAINT,
            direction_text=direction,
            operator=operator,
            lhs_terms=lhs,
            rhs_terms=rhs,
            limit=limit,
        )

    def _end(self):
        lexeme = self._peek()
        if lexeme is not None:
            raise IRSyntaxError(f"trailing content {lexeme.value!r}", lexeme.pos)


def parse_ir(text: str, mapping: OrderMapping) -> IRDeclaration:
    """Parse one declaration; errors carry character offsets."""
    return _Parser(text, mapping).parse()


def serialize_ir(decl: IRDeclaration) -> str:
    """Canonical surface text; `parse_ir(serialize_ir(d)) == d`."""
    parts = ["<DECLARATION>"]
    if decl.kind is DeclKind.OBJECTIVE:
        parts.append(f"<OBJ_DIR>{decl.direction_text}</OBJ_DIR>")
        parts.append(f"<OBJ_NAME>{decl.obj_name}</OBJ_NAME>")
        terms = decl.lhs_terms
    else:
        parts.append(f"<CONST_DIR>{decl.direction_text}</CONST_DIR>")
        parts.append(f"<OPERATOR>{decl.operator.value}</OPERATOR>")
        terms = decl.lhs_terms
    for term in terms:
        parts.append(_serialize_term(term))
    if decl.kind is DeclKind.CONSTRAINT:
        if decl.rhs_terms:
            parts.append("<RHS>")
            parts.extend(_serialize_term(t) for t in decl.rhs_terms)
            parts.append("</RHS>")
        parts.append(f"<LIMIT>{format_rational(decl.limit)}</LIMIT>")
    parts.append("</DECLARATION>")
    return "".join(parts)


def _serialize_term(term: Term) -> str:
    return f"<TERM><PARAM>{format_rational(term.coeff)}</PARAM><VAR>{term.surface}</VAR></TERM>"


# ---------------------------------------------------------------------------
# declaration repair

@dataclass(frozen=True)
class OperatorLexicon:
    """Direction phrases whose inequality sense is unambiguous."""

    geq: frozenset[str]
    leq: frozenset[str]


DEFAULT_OPERATOR_LEXICON = OperatorLexicon(
    geq=frozenset(
        ["at least", "minimum", "more than", "larger than", "greater than", "exceed", "no less than", "must exceed"]
    ),
    leq=frozenset(
        ["at most", "maximum", "less than", "smaller than", "fewer than", "up to", "no more than"]
    ),
)


def _normalize_phrase(text: str) -> str:
    return " ".join(text.casefold().split())


def fix_operator(decl: IRDeclaration, lexicon: OperatorLexicon = DEFAULT_OPERATOR_LEXICON) -> IRDeclaration:
    """Flip operators that contradict an explicit direction phrase.

    Directions outside both lexicons are left alone: only unambiguous
    phrasing justifies overriding the predicted operator.
    """
    if decl.kind is not DeclKind.CONSTRAINT:
        return decl
    phrase = _normalize_phrase(decl.direction_text)
    wanted = None
    if phrase in lexicon.geq:
        wanted = Operator.GREATER_OR_EQUAL
    elif phrase in lexicon.leq:
        wanted = Operator.LESS_OR_EQUAL
    if wanted is None or decl.operator is wanted:
        return decl
    return IRDeclaration(
        kind=decl.kind,
        direction_text=decl.direction_text,
        operator=wanted,
        lhs_terms=decl.lhs_terms,
        rhs_terms=decl.rhs_terms,
        limit=decl.limit,
    )


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb)))
        previous = current
    return previous[len(b)]


@dataclass(frozen=True)
class _DocNumber:
    digits: str
    value: Rational
    position: int


def document_numbers(doc_text: str) -> list[_DocNumber]:
    """All numeric literals of the document, with percentages pre-divided."""
    out = []
    for match in re.finditer(r"\d+(?:\.\d+)?%?", doc_text):
        raw = match.group()
        digits = raw.rstrip("%")
        out.append(_DocNumber(digits, parse_rational_literal(raw), match.start()))
    return out


DEFAULT_REPAIR_ALLOWLIST = (Fraction(0), Fraction(1))


def repair_numbers(
    decl: IRDeclaration,
    doc_text: str,
    allowlist: tuple[Rational, ...] = DEFAULT_REPAIR_ALLOWLIST,
) -> IRDeclaration:
    """Snap unseen declaration numbers to the most similar document number.

    Similarity is edit distance between digit strings (signs ignored), with
    ties broken by absolute value difference, then earliest occurrence.
    The allowlist covers numbers the grammar introduces analytically (the
    implicit limit 0 and coefficient 1); a value also counts as present
    when the document states it as a percentage.
    """
    numbers = document_numbers(doc_text)
    if not numbers:
        warnings.warn(PipelineWarning("repair-no-doc-numbers", "document contains no numbers"), stacklevel=2)
        return decl
    present = {n.value for n in numbers} | {Fraction(n.digits) for n in numbers} | set(allowlist)

    def snap(value: Rational) -> Rational:
        if value in present:
            return value
        digits = format_rational(abs(value))
        best = min(
            numbers,
            key=lambda n: (_levenshtein(digits, n.digits), abs(n.value - abs(value)), n.position),
        )
        return best.value if value >= 0 else -best.value

    def snap_terms(terms: tuple[Term, ...]) -> tuple[Term, ...]:
        return tuple(Term(snap(t.coeff), t.var_index, t.surface) for t in terms)

    return IRDeclaration(
        kind=decl.kind,
        direction_text=decl.direction_text,
        obj_sense=decl.obj_sense,
        obj_name=decl.obj_name,
        operator=decl.operator,
        lhs_terms=snap_terms(decl.lhs_terms),
        rhs_terms=snap_terms(decl.rhs_terms),
        limit=snap(decl.limit) if decl.kind is DeclKind.CONSTRAINT else decl.limit,
    )


# ---------------------------------------------------------------------------
# canonical form

@dataclass(frozen=True)
class CanonicalForm:
    """Objective vector plus constraint rows, every row meaning coeffs . x <= rhs."""

    num_vars: int
    objective: tuple[ObjectiveSense, tuple[Rational, ...]]
    rows: tuple[tuple[tuple[Rational, ...], Rational], ...]

    def __post_init__(self):
        if len(self.objective[1]) != self.num_vars:
            raise DimensionError(f"objective vector has {len(self.objective[1])} coefficients, want {self.num_vars}")
        for coeffs, _ in self.rows:
            if len(coeffs) != self.num_vars:
                raise DimensionError(f"row has {len(coeffs)} coefficients, want {self.num_vars}")


def _accumulate(decl: IRDeclaration, num_vars: int) -> list[Rational]:
    coeffs = [Fraction(0)] * num_vars
    for term in decl.lhs_terms:
        if term.var_index >= num_vars:
            raise DimensionError(f"variable index {term.var_index} out of range for {num_vars} variables")
        coeffs[term.var_index] += term.coeff
    for term in decl.rhs_terms:
        if term.var_index >= num_vars:
            raise DimensionError(f"variable index {term.var_index} out of range for {num_vars} variables")
        coeffs[term.var_index] -= term.coeff
    if all(c == 0 for c in coeffs):
        raise DegenerateRowError(f"all coefficients cancel in {serialize_ir(decl)}")
    return coeffs


def lower_constraint(decl: IRDeclaration, num_vars: int) -> tuple[tuple[Rational, ...], Rational]:
    """Lower to a <= row: lhs - rhs OP limit, with GEQ rows negated."""
    coeffs = _accumulate(decl, num_vars)
    rhs = decl.limit
    if decl.operator is Operator.GREATER_OR_EQUAL:
        coeffs = [-c for c in coeffs]
        rhs = -rhs
    return tuple(coeffs), rhs


def lower_objective(decl: IRDeclaration, num_vars: int) -> tuple[ObjectiveSense, tuple[Rational, ...]]:
    return decl.obj_sense, tuple(_accumulate(decl, num_vars))


def canonicalize(decls: list[IRDeclaration] | tuple[IRDeclaration, ...], num_vars: int) -> CanonicalForm:
    """Lower a declaration set (exactly one objective) to canonical form."""
    objectives = [d for d in decls if d.kind is DeclKind.OBJECTIVE]
    if len(objectives) != 1:
        raise CardinalityError(f"need exactly one objective, found {len(objectives)}")
    rows = tuple(lower_constraint(d, num_vars) for d in decls if d.kind is DeclKind.CONSTRAINT)
    return CanonicalForm(num_vars=num_vars, objective=lower_objective(objectives[0], num_vars), rows=rows)


def normalize_vector(coeffs: tuple[Rational, ...]) -> tuple[Rational, ...]:
    scale = next((abs(c) for c in coeffs if c != 0), None)
    if scale is None:
        return coeffs
    return tuple(c / scale for c in coeffs)


def normalize_row(row: tuple[tuple[Rational, ...], Rational]) -> tuple[tuple[Rational, ...], Rational]:
    """Scale so the first nonzero coefficient has absolute value 1."""
    coeffs, rhs = row
    scale = next((abs(c) for c in coeffs if c != 0), None)
    if scale is None:
        return coeffs, rhs
    return tuple(c / scale for c in coeffs), rhs / scale


@dataclass(frozen=True)
class MatchReport:
    """Outcome of comparing two canonical forms row by row."""

    matched: tuple[tuple[int, int], ...]  # (pred row index, gold row index)
    unmatched_pred: tuple[int, ...]
    unmatched_gold: tuple[int, ...]
    objective_matched: bool


def canonical_match(pred: CanonicalForm, gold: CanonicalForm) -> MatchReport:
    """Exact one-to-one row matching after per-row scale normalization.

    Normalized equality is an equivalence relation, so greedy multiset
    matching already yields a maximum matching; there is no partial credit.
    """
    if pred.num_vars != gold.num_vars:
        raise DimensionError(f"cannot compare forms over {pred.num_vars} and {gold.num_vars} variables")
    pool: dict[tuple, list[int]] = {}
    for j, row in enumerate(gold.rows):
        pool.setdefault(normalize_row(row), []).append(j)
    matched = []
    unmatched_pred = []
    for i, row in enumerate(pred.rows):
        slots = pool.get(normalize_row(row))
        if slots:
            matched.append((i, slots.pop(0)))
        else:
            unmatched_pred.append(i)
    taken = {j for _, j in matched}
    unmatched_gold = tuple(j for j in range(len(gold.rows)) if j not in taken)
    objective_matched = pred.objective[0] is gold.objective[0] and normalize_vector(
        pred.objective[1]
    ) == normalize_vector(gold.objective[1])
    return MatchReport(tuple(matched), tuple(unmatched_pred), unmatched_gold, objective_matched)


def canonical_to_obj(form: CanonicalForm) -> dict:
    sense, coeffs = form.objective
    return {
        "objective": {"sense": sense.value, "coeffs": [rational_pair(c) for c in coeffs]},
        "rows": [
            {"coeffs": [rational_pair(c) for c in coeffs], "rhs": rational_pair(rhs)}
            for coeffs, rhs in form.rows
        ],
    }


def canonical_from_obj(obj: dict) -> CanonicalForm:
    try:
        objective = (
            ObjectiveSense(obj["objective"]["sense"]),
            tuple(rational_from_pair(p) for p in obj["objective"]["coeffs"]),
        )
        rows = tuple(
            (tuple(rational_from_pair(p) for p in row["coeffs"]), rational_from_pair(row["rhs"]))
            for row in obj["rows"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad canonical form: {exc}") from None
    return CanonicalForm(num_vars=len(objective[1]), objective=objective, rows=rows)
