"""Entity-level micro F1 and declaration-level accuracy over canonical forms."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .core import EntitySpan, EntityType, OrderMapping
from .errors import GoldDataError, LpafError
from .ir import (
    DeclKind,
    IRDeclaration,
    canonicalize,
    lower_constraint,
    lower_objective,
    normalize_row,
    normalize_vector,
    parse_ir,
    rational_pair,
)

DENOMINATOR_MODES = ("max", "gold")


def _ratio(numerator: int, denominator: int) -> Fraction:
    if denominator == 0:
        return Fraction(0)
    return Fraction(numerator, denominator)


@dataclass(frozen=True)
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> Fraction:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> Fraction:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> Fraction:
        p, r = self.precision, self.recall
        if p + r == 0:
            return Fraction(0)
        return 2 * p * r / (p + r)

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class F1Report:
    per_type: dict[EntityType, Counts]
    overall: Counts


def entity_f1(pred: Iterable[EntitySpan], gold: Iterable[EntitySpan]) -> F1Report:
    """Exact-match span F1 for one document."""
    return score_entities([(list(pred), list(gold))])


def score_entities(pairs: Iterable[tuple[list[EntitySpan], list[EntitySpan]]]) -> F1Report:
    """Micro-averaged span F1 across documents.

    A prediction is a true positive iff a gold span with identical
    (start, end, type) exists, matched one-to-one.
    """
    per_type = {t: Counts() for t in EntityType}
    for pred, gold in pairs:
        pred_counts = Counter((s.start, s.end, s.etype) for s in pred)
        gold_counts = Counter((s.start, s.end, s.etype) for s in gold)
        for etype in EntityType:
            p = {k: v for k, v in pred_counts.items() if k[2] is etype}
            g = {k: v for k, v in gold_counts.items() if k[2] is etype}
            tp = sum(min(v, g.get(k, 0)) for k, v in p.items())
            per_type[etype] = per_type[etype] + Counts(
                tp=tp, fp=sum(p.values()) - tp, fn=sum(g.values()) - tp
            )
    overall = Counts()
    for counts in per_type.values():
        overall = overall + counts
    return F1Report(per_type=per_type, overall=overall)


@dataclass(frozen=True)
class ProblemDeclarations:
    """Scoring input for one problem: predicted and gold IR texts.

    `pred_kinds` optionally carries the declared target kind ("objective" /
    "constraint") per prediction so that unparseable predictions still land
    in the right per-kind denominator.
    """

    problem_id: str
    pred: tuple[str, ...]
    gold: tuple[str, ...]
    mapping: OrderMapping
    pred_kinds: tuple[str | None, ...] | None = None

    def __post_init__(self):
        if self.pred_kinds is not None and len(self.pred_kinds) != len(self.pred):
            raise LpafError(f"{self.problem_id}: {len(self.pred_kinds)} kinds for {len(self.pred)} predictions")


@dataclass(frozen=True)
class ProblemOutcome:
    problem_id: str
    matched: int
    gold_count: int
    pred_count: int
    matched_const: int
    gold_const: int
    pred_const: int
    matched_obj: int
    gold_obj: int
    pred_obj: int
    pred_errors: tuple[str, ...] = ()


@dataclass(frozen=True)
class AccuracyReport:
    per_problem: tuple[ProblemOutcome, ...]
    accuracy: Fraction
    const_acc: Fraction
    obj_acc: Fraction
    denominator_mode: str = "max"


def _lower_pred(text: str, mapping: OrderMapping):
    """(kind, key) for a predicted declaration, or an error string.

    Unparseable or degenerate predictions are never fatal: they count as
    unmatched predictions.
    """
    try:
        decl = parse_ir(text, mapping)
        if decl.kind is DeclKind.CONSTRAINT:
            return DeclKind.CONSTRAINT, normalize_row(lower_constraint(decl, len(mapping))), None
        sense, coeffs = lower_objective(decl, len(mapping))
        return DeclKind.OBJECTIVE, (sense, normalize_vector(coeffs)), None
    except LpafError as exc:
        return None, None, str(exc)


def declaration_accuracy(
    problems: Iterable[ProblemDeclarations], denominator: str = "max"
) -> AccuracyReport:
    """Dataset accuracy = sum(matched) / sum(per-problem denominator).

    The default denominator max(|gold|, |pred|) penalizes missing and
    spurious declarations symmetrically; "gold" divides by the gold count
    only. Gold declarations must be clean (parse + canonicalize), predicted
    ones may fail arbitrarily.
    """
    if denominator not in DENOMINATOR_MODES:
        raise LpafError(f"unknown denominator mode {denominator!r}")
    outcomes = []
    for problem in problems:
        try:
            gold_decls = [parse_ir(t, problem.mapping) for t in problem.gold]
            gold_form = canonicalize(gold_decls, len(problem.mapping))
        except LpafError as exc:
            raise GoldDataError(f"{problem.problem_id}: {exc}") from None
        gold_rows = Counter(normalize_row(r) for r in gold_form.rows)
        gold_objs = Counter([(gold_form.objective[0], normalize_vector(gold_form.objective[1]))])

        pred_rows: Counter = Counter()
        pred_objs: Counter = Counter()
        pred_const = pred_obj = 0
        errors = []
        kinds = problem.pred_kinds or (None,) * len(problem.pred)
        for text, kind_hint in zip(problem.pred, kinds):
            kind, key, error = _lower_pred(text, problem.mapping)
            if error is not None:
                errors.append(error)
                if kind_hint == "constraint":
                    pred_const += 1
                elif kind_hint == "objective":
                    pred_obj += 1
            elif kind is DeclKind.CONSTRAINT:
                pred_const += 1
                pred_rows[key] += 1
            else:
                pred_obj += 1
                pred_objs[key] += 1

        matched_const = sum(min(n, gold_rows[k]) for k, n in pred_rows.items())
        matched_obj = sum(min(n, gold_objs[k]) for k, n in pred_objs.items())
        outcomes.append(
            ProblemOutcome(
                problem_id=problem.problem_id,
                matched=matched_const + matched_obj,
                gold_count=len(problem.gold),
                pred_count=len(problem.pred),
                matched_const=matched_const,
                gold_const=sum(gold_rows.values()),
                pred_const=pred_const,
                matched_obj=matched_obj,
                gold_obj=1,
                pred_obj=pred_obj,
                pred_errors=tuple(errors),
            )
        )

    def accumulate(matched_of, gold_of, pred_of) -> Fraction:
        total = sum(matched_of(o) for o in outcomes)
        if denominator == "gold":
            denom = sum(gold_of(o) for o in outcomes)
        else:
            denom = sum(max(gold_of(o), pred_of(o)) for o in outcomes)
        return _ratio(total, denom)

    return AccuracyReport(
        per_problem=tuple(outcomes),
        accuracy=accumulate(
            lambda o: o.matched, lambda o: o.gold_count, lambda o: o.pred_count
        ),
        const_acc=accumulate(
            lambda o: o.matched_const, lambda o: o.gold_const, lambda o: o.pred_const
        ),
        obj_acc=accumulate(lambda o: o.matched_obj, lambda o: o.gold_obj, lambda o: o.pred_obj),
        denominator_mode=denominator,
    )


# ---------------------------------------------------------------------------
# report serialization

def _metric_obj(value: Fraction) -> dict:
    return {"exact": rational_pair(value), "value": float(value)}


def counts_to_obj(counts: Counts) -> dict:
    return {
        "tp": counts.tp,
        "fp": counts.fp,
        "fn": counts.fn,
        "precision": _metric_obj(counts.precision),
        "recall": _metric_obj(counts.recall),
        "f1": _metric_obj(counts.f1),
    }


def f1_report_to_obj(report: F1Report) -> dict:
    return {
        "overall": counts_to_obj(report.overall),
        "per_type": {t.value: counts_to_obj(report.per_type[t]) for t in EntityType},
    }


def f1_report_table(report: F1Report) -> str:
    lines = [f"{'type':<10} {'tp':>5} {'fp':>5} {'fn':>5} {'prec':>7} {'rec':>7} {'f1':>7}"]
    rows = [(t.value, report.per_type[t]) for t in EntityType] + [("overall", report.overall)]
    for name, c in rows:
        lines.append(
            f"{name:<10} {c.tp:>5} {c.fp:>5} {c.fn:>5} "
            f"{float(c.precision):>7.4f} {float(c.recall):>7.4f} {float(c.f1):>7.4f}"
        )
    return "\n".join(lines)


def accuracy_report_to_obj(report: AccuracyReport) -> dict:
    return {
        "accuracy": _metric_obj(report.accuracy),
        "const_acc": _metric_obj(report.const_acc),
        "obj_acc": _metric_obj(report.obj_acc),
        "denominator_mode": report.denominator_mode,
        "per_problem": [
            {
                "problem_id": o.problem_id,
                "matched": o.matched,
                "gold": o.gold_count,
                "pred": o.pred_count,
                "matched_const": o.matched_const,
                "gold_const": o.gold_const,
                "pred_const": o.pred_const,
                "matched_obj": o.matched_obj,
                "gold_obj": o.gold_obj,
                "pred_obj": o.pred_obj,
                "errors": list(o.pred_errors),
            }
            for o in report.per_problem
        ],
    }


def accuracy_report_table(report: AccuracyReport) -> str:
    return (
        f"{'metric':<10} {'value':>8}\n"
        f"{'accuracy':<10} {float(report.accuracy):>8.4f}\n"
        f"{'const_acc':<10} {float(report.const_acc):>8.4f}\n"
        f"{'obj_acc':<10} {float(report.obj_acc):>8.4f}"
    )
