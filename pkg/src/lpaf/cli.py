"""Single executable exposing every pipeline stage as a subcommand.

Every subcommand is a pure function of (inputs, config, seed): repeated
runs produce byte-identical outputs, with or without --jobs parallelism.
Outputs are written atomically. Exit codes: 0 ok, 2 schema/data error,
3 missing file, 4 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import jsonl
from .augment import AugmentationConfig, expand, standardize_times
from .core import EntityType, LabeledSequence, ProblemDocument, bio_to_spans, tags_for_spans
from .errors import ConfigError, GoldDataError, LpafError, SchemaError
from .ir import DeclKind, canonical_to_obj, canonicalize, fix_operator, parse_ir, repair_numbers, serialize_ir
from .jsonl import DeclarationRecord, PredictionRecord
from .metrics import (
    DENOMINATOR_MODES,
    ProblemDeclarations,
    accuracy_report_table,
    accuracy_report_to_obj,
    declaration_accuracy,
    f1_report_table,
    f1_report_to_obj,
    score_entities,
)
from .postprocess import EnsembleAssignment, apply_postprocessing, ensemble_by_category
from .prompts import PromptVariant, build_prompted_inputs, prompted_input_to_obj

log = logging.getLogger("lpaf")

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_MISSING = 3
EXIT_CONFIG = 4

ALL_RULES = ("rule1", "rule2", "rule3", "rule4", "operator", "numbers")


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved configuration; defaults run the full pipeline with every rule on."""

    problems: str | None = None
    predictions: str | None = None
    declarations: str | None = None
    ensemble_assignment: str | None = None
    variant: str = "routed"
    rules: tuple[str, ...] = ALL_RULES
    seed: int = 0
    denominator: str = "max"
    synonyms: str | None = None
    digits: bool = True
    window: int = 10


_BOOL_VALUES = {"true": True, "1": True, "yes": True, "on": True, "false": False, "0": False, "no": False, "off": False}


def _parse_rules(raw: str) -> tuple[str, ...]:
    if raw.strip() in ("", "none"):
        return ()
    rules = tuple(part.strip() for part in raw.split(","))
    unknown = [r for r in rules if r not in ALL_RULES]
    if unknown:
        raise ConfigError(f"unknown rules: {', '.join(unknown)} (valid: {', '.join(ALL_RULES)})")
    return rules


def read_kv_file(path: str) -> dict[str, str]:
    """Flat `key = value` text; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    raw = read_kv_file(path)
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
    cfg = PipelineConfig()
    updates: dict = {}
    for key, value in raw.items():
        if key == "rules":
            updates[key] = _parse_rules(value)
        elif key in ("seed", "window"):
            try:
                updates[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}: {key} must be an integer, got {value!r}") from None
        elif key == "digits":
            if value.casefold() not in _BOOL_VALUES:
                raise ConfigError(f"{path}: digits must be a boolean, got {value!r}")
            updates[key] = _BOOL_VALUES[value.casefold()]
        elif key == "denominator":
            if value not in DENOMINATOR_MODES:
                raise ConfigError(f"{path}: denominator must be one of {DENOMINATOR_MODES}")
            updates[key] = value
        else:
            updates[key] = value
    return replace(cfg, **updates)


def load_assignment(path: str) -> EnsembleAssignment:
    raw = read_kv_file(path)
    per_type: dict[EntityType, str] = {}
    for key, value in raw.items():
        per_type[EntityType.from_string(key)] = value
    return EnsembleAssignment(per_type)


def load_synonyms(path: str) -> dict[str, list[str]]:
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict) or not all(
        isinstance(k, str) and isinstance(v, list) and all(isinstance(s, str) for s in v) for k, v in data.items()
    ):
        raise ConfigError(f"{path}: synonyms must map token -> list of strings")
    return data


def _pmap(fn, items, jobs: int):
    """Order-preserving map; errors are captured per item, never reordered."""

    def safe(item):
        try:
            return fn(item), None
        except LpafError as exc:
            return None, exc

    items = list(items)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(safe, items))
    return [safe(item) for item in items]


def _collect(pairs, idents, strict: bool):
    """Unwrap (result, error) pairs; skip and report failures unless strict."""
    results = []
    for ident, (result, error) in zip(idents, pairs):
        if error is not None:
            if strict:
                raise error
            log.warning("skipped %s: %s", ident, error)
        else:
            results.append(result)
    return results


# ---------------------------------------------------------------------------
# stage runners (shared between subcommands and `pipeline`)

def run_augment(problems_path: str, out_path: str, cfg: PipelineConfig, strict: bool, jobs: int) -> None:
    synonym_map = load_synonyms(cfg.synonyms) if cfg.synonyms else {}
    aug_cfg = AugmentationConfig(seed=cfg.seed, synonym_map=synonym_map, digit_policy=cfg.digits)
    docs = list(jsonl.read_problems(problems_path))
    expanded = _collect(_pmap(lambda d: expand(d, aug_cfg), docs, jobs), [d.id for d in docs], strict)
    jsonl.write_problems(out_path, (doc for group in expanded for doc in group))


def run_standardize(problems_path: str, out_path: str, strict: bool, jobs: int) -> None:
    docs = list(jsonl.read_problems(problems_path))
    fixed = _collect(_pmap(standardize_times, docs, jobs), [d.id for d in docs], strict)
    jsonl.write_problems(out_path, fixed)


def run_ner_post(pred_path: str, out_path: str, cfg: PipelineConfig, strict: bool, jobs: int) -> None:
    ner_rules = tuple(r for r in cfg.rules if r.startswith("rule"))
    recs = list(jsonl.read_predictions(pred_path))

    def fix(rec: PredictionRecord) -> PredictionRecord:
        seq = apply_postprocessing(rec.sequence, rules=ner_rules, window=cfg.window)
        return PredictionRecord(rec.id, rec.model, seq, rec.extra)

    jsonl.write_predictions(out_path, _collect(_pmap(fix, recs, jobs), [r.id for r in recs], strict))


def _group_predictions(recs: list[PredictionRecord]) -> dict[str, dict[str, LabeledSequence]]:
    grouped: dict[str, dict[str, LabeledSequence]] = {}
    for rec in recs:
        grouped.setdefault(rec.id, {})[rec.model] = rec.sequence
    return grouped


def run_ensemble(pred_path: str, out_path: str, cfg: PipelineConfig, strict: bool, jobs: int) -> None:
    recs = list(jsonl.read_predictions(pred_path))
    grouped = _group_predictions(recs)
    models = sorted({rec.model for rec in recs})
    if cfg.ensemble_assignment:
        assignment = load_assignment(cfg.ensemble_assignment)
    elif len(models) == 1:
        assignment = EnsembleAssignment.single_model(models[0])
    elif len(models) == 4:
        assignment = EnsembleAssignment.four_way(*models)
        log.info("no assignment configured; using four-way default over %s", ", ".join(models))
    else:
        raise ConfigError(f"{len(models)} models present; an ensemble assignment config is required")

    def merge(item) -> PredictionRecord:
        problem_id, preds = item
        spans = ensemble_by_category(preds, assignment)
        tokens = next(iter(preds.values())).tokens
        seq = LabeledSequence(tokens, tuple(tags_for_spans(tokens, spans)))
        return PredictionRecord(problem_id, "ensemble", seq)

    items = list(grouped.items())
    jsonl.write_predictions(out_path, _collect(_pmap(merge, items, jobs), [i for i, _ in items], strict))


def _entities_from_prediction(doc: ProblemDocument, seq: LabeledSequence):
    """Predicted spans usable on a document: unresolvable VAR spans are dropped."""
    spans = bio_to_spans(seq, lenient=True)
    kept = []
    for span in spans:
        if span.etype is EntityType.VAR and doc.order_mapping.index_of(span.text(doc.text)) is None:
            log.warning("%s: dropping VAR span %r not in order mapping", doc.id, span.text(doc.text))
            continue
        kept.append(span)
    return tuple(kept)


def _variant_modes(name: str) -> list[tuple[PromptVariant, str | None]]:
    """(variant to build, kind filter) pairs; "routed" sends entity-enhanced
    prompts to objectives and position-aware prompts to constraints."""
    if name == "routed":
        return [(PromptVariant.ENTITY_ENHANCED, "objective"), (PromptVariant.POSITION_AWARE, "constraint")]
    return [(PromptVariant.from_string(name), None)]


def run_prompts(
    problems_path: str, out_path: str, cfg: PipelineConfig, strict: bool, jobs: int, pred_path: str | None = None
) -> None:
    docs = list(jsonl.read_problems(problems_path))
    by_id: dict[str, LabeledSequence] = {}
    if pred_path:
        for rec in jsonl.read_predictions(pred_path):
            if rec.id in by_id:
                raise SchemaError(f"multiple prediction records for problem {rec.id}; ensemble first")
            by_id[rec.id] = rec.sequence
    modes = _variant_modes(cfg.variant)

    def build(doc: ProblemDocument):
        if pred_path:
            if doc.id not in by_id:
                log.warning("%s: no prediction record, using stored entities", doc.id)
            else:
                doc = doc.replace(entities=_entities_from_prediction(doc, by_id[doc.id]))
        out = []
        for variant, kind_filter in modes:
            for p in build_prompted_inputs(doc, variant):
                if kind_filter is None or p.target_kind == kind_filter:
                    out.append(p)
        return out

    groups = _collect(_pmap(build, docs, jobs), [d.id for d in docs], strict)
    jsonl.write_atomic(out_path, (jsonl.dumps(prompted_input_to_obj(p)) for group in groups for p in group))


def _problem_index(problems_path: str) -> dict[str, ProblemDocument]:
    index = {}
    for doc in jsonl.read_problems(problems_path):
        index[doc.id] = doc
    return index


def _doc_for(rec: DeclarationRecord, index: dict[str, ProblemDocument]) -> ProblemDocument:
    doc = index.get(rec.problem_id)
    if doc is None:
        raise SchemaError(f"declaration references unknown problem {rec.problem_id!r}")
    return doc


def run_ir_parse(
    decl_path: str, problems_path: str, out_path: str, strict: bool, jobs: int
) -> None:
    index = _problem_index(problems_path)
    recs = list(jsonl.read_declarations(decl_path))

    def reparse(rec: DeclarationRecord) -> DeclarationRecord:
        decl = parse_ir(rec.ir_text, _doc_for(rec, index).order_mapping)
        kind = "objective" if decl.kind is DeclKind.OBJECTIVE else "constraint"
        return DeclarationRecord(rec.problem_id, rec.slot_index, kind, serialize_ir(decl), rec.extra)

    idents = [f"{r.problem_id}#{r.slot_index}" for r in recs]
    jsonl.write_declarations(out_path, _collect(_pmap(reparse, recs, jobs), idents, strict))


def run_ir_fix(
    decl_path: str, problems_path: str, out_path: str, cfg: PipelineConfig, strict: bool, jobs: int
) -> None:
    index = _problem_index(problems_path)
    recs = list(jsonl.read_declarations(decl_path))

    def fix(rec: DeclarationRecord) -> DeclarationRecord:
        doc = _doc_for(rec, index)
        try:
            decl = parse_ir(rec.ir_text, doc.order_mapping)
        except LpafError as exc:
            log.warning("%s#%d: unparseable declaration passed through: %s", rec.problem_id, rec.slot_index, exc)
            return rec
        if "operator" in cfg.rules:
            decl = fix_operator(decl)
        if "numbers" in cfg.rules:
            decl = repair_numbers(decl, doc.text)
        return DeclarationRecord(rec.problem_id, rec.slot_index, rec.target_kind, serialize_ir(decl), rec.extra)

    idents = [f"{r.problem_id}#{r.slot_index}" for r in recs]
    jsonl.write_declarations(out_path, _collect(_pmap(fix, recs, jobs), idents, strict))


def _group_declarations(recs: list[DeclarationRecord]) -> dict[str, list[DeclarationRecord]]:
    grouped: dict[str, list[DeclarationRecord]] = {}
    for rec in recs:
        grouped.setdefault(rec.problem_id, []).append(rec)
    return grouped


def run_canonicalize(
    decl_path: str, problems_path: str, out_path: str, strict: bool, jobs: int
) -> None:
    index = _problem_index(problems_path)
    grouped = _group_declarations(list(jsonl.read_declarations(decl_path)))

    def lower(item):
        problem_id, recs = item
        doc = index.get(problem_id)
        if doc is None:
            raise SchemaError(f"declarations reference unknown problem {problem_id!r}")
        decls = []
        for rec in recs:
            try:
                decls.append(parse_ir(rec.ir_text, doc.order_mapping))
            except LpafError as exc:
                log.warning("%s#%d: dropping unparseable declaration: %s", problem_id, rec.slot_index, exc)
        form = canonicalize(decls, len(doc.order_mapping))
        return {"problem_id": problem_id, **canonical_to_obj(form)}

    items = list(grouped.items())
    objs = _collect(_pmap(lower, items, jobs), [i for i, _ in items], strict)
    jsonl.write_atomic(out_path, (jsonl.dumps(o) for o in objs))


def _sniff_predictions_file(path: str) -> bool:
    for _, obj in jsonl.read_lines(path):
        return "tags" in obj
    return False


def _spans_by_id(path: str) -> dict[str, list]:
    """Entity spans per problem id from either interchange schema."""
    spans: dict[str, list] = {}
    if _sniff_predictions_file(path):
        models = set()
        for rec in jsonl.read_predictions(path):
            models.add(rec.model)
            if len(models) > 1:
                raise ConfigError(f"{path}: multiple models present; ensemble first")
            spans[rec.id] = bio_to_spans(rec.sequence, lenient=True)
    else:
        for doc in jsonl.read_problems(path):
            spans[doc.id] = list(doc.entities)
    return spans


def run_score_ner(pred_path: str, gold_path: str, out_path: str | None) -> str:
    pred = _spans_by_id(pred_path)
    gold = {doc.id: list(doc.entities) for doc in jsonl.read_problems(gold_path)}
    ids = sorted(set(pred) | set(gold))
    report = score_entities([(pred.get(i, []), gold.get(i, [])) for i in ids])
    if out_path:
        jsonl.write_atomic(out_path, [json.dumps(f1_report_to_obj(report), indent=2, ensure_ascii=False)])
    return f1_report_table(report)


def run_score_gen(pred_path: str, gold_path: str, out_path: str | None, cfg: PipelineConfig) -> str:
    grouped = _group_declarations(list(jsonl.read_declarations(pred_path)))
    items = []
    for doc in jsonl.read_problems(gold_path):
        if doc.gold_declarations is None:
            raise GoldDataError(f"{doc.id}: no gold declarations")
        recs = grouped.pop(doc.id, [])
        items.append(
            ProblemDeclarations(
                problem_id=doc.id,
                pred=tuple(r.ir_text for r in recs),
                gold=doc.gold_declarations,
                mapping=doc.order_mapping,
                pred_kinds=tuple(r.target_kind for r in recs),
            )
        )
    for problem_id in grouped:
        log.warning("ignoring declarations for unknown problem %s", problem_id)
    report = declaration_accuracy(items, denominator=cfg.denominator)
    if out_path:
        jsonl.write_atomic(out_path, [json.dumps(accuracy_report_to_obj(report), indent=2, ensure_ascii=False)])
    return accuracy_report_table(report)


# ---------------------------------------------------------------------------
# subcommand wiring

def _cfg_from_args(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "variant", None) is not None:
        cfg = replace(cfg, variant=args.variant)
    if getattr(args, "rules", None) is not None:
        cfg = replace(cfg, rules=_parse_rules(args.rules))
    return cfg


def _require(args, name: str) -> str:
    attr = {"in": "input"}.get(name, name.replace("-", "_"))
    value = getattr(args, attr, None)
    if value is None:
        raise ConfigError(f"--{name} is required for this subcommand")
    return value


def cmd_augment(args) -> int:
    cfg = _cfg_from_args(args)
    run_augment(_require(args, "in"), _require(args, "out"), cfg, args.strict, args.jobs)
    return EXIT_OK


def cmd_standardize(args) -> int:
    run_standardize(_require(args, "in"), _require(args, "out"), args.strict, args.jobs)
    return EXIT_OK


def cmd_ner_post(args) -> int:
    cfg = _cfg_from_args(args)
    run_ner_post(_require(args, "in"), _require(args, "out"), cfg, args.strict, args.jobs)
    return EXIT_OK


def cmd_ensemble(args) -> int:
    cfg = _cfg_from_args(args)
    run_ensemble(_require(args, "in"), _require(args, "out"), cfg, args.strict, args.jobs)
    return EXIT_OK


def cmd_prompts(args) -> int:
    cfg = _cfg_from_args(args)
    run_prompts(_require(args, "in"), _require(args, "out"), cfg, args.strict, args.jobs, pred_path=args.pred)
    return EXIT_OK


def cmd_ir_parse(args) -> int:
    run_ir_parse(_require(args, "in"), _require(args, "gold"), _require(args, "out"), args.strict, args.jobs)
    return EXIT_OK


def cmd_ir_fix(args) -> int:
    cfg = _cfg_from_args(args)
    run_ir_fix(_require(args, "in"), _require(args, "gold"), _require(args, "out"), cfg, args.strict, args.jobs)
    return EXIT_OK


def cmd_canonicalize(args) -> int:
    run_canonicalize(_require(args, "in"), _require(args, "gold"), _require(args, "out"), args.strict, args.jobs)
    return EXIT_OK


def cmd_score_ner(args) -> int:
    print(run_score_ner(_require(args, "pred"), _require(args, "gold"), args.out))
    return EXIT_OK


def cmd_score_gen(args) -> int:
    cfg = _cfg_from_args(args)
    print(run_score_gen(_require(args, "pred"), _require(args, "gold"), args.out, cfg))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _cfg_from_args(args)
    problems = args.input or cfg.problems
    if problems is None:
        raise ConfigError("pipeline needs a problems file (--in or config `problems`)")
    predictions = args.pred or cfg.predictions
    declarations = cfg.declarations
    outdir = Path(_require(args, "out"))
    outdir.mkdir(parents=True, exist_ok=True)

    prompt_pred = None
    if predictions:
        run_ensemble(predictions, str(outdir / "ensemble.jsonl"), cfg, args.strict, args.jobs)
        run_ner_post(str(outdir / "ensemble.jsonl"), str(outdir / "predictions_post.jsonl"), cfg, args.strict, args.jobs)
        prompt_pred = str(outdir / "predictions_post.jsonl")
        table = run_score_ner(prompt_pred, problems, str(outdir / "ner_report.json"))
        print(table)
    run_prompts(problems, str(outdir / "prompted_inputs.jsonl"), cfg, args.strict, args.jobs, pred_path=prompt_pred)
    if declarations:
        run_ir_fix(declarations, problems, str(outdir / "declarations_fixed.jsonl"), cfg, args.strict, args.jobs)
        run_canonicalize(str(outdir / "declarations_fixed.jsonl"), problems, str(outdir / "canonical.jsonl"), args.strict, args.jobs)
        table = run_score_gen(str(outdir / "declarations_fixed.jsonl"), problems, str(outdir / "gen_report.json"), cfg)
        print(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpaf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str, needs=("in", "out")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="input", metavar="FILE", help="primary input file")
        p.add_argument("--out", help="output path")
        p.add_argument("--gold", help="gold problems file")
        p.add_argument("--pred", help="predictions/declarations file")
        p.add_argument("--config", help="pipeline config (flat key = value)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--variant", default=None, help="prefix | position | entity | routed")
        p.add_argument("--rules", default=None, help="comma list from: " + ",".join(ALL_RULES))
        p.add_argument("--strict", action="store_true", help="abort on the first per-problem error")
        p.add_argument("--jobs", type=int, default=1, metavar="N")
        p.set_defaults(func=func)
        return p

    add("augment", cmd_augment, "expand problems with augmented copies")
    add("standardize", cmd_standardize, "shrink PARAM/LIMIT spans ending in 'times'")
    add("ner-post", cmd_ner_post, "apply tag repair rules to predictions")
    add("ensemble", cmd_ensemble, "merge multi-model predictions per entity category")
    add("prompts", cmd_prompts, "build prompted generation inputs")
    add("ir-parse", cmd_ir_parse, "validate declarations and re-serialize canonically")
    add("ir-fix", cmd_ir_fix, "repair operators and unseen numbers in declarations")
    add("canonicalize", cmd_canonicalize, "lower declarations to canonical LP form")
    add("score-ner", cmd_score_ner, "entity span F1 against gold problems")
    add("score-gen", cmd_score_gen, "declaration accuracy against gold declarations")
    add("pipeline", cmd_pipeline, "run every applicable stage into an output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = os.environ.get("LPAF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"missing file: {exc.filename or exc}", file=sys.stderr)
        return EXIT_MISSING
    except LpafError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
