"""Linear-programming word problems to canonical LP formulations."""

from .augment import (
    AugmentationConfig,
    augment_digits,
    augment_objname_synonyms,
    augment_swap_variables,
    standardize_times,
)
from .core import (
    EntitySpan,
    EntityType,
    LabeledSequence,
    OrderMapping,
    ProblemDocument,
    Token,
    bio_to_spans,
    spans_to_bio,
    tokenize,
)
from .ir import (
    CanonicalForm,
    DeclKind,
    IRDeclaration,
    MatchReport,
    ObjectiveSense,
    Operator,
    Rational,
    Term,
    canonical_match,
    canonicalize,
    fix_operator,
    parse_ir,
    repair_numbers,
    serialize_ir,
)
from .metrics import AccuracyReport, F1Report, declaration_accuracy, entity_f1, score_entities
from .postprocess import (
    EnsembleAssignment,
    apply_postprocessing,
    ensemble_by_category,
    rule1_multiplier_words,
    rule2_total_prefix,
    rule3_must_prefix,
    rule4_fake_more,
)
from .prompts import (
    PromptedInput,
    PromptVariant,
    build_prompted_inputs,
    expand_repeated_const_dirs,
    route_by_kind,
    strip_decoration,
)

__version__ = "0.1.0"
