"""Conformal prediction sets and critical-set retraining for rule-based binary classifiers."""

from .conformal import (
    CalibratedPredictor,
    PredictionSet,
    calibrate,
    calibration_rank,
    load_predictor,
    predict_set,
    predict_sets,
    relabel_ccs,
    save_predictor,
    threshold_from_scores,
)
from .errors import EmptyCCSError, InputError, SchemaError
from .evaluation import (
    EvaluationReport,
    RulePerformance,
    evaluate_ccs_rules,
    evaluate_sets,
    f1_score,
    reports_to_text,
    rule_performance,
    time_calibration,
)
from .fixtures import TOY_VARIANTS, toy_ruleset
from .inducer import (
    InducerConfig,
    assign_class,
    assign_class_batch,
    induce_rules,
    retrain_on_ccs,
)
from .ruleset import (
    FeatureBounds,
    Interval,
    Rule,
    Ruleset,
    adjacent_zero_similarity_pairs,
    load_ruleset,
    overlap_volume,
    overlaps,
    pairwise_similarity,
    rule_stats,
    ruleset_from_dict,
    ruleset_to_dict,
    satisfies,
    satisfies_batch,
    save_ruleset,
    similarity,
    volume,
)
from .scoring import (
    LARGE_GAMMA_HAT,
    TAU_SATURATION,
    RuleFactor,
    ScoreBreakdown,
    ScoreConfig,
    gamma,
    gamma_hat,
    score,
    score_batch,
    tau_hat,
)

__version__ = "0.1.0"

__all__ = [
    "CalibratedPredictor",
    "EmptyCCSError",
    "EvaluationReport",
    "FeatureBounds",
    "InducerConfig",
    "InputError",
    "Interval",
    "LARGE_GAMMA_HAT",
    "PredictionSet",
    "Rule",
    "RuleFactor",
    "RulePerformance",
    "Ruleset",
    "SchemaError",
    "ScoreBreakdown",
    "ScoreConfig",
    "TAU_SATURATION",
    "TOY_VARIANTS",
    "adjacent_zero_similarity_pairs",
    "assign_class",
    "assign_class_batch",
    "calibrate",
    "calibration_rank",
    "evaluate_ccs_rules",
    "evaluate_sets",
    "f1_score",
    "gamma",
    "gamma_hat",
    "induce_rules",
    "load_predictor",
    "load_ruleset",
    "overlap_volume",
    "overlaps",
    "pairwise_similarity",
    "predict_set",
    "predict_sets",
    "relabel_ccs",
    "reports_to_text",
    "retrain_on_ccs",
    "rule_performance",
    "rule_stats",
    "ruleset_from_dict",
    "ruleset_to_dict",
    "satisfies",
    "satisfies_batch",
    "save_predictor",
    "save_ruleset",
    "score",
    "score_batch",
    "similarity",
    "tau_hat",
    "threshold_from_scores",
    "time_calibration",
    "toy_ruleset",
    "volume",
]
