"""Split-conformal calibration, prediction sets and the critical set.

Calibration scores a held-out labelled split at its true labels, sorts the
scores, and takes the value at rank ceil((n_c + 1) * (1 - epsilon)) as the
threshold s_eps. A prediction set then contains every label whose score
falls at or below s_eps. When the rank exceeds n_c no finite threshold
gives the guarantee and s_eps is +inf (every set contains both labels).

The conformal critical set (CCS) is the region where the positive class is
the only admitted label; its points are exactly those whose prediction set
equals {positive class}.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InputError, SchemaError
from .ruleset import Ruleset, load_ruleset
from .scoring import ScoreConfig, score, score_batch


def calibration_rank(n_c: int, epsilon: float) -> int:
    """Rank (1-indexed) of the calibration quantile: ceil((n_c+1)(1-eps)).

    Computed with exact rational arithmetic on the binary value of
    ``epsilon`` so the ceiling never flips from a one-ulp product error.
    A result greater than ``n_c`` means the guarantee needs more
    calibration data than provided; callers map that to +inf.
    """
    if n_c < 1:
        raise InputError(f"need at least one calibration score, got n_c={n_c}")
    if not (0.0 < epsilon < 1.0):
        raise InputError(f"epsilon must lie strictly in (0, 1), got {epsilon!r}")
    return math.ceil(Fraction(n_c + 1) * (1 - Fraction(epsilon)))


def threshold_from_scores(scores, epsilon: float) -> float:
    """s_eps for a finished score multiset.

    Sorts ascending and returns the value at the calibration rank.
    Duplicates are kept; the rank statistic runs over the multiset. A rank
    past the last score maps to +inf (every label admitted).
    """
    order = np.sort(np.asarray(scores, dtype=float))
    if order.ndim != 1 or len(order) == 0:
        raise InputError("need a non-empty one-dimensional score collection")
    rank = calibration_rank(len(order), epsilon)
    return math.inf if rank > len(order) else float(order[rank - 1])


@dataclass(frozen=True)
class CalibratedPredictor:
    """Frozen outcome of one calibration run.

    ``calib_scores`` is kept sorted for audits; only ``s_eps`` and ``n_c``
    are needed at prediction time, so artifacts may omit the scores.
    """

    ruleset: Ruleset
    config: ScoreConfig
    epsilon: float
    s_eps: float
    n_c: int
    calib_scores: tuple[float, ...] = field(default=())


@dataclass(frozen=True)
class PredictionSet:
    """Labels admitted for one point, plus the scores that decided it.

    ``scores`` aligns with ``ruleset.classes`` order (negative class
    first). ``in_ccs`` marks sets equal to {positive class}.
    """

    labels: frozenset[int]
    in_ccs: bool
    scores: tuple[float, float]


def calibrate(
    ruleset: Ruleset, config: ScoreConfig, X: np.ndarray, y: np.ndarray, epsilon: float
) -> CalibratedPredictor:
    """Score a labelled calibration split at its true labels and pick s_eps.

    Permuting the calibration rows cannot change the result; only the
    multiset of scores matters.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) != len(y):
        raise InputError(f"X has {len(X)} rows but y has {len(y)} labels")
    if len(X) == 0:
        raise InputError("calibration split is empty")
    bad = set(np.unique(y)) - set(ruleset.classes)
    if bad:
        raise InputError(f"calibration labels {sorted(bad)} not in ruleset classes {ruleset.classes!r}")
    scores = np.empty(len(X), dtype=float)
    for label in ruleset.classes:
        mask = y == label
        if mask.any():
            scores[mask] = score_batch(X[mask], label, ruleset, config)
    order = np.sort(scores)
    return CalibratedPredictor(
        ruleset=ruleset,
        config=config,
        epsilon=epsilon,
        s_eps=threshold_from_scores(order, epsilon),
        n_c=len(X),
        calib_scores=tuple(float(v) for v in order),
    )


def predict_set(predictor: CalibratedPredictor, point) -> PredictionSet:
    """Prediction set for one point: labels whose score is <= s_eps."""
    neg, pos = predictor.ruleset.classes
    s_neg, _ = score(point, neg, predictor.ruleset, predictor.config)
    s_pos, _ = score(point, pos, predictor.ruleset, predictor.config)
    return _assemble(predictor, s_neg, s_pos)


def predict_sets(predictor: CalibratedPredictor, X: np.ndarray) -> list[PredictionSet]:
    """Prediction sets for every row of ``X`` (batch path)."""
    neg, pos = predictor.ruleset.classes
    s_neg = score_batch(X, neg, predictor.ruleset, predictor.config)
    s_pos = score_batch(X, pos, predictor.ruleset, predictor.config)
    return [_assemble(predictor, float(a), float(b)) for a, b in zip(s_neg, s_pos)]


def _assemble(predictor: CalibratedPredictor, s_neg: float, s_pos: float) -> PredictionSet:
    neg, pos = predictor.ruleset.classes
    labels = set()
    if s_neg <= predictor.s_eps:
        labels.add(neg)
    if s_pos <= predictor.s_eps:
        labels.add(pos)
    return PredictionSet(labels=frozenset(labels), in_ccs=labels == {pos}, scores=(s_neg, s_pos))


def relabel_ccs(predictor: CalibratedPredictor, X: np.ndarray) -> np.ndarray:
    """Critical-set labels: +1 inside the CCS, -1 everywhere else.

    -1 means "not confidently positive"; it is deliberately distinct from
    the original negative class label 0.
    """
    sets = predict_sets(predictor, X)
    return np.array([1 if s.in_ccs else -1 for s in sets], dtype=int)


# ---- Predictor artifact ----

def scores_digest(scores) -> str:
    payload = json.dumps([float(v) for v in scores]).encode()
    return "sha256:" + hashlib.sha256(payload).hexdigest()


def predictor_to_dict(
    predictor: CalibratedPredictor, ruleset_ref: str, embed_scores: bool = True
) -> dict:
    doc = {
        "epsilon": predictor.epsilon,
        "s_eps": predictor.s_eps,
        "n_c": predictor.n_c,
        "score_config": predictor.config.to_dict(),
        "ruleset_ref": ruleset_ref,
        "calib_scores_digest": scores_digest(predictor.calib_scores),
    }
    if embed_scores:
        doc["calib_scores"] = [float(v) for v in predictor.calib_scores]
    return doc


def predictor_from_dict(doc: dict, ruleset: Ruleset) -> CalibratedPredictor:
    if not isinstance(doc, dict):
        raise SchemaError("predictor document must be an object")
    for key in ("epsilon", "s_eps", "n_c", "score_config", "ruleset_ref", "calib_scores_digest"):
        if key not in doc:
            raise SchemaError(f"predictor document missing key {key!r}")
    if not isinstance(doc["epsilon"], (int, float)) or not (0.0 < doc["epsilon"] < 1.0):
        raise SchemaError(f"epsilon must be a number in (0, 1), got {doc['epsilon']!r}")
    if not isinstance(doc["s_eps"], (int, float)):
        raise SchemaError("s_eps must be a number")
    if not isinstance(doc["n_c"], int) or doc["n_c"] < 1:
        raise SchemaError(f"n_c must be a positive integer, got {doc['n_c']!r}")
    if not isinstance(doc["calib_scores_digest"], str):
        raise SchemaError("calib_scores_digest must be a string")
    config = ScoreConfig.from_dict(doc["score_config"])
    scores: tuple[float, ...] = ()
    if "calib_scores" in doc:
        raw = doc["calib_scores"]
        if not isinstance(raw, list) or not all(isinstance(v, (int, float)) for v in raw):
            raise SchemaError("calib_scores must be a list of numbers")
        if len(raw) != doc["n_c"]:
            raise SchemaError(f"calib_scores has {len(raw)} entries but n_c is {doc['n_c']}")
        scores = tuple(float(v) for v in raw)
        if scores_digest(scores) != doc["calib_scores_digest"]:
            raise SchemaError("calib_scores do not match their digest")
    return CalibratedPredictor(
        ruleset=ruleset,
        config=config,
        epsilon=float(doc["epsilon"]),
        s_eps=float(doc["s_eps"]),
        n_c=doc["n_c"],
        calib_scores=scores,
    )


def save_predictor(predictor: CalibratedPredictor, path: str | Path, ruleset_ref: str, embed_scores: bool = True):
    doc = predictor_to_dict(predictor, ruleset_ref, embed_scores=embed_scores)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_predictor(path: str | Path) -> CalibratedPredictor:
    """Read a predictor artifact, resolving its ruleset reference.

    The referenced ruleset file is looked up relative to the predictor's
    own directory and validated like any other artifact.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "ruleset_ref" not in doc:
        raise SchemaError(f"{path}: predictor document missing key 'ruleset_ref'")
    if not isinstance(doc["ruleset_ref"], str):
        raise SchemaError(f"{path}: ruleset_ref must be a string")
    ruleset_path = path.parent / doc["ruleset_ref"]
    if not ruleset_path.exists():
        raise InputError(f"predictor references missing ruleset {ruleset_path}")
    ruleset = load_ruleset(ruleset_path)
    return predictor_from_dict(doc, ruleset)
