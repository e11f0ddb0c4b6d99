"""Similarity-weighted conformity scores over rule-based classifiers.

The score of a (point, label) pair multiplies one factor per satisfied rule
of that label. Each factor combines three ingredients:

* closeness of the point to the rule's box faces (``gamma``), computed
  through a decreasing kernel of the per-face distances, so boundary
  points look less trustworthy than interior ones;
* how much the rule's box overlaps other rules the point satisfies,
  expressed as the ratio of mean same-label to mean other-label geometric
  similarity (``gamma_hat``);
* the rule's relevance, entering as ``1 - relevance``.

Scores live in [0, 1]; 1 means "no satisfied rule supports this label"
(the empty product) and lower values mean better agreement. Larger scores
are worse, which is the orientation split-conformal calibration expects.

All functions are pure; batch helpers give identical results for any
evaluation order or batch split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .ruleset import Rule, Ruleset, pairwise_similarity, satisfies, satisfies_batch, similarity

# Stand-in for an infinite similarity ratio under the strict policy. Any
# value past TAU_SATURATION squashes to exactly 1.0; this one also stays
# representable in JSON breakdowns.
LARGE_GAMMA_HAT = 1e300

# sigmoid(40) is 1.0 to within double rounding, so we pin it there and make
# saturation explicit instead of an accident of floating point.
TAU_SATURATION = 40.0

KERNELS = ("reciprocal", "exponential")
RATIO_POLICIES = ("strict", "smoothed")


@dataclass(frozen=True)
class ScoreConfig:
    """Knobs of the score function.

    kernel : "reciprocal" uses phi(d) = 1/d, "exponential" uses
        phi(d) = exp(-alpha * d) and needs ``alpha`` > 0.
    ratio_policy : how zero denominators in the same/other similarity
        ratio are resolved. "strict" keeps the raw ratio with the
        conventions 0/0 -> 1, a/0 -> saturated, 0/b -> 0. "smoothed"
        adds ``kappa`` > 0 to both sides, keeping every ratio finite.
    distance_floor : lower clamp for face distances so the reciprocal
        kernel stays finite on the faces themselves.
    """

    kernel: str = "reciprocal"
    alpha: float | None = None
    ratio_policy: str = "strict"
    kappa: float | None = None
    distance_floor: float = 1e-12

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise InputError(f"unknown kernel {self.kernel!r}, expected one of {KERNELS}")
        if self.kernel == "exponential":
            if self.alpha is None or not (self.alpha > 0):
                raise InputError("exponential kernel needs alpha > 0")
        if self.ratio_policy not in RATIO_POLICIES:
            raise InputError(f"unknown ratio_policy {self.ratio_policy!r}, expected one of {RATIO_POLICIES}")
        if self.ratio_policy == "smoothed":
            if self.kappa is None or not (self.kappa > 0):
                raise InputError("smoothed ratio policy needs kappa > 0")
        if not (self.distance_floor > 0):
            raise InputError("distance_floor must be positive")

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "alpha": self.alpha,
            "ratio_policy": self.ratio_policy,
            "kappa": self.kappa,
            "distance_floor": self.distance_floor,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ScoreConfig":
        from .errors import SchemaError

        if not isinstance(doc, dict):
            raise SchemaError("score_config must be an object")
        for key in ("kernel", "alpha", "ratio_policy", "kappa", "distance_floor"):
            if key not in doc:
                raise SchemaError(f"score_config missing key {key!r}")
        try:
            return ScoreConfig(
                kernel=doc["kernel"],
                alpha=None if doc["alpha"] is None else float(doc["alpha"]),
                ratio_policy=doc["ratio_policy"],
                kappa=None if doc["kappa"] is None else float(doc["kappa"]),
                distance_floor=float(doc["distance_floor"]),
            )
        except (InputError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid score_config: {exc}") from exc


@dataclass(frozen=True)
class RuleFactor:
    """Audit record of one rule's contribution to a score."""

    rule_id: str
    gamma: float
    same_class_mean_similarity: float
    opposite_class_mean_similarity: float
    gamma_hat: float
    tau_hat: float
    relevance_factor: float

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "gamma": self.gamma,
            "same_class_mean_similarity": self.same_class_mean_similarity,
            "opposite_class_mean_similarity": self.opposite_class_mean_similarity,
            "gamma_hat": self.gamma_hat,
            "tau_hat": self.tau_hat,
            "relevance_factor": self.relevance_factor,
        }


@dataclass(frozen=True)
class ScoreBreakdown:
    """Score plus the per-rule factors it multiplies together."""

    per_rule: tuple[RuleFactor, ...]
    score: float

    def to_dict(self) -> dict:
        return {"score": self.score, "per_rule": [f.to_dict() for f in self.per_rule]}


def _phi(distance: float, config: ScoreConfig) -> float:
    d = max(distance, config.distance_floor)
    if config.kernel == "reciprocal":
        return 1.0 / d
    return math.exp(-config.alpha * d)


def gamma(point, rule: Rule, config: ScoreConfig) -> float:
    """Kernel-summed closeness of ``point`` to every face of the rule's box.

    Each feature contributes phi(|x - low|) + phi(|x - high|); distances
    are clamped below at ``config.distance_floor`` so a point sitting on a
    face yields a large but finite value under the reciprocal kernel.
    """
    if len(point) != rule.ndim:
        raise InputError(f"point has {len(point)} coordinates, rule {rule.id!r} expects {rule.ndim}")
    total = 0.0
    for iv, x in zip(rule.intervals, point):
        x = float(x)
        total += _phi(abs(x - iv.low), config) + _phi(abs(x - iv.high), config)
    return total


def tau_hat(gamma_hat_value: float) -> float:
    """Squash a nonnegative proximity value into (0, 1] with a sigmoid."""
    if gamma_hat_value >= TAU_SATURATION:
        return 1.0
    if gamma_hat_value >= 0:
        return 1.0 / (1.0 + math.exp(-gamma_hat_value))
    # Not reachable from gamma_hat (which is nonnegative) but kept stable
    # for direct callers probing the squashing function.
    e = math.exp(gamma_hat_value)
    return e / (1.0 + e)


def _resolve_ratio(same_mean: float, opp_mean: float, config: ScoreConfig) -> float | None:
    """Similarity ratio under the configured policy.

    Returns None when the strict policy saturates (a/0 with a > 0), which
    callers must map to LARGE_GAMMA_HAT regardless of gamma.
    """
    if config.ratio_policy == "smoothed":
        return (same_mean + config.kappa) / (opp_mean + config.kappa)
    if opp_mean == 0.0:
        if same_mean == 0.0:
            return 1.0
        return None
    return same_mean / opp_mean


def gamma_hat(point, rule: Rule, ruleset: Ruleset, config: ScoreConfig) -> float:
    """Similarity-weighted closeness of ``point`` to ``rule``.

    Weights :func:`gamma` by the ratio of the rule's mean similarity to
    other satisfied rules of the same label over its mean similarity to
    satisfied rules of the other label (means over empty sets are 0).
    The point must satisfy ``rule``; anything else is a caller bug.
    """
    if not satisfies(rule, point):
        raise InputError(f"gamma_hat called for rule {rule.id!r} on a point that does not satisfy it")
    same = [r for r in ruleset.rules if r.label == rule.label and r.id != rule.id and satisfies(r, point)]
    opp = [r for r in ruleset.rules if r.label != rule.label and satisfies(r, point)]
    same_mean = sum(similarity(rule, r) for r in same) / len(same) if same else 0.0
    opp_mean = sum(similarity(rule, r) for r in opp) / len(opp) if opp else 0.0
    ratio = _resolve_ratio(same_mean, opp_mean, config)
    if ratio is None:
        return LARGE_GAMMA_HAT
    return gamma(point, rule, config) * ratio


def score(point, label: int, ruleset: Ruleset, config: ScoreConfig) -> tuple[float, ScoreBreakdown]:
    """Conformity score of assigning ``label`` to ``point``, with audit trail.

    The score is the product over rules of ``label`` satisfied by the
    point of ``tau_hat(gamma_hat) * (1 - relevance)``. No satisfied rule
    of that label gives the empty product, exactly 1.0.
    """
    if label not in ruleset.classes:
        raise InputError(f"label {label!r} is not one of the ruleset classes {ruleset.classes!r}")
    if len(point) != ruleset.ndim:
        raise InputError(f"point has {len(point)} coordinates, ruleset expects {ruleset.ndim}")
    satisfied = [r for r in ruleset.rules if satisfies(r, point)]
    same = [r for r in satisfied if r.label == label]
    opp = [r for r in satisfied if r.label != label]
    factors = []
    value = 1.0
    for rule in same:
        g = gamma(point, rule, config)
        others = [r for r in same if r.id != rule.id]
        same_mean = sum(similarity(rule, r) for r in others) / len(others) if others else 0.0
        opp_mean = sum(similarity(rule, r) for r in opp) / len(opp) if opp else 0.0
        ratio = _resolve_ratio(same_mean, opp_mean, config)
        gh = LARGE_GAMMA_HAT if ratio is None else g * ratio
        th = tau_hat(gh)
        rf = 1.0 - rule.relevance
        factors.append(RuleFactor(rule.id, g, same_mean, opp_mean, gh, th, rf))
        value *= th * rf
    return value, ScoreBreakdown(tuple(factors), value)


def score_batch(X: np.ndarray, label: int, ruleset: Ruleset, config: ScoreConfig) -> np.ndarray:
    """Scores of ``label`` for every row of ``X`` (no breakdowns).

    Precomputes rule satisfaction masks and the pairwise similarity matrix
    once, then walks the rows; results match :func:`score` exactly and do
    not depend on row order.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != ruleset.ndim:
        raise InputError(f"expected points of shape (n, {ruleset.ndim}), got {X.shape}")
    if label not in ruleset.classes:
        raise InputError(f"label {label!r} is not one of the ruleset classes {ruleset.classes!r}")
    rules = ruleset.rules
    if not rules:
        return np.ones(len(X), dtype=float)
    sat = np.column_stack([satisfies_batch(r, X) for r in rules])
    sim = pairwise_similarity(ruleset)
    same_label = np.array([r.label == label for r in rules])
    rel_factor = np.array([1.0 - r.relevance for r in rules])
    out = np.ones(len(X), dtype=float)
    for i in range(len(X)):
        row = sat[i]
        same_idx = np.flatnonzero(row & same_label)
        if same_idx.size == 0:
            continue
        opp_idx = np.flatnonzero(row & ~same_label)
        value = 1.0
        for k in same_idx:
            others = same_idx[same_idx != k]
            same_mean = float(sim[k, others].mean()) if others.size else 0.0
            opp_mean = float(sim[k, opp_idx].mean()) if opp_idx.size else 0.0
            ratio = _resolve_ratio(same_mean, opp_mean, config)
            gh = LARGE_GAMMA_HAT if ratio is None else gamma(X[i], rules[k], config) * ratio
            value *= tau_hat(gh) * rel_factor[k]
        out[i] = value
    return out
