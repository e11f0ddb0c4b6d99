"""Axis-aligned rule geometry for binary rule-based classifiers.

A rule is a conjunction of per-feature intervals (a hyperrectangle) plus a
predicted class label and quality statistics measured on training data.
This module owns the geometric primitives the scoring layer builds on:
point membership, box volumes, pairwise overlap and similarity, and the
JSON artifact format used by the CLI.

Volumes always treat interval endpoints as closed: openness flags change
which points satisfy a rule, never the measure of its box.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, SchemaError

REL_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """One per-feature condition ``low .. high`` with explicit openness flags.

    The default is left-open / right-closed, matching how threshold rules
    are usually written (``low < x <= high``).
    """

    low: float
    high: float
    low_open: bool = True
    high_open: bool = False

    def __post_init__(self):
        if not (self.low <= self.high):
            raise InputError(f"interval low {self.low!r} exceeds high {self.high!r}")

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, value: float) -> bool:
        above = value > self.low if self.low_open else value >= self.low
        below = value < self.high if self.high_open else value <= self.high
        return above and below


@dataclass(frozen=True)
class FeatureBounds:
    """Global lower/upper limits of the feature space, one pair per feature."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise InputError("bounds lower/upper length mismatch")
        if len(self.lower) == 0:
            raise InputError("bounds must cover at least one feature")
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not (lo < hi):
                raise InputError(f"bounds for feature {i} must satisfy lower < upper, got [{lo!r}, {hi!r}]")

    @property
    def ndim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class Rule:
    """A labelled hyperrectangle with training-split quality statistics.

    ``relevance`` is redundant by construction (``covering * (1 - error)``)
    and is validated rather than recomputed so that serialized rules are
    checked for internal consistency when read back.
    """

    id: str
    label: int
    intervals: tuple[Interval, ...]
    covering: float = 0.0
    error: float = 0.0
    relevance: float = 0.0

    def __post_init__(self):
        if len(self.intervals) == 0:
            raise InputError(f"rule {self.id!r} has no intervals")
        for name, value in (("covering", self.covering), ("error", self.error)):
            if not (0.0 <= value <= 1.0):
                raise InputError(f"rule {self.id!r}: {name} must lie in [0, 1], got {value!r}")
        expected = self.covering * (1.0 - self.error)
        if abs(self.relevance - expected) > REL_TOL * max(1.0, abs(expected)):
            raise InputError(
                f"rule {self.id!r}: relevance {self.relevance!r} inconsistent with "
                f"covering * (1 - error) = {expected!r}"
            )

    @property
    def ndim(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class Ruleset:
    """An ordered collection of rules over one feature space.

    ``classes`` lists the two labels the model discriminates, in sorted
    order. Keeping it explicit (rather than inferring from rule labels)
    marks degenerate rulesets where one class ended up with no rules.
    """

    rules: tuple[Rule, ...]
    bounds: FeatureBounds
    feature_names: tuple[str, ...]
    classes: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if len(self.feature_names) != self.bounds.ndim:
            raise InputError("feature_names length does not match bounds")
        if len(self.classes) != 2 or self.classes[0] >= self.classes[1]:
            raise InputError(f"classes must be two distinct labels in sorted order, got {self.classes!r}")
        seen: set[str] = set()
        for rule in self.rules:
            if rule.id in seen:
                raise InputError(f"duplicate rule id {rule.id!r}")
            seen.add(rule.id)
            if rule.ndim != self.bounds.ndim:
                raise InputError(f"rule {rule.id!r} has {rule.ndim} intervals, expected {self.bounds.ndim}")
            if rule.label not in self.classes:
                raise InputError(f"rule {rule.id!r} predicts {rule.label!r}, not one of {self.classes!r}")
            for i, iv in enumerate(rule.intervals):
                if iv.low < self.bounds.lower[i] or iv.high > self.bounds.upper[i]:
                    raise InputError(
                        f"rule {rule.id!r} interval {i} [{iv.low!r}, {iv.high!r}] exceeds "
                        f"bounds [{self.bounds.lower[i]!r}, {self.bounds.upper[i]!r}]"
                    )
        for label in self.degenerate_classes():
            warnings.warn(f"ruleset has no rules for class {label}", stacklevel=2)

    @property
    def ndim(self) -> int:
        return self.bounds.ndim

    def rules_for(self, label: int) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.label == label)

    def degenerate_classes(self) -> tuple[int, ...]:
        present = {r.label for r in self.rules}
        return tuple(c for c in self.classes if c not in present)


# ---- Point membership ----

def satisfies(rule: Rule, point) -> bool:
    """True when every interval of ``rule`` admits the matching coordinate."""
    if len(point) != rule.ndim:
        raise InputError(f"point has {len(point)} coordinates, rule {rule.id!r} expects {rule.ndim}")
    return all(iv.contains(float(v)) for iv, v in zip(rule.intervals, point))


def satisfies_batch(rule: Rule, X: np.ndarray) -> np.ndarray:
    """Vectorized :func:`satisfies` over the rows of ``X``.

    Returns a boolean array of shape ``(len(X),)``. This is the single
    membership implementation the inducer and evaluator both rely on, so
    openness handling cannot drift between them.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != rule.ndim:
        raise InputError(f"expected points of shape (n, {rule.ndim}), got {X.shape}")
    mask = np.ones(len(X), dtype=bool)
    for i, iv in enumerate(rule.intervals):
        col = X[:, i]
        mask &= (col > iv.low) if iv.low_open else (col >= iv.low)
        mask &= (col < iv.high) if iv.high_open else (col <= iv.high)
    return mask


# ---- Box geometry ----

def volume(rule: Rule) -> float:
    """Product of interval widths. Zero-width intervals give volume 0."""
    out = 1.0
    for iv in rule.intervals:
        out *= iv.width
    return out


def overlaps(a: Rule, b: Rule) -> bool:
    """True when the closed boxes intersect; shared faces count as overlap."""
    _check_same_ndim(a, b)
    return all(
        max(ia.low, ib.low) <= min(ia.high, ib.high)
        for ia, ib in zip(a.intervals, b.intervals)
    )


def overlap_volume(a: Rule, b: Rule) -> float:
    """Volume of the boxes' intersection, 0 when they do not intersect.

    Face-adjacent boxes overlap with zero volume; callers that care about
    the distinction should check :func:`overlaps` separately.
    """
    _check_same_ndim(a, b)
    out = 1.0
    for ia, ib in zip(a.intervals, b.intervals):
        width = min(ia.high, ib.high) - max(ia.low, ib.low)
        if width < 0.0:
            return 0.0
        out *= width
    return out


def similarity(a: Rule, b: Rule) -> float:
    """Geometric similarity: intersection volume over union volume.

    Ranges over [0, 1]; 1 only for identical boxes, 0 for disjoint or
    merely face-adjacent ones. When both boxes have zero volume the ratio
    is undefined and reported as 0 with a warning.
    """
    va, vb = volume(a), volume(b)
    if va == 0.0 and vb == 0.0:
        warnings.warn(
            f"similarity of zero-volume rules {a.id!r} and {b.id!r} is undefined, returning 0",
            stacklevel=2,
        )
        return 0.0
    ov = overlap_volume(a, b)
    if ov == 0.0:
        return 0.0
    return ov / (va + vb - ov)


def pairwise_similarity(ruleset: Ruleset) -> np.ndarray:
    """Symmetric matrix of :func:`similarity` over all rule pairs.

    Scoring a batch of points reuses this instead of recomputing pair
    volumes per point.
    """
    m = len(ruleset.rules)
    out = np.zeros((m, m), dtype=float)
    for i in range(m):
        out[i, i] = similarity(ruleset.rules[i], ruleset.rules[i])
        for j in range(i + 1, m):
            q = similarity(ruleset.rules[i], ruleset.rules[j])
            out[i, j] = q
            out[j, i] = q
    return out


def adjacent_zero_similarity_pairs(ruleset: Ruleset) -> list[tuple[str, str]]:
    """Rule pairs that touch (share a face) yet have zero similarity.

    Pure adjacency contributes nothing to similarity-weighted scores, which
    can surprise users who expect touching rules to interact; the CLI
    surfaces this list in its induction log.
    """
    out = []
    rules = ruleset.rules
    for i in range(len(rules)):
        for j in range(i + 1, len(rules)):
            if overlaps(rules[i], rules[j]) and overlap_volume(rules[i], rules[j]) == 0.0:
                out.append((rules[i].id, rules[j].id))
    return out


def _check_same_ndim(a: Rule, b: Rule):
    if a.ndim != b.ndim:
        raise InputError(f"rules {a.id!r} and {b.id!r} have different dimensionality")


# ---- Rule quality statistics ----

def rule_stats(rule: Rule, X: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Covering, error and relevance of ``rule`` on a labelled sample.

    Covering is the fraction of same-label points the rule captures
    (TP / (TP + FN)); error is the fraction of other-label points it
    wrongly captures (FP / (TN + FP)); relevance is
    ``covering * (1 - error)``. A side of the split with no samples makes
    the corresponding rate undefined; it is reported as 0 with a warning.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(X) == 0:
        raise InputError("rule_stats needs a non-empty sample")
    if len(X) != len(y):
        raise InputError(f"X has {len(X)} rows but y has {len(y)} labels")
    sat = satisfies_batch(rule, X)
    pos = y == rule.label
    n_pos = int(pos.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0:
        warnings.warn(f"no samples labelled {rule.label} for rule {rule.id!r}; covering set to 0", stacklevel=2)
        covering = 0.0
    else:
        covering = float((sat & pos).sum()) / n_pos
    if n_neg == 0:
        warnings.warn(f"no samples of the other class for rule {rule.id!r}; error set to 0", stacklevel=2)
        error = 0.0
    else:
        error = float((sat & ~pos).sum()) / n_neg
    return covering, error, covering * (1.0 - error)


def with_stats(rule: Rule, X: np.ndarray, y: np.ndarray) -> Rule:
    """Copy of ``rule`` carrying stats measured on ``(X, y)``."""
    covering, error, relevance = rule_stats(rule, X, y)
    return Rule(rule.id, rule.label, rule.intervals, covering, error, relevance)


# ---- JSON artifact format ----

def ruleset_to_dict(ruleset: Ruleset) -> dict:
    return {
        "feature_names": list(ruleset.feature_names),
        "bounds": {
            "lower": [float(v) for v in ruleset.bounds.lower],
            "upper": [float(v) for v in ruleset.bounds.upper],
        },
        "classes": [int(c) for c in ruleset.classes],
        "rules": [
            {
                "id": r.id,
                "label": int(r.label),
                "intervals": [
                    {
                        "low": float(iv.low),
                        "high": float(iv.high),
                        "low_open": bool(iv.low_open),
                        "high_open": bool(iv.high_open),
                    }
                    for iv in r.intervals
                ],
                "covering": float(r.covering),
                "error": float(r.error),
                "relevance": float(r.relevance),
            }
            for r in ruleset.rules
        ],
    }


def ruleset_from_dict(doc: dict) -> Ruleset:
    """Parse and validate the ruleset artifact layout.

    Raises :class:`SchemaError` on any structural problem and
    :class:`InputError` when the values themselves are inconsistent
    (handled by the dataclass validators).
    """
    _expect(isinstance(doc, dict), "ruleset document must be an object")
    for key in ("feature_names", "bounds", "classes", "rules"):
        _expect(key in doc, f"ruleset document missing key {key!r}")
    names = doc["feature_names"]
    _expect(isinstance(names, list) and all(isinstance(n, str) for n in names), "feature_names must be a list of strings")
    bounds_doc = doc["bounds"]
    _expect(isinstance(bounds_doc, dict) and set(bounds_doc) >= {"lower", "upper"}, "bounds must carry lower and upper arrays")
    lower = _float_list(bounds_doc["lower"], "bounds.lower")
    upper = _float_list(bounds_doc["upper"], "bounds.upper")
    classes_doc = doc["classes"]
    _expect(
        isinstance(classes_doc, list) and len(classes_doc) == 2 and all(isinstance(c, int) for c in classes_doc),
        "classes must be a list of two integer labels",
    )
    rules = []
    _expect(isinstance(doc["rules"], list), "rules must be a list")
    for k, rule_doc in enumerate(doc["rules"]):
        where = f"rules[{k}]"
        _expect(isinstance(rule_doc, dict), f"{where} must be an object")
        for key in ("id", "label", "intervals", "covering", "error", "relevance"):
            _expect(key in rule_doc, f"{where} missing key {key!r}")
        _expect(isinstance(rule_doc["id"], str), f"{where}.id must be a string")
        _expect(isinstance(rule_doc["label"], int), f"{where}.label must be an integer")
        intervals = []
        _expect(isinstance(rule_doc["intervals"], list), f"{where}.intervals must be a list")
        for i, iv_doc in enumerate(rule_doc["intervals"]):
            iv_where = f"{where}.intervals[{i}]"
            _expect(isinstance(iv_doc, dict), f"{iv_where} must be an object")
            for key in ("low", "high", "low_open", "high_open"):
                _expect(key in iv_doc, f"{iv_where} missing key {key!r}")
            _expect(isinstance(iv_doc["low"], (int, float)), f"{iv_where}.low must be a number")
            _expect(isinstance(iv_doc["high"], (int, float)), f"{iv_where}.high must be a number")
            _expect(isinstance(iv_doc["low_open"], bool), f"{iv_where}.low_open must be a boolean")
            _expect(isinstance(iv_doc["high_open"], bool), f"{iv_where}.high_open must be a boolean")
            try:
                intervals.append(
                    Interval(float(iv_doc["low"]), float(iv_doc["high"]), iv_doc["low_open"], iv_doc["high_open"])
                )
            except InputError as exc:
                raise SchemaError(f"{iv_where}: {exc}") from exc
        for key in ("covering", "error", "relevance"):
            _expect(isinstance(rule_doc[key], (int, float)), f"{where}.{key} must be a number")
        try:
            rules.append(
                Rule(
                    rule_doc["id"],
                    rule_doc["label"],
                    tuple(intervals),
                    float(rule_doc["covering"]),
                    float(rule_doc["error"]),
                    float(rule_doc["relevance"]),
                )
            )
        except InputError as exc:
            raise SchemaError(f"{where}: {exc}") from exc
    try:
        return Ruleset(
            rules=tuple(rules),
            bounds=FeatureBounds(tuple(lower), tuple(upper)),
            feature_names=tuple(names),
            classes=(classes_doc[0], classes_doc[1]),
        )
    except InputError as exc:
        raise SchemaError(f"ruleset document is internally inconsistent: {exc}") from exc


def save_ruleset(ruleset: Ruleset, path: str | Path):
    Path(path).write_text(json.dumps(ruleset_to_dict(ruleset), indent=2) + "\n")


def load_ruleset(path: str | Path) -> Ruleset:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return ruleset_from_dict(doc)


def _expect(cond: bool, message: str):
    if not cond:
        raise SchemaError(message)


def _float_list(value, where: str) -> list[float]:
    _expect(isinstance(value, list) and all(isinstance(v, (int, float)) for v in value), f"{where} must be a list of numbers")
    return [float(v) for v in value]
