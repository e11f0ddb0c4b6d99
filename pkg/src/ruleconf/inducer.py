"""A small rule inducer: greedy sequential covering with box growing.

This is a deliberately simple stand-in for whatever rule learner produced
the model being analyzed; the rest of the package only needs *some*
deterministic way to turn labelled points into labelled boxes. Per class,
it seeds a box at an uncovered sample, snaps it to a regular grid, and
greedily extends one face at a time while the rule's error rate stays
within budget, preferring the extension that captures the most new
(weighted) class samples. Covered samples are down-weighted, not removed,
so later rules may overlap earlier ones.

Also hosts class assignment for a finished ruleset: each class is scored
by the relevance mass of its satisfied rules normalized by the relevance
mass of all its rules, and the larger ratio wins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCCSError, InputError
from .ruleset import FeatureBounds, Interval, Rule, Ruleset, rule_stats, satisfies, satisfies_batch

# Multiplier applied to the weight of every class sample a freshly accepted
# rule covers; keeps covered regions cheap but not free for later rules.
COVERED_DOWNWEIGHT = 0.125


@dataclass(frozen=True)
class InducerConfig:
    max_rules: int = 8  # per class
    min_covering: float = 0.01
    max_error: float = 0.1
    grid_resolution: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.max_rules < 1:
            raise InputError(f"max_rules must be at least 1, got {self.max_rules}")
        if not (0.0 < self.min_covering < 1.0):
            raise InputError(f"min_covering must lie in (0, 1), got {self.min_covering!r}")
        if not (0.0 <= self.max_error < 1.0):
            raise InputError(f"max_error must lie in [0, 1), got {self.max_error!r}")
        if self.grid_resolution < 2:
            raise InputError(f"grid_resolution must be at least 2, got {self.grid_resolution}")

    def to_dict(self) -> dict:
        return {
            "max_rules": self.max_rules,
            "min_covering": self.min_covering,
            "max_error": self.max_error,
            "grid_resolution": self.grid_resolution,
            "seed": self.seed,
        }


# ---- Class assignment ----

def assign_class(ruleset: Ruleset, point) -> int:
    """Predicted label for one point.

    Ties and points satisfying no rule fall back to the first (negative)
    class; the batch variant reports how often the fallback fired.
    """
    labels, unsatisfied = _assign(ruleset, np.asarray([point], dtype=float))
    if unsatisfied:
        warnings.warn(f"point satisfies no rule; assigned {ruleset.classes[0]}", stacklevel=2)
    return int(labels[0])


def assign_class_batch(ruleset: Ruleset, X: np.ndarray) -> np.ndarray:
    labels, unsatisfied = _assign(ruleset, np.asarray(X, dtype=float))
    if unsatisfied:
        warnings.warn(
            f"{unsatisfied} of {len(labels)} points satisfy no rule; assigned {ruleset.classes[0]}",
            stacklevel=2,
        )
    return labels


def _assign(ruleset: Ruleset, X: np.ndarray) -> tuple[np.ndarray, int]:
    if X.ndim != 2 or X.shape[1] != ruleset.ndim:
        raise InputError(f"expected points of shape (n, {ruleset.ndim}), got {X.shape}")
    neg, pos = ruleset.classes
    n = len(X)
    ratios = {c: np.zeros(n) for c in (neg, pos)}
    any_sat = np.zeros(n, dtype=bool)
    for label in (neg, pos):
        rules = ruleset.rules_for(label)
        total = sum(r.relevance for r in rules)
        hit_mass = np.zeros(n)
        for r in rules:
            sat = satisfies_batch(r, X)
            any_sat |= sat
            hit_mass[sat] += r.relevance
        # A class with zero total relevance mass can never win the argmax.
        ratios[label] = hit_mass / total if total > 0 else np.zeros(n)
    out = np.where(ratios[pos] > ratios[neg], pos, neg).astype(int)
    return out, int((~any_sat).sum())


# ---- Induction ----

def induce_rules(
    X: np.ndarray, y: np.ndarray, config: InducerConfig, feature_names: tuple[str, ...] | None = None
) -> Ruleset:
    """Learn a ruleset from labelled points by greedy box covering.

    Deterministic for a fixed config seed. Feature bounds are the data's
    per-column min/max; each induced interval is left-open/right-closed
    except where it sits on the global lower bound, which is closed so the
    minimum sample stays covered.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise InputError("training data must be a 2-d point array with one label per row")
    if np.isnan(X).any():
        raise InputError("training data contains NaN values")
    classes = [int(c) for c in np.unique(y)]
    if len(classes) != 2:
        raise InputError(f"need exactly two classes in training data, got {classes}")
    for c in classes:
        if (y == c).sum() < 2:
            raise InputError(f"need at least 2 samples of class {c}")
    ndim = X.shape[1]
    if feature_names is None:
        feature_names = tuple(f"x{i + 1}" for i in range(ndim))
    if len(feature_names) != ndim:
        raise InputError(f"got {len(feature_names)} feature names for {ndim} features")
    lower = X.min(axis=0)
    upper = X.max(axis=0)
    for i in range(ndim):
        if not (lower[i] < upper[i]):
            raise InputError(f"feature {feature_names[i]!r} is constant; cannot grid it")
    cuts = [np.linspace(lower[i], upper[i], config.grid_resolution + 1) for i in range(ndim)]
    rng = np.random.default_rng(config.seed)

    rules: list[Rule] = []
    rid = 1
    for label in classes:
        cls_idx = np.flatnonzero(y == label)
        n_neg = int(len(y) - len(cls_idx))
        neg_mask = y != label
        weights = np.ones(len(cls_idx))
        covered = np.zeros(len(cls_idx), dtype=bool)
        made = 0
        while made < config.max_rules and not covered.all():
            seed_local = int(rng.choice(np.flatnonzero(~covered)))
            seed_point = X[cls_idx[seed_local]]
            lo, hi = _grow_box(seed_point, cuts, X, neg_mask, n_neg, cls_idx, weights, config)
            if lo is None:
                covered[seed_local] = True  # even the seed cell breaks the error budget
                continue
            rule = _build_rule(f"r{rid}", label, lo, hi, cuts)
            covering, error, relevance = rule_stats(rule, X, y)
            if covering < config.min_covering:
                covered[seed_local] = True  # rule too small to keep; retire this seed
                continue
            rules.append(Rule(rule.id, rule.label, rule.intervals, covering, error, relevance))
            rid += 1
            made += 1
            sat_cls = satisfies_batch(rule, X[cls_idx])
            covered |= sat_cls
            weights[sat_cls] *= COVERED_DOWNWEIGHT
    return Ruleset(
        rules=tuple(rules),
        bounds=FeatureBounds(tuple(float(v) for v in lower), tuple(float(v) for v in upper)),
        feature_names=tuple(feature_names),
        classes=(classes[0], classes[1]),
    )


def _seed_cell(point: np.ndarray, cuts: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Grid cell containing the point under left-open/right-closed cells."""
    lo = np.empty(len(cuts), dtype=int)
    for i, c in enumerate(cuts):
        k = int(np.searchsorted(c, point[i], side="left")) - 1
        lo[i] = min(max(k, 0), len(c) - 2)
    return lo, lo + 1


def _box_mask(
    X: np.ndarray, cuts: list[np.ndarray], lo: np.ndarray, hi: np.ndarray
) -> np.ndarray:
    """Membership mask for the grid box [lo, hi], matching rule openness."""
    mask = np.ones(len(X), dtype=bool)
    for i, c in enumerate(cuts):
        col = X[:, i]
        mask &= (col >= c[lo[i]]) if lo[i] == 0 else (col > c[lo[i]])
        mask &= col <= c[hi[i]]
    return mask


def _grow_box(
    seed_point: np.ndarray,
    cuts: list[np.ndarray],
    X: np.ndarray,
    neg_mask: np.ndarray,
    n_neg: int,
    cls_idx: np.ndarray,
    weights: np.ndarray,
    config: InducerConfig,
):
    """Greedy face-by-face expansion from the seed's grid cell.

    Each step considers every face and every extension length along it,
    keeps those whose false-positive rate stays within max_error, and
    takes the one adding the most weighted class samples (ties go to the
    lowest feature index, then the lower face, then the shortest
    extension). Stops when no admissible extension gains anything.
    """
    ndim = len(cuts)
    lo, hi = _seed_cell(seed_point, cuts)

    cls_weight = np.zeros(len(X))
    cls_weight[cls_idx] = weights

    def error_of(mask: np.ndarray) -> float:
        return float((mask & neg_mask).sum()) / n_neg

    def gain_of(mask: np.ndarray) -> float:
        return float(cls_weight[mask].sum())

    mask = _box_mask(X, cuts, lo, hi)
    if error_of(mask) > config.max_error:
        return None, None
    current_gain = gain_of(mask)
    while True:
        best = None  # (gain, feature, side, steps, mask)
        for i in range(ndim):
            top = len(cuts[i]) - 1
            for side in (0, 1):
                limit = lo[i] if side == 0 else top - hi[i]
                for steps in range(1, limit + 1):
                    trial_lo, trial_hi = lo.copy(), hi.copy()
                    if side == 0:
                        trial_lo[i] -= steps
                    else:
                        trial_hi[i] += steps
                    trial_mask = _box_mask(X, cuts, trial_lo, trial_hi)
                    if error_of(trial_mask) > config.max_error:
                        break  # error only grows with further extension
                    gain = gain_of(trial_mask) - current_gain
                    if gain <= 0:
                        continue
                    if best is None or gain > best[0]:
                        best = (gain, i, side, steps, trial_mask)
        if best is None:
            return lo, hi
        _, i, side, steps, mask = best
        if side == 0:
            lo[i] -= steps
        else:
            hi[i] += steps
        current_gain = gain_of(mask)


def _build_rule(rule_id: str, label: int, lo: np.ndarray, hi: np.ndarray, cuts: list[np.ndarray]) -> Rule:
    intervals = tuple(
        Interval(
            low=float(cuts[i][lo[i]]),
            high=float(cuts[i][hi[i]]),
            low_open=bool(lo[i] != 0),
            high_open=False,
        )
        for i in range(len(cuts))
    )
    return Rule(rule_id, label, intervals)


# ---- Critical-set retraining ----

def retrain_on_ccs(X: np.ndarray, predictor, config: InducerConfig, relabelled: np.ndarray | None = None) -> Ruleset:
    """Relabel ``X`` by critical-set membership and induce fresh rules.

    The new problem is {+1: confidently positive, -1: everything else};
    -1 is not the original negative class and downstream reports must keep
    the two apart. Raises :class:`EmptyCCSError` when no point lands in
    the critical set. Callers that already relabelled ``X`` can pass the
    labels to skip rescoring.
    """
    from .conformal import relabel_ccs

    tilde = relabel_ccs(predictor, X) if relabelled is None else np.asarray(relabelled)
    n_pos = int((tilde == 1).sum())
    if n_pos == 0:
        raise EmptyCCSError(
            f"no point fell in the critical set at epsilon={predictor.epsilon!r}; nothing to retrain on"
        )
    if n_pos == len(tilde):
        raise InputError("every point fell in the critical set; retraining needs both labels")
    return induce_rules(X, tilde, config, feature_names=predictor.ruleset.feature_names)
