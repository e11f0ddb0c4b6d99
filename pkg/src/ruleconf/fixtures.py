"""Built-in two-feature demonstration rulesets.

Three rule layouts over X1 in [0, 1.1], X2 in [0, 1], one class-0 box and
two class-1 boxes each, differing in how the class-1 boxes relate:

* "adjacent": the boxes touch along a face but do not overlap;
* "low": a modest overlap between the class-1 boxes;
* "high": kept as a separate name for pipelines that select a regime,
  but currently shipping the same thresholds as "low".

All intervals are left-open/right-closed and all rule statistics are zero,
so scores on these fixtures isolate the geometric part of the machinery.
"""

from __future__ import annotations

from .errors import InputError
from .ruleset import FeatureBounds, Interval, Rule, Ruleset

TOY_VARIANTS = ("adjacent", "low", "high")

_BOUNDS = FeatureBounds(lower=(0.0, 0.0), upper=(1.1, 1.0))
_NAMES = ("X1", "X2")

_THRESHOLDS = {
    "adjacent": (
        ("r1", 0, (0.07, 0.27), (0.6, 1.0)),
        ("r2", 1, (0.27, 0.8), (0.4, 0.75)),
        ("r3", 1, (0.8, 1.1), (0.24, 0.55)),
    ),
    "low": (
        ("r1", 0, (0.1, 0.3), (0.6, 1.0)),
        ("r2", 1, (0.27, 0.8), (0.4, 0.75)),
        ("r3", 1, (0.65, 0.95), (0.24, 0.55)),
    ),
}
_THRESHOLDS["high"] = _THRESHOLDS["low"]


def toy_ruleset(variant: str) -> Ruleset:
    """One of the built-in layouts; see module docstring for the names."""
    if variant not in _THRESHOLDS:
        raise InputError(f"unknown toy variant {variant!r}, expected one of {TOY_VARIANTS}")
    rules = tuple(
        Rule(
            id=rule_id,
            label=label,
            intervals=(
                Interval(x1[0], x1[1], low_open=True, high_open=False),
                Interval(x2[0], x2[1], low_open=True, high_open=False),
            ),
        )
        for rule_id, label, x1, x2 in _THRESHOLDS[variant]
    )
    return Ruleset(rules=rules, bounds=_BOUNDS, feature_names=_NAMES, classes=(0, 1))
