"""Shared builders for the test suite.

Most tests need small hand-made rules; ``box`` keeps their construction
one line long and guarantees the relevance field stays consistent with
covering and error.
"""

from __future__ import annotations

import numpy as np
import pytest

from ruleconf import FeatureBounds, Interval, Rule, Ruleset
from ruleconf.fixtures import toy_ruleset


def box(rule_id, label, *spans, covering=0.0, error=0.0, **interval_kw):
    """Rule from (low, high) pairs; relevance derived, never passed."""
    intervals = tuple(Interval(lo, hi, **interval_kw) for lo, hi in spans)
    return Rule(
        id=rule_id,
        label=label,
        intervals=intervals,
        covering=covering,
        error=error,
        relevance=covering * (1.0 - error),
    )


def make_ruleset(rules, lower, upper, classes=(0, 1), names=None):
    bounds = FeatureBounds(lower=tuple(lower), upper=tuple(upper))
    if names is None:
        names = tuple(f"X{i + 1}" for i in range(bounds.ndim))
    return Ruleset(rules=tuple(rules), bounds=bounds, feature_names=tuple(names), classes=classes)


@pytest.fixture
def adjacent_toy():
    return toy_ruleset("adjacent")


@pytest.fixture
def low_toy():
    return toy_ruleset("low")


@pytest.fixture
def unit_square_rule():
    # Closed on all faces so corner points count as inside.
    return box("u1", 1, (0.0, 1.0), (0.0, 1.0), low_open=False)


@pytest.fixture
def grid_points():
    def make(bounds, per_axis=21):
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(bounds.lower, bounds.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    return make
