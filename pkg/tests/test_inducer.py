"""Relevance-weighted class assignment and the box-growing inducer."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruleconf import (
    CalibratedPredictor,
    EmptyCCSError,
    InducerConfig,
    InputError,
    ScoreConfig,
    assign_class,
    assign_class_batch,
    induce_rules,
    retrain_on_ccs,
    rule_stats,
)
from ruleconf.data import make_blobs, make_xor

from conftest import box, make_ruleset

CFG = ScoreConfig(kernel="exponential", alpha=1.0, ratio_policy="smoothed", kappa=1.0)


# ---- assign_class ----

def _voting_ruleset():
    # Class 1 holds relevance mass 0.8 + 0.2, class 0 holds 0.3 + 0.3.
    # The point [0.5] hits the 0.8 and one 0.3 rule.
    r_hit1 = box("a", 1, (0.0, 1.0), covering=0.8)
    r_miss1 = box("b", 1, (3.0, 4.0), covering=0.2)
    r_hit0 = box("c", 0, (0.0, 2.0), covering=0.3)
    r_miss0 = box("d", 0, (3.0, 5.0), covering=0.3)
    return make_ruleset([r_hit1, r_miss1, r_hit0, r_miss0], (0.0,), (5.0,))


def test_assign_class_uses_relevance_mass_ratios():
    rs = _voting_ruleset()
    # Ratios: 0.8 / 1.0 = 0.8 versus 0.3 / 0.6 = 0.5.
    assert assign_class(rs, [0.5]) == 1


def test_assign_class_single_sided_point():
    rs = _voting_ruleset()
    assert assign_class(rs, [1.5]) == 0  # only rule "c" admits it


def test_assign_class_tie_falls_back_to_negative_class():
    a = box("a", 1, (0.0, 1.0), covering=0.4)
    b = box("b", 0, (0.0, 1.0), covering=0.4)
    rs = make_ruleset([a, b], (0.0,), (1.0,))
    assert assign_class(rs, [0.5]) == 0


def test_assign_class_unsatisfied_point_warns_and_defaults():
    rs = _voting_ruleset()
    with pytest.warns(UserWarning, match="satisfies no rule"):
        assert assign_class(rs, [2.5]) == 0


def test_assign_class_batch_counts_fallbacks():
    rs = _voting_ruleset()
    X = np.array([[0.5], [2.5], [2.6]])
    with pytest.warns(UserWarning, match="2 of 3"):
        labels = assign_class_batch(rs, X)
    assert labels.tolist() == [1, 0, 0]


def test_assign_class_zero_mass_class_cannot_win():
    # All class-0 rules have relevance 0, so even a direct hit loses to
    # any nonzero class-1 ratio and ties resolve to class 0 otherwise.
    a = box("a", 0, (0.0, 1.0), covering=0.0)
    b = box("b", 1, (0.0, 0.5), covering=0.1)
    rs = make_ruleset([a, b], (0.0,), (1.0,))
    assert assign_class(rs, [0.25]) == 1
    assert assign_class(rs, [0.75]) == 0


@settings(max_examples=100)
@given(st.floats(0.01, 1.0), st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2))
def test_assign_class_invariant_under_global_relevance_scaling(scale, coords):
    base = [
        box("a", 1, (0.0, 0.6), (0.0, 1.0), covering=0.8, low_open=False),
        box("b", 1, (0.2, 1.0), (0.0, 0.7), covering=0.5, low_open=False),
        box("c", 0, (0.4, 1.0), (0.3, 1.0), covering=0.6, low_open=False),
        box("d", 0, (0.0, 0.5), (0.5, 1.0), covering=0.35, low_open=False),
    ]
    scaled = [
        box(r.id, r.label, *[(iv.low, iv.high) for iv in r.intervals],
            covering=r.covering * scale, low_open=False)
        for r in base
    ]
    rs = make_ruleset(base, (0.0, 0.0), (1.0, 1.0))
    rs_scaled = make_ruleset(scaled, (0.0, 0.0), (1.0, 1.0))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # fallback warnings are irrelevant here
        assert assign_class(rs, coords) == assign_class(rs_scaled, coords)


def test_assign_class_rejects_bad_shapes():
    rs = _voting_ruleset()
    with pytest.raises(InputError):
        assign_class(rs, [0.5, 0.5])
    with pytest.raises(InputError):
        assign_class_batch(rs, np.zeros((2, 3)))


# ---- induce_rules ----

def _inducer(seed=0, **kw):
    base = dict(max_rules=4, min_covering=0.01, max_error=0.1, grid_resolution=12, seed=seed)
    base.update(kw)
    return InducerConfig(**base)


def test_induce_on_separated_blobs():
    X, y = make_blobs(600, seed=5)
    rs = induce_rules(X, y, _inducer(max_rules=1))
    for label in (0, 1):
        got = rs.rules_for(label)
        assert len(got) == 1
        assert got[0].covering >= 0.8
        assert got[0].error <= 0.1


def test_induced_stats_survive_reaudit():
    X, y = make_blobs(500, seed=6)
    rs = induce_rules(X, y, _inducer())
    for r in rs.rules:
        covering, error, relevance = rule_stats(r, X, y)
        assert (r.covering, r.error, r.relevance) == (covering, error, relevance)
        assert r.error <= 0.1
        assert r.covering >= 0.01


def test_induced_rules_stay_within_bounds_and_grid():
    X, y = make_blobs(400, seed=7)
    cfg = _inducer(grid_resolution=8)
    rs = induce_rules(X, y, cfg)
    cuts = [np.linspace(X[:, i].min(), X[:, i].max(), cfg.grid_resolution + 1) for i in range(2)]
    for r in rs.rules:
        for i, iv in enumerate(r.intervals):
            assert iv.low in cuts[i] and iv.high in cuts[i]
            assert rs.bounds.lower[i] <= iv.low < iv.high <= rs.bounds.upper[i]


def test_induce_is_deterministic():
    X, y = make_blobs(500, seed=8)
    a = induce_rules(X, y, _inducer(seed=3))
    b = induce_rules(X, y, _inducer(seed=3))
    assert a == b


def test_induce_covers_xor_with_multiple_boxes():
    X, y = make_xor(800, seed=9)
    rs = induce_rules(X, y, _inducer(grid_resolution=4))
    assert len(rs.rules_for(1)) >= 2
    # The two positive quadrants cannot be captured by one axis box.
    predicted = assign_class_batch(rs, X)
    assert (predicted == y).mean() >= 0.9


def test_induce_recovers_a_single_box():
    rng = np.random.default_rng(10)
    inside = rng.uniform([0.3, 0.5], [0.6, 0.9], size=(300, 2))
    outside = np.vstack([
        rng.uniform([0.0, 0.0], [1.0, 0.45], size=(150, 2)),
        rng.uniform([0.65, 0.0], [1.0, 1.0], size=(150, 2)),
    ])
    X = np.vstack([inside, outside])
    y = np.array([1] * len(inside) + [0] * len(outside))
    cfg = _inducer(max_rules=1, grid_resolution=20)
    rs = induce_rules(X, y, cfg)
    rule = rs.rules_for(1)[0]
    # Recovered faces sit within one grid cell of the generating box.
    cell = [(X[:, i].max() - X[:, i].min()) / cfg.grid_resolution for i in range(2)]
    for i, (lo, hi) in enumerate([(0.3, 0.6), (0.5, 0.9)]):
        assert abs(rule.intervals[i].low - lo) <= cell[i] + 1e-9
        assert abs(rule.intervals[i].high - hi) <= cell[i] + 1e-9


def test_induce_respects_max_rules_per_class():
    X, y = make_xor(600, seed=11)
    rs = induce_rules(X, y, _inducer(max_rules=2, grid_resolution=6))
    assert len(rs.rules_for(0)) <= 2
    assert len(rs.rules_for(1)) <= 2


def test_induce_rejects_degenerate_inputs():
    X = np.random.default_rng(0).random((10, 2))
    with pytest.raises(InputError, match="two classes"):
        induce_rules(X, np.ones(10, dtype=int), _inducer())
    with pytest.raises(InputError, match="at least 2"):
        induce_rules(X, np.array([0] * 9 + [1]), _inducer())
    y = np.array([0, 1] * 5)
    X_const = X.copy()
    X_const[:, 1] = 0.5
    with pytest.raises(InputError, match="constant"):
        induce_rules(X_const, y, _inducer())
    X_nan = X.copy()
    X_nan[3, 0] = math.nan
    with pytest.raises(InputError, match="NaN"):
        induce_rules(X_nan, y, _inducer())
    with pytest.raises(InputError):
        induce_rules(X, y[:-1], _inducer())


def test_induce_names_features():
    X, y = make_blobs(200, seed=12)
    rs = induce_rules(X, y, _inducer(), feature_names=("height", "weight"))
    assert rs.feature_names == ("height", "weight")
    with pytest.raises(InputError):
        induce_rules(X, y, _inducer(), feature_names=("only_one",))


def test_inducer_config_validation():
    with pytest.raises(InputError):
        InducerConfig(max_rules=0, min_covering=0.1, max_error=0.1, grid_resolution=4, seed=0)
    with pytest.raises(InputError):
        InducerConfig(max_rules=2, min_covering=0.0, max_error=0.1, grid_resolution=4, seed=0)
    with pytest.raises(InputError):
        InducerConfig(max_rules=2, min_covering=0.1, max_error=1.0, grid_resolution=4, seed=0)
    with pytest.raises(InputError):
        InducerConfig(max_rules=2, min_covering=0.1, max_error=0.1, grid_resolution=1, seed=0)


# ---- retrain_on_ccs ----

def _blob_predictor(s_eps):
    X, y = make_blobs(500, seed=13)
    rs = induce_rules(X, y, _inducer())
    return X, y, CalibratedPredictor(ruleset=rs, config=CFG, epsilon=0.05, s_eps=s_eps, n_c=99)


def test_retrain_on_ccs_yields_plus_minus_one_problem():
    X, y, pred = _blob_predictor(s_eps=0.9)
    rs2 = retrain_on_ccs(X, pred, _inducer())
    assert rs2.classes == (-1, 1)
    assert {r.label for r in rs2.rules} <= {-1, 1}
    assert rs2.feature_names == pred.ruleset.feature_names
    for r in rs2.rules:
        for i, iv in enumerate(r.intervals):
            assert rs2.bounds.lower[i] <= iv.low < iv.high <= rs2.bounds.upper[i]


def test_retrain_accepts_precomputed_labels():
    X, y, pred = _blob_predictor(s_eps=0.9)
    from ruleconf import relabel_ccs

    tilde = relabel_ccs(pred, X)
    assert retrain_on_ccs(X, pred, _inducer(), relabelled=tilde) == retrain_on_ccs(X, pred, _inducer())


def test_retrain_on_empty_ccs_is_an_error():
    X, y, pred = _blob_predictor(s_eps=math.inf)
    # Rank overflow admits both labels everywhere, so nothing is critical.
    with pytest.raises(EmptyCCSError, match="critical set"):
        retrain_on_ccs(X, pred, _inducer())


def test_retrain_with_everything_critical_is_an_error():
    X, y, pred = _blob_predictor(s_eps=0.9)
    with pytest.raises(InputError, match="both labels"):
        retrain_on_ccs(X, pred, _inducer(), relabelled=np.ones(len(X), dtype=int))
