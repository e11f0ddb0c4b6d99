"""Score function: kernels, similarity ratio, squashing, batch parity."""

from __future__ import annotations

import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ruleconf import (
    InputError,
    LARGE_GAMMA_HAT,
    SchemaError,
    ScoreConfig,
    TAU_SATURATION,
    gamma,
    gamma_hat,
    score,
    score_batch,
    similarity,
    tau_hat,
)

from conftest import box, make_ruleset

RECIPROCAL = ScoreConfig()
SMOOTHED = ScoreConfig(kernel="exponential", alpha=1.0, ratio_policy="smoothed", kappa=1.0)


# ---- gamma ----

def test_gamma_center_of_unit_square(unit_square_rule):
    # Four faces at distance 0.5 under 1/d: 4 * 2 = 8.
    assert gamma([0.5, 0.5], unit_square_rule, RECIPROCAL) == pytest.approx(8.0, rel=1e-12)


def test_gamma_off_center(unit_square_rule):
    expected = 1 / 0.25 + 1 / 0.75 + 1 / 0.5 + 1 / 0.5
    got = gamma([0.25, 0.5], unit_square_rule, RECIPROCAL)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(9.3333333333, rel=1e-9)


def test_gamma_on_a_face_is_large_but_finite(unit_square_rule):
    g = gamma([0.0, 0.5], unit_square_rule, RECIPROCAL)
    assert math.isfinite(g)
    assert g > 1.0 / RECIPROCAL.distance_floor * 0.99


def test_gamma_exponential_kernel(unit_square_rule):
    cfg = ScoreConfig(kernel="exponential", alpha=2.0)
    expected = 2 * math.exp(-2 * 0.5) * 2  # four faces, each at distance 0.5
    assert gamma([0.5, 0.5], unit_square_rule, cfg) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("alphas", [(0.5, 1.0), (1.0, 3.0)])
def test_gamma_exponential_decreases_with_alpha(unit_square_rule, alphas):
    lo, hi = alphas
    g_lo = gamma([0.3, 0.6], unit_square_rule, ScoreConfig(kernel="exponential", alpha=lo))
    g_hi = gamma([0.3, 0.6], unit_square_rule, ScoreConfig(kernel="exponential", alpha=hi))
    assert g_hi < g_lo


def test_gamma_dimension_mismatch(unit_square_rule):
    with pytest.raises(InputError):
        gamma([0.5], unit_square_rule, RECIPROCAL)


# ---- tau_hat ----

def test_tau_hat_oracle_values():
    assert tau_hat(0.0) == 0.5
    assert tau_hat(8.0) == pytest.approx(0.9996646498695336, rel=1e-15)
    assert tau_hat(TAU_SATURATION) == 1.0
    assert tau_hat(LARGE_GAMMA_HAT) == 1.0


def test_tau_hat_monotone_and_bounded():
    values = [tau_hat(g) for g in np.linspace(0.0, 50.0, 200)]
    assert all(0.5 <= v <= 1.0 for v in values)
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_tau_hat_negative_input_stays_stable():
    # Not produced by gamma_hat, but the squashing itself must not overflow.
    assert tau_hat(-800.0) == pytest.approx(0.0, abs=1e-300)
    assert tau_hat(-1.0) == pytest.approx(1 / (1 + math.e), rel=1e-12)


# ---- gamma_hat: the similarity ratio ----

def _ratio_ruleset():
    # 1D boxes: A and B share half their union, C is the opposing class.
    a = box("A", 1, (0.0, 4.0), low_open=False)
    b = box("B", 1, (0.0, 2.0), low_open=False)
    c = box("C", 0, (0.0, 1.0), low_open=False)
    return make_ruleset([a, b, c], (0.0,), (10.0,)), a, b, c


def test_gamma_hat_scales_gamma_by_similarity_ratio():
    rs, a, b, c = _ratio_ruleset()
    x = [0.5]  # inside all three boxes
    q_same = similarity(a, b)   # 0.5
    q_opp = similarity(a, c)    # 0.25
    assert (q_same, q_opp) == (0.5, 0.25)
    expected = gamma(x, a, RECIPROCAL) * (q_same / q_opp)
    assert gamma_hat(x, a, rs, RECIPROCAL) == pytest.approx(expected, rel=1e-12)


def test_gamma_hat_ratio_doubling_example():
    # Mean similarities in a 2:1 proportion double the closeness term,
    # whatever its raw value is.
    rs, a, _, _ = _ratio_ruleset()
    x = [0.5]
    assert gamma_hat(x, a, rs, RECIPROCAL) == pytest.approx(
        2.0 * gamma(x, a, RECIPROCAL), rel=1e-12
    )


def test_gamma_hat_strict_zero_over_zero_keeps_gamma():
    # Only rule A is satisfied: both means are empty, ratio falls to 1.
    rs, a, _, _ = _ratio_ruleset()
    x = [3.0]
    assert gamma_hat(x, a, rs, RECIPROCAL) == pytest.approx(gamma(x, a, RECIPROCAL), rel=1e-12)


def test_gamma_hat_strict_positive_over_zero_saturates():
    rs, a, _, _ = _ratio_ruleset()
    x = [1.5]  # inside A and B, outside C
    assert gamma_hat(x, a, rs, RECIPROCAL) == LARGE_GAMMA_HAT


def test_gamma_hat_strict_zero_over_positive_is_zero():
    rs, a, b, c = _ratio_ruleset()
    x = [0.5]
    # For rule B the only same-class companion is A with positive
    # similarity, so exercise the 0/b branch through a ruleset where B
    # stands alone against C.
    rs_small = make_ruleset([b, c], (0.0,), (10.0,))
    assert gamma_hat(x, b, rs_small, RECIPROCAL) == 0.0
    assert tau_hat(0.0) == 0.5


def test_gamma_hat_smoothed_ratio():
    rs, a, b, c = _ratio_ruleset()
    x = [0.5]
    cfg = ScoreConfig(ratio_policy="smoothed", kappa=1.0)
    expected = gamma(x, a, cfg) * (0.5 + 1.0) / (0.25 + 1.0)
    assert gamma_hat(x, a, rs, cfg) == pytest.approx(expected, rel=1e-12)


def test_gamma_hat_smoothed_never_saturates_on_missing_opposition():
    rs, a, _, _ = _ratio_ruleset()
    x = [1.5]
    cfg = ScoreConfig(ratio_policy="smoothed", kappa=1.0)
    got = gamma_hat(x, a, rs, cfg)
    assert got == pytest.approx(gamma(x, a, cfg) * 1.5, rel=1e-12)
    assert got < LARGE_GAMMA_HAT


def test_gamma_hat_requires_satisfaction():
    rs, a, _, _ = _ratio_ruleset()
    with pytest.raises(InputError, match="does not satisfy"):
        gamma_hat([9.0], a, rs, RECIPROCAL)


# ---- score ----

def test_score_is_one_outside_all_label_rules(low_toy):
    s, breakdown = score([0.05, 0.05], 1, low_toy, RECIPROCAL)
    assert s == 1.0
    assert breakdown.per_rule == ()


def test_score_is_one_when_only_opposite_rules_hold(low_toy):
    x = [0.2, 0.8]  # inside r1 (class 0), no class-1 rule
    s0, _ = score(x, 0, low_toy, RECIPROCAL)
    s1, b1 = score(x, 1, low_toy, RECIPROCAL)
    assert s1 == 1.0 and b1.per_rule == ()
    assert s0 < 1.0


def test_score_single_rule_sigmoid_oracle(unit_square_rule):
    # One satisfied rule with zero relevance and no companions: the score
    # is exactly the squashed closeness, sigmoid(8) at the center.
    with pytest.warns(UserWarning, match="no rules for class 0"):
        rs = make_ruleset([unit_square_rule], (0.0, 0.0), (1.0, 1.0), classes=(0, 1))
    s, _ = score([0.5, 0.5], 1, rs, RECIPROCAL)
    assert s == pytest.approx(0.9996646498695336, rel=1e-12)


def test_score_applies_relevance_factor():
    r = box("r", 1, (0.0, 1.0), (0.0, 1.0), low_open=False, covering=0.8, error=0.25)
    assert r.relevance == pytest.approx(0.6, rel=1e-12)
    other = box("o", 0, (0.0, 0.0), (0.0, 0.0), low_open=False)
    rs = make_ruleset([r, other], (0.0, 0.0), (1.0, 1.0))
    s, breakdown = score([0.5, 0.5], 1, rs, RECIPROCAL)
    assert s == pytest.approx(tau_hat(8.0) * 0.4, rel=1e-12)
    assert breakdown.per_rule[0].relevance_factor == pytest.approx(0.4, rel=1e-12)


def test_score_multiplies_factors(low_toy):
    x = [0.7, 0.5]  # overlap of r2 and r3 in the low layout
    s, breakdown = score(x, 1, low_toy, SMOOTHED)
    assert len(breakdown.per_rule) == 2
    prod = 1.0
    for f in breakdown.per_rule:
        prod *= f.tau_hat * f.relevance_factor
    assert s == pytest.approx(prod, rel=1e-12)
    assert breakdown.score == s


def test_score_rejects_unknown_label(low_toy):
    with pytest.raises(InputError):
        score([0.5, 0.5], 7, low_toy, RECIPROCAL)


def test_score_rejects_wrong_width_point(low_toy):
    with pytest.raises(InputError):
        score([0.5], 1, low_toy, RECIPROCAL)


def test_breakdown_serializes_to_plain_json(low_toy):
    x = [0.7, 0.5]  # r2/r3 overlap with no opposition: strict ratio saturates
    _, breakdown = score(x, 1, low_toy, RECIPROCAL)
    doc = json.loads(json.dumps(breakdown.to_dict()))
    assert doc["score"] == breakdown.score
    assert doc["per_rule"][0]["rule_id"] == "r2"
    assert all(math.isfinite(f["gamma_hat"]) for f in doc["per_rule"])


# ---- batch parity ----

def _score_configs():
    return [
        RECIPROCAL,
        SMOOTHED,
        ScoreConfig(kernel="exponential", alpha=0.7),
        ScoreConfig(ratio_policy="smoothed", kappa=0.25),
    ]


@pytest.mark.parametrize("cfg", _score_configs())
def test_score_batch_matches_pointwise(low_toy, grid_points, cfg):
    X = grid_points(low_toy.bounds, per_axis=13)
    for label in (0, 1):
        batch = score_batch(X, label, low_toy, cfg)
        single = np.array([score(x, label, low_toy, cfg)[0] for x in X])
        assert np.allclose(batch, single, rtol=1e-12, atol=0.0)


def test_score_batch_is_order_independent(low_toy, grid_points):
    X = grid_points(low_toy.bounds, per_axis=9)
    perm = np.random.default_rng(5).permutation(len(X))
    direct = score_batch(X, 1, low_toy, SMOOTHED)
    shuffled = score_batch(X[perm], 1, low_toy, SMOOTHED)
    assert np.array_equal(direct[perm], shuffled)


def test_score_batch_empty_ruleset_is_all_ones():
    with pytest.warns(UserWarning):
        rs = make_ruleset([], (0.0,), (1.0,))
    X = np.linspace(0.0, 1.0, 7).reshape(-1, 1)
    assert np.array_equal(score_batch(X, 1, rs, RECIPROCAL), np.ones(7))


def test_score_batch_rejects_bad_shape(low_toy):
    with pytest.raises(InputError):
        score_batch(np.zeros((4, 3)), 1, low_toy, RECIPROCAL)


# ---- randomized invariants ----

@st.composite
def _random_case(draw):
    dim = draw(st.integers(1, 3))
    n_rules = draw(st.integers(1, 5))
    rules = []
    for k in range(n_rules):
        spans = []
        for _ in range(dim):
            lo = draw(st.floats(0.0, 0.8))
            width = draw(st.floats(0.05, 1.0))
            spans.append((lo, min(lo + width, 2.0)))
        covering = draw(st.floats(0.0, 1.0))
        error = draw(st.floats(0.0, 1.0))
        rules.append(
            box(f"r{k}", draw(st.sampled_from([0, 1])), *spans, covering=covering, error=error)
        )
    point = [draw(st.floats(0.0, 2.0)) for _ in range(dim)]
    label = draw(st.sampled_from([0, 1]))
    cfg = draw(st.sampled_from(_score_configs()))
    return rules, dim, point, label, cfg


@settings(max_examples=200)
@given(_random_case())
def test_score_stays_in_unit_interval(case):
    rules, dim, point, label, cfg = case
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # degenerate classes are fine here
        rs = make_ruleset(rules, (0.0,) * dim, (2.0,) * dim)
    s, breakdown = score(point, label, rs, cfg)
    assert 0.0 <= s <= 1.0
    prod = 1.0
    for f in breakdown.per_rule:
        prod *= f.tau_hat * f.relevance_factor
    assert s == pytest.approx(prod, rel=1e-12)


@settings(max_examples=100)
@given(_random_case(), st.floats(0.1, 0.9))
def test_raising_relevance_never_raises_the_score(case, shrink):
    rules, dim, point, label, cfg = case
    # Push every relevance toward 1 by shrinking (1 - relevance).
    boosted = [
        box(
            r.id,
            r.label,
            *[(iv.low, iv.high) for iv in r.intervals],
            covering=1.0 - (1.0 - r.relevance) * shrink,
            error=0.0,
        )
        for r in rules
    ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rs = make_ruleset(rules, (0.0,) * dim, (2.0,) * dim)
        rs_boosted = make_ruleset(boosted, (0.0,) * dim, (2.0,) * dim)
    s_before, _ = score(point, label, rs, cfg)
    s_after, _ = score(point, label, rs_boosted, cfg)
    assert s_after <= s_before + 1e-12


# ---- config validation and round-trip ----

def test_score_config_validation():
    with pytest.raises(InputError):
        ScoreConfig(kernel="linear")
    with pytest.raises(InputError):
        ScoreConfig(kernel="exponential")  # alpha missing
    with pytest.raises(InputError):
        ScoreConfig(ratio_policy="smoothed")  # kappa missing
    with pytest.raises(InputError):
        ScoreConfig(ratio_policy="other")
    with pytest.raises(InputError):
        ScoreConfig(distance_floor=0.0)


def test_score_config_dict_round_trip():
    cfg = SMOOTHED
    assert ScoreConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(SchemaError):
        ScoreConfig.from_dict({"kernel": "reciprocal"})
    with pytest.raises(SchemaError):
        bad = cfg.to_dict()
        bad["alpha"] = "fast"
        ScoreConfig.from_dict(bad)
