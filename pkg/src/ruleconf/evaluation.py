"""Set-quality metrics, critical-set rule metrics, and calibration timing.

Conventions shared by every metric here: rates conditioned on a class that
never occurs are undefined and surface as None (rendered "undef" in text
reports, null in JSON), never silently as 0.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .conformal import PredictionSet, calibrate
from .errors import InputError
from .inducer import assign_class_batch
from .ruleset import Ruleset, rule_stats, satisfies_batch
from .scoring import ScoreConfig


@dataclass(frozen=True)
class RulePerformance:
    """Per-rule test-split quality: covering, error, precision."""

    rule_id: str
    label: int
    covering: float
    error: float
    precision: float | None

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "label": self.label,
            "covering": self.covering,
            "error": self.error,
            "precision": self.precision,
        }


@dataclass(frozen=True)
class EvaluationReport:
    """One row of the evaluation table plus optional critical-set metrics."""

    epsilon: float
    n_points: int
    avg_err: float
    avg_err0: float | None
    avg_err1: float | None
    avg_empty: float
    avg_single: float
    avg_double: float
    avg_single0: float
    avg_single1: float
    calib_seconds: float | None = None
    timed: bool = False
    ccs_tpr: float | None = None
    ccs_ppv: float | None = None
    ccs_f1: float | None = None
    per_rule: tuple[RulePerformance, ...] = field(default=())

    def to_dict(self, include_timing: bool = True) -> dict:
        doc = {
            "epsilon": self.epsilon,
            "n_points": self.n_points,
            "avg_err": self.avg_err,
            "avg_err0": self.avg_err0,
            "avg_err1": self.avg_err1,
            "avg_empty": self.avg_empty,
            "avg_single": self.avg_single,
            "avg_double": self.avg_double,
            "avg_single0": self.avg_single0,
            "avg_single1": self.avg_single1,
            "ccs_tpr": self.ccs_tpr,
            "ccs_ppv": self.ccs_ppv,
            "ccs_f1": self.ccs_f1,
            "per_rule": [r.to_dict() for r in self.per_rule],
        }
        if include_timing:
            doc["calib_seconds"] = self.calib_seconds
            doc["timed"] = self.timed
        return doc


def evaluate_sets(
    sets: list[PredictionSet], y: np.ndarray, epsilon: float, classes: tuple[int, int] = (0, 1)
) -> EvaluationReport:
    """Coverage-error and set-size rates of prediction sets against truth.

    avg_err counts points whose true label is missing from the set;
    avg_err0/avg_err1 condition on the true label being the negative or
    positive class. avg_single0/avg_single1 are the rates of the two
    possible singleton sets over all points, so they sum to avg_single.
    """
    y = np.asarray(y)
    if len(sets) != len(y):
        raise InputError(f"{len(sets)} prediction sets but {len(y)} labels")
    if len(sets) == 0:
        raise InputError("cannot evaluate an empty batch")
    neg, pos = classes
    bad = set(np.unique(y)) - {neg, pos}
    if bad:
        raise InputError(f"true labels {sorted(bad)} not in classes {classes!r}")
    n = len(sets)
    miss = np.array([int(label) not in s.labels for s, label in zip(sets, y)])
    sizes = np.array([len(s.labels) for s in sets])
    is_neg = y == neg
    is_pos = y == pos

    def rate_if_any(mask: np.ndarray, values: np.ndarray) -> float | None:
        return float(values[mask].mean()) if mask.any() else None

    return EvaluationReport(
        epsilon=epsilon,
        n_points=n,
        avg_err=float(miss.mean()),
        avg_err0=rate_if_any(is_neg, miss),
        avg_err1=rate_if_any(is_pos, miss),
        avg_empty=float((sizes == 0).mean()),
        avg_single=float((sizes == 1).mean()),
        avg_double=float((sizes == 2).mean()),
        avg_single0=float(np.mean([s.labels == {neg} for s in sets])),
        avg_single1=float(np.mean([s.labels == {pos} for s in sets])),
    )


def f1_score(tpr: float | None, ppv: float | None) -> float | None:
    """Harmonic mean of recall and precision; None propagates, 0/0 is 0."""
    if tpr is None or ppv is None:
        return None
    if tpr + ppv == 0.0:
        return 0.0
    return 2.0 * tpr * ppv / (tpr + ppv)


def evaluate_ccs_rules(ruleset: Ruleset, X: np.ndarray, y_true: np.ndarray) -> tuple[float | None, float | None, float | None]:
    """TPR/PPV/F1 of a retrained ruleset's positive class against ground truth.

    Predictions come from class assignment on ``ruleset`` (labels
    {-1, +1} after retraining); ground truth is positive where ``y_true``
    equals the ruleset's positive class, which for critical-set rulesets
    is +1, matching the original positive label.
    """
    y_true = np.asarray(y_true)
    if len(X) != len(y_true):
        raise InputError(f"X has {len(X)} rows but y_true has {len(y_true)} labels")
    pos = ruleset.classes[1]
    pred_pos = assign_class_batch(ruleset, X) == pos
    truth_pos = y_true == pos
    tp = int((pred_pos & truth_pos).sum())
    fn = int((~pred_pos & truth_pos).sum())
    fp = int((pred_pos & ~truth_pos).sum())
    if tp + fn == 0:
        warnings.warn("no ground-truth positives; TPR undefined", stacklevel=2)
        tpr = None
    else:
        tpr = tp / (tp + fn)
    if tp + fp == 0:
        warnings.warn("no predicted positives; PPV undefined", stacklevel=2)
        ppv = None
    else:
        ppv = tp / (tp + fp)
    return tpr, ppv, f1_score(tpr, ppv)


def rule_performance(ruleset: Ruleset, X: np.ndarray, y: np.ndarray) -> tuple[RulePerformance, ...]:
    """Per-rule covering/error/precision on a labelled split.

    Precision is the fraction of points satisfying the rule whose label
    matches the rule's; a rule nobody satisfies has undefined precision.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    out = []
    for rule in ruleset.rules:
        covering, error, _ = rule_stats(rule, X, y)
        sat = satisfies_batch(rule, X)
        n_sat = int(sat.sum())
        precision = float((y[sat] == rule.label).mean()) if n_sat else None
        out.append(RulePerformance(rule.id, rule.label, covering, error, precision))
    return tuple(out)


def time_calibration(
    ruleset: Ruleset,
    config: ScoreConfig,
    X: np.ndarray,
    y: np.ndarray,
    epsilon: float,
    repeats: int = 1,
) -> tuple[float, bool]:
    """Wall-clock seconds of one full calibration pass (scoring included).

    Uses the monotonic high-resolution clock; with repeats > 1 the median
    run is reported. An empty request (no rows or no repeats) returns
    (0.0, False) so reports can show timing as not-measured rather than
    instant. Runs single-threaded; no parallelism is used anywhere in the
    scoring path.
    """
    if repeats < 1 or len(X) == 0:
        return 0.0, False
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        calibrate(ruleset, config, X, y, epsilon)
        samples.append(time.perf_counter() - start)
    return float(np.median(samples)), True


# ---- Text rendering ----

_COLUMNS = (
    ("epsilon", "eps"),
    ("avg_err", "avgErr"),
    ("avg_err0", "avgErr0"),
    ("avg_err1", "avgErr1"),
    ("avg_empty", "avgEmpty"),
    ("avg_single", "avgSingle"),
    ("avg_double", "avgDouble"),
    ("avg_single0", "avgSingle0"),
    ("avg_single1", "avgSingle1"),
)


def _cell(value, digits: int = 3) -> str:
    if value is None:
        return "undef"
    return f"{value:.{digits}f}"


def rule_table_text(title: str, rules: tuple[RulePerformance, ...]) -> str:
    lines = [f"{title}:"]
    lines.append(f"  {'rule':<8}{'label':>6}  {'covering':>9}  {'error':>7}  {'precision':>9}")
    for r in rules:
        lines.append(
            f"  {r.rule_id:<8}{r.label:>6}  {_cell(r.covering):>9}  {_cell(r.error):>7}  {_cell(r.precision):>9}"
        )
    return "\n".join(lines)


def reports_to_text(reports: list[EvaluationReport]) -> str:
    """Aligned plain-text table, one row per epsilon, plus CCS/rule blocks."""
    rows = [[header for _, header in _COLUMNS]]
    for rep in reports:
        rows.append([_cell(getattr(rep, attr)) for attr, _ in _COLUMNS])
    widths = [max(len(row[i]) for row in rows) for i in range(len(_COLUMNS))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]

    for rep in reports:
        if rep.ccs_tpr is None and rep.ccs_ppv is None and rep.ccs_f1 is None:
            continue
        lines.append("")
        lines.append(
            f"critical-set rules @ eps={_cell(rep.epsilon)}:  "
            f"TPR={_cell(rep.ccs_tpr)}  PPV={_cell(rep.ccs_ppv)}  F1={_cell(rep.ccs_f1)}"
        )
    for rep in reports:
        if not rep.per_rule:
            continue
        lines.append("")
        lines.append(rule_table_text(f"critical-set rules on test split @ eps={_cell(rep.epsilon)}", rep.per_rule))
    return "\n".join(lines) + "\n"
