"""Command-line pipeline.

One YAML config file drives the whole flow; each command reads its inputs
from the shared output directory so the stages can run independently:

    ruleconf induce    --config run.yaml     # train rules on the train split
    ruleconf calibrate --config run.yaml     # one predictor per epsilon
    ruleconf predict   --config run.yaml     # per-point prediction sets
    ruleconf ccs       --config run.yaml     # relabel + retrain on the critical set
    ruleconf eval      --config run.yaml     # metric table, figures, timing
    ruleconf toy low                         # built-in demonstration rulesets
    ruleconf grid out/toy_low.json --label 1 # score surface dump + heatmap

Exit codes: 0 success, 2 invalid input, 3 corrupt artifact, 4 empty
critical set.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .conformal import calibrate, load_predictor, predict_sets, relabel_ccs, save_predictor
from .data import check_fractions, load_csv, stratified_split, write_csv
from .errors import (
    EXIT_EMPTY_CCS,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_SCHEMA,
    EmptyCCSError,
    InputError,
    SchemaError,
)
from .evaluation import (
    evaluate_ccs_rules,
    evaluate_sets,
    reports_to_text,
    rule_performance,
    rule_table_text,
    time_calibration,
)
from .fixtures import TOY_VARIANTS, toy_ruleset
from .inducer import InducerConfig, induce_rules, retrain_on_ccs
from .plots import save_score_heatmap, save_trend_figure
from .ruleset import (
    adjacent_zero_similarity_pairs,
    load_ruleset,
    satisfies_batch,
    save_ruleset,
)
from .scoring import ScoreConfig, score, score_batch

log = logging.getLogger("ruleconf")

DEFAULT_SPLIT = (0.6, 0.2, 0.2)
DEFAULT_EPSILONS = (0.01, 0.05, 0.1, 0.2)

_TOP_KEYS = {"data", "output_dir", "seed", "split", "epsilons", "score", "inducer", "embed_calib_scores", "figures"}
_SPLIT_KEYS = {"train", "calib", "test"}
_SCORE_KEYS = {"kernel", "alpha", "ratio_policy", "kappa", "distance_floor"}
_INDUCER_KEYS = {"max_rules", "min_covering", "max_error", "grid_resolution", "seed"}


@dataclass(frozen=True)
class PipelineConfig:
    data: str | None
    output_dir: Path
    seed: int
    split: tuple[float, float, float]
    epsilons: tuple[float, ...]
    score: ScoreConfig
    inducer: InducerConfig
    embed_calib_scores: bool = True
    figures: bool = True


def load_config(
    path: str | Path,
    seed_override: int | None = None,
    output_override: str | None = None,
    epsilon_override: float | None = None,
    require_data: bool = True,
) -> PipelineConfig:
    """Parse and validate the YAML pipeline config, applying flag overrides."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InputError(f"config {path} is not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must be a mapping of keys to values")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise InputError(f"config {path} has unknown keys {sorted(unknown)}")

    data = doc.get("data")
    if data is not None and not isinstance(data, str):
        raise InputError("config key 'data' must be a path string")
    if require_data and data is None:
        raise InputError(f"config {path} must set 'data' (path to the labelled CSV)")

    seed = seed_override if seed_override is not None else doc.get("seed", 0)
    if not isinstance(seed, int):
        raise InputError(f"seed must be an integer, got {seed!r}")

    split_doc = doc.get("split")
    if split_doc is None:
        split = DEFAULT_SPLIT
    elif isinstance(split_doc, dict):
        unknown = set(split_doc) - _SPLIT_KEYS
        if unknown:
            raise InputError(f"split has unknown keys {sorted(unknown)}")
        missing = _SPLIT_KEYS - set(split_doc)
        if missing:
            raise InputError(f"split is missing keys {sorted(missing)}")
        split = (split_doc["train"], split_doc["calib"], split_doc["test"])
    else:
        raise InputError("split must be a mapping with train/calib/test fractions")
    split = check_fractions(split)

    if epsilon_override is not None:
        epsilons: tuple[float, ...] = (float(epsilon_override),)
    else:
        eps_doc = doc.get("epsilons")
        if eps_doc is None:
            epsilons = DEFAULT_EPSILONS
        elif isinstance(eps_doc, list) and eps_doc:
            epsilons = tuple(float(e) for e in eps_doc)
        else:
            raise InputError("epsilons must be a non-empty list of numbers")
    for e in epsilons:
        if not (0.0 < e < 1.0):
            raise InputError(f"every epsilon must lie strictly in (0, 1), got {e!r}")

    score_cfg = _parse_section(doc.get("score"), _SCORE_KEYS, "score", ScoreConfig)
    inducer_doc = doc.get("inducer") or {}
    if not isinstance(inducer_doc, dict):
        raise InputError("inducer must be a mapping of option names to values")
    if "seed" not in inducer_doc:
        inducer_doc = {**inducer_doc, "seed": seed}
    inducer_cfg = _parse_section(inducer_doc, _INDUCER_KEYS, "inducer", InducerConfig)

    embed = doc.get("embed_calib_scores", True)
    figures = doc.get("figures", True)
    for name, value in (("embed_calib_scores", embed), ("figures", figures)):
        if not isinstance(value, bool):
            raise InputError(f"config key {name!r} must be true or false")

    return PipelineConfig(
        data=data,
        output_dir=Path(output_override if output_override is not None else doc.get("output_dir", "out")),
        seed=seed,
        split=split,
        epsilons=epsilons,
        score=score_cfg,
        inducer=inducer_cfg,
        embed_calib_scores=embed,
        figures=figures,
    )


def _parse_section(section, allowed: set[str], name: str, factory):
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise InputError(f"{name} must be a mapping of option names to values")
    unknown = set(section) - allowed
    if unknown:
        raise InputError(f"{name} has unknown keys {sorted(unknown)}")
    return factory(**section)


def _eps_tag(epsilon: float) -> str:
    return str(float(epsilon))


def _load_splits(cfg: PipelineConfig):
    X, y, names = load_csv(cfg.data)
    train, calib, test = stratified_split(y, cfg.split, cfg.seed)
    return names, (X[train], y[train]), (X[calib], y[calib]), (X[test], y[test])


def _require_artifact(path: Path, hint: str) -> Path:
    if not path.exists():
        raise InputError(f"missing artifact {path}; run `ruleconf {hint}` first")
    return path


# ---- Commands ----

def cmd_induce(cfg: PipelineConfig) -> int:
    names, (X_train, y_train), _, _ = _load_splits(cfg)
    ruleset = induce_rules(X_train, y_train, cfg.inducer, feature_names=names)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    save_ruleset(ruleset, cfg.output_dir / "ruleset.json")

    uncovered = {}
    for label in ruleset.classes:
        mask = y_train == label
        if not mask.any():
            continue
        hit = np.zeros(int(mask.sum()), dtype=bool)
        for rule in ruleset.rules_for(label):
            hit |= satisfies_batch(rule, X_train[mask])
        uncovered[str(label)] = int((~hit).sum())
    log_doc = {
        "train_points": int(len(X_train)),
        "n_rules": len(ruleset.rules),
        "rules_per_class": {str(c): len(ruleset.rules_for(c)) for c in ruleset.classes},
        "uncovered_by_own_class": uncovered,
        "adjacent_zero_similarity_pairs": [list(p) for p in adjacent_zero_similarity_pairs(ruleset)],
        "inducer_config": cfg.inducer.to_dict(),
    }
    _write_json(cfg.output_dir / "induce_log.json", log_doc)
    log.info("induced %d rules from %d training points", len(ruleset.rules), len(X_train))
    for pair in log_doc["adjacent_zero_similarity_pairs"]:
        log.info("rules %s and %s touch but have zero similarity", pair[0], pair[1])
    return EXIT_OK


def cmd_calibrate(cfg: PipelineConfig) -> int:
    ruleset = load_ruleset(_require_artifact(cfg.output_dir / "ruleset.json", "induce"))
    _, _, (X_calib, y_calib), _ = _load_splits(cfg)
    for epsilon in cfg.epsilons:
        predictor = calibrate(ruleset, cfg.score, X_calib, y_calib, epsilon)
        out = cfg.output_dir / f"predictor_eps{_eps_tag(epsilon)}.json"
        save_predictor(predictor, out, ruleset_ref="ruleset.json", embed_scores=cfg.embed_calib_scores)
        log.info(
            "eps=%s: s_eps=%r from %d calibration points -> %s",
            _eps_tag(epsilon), predictor.s_eps, predictor.n_c, out.name,
        )
    return EXIT_OK


def cmd_predict(cfg: PipelineConfig, explain: bool) -> int:
    names, _, _, (X_test, _) = _load_splits(cfg)
    for epsilon in cfg.epsilons:
        tag = _eps_tag(epsilon)
        predictor = load_predictor(_require_artifact(cfg.output_dir / f"predictor_eps{tag}.json", "calibrate"))
        neg, pos = predictor.ruleset.classes
        sets = predict_sets(predictor, X_test)
        out = cfg.output_dir / f"predictions_eps{tag}.csv"
        with out.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(names) + [f"score_{neg}", f"score_{pos}", "set", "in_ccs"])
            for row, pset in zip(X_test, sets):
                writer.writerow(
                    [repr(float(v)) for v in row]
                    + [repr(pset.scores[0]), repr(pset.scores[1])]
                    + [";".join(str(c) for c in sorted(pset.labels)), int(pset.in_ccs)]
                )
        log.info("eps=%s: wrote %d prediction sets -> %s", tag, len(sets), out.name)
        if explain:
            entries = []
            for i, row in enumerate(X_test):
                detail = {"row": i, "scores": {}, "set": sorted(int(c) for c in sets[i].labels), "in_ccs": sets[i].in_ccs, "breakdowns": {}}
                for label in (neg, pos):
                    value, breakdown = score(row, label, predictor.ruleset, predictor.config)
                    detail["scores"][str(label)] = value
                    detail["breakdowns"][str(label)] = breakdown.to_dict()
                entries.append(detail)
            _write_json(cfg.output_dir / f"explain_eps{tag}.json", entries)
    return EXIT_OK


def cmd_ccs(cfg: PipelineConfig) -> int:
    names, (X_train, _), _, _ = _load_splits(cfg)
    for epsilon in cfg.epsilons:
        tag = _eps_tag(epsilon)
        predictor = load_predictor(_require_artifact(cfg.output_dir / f"predictor_eps{tag}.json", "calibrate"))
        tilde = relabel_ccs(predictor, X_train)
        retrained = retrain_on_ccs(X_train, predictor, cfg.inducer, relabelled=tilde)
        write_csv(cfg.output_dir / f"ccs_relabeled_eps{tag}.csv", X_train, tilde, names, label_name="ccs_label")
        save_ruleset(retrained, cfg.output_dir / f"ccs_ruleset_eps{tag}.json")
        log.info(
            "eps=%s: %d of %d train points in the critical set; retrained %d rules",
            tag, int((tilde == 1).sum()), len(tilde), len(retrained.rules),
        )
    return EXIT_OK


def cmd_eval(cfg: PipelineConfig, figures: bool) -> int:
    ruleset = load_ruleset(_require_artifact(cfg.output_dir / "ruleset.json", "induce"))
    _, _, (X_calib, y_calib), (X_test, y_test) = _load_splits(cfg)
    reports = []
    for epsilon in cfg.epsilons:
        tag = _eps_tag(epsilon)
        predictor = load_predictor(_require_artifact(cfg.output_dir / f"predictor_eps{tag}.json", "calibrate"))
        sets = predict_sets(predictor, X_test)
        report = evaluate_sets(sets, y_test, epsilon, classes=ruleset.classes)
        ccs_path = cfg.output_dir / f"ccs_ruleset_eps{tag}.json"
        if ccs_path.exists():
            ccs_ruleset = load_ruleset(ccs_path)
            tpr, ppv, f1 = evaluate_ccs_rules(ccs_ruleset, X_test, y_test)
            report = replace(
                report,
                ccs_tpr=tpr,
                ccs_ppv=ppv,
                ccs_f1=f1,
                per_rule=rule_performance(ccs_ruleset, X_test, y_test),
            )
        reports.append(report)

    model_rules = rule_performance(ruleset, X_test, y_test)
    _write_json(
        cfg.output_dir / "report.json",
        {
            "rows": [r.to_dict(include_timing=False) for r in reports],
            "model_per_rule": [r.to_dict() for r in model_rules],
        },
    )
    text = reports_to_text(reports) + "\n" + rule_table_text("model rules on test split", model_rules) + "\n"
    (cfg.output_dir / "report.txt").write_text(text, encoding="utf-8")

    # Wall-clock timing is machine-dependent, so it lives in its own file
    # and the main report stays byte-reproducible for a fixed config.
    seconds, timed = time_calibration(ruleset, cfg.score, X_calib, y_calib, cfg.epsilons[0])
    _write_json(
        cfg.output_dir / "timing.json",
        {"calib_seconds": seconds, "timed": timed, "n_calib": int(len(X_calib)), "repeats": 1},
    )
    if figures:
        save_trend_figure(cfg.output_dir / "trends.png", reports)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_toy(variant: str, output_dir: Path) -> int:
    ruleset = toy_ruleset(variant)
    output_dir.mkdir(parents=True, exist_ok=True)
    out = output_dir / f"toy_{variant}.json"
    save_ruleset(ruleset, out)
    if variant == "high":
        log.info("the high-overlap variant currently shares its thresholds with the low-overlap one")
    for a, b in adjacent_zero_similarity_pairs(ruleset):
        log.info("rules %s and %s touch but have zero similarity", a, b)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_grid(
    ruleset_path: Path,
    label: int,
    resolution: int,
    score_cfg: ScoreConfig,
    output_dir: Path,
    figures: bool,
) -> int:
    ruleset = load_ruleset(_require_artifact(ruleset_path, "toy or induce"))
    if ruleset.ndim != 2:
        raise InputError(f"grid dumps need a 2-feature ruleset, this one has {ruleset.ndim}")
    if label not in ruleset.classes:
        raise InputError(f"label {label} is not one of the ruleset classes {ruleset.classes!r}")
    if resolution < 2:
        raise InputError(f"resolution must be at least 2, got {resolution}")
    x1 = np.linspace(ruleset.bounds.lower[0], ruleset.bounds.upper[0], resolution)
    x2 = np.linspace(ruleset.bounds.lower[1], ruleset.bounds.upper[1], resolution)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    points = np.column_stack([g1.ravel(), g2.ravel()])
    scores = score_batch(points, label, ruleset, score_cfg).reshape(resolution, resolution)

    output_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{ruleset_path.stem}_grid_label{label}"
    out_csv = output_dir / f"{stem}.csv"
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([ruleset.feature_names[0], ruleset.feature_names[1], "score"])
        for i in range(resolution):
            for j in range(resolution):
                writer.writerow([repr(float(x1[i])), repr(float(x2[j])), repr(float(scores[i, j]))])
    log.info("wrote %d grid scores -> %s", resolution * resolution, out_csv.name)
    if figures:
        save_score_heatmap(output_dir / f"{stem}.png", x1, x2, scores, ruleset, label)
    return EXIT_OK


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


# ---- Argument parsing ----

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruleconf",
        description="Conformal prediction sets and critical-set retraining for rule-based binary classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, epsilon=True, seed=True):
        p.add_argument("--config", help="YAML pipeline configuration file")
        p.add_argument("--output-dir", help="override the config output directory")
        if seed:
            p.add_argument("--seed", type=int, help="override the config seed")
        if epsilon:
            p.add_argument("--epsilon", type=float, help="run for this single miscoverage level")

    p = sub.add_parser("induce", help="learn a ruleset from the train split")
    add_common(p, epsilon=False)
    p = sub.add_parser("calibrate", help="calibrate one predictor per epsilon")
    add_common(p)
    p = sub.add_parser("predict", help="write per-point prediction sets for the test split")
    add_common(p)
    p.add_argument("--explain", action="store_true", help="also write per-rule score breakdowns")
    p = sub.add_parser("ccs", help="relabel the train split by critical-set membership and retrain")
    add_common(p)
    p = sub.add_parser("eval", help="write the evaluation report for the test split")
    add_common(p)
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p = sub.add_parser("toy", help="write a built-in demonstration ruleset")
    p.add_argument("variant", choices=TOY_VARIANTS)
    p.add_argument("--output-dir", default="out")
    p = sub.add_parser("grid", help="dump a score surface over a 2-feature ruleset")
    p.add_argument("ruleset", help="path to a ruleset artifact")
    p.add_argument("--label", type=int, default=1, help="class label to score (default 1)")
    p.add_argument("--resolution", type=int, default=200, help="grid points per axis (default 200)")
    p.add_argument("--config", help="optional YAML config supplying score settings")
    p.add_argument("--output-dir", default="out")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command in ("induce", "calibrate", "predict", "ccs", "eval"):
        if not args.config:
            raise InputError(f"`ruleconf {args.command}` needs --config")
        cfg = load_config(
            args.config,
            seed_override=getattr(args, "seed", None),
            output_override=args.output_dir,
            epsilon_override=getattr(args, "epsilon", None),
        )
        if args.command == "induce":
            return cmd_induce(cfg)
        if args.command == "calibrate":
            return cmd_calibrate(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, explain=args.explain)
        if args.command == "ccs":
            return cmd_ccs(cfg)
        return cmd_eval(cfg, figures=cfg.figures and not args.no_figures)
    if args.command == "toy":
        return cmd_toy(args.variant, Path(args.output_dir))
    if args.command == "grid":
        if args.config:
            grid_cfg = load_config(args.config, require_data=False)
            score_cfg, figures = grid_cfg.score, grid_cfg.figures
        else:
            score_cfg, figures = ScoreConfig(), True
        return cmd_grid(
            Path(args.ruleset),
            label=args.label,
            resolution=args.resolution,
            score_cfg=score_cfg,
            output_dir=Path(args.output_dir),
            figures=figures and not args.no_figures,
        )
    raise InputError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s", stream=sys.stderr)
    try:
        return _dispatch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SchemaError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except EmptyCCSError as exc:
        print(f"empty critical set: {exc}", file=sys.stderr)
        return EXIT_EMPTY_CCS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
