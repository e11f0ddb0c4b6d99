"""CSV ingestion, seeded stratified splits, and synthetic generators.

The CSV contract: UTF-8, one header row, every column numeric, label in
the last column and binary {0, 1}. Ingestion errors name the offending
line (1-indexed, header included) and column so users can fix files
without guessing.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import InputError

FRACTION_TOL = 1e-9


def load_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Read a labelled dataset; returns (X, y, feature_names)."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        if len(header) < 2:
            raise InputError(f"{path}: need at least one feature column plus the label column")
        names = tuple(h.strip() for h in header[:-1])
        label_name = header[-1].strip()
        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path} line {lineno}: expected {len(header)} fields, found {len(row)}")
            values = []
            for name, cell in zip(names, row[:-1]):
                try:
                    v = float(cell)
                except ValueError:
                    raise InputError(
                        f"{path} line {lineno}, column {name!r}: cannot parse {cell!r} as a number"
                    ) from None
                if math.isnan(v):
                    raise InputError(f"{path} line {lineno}, column {name!r}: missing value (NaN)")
                values.append(v)
            cell = row[-1].strip()
            try:
                raw_label = float(cell)
            except ValueError:
                raise InputError(
                    f"{path} line {lineno}, column {label_name!r}: cannot parse label {cell!r}"
                ) from None
            if raw_label not in (0.0, 1.0):
                raise InputError(
                    f"{path} line {lineno}, column {label_name!r}: label must be 0 or 1, got {cell!r}"
                )
            rows.append(values)
            labels.append(int(raw_label))
        if not rows:
            raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float), np.array(labels, dtype=int), names


def write_csv(path: str | Path, X: np.ndarray, y: np.ndarray, feature_names, label_name: str = "label"):
    """Write a dataset in the same layout :func:`load_csv` reads."""
    X = np.asarray(X)
    y = np.asarray(y)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + [label_name])
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def check_fractions(fractions) -> tuple[float, float, float]:
    if len(fractions) != 3:
        raise InputError(f"need exactly three split fractions, got {len(fractions)}")
    fr = tuple(float(f) for f in fractions)
    if any(f <= 0 for f in fr):
        raise InputError(f"split fractions must be positive, got {fr}")
    if abs(sum(fr) - 1.0) > FRACTION_TOL:
        raise InputError(f"split fractions must sum to 1, got {fr} (sum {sum(fr)!r})")
    return fr


def stratified_split(
    y: np.ndarray, fractions, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded stratified (train, calib, test) index split.

    Per-class counts use largest-remainder rounding so the three parts
    always partition the class exactly; indices come back sorted so split
    order matches file order.
    """
    fr = check_fractions(fractions)
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for label in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == label))
        counts = _largest_remainder(len(idx), fr)
        start = 0
        for part, count in zip(parts, counts):
            part.extend(idx[start : start + count].tolist())
            start += count
    train, calib, test = (np.array(sorted(p), dtype=int) for p in parts)
    return train, calib, test


def _largest_remainder(total: int, fractions: tuple[float, ...]) -> list[int]:
    quotas = [f * total for f in fractions]
    counts = [int(math.floor(q)) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(range(len(fractions)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


# ---- Synthetic benchmarks ----

def make_blobs(
    n: int,
    centers=((-2.0, 0.0), (2.0, 0.0)),
    sigma: float = 0.7,
    weights=(0.5, 0.5),
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Two Gaussian blobs, one per class; rows come back shuffled."""
    if n < 2:
        raise InputError("need at least two samples")
    if len(centers) != 2 or len(centers[0]) != len(centers[1]):
        raise InputError("centers must be two points of equal dimension")
    w0 = float(weights[0]) / (float(weights[0]) + float(weights[1]))
    rng = np.random.default_rng(seed)
    n0 = max(1, min(n - 1, int(round(n * w0))))
    n1 = n - n0
    X = np.vstack(
        [
            rng.normal(loc=centers[0], scale=sigma, size=(n0, len(centers[0]))),
            rng.normal(loc=centers[1], scale=sigma, size=(n1, len(centers[1]))),
        ]
    )
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    order = rng.permutation(n)
    return X[order], y[order]


def make_xor(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Uniform points on the unit square, positive where quadrants disagree.

    Linearly inseparable by construction: class 1 occupies the upper-left
    and lower-right quadrants.
    """
    if n < 4:
        raise InputError("need at least four samples")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, size=(n, 2))
    y = ((X[:, 0] > 0.5) != (X[:, 1] > 0.5)).astype(int)
    return X, y
