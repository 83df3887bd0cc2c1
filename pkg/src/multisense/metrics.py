"""Confusion matrices, support-weighted precision/recall/F1, and heatmap export.

Per-class ratios are computed with exact rational arithmetic and only
rounded to float at the end, so identities such as
``accuracy == weighted recall`` hold exactly rather than to within rounding.
"""
from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ArgumentError, DimensionError, FormatError


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows = actual class, columns = predicted class

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


def confusion(actual, predicted, n_classes: int) -> ConfusionMatrix:
    actual = np.asarray(actual, dtype=np.int64).reshape(-1)
    predicted = np.asarray(predicted, dtype=np.int64).reshape(-1)
    if actual.shape != predicted.shape:
        raise DimensionError(f"{actual.size} actual labels vs {predicted.size} predictions")
    for arr in (actual, predicted):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ArgumentError(f"label outside [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (actual, predicted), 1)
    return ConfusionMatrix(counts)


def _fractions(cm: ConfusionMatrix):
    if cm.total <= 0:
        raise ArgumentError("confusion matrix is empty")
    c = cm.counts
    diag = [int(x) for x in np.diag(c)]
    rows = [int(x) for x in c.sum(axis=1)]
    cols = [int(x) for x in c.sum(axis=0)]
    return diag, rows, cols, cm.total


def accuracy(cm: ConfusionMatrix) -> float:
    diag, _, _, total = _fractions(cm)
    return float(Fraction(sum(diag), total))


def weighted_prf(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Precision, recall and F1 averaged over classes with true-class support as weights.

    Undefined per-class ratios (empty column or row, p + r == 0) count as 0.
    """
    diag, rows, cols, total = _fractions(cm)
    p_sum = r_sum = f_sum = Fraction(0)
    for d, r, c in zip(diag, rows, cols):
        if r == 0:
            continue
        p = Fraction(d, c) if c else Fraction(0)
        rec = Fraction(d, r)
        f = 2 * p * rec / (p + rec) if p + rec else Fraction(0)
        p_sum += r * p
        r_sum += r * rec
        f_sum += r * f
    return float(p_sum / total), float(r_sum / total), float(f_sum / total)


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float

    @property
    def n_classes(self) -> int:
        return self.confusion.n_classes


def evaluate(actual, predicted, n_classes: int) -> EvalReport:
    cm = confusion(actual, predicted, n_classes)
    return EvalReport(cm, accuracy(cm), *weighted_prf(cm))


def write_confusion_csv(cm: ConfusionMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["actual\\predicted", *range(cm.n_classes)])
        for i, row in enumerate(cm.counts):
            w.writerow([i, *(int(x) for x in row)])


def read_confusion_csv(path: str | os.PathLike) -> ConfusionMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return ConfusionMatrix(np.array([[int(x) for x in r[1:]] for r in rows[1:]], dtype=np.int64))


def heatmap_pixels(cm: ConfusionMatrix) -> np.ndarray:
    """Row-normalised grey levels: 0 (black) for a full row share, 255 for none; empty rows are white."""
    c = cm.counts.astype(np.float64)
    rows = c.sum(axis=1, keepdims=True)
    share = np.divide(c, rows, out=np.zeros_like(c), where=rows > 0)
    return np.rint(255.0 * (1.0 - share)).astype(np.uint8)


def write_pgm(pixels: np.ndarray, path: str | os.PathLike, zoom: int = 1) -> None:
    if zoom < 1:
        raise ArgumentError("zoom must be a positive integer")
    img = np.kron(pixels, np.ones((zoom, zoom), dtype=np.uint8)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    blob = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+255\s", blob)
    if m is None:
        raise FormatError(f"{path}: not an 8-bit binary PGM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(blob, dtype=np.uint8, count=w * h, offset=m.end()).reshape(h, w)


def export_heatmap(cm: ConfusionMatrix, path: str | os.PathLike, zoom: int = 1) -> tuple[Path, Path]:
    """Write ``<path>.csv`` with exact counts and ``<path>.pgm`` with the heatmap."""
    base = Path(path)
    csv_path, pgm_path = base.with_suffix(".csv"), base.with_suffix(".pgm")
    try:
        write_confusion_csv(cm, csv_path)
        write_pgm(heatmap_pixels(cm), pgm_path, zoom)
    except OSError as exc:
        raise OSError(f"cannot write heatmap to {base}: {exc}") from exc
    return csv_path, pgm_path
