"""Dice, Dice loss, IoU and pixel accuracy, plus grouped dataset reports.

Every metric is a ratio of integer pixel counts formed once as a Fraction,
so reported floats are correctly rounded and group means are exact.
"""
from __future__ import annotations

import json
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .core import BinaryImage, read_mask

WALL_TYPES = ("filled", "empty")


@dataclass(frozen=True)
class Counts:
    pred: int
    truth: int
    inter: int
    total: int

    @property
    def union(self) -> int:
        return self.pred + self.truth - self.inter

    @property
    def matching(self) -> int:
        # true positives plus true negatives
        return self.total - (self.pred - self.inter) - (self.truth - self.inter)


def _bits(x) -> np.ndarray:
    return x.bits if isinstance(x, BinaryImage) else np.asarray(x, dtype=bool)


def counts(pred, truth) -> Counts:
    p, t = _bits(pred), _bits(truth)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: prediction {p.shape} vs truth {t.shape}")
    return Counts(pred=int(np.count_nonzero(p)), truth=int(np.count_nonzero(t)),
                  inter=int(np.count_nonzero(p & t)), total=int(p.size))


def dice_fraction(c: Counts) -> Fraction:
    denom = c.pred + c.truth
    return Fraction(1) if denom == 0 else Fraction(2 * c.inter, denom)


def dice_loss_fraction(c: Counts) -> Fraction:
    return 1 - Fraction(2 * c.inter + 1, c.pred + c.truth + 1)


def iou_fraction(c: Counts) -> Fraction:
    return Fraction(1) if c.union == 0 else Fraction(c.inter, c.union)


def accuracy_fraction(c: Counts) -> Fraction:
    return Fraction(c.matching, c.total)


def dice(pred, truth) -> float:
    """2|Y n Yhat| / (|Y| + |Yhat|); two empty masks score 1.0."""
    return float(dice_fraction(counts(pred, truth)))


def dice_loss(pred, truth) -> float:
    """1 - (2|Y n Yhat| + 1) / (|Y| + |Yhat| + 1).

    The +1 smoothing means this is not exactly ``1 - dice``.
    """
    return float(dice_loss_fraction(counts(pred, truth)))


def iou(pred, truth) -> float:
    return float(iou_fraction(counts(pred, truth)))


def pixel_accuracy(pred, truth) -> float:
    return float(accuracy_fraction(counts(pred, truth)))


# ---------------------------------------------------------------------------
# Dataset reports

@dataclass(frozen=True)
class ImageScore:
    image_id: str
    wall_type: str
    dice: Fraction
    iou: Fraction
    accuracy: Fraction

    @classmethod
    def from_counts(cls, image_id: str, wall_type: str, c: Counts) -> "ImageScore":
        return cls(image_id, wall_type, dice_fraction(c), iou_fraction(c), accuracy_fraction(c))


def _means(rows) -> Optional[dict]:
    rows = list(rows)
    if not rows:
        return None
    n = len(rows)
    return {
        "count": n,
        "mean_dice": sum((r.dice for r in rows), Fraction(0)) / n,
        "mean_iou": sum((r.iou for r in rows), Fraction(0)) / n,
        "mean_accuracy": sum((r.accuracy for r in rows), Fraction(0)) / n,
    }


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def groups(self) -> dict:
        out = {}
        for wt in WALL_TYPES:
            m = _means(r for r in self.rows if r.wall_type == wt)
            if m is not None:
                out[wt] = m
        return out

    @property
    def overall(self) -> Optional[dict]:
        return _means(self.rows)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        def floats(m):
            return None if m is None else {k: (v if k == "count" else float(v)) for k, v in m.items()}

        return {
            "metadata": {
                "metrics": ["dice", "iou", "accuracy"],
                "aggregation": "per-image arithmetic mean",
                "accuracy_aggregation": "per-image mean (not pooled pixels)",
                "empty_masks_convention": "dice = iou = 1.0 when prediction and truth are both empty",
            },
            "per_image": [
                {"id": r.image_id, "wall_type": r.wall_type, "dice": float(r.dice),
                 "iou": float(r.iou), "accuracy": float(r.accuracy)}
                for r in self.rows
            ],
            "groups": {wt: floats(m) for wt, m in self.groups.items()},
            "overall": floats(self.overall),
            "errors": list(self.errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(f".{path.name}.tmp")
        tmp.write_text(self.to_json(), encoding="utf-8")
        os.replace(tmp, path)

    def table(self) -> str:
        """Plain-text summary laid out as metric rows by wall-type columns."""
        groups = self.groups
        cols = [wt for wt in WALL_TYPES if wt in groups]
        header = f"{'':<16}" + "".join(f"{wt.capitalize() + ' walls':>16}" for wt in cols) + f"{'Overall':>16}"
        lines = [header]
        ov = self.overall
        for key, label in (("mean_dice", "Dice score %"), ("mean_iou", "IoU score %"),
                           ("mean_accuracy", "Accuracy %")):
            cells = "".join(f"{100 * float(groups[wt][key]):>15.2f}%" for wt in cols)
            overall = f"{100 * float(ov[key]):>15.2f}%" if ov else f"{'-':>16}"
            lines.append(f"{label:<16}{cells}{overall}")
        lines.append(f"{'Images':<16}" + "".join(f"{groups[wt]['count']:>16}" for wt in cols)
                     + f"{(ov['count'] if ov else 0):>16}")
        return "\n".join(lines)


MaskSource = Union[str, os.PathLike, Mapping, Callable]


def _resolve_prediction(source: MaskSource, image_id: str) -> BinaryImage:
    if callable(source) and not isinstance(source, (str, os.PathLike)):
        found = source(image_id)
    elif isinstance(source, Mapping):
        if image_id not in source:
            raise FileNotFoundError(f"no prediction for {image_id!r}")
        found = source[image_id]
    else:
        base = Path(source)
        for name in (f"{image_id}.mask.png", f"{image_id}.png"):
            if (base / name).is_file():
                found = base / name
                break
        else:
            raise FileNotFoundError(f"no prediction file for {image_id!r} in {base}")
    if isinstance(found, BinaryImage):
        return found
    return read_mask(found)


def evaluate_dataset(manifest, predictions: MaskSource) -> EvalReport:
    """Score every manifest entry carrying a ground-truth mask.

    ``predictions`` is a directory holding ``<id>.mask.png`` (or ``<id>.png``),
    a mapping from id to mask or path, or a callable taking an id. Entries
    that cannot be scored are listed in ``report.errors`` and left out of
    every mean.
    """
    report = EvalReport()
    for entry in manifest.entries:
        if entry.mask is None:
            report.errors.append({"id": entry.image_id, "error": "no ground-truth mask in manifest"})
            continue
        if entry.wall_type not in WALL_TYPES:
            report.errors.append({"id": entry.image_id, "error": "wall_type missing"})
            continue
        try:
            pred = _resolve_prediction(predictions, entry.image_id)
            truth = read_mask(entry.mask)
            c = counts(pred, truth)
        except (OSError, ValueError) as exc:
            report.errors.append({"id": entry.image_id, "error": str(exc)})
            continue
        report.rows.append(ImageScore.from_counts(entry.image_id, entry.wall_type, c))
    return report
