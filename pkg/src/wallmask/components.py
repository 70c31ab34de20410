"""Connected-component labeling and area-based noise filtration."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import ndimage

from .core import BinaryImage

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


class NoComponentsError(ValueError):
    def __init__(self, message="no components"):
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class ComponentLabeling:
    """Label grid plus per-component areas and boxes.

    ``areas[i]`` and ``boxes[i]`` describe label ``i + 1``. Boxes are
    (row0, col0, row1, col1) with exclusive upper bounds.
    """

    labels: np.ndarray
    areas: np.ndarray
    boxes: np.ndarray

    @property
    def count(self) -> int:
        return len(self.areas)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape


@dataclass(frozen=True)
class ComponentSummary:
    """Median (MDA), mean (AVA) and estimated wall (ECA) component areas, exact."""

    mda: Fraction
    ava: Fraction
    eca: Fraction
    count: int

    @property
    def eca_value(self) -> float:
        return float(self.eca)


def label_components(img: BinaryImage, connectivity: int = 8) -> ComponentLabeling:
    """Label maximal connected foreground regions, numbered in raster order of first pixel."""
    if connectivity not in _STRUCTURES:
        raise ValueError("connectivity must be 4 or 8")
    labels, n = ndimage.label(img.bits, structure=_STRUCTURES[connectivity])
    labels = labels.astype(np.int32, copy=False)
    areas = np.bincount(labels.ravel(), minlength=n + 1)[1:].astype(np.int64)
    boxes = np.zeros((n, 4), dtype=np.int64)
    for i, sl in enumerate(ndimage.find_objects(labels, max_label=n)):
        boxes[i] = (sl[0].start, sl[1].start, sl[0].stop, sl[1].stop)
    labels.flags.writeable = False
    areas.flags.writeable = False
    boxes.flags.writeable = False
    return ComponentLabeling(labels=labels, areas=areas, boxes=boxes)


def summarize(labeling: ComponentLabeling) -> ComponentSummary:
    """MDA = interpolated median area, AVA = mean area, ECA = MDA + AVA."""
    areas = sorted(int(a) for a in labeling.areas)
    n = len(areas)
    if n == 0:
        raise NoComponentsError()
    mid = n // 2
    mda = Fraction(areas[mid]) if n % 2 else Fraction(areas[mid - 1] + areas[mid], 2)
    ava = Fraction(sum(areas), n)
    return ComponentSummary(mda=mda, ava=ava, eca=mda + ava, count=n)


def filter_components(img: BinaryImage, labeling: ComponentLabeling, eca) -> BinaryImage:
    """Drop every component whose area is strictly below ``eca``."""
    if labeling.shape != img.shape:
        raise ValueError(f"labeling shape {labeling.shape} does not match image {img.shape}")
    if not isinstance(eca, Fraction):
        eca = Fraction(eca)
    # Areas are integers, so area >= eca exactly when area >= ceil(eca).
    cutoff = max(math.ceil(eca), 0)
    keep = np.zeros(labeling.count + 1, dtype=bool)
    keep[1:] = labeling.areas >= cutoff
    return BinaryImage(keep[labeling.labels] & img.bits)


def removed_overlay(img: BinaryImage, filtered: BinaryImage) -> np.ndarray:
    """RGB debug view: kept ink black, removed components red, paper white."""
    out = np.full(img.shape + (3,), 255, dtype=np.uint8)
    out[filtered.bits] = (0, 0, 0)
    out[img.bits & ~filtered.bits] = (255, 0, 0)
    return out
