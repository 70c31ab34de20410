"""Oriented elliptical filter bank and the adaptive local connectivity map.

The map value at a pixel is the largest foreground count found inside any of
the bank's rotated ellipses centred there. Each orientation is an indicator
correlation, computed either with row-run prefix sums (exact integer work,
cost grows with the kernel's row count) or with an FFT convolution rounded
back to integers (cost independent of kernel size).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import signal

from .core import BinaryImage, PipelineConfig
from .preprocess import DegenerateHistogramError, Histogram256, otsu_threshold

# Points within this margin of the ellipse boundary count as inside, so that
# rotations by multiples of 90 degrees do not lose boundary pixels to rounding.
_BOUNDARY_EPS = 1e-9

# Above this many kernel rows the FFT path is cheaper than row runs.
RUNS_MAX_ROWS = 24


@dataclass(frozen=True)
class FilterSpec:
    fh: float
    fw: float
    theta: float

    def __post_init__(self):
        if self.fh < 1 or self.fw < 1:
            raise ValueError("filter height and width must be >= 1")

    @property
    def radius(self) -> int:
        """Half-extent of the square kernel window."""
        return int(math.floor(max(self.fw, self.fh) / 2.0 + _BOUNDARY_EPS))

    def kernel(self) -> np.ndarray:
        """Boolean window of shape (2R+1, 2R+1); rows are dy, columns dx."""
        r = self.radius
        v, u = np.mgrid[-r:r + 1, -r:r + 1].astype(np.float64)
        t = math.radians(self.theta)
        c, s = math.cos(t), math.sin(t)
        a, b = self.fw / 2.0, self.fh / 2.0
        along = (u * c + v * s) / a
        across = (-u * s + v * c) / b
        return along * along + across * across <= 1.0 + _BOUNDARY_EPS

    def offsets(self) -> np.ndarray:
        """(dy, dx) pairs of the support relative to its centre."""
        r = self.radius
        dy, dx = np.nonzero(self.kernel())
        return np.stack([dy - r, dx - r], axis=1)

    def row_runs(self) -> list[tuple[int, int, int]]:
        """Support as (dy, dx_lo, dx_hi) runs, one per non-empty kernel row."""
        r = self.radius
        runs = []
        for i, row in enumerate(self.kernel()):
            cols = np.flatnonzero(row)
            if cols.size:
                # A convex region meets every row in one contiguous run.
                assert cols[-1] - cols[0] + 1 == cols.size
                runs.append((i - r, int(cols[0]) - r, int(cols[-1]) - r))
        return runs


@dataclass(frozen=True)
class FilterBank:
    specs: tuple

    def __len__(self):
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    @property
    def thetas(self) -> list[float]:
        return [s.theta for s in self.specs]


def derive_fh(eca, shape: Optional[tuple[int, int]] = None, override: Optional[int] = None) -> int:
    """Filter height from the estimated wall component area.

    ``override`` wins outright. Otherwise FH = round(ECA) (half-up), then
    clamped to [3, min(height, width) // 4] when the raster shape is known.
    """
    if eca <= 0:
        raise ValueError("eca must be positive")
    if override is not None:
        if override < 1:
            raise ValueError("override must be >= 1")
        return int(override)
    fh = math.floor(eca + 0.5)
    fh = max(fh, 3)
    if shape is not None:
        fh = min(fh, max(1, min(shape) // 4))
    return int(fh)


def build_filter_bank(fh, cfg: PipelineConfig = PipelineConfig()) -> FilterBank:
    if fh < 1:
        raise ValueError("fh must be >= 1")
    n = cfg.orientation_count
    if n == 1:
        thetas = [(cfg.theta_min + cfg.theta_max) / 2.0]
    else:
        step = (cfg.theta_max - cfg.theta_min) / (n - 1)
        thetas = [cfg.theta_min + i * step for i in range(n)]
    return FilterBank(tuple(FilterSpec(fh=fh, fw=2 * fh, theta=t) for t in thetas))


def ellipse_support(spec: FilterSpec, center: tuple[int, int],
                    shape: Optional[tuple[int, int]] = None) -> set[tuple[int, int]]:
    """(row, col) pixels of the ellipse around ``center``, clipped to ``shape``."""
    cy, cx = center
    pts = spec.offsets() + np.array([cy, cx])
    if shape is not None:
        h, w = shape
        ok = (pts[:, 0] >= 0) & (pts[:, 0] < h) & (pts[:, 1] >= 0) & (pts[:, 1] < w)
        pts = pts[ok]
    return {(int(y), int(x)) for y, x in pts}


@dataclass(frozen=True, eq=False)
class AlcmImage:
    """Per-pixel maximum oriented foreground count.

    ``orientation`` optionally records, per pixel, the index of the first
    bank orientation reaching the maximum.
    """

    values: np.ndarray
    orientation: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @cached_property
    def normalized(self) -> np.ndarray:
        """8-bit view with the maximum scaled to 255; an all-zero map stays zero."""
        peak = int(self.values.max()) if self.values.size else 0
        if peak == 0:
            return np.zeros(self.values.shape, dtype=np.uint8)
        v = self.values.astype(np.int64)
        return ((v * 255 + peak // 2) // peak).astype(np.uint8)


def _count_runs(bits: np.ndarray, spec: FilterSpec) -> np.ndarray:
    h, w = bits.shape
    r = spec.radius
    padded = np.zeros((h + 2 * r, w + 2 * r + 1), dtype=np.int32)
    np.cumsum(np.pad(bits, r).astype(np.int32), axis=1, out=padded[:, 1:])
    out = np.zeros((h, w), dtype=np.int32)
    for dy, lo, hi in spec.row_runs():
        rows = padded[r + dy:r + dy + h]
        out += rows[:, r + hi + 1:r + hi + 1 + w]
        out -= rows[:, r + lo:r + lo + w]
    return out


def _count_fft(bits: np.ndarray, spec: FilterSpec) -> np.ndarray:
    kernel = spec.kernel().astype(np.float64)
    raw = signal.fftconvolve(bits.astype(np.float64), kernel, mode="same")
    return np.rint(np.maximum(raw, 0.0)).astype(np.int32)


def orientation_counts(img: BinaryImage, spec: FilterSpec, method: str = "auto") -> np.ndarray:
    """Foreground count inside the ellipse ``spec`` centred at every pixel."""
    if method == "auto":
        method = "runs" if len(spec.row_runs()) <= RUNS_MAX_ROWS else "fft"
    if method == "runs":
        return _count_runs(img.bits, spec)
    if method == "fft":
        return _count_fft(img.bits, spec)
    raise ValueError(f"unknown method {method!r}")


def compute_alcm(img: BinaryImage, bank: FilterBank, method: str = "auto",
                 track_orientation: bool = False) -> AlcmImage:
    best = np.zeros(img.shape, dtype=np.int32)
    which = np.zeros(img.shape, dtype=np.int16) if track_orientation else None
    if not img.bits.any():
        return AlcmImage(best, which)
    for i, spec in enumerate(bank):
        counts = orientation_counts(img, spec, method)
        if which is not None:
            which[counts > best] = i
        np.maximum(best, counts, out=best)
    return AlcmImage(best, which)


def threshold_alcm(alcm: AlcmImage) -> BinaryImage:
    """Otsu on the 8-bit view; strictly-above-threshold pixels are foreground.

    An all-zero map gives an empty mask. A map with a single non-zero level
    has no separating threshold, so every non-zero pixel is kept.
    """
    view = alcm.normalized
    if not view.any():
        return BinaryImage(np.zeros(view.shape, dtype=bool))
    try:
        t = otsu_threshold(Histogram256.of(view))
    except DegenerateHistogramError:
        return BinaryImage(view > 0)
    return BinaryImage(view > t)
