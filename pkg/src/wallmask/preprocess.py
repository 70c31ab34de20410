"""Exposure correction, k-means color reduction and Otsu binarization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BinaryImage, GrayImage, PlanImage, to_grayscale

GAMMA_MIN = 0.2
GAMMA_MAX = 5.0
MAX_KMEANS_ROUNDS = 100


class DegenerateHistogramError(ValueError):
    """Raised when a histogram has no separating threshold."""

    def __init__(self, message="degenerate histogram"):
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Histogram256:
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (256,):
            raise ValueError(f"histogram needs 256 bins, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("histogram counts must be non-negative")
        c = c.astype(np.int64)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @classmethod
    def of(cls, values: np.ndarray) -> "Histogram256":
        return cls(np.bincount(np.asarray(values, dtype=np.uint8).ravel(), minlength=256))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class Palette:
    """Cluster centroids after k-means.

    ``centroids`` are the real-valued final centroids, ``colors`` the rounded
    8-bit colors actually painted. ``inertia`` holds the weighted sum of
    squared distances after each assignment step.
    """

    centroids: np.ndarray
    colors: np.ndarray
    inertia: list = field(default_factory=list)
    rounds: int = 0

    def __len__(self):
        return len(self.colors)


# ---------------------------------------------------------------------------
# Exposure

def contrast_stretch_lut(lo: int, hi: int) -> np.ndarray:
    """Float lookup table mapping [lo, hi] linearly onto [0, 255], clipped."""
    levels = np.arange(256, dtype=np.float64)
    return np.clip((levels - lo) * (255.0 / (hi - lo)), 0.0, 255.0)


def gamma_for_mean(mean: float) -> float:
    """Exponent that sends ``mean`` (0..255) to 127.5, clamped to [0.2, 5]."""
    ratio = mean / 255.0
    if ratio <= 0.0:
        return GAMMA_MIN
    if ratio >= 1.0:
        return GAMMA_MAX
    gamma = math.log(0.5) / math.log(ratio)
    return min(max(gamma, GAMMA_MIN), GAMMA_MAX)


def auto_exposure_correct(img: PlanImage) -> PlanImage:
    """Stretch luminance to the full range, then gamma-correct to mid-gray mean.

    The same monotone 8-bit tone curve is applied to every channel. A
    constant-luminance image has no defined stretch and is returned unchanged.
    """
    gray = to_grayscale(img).pixels
    lo, hi = int(gray.min()), int(gray.max())
    if lo == hi:
        return img

    stretch = contrast_stretch_lut(lo, hi)
    # Mean luma after the stretch, from per-channel histograms (linear in channels).
    n = gray.size
    channel_means = [
        float(np.bincount(img.pixels[..., ch].ravel(), minlength=256) @ stretch) / n
        for ch in range(3)
    ]
    mean_luma = 0.299 * channel_means[0] + 0.587 * channel_means[1] + 0.114 * channel_means[2]
    gamma = gamma_for_mean(mean_luma)

    curve = 255.0 * (stretch / 255.0) ** gamma
    lut = np.floor(curve + 0.5).astype(np.uint8)
    return PlanImage(lut[img.pixels])


# ---------------------------------------------------------------------------
# Color reduction

def _pack(pixels: np.ndarray) -> np.ndarray:
    p = pixels.reshape(-1, 3).astype(np.uint32)
    return (p[:, 0] << 16) | (p[:, 1] << 8) | p[:, 2]


def _unpack(codes: np.ndarray) -> np.ndarray:
    codes = codes.astype(np.uint32)
    return np.stack([(codes >> 16) & 255, (codes >> 8) & 255, codes & 255], axis=1)


def initial_centroid_indices(n_colors: int, k: int, seed: int) -> np.ndarray:
    """Seeded choice of ``k`` distinct entries among the sorted unique colors."""
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_colors, size=k, replace=False))


def _assign(colors: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmin picks the lowest index on ties.
    d2 = ((colors[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(len(colors)), labels]


def weighted_kmeans(colors: np.ndarray, weights: np.ndarray, centroids: np.ndarray,
                    max_rounds: int = MAX_KMEANS_ROUNDS):
    """Lloyd iteration over weighted points.

    Returns (centroids, labels, inertia_history, rounds). An emptied cluster is
    re-seeded at the point farthest from its current centroid.
    """
    colors = colors.astype(np.float64)
    weights = weights.astype(np.float64)
    centroids = centroids.astype(np.float64).copy()
    k = len(centroids)

    labels, dist = _assign(colors, centroids)
    history = [float(weights @ dist)]
    rounds = 0
    while rounds < max_rounds:
        rounds += 1
        mass = np.bincount(labels, weights=weights, minlength=k)
        for ch in range(3):
            sums = np.bincount(labels, weights=weights * colors[:, ch], minlength=k)
            nonempty = mass > 0
            centroids[nonempty, ch] = sums[nonempty] / mass[nonempty]
        for j in np.flatnonzero(mass == 0):
            far = int(np.argmax(dist))
            centroids[j] = colors[far]
            dist[far] = 0.0
        new_labels, dist = _assign(colors, centroids)
        history.append(float(weights @ dist))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return centroids, labels, history, rounds


def quantize_colors(img: PlanImage, k: int, seed: int) -> tuple[PlanImage, Palette]:
    """Reduce ``img`` to at most ``k`` colors with seeded k-means in RGB space.

    Clustering runs over the distinct colors weighted by their pixel counts,
    which gives exactly the pixel-level Lloyd result at a fraction of the cost.
    Images with fewer than ``k`` distinct colors keep their colors as-is.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    h, w = img.shape
    if h * w < k:
        raise ValueError(f"image has {h * w} pixels, fewer than k={k}")

    codes = _pack(img.pixels)
    uniq, inverse, counts = np.unique(codes, return_inverse=True, return_counts=True)
    colors = _unpack(uniq).astype(np.float64)

    if len(uniq) <= k:
        palette = Palette(centroids=colors, colors=colors.astype(np.uint8), inertia=[0.0], rounds=0)
        return img, palette

    start = colors[initial_centroid_indices(len(uniq), k, seed)]
    centroids, labels, history, rounds = weighted_kmeans(colors, counts, start)
    painted = np.clip(np.floor(centroids + 0.5), 0, 255).astype(np.uint8)
    out = painted[labels][inverse.reshape(-1)].reshape(h, w, 3)
    return PlanImage(out), Palette(centroids=centroids, colors=painted, inertia=history, rounds=rounds)


# ---------------------------------------------------------------------------
# Otsu

def otsu_threshold(hist: Histogram256) -> int:
    """Threshold t maximizing between-class variance, classes ``<= t`` and ``> t``.

    Exact integer arithmetic; ties go to the smallest t. With N pixels, S the
    total level sum, W0/S0 the count/sum at or below t, the between-class
    variance is proportional to (N*S0 - W0*S)^2 / (W0 * (N - W0)).
    """
    counts = [int(c) for c in hist.counts]
    n = sum(counts)
    if n <= 0:
        raise ValueError("histogram is empty")
    s = sum(i * c for i, c in enumerate(counts))

    best_t = None
    best_num, best_den = 0, 1
    w0 = s0 = 0
    for t in range(255):
        w0 += counts[t]
        s0 += t * counts[t]
        w1 = n - w0
        if w0 == 0 or w1 == 0:
            continue
        num = (n * s0 - w0 * s) ** 2
        den = w0 * w1
        if best_t is None or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    if best_t is None:
        raise DegenerateHistogramError()
    return best_t


def binarize(img: GrayImage) -> BinaryImage:
    """Dark pixels (at or below the Otsu level) become foreground."""
    t = otsu_threshold(Histogram256.of(img.pixels))
    return BinaryImage(img.pixels <= t)
