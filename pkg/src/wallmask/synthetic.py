"""Synthetic floor plans with known wall ground truth.

Walls are thick axis-aligned bands (outer ring plus interior partitions with
door gaps). Text is short thin strokes grouped into words inside rooms, and
salt noise scatters isolated dark specks. ``style="hollow"`` draws each wall
band as its outline only while the ground truth stays filled.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .core import BinaryImage, PlanImage


def _wall_bands(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    walls = np.zeros((h, w), dtype=bool)
    t = int(rng.integers(max(4, min(h, w) // 40), max(6, min(h, w) // 20) + 1))
    m = max(t, min(h, w) // 16)
    walls[m:h - m, m:m + t] = True
    walls[m:h - m, w - m - t:w - m] = True
    walls[m:m + t, m:w - m] = True
    walls[h - m - t:h - m, m:w - m] = True

    door = max(3 * t, min(h, w) // 12)
    for _ in range(int(rng.integers(1, 4))):
        if rng.random() < 0.5:
            x = int(rng.integers(w // 4, 3 * w // 4))
            walls[m:h - m, x:x + t] = True
            y = int(rng.integers(m + t + 1, max(m + t + 2, h - m - t - door)))
            walls[y:y + door, x:x + t] = False
        else:
            y = int(rng.integers(h // 4, 3 * h // 4))
            walls[y:y + t, m:w - m] = True
            x = int(rng.integers(m + t + 1, max(m + t + 2, w - m - t - door)))
            walls[y:y + t, x:x + door] = False
    return walls


def _text(h: int, w: int, walls: np.ndarray, rng: np.random.Generator, words: int) -> np.ndarray:
    ink = np.zeros((h, w), dtype=bool)
    keep_out = ndimage.binary_dilation(walls, iterations=max(4, min(h, w) // 32))
    glyph_h = max(5, min(h, w) // 50)
    if h <= glyph_h + 1 or w <= 8 * glyph_h:
        return ink                                           # no room for a word
    for _ in range(words):
        y0 = int(rng.integers(0, h - glyph_h - 1))
        x0 = int(rng.integers(0, w - 8 * glyph_h))
        x = x0
        for _ in range(int(rng.integers(2, 6))):
            shape = rng.integers(0, 4)
            if shape == 0:                                   # vertical bar
                ink[y0:y0 + glyph_h, x] = True
            elif shape == 1:                                 # horizontal bar
                ink[y0 + glyph_h // 2, x:x + glyph_h // 2 + 1] = True
            elif shape == 2:                                 # diagonal
                for k in range(glyph_h):
                    ink[y0 + k, x + k // 2] = True
            else:                                            # small box
                ink[y0, x:x + glyph_h // 2 + 1] = True
                ink[y0 + glyph_h - 1, x:x + glyph_h // 2 + 1] = True
                ink[y0:y0 + glyph_h, x] = True
            x += glyph_h // 2 + 2
    return ink & ~keep_out


def synthetic_plan(size: tuple[int, int] = (256, 256), seed: int = 0, style: str = "filled",
                   noise: float = 0.01, words: int | None = None) -> tuple[PlanImage, BinaryImage]:
    """Return (plan image, wall ground truth)."""
    if style not in ("filled", "hollow"):
        raise ValueError("style must be 'filled' or 'hollow'")
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must be a fraction")
    h, w = size
    rng = np.random.default_rng(seed)
    walls = _wall_bands(h, w, rng)
    if words is None:
        words = max(4, (h * w) // 4000)
    text = _text(h, w, walls, rng, words)

    if style == "hollow":
        drawn = walls & ~ndimage.binary_erosion(walls, iterations=2, border_value=0)
    else:
        drawn = walls

    img = rng.normal(0.0, 3.0, size=(h, w, 1)) + np.array([246.0, 243.0, 236.0])
    img[drawn] = (38, 36, 40)
    img[text] = (25, 25, 30)
    salt = rng.random((h, w)) < noise
    img[salt] = (60, 60, 60)
    pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return PlanImage(pixels), BinaryImage(walls)
