"""Dataset plumbing: manifests, background substitution, augmentation, k-fold splits."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import BinaryImage, PlanImage, WallMask

MANIFEST_HEADER = ["id", "image", "mask", "wall_type", "source", "split"]
WALL_TYPES = ("filled", "empty")
SOURCES = ("CVC", "RFP", "Versailles")


class ManifestError(ValueError):
    """Validation failure; ``issues`` lists every problem found."""

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("invalid manifest:\n  " + "\n  ".join(self.issues))


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image: Path
    mask: Optional[Path]
    wall_type: Optional[str]
    source: str
    split: Optional[str] = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple = ()

    def __len__(self):
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.image_id for e in self.entries]

    def by_id(self) -> dict:
        return {e.image_id: e for e in self.entries}


def parse_manifest(text: str, base_dir, check_files: bool = True) -> DatasetManifest:
    base_dir = Path(base_dir)
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ManifestError(["missing header row"])
    header = [h.strip() for h in rows[0]]
    if header != MANIFEST_HEADER:
        raise ManifestError([f"header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)}"])

    issues, entries, seen = [], [], set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(MANIFEST_HEADER):
            issues.append(f"line {lineno}: expected {len(MANIFEST_HEADER)} fields, got {len(row)}")
            continue
        image_id, image, mask, wall_type, source, split = (c.strip() for c in row)
        if not image_id:
            issues.append(f"line {lineno}: empty id")
            continue
        if image_id in seen:
            issues.append(f"line {lineno}: duplicate id {image_id!r}")
            continue
        seen.add(image_id)
        if wall_type and wall_type not in WALL_TYPES:
            issues.append(f"line {lineno}: unknown wall_type {wall_type!r} for {image_id!r}")
        if source not in SOURCES:
            issues.append(f"line {lineno}: unknown source {source!r} for {image_id!r}")
        image_path = base_dir / image if image else None
        mask_path = base_dir / mask if mask else None
        if image_path is None:
            issues.append(f"line {lineno}: {image_id!r} has no image path")
        elif check_files and not image_path.is_file():
            issues.append(f"line {lineno}: image file not found for {image_id!r}: {image_path}")
        if check_files and mask_path is not None and not mask_path.is_file():
            issues.append(f"line {lineno}: mask file not found for {image_id!r}: {mask_path}")
        entries.append(ManifestEntry(image_id, image_path, mask_path, wall_type or None,
                                     source, split or None))
    if issues:
        raise ManifestError(issues)
    return DatasetManifest(tuple(entries))


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Read a CSV manifest; relative paths resolve against its directory."""
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), path.parent, check_files)


def write_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    base = path.parent.resolve()

    def rel(p):
        if p is None:
            return ""
        p = Path(p).resolve()
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return p.as_posix()

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for e in manifest.entries:
        w.writerow([e.image_id, rel(e.image), rel(e.mask), e.wall_type or "", e.source, e.split or ""])
    path.write_text(buf.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------------------
# Background substitution

def substitute_background(img: PlanImage, texture: PlanImage, white_threshold: int = 245) -> PlanImage:
    """Replace near-white pixels (min channel >= threshold) by the tiled texture."""
    h, w = img.shape
    th, tw = texture.shape
    tiled = texture.pixels[np.arange(h)[:, None] % th, np.arange(w)[None, :] % tw]
    white = img.pixels.min(axis=2) >= white_threshold
    out = np.where(white[..., None], tiled, img.pixels)
    return PlanImage(out)


# ---------------------------------------------------------------------------
# Augmentation

@dataclass(frozen=True)
class AugmentParams:
    zoom_range: float = 0.3
    shift_range: float = 0.2
    horizontal_flip: bool = True
    vertical_flip: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.zoom_range < 1.0:
            raise ValueError("zoom_range must lie in [0, 1)")
        if not 0.0 <= self.shift_range < 1.0:
            raise ValueError("shift_range must lie in [0, 1)")


@dataclass(frozen=True)
class Transform:
    """Zoom about the image centre, then shift (pixels), then optional flips."""

    zoom: float = 1.0
    dx: float = 0.0
    dy: float = 0.0
    hflip: bool = False
    vflip: bool = False


def draw_transform(params: AugmentParams, index: int, shape: tuple[int, int]) -> Transform:
    """Transform for output ``index``; each index has its own seeded stream."""
    rng = np.random.default_rng([params.seed, index])
    h, w = shape
    zoom = 1.0 + rng.uniform(-params.zoom_range, params.zoom_range)
    dx = rng.uniform(-params.shift_range, params.shift_range) * w
    dy = rng.uniform(-params.shift_range, params.shift_range) * h
    hflip = bool(rng.random() < 0.5) and params.horizontal_flip
    vflip = bool(rng.random() < 0.5) and params.vertical_flip
    return Transform(zoom, dx, dy, hflip, vflip)


def _source_index(t: Transform, shape: tuple[int, int]):
    """Nearest source pixel for every output pixel, plus the in-canvas mask."""
    h, w = shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)
    if t.vflip:
        ys = (h - 1) - ys
    if t.hflip:
        xs = (w - 1) - xs
    sy = np.floor((ys - t.dy - cy) / t.zoom + cy + 0.5).astype(np.int64)
    sx = np.floor((xs - t.dx - cx) / t.zoom + cx + 0.5).astype(np.int64)
    oky = (sy >= 0) & (sy < h)
    okx = (sx >= 0) & (sx < w)
    return np.clip(sy, 0, h - 1), np.clip(sx, 0, w - 1), oky[:, None] & okx[None, :]


def apply_transform(img: PlanImage, mask: WallMask, t: Transform) -> tuple[PlanImage, WallMask]:
    if img.shape != mask.shape:
        raise ValueError(f"image {img.shape} and mask {mask.shape} differ in size")
    sy, sx, inside = _source_index(t, img.shape)
    grid = np.ix_(sy, sx)
    pixels = np.where(inside[..., None], img.pixels[grid], np.uint8(255))
    bits = mask.bits[grid] & inside
    return PlanImage(pixels.astype(np.uint8)), BinaryImage(bits)


def augment(img: PlanImage, mask: WallMask, params: AugmentParams, n: int) -> list:
    """``n`` (image, mask) pairs, each under one random geometric transform.

    Uncovered canvas is white in the image and background in the mask.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if img.shape != mask.shape:
        raise ValueError(f"image {img.shape} and mask {mask.shape} differ in size")
    return [apply_transform(img, mask, draw_transform(params, i, img.shape)) for i in range(n)]


# ---------------------------------------------------------------------------
# Cross-validation splits

@dataclass(frozen=True)
class Fold:
    train: tuple
    validation: tuple
    test: tuple


def kfold_split(manifest: DatasetManifest, k: int = 5, seed: int = 0) -> list[Fold]:
    """Rotating k-fold split.

    Ids are shuffled once and cut into ``k`` near-equal chunks. Fold ``i``
    tests on chunk ``i``, validates on chunk ``i + 1`` and trains on the rest,
    which for k = 5 is 3/5 train, 1/5 validation, 1/5 test. With k = 2 there
    is no chunk left for validation, so it is empty.
    """
    ids = manifest.ids if isinstance(manifest, DatasetManifest) else list(manifest)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(ids) < k:
        raise ValueError(f"need at least k={k} entries, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    chunks = [tuple(ids[j] for j in part) for part in np.array_split(order, k)]
    folds = []
    for i in range(k):
        test = chunks[i]
        if k == 2:
            val, train = (), chunks[1 - i]
        else:
            val = chunks[(i + 1) % k]
            train = tuple(x for j, c in enumerate(chunks) if j not in (i, (i + 1) % k) for x in c)
        folds.append(Fold(train=train, validation=val, test=test))
    return folds
