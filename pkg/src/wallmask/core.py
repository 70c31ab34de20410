"""Raster containers shared by every pipeline stage, plus image file I/O.

All rasters are row-major with a top-left origin and are stored as read-only
numpy arrays, so they can be handed to worker processes without copies being
mutated behind anyone's back.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image


def _frozen(arr: np.ndarray) -> np.ndarray:
    if not arr.flags.writeable and arr.flags.c_contiguous:
        return arr
    # Own the buffer so callers cannot mutate the raster afterwards.
    arr = np.array(arr, order="C", copy=True)
    arr.flags.writeable = False
    return arr


def _check_dims(height: int, width: int) -> None:
    if width < 1 or height < 1:
        raise ValueError(f"raster dimensions must be positive, got {width}x{height}")


@dataclass(frozen=True, eq=False)
class PlanImage:
    """RGB raster, ``pixels`` has shape (height, width, 3) and dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"PlanImage expects (H, W, 3) pixels, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"PlanImage expects uint8 pixels, got {px.dtype}")
        _check_dims(*px.shape[:2])
        object.__setattr__(self, "pixels", _frozen(px))

    @classmethod
    def from_buffer(cls, width: int, height: int, buffer) -> "PlanImage":
        """Build from a flat row-major sequence of RGB triples (or bytes)."""
        _check_dims(height, width)
        flat = np.frombuffer(bytes(buffer), dtype=np.uint8) if isinstance(
            buffer, (bytes, bytearray)) else np.asarray(buffer, dtype=np.uint8).reshape(-1)
        if flat.size != width * height * 3:
            raise ValueError(
                f"buffer holds {flat.size} bytes, expected {width * height * 3} for {width}x{height} RGB")
        return cls(flat.reshape(height, width, 3))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]

    def __eq__(self, other):
        return isinstance(other, PlanImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit luminance raster of shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"GrayImage expects a 2-D array, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"GrayImage expects uint8 pixels, got {px.dtype}")
        _check_dims(*px.shape)
        object.__setattr__(self, "pixels", _frozen(px))

    @classmethod
    def from_buffer(cls, width: int, height: int, buffer) -> "GrayImage":
        _check_dims(height, width)
        if isinstance(buffer, (bytes, bytearray)):
            flat = np.frombuffer(bytes(buffer), dtype=np.uint8)
        else:
            flat = np.asarray(buffer, dtype=np.int64).reshape(-1)
        if flat.size != width * height:
            raise ValueError(f"buffer holds {flat.size} values, expected {width * height}")
        if flat.size and (flat.min() < 0 or flat.max() > 255):
            raise ValueError("gray values must lie in [0, 255]")
        return cls(flat.astype(np.uint8).reshape(height, width))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Boolean raster; True marks foreground (dark ink, or wall in a mask)."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError(f"BinaryImage expects a 2-D array, got shape {b.shape}")
        if b.dtype != np.bool_:
            raise ValueError(f"BinaryImage expects bool bits, got {b.dtype}")
        _check_dims(*b.shape)
        object.__setattr__(self, "bits", _frozen(b))

    @classmethod
    def from_buffer(cls, width: int, height: int, buffer) -> "BinaryImage":
        _check_dims(height, width)
        flat = np.asarray(list(buffer), dtype=bool)
        if flat.size != width * height:
            raise ValueError(f"buffer holds {flat.size} bits, expected {width * height}")
        return cls(flat.reshape(height, width))

    @classmethod
    def empty(cls, height: int, width: int) -> "BinaryImage":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def background_count(self) -> int:
        return self.bits.size - self.foreground_count

    def __eq__(self, other):
        return isinstance(other, BinaryImage) and np.array_equal(self.bits, other.bits)


# A wall mask is a binary raster whose foreground means "wall pixel".
WallMask = BinaryImage


@dataclass(frozen=True)
class PipelineConfig:
    color_count: int = 3
    orientation_count: int = 11
    theta_min: float = -25.0
    theta_max: float = 25.0
    connectivity: int = 8
    rng_seed: int = 0
    white_threshold: int = 245
    fh_override: Optional[int] = None
    downscale: int = 1

    def __post_init__(self):
        problems = []
        if self.color_count < 2:
            problems.append("color_count must be >= 2")
        if self.orientation_count < 1:
            problems.append("orientation_count must be >= 1")
        if self.theta_min > self.theta_max:
            problems.append("theta_min must not exceed theta_max")
        if self.connectivity not in (4, 8):
            problems.append("connectivity must be 4 or 8")
        if not 0 <= self.white_threshold <= 255:
            problems.append("white_threshold must be an 8-bit level")
        if self.fh_override is not None and self.fh_override < 1:
            problems.append("fh_override must be >= 1")
        if self.downscale < 1:
            problems.append("downscale must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_mapping(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def to_grayscale(img: PlanImage) -> GrayImage:
    """BT.601 luma, rounded half-up: round(0.299 R + 0.587 G + 0.114 B)."""
    px = img.pixels.astype(np.uint32)
    # Integer weights keep the rounding exact; max value 255000 + 500 fits easily.
    luma = (299 * px[..., 0] + 587 * px[..., 1] + 114 * px[..., 2] + 500) // 1000
    return GrayImage(luma.astype(np.uint8))


def invert(img: BinaryImage) -> BinaryImage:
    return BinaryImage(~img.bits)


# ---------------------------------------------------------------------------
# File I/O. Everything is converted to row-major, top-left origin here.

def read_plan(path) -> PlanImage:
    with Image.open(path) as im:
        im.load()
        if im.mode in ("RGBA", "LA", "PA") or (im.mode == "P" and "transparency" in im.info):
            # Composite transparency onto white paper.
            rgba = im.convert("RGBA")
            canvas = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
            canvas.alpha_composite(rgba)
            rgb = canvas.convert("RGB")
        else:
            rgb = im.convert("RGB")
        return PlanImage(np.array(rgb, dtype=np.uint8))


def read_mask(path) -> BinaryImage:
    """Read a mask image; any level above 127 is foreground."""
    with Image.open(path) as im:
        gray = np.array(im.convert("L"), dtype=np.uint8)
    return BinaryImage(gray > 127)


def _atomic_save(image: Image.Image, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        image.save(tmp, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_mask(mask: BinaryImage, path) -> None:
    """Single-channel PNG, foreground 255 and background 0."""
    _atomic_save(Image.fromarray(mask.bits.astype(np.uint8) * 255, mode="L"), path)


def write_gray(img: GrayImage, path) -> None:
    _atomic_save(Image.fromarray(np.asarray(img.pixels), mode="L"), path)


def write_plan(img: PlanImage, path) -> None:
    _atomic_save(Image.fromarray(np.asarray(img.pixels), mode="RGB"), path)
