"""End-to-end wall mask generation.

    exposure -> k-means colors -> gray -> Otsu -> component filtration
    -> filter bank -> ALCM -> Otsu on ALCM -> AND with filtered binary
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from . import alcm as alcm_mod
from .components import (ComponentSummary, filter_components, label_components,
                         removed_overlay, summarize)
from .core import (BinaryImage, GrayImage, PipelineConfig, PlanImage, WallMask,
                   to_grayscale, write_gray, write_mask, write_plan)
from .preprocess import DegenerateHistogramError, auto_exposure_correct, binarize, quantize_colors

log = logging.getLogger(__name__)

WARN_BLANK = "blank-page"
WARN_NO_COMPONENTS = "no-components"


@dataclass
class StageArtifacts:
    """Warnings and scalar stage results; raster intermediates only when kept."""

    warnings: list = field(default_factory=list)
    summary: Optional[ComponentSummary] = None
    fh: Optional[int] = None
    bank: Optional[alcm_mod.FilterBank] = None
    corrected: Optional[PlanImage] = None
    quantized: Optional[PlanImage] = None
    gray: Optional[GrayImage] = None
    binary: Optional[BinaryImage] = None
    filtered: Optional[BinaryImage] = None
    alcm: Optional[alcm_mod.AlcmImage] = None
    alcm_mask: Optional[BinaryImage] = None


def superimpose(filtered: BinaryImage, alcm_mask: BinaryImage) -> WallMask:
    """Keep filtered ink only where the thresholded ALCM is on."""
    if filtered.shape != alcm_mask.shape:
        raise ValueError(f"shape mismatch: {filtered.shape} vs {alcm_mask.shape}")
    return BinaryImage(filtered.bits & alcm_mask.bits)


def _downscaled(img: PlanImage, factor: int) -> PlanImage:
    h, w = img.shape
    size = (max(1, -(-w // factor)), max(1, -(-h // factor)))
    small = Image.fromarray(np.asarray(img.pixels)).resize(size, Image.BOX)
    return PlanImage(np.array(small, dtype=np.uint8))


def _upscaled(mask: BinaryImage, factor: int, shape: tuple[int, int]) -> BinaryImage:
    big = np.repeat(np.repeat(mask.bits, factor, axis=0), factor, axis=1)
    return BinaryImage(big[:shape[0], :shape[1]])


def generate_wall_mask(img: PlanImage, cfg: PipelineConfig = PipelineConfig(),
                       keep_artifacts: bool = False,
                       alcm_method: str = "auto") -> tuple[WallMask, StageArtifacts]:
    """Run the full chain on one plan.

    Blank pages and pages without components give an empty mask and a
    warning in ``artifacts.warnings`` instead of raising.
    """
    if cfg.downscale > 1:
        mask, art = generate_wall_mask(_downscaled(img, cfg.downscale),
                                       replace(cfg, downscale=1), keep_artifacts, alcm_method)
        return _upscaled(mask, cfg.downscale, img.shape), art

    art = StageArtifacts()
    keep = keep_artifacts
    empty = BinaryImage.empty(*img.shape)

    corrected = auto_exposure_correct(img)
    quantized, _ = quantize_colors(corrected, cfg.color_count, cfg.rng_seed) \
        if img.shape[0] * img.shape[1] >= cfg.color_count else (corrected, None)
    gray = to_grayscale(quantized)
    if keep:
        art.corrected, art.quantized, art.gray = corrected, quantized, gray

    try:
        binary = binarize(gray)
    except DegenerateHistogramError:
        log.warning("degenerate histogram, page looks blank")
        art.warnings.append(WARN_BLANK)
        return empty, art

    labeling = label_components(binary, cfg.connectivity)
    if labeling.count == 0:
        art.warnings.append(WARN_NO_COMPONENTS)
        if keep:
            art.binary = binary
        return empty, art
    summary = summarize(labeling)
    filtered = filter_components(binary, labeling, summary.eca)
    art.summary = summary
    del labeling

    fh = alcm_mod.derive_fh(summary.eca, img.shape, cfg.fh_override)
    bank = alcm_mod.build_filter_bank(fh, cfg)
    art.fh, art.bank = fh, bank

    connectivity_map = alcm_mod.compute_alcm(filtered, bank, method=alcm_method)
    alcm_mask = alcm_mod.threshold_alcm(connectivity_map)
    mask = superimpose(filtered, alcm_mask)
    if keep:
        art.binary, art.filtered = binary, filtered
        art.alcm, art.alcm_mask = connectivity_map, alcm_mask
    return mask, art


def dump_artifacts(mask: WallMask, art: StageArtifacts, out_dir, stem: str) -> list:
    """Write the debug rasters that exist; returns the paths written."""
    out_dir = Path(out_dir)
    written = []
    if art.quantized is not None:
        p = out_dir / f"{stem}.quantized.png"
        write_plan(art.quantized, p)
        written.append(p)
    if art.binary is not None:
        p = out_dir / f"{stem}.binary.png"
        write_mask(art.binary, p)
        written.append(p)
    if art.filtered is not None:
        p = out_dir / f"{stem}.filtered.png"
        write_mask(art.filtered, p)
        written.append(p)
        p = out_dir / f"{stem}.removed.png"
        write_plan(PlanImage(removed_overlay(art.binary, art.filtered)), p)
        written.append(p)
    if art.alcm is not None:
        p = out_dir / f"{stem}.alcm.png"
        write_gray(GrayImage(art.alcm.normalized), p)
        written.append(p)
    p = out_dir / f"{stem}.mask.png"
    write_mask(mask, p)
    written.append(p)
    return written
