"""Wall-mask generation for scanned floor plans, and segmentation scoring."""

__version__ = "0.1.0"

from .core import (BinaryImage, GrayImage, PipelineConfig, PlanImage, WallMask, invert,
                   read_mask, read_plan, to_grayscale, write_mask)
from .maskgen import StageArtifacts, generate_wall_mask, superimpose
from .metrics import dice, dice_loss, evaluate_dataset, iou, pixel_accuracy

__all__ = [
    "BinaryImage", "GrayImage", "PipelineConfig", "PlanImage", "WallMask", "invert",
    "read_mask", "read_plan", "to_grayscale", "write_mask",
    "StageArtifacts", "generate_wall_mask", "superimpose",
    "dice", "dice_loss", "evaluate_dataset", "iou", "pixel_accuracy",
]
