import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallmask.components import label_components
from wallmask.core import BinaryImage, PipelineConfig, PlanImage
from wallmask.maskgen import (WARN_BLANK, dump_artifacts, generate_wall_mask, superimpose)
from wallmask.metrics import dice
from wallmask.synthetic import synthetic_plan


def test_superimpose_identity_and_empty():
    rng = np.random.default_rng(0)
    f = BinaryImage(rng.random((6, 6)) < 0.5)
    assert superimpose(f, BinaryImage(np.ones((6, 6), bool))) == f
    assert superimpose(f, BinaryImage.empty(6, 6)).foreground_count == 0


def test_superimpose_intersection():
    a = np.zeros((1, 3), bool)
    b = np.zeros((1, 3), bool)
    a[0, [0, 1]] = True      # {A, B}
    b[0, [1, 2]] = True      # {B, C}
    assert superimpose(BinaryImage(a), BinaryImage(b)).bits.tolist() == [[False, True, False]]


def test_superimpose_shape_mismatch():
    with pytest.raises(ValueError):
        superimpose(BinaryImage.empty(2, 2), BinaryImage.empty(2, 3))


def test_blank_page_gives_empty_mask_and_warning():
    page = PlanImage(np.full((64, 80, 3), 255, dtype=np.uint8))
    mask, art = generate_wall_mask(page)
    assert mask.shape == (64, 80)
    assert mask.foreground_count == 0
    assert WARN_BLANK in art.warnings


def test_synthetic_plan_scores_high():
    img, truth = synthetic_plan((384, 384), seed=2)
    mask, art = generate_wall_mask(img, keep_artifacts=True)
    assert dice(mask, truth) >= 0.90
    assert not art.warnings


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["filled", "hollow"]))
def test_mask_within_filtered_binary(seed, style):
    img, _ = synthetic_plan((128, 160), seed=seed, style=style)
    mask, art = generate_wall_mask(img, keep_artifacts=True)
    assert not (mask.bits & ~art.filtered.bits).any()
    assert not (art.filtered.bits & ~art.binary.bits).any()


def test_small_text_never_in_mask():
    img, truth = synthetic_plan((384, 384), seed=5)
    mask, art = generate_wall_mask(img, keep_artifacts=True)
    lab = label_components(art.binary)
    small = np.isin(lab.labels, np.flatnonzero(lab.areas < art.summary.eca) + 1)
    assert not (mask.bits & small).any()


def test_deterministic():
    img, _ = synthetic_plan((200, 240), seed=11)
    cfg = PipelineConfig(rng_seed=3)
    a, _ = generate_wall_mask(img, cfg)
    b, _ = generate_wall_mask(img, cfg)
    assert a == b


def test_artifacts_only_kept_on_request():
    img, _ = synthetic_plan((128, 128), seed=1)
    _, lean = generate_wall_mask(img)
    assert lean.binary is None and lean.alcm is None and lean.summary is not None
    _, full = generate_wall_mask(img, keep_artifacts=True)
    assert full.quantized is not None and full.alcm is not None and full.alcm_mask is not None
    assert full.fh == lean.fh and len(full.bank) == 11


def test_fh_override_is_used():
    img, _ = synthetic_plan((128, 128), seed=1)
    _, art = generate_wall_mask(img, PipelineConfig(fh_override=7))
    assert art.fh == 7
    assert all(s.fw == 14 for s in art.bank)


def test_downscale_returns_native_size():
    img, truth = synthetic_plan((300, 260), seed=2)
    mask, _ = generate_wall_mask(img, PipelineConfig(downscale=2))
    assert mask.shape == (300, 260)
    assert dice(mask, truth) > 0.9


def test_debug_dump_layout(tmp_path):
    img, _ = synthetic_plan((96, 96), seed=0)
    mask, art = generate_wall_mask(img, keep_artifacts=True)
    dump_artifacts(mask, art, tmp_path, "plan")
    names = sorted(p.name for p in tmp_path.iterdir())
    for suffix in ("quantized", "binary", "filtered", "alcm", "mask"):
        assert f"plan.{suffix}.png" in names


def test_tiny_images_do_not_crash():
    px = np.full((2, 1, 3), 255, dtype=np.uint8)
    px[0, 0] = 0
    mask, _ = generate_wall_mask(PlanImage(px))
    assert mask.shape == (2, 1)
