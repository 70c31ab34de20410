import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallmask.core import BinaryImage, PlanImage
from wallmask.dataset import (AugmentParams, DatasetManifest, ManifestEntry, ManifestError,
                              Transform, apply_transform, augment, draw_transform, kfold_split,
                              load_manifest, substitute_background, write_manifest)

HEADER = "id,image,mask,wall_type,source,split\n"


def touch(path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"")
    return path


def test_empty_manifest(tmp_path):
    (tmp_path / "m.csv").write_text(HEADER)
    assert len(load_manifest(tmp_path / "m.csv")) == 0


def test_manifest_resolves_relative_paths(tmp_path):
    touch(tmp_path / "img" / "a.png")
    touch(tmp_path / "gt" / "a.png")
    (tmp_path / "m.csv").write_text(HEADER + "a,img/a.png,gt/a.png,filled,CVC,\n")
    m = load_manifest(tmp_path / "m.csv")
    e = m.entries[0]
    assert e.image == tmp_path / "img" / "a.png"
    assert e.mask == tmp_path / "gt" / "a.png"
    assert (e.wall_type, e.source, e.split) == ("filled", "CVC", None)


def test_manifest_duplicate_id_named(tmp_path):
    touch(tmp_path / "a.png")
    (tmp_path / "m.csv").write_text(HEADER + "dup,a.png,,filled,CVC,\ndup,a.png,,empty,RFP,\n")
    with pytest.raises(ManifestError, match="duplicate id 'dup'"):
        load_manifest(tmp_path / "m.csv")


def test_manifest_itemizes_all_problems(tmp_path):
    (tmp_path / "m.csv").write_text(
        HEADER + "x,missing.png,,filled,CVC,\ny,missing2.png,,round,CVC,\nz,a.png,,empty,Mars,\n")
    with pytest.raises(ManifestError) as err:
        load_manifest(tmp_path / "m.csv")
    text = "\n".join(err.value.issues)
    assert "image file not found for 'x'" in text
    assert "unknown wall_type 'round'" in text
    assert "unknown source 'Mars'" in text
    assert len(err.value.issues) >= 4


def test_manifest_header_is_exact(tmp_path):
    (tmp_path / "m.csv").write_text("id,image,mask,type,source,split\n")
    with pytest.raises(ManifestError, match="header"):
        load_manifest(tmp_path / "m.csv")


def test_versailles_sized_manifest(tmp_path):
    rows = []
    for i in range(500):
        touch(tmp_path / "v" / f"plan{i:03d}.png")
        rows.append(f"v{i:03d},v/plan{i:03d}.png,,,Versailles,")
    (tmp_path / "m.csv").write_text(HEADER + "\n".join(rows) + "\n")
    m = load_manifest(tmp_path / "m.csv")
    assert len(m) == 500
    assert all(e.wall_type is None for e in m.entries)


def test_manifest_write_roundtrip(tmp_path):
    touch(tmp_path / "a.png")
    m = DatasetManifest((ManifestEntry("a", tmp_path / "a.png", None, "empty", "RFP", "train"),))
    write_manifest(m, tmp_path / "out.csv")
    assert (tmp_path / "out.csv").read_text() == HEADER + "a,a.png,,empty,RFP,train\n"
    assert load_manifest(tmp_path / "out.csv") == m


# -- background substitution ------------------------------------------------

def texture():
    t = np.zeros((2, 3, 3), dtype=np.uint8)
    t[..., 0] = np.arange(6).reshape(2, 3) * 10
    t[..., 1] = 100
    t[..., 2] = 50
    return PlanImage(t)


def test_white_page_becomes_tiled_texture():
    img = PlanImage(np.full((5, 7, 3), 255, dtype=np.uint8))
    out = substitute_background(img, texture())
    expected = np.tile(texture().pixels, (3, 3, 1))[:5, :7]
    assert np.array_equal(out.pixels, expected)


def test_no_white_pixels_unchanged():
    img = PlanImage(np.full((4, 4, 3), 244, dtype=np.uint8))
    assert substitute_background(img, texture()) == img


def test_half_white_half_black():
    px = np.zeros((4, 6, 3), dtype=np.uint8)
    px[:, 3:] = 250
    out = substitute_background(PlanImage(px), texture()).pixels
    assert not out[:, :3].any()
    tiled = np.tile(texture().pixels, (2, 2, 1))[:4, :6]
    assert np.array_equal(out[:, 3:], tiled[:, 3:])


def test_min_channel_rule():
    px = np.array([[[255, 255, 244], [245, 245, 245]]], dtype=np.uint8)
    out = substitute_background(PlanImage(px), texture()).pixels
    assert tuple(out[0, 0]) == (255, 255, 244)
    assert tuple(out[0, 1]) == tuple(texture().pixels[0, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 255))
def test_dark_pixels_never_altered(seed, threshold):
    rng = np.random.default_rng(seed)
    px = rng.integers(0, 256, size=(9, 11, 3), dtype=np.uint8)
    out = substitute_background(PlanImage(px), texture(), threshold).pixels
    dark = px.min(axis=2) < threshold
    assert np.array_equal(out[dark], px[dark])


# -- augmentation -----------------------------------------------------------

def rect_pair(h=40, w=60):
    px = np.full((h, w, 3), 255, dtype=np.uint8)
    bits = np.zeros((h, w), dtype=bool)
    bits[10:18, 20:36] = True
    px[bits] = (0, 0, 0)
    return PlanImage(px), BinaryImage(bits)


def test_zero_params_are_identity():
    img, mask = rect_pair()
    params = AugmentParams(0.0, 0.0, False, False, seed=4)
    pairs = augment(img, mask, params, 3)
    assert len(pairs) == 3
    assert all(a == img and b == mask for a, b in pairs)


def test_horizontal_flip_commutes():
    img, mask = rect_pair()
    a, b = apply_transform(img, mask, Transform(hflip=True))
    assert np.array_equal(b.bits, np.fliplr(mask.bits))
    assert np.array_equal(a.pixels, np.fliplr(img.pixels))


def test_shift_moves_centroid():
    img, mask = rect_pair(h=40, w=60)
    _, moved = apply_transform(img, mask, Transform(zoom=1.0, dx=0.1 * 60, dy=0.0))
    before = np.argwhere(mask.bits).mean(axis=0)
    after = np.argwhere(moved.bits).mean(axis=0)
    assert after[1] - before[1] == pytest.approx(6.0, abs=0.5)
    assert after[0] == pytest.approx(before[0])


def test_out_of_canvas_fill():
    img, mask = rect_pair()
    a, b = apply_transform(img, mask, Transform(dx=-59))
    assert (a.pixels[:, 1:] == 255).all()
    assert not b.bits[:, 1:].any()


def test_zoom_scales_rectangle_area():
    img, mask = rect_pair(h=81, w=81)
    _, big = apply_transform(img, mask, Transform(zoom=1.3))
    assert big.foreground_count == pytest.approx(mask.foreground_count * 1.3 ** 2, rel=0.15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_image_and_mask_share_geometry(seed):
    img, mask = rect_pair()
    (a, b), = augment(img, mask, AugmentParams(seed=seed), 1)
    # The black rectangle in the image lands exactly where the mask does.
    assert np.array_equal(a.pixels[..., 0] == 0, b.bits)


def test_streams_are_per_index():
    img, mask = rect_pair()
    p = AugmentParams(seed=9)
    five = augment(img, mask, p, 5)
    three = augment(img, mask, p, 3)
    assert all(x[0] == y[0] and x[1] == y[1] for x, y in zip(five, three))
    assert draw_transform(p, 0, (40, 60)) != draw_transform(p, 1, (40, 60))


def test_drawn_ranges():
    p = AugmentParams(zoom_range=0.3, shift_range=0.2, seed=1)
    for i in range(200):
        t = draw_transform(p, i, (100, 50))
        assert 0.7 <= t.zoom <= 1.3
        assert abs(t.dx) <= 0.2 * 50 and abs(t.dy) <= 0.2 * 100


def test_augment_validation():
    img, mask = rect_pair()
    assert augment(img, mask, AugmentParams(), 0) == []
    with pytest.raises(ValueError):
        AugmentParams(zoom_range=1.0)
    with pytest.raises(ValueError):
        augment(img, BinaryImage.empty(3, 3), AugmentParams(), 1)


# -- k-fold -----------------------------------------------------------------

def ids_manifest(n):
    return DatasetManifest(tuple(ManifestEntry(f"id{i:03d}", None, None, None, "CVC") for i in range(n)))


def test_ten_entries_five_folds():
    folds = kfold_split(ids_manifest(10), 5, seed=1)
    tests = [set(f.test) for f in folds]
    assert all(len(t) == 2 for t in tests)
    assert set().union(*tests) == set(ids_manifest(10).ids)
    assert sum(len(t) for t in tests) == 10


def test_split_deterministic():
    assert kfold_split(ids_manifest(23), 5, seed=7) == kfold_split(ids_manifest(23), 5, seed=7)
    assert kfold_split(ids_manifest(23), 5, seed=7) != kfold_split(ids_manifest(23), 5, seed=8)


def test_five_hundred_entries():
    for f in kfold_split(ids_manifest(500), 5, seed=0):
        assert (len(f.train), len(f.validation), len(f.test)) == (300, 100, 100)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 40), st.integers(0, 1000))
def test_split_partitions(k, extra, seed):
    m = ids_manifest(k + extra)
    folds = kfold_split(m, k, seed)
    assert sorted(x for f in folds for x in f.test) == sorted(m.ids)
    for f in folds:
        parts = [set(f.train), set(f.validation), set(f.test)]
        assert sum(map(len, parts)) == len(m)
        assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])


def test_split_errors():
    with pytest.raises(ValueError):
        kfold_split(ids_manifest(3), 5, 0)
    with pytest.raises(ValueError):
        kfold_split(ids_manifest(3), 1, 0)
