"""Upsampling alignment, normalization, and cosine similarity."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pointprop import embedding
from pointprop.errors import DimensionMismatchError


def test_upsample_constant_1x1():
    patch = np.array([[[2.0, -1.0, 0.5]]], dtype=np.float32)
    out = embedding.upsample_bilinear(patch, 6, 7)
    assert out.shape == (6, 7, 3)
    assert np.allclose(out, patch[0, 0], atol=1e-7)


def test_upsample_2to4_hand_values():
    # Half-pixel centers with clamping: 2 patches [0], [1] -> [0, .25, .75, 1].
    patch = np.array([[[0.0]], [[1.0]]], dtype=np.float32)
    out = embedding.upsample_bilinear(patch, 4, 1)
    assert np.allclose(out.ravel(), [0.0, 0.25, 0.75, 1.0], atol=1e-7)


@pytest.mark.parametrize("scale", [3, 7, 13])
def test_upsample_exact_patch_centers(scale):
    # With an odd scale factor, output pixel s*i + (s-1)/2 samples source
    # coordinate exactly i, so it must equal the input patch value.
    rng = np.random.default_rng(5)
    patch = rng.normal(size=(4, 5, 3)).astype(np.float32)
    out = embedding.upsample_bilinear(patch, 4 * scale, 5 * scale)
    centers = out[(scale - 1) // 2::scale, (scale - 1) // 2::scale]
    assert np.abs(centers - patch).max() < 1e-6


def test_upsample_round_trip_on_linear_ramp_interior():
    # Piecewise-linear interpolation reproduces a linear ramp, so resizing
    # 14x up and back down recovers the interior patch values; border
    # patches shift slightly because samples clamp at the image edge.
    ys, xs = np.meshgrid(np.arange(4), np.arange(6), indexing="ij")
    patch = (2.0 * ys + 3.0 * xs)[..., None].astype(np.float32)
    up = embedding.upsample_bilinear(patch, 4 * 14, 6 * 14)
    down = embedding.upsample_bilinear(up, 4, 6)
    assert np.abs(down[1:-1, 1:-1] - patch[1:-1, 1:-1]).max() < 1e-5


def test_upsample_rejects_bad_args():
    with pytest.raises(DimensionMismatchError):
        embedding.upsample_bilinear(np.zeros((2, 2), dtype=np.float32), 4, 4)
    with pytest.raises(DimensionMismatchError):
        embedding.upsample_bilinear(np.zeros((2, 2, 1), dtype=np.float32), 0, 4)


def test_l2_normalize_hand_values():
    data = np.array([[[3.0, 4.0]]], dtype=np.float32)
    out, degenerate = embedding.l2_normalize(data)
    assert np.allclose(out[0, 0], [0.6, 0.8], atol=1e-7)
    assert not degenerate.any()


def test_l2_normalize_unit_unchanged():
    data = np.array([[[0.0, 1.0]]], dtype=np.float32)
    out, _ = embedding.l2_normalize(data)
    assert np.allclose(out[0, 0], [0.0, 1.0], atol=1e-7)


def test_l2_normalize_degenerate_flagged():
    data = np.zeros((1, 2, 3), dtype=np.float32)
    data[0, 1, 0] = 1.0
    out, degenerate = embedding.l2_normalize(data)
    assert np.all(out[0, 0] == 0.0)
    assert degenerate[0, 0] and not degenerate[0, 1]


def test_cosine_sim_values():
    assert embedding.cosine_sim([0.6, 0.8], [0.6, 0.8]) == pytest.approx(1.0)
    assert embedding.cosine_sim([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
    assert embedding.cosine_sim([0.6, 0.8], [0.8, 0.6]) == pytest.approx(0.96)


def test_cosine_sim_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        embedding.cosine_sim([1.0, 0.0], [1.0, 0.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), h=st.integers(1, 8), w=st.integers(1, 8))
def test_normalize_unit_norm_property(seed, h, w):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(h, w, 6)).astype(np.float32) * 10
    out, degenerate = embedding.l2_normalize(data)
    norms = np.linalg.norm(out.astype(np.float64), axis=-1)
    ok = ~degenerate
    if ok.any():
        assert np.abs(norms[ok] - 1.0).max() < 1e-5


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_cosine_symmetry_and_bound(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=5)
    b = rng.normal(size=5)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    assert embedding.cosine_sim(a, b) == pytest.approx(embedding.cosine_sim(b, a))
    assert abs(embedding.cosine_sim(a, b)) <= 1.0 + 1e-6


def test_build_field_normalizes_after_upsampling():
    rng = np.random.default_rng(11)
    patch = rng.normal(size=(3, 3, 4)).astype(np.float32) * 5
    field = embedding.build_field(patch, 9, 9)
    norms = np.linalg.norm(field.data.astype(np.float64), axis=-1)
    assert np.abs(norms[~field.degenerate] - 1.0).max() < 1e-5
    # Interpolate-then-normalize differs from normalize-then-interpolate;
    # check the order by comparing against the explicit pipeline.
    expected, _ = embedding.l2_normalize(embedding.upsample_bilinear(patch, 9, 9))
    assert np.array_equal(field.data, expected)


def test_build_field_normalize_first_switch():
    rng = np.random.default_rng(12)
    # Vectors of very different magnitude make the two orders diverge.
    patch = rng.normal(size=(2, 2, 4)).astype(np.float32)
    patch[0, 0] *= 50
    default_order = embedding.build_field(patch, 6, 6)
    flipped = embedding.build_field(patch, 6, 6, normalize_first=True)
    assert not np.array_equal(default_order.data, flipped.data)
    pre, _ = embedding.l2_normalize(patch)
    expected, _ = embedding.l2_normalize(embedding.upsample_bilinear(pre, 6, 6))
    assert np.array_equal(flipped.data, expected)
