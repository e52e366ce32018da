"""Constant-hue-plane decomposition, reconstruction, and hue transfer."""

import numpy as np
import pytest

from huefuse.hueplane import (
    ACHROMATIC_EPS,
    AchromaticError,
    correct_hue,
    correct_hue_image,
    decompose,
    max_saturated_color,
    reconstruct,
)


def random_pixels(n, seed=0):
    return np.random.default_rng(seed).uniform(0.0, 1.0, (n, 3))


def test_round_trip_identity():
    pixels = random_pixels(100_000)
    coords = decompose(pixels)
    assert np.max(np.abs(reconstruct(coords) - pixels)) < 1e-7


def test_round_trip_exact_grays():
    grays = np.repeat(np.linspace(0.0, 1.0, 256)[:, None], 3, axis=1)
    coords = decompose(grays)
    assert np.array_equal(reconstruct(coords), grays)
    assert np.all(coords.achromatic)
    assert np.all(coords.a_c == 0.0)
    # exact grays carry the white sentinel
    assert np.array_equal(coords.c, np.ones_like(grays))


def test_simplex_constraints_exact():
    pixels = random_pixels(100_000, seed=1)
    coords = decompose(pixels)
    for w in (coords.a_w, coords.a_k, coords.a_c):
        assert np.all(w >= 0.0)
        assert np.all(w <= 1.0)
    total = (coords.a_w + coords.a_k) + coords.a_c
    assert np.array_equal(total, np.ones_like(total))


def test_weights_are_range_stats():
    pixels = np.array([[0.2, 0.7, 0.4], [0.0, 1.0, 0.5]])
    coords = decompose(pixels)
    assert np.allclose(coords.a_w, [0.2, 0.0])
    assert np.allclose(coords.a_k, [0.3, 0.0])
    assert np.allclose(coords.a_c, [0.5, 1.0])


def test_max_saturated_color_properties():
    pixels = random_pixels(10_000, seed=2)
    spread = pixels.max(axis=1) - pixels.min(axis=1)
    pixels = pixels[spread > 1e-3]
    c = max_saturated_color(pixels)
    assert np.allclose(c.min(axis=1), 0.0)
    assert np.allclose(c.max(axis=1), 1.0)


def test_max_saturated_color_scale_invariant():
    pixels = np.array([[0.1, 0.5, 0.9], [0.3, 0.2, 0.8]])
    assert np.allclose(
        max_saturated_color(pixels), max_saturated_color(1700.0 * pixels)
    )


def test_max_saturated_color_rejects_achromatic():
    with pytest.raises(AchromaticError):
        max_saturated_color(np.array([0.5, 0.5, 0.5]))
    nearly = np.array([0.5, 0.5, 0.5 + 0.5 * ACHROMATIC_EPS])
    with pytest.raises(AchromaticError):
        max_saturated_color(nearly)


def test_single_pixel_shapes():
    coords = decompose(np.array([0.1, 0.6, 0.3]))
    assert coords.c.shape == (3,)
    assert np.isscalar(coords.a_w) or coords.a_w.shape == ()
    assert np.allclose(reconstruct(coords), [0.1, 0.6, 0.3])


def test_rejects_non_rgb():
    with pytest.raises(ValueError):
        decompose(np.zeros((4, 4)))


def test_correct_hue_transfers_reference_hue():
    rng = np.random.default_rng(3)
    fused = rng.uniform(0.05, 0.95, (5_000, 3))
    reference = rng.uniform(0.1, 40.0, (5_000, 3))
    spread_ok = (
        fused.max(axis=1) - fused.min(axis=1) > 1e-3
    ) & (
        (reference.max(axis=1) - reference.min(axis=1))
        / reference.max(axis=1)
        > 1e-3
    )
    out = correct_hue(fused, reference)
    assert np.all(out >= 0.0) and np.all(out <= 1.0)

    live = spread_ok & (out.max(axis=1) - out.min(axis=1) > 1e-6)
    assert np.max(
        np.abs(
            max_saturated_color(out[live]) - max_saturated_color(reference[live])
        )
    ) < 1e-6


def test_correct_hue_preserves_coordinates():
    rng = np.random.default_rng(4)
    fused = rng.uniform(0.0, 1.0, (5_000, 3))
    reference = rng.uniform(0.01, 5.0, (5_000, 3))
    out = correct_hue(fused, reference)
    base = decompose(fused)
    after = decompose(out)
    # channel extrema, hence the white/black weights, survive the transfer
    assert np.max(np.abs(after.a_w - base.a_w)) < 1e-6
    assert np.max(np.abs(after.a_k - base.a_k)) < 1e-6


def test_correct_hue_passthrough_on_achromatic():
    fused = np.array([[0.3, 0.3, 0.3], [0.2, 0.5, 0.8]])
    reference = np.array([[1.0, 2.0, 3.0], [2.0, 2.0, 2.0]])
    out = correct_hue(fused, reference)
    # row 0: fused gray; row 1: reference gray; both pass through
    assert np.array_equal(out, fused)


def test_correct_hue_shape_mismatch():
    with pytest.raises(ValueError):
        correct_hue(np.zeros((2, 3)), np.zeros((3, 3)))


def test_correct_hue_image_checks_dimensions():
    with pytest.raises(ValueError):
        correct_hue_image(np.zeros((4, 3)), np.zeros((4, 3)))
    img = np.random.default_rng(5).uniform(0, 1, (6, 7, 3))
    ref = np.random.default_rng(6).uniform(0.1, 3.0, (6, 7, 3))
    assert np.allclose(
        correct_hue_image(img, ref), correct_hue(img, ref)
    )
