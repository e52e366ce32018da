"""Color difference, Lab conversion, hue score, and quality index."""

import numpy as np
import pytest
from skimage.color import deltaE_ciede2000

from huefuse.metrics import (
    ciede2000,
    evaluate_pair,
    mean_hue_difference,
    rgb_to_lab,
    tmqi,
)

# Standard CIEDE2000 verification pairs: L1 a1 b1, L2 a2 b2, expected dE00.
# The expected values are the published four-decimal references.
VERIFICATION_PAIRS = np.array(
    [
        [50.0000, 2.6772, -79.7751, 50.0000, 0.0000, -82.7485, 2.0425],
        [50.0000, 3.1571, -77.2803, 50.0000, 0.0000, -82.7485, 2.8615],
        [50.0000, 2.8361, -74.0200, 50.0000, 0.0000, -82.7485, 3.4412],
        [50.0000, -1.3802, -84.2814, 50.0000, 0.0000, -82.7485, 1.0000],
        [50.0000, -1.1848, -84.8006, 50.0000, 0.0000, -82.7485, 1.0000],
        [50.0000, -0.9009, -85.5211, 50.0000, 0.0000, -82.7485, 1.0000],
        [50.0000, 0.0000, 0.0000, 50.0000, -1.0000, 2.0000, 2.3669],
        [50.0000, -1.0000, 2.0000, 50.0000, 0.0000, 0.0000, 2.3669],
        [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0009, 7.1792],
        [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0010, 7.1792],
        [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0011, 7.2195],
        [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0012, 7.2195],
        [50.0000, -0.0010, 2.4900, 50.0000, 0.0009, -2.4900, 4.8045],
        [50.0000, -0.0010, 2.4900, 50.0000, 0.0010, -2.4900, 4.8045],
        [50.0000, -0.0010, 2.4900, 50.0000, 0.0011, -2.4900, 4.7461],
        [50.0000, 2.5000, 0.0000, 50.0000, 0.0000, -2.5000, 4.3065],
        [50.0000, 2.5000, 0.0000, 73.0000, 25.0000, -18.0000, 27.1492],
        [50.0000, 2.5000, 0.0000, 61.0000, -5.0000, 29.0000, 22.8977],
        [50.0000, 2.5000, 0.0000, 56.0000, -27.0000, -3.0000, 31.9030],
        [50.0000, 2.5000, 0.0000, 58.0000, 24.0000, 15.0000, 19.4535],
        [50.0000, 2.5000, 0.0000, 50.0000, 3.1736, 0.5854, 1.0000],
        [50.0000, 2.5000, 0.0000, 50.0000, 3.2972, 0.0000, 1.0000],
        [50.0000, 2.5000, 0.0000, 50.0000, 1.8634, 0.5757, 1.0000],
        [50.0000, 2.5000, 0.0000, 50.0000, 3.2592, 0.3350, 1.0000],
        [60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644],
        [63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630],
        [61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731],
        [35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645],
        [22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373],
        [36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146],
        [90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441],
        [90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381],
        [6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377],
        [2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082],
    ]
)


def display_scene(size=192, seed=0):
    """A fused-style display image and the radiance map it depicts."""
    from scenes import make_scene
    from huefuse.pipeline import tone_map_global

    hdr = make_scene(seed, size=size)
    return tone_map_global(hdr), hdr


# ---------------------------------------------------------------------------
# CIEDE2000

def test_ciede2000_verification_pairs():
    lab1 = VERIFICATION_PAIRS[:, :3]
    lab2 = VERIFICATION_PAIRS[:, 3:6]
    expected = VERIFICATION_PAIRS[:, 6]
    assert np.max(np.abs(ciede2000(lab1, lab2).de - expected)) <= 1e-4


def test_ciede2000_matches_independent_implementation():
    rng = np.random.default_rng(7)
    lab1 = np.column_stack(
        [rng.uniform(0, 100, 500), rng.uniform(-60, 60, 1000).reshape(500, 2)]
    )
    lab2 = lab1 + rng.normal(0, 8, lab1.shape)
    ours = ciede2000(lab1, lab2).de
    theirs = deltaE_ciede2000(lab1, lab2)
    assert np.max(np.abs(ours - theirs)) < 1e-9


def test_ciede2000_symmetry_and_zero():
    lab1 = VERIFICATION_PAIRS[:, :3]
    lab2 = VERIFICATION_PAIRS[:, 3:6]
    assert np.allclose(ciede2000(lab1, lab2).de, ciede2000(lab2, lab1).de)
    assert np.all(ciede2000(lab1, lab1).de == 0.0)


def test_ciede2000_component_signs():
    light = np.array([60.0, 10.0, 10.0])
    dark = np.array([40.0, 10.0, 10.0])
    diff = ciede2000(dark[None], light[None])
    assert diff.dl[0] > 0  # second argument is lighter
    assert abs(diff.dh[0]) < 1e-12
    gray1 = np.array([[50.0, 0.0, 0.0]])
    gray2 = np.array([[70.0, 0.0, 0.0]])
    assert ciede2000(gray1, gray2).dh[0] == 0.0


def test_ciede2000_shape_mismatch():
    with pytest.raises(ValueError):
        ciede2000(np.zeros((2, 3)), np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# Lab conversion

def test_lab_white_black_gray():
    white = rgb_to_lab(np.ones(3))
    assert abs(white[0] - 100.0) < 1e-4
    assert np.all(np.abs(white[1:]) < 1e-4)
    assert np.array_equal(rgb_to_lab(np.zeros(3)), np.zeros(3))
    gray = rgb_to_lab(np.full(3, 0.18))
    assert abs(gray[0] - 49.4961098) < 1e-6
    assert np.all(np.abs(gray[1:]) < 1e-4)


def test_lab_gamma_linearizes_first():
    display = np.full((4, 3), 0.5)
    direct = rgb_to_lab(display**2.2)
    via_gamma = rgb_to_lab(display, gamma=2.2)
    assert np.allclose(direct, via_gamma)


def test_lab_rejects_non_rgb():
    with pytest.raises(ValueError):
        rgb_to_lab(np.zeros((5, 4)))


# ---------------------------------------------------------------------------
# Hue score

def test_hue_difference_zero_for_consistent_pair():
    hdr = np.random.default_rng(8).uniform(0.05, 1.0, (16, 16, 3))
    from huefuse.luminance import geometric_mean, luminance

    scale = 0.18 / geometric_mean(luminance(hdr))
    fused = np.clip(scale * hdr, 0.0, 1.0)
    assert mean_hue_difference(fused, hdr) < 1e-12


def test_hue_difference_grows_with_channel_swap():
    fused, hdr = display_scene(size=64)
    swapped = fused[..., [1, 0, 2]]
    assert mean_hue_difference(swapped, hdr) > mean_hue_difference(fused, hdr)


def test_hue_difference_gray_scene_is_zero():
    gray = np.full((8, 8, 3), 2.0)
    fused = np.full((8, 8, 3), 0.4)
    assert mean_hue_difference(fused, gray) == 0.0


def test_hue_difference_gamma_bridge_changes_score():
    fused, hdr = display_scene(size=64)
    display_scored = mean_hue_difference(fused, hdr)
    linearized_scored = mean_hue_difference(fused, hdr, fused_gamma=2.2)
    assert display_scored != linearized_scored


def test_hue_difference_shape_mismatch():
    with pytest.raises(ValueError):
        mean_hue_difference(np.zeros((4, 4, 3)), np.ones((5, 5, 3)))


# ---------------------------------------------------------------------------
# Quality index

def test_tmqi_components_in_range():
    fused, hdr = display_scene()
    score = tmqi(fused, hdr)
    for value in (score.q, score.s, score.n):
        assert 0.0 <= value <= 1.0


def test_tmqi_combination_formula():
    fused, hdr = display_scene(seed=1)
    score = tmqi(fused, hdr)
    assert score.q == pytest.approx(
        0.8012 * score.s**0.3046 + 0.1988 * score.n**0.7088, abs=1e-12
    )


def test_tmqi_structural_term_decreases_with_noise():
    fused, hdr = display_scene(seed=2)
    rng = np.random.default_rng(9)
    noise = rng.normal(0.0, 1.0, fused.shape)
    fidelity = []
    for level in (0.0, 0.05, 0.15, 0.4):
        noisy = np.clip(fused + level * noise, 0.0, 1.0)
        fidelity.append(tmqi(noisy, hdr).s)
    assert all(a > b for a, b in zip(fidelity, fidelity[1:]))


def test_tmqi_self_reference_structural_near_one():
    _, hdr = display_scene(seed=3)
    from huefuse.luminance import luminance

    lum = luminance(hdr)
    display = np.clip(
        (lum - lum.min()) / (lum.max() - lum.min()), 0.0, 1.0
    )[..., None] * np.ones(3)
    assert tmqi(display, hdr).s > 0.95


def test_tmqi_needs_176_pixels():
    small = np.zeros((128, 128, 3))
    with pytest.raises(ValueError, match="176"):
        tmqi(small, small + 1.0)


def test_evaluate_pair_collects_everything():
    fused, hdr = display_scene(seed=4)
    report = evaluate_pair(fused, hdr)
    score = tmqi(fused, hdr)
    assert report.mean_dh == mean_hue_difference(fused, hdr)
    assert report.tmqi_q == score.q
    assert report.tmqi_s == score.s
    assert report.tmqi_n == score.n
