"""Response-curve estimation, radiance merging, and curve serialization."""

import numpy as np
import pytest

from huefuse.luminance import geometric_mean, luminance
from huefuse.response import (
    EstimationFailed,
    ResponseCurve,
    crf_mse,
    estimate_crf_debevec,
    estimate_crf_mitsunaga,
    hat_weight,
    load_curve,
    merge_hdr,
    save_curve,
)
from huefuse.stack import ExposureStack
from huefuse.synth import SynthConfig, generate_exposure, generate_stack

from scenes import make_scene

GAMMA = 2.2


@pytest.fixture(scope="module")
def stack256():
    cfg = SynthConfig(ev_list=[-4.0, -2.0, 0.0, 2.0, 4.0], gamma=GAMMA)
    return generate_stack(make_scene(0, size=256), cfg)


def test_hat_weight_shape():
    z = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    assert np.allclose(hat_weight(z), [0.0, 0.25, 0.5, 0.25, 0.0])


def test_gamma_curve_is_its_own_reference():
    curve = ResponseCurve.from_gamma(GAMMA)
    assert np.all(crf_mse(curve, GAMMA) < 1e-10)


def test_mitsunaga_recovers_gamma(stack256):
    curve = estimate_crf_mitsunaga(stack256)
    assert curve.kind == "polynomial"
    mse = crf_mse(curve, GAMMA)
    assert np.all(mse <= 1e-4)


def test_mitsunaga_curve_monotone(stack256):
    curve = estimate_crf_mitsunaga(stack256)
    grid = np.linspace(0.0, 1.0, 256)
    for ch in range(3):
        values = curve.inverse_normalized(grid, ch)
        assert np.all(np.diff(values) >= -1e-3)


def test_debevec_recovers_gamma(stack256):
    curve = estimate_crf_debevec(stack256)
    assert curve.kind == "lut256"
    mse = crf_mse(curve, GAMMA)
    assert np.all(mse <= 5e-2)
    # the solved table is projected to non-decreasing
    for ch in range(3):
        assert np.all(np.diff(curve.log_inv[ch]) >= 0.0)


def test_fixed_degree_override(stack256):
    curve = estimate_crf_mitsunaga(stack256, degree=3)
    assert curve.degree == 3


def test_estimators_reject_single_exposure():
    img = np.full((32, 32, 3), 0.5)
    stack = ExposureStack(images=[img], times=[1.0])
    with pytest.raises(ValueError):
        estimate_crf_mitsunaga(stack)
    with pytest.raises(ValueError):
        estimate_crf_debevec(stack)


def test_mitsunaga_fails_on_clipped_stack():
    images = [np.zeros((64, 64, 3)), np.ones((64, 64, 3))]
    stack = ExposureStack(images=images, times=[1.0, 4.0])
    with pytest.raises(EstimationFailed):
        estimate_crf_mitsunaga(stack)


def test_merge_matches_keyed_source(stack256):
    # 8-bit inputs carry a per-sample log-radiance error up to
    # gamma * (half step) / z, a couple of percent near band edges.
    hdr = make_scene(0, size=256)
    scale = 0.18 / geometric_mean(luminance(hdr))
    truth = scale * hdr
    merged = merge_hdr(stack256, ResponseCurve.from_gamma(GAMMA))
    rel = np.abs(merged - truth) / truth
    assert rel.max() < 0.04


def test_merge_unquantized_stack_is_tight():
    # Without quantization only curve-table interpolation error remains.
    hdr = make_scene(0, size=256)
    cfg = SynthConfig(ev_list=[-4.0, -2.0, 0.0, 2.0, 4.0], gamma=GAMMA)
    images = [
        generate_exposure(hdr, v, cfg, quantize=False) for v in cfg.ev_list
    ]
    stack = ExposureStack(
        images=images, times=np.power(2.0, np.asarray(cfg.ev_list))
    )
    truth = cfg.key / geometric_mean(luminance(hdr)) * hdr
    merged = merge_hdr(stack, ResponseCurve.from_gamma(GAMMA))
    rel = np.abs(merged - truth) / truth
    assert rel.max() < 1e-3


def test_merge_time_scale_equivariance(stack256):
    curve = ResponseCurve.from_gamma(GAMMA)
    merged = merge_hdr(stack256, curve)
    rescaled = ExposureStack(
        images=stack256.images, times=8.0 * stack256.times
    )
    assert np.allclose(merge_hdr(rescaled, curve), merged / 8.0)


def test_merge_falls_back_on_fully_clipped_pixels():
    images = [np.zeros((4, 4, 3)), np.ones((4, 4, 3))]
    stack = ExposureStack(images=images, times=[1.0, 2.0])
    merged = merge_hdr(stack, ResponseCurve.from_gamma(GAMMA))
    assert np.all(np.isfinite(merged))


def test_save_load_polynomial_round_trip(tmp_path, stack256):
    curve = estimate_crf_mitsunaga(stack256)
    path = tmp_path / "curve.txt"
    save_curve(path, curve)
    back = load_curve(path)
    assert back.kind == "polynomial"
    assert np.array_equal(back.coeffs, curve.coeffs)


def test_save_load_lut_round_trip(tmp_path, stack256):
    curve = estimate_crf_debevec(stack256)
    path = tmp_path / "curve.txt"
    save_curve(path, curve)
    back = load_curve(path)
    assert back.kind == "lut256"
    assert np.array_equal(back.log_inv, curve.log_inv)


def test_load_curve_rejects_garbage(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("not a curve\n")
    with pytest.raises(ValueError):
        load_curve(path)


def test_curve_validation():
    with pytest.raises(ValueError):
        ResponseCurve(kind="lut256", log_inv=np.zeros((3, 100)))
    with pytest.raises(ValueError):
        ResponseCurve(kind="spline")
