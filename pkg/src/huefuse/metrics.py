"""Quality metrics: CIEDE2000 hue difference and tone-mapped image quality.

The hue score compares a fused display image against the linear radiance map
it was rendered from: the radiance map is keyed and clipped into display
range, both sides are converted to Lab, and the chroma-weighted hue term of
CIEDE2000 is averaged. The TMQI score combines a multiscale
structural-fidelity term with statistical-naturalness priors on the display
image's brightness and contrast.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.signal import fftconvolve
from scipy.special import erf

from .luminance import geometric_mean, luminance
from .synth import DEFAULT_KEY

# sRGB primaries, D65 white, linear-light matrix
SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
WHITE_D65 = np.array([0.95047, 1.0, 1.08883])

_LAB_EPS = 0.008856
_LAB_KAPPA = 903.3


def rgb_to_lab(img, gamma=None):
    """Convert RGB in [0, 1] to CIELAB (D65).

    ``gamma=None`` treats the input as linear light; a float linearizes
    with a pure power law first. The piecewise cube-root lightness curve
    uses the classic eps/kappa constants, so (1, 1, 1) maps to L* = 100
    with a*, b* at zero to within rounding of the primaries matrix.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-1] != 3:
        raise ValueError("expected RGB data with a trailing axis of size 3")
    if gamma is not None:
        img = np.power(img, float(gamma))
    xyz = img @ SRGB_TO_XYZ.T
    t = xyz / WHITE_D65
    f = np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


@dataclass
class ColorDifference:
    """CIEDE2000 terms; each entry is the weighted component of the metric."""

    de: np.ndarray
    dl: np.ndarray
    dc: np.ndarray
    dh: np.ndarray


def ciede2000(lab1, lab2):
    """CIEDE2000 color difference between matching Lab arrays.

    Returns the total difference and its lightness, chroma, and hue
    components, each already divided by its weighting function; the
    rotation term that couples chroma and hue enters only the total.
    """
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    if lab1.shape != lab2.shape or lab1.shape[-1] != 3:
        raise ValueError("expected matching Lab arrays")
    l1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    l2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    c1 = np.hypot(a1, b1)
    c2 = np.hypot(a2, b2)
    cbar7 = ((c1 + c2) / 2.0) ** 7
    g = 0.5 * (1.0 - np.sqrt(cbar7 / (cbar7 + 25.0**7)))
    a1p = (1.0 + g) * a1
    a2p = (1.0 + g) * a2
    c1p = np.hypot(a1p, b1)
    c2p = np.hypot(a2p, b2)

    h1p = np.degrees(np.arctan2(b1, a1p)) % 360.0
    h2p = np.degrees(np.arctan2(b2, a2p)) % 360.0
    h1p = np.where((a1p == 0) & (b1 == 0), 0.0, h1p)
    h2p = np.where((a2p == 0) & (b2 == 0), 0.0, h2p)

    chroma_prod = c1p * c2p
    diff = h2p - h1p
    dhp = np.where(
        chroma_prod == 0.0,
        0.0,
        np.where(
            np.abs(diff) <= 180.0,
            diff,
            np.where(diff > 180.0, diff - 360.0, diff + 360.0),
        ),
    )
    dhp_big = 2.0 * np.sqrt(chroma_prod) * np.sin(np.radians(dhp) / 2.0)

    lbar = (l1 + l2) / 2.0
    cbarp = (c1p + c2p) / 2.0
    hsum = h1p + h2p
    habs = np.abs(h1p - h2p)
    hbar = np.where(
        chroma_prod == 0.0,
        hsum,
        np.where(
            habs <= 180.0,
            hsum / 2.0,
            np.where(hsum < 360.0, (hsum + 360.0) / 2.0, (hsum - 360.0) / 2.0),
        ),
    )

    t = (
        1.0
        - 0.17 * np.cos(np.radians(hbar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * hbar))
        + 0.32 * np.cos(np.radians(3.0 * hbar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * hbar - 63.0))
    )
    dtheta = 30.0 * np.exp(-(((hbar - 275.0) / 25.0) ** 2))
    cbarp7 = cbarp**7
    rc = 2.0 * np.sqrt(cbarp7 / (cbarp7 + 25.0**7))
    lterm = (lbar - 50.0) ** 2
    sl = 1.0 + 0.015 * lterm / np.sqrt(20.0 + lterm)
    sc = 1.0 + 0.045 * cbarp
    sh = 1.0 + 0.015 * cbarp * t
    rt = -np.sin(np.radians(2.0 * dtheta)) * rc

    dl = (l2 - l1) / sl
    dc = (c2p - c1p) / sc
    dh = dhp_big / sh
    de = np.sqrt(dl**2 + dc**2 + dh**2 + rt * dc * dh)
    return ColorDifference(de=de, dl=dl, dc=dc, dh=dh)


def mean_hue_difference(fused, hdr_ref, fused_gamma=1.0, key=DEFAULT_KEY):
    """Mean |hue term| of CIEDE2000 between a fused image and its radiance map.

    The radiance map is scaled so its geometric-mean luminance hits ``key``
    and clipped to [0, 1]; the fused image enters the comparison as its
    display values (``fused_gamma`` other than 1.0 linearizes it first).
    Both sides then pass through the same linear-light Lab conversion.
    The display-as-is default is deliberate: hue correction substitutes
    radiance-derived channel ratios into display coordinates, so agreement
    with the scaled radiance map is measured exactly where it was imposed.
    """
    fused = np.asarray(fused, dtype=np.float64)
    hdr_ref = np.asarray(hdr_ref, dtype=np.float64)
    if fused.shape != hdr_ref.shape:
        raise ValueError(f"image size mismatch: {fused.shape} vs {hdr_ref.shape}")
    scale = key / geometric_mean(luminance(hdr_ref))
    ref_display = np.clip(scale * hdr_ref, 0.0, 1.0)
    fused_lin = np.power(np.clip(fused, 0.0, 1.0), float(fused_gamma))
    diff = ciede2000(rgb_to_lab(fused_lin), rgb_to_lab(ref_display))
    return float(np.mean(np.abs(diff.dh)))


# ---------------------------------------------------------------------------
# Tone-mapped image quality

_TMQI_A = 0.8012
_TMQI_ALPHA = 0.3046
_TMQI_BETA = 0.7088
_TMQI_SCALE_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
_TMQI_C1 = 0.01
_TMQI_C2 = 10.0
_TMQI_WINDOW = 11
_TMQI_MEAN_PRIOR = (115.94, 27.99)
_TMQI_STD_PRIOR = (4.4, 10.1, 64.29)


@dataclass
class TmqiScore:
    """Overall quality plus its structural and naturalness terms, all in [0, 1]."""

    q: float
    s: float
    n: float


def _gaussian_window(size=_TMQI_WINDOW, sigma=1.5):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    win = np.outer(g, g)
    return win / win.sum()


def _local_fidelity(lum_ref, lum_img, spatial_freq, window):
    """Contrast-significance-mapped local similarity at one scale."""
    csf = 100.0 * 2.6 * (0.0192 + 0.114 * spatial_freq) * math.exp(
        -((0.114 * spatial_freq) ** 1.1)
    )
    u = 128.0 / (1.4 * csf)
    sig = u / 3.0

    mu1 = fftconvolve(lum_ref, window, mode="valid")
    mu2 = fftconvolve(lum_img, window, mode="valid")
    var1 = fftconvolve(lum_ref * lum_ref, window, mode="valid") - mu1 * mu1
    var2 = fftconvolve(lum_img * lum_img, window, mode="valid") - mu2 * mu2
    cov = fftconvolve(lum_ref * lum_img, window, mode="valid") - mu1 * mu2
    sigma1 = np.sqrt(np.maximum(var1, 0.0))
    sigma2 = np.sqrt(np.maximum(var2, 0.0))

    # error-function CDF maps local contrast to perceptual significance
    sig1p = 0.5 * (1.0 + erf((sigma1 - u) / (sig * math.sqrt(2.0))))
    sig2p = 0.5 * (1.0 + erf((sigma2 - u) / (sig * math.sqrt(2.0))))

    smap = ((2.0 * sig1p * sig2p + _TMQI_C1) / (sig1p**2 + sig2p**2 + _TMQI_C1)) * (
        (cov + _TMQI_C2) / (sigma1 * sigma2 + _TMQI_C2)
    )
    return float(np.clip(np.mean(smap), 0.0, 1.0))


def _halve(img):
    """2x2 mean filter then stride-2 decimation."""
    smoothed = uniform_filter(img, size=2, mode="reflect", origin=-1)
    return smoothed[::2, ::2]


def _structural_fidelity(lum_ref, lum_img):
    window = _gaussian_window()
    scores = []
    ref, img = lum_ref, lum_img
    for level in range(len(_TMQI_SCALE_WEIGHTS)):
        if min(ref.shape) < _TMQI_WINDOW:
            raise ValueError(
                "image too small for 5-scale structural fidelity "
                f"(needs at least {_TMQI_WINDOW * 2 ** (len(_TMQI_SCALE_WEIGHTS) - 1)}"
                " pixels per side)"
            )
        spatial_freq = 32.0 / 2.0 ** (level + 1)
        scores.append(_local_fidelity(ref, img, spatial_freq, window))
        ref = _halve(ref)
        img = _halve(img)
    s = float(np.prod(np.power(scores, _TMQI_SCALE_WEIGHTS)))
    return s, scores


def _block_std(img, size=_TMQI_WINDOW):
    h, w = img.shape
    bh, bw = h // size, w // size
    if bh == 0 or bw == 0:
        raise ValueError("image too small for block contrast statistics")
    blocks = img[: bh * size, : bw * size].reshape(bh, size, bw, size)
    return blocks.std(axis=(1, 3), ddof=1)


def _statistical_naturalness(lum_display):
    mu_hat, sigma_hat = _TMQI_MEAN_PRIOR
    a, b, sig_scale = _TMQI_STD_PRIOR

    u = float(np.mean(lum_display))
    sig = float(np.mean(_block_std(lum_display)))

    p_mean = math.exp(-((u - mu_hat) ** 2) / (2.0 * sigma_hat**2))
    x = sig / sig_scale
    if 0.0 < x < 1.0:
        mode = (a - 1.0) / (a + b - 2.0)
        p_std = (x ** (a - 1.0) * (1.0 - x) ** (b - 1.0)) / (
            mode ** (a - 1.0) * (1.0 - mode) ** (b - 1.0)
        )
    else:
        p_std = 0.0
    return float(np.clip(p_mean * p_std, 0.0, 1.0))


def tmqi(fused, hdr_ref):
    """Tone-mapped quality of a fused display image against a radiance map.

    Luminance-only: the radiance map's luminance is stretched to the full
    32-bit range, the display luminance to [0, 255]. Returns the overall
    score plus its structural-fidelity and naturalness terms.
    """
    fused = np.asarray(fused, dtype=np.float64)
    hdr_ref = np.asarray(hdr_ref, dtype=np.float64)
    if fused.shape != hdr_ref.shape:
        raise ValueError(f"image size mismatch: {fused.shape} vs {hdr_ref.shape}")
    lum_display = np.clip(luminance(fused), 0.0, 1.0) * 255.0
    lum_ref = luminance(hdr_ref)
    span = lum_ref.max() - lum_ref.min()
    if span > 0:
        lum_ref = (lum_ref - lum_ref.min()) / span * (2.0**32 - 1.0)
    else:
        lum_ref = np.zeros_like(lum_ref)

    s, _ = _structural_fidelity(lum_ref, lum_display)
    n = _statistical_naturalness(lum_display)
    q = _TMQI_A * s**_TMQI_ALPHA + (1.0 - _TMQI_A) * n**_TMQI_BETA
    return TmqiScore(q=float(q), s=s, n=n)


@dataclass
class MetricsReport:
    """One fused-vs-reference evaluation cell."""

    mean_dh: float
    tmqi_q: float
    tmqi_s: float
    tmqi_n: float


def evaluate_pair(fused, hdr_ref, fused_gamma=1.0, key=DEFAULT_KEY):
    """Compute the full report for one fused image and its radiance map."""
    score = tmqi(fused, hdr_ref)
    return MetricsReport(
        mean_dh=mean_hue_difference(fused, hdr_ref, fused_gamma=fused_gamma, key=key),
        tmqi_q=score.q,
        tmqi_s=score.s,
        tmqi_n=score.n,
    )
