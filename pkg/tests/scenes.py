"""Deterministic synthetic radiance scenes for the test suite.

Each scene is a two-level "desk lamp" layout: a lit majority of the frame
sits a little over an f-stop above a shaded remainder, with gentle texture
and shading fields on top. Reflectance is a mid-gray ground scattered with
colorful patches; the lit region is washed toward pale so its detail lives
in luminance. Scenes are normalized to geometric-mean luminance 1 and keep
their maxima a few times that, so no exposure condition clips more than a
sliver of pixels and every pixel stays recoverable from the stack.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from huefuse.luminance import geometric_mean, luminance

CORPUS_SEEDS = tuple(range(10))
CORPUS_SIZE = 192


def _hsv(h, s, v):
    i = int(h * 6) % 6
    f = h * 6 - int(h * 6)
    p, q, t = v * (1 - s), v * (1 - f * s), v * (1 - (1 - f) * s)
    return [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]


def make_scene(seed, size=CORPUS_SIZE):
    """Radiance map for one corpus seed, (size, size, 3) float64."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size

    # lit majority: 50..62% of frame, 1.4..1.65 ln above the shaded rest
    zone_noise = gaussian_filter(rng.normal(0, 1, (size, size)), size / 8.0)
    zone_noise = zone_noise / max(zone_noise.std(), 1e-9)
    bright_frac = rng.uniform(0.50, 0.62)
    thresh = np.quantile(zone_noise, 1.0 - bright_frac)
    zone = 1.0 / (1.0 + np.exp(-(zone_noise - thresh) * 14.0))

    depth = rng.uniform(1.40, 1.65)
    texture = gaussian_filter(rng.normal(0, 1, (size, size)), size / 40.0)
    texture = texture / max(texture.std(), 1e-9)
    shade = gaussian_filter(rng.normal(0, 1, (size, size)), size / 5.0)
    shade = shade / max(shade.std(), 1e-9)
    illum = np.exp(zone * depth + 0.18 * texture + 0.18 * shade)

    refl = np.full((size, size, 3), 0.4)
    for _ in range(rng.integers(14, 24)):
        color = np.array(
            _hsv(rng.uniform(), rng.uniform(0.55, 1.0), rng.uniform(0.35, 0.95))
        )
        cy, cx = rng.uniform(0, 1, 2)
        r = rng.uniform(0.05, 0.18)
        if rng.uniform() < 0.5:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r**2
        else:
            aspect = rng.uniform(0.4, 2.5)
            mask = (np.abs(yy - cy) < r) & (np.abs(xx - cx) < r * aspect)
        refl[mask] = color
    refl = gaussian_filter(refl, (2.0, 2.0, 0))
    refl = np.clip(refl, 0.05, 1.0)
    lum_r = luminance(refl)[..., None]
    # lit region: flat pale reflectance, mild tint, luminance 0.55..0.8
    washed = refl / np.maximum(lum_r, 1e-6)
    washed = 1.0 + 0.18 * (washed - 1.0)
    washed = washed * (0.55 + 0.25 * np.clip(lum_r, 0.0, 1.0))
    refl = refl * (1 - zone[..., None]) + washed * zone[..., None]

    hdr = illum[..., None] * np.clip(refl, 0.02, 1.0)
    return hdr / geometric_mean(luminance(hdr))


def corpus(size=CORPUS_SIZE):
    """The full ten-scene corpus as a list of radiance maps."""
    return [make_scene(seed, size=size) for seed in CORPUS_SEEDS]
