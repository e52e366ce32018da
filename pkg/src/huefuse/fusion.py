"""Multi-exposure fusion by weighted Laplacian-pyramid blending.

Per-pixel weights combine three quality measures (local contrast, channel
saturation, mid-range well-exposedness); blending the Laplacian pyramids of
the inputs under Gaussian pyramids of the normalized weights avoids the seams
a per-pixel average would produce.
"""

import numpy as np
from scipy.ndimage import convolve, correlate1d

from .luminance import luminance

#: binomial 5-tap kernel used for every pyramid step
PYRAMID_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0

_LAPLACIAN = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

#: well-exposedness Gaussian width around mid-gray
_EXPOSEDNESS_SIGMA = 0.2

#: additive floor so flat regions still receive a defined weight share
WEIGHT_FLOOR = 1e-12


def default_levels(shape):
    """floor(log2(min(H, W))) - 2, at least 1."""
    side = min(shape[0], shape[1])
    return max(1, int(np.floor(np.log2(side))) - 2)


def _blur(img):
    """Separable 5-tap blur with symmetric boundary extension."""
    out = correlate1d(img, PYRAMID_KERNEL, axis=0, mode="reflect")
    return correlate1d(out, PYRAMID_KERNEL, axis=1, mode="reflect")


def _reduce(img):
    return _blur(img)[::2, ::2]


def _expand(img, shape):
    """Upsample to an exact target shape; odd sizes are handled by shape."""
    up = np.zeros(shape[:2] + img.shape[2:], dtype=img.dtype)
    up[::2, ::2] = img
    # blurring an indicator of the populated samples renormalizes the
    # interpolation near borders, where the zero stuffing is asymmetric
    support = np.zeros(shape[:2])
    support[::2, ::2] = 1.0
    blurred = _blur(up)
    norm = _blur(support)
    if up.ndim == 3:
        norm = norm[..., None]
    return blurred / norm


def gaussian_pyramid(img, levels):
    pyr = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels - 1):
        pyr.append(_reduce(pyr[-1]))
    return pyr


def laplacian_pyramid(img, levels):
    """Band-pass stack; the last entry is the residual low-pass level."""
    gauss = gaussian_pyramid(img, levels)
    pyr = [
        gauss[i] - _expand(gauss[i + 1], gauss[i].shape)
        for i in range(levels - 1)
    ]
    pyr.append(gauss[-1])
    return pyr


def collapse_pyramid(pyr):
    """Invert :func:`laplacian_pyramid` exactly."""
    out = pyr[-1]
    for band in reversed(pyr[:-1]):
        out = band + _expand(out, band.shape)
    return out


def mertens_weights(images, wc=1.0, ws=1.0, we=1.0):
    """Per-pixel quality weights, normalized to sum to 1 across images.

    contrast^wc * saturation^ws * well-exposedness^we, plus a tiny floor so
    pixels that are flat and gray in every image split evenly.
    """
    images = [np.asarray(img, dtype=np.float64) for img in images]
    weights = []
    for img in images:
        contrast = np.abs(
            convolve(luminance(img), _LAPLACIAN, mode="reflect")
        )
        saturation = img.std(axis=-1)
        exposedness = np.prod(
            np.exp(-((img - 0.5) ** 2) / (2.0 * _EXPOSEDNESS_SIGMA**2)), axis=-1
        )
        weights.append(contrast**wc * saturation**ws * exposedness**we + WEIGHT_FLOOR)
    stacked = np.stack(weights)
    return stacked / stacked.sum(axis=0)


def pyramid_fuse(images, weights, levels):
    """Blend Laplacian pyramids of the images under Gaussian weight pyramids."""
    blended = None
    for img, w in zip(images, weights):
        img_pyr = laplacian_pyramid(img, levels)
        w_pyr = gaussian_pyramid(w, levels)
        contribution = [wl[..., None] * bl for wl, bl in zip(w_pyr, img_pyr)]
        if blended is None:
            blended = contribution
        else:
            blended = [acc + c for acc, c in zip(blended, contribution)]
    return np.clip(collapse_pyramid(blended), 0.0, 1.0)


def fuse(images, levels=None, wc=1.0, ws=1.0, we=1.0):
    """Fuse an exposure stack (or any image sequence) into one display image.

    Accepts a list of (H, W, 3) arrays or anything with an ``images``
    attribute. ``levels=None`` picks the default pyramid depth for the
    image size; one level degenerates to the per-pixel weighted average.
    """
    if hasattr(images, "images"):
        images = images.images
    images = [np.asarray(img, dtype=np.float64) for img in images]
    if not images:
        raise ValueError("nothing to fuse")
    shape = images[0].shape
    if any(img.shape != shape for img in images):
        raise ValueError("fusion inputs must share one shape")
    if levels is None:
        levels = default_levels(shape)
    max_levels = int(np.floor(np.log2(min(shape[0], shape[1]))))
    if not 1 <= levels <= max_levels:
        raise ValueError(f"levels must lie in [1, {max_levels}] for {shape}")
    weights = mertens_weights(images, wc=wc, ws=ws, we=we)
    return pyramid_fuse(images, weights, levels)
