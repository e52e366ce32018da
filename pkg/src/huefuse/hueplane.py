"""Constant-hue-plane algebra in RGB space.

Every RGB pixel lies inside the triangle spanned by white, black, and the
maximally saturated color obtained by stretching the pixel's channel range to
[0, 1]. The barycentric weights of that triangle separate a pixel's achromatic
mix from its hue, so swapping the saturated vertex for one computed from a
radiance map transplants the radiance map's hue while keeping the pixel's
lightness structure -- and the result stays inside the RGB cube.

All operations accept a single (3,) pixel or an (..., 3) array.
"""

from dataclasses import dataclass

import numpy as np

WHITE = np.ones(3)
BLACK = np.zeros(3)

#: channel spread below which a pixel is treated as carrying no usable hue
ACHROMATIC_EPS = 1e-6


class AchromaticError(ValueError):
    """Raised when a hue vertex is requested from a pixel that has none."""


@dataclass
class HuePlaneCoords:
    """Barycentric description of pixels on their constant-hue planes.

    Attributes
    ----------
    a_w, a_k, a_c : ndarray
        Weights of the white, black, and saturated vertices. For
        display-referred input each lies in [0, 1] and, evaluated as
        ``(a_w + a_k) + a_c``, they sum to exactly 1.0.
    c : ndarray, shape (..., 3)
        Maximally saturated color. Exact grays get the white sentinel.
    achromatic : ndarray of bool
        True where the channel spread is below ``ACHROMATIC_EPS``; the hue
        stored in ``c`` is then meaningless noise and consumers should fall
        back to the pixel itself.
    """

    a_w: np.ndarray
    a_k: np.ndarray
    a_c: np.ndarray
    c: np.ndarray
    achromatic: np.ndarray


def _spread(pixels):
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.shape[-1] != 3:
        raise ValueError("expected RGB data with a trailing axis of size 3")
    lo = pixels.min(axis=-1)
    hi = pixels.max(axis=-1)
    return pixels, lo, hi


def max_saturated_color(pixels):
    """Stretch each pixel's channel range to [0, 1].

    The result has min 0 and max 1 per pixel and is invariant to positive
    scaling of the input, which is what makes it usable as a hue signature
    for radiance values far outside the display range.

    Raises
    ------
    AchromaticError
        If any pixel's channel spread is below ``ACHROMATIC_EPS``; such a
        pixel has no direction to normalize. Callers that need per-pixel
        fallbacks should use :func:`decompose` and its mask instead.
    """
    pixels, lo, hi = _spread(pixels)
    span = hi - lo
    if np.any(span < ACHROMATIC_EPS):
        raise AchromaticError("achromatic pixel has no maximally saturated color")
    return (pixels - lo[..., None]) / span[..., None]


def decompose(pixels):
    """Split display-referred pixels into hue-plane coordinates.

    ``a_w`` is the channel minimum, ``a_k`` one minus the maximum, and
    ``a_c`` the remainder, computed as ``1 - (a_w + a_k)`` so the simplex
    identity holds bitwise. ``c`` follows the range-stretch of
    :func:`max_saturated_color`; pixels with exactly zero spread get the
    white sentinel and a_c = 0, so reconstruction is still exact.
    """
    pixels, lo, hi = _spread(pixels)
    span = hi - lo
    a_w = lo
    a_k = 1.0 - hi
    a_c = 1.0 - (a_w + a_k)
    flat = span == 0.0
    # np.where would divide by zero on exact grays; patch the denominator.
    safe = np.where(flat, 1.0, span)
    c = (pixels - lo[..., None]) / safe[..., None]
    if np.any(flat):
        c = np.where(flat[..., None], WHITE, c)
    return HuePlaneCoords(
        a_w=a_w,
        a_k=a_k,
        a_c=a_c,
        c=c,
        achromatic=span < ACHROMATIC_EPS,
    )


def reconstruct(coords):
    """Rebuild pixels from hue-plane coordinates: a_w * white + a_c * c."""
    return coords.a_w[..., None] + coords.a_c[..., None] * coords.c


def correct_hue(fused, reference):
    """Move fused pixels onto the reference's constant-hue planes.

    Keeps the fused image's white/black/saturation weights and replaces only
    the saturated vertex with the one computed from ``reference`` (typically
    a merged radiance map, whose values may lie far outside [0, 1]). Where
    either side is achromatic the fused pixel passes through unchanged.

    The output stays in [0, 1] whenever ``fused`` does, and its per-pixel
    channel max and min equal those of ``fused``.
    """
    fused = np.asarray(fused, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if fused.shape != reference.shape:
        raise ValueError(
            f"shape mismatch: fused {fused.shape} vs reference {reference.shape}"
        )
    base = decompose(fused)
    ref = decompose(reference)
    out = base.a_w[..., None] + base.a_c[..., None] * ref.c
    passthrough = base.achromatic | ref.achromatic
    if np.any(passthrough):
        out = np.where(passthrough[..., None], fused, out)
    return out


def correct_hue_image(fused, hdr):
    """Image-level wrapper for :func:`correct_hue` with a dimension check."""
    fused = np.asarray(fused, dtype=np.float64)
    hdr = np.asarray(hdr, dtype=np.float64)
    if fused.ndim != 3 or fused.shape[-1] != 3:
        raise ValueError("fused must be an (H, W, 3) image")
    if fused.shape != hdr.shape:
        raise ValueError(f"image size mismatch: {fused.shape} vs {hdr.shape}")
    return correct_hue(fused, hdr)
