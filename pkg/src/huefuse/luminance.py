"""Luminance helpers shared across the pipeline."""

import numpy as np

#: Rec. 709 luma coefficients, applied to linear or display RGB alike.
REC709 = np.array([0.2126, 0.7152, 0.0722])

#: floor added inside logarithms so black pixels stay finite
LOG_EPS = 1e-6


def luminance(img):
    """Rec. 709 weighted sum over the trailing RGB axis."""
    img = np.asarray(img, dtype=np.float64)
    if img.shape[-1] != 3:
        raise ValueError("expected RGB data with a trailing axis of size 3")
    return img @ REC709


def geometric_mean(values, mask=None, eps=LOG_EPS):
    """exp(mean(log(v + eps))), optionally over a boolean mask.

    The epsilon keeps zero-valued pixels from collapsing the mean to zero;
    it also means the result of an all-black input is ``eps``, not 0.
    """
    values = np.asarray(values, dtype=np.float64)
    if mask is not None:
        values = values[np.asarray(mask, dtype=bool)]
    if values.size == 0:
        raise ValueError("geometric mean of an empty selection")
    return float(np.exp(np.mean(np.log(values + eps))))
