"""Render exposure stacks from a radiance map.

The camera model: scale the radiance map so the geometric mean of its
luminance lands on a mid-gray key, multiply by the relative integration time
2^v, clip to the sensor range, apply the display gamma, and quantize to 8
bits. Quantization rounds half away from zero, matching the PNG writer, so a
rendered stack saved to disk and reloaded is bit-identical.
"""

from dataclasses import dataclass, field

import numpy as np

from .luminance import geometric_mean, luminance
from .stack import ExposureStack

#: mid-gray key the zero-EV exposure is anchored to
DEFAULT_KEY = 0.18


@dataclass
class SynthConfig:
    """Rendering protocol for synthetic stacks."""

    ev_list: list = field(default_factory=lambda: [-4.0, -2.0, 0.0, 2.0, 4.0])
    gamma: float = 2.2
    key: float = DEFAULT_KEY

    def __post_init__(self):
        if len(self.ev_list) == 0:
            raise ValueError("ev_list must not be empty")
        if len(set(float(v) for v in self.ev_list)) != len(self.ev_list):
            raise ValueError("ev_list values must be distinct")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0 < self.key < 1:
            raise ValueError("key must lie in (0, 1)")


def quantize_display(img):
    """8-bit quantization on the [0, 1] grid, rounding half away from zero."""
    img = np.asarray(img, dtype=np.float64)
    return np.floor(img * 255.0 + 0.5) / 255.0


def generate_exposure(hdr, v, cfg=None, quantize=True):
    """Render one exposure at EV ``v`` from a linear radiance map.

    The radiance map is keyed so its geometric-mean luminance maps to
    ``cfg.key`` at v = 0; sensor clipping happens before the gamma curve.
    """
    cfg = cfg or SynthConfig()
    hdr = np.asarray(hdr, dtype=np.float64)
    if hdr.ndim != 3 or hdr.shape[-1] != 3:
        raise ValueError("hdr must be an (H, W, 3) radiance map")
    if np.any(hdr < 0) or not np.all(np.isfinite(hdr)):
        raise ValueError("radiance values must be finite and non-negative")
    lum = luminance(hdr)
    if np.all(lum == 0):
        raise ValueError("all-black radiance map cannot be keyed")
    alpha = cfg.key / geometric_mean(lum)
    x = np.clip(np.power(2.0, float(v)) * alpha * hdr, 0.0, 1.0)
    display = np.power(x, 1.0 / cfg.gamma)
    return quantize_display(display) if quantize else display


def generate_stack(hdr, cfg=None):
    """Render the full EV list into an :class:`ExposureStack`.

    Relative integration times are 2^v, so the stack is self-consistent
    with response-curve estimation and radiance merging.
    """
    cfg = cfg or SynthConfig()
    images = [generate_exposure(hdr, v, cfg) for v in cfg.ev_list]
    times = np.power(2.0, np.asarray(cfg.ev_list, dtype=np.float64))
    return ExposureStack(images=images, times=times)
