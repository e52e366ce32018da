"""Scene-segmented luminance adjustment of exposure stacks.

Before fusing, each input's luminance is locally contrast-enhanced, the scene
is split into brightness areas by a one-dimensional Gaussian mixture over the
pooled log luminances, and every area picks the input whose enhanced
luminance sits closest to a mid-gray key. Scaling that input's plane to the
key and compressing it through a halfway-anchored tone curve yields one
adjusted image per area; fusing the adjusted set instead of the raw stack
keeps badly exposed areas from dragging the result.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.special import logsumexp

from .luminance import LOG_EPS, luminance
from .synth import DEFAULT_KEY

#: luminances below this are treated as black when forming scaling ratios
DARK_EPS = 1e-6

_EM_MAX_ITER = 100
_EM_TOL = 1e-6
_EM_RETRIES = 3
_POOL_LIMIT = 150_000


class SegmentationError(RuntimeError):
    """Raised when the mixture fit collapses despite retries."""


@dataclass
class SslaConfig:
    """Knobs for the adjustment chain.

    ``areas=None`` uses one area per input image. ``sigma_frac`` sizes the
    local-average Gaussian relative to the short image side.
    """

    areas: int = None
    sigma_frac: float = 0.02
    seed: int = 0
    key: float = DEFAULT_KEY

    def __post_init__(self):
        if self.areas is not None and self.areas < 1:
            raise ValueError("areas must be at least 1")
        if not 0 < self.sigma_frac < 1:
            raise ValueError("sigma_frac must lie in (0, 1)")
        if not 0 < self.key < 1:
            raise ValueError("key must lie in (0, 1)")


@dataclass
class SegmentLabels:
    """Per-pixel area labels in [0, count)."""

    labels: np.ndarray
    count: int


@dataclass
class AdjustedSet:
    """One luminance-adjusted image per scene area, ready for fusion.

    ``sources`` records which input each area was adjusted from; ``scales``
    the per-area key-anchoring gains.
    """

    images: list
    sources: np.ndarray
    scales: np.ndarray
    segments: SegmentLabels


def enhance_local_contrast(stack, sigma_frac=0.02):
    """Divide squared luminance by its Gaussian local average, per input.

    Uniform regions map to themselves (up to the epsilon guard); values
    brighter than their surround are amplified, darker ones suppressed.
    """
    planes = []
    for img in stack.images:
        lum = luminance(img)
        sigma = sigma_frac * min(lum.shape)
        local = gaussian_filter(lum, sigma=sigma, mode="reflect")
        planes.append(lum * lum / (local + LOG_EPS))
    return planes


def _kmeanspp_means(data, k, rng):
    means = np.empty(k)
    means[0] = data[rng.integers(data.size)]
    d2 = (data - means[0]) ** 2
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            means[i:] = data[rng.integers(data.size, size=k - i)]
            break
        means[i] = data[rng.choice(data.size, p=d2 / total)]
        d2 = np.minimum(d2, (data - means[i]) ** 2)
    return means


def _fit_mixture(data, k, seed):
    """EM for a 1-D Gaussian mixture with seeded k-means++ starts.

    Variances are floored so delta spikes in the data (quantized blacks,
    clipped whites) cannot collapse a component. Starved components
    trigger fresh jittered starts; once the retry budget is spent the
    fit falls back to one fewer component, down to a single Gaussian.
    """
    rng = np.random.default_rng(seed)
    base_var = max(float(np.var(data)), 1e-8)
    var_floor = 1e-6 * base_var
    for attempt in range(1 + _EM_RETRIES):
        means = _kmeanspp_means(data, k, rng)
        means = means + rng.normal(scale=1e-3 * np.sqrt(base_var), size=k)
        variances = np.full(k, base_var)
        weights = np.full(k, 1.0 / k)
        prev = -np.inf
        starved = False
        for _ in range(_EM_MAX_ITER):
            log_resp = _log_densities(data, means, variances, weights)
            norm = logsumexp(log_resp, axis=0)
            resp = np.exp(log_resp - norm)
            nk = resp.sum(axis=1)
            if np.any(nk < 1e-10 * data.size):
                starved = True
                break
            means = resp @ data / nk
            variances = np.maximum(resp @ (data**2) / nk - means**2, var_floor)
            weights = nk / data.size
            loglik = float(np.mean(norm))
            if abs(loglik - prev) < _EM_TOL:
                break
            prev = loglik
        if not starved:
            return means, variances, weights
    if k > 1:
        return _fit_mixture(data, k - 1, seed + 1)
    raise SegmentationError("mixture fit failed for a single component")


def _log_densities(x, means, variances, weights):
    """(k, n) log of weight * normal pdf."""
    diff = x[None, :] - means[:, None]
    return (
        np.log(weights)[:, None]
        - 0.5 * np.log(2.0 * np.pi * variances)[:, None]
        - diff**2 / (2.0 * variances[:, None])
    )


def segment_scene(enhanced, areas, seed=0):
    """Label pixels into brightness areas via a pooled 1-D mixture.

    The mixture is fitted on subsampled log luminances pooled over all
    inputs; each pixel is labeled by the posterior averaged across its
    exposures, so the labeling is exposure-consensus rather than tied to
    any single input. Areas that end up empty are dropped.
    """
    logs = [np.log(plane + LOG_EPS) for plane in enhanced]
    pooled = np.concatenate([lg.ravel() for lg in logs])
    if float(pooled.max() - pooled.min()) < 1e-9:
        return SegmentLabels(labels=np.zeros(enhanced[0].shape, dtype=np.intp), count=1)
    areas = min(areas, np.unique(pooled).size)
    if areas == 1:
        return SegmentLabels(labels=np.zeros(enhanced[0].shape, dtype=np.intp), count=1)
    stride = max(1, int(np.ceil(pooled.size / _POOL_LIMIT)))
    means, variances, weights = _fit_mixture(pooled[::stride], areas, seed)
    areas = means.size  # the fit may have fallen back to fewer components

    posterior = np.zeros((areas,) + enhanced[0].shape)
    for lg in logs:
        log_resp = _log_densities(lg.ravel(), means, variances, weights)
        resp = np.exp(log_resp - logsumexp(log_resp, axis=0))
        posterior += resp.reshape((areas,) + lg.shape)
    labels = np.argmax(posterior, axis=0)

    used = np.unique(labels)
    if used.size < areas:
        remap = np.zeros(areas, dtype=np.intp)
        remap[used] = np.arange(used.size)
        labels = remap[labels]
        areas = used.size
    return SegmentLabels(labels=labels.astype(np.intp), count=int(areas))


def scale_luminance(enhanced, segments, key=DEFAULT_KEY):
    """Key-anchor each area to its best-exposed input.

    For every area, the input whose geometric-mean enhanced luminance over
    the area lands nearest the key is selected (ties to the lower index)
    and its whole plane is scaled so that the area mean hits the key
    exactly. Because the mean regularizes the log with a small epsilon,
    the initial key/mean gain is polished by a short fixed-point loop so
    the identity holds to machine precision rather than epsilon order.
    """
    labels = segments.labels
    sources = np.empty(segments.count, dtype=np.intp)
    scales = np.empty(segments.count)
    planes = []
    for m in range(segments.count):
        mask = labels == m
        gmeans = np.array(
            [np.exp(np.mean(np.log(plane[mask] + LOG_EPS))) for plane in enhanced]
        )
        sources[m] = int(np.argmin((key - gmeans) ** 2))
        alpha = key / gmeans[sources[m]]
        vals = enhanced[sources[m]][mask]
        for _ in range(4):
            current = np.exp(np.mean(np.log(alpha * vals + LOG_EPS)))
            alpha *= key / current
        scales[m] = alpha
        planes.append(alpha * enhanced[sources[m]])
    return planes, sources, scales


def tone_map_segment(plane):
    """Compress a scaled luminance plane into [0, 1].

    t -> t/(1+t) * (1 + t/peak^2) maps zero to zero and the plane's peak
    exactly to one, and is strictly increasing in between.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if np.any(plane < 0):
        raise ValueError("luminance must be non-negative")
    peak = float(plane.max())
    if peak == 0.0:
        return np.zeros_like(plane)
    return plane / (1.0 + plane) * (1.0 + plane / peak**2)


def recombine(tonemapped, stack, sources, original_lums):
    """Rebuild one color image per area from its source input.

    Each output scales the source image by the ratio of tone-mapped to
    original luminance, channel ratios intact; near-black sources get
    ratio zero, and results are clipped to the display cube.
    """
    images = []
    for plane, src in zip(tonemapped, sources):
        lum = original_lums[src]
        ratio = np.where(lum < DARK_EPS, 0.0, plane / np.maximum(lum, DARK_EPS))
        images.append(np.clip(ratio[..., None] * stack.images[src], 0.0, 1.0))
    return images


def ssla(stack, cfg=None):
    """Full adjustment chain: enhance, segment, scale, tone-map, recombine."""
    cfg = cfg or SslaConfig()
    areas = cfg.areas if cfg.areas is not None else len(stack)
    original_lums = [luminance(img) for img in stack.images]
    enhanced = enhance_local_contrast(stack, sigma_frac=cfg.sigma_frac)
    segments = segment_scene(enhanced, areas, seed=cfg.seed)
    planes, sources, scales = scale_luminance(enhanced, segments, key=cfg.key)
    tonemapped = [tone_map_segment(p) for p in planes]
    images = recombine(tonemapped, stack, sources, original_lums)
    return AdjustedSet(
        images=images, sources=sources, scales=scales, segments=segments
    )
