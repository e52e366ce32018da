"""Camera response recovery and radiance merging.

Two estimators recover the inverse response f^-1 (display value -> relative
exposure) from an exposure stack: a regularized least-squares solve for a
256-entry log table, and a ratio-constrained polynomial fit. Either result
merges the stack into a relative radiance map by averaging per-exposure
log-radiance estimates under a hat weighting that trusts mid-range values.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from .luminance import luminance

#: display grid the 256-entry tables live on
GRID = np.arange(256) / 255.0

#: log floor used in place of ln(0) when tabulating analytic curves
ZERO_FLOOR = 1.0 / 512.0


class EstimationFailed(RuntimeError):
    """Raised when the sampled data cannot constrain a response curve."""


def hat_weight(z):
    """Tent weighting on [0, 1]: z below the midpoint, 1 - z above.

    Zero at both ends, so clipped and black samples drop out of the
    weighted merge.
    """
    z = np.asarray(z, dtype=np.float64)
    return np.where(z <= 0.5, z, 1.0 - z)


@dataclass
class ResponseCurve:
    """Inverse response per channel, as a log table or a polynomial.

    ``kind`` is ``"lut256"`` (log_inv holds ln f^-1 on the 256-value display
    grid, arbitrary additive constant) or ``"polynomial"`` (coeffs holds
    ascending-power coefficients with f^-1(1) = 1).
    """

    kind: str
    log_inv: np.ndarray = None
    coeffs: np.ndarray = None

    def __post_init__(self):
        if self.kind == "lut256":
            self.log_inv = np.asarray(self.log_inv, dtype=np.float64)
            if self.log_inv.shape != (3, 256):
                raise ValueError("lut256 curves need a (3, 256) log table")
        elif self.kind == "polynomial":
            self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
            if self.coeffs.ndim != 2 or self.coeffs.shape[0] != 3:
                raise ValueError("polynomial curves need (3, degree+1) coefficients")
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def degree(self):
        if self.kind != "polynomial":
            raise ValueError("only polynomial curves have a degree")
        return self.coeffs.shape[1] - 1

    def log_inverse(self, z, channel):
        """ln f^-1 at display values ``z`` for one channel."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "lut256":
            return np.interp(z, GRID, self.log_inv[channel])
        value = np.polynomial.polynomial.polyval(z, self.coeffs[channel])
        return np.log(np.maximum(value, 1e-12))

    def inverse_normalized(self, z, channel):
        """f^-1 at ``z`` scaled so f^-1(1) = 1, for curve comparison."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "lut256":
            table = self.log_inv[channel]
            return np.exp(np.interp(z, GRID, table) - table[-1])
        value = np.polynomial.polynomial.polyval(z, self.coeffs[channel])
        return value / np.polynomial.polynomial.polyval(1.0, self.coeffs[channel])

    @classmethod
    def from_gamma(cls, gamma):
        """Analytic power-law curve tabulated on the display grid."""
        grid = GRID.copy()
        grid[0] = ZERO_FLOOR
        table = float(gamma) * np.log(grid)
        return cls(kind="lut256", log_inv=np.tile(table, (3, 1)))


def _monotone_projection(y):
    """Pool-adjacent-violators projection onto non-decreasing sequences."""
    values = list(np.asarray(y, dtype=np.float64))
    means = []
    counts = []
    for v in values:
        means.append(v)
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            total = means[-2] * counts[-2] + means[-1] * counts[-1]
            counts[-2] += counts[-1]
            means[-2] = total / counts[-2]
            means.pop()
            counts.pop()
    return np.repeat(means, counts)


def _sample_positions(stack, count):
    """Deterministic sample sites: grid candidates in the interquartile band
    of local luminance variance, stratified by mid-exposure intensity so the
    solve sees the whole display range."""
    mid = stack.images[len(stack) // 2]
    lum = luminance(mid)
    h, w = lum.shape
    mean = uniform_filter(lum, size=9, mode="reflect")
    var = uniform_filter(lum * lum, size=9, mode="reflect") - mean * mean

    step = max(1, int(np.sqrt(h * w / 65536.0)))
    rows, cols = np.meshgrid(
        np.arange(0, h, step), np.arange(0, w, step), indexing="ij"
    )
    rows, cols = rows.ravel(), cols.ravel()
    cand_var = var[rows, cols]
    lo, hi = np.percentile(cand_var, [25.0, 75.0])
    keep = (cand_var >= lo) & (cand_var <= hi)
    if keep.sum() < count:
        keep = np.ones_like(keep, dtype=bool)
    rows, cols = rows[keep], cols[keep]
    if rows.size == 0:
        raise EstimationFailed("no usable response samples")
    count = min(count, rows.size)  # small images yield what they have
    order = np.argsort(lum[rows, cols], kind="stable")
    picks = order[np.linspace(0, order.size - 1, count).round().astype(int)]
    return rows[picks], cols[picks]


def estimate_crf_debevec(stack, samples=256, smoothness=50.0):
    """Recover a 256-entry log inverse response by regularized least squares.

    Data rows tie each sample's table entry to a shared per-sample
    log radiance offset by the log integration time; curvature rows weighted
    by ``smoothness`` keep the table smooth; the mid-gray entry is pinned to
    zero to fix the scale. The solved table is projected to non-decreasing.
    """
    n_images = len(stack)
    if n_images < 2:
        raise ValueError("response estimation needs at least two exposures")
    if samples * n_images < 256 + samples:
        raise ValueError(
            "underdetermined system: samples * images must reach 256 + samples"
        )
    rows, cols = _sample_positions(stack, samples)
    samples = rows.size
    if samples * n_images < 256 + samples:
        raise EstimationFailed("too few usable samples for a determined solve")
    log_dt = np.log(stack.times)
    weights = hat_weight(GRID)

    tables = np.empty((3, 256))
    for ch in range(3):
        z = np.stack(
            [
                np.floor(img[rows, cols, ch] * 255.0 + 0.5).astype(int)
                for img in stack.images
            ],
            axis=1,
        )  # (samples, n_images)
        n_rows = samples * n_images + 255 + 1
        a = np.zeros((n_rows, 256 + samples))
        b = np.zeros(n_rows)
        k = 0
        for i in range(samples):
            for j in range(n_images):
                zij = z[i, j]
                wij = weights[zij]
                a[k, zij] = wij
                a[k, 256 + i] = -wij
                b[k] = wij * log_dt[j]
                k += 1
        a[k, 128] = 1.0  # pin mid-gray so the scale ambiguity is fixed
        k += 1
        for idx in range(1, 255):
            w = smoothness * weights[idx]
            a[k, idx - 1] = w
            a[k, idx] = -2.0 * w
            a[k, idx + 1] = w
            k += 1
        solution, *_ = np.linalg.lstsq(a, b, rcond=None)
        tables[ch] = _monotone_projection(solution[:256])
    return ResponseCurve(kind="lut256", log_inv=tables)


_MITSUNAGA_DEGREES = (3, 4, 5, 6, 7)
_IMPROVE = 0.9  # a higher degree must cut the residual by 10% to be kept
_CLIP_LO = 1.0 / 255.0
_CLIP_HI = 254.0 / 255.0


def _fit_ratio_polynomial(z_lo, z_hi, ratio, degree):
    """Least-squares polynomial f^-1 with f^-1(1) = 1 from exposure ratios.

    Each observation pair demands f^-1(z_lo)/f^-1(z_hi) = ratio; the
    normalization eliminates the top coefficient.
    """
    n_coef = degree + 1
    d = np.stack(
        [z_lo**n - ratio * z_hi**n for n in range(n_coef)], axis=1
    )  # (rows, n_coef)
    a = d[:, :-1] - d[:, -1:]
    b = -d[:, -1]
    partial, *_ = np.linalg.lstsq(a, b, rcond=None)
    coeffs = np.append(partial, 1.0 - partial.sum())
    residual = float(np.mean((d @ coeffs) ** 2))
    return coeffs, residual


def estimate_crf_mitsunaga(stack, degree=None, samples=4096):
    """Recover a polynomial inverse response from adjacent-exposure ratios.

    With ``degree=None`` the degree is grown from 3 to 7, keeping a higher
    degree only while it stays monotone on the display grid and cuts the
    constraint residual appreciably. Least-residual selection alone is
    unsafe: when observations cluster (few distinct scene levels), wild
    high-degree fits win the residual contest while misbehaving between
    clusters. Saturated or near-black observations are excluded; if too
    few remain the estimation fails.
    """
    n_images = len(stack)
    if n_images < 2:
        raise ValueError("response estimation needs at least two exposures")
    if degree is not None and degree < 2:
        raise ValueError("polynomial degree must be at least 2")
    degrees = _MITSUNAGA_DEGREES if degree is None else (int(degree),)

    rows, cols = _sample_positions(stack, min(samples, 8192))
    times = stack.times
    coeffs = []
    chosen_degree = None
    for ch in range(3):
        z = np.stack([img[rows, cols, ch] for img in stack.images], axis=1)
        z_lo_all, z_hi_all, ratio_all = [], [], []
        for j in range(n_images - 1):
            za, zb = z[:, j], z[:, j + 1]
            ok = (
                (za > _CLIP_LO)
                & (za < _CLIP_HI)
                & (zb > _CLIP_LO)
                & (zb < _CLIP_HI)
            )
            z_lo_all.append(za[ok])
            z_hi_all.append(zb[ok])
            ratio_all.append(np.full(ok.sum(), times[j] / times[j + 1]))
        z_lo = np.concatenate(z_lo_all)
        z_hi = np.concatenate(z_hi_all)
        ratio = np.concatenate(ratio_all)

        best = None
        fallback = None
        for deg in degrees:
            if z_lo.size < 4 * (deg + 1):
                continue
            c, residual = _fit_ratio_polynomial(z_lo, z_hi, ratio, deg)
            values = np.polynomial.polynomial.polyval(GRID, c)
            # tolerate numerical micro-dips; reject genuine wiggles
            monotone = bool(np.all(np.diff(values) >= -1e-3))
            if fallback is None or residual < fallback[1]:
                fallback = (c, residual, deg)
            if not monotone:
                if best is not None:
                    break  # higher degrees only wiggle more
                continue
            if best is not None and residual > _IMPROVE * best[1]:
                break  # no appreciable gain; keep the lower degree
            best = (c, residual, deg)
        if best is None:
            best = fallback
        if best is None:
            raise EstimationFailed(
                "too few unclipped observations to fit a response polynomial"
            )
        coeffs.append(best[0])
        chosen_degree = best[2] if chosen_degree is None else max(chosen_degree, best[2])

    width = max(c.size for c in coeffs)
    padded = np.zeros((3, width))
    for ch, c in enumerate(coeffs):
        padded[ch, : c.size] = c
    return ResponseCurve(kind="polynomial", coeffs=padded)


def merge_hdr(stack, curve, weight_fn=hat_weight):
    """Merge an exposure stack into a relative radiance map.

    Per channel, each exposure contributes ln f^-1(z) - ln dt, averaged
    under ``weight_fn``; pixels whose weights vanish everywhere (clipped in
    every exposure) fall back to the single exposure closest to mid-range.
    Scaling all integration times by s divides the result by s.
    """
    z = np.stack(stack.images)  # (N, H, W, 3)
    log_dt = np.log(stack.times)
    log_e = np.empty_like(z)
    for ch in range(3):
        log_e[..., ch] = curve.log_inverse(z[..., ch], ch)
    log_e -= log_dt[:, None, None, None]
    w = weight_fn(z)
    den = w.sum(axis=0)
    num = (w * log_e).sum(axis=0)
    with np.errstate(invalid="ignore"):
        merged = num / den
    empty = den == 0.0
    if np.any(empty):
        nearest = np.argmin(np.abs(z - 0.5), axis=0)
        fallback = np.take_along_axis(log_e, nearest[None], axis=0)[0]
        merged = np.where(empty, fallback, merged)
    return np.exp(merged)


def crf_mse(curve, gamma):
    """Per-channel mean squared error against a power-law inverse response.

    Both curves are sampled at the 256 display values and normalized so
    f^-1(1) = 1 before comparison.
    """
    reference = GRID ** float(gamma)
    return np.array(
        [
            float(np.mean((curve.inverse_normalized(GRID, ch) - reference) ** 2))
            for ch in range(3)
        ]
    )


# ---------------------------------------------------------------------------
# Text serialization (17 significant digits round-trips float64 exactly)

def save_curve(path, curve):
    """Write a curve as text: a kind line, then the table or coefficients."""
    lines = [f"huefuse-crf {curve.kind}"]
    if curve.kind == "lut256":
        for i in range(256):
            row = " ".join(f"{curve.log_inv[ch, i]:.17g}" for ch in range(3))
            lines.append(f"{GRID[i]:.17g} {row}")
    else:
        lines.append(f"degree {curve.degree}")
        for ch, name in enumerate("rgb"):
            row = " ".join(f"{v:.17g}" for v in curve.coeffs[ch])
            lines.append(f"{name} {row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_curve(path):
    """Read a curve written by :func:`save_curve`."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or not lines[0].startswith("huefuse-crf "):
        raise ValueError("not a response curve file")
    kind = lines[0].split(None, 1)[1]
    if kind == "lut256":
        if len(lines) != 257:
            raise ValueError("lut256 curve file needs 256 data lines")
        table = np.empty((3, 256))
        for i, line in enumerate(lines[1:]):
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"malformed curve line {i + 2}")
            table[:, i] = [float(p) for p in parts[1:]]
        return ResponseCurve(kind="lut256", log_inv=table)
    if kind == "polynomial":
        if len(lines) != 5 or not lines[1].startswith("degree "):
            raise ValueError("malformed polynomial curve file")
        degree = int(lines[1].split()[1])
        coeffs = np.empty((3, degree + 1))
        order = {"r": 0, "g": 1, "b": 2}
        for line in lines[2:]:
            parts = line.split()
            if parts[0] not in order or len(parts) != degree + 2:
                raise ValueError("malformed polynomial coefficient line")
            coeffs[order[parts[0]]] = [float(p) for p in parts[1:]]
        return ResponseCurve(kind="polynomial", coeffs=coeffs)
    raise ValueError(f"unknown curve kind {kind!r}")
