"""Image similarity and sample-test-efficiency bookkeeping."""
import csv
import io
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, EmptyMask
from .imageio import to_uint8

SSIM_SIGMA = 1.5
SSIM_WIN = 11
K1, K2 = 0.01, 0.03
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class STEStats:
    ids: np.ndarray
    tested: np.ndarray
    passed: np.ndarray
    method: str = ""

    @property
    def fragments_tested(self):
        return int(np.sum(self.tested))

    @property
    def fragments_passed(self):
        return int(np.sum(self.passed))

    @property
    def aggregate(self):
        t = self.fragments_tested
        return self.fragments_passed / t if t else float("nan")

    def per_primitive(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.tested > 0, self.passed / np.maximum(self.tested, 1), np.nan)


def luma(img):
    """8-bit-scale BT.601 luma of an image (float input is sRGB encoded first)."""
    a = to_uint8(img).astype(np.float64)
    if a.ndim == 2:
        return a
    return a[..., :3] @ LUMA


def _blur(x):
    return ndimage.gaussian_filter(x, SSIM_SIGMA, truncate=3.5, mode="reflect")


def ssim_map(a, b, data_range=255.0):
    """Per-pixel SSIM of two luma arrays (Gaussian 11x11 window, population stats)."""
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    mu_a = _blur(a)
    mu_b = _blur(b)
    var_a = _blur(a * a) - mu_a * mu_a
    var_b = _blur(b * b) - mu_b * mu_b
    cov = _blur(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def masked_ssim(a, b, mask=None):
    """Mean SSIM over windows that lie inside the image and avoid the mask.

    ``mask`` marks pixels to ignore (disoccluded); any window touching one is
    dropped.  Raises :class:`EmptyMask` when no window survives.
    """
    la, lb = luma(a), luma(b)
    if la.shape != lb.shape:
        raise DimensionMismatch(f"image shapes differ: {la.shape} vs {lb.shape}")
    if mask is not None and np.shape(mask) != la.shape:
        raise DimensionMismatch(f"mask shape {np.shape(mask)} does not match {la.shape}")
    pad = (SSIM_WIN - 1) // 2
    h, w = la.shape
    if h <= 2 * pad or w <= 2 * pad:
        raise EmptyMask("image smaller than the SSIM window")
    s = ssim_map(la, lb)
    valid = np.zeros_like(la, dtype=bool)
    valid[pad:h - pad, pad:w - pad] = True
    if mask is not None:
        touched = ndimage.maximum_filter(np.asarray(mask, dtype=np.uint8), size=SSIM_WIN,
                                         mode="constant", cval=0) > 0
        valid &= ~touched
    if not np.any(valid):
        raise EmptyMask("every SSIM window touches a masked pixel")
    return float(np.mean(s[valid]))


def crop_window(shape, center, size=64):
    """(row slice, col slice) of a size x size window around ``center`` (x, y),
    shifted to stay inside the image."""
    h, w = shape[:2]
    cx, cy = center
    sw, sh = min(size, w), min(size, h)
    x0 = int(np.clip(round(cx - sw / 2), 0, w - sw))
    y0 = int(np.clip(round(cy - sh / 2), 0, h - sh))
    return slice(y0, y0 + sh), slice(x0, x0 + sw)


def foveal_ssim(a, b, fovea, size=64, mask=None):
    """SSIM of the size x size crop centred on pixel ``fovea`` = (x, y)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"image shapes differ: {a.shape} vs {b.shape}")
    rs, cs = crop_window(a.shape, fovea, size)
    m = None if mask is None else np.asarray(mask)[rs, cs]
    return masked_ssim(a[rs, cs], b[rs, cs], m)


def fovea_pixel(fovea_ndc, width, height):
    return ((fovea_ndc[0] + 1.0) * 0.5 * width, (1.0 - fovea_ndc[1]) * 0.5 * height)


def box_downsample(img, factor):
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    h2, w2 = h // factor, w // factor
    a = img[: h2 * factor, : w2 * factor]
    return a.reshape(h2, factor, w2, factor, *img.shape[2:]).mean(axis=(1, 3))


def supersample_reference(scene, config, factor=4):
    """Uniform display-domain reference rendered at ``factor`` x resolution and
    box filtered (in linear light) back down.

    Foveation is dropped (the reference is what an ideal display shows);
    rolling time is kept for rolling and joint configs.
    """
    from .pipeline import render

    mode = {"common": "common", "foveated": "common", "rolling": "rolling", "joint": "rolling"}[config.mode]
    hi = replace(config, mode=mode, bound=None, width=config.width * factor,
                 height=config.height * factor, fmap=None, unfoveate=None)
    return box_downsample(render(scene, hi).image, factor)


def ste_rows(stats):
    rows = [(int(i), int(t), int(p), (p / t) if t else float("nan"))
            for i, t, p in zip(stats.ids, stats.tested, stats.passed)]
    rows.append(("all", stats.fragments_tested, stats.fragments_passed, stats.aggregate))
    return rows


def ste_report(stats, out=None):
    """Write per-primitive STE as CSV to ``out`` (path or text stream).

    ``stats`` may be a single :class:`STEStats` or a list of them (one per
    bound method); the returned summary maps method to aggregate STE.
    """
    runs = stats if isinstance(stats, (list, tuple)) else [stats]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    multi = len(runs) > 1
    wr.writerow((["method"] if multi else []) + ["id", "tested", "passed", "ste"])
    for s in runs:
        for row in ste_rows(s):
            wr.writerow(([s.method] if multi else []) + list(row))
    if out is not None:
        if hasattr(out, "write"):
            out.write(buf.getvalue())
        else:
            from .imageio import atomic_write

            atomic_write(out, buf.getvalue().encode())
    return {s.method: s.aggregate for s in runs}
