"""Foveated image domain: radial mapping between buffer and display, its
numeric inverse, lens composition and resampling back to display pixels.

``foveate_to_display`` maps a buffer NDC point to the display NDC point its
ray looks through; ``display_to_buffer`` is its inverse.  With a power
falloff ``p(d) = sqrt(2) * (d / sqrt(2)) ** alpha`` and ``alpha > 1`` the
buffer spends more pixels per unit display area near the fovea.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import NotMonotone

SQRT2 = math.sqrt(2.0)
DEFAULT_TABLE_SIZE = 4096


class InverseTable:
    """Numeric inverse of a monotone radial function.

    ``p`` is sampled on a uniform grid over ``[0, d_max]``.  Lookups bracket
    the argument by binary search, start from the linear interpolant and
    refine by bisection on ``p`` itself.
    """

    def __init__(self, p, table_size=DEFAULT_TABLE_SIZE, d_max=SQRT2, refine=40):
        self.p = p
        self.d = np.linspace(0.0, d_max, table_size)
        self.y = np.asarray(p(self.d), dtype=np.float64)
        if not np.all(np.isfinite(self.y)) or np.any(np.diff(self.y) <= 0.0):
            raise NotMonotone("p must be strictly increasing over the tabulated domain")
        self.refine = refine

    def linear(self, y):
        """Table-only estimate (binary search + linear interpolation)."""
        return np.interp(y, self.y, self.d)

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        k = np.clip(np.searchsorted(self.y, y), 1, len(self.y) - 1)
        lo = self.d[k - 1].copy()
        hi = self.d[k].copy()
        # beyond the table: grow the bracket geometrically
        above = y > self.y[-1]
        if np.any(above):
            lo = np.where(above, self.d[-1], lo)
            hi = np.where(above, 2.0 * self.d[-1], hi)
            for _ in range(64):
                short = above & (self.p(hi) < y)
                if not np.any(short):
                    break
                lo = np.where(short, hi, lo)
                hi = np.where(short, 2.0 * hi, hi)
        below = y <= self.y[0]
        for _ in range(self.refine):
            mid = 0.5 * (lo + hi)
            go_right = self.p(mid) < y
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        out = 0.5 * (lo + hi)
        return np.where(below, self.d[0], out)


def invert_p(p, table_size=DEFAULT_TABLE_SIZE):
    return InverseTable(p, table_size)


def power_falloff(alpha):
    """``p(d) = sqrt(2) (d / sqrt(2)) ** alpha`` and its closed-form inverse."""
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def p(d):
        return SQRT2 * (np.maximum(d, 0.0) / SQRT2) ** alpha

    def p_inv(y):
        return SQRT2 * (np.maximum(y, 0.0) / SQRT2) ** (1.0 / alpha)

    return p, p_inv


def tabulated_falloff(values):
    """Piecewise-linear p through ``values`` sampled uniformly on [0, sqrt 2].

    Extrapolates linearly past sqrt 2 so off-centre foveae stay defined.
    """
    ys = np.asarray(values, dtype=np.float64)
    if ys.ndim != 1 or len(ys) < 2:
        raise ValueError("p_table needs at least two samples")
    ds = np.linspace(0.0, SQRT2, len(ys))
    slope = (ys[-1] - ys[-2]) / (ds[-1] - ds[-2])

    def p(d):
        d = np.asarray(d, dtype=np.float64)
        inside = np.interp(d, ds, ys)
        return np.where(d > SQRT2, ys[-1] + (d - SQRT2) * slope, inside)

    return p


@dataclass(frozen=True)
class LensModel:
    """Radial barrel distortion ``d (1 + k1 d^2 + k2 d^4 + k3 d^6)``."""

    coeffs: tuple = (0.0, 0.0, 0.0)

    def p(self, d):
        d = np.asarray(d, dtype=np.float64)
        k1, k2, k3 = (tuple(self.coeffs) + (0.0, 0.0, 0.0))[:3]
        d2 = d * d
        return d * (1.0 + d2 * (k1 + d2 * (k2 + d2 * k3)))


@dataclass(frozen=True)
class FoveationMap:
    fovea: tuple = (0.0, 0.0)
    p: object = None
    p_inv: object = None
    table_size: int = DEFAULT_TABLE_SIZE
    alpha: float = None
    # map used when resampling for display; differs from self only after
    # lens composition (the lens warp happens optically)
    display: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.p is None:
            object.__setattr__(self, "p", lambda d: np.asarray(d, dtype=np.float64))
            object.__setattr__(self, "p_inv", lambda y: np.asarray(y, dtype=np.float64))
            object.__setattr__(self, "alpha", 1.0)
        elif self.p_inv is None:
            object.__setattr__(self, "p_inv", invert_p(self.p, self.table_size))
        object.__setattr__(self, "fovea", tuple(float(c) for c in self.fovea))

    @classmethod
    def identity(cls, fovea=(0.0, 0.0)):
        return cls(fovea)

    @classmethod
    def power(cls, alpha, fovea=(0.0, 0.0)):
        p, p_inv = power_falloff(alpha)
        return cls(fovea, p, p_inv, alpha=float(alpha))

    @classmethod
    def from_table(cls, values, fovea=(0.0, 0.0), table_size=DEFAULT_TABLE_SIZE):
        return cls(fovea, tabulated_falloff(values), table_size=table_size)

    @classmethod
    def from_config(cls, block):
        """Build from ``{"fovea": [x, y], "alpha": a}`` or ``{..., "p_table": [...]}``."""
        fovea = tuple(block.get("fovea", (0.0, 0.0)))
        if "p_table" in block:
            m = cls.from_table(block["p_table"], fovea)
        else:
            m = cls.power(block.get("alpha", 2.0), fovea)
        if "lens" in block:
            m = compose_lens(m, LensModel(tuple(block["lens"]["coeffs"])))
        return m

    @property
    def is_identity(self):
        return self.alpha == 1.0 and self.display is None

    @property
    def display_map(self):
        return self.display if self.display is not None else self

    def with_fovea(self, fovea):
        disp = None if self.display is None else self.display.with_fovea(fovea)
        return replace(self, fovea=tuple(fovea), display=disp)


def _radial(x, fovea, f):
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(fovea, dtype=np.float64)
    rel = x - c
    r = np.sqrt(np.sum(rel * rel, axis=-1))
    pos = r > 0.0
    safe = np.where(pos, r, 1.0)
    scale = np.where(pos, f(safe) / safe, 0.0)
    return c + rel * scale[..., None]


def foveate_to_display(fmap, x_buf):
    """Display NDC point seen through buffer NDC point ``x_buf``."""
    return _radial(x_buf, fmap.fovea, fmap.p)


def display_to_buffer(fmap, x_disp):
    """Buffer NDC point that images display NDC point ``x_disp``."""
    return _radial(x_disp, fmap.fovea, fmap.p_inv)


def compose_lens(fmap, lens):
    """Map whose falloff is ``p_c(p_l(d))``; display resampling keeps ``p_c``."""
    p_c = fmap.p
    p_l = lens.p

    def p(d):
        return p_c(p_l(d))

    probe = np.linspace(0.0, SQRT2, 1024)
    if np.any(np.diff(p_l(probe)) <= 0.0):
        raise NotMonotone("lens distortion is not monotone over the working radius")
    return FoveationMap(fmap.fovea, p, invert_p(p, fmap.table_size), fmap.table_size,
                        alpha=None, display=fmap.display_map)


# --- display resampling -----------------------------------------------------

def _display_grid(out_size):
    w, h = out_size
    x = (np.arange(w) + 0.5) / w * 2.0 - 1.0
    y = 1.0 - (np.arange(h) + 0.5) / h * 2.0
    X, Y = np.meshgrid(x, y)
    return np.stack([X, Y], axis=-1)


def _ndc_to_index(p, w, h):
    """Continuous (row, col) array index of an NDC point; centres are integral."""
    col = (p[..., 0] + 1.0) * 0.5 * w - 0.5
    row = (1.0 - p[..., 1]) * 0.5 * h - 0.5
    return row, col


def mip_pyramid(img):
    levels = [np.asarray(img, dtype=np.float64)]
    while min(levels[-1].shape[:2]) > 1:
        a = levels[-1]
        h, w = a.shape[:2]
        if h % 2:
            a = np.concatenate([a, a[-1:]], axis=0)
        if w % 2:
            a = np.concatenate([a, a[:, -1:]], axis=1)
        a = 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])
        levels.append(a)
    return levels


def _sample_cubic(level, row, col):
    chans = [ndimage.map_coordinates(level[..., c], [row, col], order=3, mode="nearest")
             for c in range(level.shape[2])]
    return np.stack(chans, axis=-1)


def footprint_scale(fmap, out_size, buf_size):
    """Largest singular value of d(display_to_buffer), buffer px per display px."""
    w, h = out_size
    bw, bh = buf_size
    g = _display_grid(out_size)
    hx = np.array([1.0 / w, 0.0])
    hy = np.array([0.0, 1.0 / h])
    to_px = np.array([bw * 0.5, bh * 0.5])
    jx = (display_to_buffer(fmap, g + hx) - display_to_buffer(fmap, g - hx)) * to_px
    jy = (display_to_buffer(fmap, g + hy) - display_to_buffer(fmap, g - hy)) * to_px
    a, c = jx[..., 0], jx[..., 1]
    b, d = jy[..., 0], jy[..., 1]
    # singular values of [[a, b], [c, d]]
    s1 = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.sqrt(np.maximum(s1 * s1 - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (s1 + disc))


def unfoveate_mip(img, fmap, out_size=None):
    """Resample a foveated buffer to display pixels with trilinear MIP lookup.

    The MIP level follows the local footprint of ``display_to_buffer``; each
    level is sampled with a cubic spline and adjacent levels are blended.
    """
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[..., None]
    bh, bw = img.shape[:2]
    out_size = out_size or (bw, bh)
    fmap = fmap.display_map
    levels = mip_pyramid(img)
    g = _display_grid(out_size)
    src = display_to_buffer(fmap, g)
    row, col = _ndc_to_index(src, bw, bh)
    lod = np.clip(np.log2(np.maximum(footprint_scale(fmap, out_size, (bw, bh)), 1.0)),
                  0.0, len(levels) - 1)
    l0 = np.floor(lod).astype(int)
    frac = lod - l0
    out = np.zeros(row.shape + (img.shape[2],))
    for k in np.unique(l0):
        sel = l0 == k
        s = 0.5 ** k
        a = _sample_cubic(levels[k], (row[sel] + 0.5) * s - 0.5, (col[sel] + 0.5) * s - 0.5)
        if k + 1 < len(levels):
            s2 = 0.5 ** (k + 1)
            b = _sample_cubic(levels[k + 1], (row[sel] + 0.5) * s2 - 0.5, (col[sel] + 0.5) * s2 - 0.5)
            f = frac[sel][:, None]
            a = (1.0 - f) * a + f * b
        out[sel] = a
    lo = img.min(axis=(0, 1))
    hi = img.max(axis=(0, 1))
    out = np.clip(out, lo, hi)
    return out[..., 0] if squeeze else out


def gather_weights(fmap, buf_size, out_size, sigma=1.0, radius=2):
    """Source indices and normalised weights of the 5x5 display gather.

    Returns ``(rows, cols, weights)`` each shaped (H, W, K) with K = 25.
    Weights are Gaussian in display-pixel distance between the output pixel
    and the display position of each buffer sample; out-of-range samples get
    zero weight.
    """
    bw, bh = buf_size
    w, h = out_size
    fmap = fmap.display_map
    g = _display_grid(out_size)
    row, col = _ndc_to_index(display_to_buffer(fmap, g), bw, bh)
    r0 = np.rint(row).astype(np.int64)
    c0 = np.rint(col).astype(np.int64)
    offs = np.arange(-radius, radius + 1)
    oy, ox = np.meshgrid(offs, offs, indexing="ij")
    rows = r0[..., None] + oy.ravel()
    cols = c0[..., None] + ox.ravel()
    valid = (rows >= 0) & (rows < bh) & (cols >= 0) & (cols < bw)
    # buffer sample centres -> display NDC
    bx = (cols + 0.5) / bw * 2.0 - 1.0
    by = 1.0 - (rows + 0.5) / bh * 2.0
    disp = foveate_to_display(fmap, np.stack([bx, by], axis=-1))
    dx = (disp[..., 0] - g[..., None, 0]) * (w * 0.5)
    dy = (disp[..., 1] - g[..., None, 1]) * (h * 0.5)
    d2 = dx * dx + dy * dy
    wts = np.where(valid, np.exp(-d2 / (2.0 * sigma * sigma)), 0.0)
    tot = wts.sum(axis=-1, keepdims=True)
    # all samples underflowed: fall back to the nearest valid one
    dead = tot[..., 0] <= 1e-300
    if np.any(dead):
        nearest = np.argmin(np.where(valid, d2, np.inf), axis=-1)
        onehot = np.zeros_like(wts)
        np.put_along_axis(onehot, nearest[..., None], 1.0, axis=-1)
        wts = np.where(dead[..., None], onehot, wts)
        tot = wts.sum(axis=-1, keepdims=True)
    return np.clip(rows, 0, bh - 1), np.clip(cols, 0, bw - 1), wts / tot


def unfoveate_gather(img, fmap, out_size=None, sigma=1.0):
    """Display image as a normalised 5x5 gather over the foveated buffer."""
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[..., None]
    bh, bw = img.shape[:2]
    out_size = out_size or (bw, bh)
    rows, cols, wts = gather_weights(fmap, (bw, bh), out_size, sigma)
    out = np.einsum("hwk,hwkc->hwc", wts, img[rows, cols])
    return out[..., 0] if squeeze else out
