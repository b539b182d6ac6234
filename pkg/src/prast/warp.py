"""Rolling image warping baseline.

A frame rendered at t = 0 is turned into a pixel-centred grid mesh, each
grid vertex is moved to where the rolling display would show it, and the
mesh is rasterized forward with a depth test.  Grid triangles that stretch
by more than a threshold are dropped; pixels left uncovered are marked in
the disocclusion mask.
"""
import math

import numpy as np

from . import kernels
from ._backend import njit
from .geometry import pixel_centers, ray_directions
from .imageio import srgb_decode

BACKGROUND_Z = 1e30
FILL = float(srgb_decode(0.5))


def _lerp(a, b, t):
    # exact when a == b
    return a + t * (b - a)


def grid_targets(depth, camera, view, scan):
    """Destination pixel position and depth of every source pixel centre.

    ``depth`` is the t = 0 G-buffer depth (inf for background, which is
    treated as directions at infinity).  Returns ``(px, py, pz, valid)``.
    """
    h, w = depth.shape
    X, Y = pixel_centers(w, h)
    d = ray_directions(X, Y, camera).reshape(-1, 3)
    z = depth.reshape(-1)
    fg = np.isfinite(z)
    cam0 = np.where(fg[:, None], d * np.where(fg, z / -d[:, 2], 0.0)[:, None], d)
    hom = np.concatenate([cam0, fg[:, None].astype(np.float64)], axis=1)
    inv0 = np.linalg.inv(view.start)
    world = hom @ inv0.T
    world[:, 3] = hom[:, 3]
    cs = world @ view.start.T
    ce = world @ view.end.T
    P = camera.projection()

    def project(t):
        c = _lerp(cs, ce, t[:, None])
        clip = c @ P.T
        ok = clip[:, 3] > 0.0
        wq = np.where(ok, clip[:, 3], 1.0)
        return clip[:, 0] / wq, clip[:, 1] / wq, -c[:, 2], ok

    src = np.stack([X.reshape(-1), Y.reshape(-1)], axis=1)
    x0, y0, _, ok0 = project(np.zeros(len(z)))
    if scan is None or scan.is_static:
        t = np.zeros(len(z))
    else:
        t = np.clip(scan.time(src), 0.0, 1.0)
        x1, y1, _, _ = project(t)
        t = np.clip(scan.time(np.stack([x1, y1], axis=1)), 0.0, 1.0)
    x2, y2, zz, ok2 = project(t)
    # displacement form keeps a motionless camera exactly on the grid
    jj, ii = np.divmod(np.arange(h * w), w)
    px = (ii + 0.5) + (x2 - x0) * (0.5 * w)
    py = (jj + 0.5) - (y2 - y0) * (0.5 * h)
    pz = np.where(fg, zz, BACKGROUND_Z)
    return px, py, pz, ok0 & ok2


@njit(error_model="numpy")
def _tri_setup(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(error_model="numpy")
def _bary(ax, ay, bx, by, cx, cy, area, x, y):
    w0 = ((bx - x) * (cy - y) - (by - y) * (cx - x)) / area
    w1 = ((cx - x) * (ay - y) - (cy - y) * (ax - x)) / area
    w2 = 1.0 - w0 - w1
    return w0, w1, w2


_tri_setup_np = getattr(_tri_setup, "py_func", _tri_setup)
_bary_np = getattr(_bary, "py_func", _bary)


def _grid_triangles(w, h):
    """(M, 3) vertex indices and (M, 3) source edge lengths (ab, bc, ca)."""
    i, j = np.meshgrid(np.arange(w - 1), np.arange(h - 1))
    a = (j * w + i).ravel()
    b = a + 1
    c = a + w
    d = c + 1
    tris = np.empty((2 * len(a), 3), dtype=np.int64)
    tris[0::2] = np.stack([a, b, c], axis=1)
    tris[1::2] = np.stack([b, d, c], axis=1)
    lens = np.empty((len(tris), 3))
    lens[0::2] = (1.0, math.sqrt(2.0), 1.0)
    lens[1::2] = (1.0, 1.0, math.sqrt(2.0))
    return tris, lens


def _keep_mask(px, py, valid, tris, lens, threshold):
    ok = valid[tris].all(axis=1)
    for e, (u, v) in enumerate(((0, 1), (1, 2), (2, 0))):
        dx = px[tris[:, v]] - px[tris[:, u]]
        dy = py[tris[:, v]] - py[tris[:, u]]
        ok &= np.sqrt(dx * dx + dy * dy) <= threshold * lens[:, e]
    return ok


@njit(error_model="numpy")
def _warp_numba(px, py, pz, col, tris, keep, w, h, out, zbuf, ids):
    for k in range(tris.shape[0]):
        if not keep[k]:
            continue
        a, b, c = tris[k, 0], tris[k, 1], tris[k, 2]
        ax, ay, bx, by, cx, cy = px[a], py[a], px[b], py[b], px[c], py[c]
        area = _tri_setup(ax, ay, bx, by, cx, cy)
        if area == 0.0:
            continue
        i0 = max(0, int(math.ceil(min(ax, bx, cx) - 0.5)))
        i1 = min(w - 1, int(math.floor(max(ax, bx, cx) - 0.5)))
        j0 = max(0, int(math.ceil(min(ay, by, cy) - 0.5)))
        j1 = min(h - 1, int(math.floor(max(ay, by, cy) - 0.5)))
        for j in range(j0, j1 + 1):
            for i in range(i0, i1 + 1):
                w0, w1, w2 = _bary(ax, ay, bx, by, cx, cy, area, i + 0.5, j + 0.5)
                if w0 < 0.0 or w1 < 0.0 or w2 < 0.0:
                    continue
                z = w0 * pz[a] + w1 * pz[b] + w2 * pz[c]
                p = j * w + i
                if z < zbuf[p] or (z == zbuf[p] and k < ids[p]):
                    zbuf[p] = z
                    ids[p] = k
                    for ch in range(col.shape[1]):
                        out[p, ch] = w0 * col[a, ch] + w1 * col[b, ch] + w2 * col[c, ch]


def _warp_numpy(px, py, pz, col, tris, keep, w, h, out, zbuf, ids, chunk=16384):
    sel = np.nonzero(keep)[0]
    cand_p, cand_z, cand_k, cand_c = [], [], [], []
    for s in range(0, len(sel), chunk):
        k = sel[s: s + chunk]
        a, b, c = tris[k, 0], tris[k, 1], tris[k, 2]
        ax, ay, bx, by, cx, cy = px[a], py[a], px[b], py[b], px[c], py[c]
        area = _tri_setup_np(ax, ay, bx, by, cx, cy)
        nz = area != 0.0
        k, a, b, c, area = k[nz], a[nz], b[nz], c[nz], area[nz]
        ax, ay, bx, by, cx, cy = ax[nz], ay[nz], bx[nz], by[nz], cx[nz], cy[nz]
        i0 = np.maximum(0, np.ceil(np.minimum(np.minimum(ax, bx), cx) - 0.5)).astype(np.int64)
        i1 = np.minimum(w - 1, np.floor(np.maximum(np.maximum(ax, bx), cx) - 0.5)).astype(np.int64)
        j0 = np.maximum(0, np.ceil(np.minimum(np.minimum(ay, by), cy) - 0.5)).astype(np.int64)
        j1 = np.minimum(h - 1, np.floor(np.maximum(np.maximum(ay, by), cy) - 0.5)).astype(np.int64)
        span = int(max(np.max(i1 - i0, initial=0), np.max(j1 - j0, initial=0))) + 1
        for dj in range(span):
            for di in range(span):
                i = i0 + di
                j = j0 + dj
                inb = (i <= i1) & (j <= j1)
                w0, w1, w2 = _bary_np(ax, ay, bx, by, cx, cy, area, i + 0.5, j + 0.5)
                hit = inb & (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
                if not np.any(hit):
                    continue
                z = w0 * pz[a] + w1 * pz[b] + w2 * pz[c]
                cc = (w0[:, None] * col[a] + w1[:, None] * col[b] + w2[:, None] * col[c])
                cand_p.append((j * w + i)[hit])
                cand_z.append(z[hit])
                cand_k.append(k[hit])
                cand_c.append(cc[hit])
    if not cand_p:
        return
    p = np.concatenate(cand_p)
    z = np.concatenate(cand_z)
    k = np.concatenate(cand_k)
    c = np.concatenate(cand_c)
    order = np.lexsort((k, z, p))
    p, z, k, c = p[order], z[order], k[order], c[order]
    first = np.ones(len(p), dtype=bool)
    first[1:] = p[1:] != p[:-1]
    zbuf[p[first]] = z[first]
    ids[p[first]] = k[first]
    out[p[first]] = c[first]


def warp_rolling(depth, image, camera, view, scan, threshold=3.0, backend=None):
    """Warp a t = 0 frame to the rolling display.

    Returns ``(image, mask)``; ``mask`` is True where no warped source lands
    (disoccluded), and those pixels are filled with mid grey.
    """
    depth = np.asarray(depth, dtype=np.float64)
    img = np.asarray(image, dtype=np.float64)
    h, w = depth.shape
    squeeze = img.ndim == 2
    col = np.ascontiguousarray(img.reshape(h * w, -1))
    px, py, pz, valid = grid_targets(depth, camera, view, scan)
    tris, lens = _grid_triangles(w, h)
    keep = _keep_mask(px, py, valid, tris, lens, threshold)
    out = np.zeros_like(col)
    zbuf = np.full(h * w, np.inf)
    ids = np.full(h * w, -1, dtype=np.int64)
    args = (px, py, pz, col, tris, keep, w, h, out, zbuf, ids)
    if kernels._use_numba(backend):
        _warp_numba(*args)
    else:
        _warp_numpy(*args)
    mask = (ids < 0).reshape(h, w)
    out[ids < 0] = FILL
    out = out.reshape(img.shape)
    return (out, mask) if not squeeze else (out.reshape(h, w), mask)
