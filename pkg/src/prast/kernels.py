"""Per-pixel hot loops: bounded rasterization, brute-force tracing, coverage.

Each kernel exists as a numba implementation and a vectorised numpy one;
``_backend.BACKEND`` picks which the public wrappers call.  Both evaluate
the same ``ray_triangle_terms`` arithmetic on the same per-pixel inputs, so
their G-buffers agree bit for bit.

Conventions shared by all kernels:
  dirs   (P, 3) unit ray directions, pixels in row-major order
  times  (P,)   per-pixel sample time
  cam0/1 (N, 3, 3) camera-space triangle vertices at frame start/end
  planes (N, K, 3) pixel-space half-planes ``a x + b y <= c`` of each bound
"""
import math

import numpy as np

from . import _backend
from ._backend import njit, prange
from .bounds import convex_hull_2d
from .geometry import ray_triangle_terms

BAND_ROWS = 8
BIG = 1e30

# plain-python view of the shared intersection routine, for array inputs
_rtt_np = getattr(ray_triangle_terms, "py_func", ray_triangle_terms)


def _use_numba(backend):
    if backend is None:
        return _backend.HAVE_NUMBA
    if backend == "numba" and not _backend.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but not available")
    return backend == "numba"


# --- bound -> pixel spans ---------------------------------------------------

def polygon_planes(vertices_px, min_edge=1e-6):
    """Half-planes ``a x + b y <= c`` of a convex pixel-space polygon.

    Edges shorter than ``min_edge`` pixels are dropped; their direction is
    noise and leaving them out only grows the region.
    """
    v = convex_hull_2d(np.asarray(vertices_px, dtype=np.float64).reshape(-1, 2))
    if len(v) < 3:
        return np.zeros((0, 3))
    w = np.roll(v, -1, axis=0)
    keep = np.hypot(*(w - v).T) >= min_edge
    v, w = v[keep], w[keep]
    a = w[:, 1] - v[:, 1]
    b = v[:, 0] - w[:, 0]
    c = a * v[:, 0] + b * v[:, 1]
    # convex_hull_2d is counter-clockwise, so the interior is on the left
    return np.stack([a, b, c], axis=1) if len(v) >= 3 else np.zeros((0, 3))


def pack_bounds(polys_px, height):
    """Stack per-primitive pixel polygons into kernel arrays.

    Returns ``(planes, nplanes, rows)``; ``rows[n] = (first, last)`` pixel
    row (last < first for an empty bound).
    """
    n = len(polys_px)
    all_planes = [polygon_planes(p) for p in polys_px]
    k = max([len(p) for p in all_planes] + [1])
    planes = np.zeros((n, k, 3))
    nplanes = np.zeros(n, dtype=np.int64)
    rows = np.zeros((n, 2), dtype=np.int64)
    rows[:, 1] = -1
    for i, (poly, pl) in enumerate(zip(polys_px, all_planes)):
        if len(pl) == 0:
            continue
        planes[i, : len(pl)] = pl
        nplanes[i] = len(pl)
        ys = np.asarray(poly)[:, 1]
        rows[i, 0] = max(0, int(math.ceil(ys.min() - 0.5)))
        rows[i, 1] = min(height - 1, int(math.floor(ys.max() - 0.5)))
    return planes, nplanes, rows


@njit(error_model="numpy")
def _row_span(planes, nplanes, n, y, width):
    xlo = -BIG
    xhi = BIG
    for k in range(nplanes[n]):
        a = planes[n, k, 0]
        b = planes[n, k, 1]
        rhs = planes[n, k, 2] - b * y
        if a > 0.0:
            q = rhs / a
            if q < xhi:
                xhi = q
        elif a < 0.0:
            q = rhs / a
            if q > xlo:
                xlo = q
        elif rhs < 0.0:
            return 0, -1
    ia = max(0, int(math.ceil(xlo - 0.5)))
    ib = min(width - 1, int(math.floor(xhi - 0.5)))
    return ia, ib


def _row_spans_np(planes_n, y, width):
    """Vectorised ``_row_span`` over an array of row centres ``y``."""
    a = planes_n[:, 0][None, :]
    b = planes_n[:, 1][None, :]
    rhs = planes_n[:, 2][None, :] - b * y[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = rhs / a
    xhi = np.min(np.where(a > 0.0, q, BIG), axis=1)
    xlo = np.max(np.where(a < 0.0, q, -BIG), axis=1)
    dead = np.any((a == 0.0) & (rhs < 0.0), axis=1)
    ia = np.maximum(0, np.ceil(xlo - 0.5)).astype(np.int64)
    ib = np.minimum(width - 1, np.floor(xhi - 0.5)).astype(np.int64)
    ib = np.where(dead, -1, ib)
    ia = np.where(dead, 0, ia)
    return ia, ib


def bound_pixel_mask(vertices_px, width, height):
    """(height, width) boolean of the pixels the rasterizer visits for one
    pixel-space bound polygon."""
    planes, nplanes, rows = pack_bounds([vertices_px], height)
    out = np.zeros((height, width), dtype=bool)
    if nplanes[0] == 0 or rows[0, 1] < rows[0, 0]:
        return out
    js = np.arange(rows[0, 0], rows[0, 1] + 1)
    ia, ib = _row_spans_np(planes[0, : nplanes[0]], js + 0.5, width)
    cols = np.arange(width)
    out[js] = (cols[None, :] >= ia[:, None]) & (cols[None, :] <= ib[:, None])
    return out


# --- bounded rasterization --------------------------------------------------

@njit(parallel=True, error_model="numpy")
def _raster_numba(dirs, times, width, height, cam0, cam1, planes, nplanes, rows, near,
                  depth, prim, bu, bv, tested, passed, band_rows):
    nprim = cam0.shape[0]
    nbands = (height + band_rows - 1) // band_rows
    for band in prange(nbands):
        r0 = band * band_rows
        r1 = min(height, r0 + band_rows) - 1
        for n in range(nprim):
            ja = max(rows[n, 0], r0)
            jb = min(rows[n, 1], r1)
            for j in range(ja, jb + 1):
                ia, ib = _row_span(planes, nplanes, n, j + 0.5, width)
                for i in range(ia, ib + 1):
                    p = j * width + i
                    t = times[p]
                    s = 1.0 - t
                    hit, d, u, v = ray_triangle_terms(
                        dirs[p, 0], dirs[p, 1], dirs[p, 2],
                        s * cam0[n, 0, 0] + t * cam1[n, 0, 0],
                        s * cam0[n, 0, 1] + t * cam1[n, 0, 1],
                        s * cam0[n, 0, 2] + t * cam1[n, 0, 2],
                        s * cam0[n, 1, 0] + t * cam1[n, 1, 0],
                        s * cam0[n, 1, 1] + t * cam1[n, 1, 1],
                        s * cam0[n, 1, 2] + t * cam1[n, 1, 2],
                        s * cam0[n, 2, 0] + t * cam1[n, 2, 0],
                        s * cam0[n, 2, 1] + t * cam1[n, 2, 1],
                        s * cam0[n, 2, 2] + t * cam1[n, 2, 2],
                        near,
                    )
                    tested[band, n] += 1
                    if hit:
                        passed[band, n] += 1
                        if d < depth[p] or (d == depth[p] and n < prim[p]):
                            depth[p] = d
                            prim[p] = n
                            bu[p] = u
                            bv[p] = v


def _lerp_tri(cam0, cam1, n, t):
    s = 1.0 - t
    return [s * cam0[n, k // 3, k % 3] + t * cam1[n, k // 3, k % 3] for k in range(9)]


def _raster_numpy(dirs, times, width, height, cam0, cam1, planes, nplanes, rows, near,
                  depth, prim, bu, bv, tested, passed):
    for n in range(cam0.shape[0]):
        if nplanes[n] == 0 or rows[n, 1] < rows[n, 0]:
            continue
        js = np.arange(rows[n, 0], rows[n, 1] + 1)
        ia, ib = _row_spans_np(planes[n, : nplanes[n]], js + 0.5, width)
        cnt = np.maximum(ib - ia + 1, 0)
        if cnt.sum() == 0:
            continue
        rj = np.repeat(js, cnt)
        start = np.repeat(ia - np.cumsum(cnt) + cnt, cnt)
        ri = start + np.arange(cnt.sum())
        idx = rj * width + ri
        t = times[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            hit, d, u, v = _rtt_np(dirs[idx, 0], dirs[idx, 1], dirs[idx, 2],
                                              *_lerp_tri(cam0, cam1, n, t), near)
        tested[0, n] += len(idx)
        passed[0, n] += int(hit.sum())
        cur = depth[idx]
        upd = hit & ((d < cur) | ((d == cur) & (n < prim[idx])))
        sel = idx[upd]
        depth[sel] = d[upd]
        prim[sel] = n
        bu[sel] = u[upd]
        bv[sel] = v[upd]


def rasterize_bounded(dirs, times, width, height, cam0, cam1, planes, nplanes, rows, near,
                      band_rows=BAND_ROWS, backend=None):
    """Z-buffered ray casting of every primitive inside its bound.

    Returns ``(depth, prim, u, v, tested, passed)``; primitives are resolved in
    index order with ties going to the lower index.
    """
    npix = width * height
    nprim = cam0.shape[0]
    depth = np.full(npix, np.inf)
    prim = np.full(npix, -1, dtype=np.int64)
    bu = np.zeros(npix)
    bv = np.zeros(npix)
    if _use_numba(backend):
        nbands = (height + band_rows - 1) // band_rows
        tested = np.zeros((nbands, nprim), dtype=np.int64)
        passed = np.zeros((nbands, nprim), dtype=np.int64)
        if nprim:
            _raster_numba(dirs, times, width, height, cam0, cam1, planes, nplanes, rows,
                          float(near), depth, prim, bu, bv, tested, passed, band_rows)
    else:
        tested = np.zeros((1, nprim), dtype=np.int64)
        passed = np.zeros((1, nprim), dtype=np.int64)
        _raster_numpy(dirs, times, width, height, cam0, cam1, planes, nplanes, rows,
                      float(near), depth, prim, bu, bv, tested, passed)
    return depth, prim, bu, bv, tested.sum(axis=0), passed.sum(axis=0)


# --- brute-force tracing ----------------------------------------------------

@njit(parallel=True, error_model="numpy")
def _trace_numba(dirs, times, cam0, cam1, near, depth, prim, bu, bv):
    npix = dirs.shape[0]
    nprim = cam0.shape[0]
    for p in prange(npix):
        t = times[p]
        s = 1.0 - t
        best = np.inf
        bp = -1
        ub = 0.0
        vb = 0.0
        for n in range(nprim):
            hit, d, u, v = ray_triangle_terms(
                dirs[p, 0], dirs[p, 1], dirs[p, 2],
                s * cam0[n, 0, 0] + t * cam1[n, 0, 0],
                s * cam0[n, 0, 1] + t * cam1[n, 0, 1],
                s * cam0[n, 0, 2] + t * cam1[n, 0, 2],
                s * cam0[n, 1, 0] + t * cam1[n, 1, 0],
                s * cam0[n, 1, 1] + t * cam1[n, 1, 1],
                s * cam0[n, 1, 2] + t * cam1[n, 1, 2],
                s * cam0[n, 2, 0] + t * cam1[n, 2, 0],
                s * cam0[n, 2, 1] + t * cam1[n, 2, 1],
                s * cam0[n, 2, 2] + t * cam1[n, 2, 2],
                near,
            )
            if hit and (d < best or (d == best and n < bp)):
                best = d
                bp = n
                ub = u
                vb = v
        depth[p] = best
        prim[p] = bp
        bu[p] = ub
        bv[p] = vb


def _trace_numpy(dirs, times, cam0, cam1, near, depth, prim, bu, bv):
    for n in range(cam0.shape[0]):
        with np.errstate(divide="ignore", invalid="ignore"):
            hit, d, u, v = _rtt_np(dirs[:, 0], dirs[:, 1], dirs[:, 2],
                                              *_lerp_tri(cam0, cam1, n, times), near)
        upd = hit & ((d < depth) | ((d == depth) & (n < prim)))
        depth[upd] = d[upd]
        prim[upd] = n
        bu[upd] = u[upd]
        bv[upd] = v[upd]


def trace_all(dirs, times, cam0, cam1, near, backend=None):
    """Nearest hit per pixel against every primitive; returns (depth, prim, u, v)."""
    npix = dirs.shape[0]
    depth = np.full(npix, np.inf)
    prim = np.full(npix, -1, dtype=np.int64)
    bu = np.zeros(npix)
    bv = np.zeros(npix)
    if cam0.shape[0] == 0:
        return depth, prim, bu, bv
    if _use_numba(backend):
        _trace_numba(dirs, times, cam0, cam1, float(near), depth, prim, bu, bv)
    else:
        _trace_numpy(dirs, times, cam0, cam1, float(near), depth, prim, bu, bv)
    return depth, prim, bu, bv


# --- per-triangle coverage --------------------------------------------------

@njit(parallel=True, error_model="numpy")
def _coverage_numba(dirs, times, cam0, cam1, near, out):
    for n in prange(cam0.shape[0]):
        for p in range(dirs.shape[0]):
            t = times[p]
            s = 1.0 - t
            hit, d, u, v = ray_triangle_terms(
                dirs[p, 0], dirs[p, 1], dirs[p, 2],
                s * cam0[n, 0, 0] + t * cam1[n, 0, 0],
                s * cam0[n, 0, 1] + t * cam1[n, 0, 1],
                s * cam0[n, 0, 2] + t * cam1[n, 0, 2],
                s * cam0[n, 1, 0] + t * cam1[n, 1, 0],
                s * cam0[n, 1, 1] + t * cam1[n, 1, 1],
                s * cam0[n, 1, 2] + t * cam1[n, 1, 2],
                s * cam0[n, 2, 0] + t * cam1[n, 2, 0],
                s * cam0[n, 2, 1] + t * cam1[n, 2, 1],
                s * cam0[n, 2, 2] + t * cam1[n, 2, 2],
                near,
            )
            out[n, p] = hit


def coverage_masks(dirs, times, cam0, cam1, near, backend=None):
    """(N, P) boolean: does pixel p's ray hit triangle n, ignoring occlusion."""
    out = np.zeros((cam0.shape[0], dirs.shape[0]), dtype=np.bool_)
    if cam0.shape[0] == 0:
        return out
    if _use_numba(backend):
        _coverage_numba(dirs, times, cam0, cam1, float(near), out)
    else:
        for n in range(cam0.shape[0]):
            with np.errstate(divide="ignore", invalid="ignore"):
                out[n] = _rtt_np(dirs[:, 0], dirs[:, 1], dirs[:, 2],
                                            *_lerp_tri(cam0, cam1, n, times), near)[0]
    return out
