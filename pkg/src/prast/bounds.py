"""Primitive-pixel bounds for foveated, rolling and joint rasterization.

Every bound returns a :class:`BoundPoly`, a convex NDC polygon guaranteed to
contain the centre of every pixel whose ray hits the space-time triangle.
Display-space bounds (quad, hull, adaptive, zenon) are carried into the
foveated buffer by bounding each mapped edge (simple or recursive).
"""
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import NoCatchUp
from .foveation import display_to_buffer, foveate_to_display
from .geometry import Camera, TimeVaryingTransform, triangle_at

METHODS = ("trivial", "quad", "hull", "adaptive", "zenon", "fov-simple", "fov-recursive", "joint")
DEBUG = bool(os.environ.get("PRAST_DEBUG"))

# time padding for catch-up intervals; the pixel guard absorbs the rest
T_PAD = 1e-9


@dataclass(frozen=True)
class ScanAxis:
    """Rolling scan ``r(u) = u . d`` over unit display coordinates.

    Unit coordinates run left to right and top to bottom, so with
    ``d = (1, 0)`` the left column shows t = 0 and the right column t = 1.
    ``d = (0, 0)`` is the global (non-rolling) display.
    """

    d: tuple = (1.0, 0.0)

    @classmethod
    def none(cls):
        return cls((0.0, 0.0))

    @property
    def is_static(self):
        return self.d[0] == 0.0 and self.d[1] == 0.0

    @property
    def coefficients(self):
        """(a, b, c) with r = a * x_ndc + b * y_ndc + c."""
        dx, dy = float(self.d[0]), float(self.d[1])
        return 0.5 * dx, -0.5 * dy, 0.5 * (dx + dy)

    def time(self, ndc):
        a, b, c = self.coefficients
        ndc = np.asarray(ndc, dtype=np.float64)
        return a * ndc[..., 0] + b * ndc[..., 1] + c


@dataclass
class BoundPoly:
    vertices: np.ndarray
    t_range: tuple = (0.0, 1.0)
    guard: float = 0.0
    method: str = ""

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)

    @classmethod
    def empty(cls, method=""):
        return cls(np.zeros((0, 2)), (1.0, 0.0), 0.0, method)

    @property
    def is_empty(self):
        return len(self.vertices) == 0

    def area(self):
        return polygon_area(self.vertices)

    def contains(self, pts, eps=1e-12):
        return points_in_convex(self.vertices, pts, eps)


# --- 2D polygon helpers -----------------------------------------------------

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points):
    """Counter-clockwise convex hull (Andrew's monotone chain).

    Collinear and duplicate points are dropped; 1 or 2 distinct points come
    back as a degenerate polygon.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        return pts
    pts = np.unique(pts, axis=0)
    if len(pts) <= 2:
        return pts
    P = [tuple(p) for p in pts]
    lower = []
    for p in P:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(P):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def polygon_area(poly):
    poly = np.asarray(poly).reshape(-1, 2)
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def points_in_convex(poly, pts, eps=1e-12):
    """Inclusive point-in-CCW-convex-polygon test for an (n, 2) array."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    poly = np.asarray(poly).reshape(-1, 2)
    if len(poly) == 0:
        return np.zeros(len(pts), dtype=bool)
    if len(poly) < 3:
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        return np.all((pts >= lo - eps) & (pts <= hi + eps), axis=1)
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    rel = pts[:, None, :] - a[None, :, :]
    cr = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
    scale = np.linalg.norm(e, axis=1)[None, :]
    return np.all(cr >= -eps * np.maximum(scale, 1.0), axis=1)


def clip_halfplane(poly, a, b, c):
    """Keep the part of a convex polygon with ``a x + b y <= c``."""
    poly = np.asarray(poly).reshape(-1, 2)
    n = len(poly)
    if n == 0:
        return poly
    s = a * poly[:, 0] + b * poly[:, 1] - c
    if np.all(s <= 0.0):
        return poly
    if np.all(s > 0.0):
        return np.zeros((0, 2))
    out = []
    for i in range(n):
        j = (i + 1) % n
        pi, pj = poly[i], poly[j]
        si, sj = s[i], s[j]
        if si <= 0.0:
            out.append(pi)
        if (si <= 0.0) != (sj <= 0.0):
            f = si / (si - sj)
            out.append(pi + f * (pj - pi))
    out = np.array(out)
    # drop consecutive duplicates introduced by clipping through vertices
    keep = np.ones(len(out), dtype=bool)
    keep[1:] = np.any(out[1:] != out[:-1], axis=1)
    out = out[keep]
    if len(out) > 1 and np.all(out[0] == out[-1]):
        out = out[:-1]
    return out


def clip_box(poly, lo, hi):
    for a, b, c in ((1.0, 0.0, hi[0]), (-1.0, 0.0, -lo[0]), (0.0, 1.0, hi[1]), (0.0, -1.0, -lo[1])):
        poly = clip_halfplane(poly, a, b, c)
    return poly


def minkowski_box(poly, hx, hy):
    """Convex polygon grown by an axis-aligned box of half-size (hx, hy)."""
    poly = np.asarray(poly).reshape(-1, 2)
    if len(poly) == 0:
        return poly
    corners = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    return convex_hull_2d((poly[:, None, :] + corners[None]).reshape(-1, 2))


def apply_guard(bound, size, guard_px=1.0):
    """Grow a bound by ``guard_px`` pixels in each axis (buffer of ``size``)."""
    if size is None or guard_px <= 0 or bound.is_empty:
        return bound
    w, h = size
    v = minkowski_box(bound.vertices, guard_px * 2.0 / w, guard_px * 2.0 / h)
    return BoundPoly(v, bound.t_range, bound.guard + guard_px, bound.method)


# --- projection and the near plane ------------------------------------------

def _projection(cam, near=None):
    """(P_start, P_end, near) from a Camera or a TimeVaryingTransform."""
    if isinstance(cam, Camera):
        P = cam.projection()
        return P, P, cam.near if near is None else near
    if isinstance(cam, TimeVaryingTransform):
        if near is None:
            # GL projection with P[3, 2] = -1 stores -2 near in P[2, 3]
            near = -0.5 * cam.start[2, 3] if cam.start[3, 2] == -1.0 else 1e-6
        return cam.start, cam.end, near
    P = np.asarray(cam, dtype=np.float64)
    return P, P, 1e-6 if near is None else near


@dataclass
class NearSplit:
    status: str  # "culled", "kept" or "split"
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))


def clip_points_to_near(points, near):
    """Vertices of hull(points) clipped to z <= -near.

    Uses every point pair, not just hull edges, so the result spans the
    clipped polytope exactly (6 space-time vertices give 15 pairs).
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    front = pts[:, 2] <= -near
    if np.all(front):
        return pts
    out = [pts[front]]
    fi = np.nonzero(front)[0]
    bi = np.nonzero(~front)[0]
    if len(fi) and len(bi):
        a = pts[fi][:, None, :]
        b = pts[bi][None, :, :]
        f = (-near - a[..., 2]) / (b[..., 2] - a[..., 2])
        x = a + f[..., None] * (b - a)
        x[..., 2] = -near
        out.append(x.reshape(-1, 3))
    return np.concatenate(out)


def near_plane_split(tri, near, camera=None, extent=(1.0, 1.0)):
    """Classify a space-time triangle against the near plane and frustum.

    ``culled``: every space-time vertex lies outside one frustum plane, so no
    ray can hit the triangle at any time.  ``kept``: every vertex is in front
    of the near plane.  ``split``: the triangle crosses the near plane at
    some time; ``points`` holds the clipped camera-space point cloud whose
    projection hull bounds the visible part.
    """
    pts = np.concatenate([tri.cam[0], tri.cam[1]])
    z = pts[:, 2]
    if np.all(z > -near):
        return NearSplit("culled")
    if camera is not None:
        tx, ty = camera.tan_half
        ex, ey = extent
        x, y = pts[:, 0], pts[:, 1]
        for s in (x + ex * tx * z, -x + ex * tx * z, y + ey * ty * z, -y + ey * ty * z):
            if np.all(s > 0.0):
                return NearSplit("culled")
    if np.all(z <= -near):
        return NearSplit("kept", pts)
    return NearSplit("split", clip_points_to_near(pts, near))


def _project_points(pts, P_s, P_e):
    if len(pts) == 0:
        return np.zeros((0, 2))
    h = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
    mats = (P_s,) if np.array_equal(P_s, P_e) else (P_s, P_e)
    out = []
    for P in mats:
        c = h @ P.T
        out.append(c[:, :2] / c[:, 3:4])
    return np.concatenate(out)


def _footprint(tri, t0, t1, P_s, P_e, near):
    """Projected, near-clipped vertices of the triangle over [t0, t1]."""
    if t0 == 0.0 and t1 == 1.0:
        pts = np.concatenate([tri.cam[0], tri.cam[1]])
    else:
        pts = np.concatenate([triangle_at(tri, t0), triangle_at(tri, t1)])
    return _project_points(clip_points_to_near(pts, near), P_s, P_e)


# --- rolling bounds ---------------------------------------------------------

def bound_quad(tri, cam, size=None, guard_px=1.0, near=None):
    """Axis-aligned box around every vertex state projected at both ends."""
    P_s, P_e, near = _projection(cam, near)
    pts = _footprint(tri, 0.0, 1.0, P_s, P_e, near)
    if len(pts) == 0:
        return BoundPoly.empty("quad")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    box = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    return apply_guard(BoundPoly(box, (0.0, 1.0), 0.0, "quad"), size, guard_px)


def bound_hull(tri, cam, size=None, guard_px=1.0, near=None):
    P_s, P_e, near = _projection(cam, near)
    pts = _footprint(tri, 0.0, 1.0, P_s, P_e, near)
    if len(pts) == 0:
        return BoundPoly.empty("hull")
    return apply_guard(BoundPoly(convex_hull_2d(pts), (0.0, 1.0), 0.0, "hull"), size, guard_px)


def adaptive_interval(tri, cam, scan, near=None):
    P_s, P_e, near = _projection(cam, near)
    pts = _footprint(tri, 0.0, 1.0, P_s, P_e, near)
    if len(pts) == 0:
        return None
    t = scan.time(pts)
    return float(np.clip(t.min(), 0.0, 1.0)), float(np.clip(t.max(), 0.0, 1.0))


def bound_adaptive(tri, cam, scan, size=None, guard_px=1.0, near=None):
    """Hull restricted to the times at which the footprint can be scanned."""
    P_s, P_e, near = _projection(cam, near)
    iv = adaptive_interval(tri, cam, scan, near)
    if iv is None:
        return BoundPoly.empty("adaptive")
    t0, t1 = iv
    pts = _footprint(tri, t0, t1, P_s, P_e, near)
    if len(pts) == 0:
        return BoundPoly.empty("adaptive")
    return apply_guard(BoundPoly(convex_hull_2d(pts), (t0, t1), 0.0, "adaptive"), size, guard_px)


def quadratic_roots(a, b, c):
    """Real roots of ``a t^2 + b t + c`` in ascending order.

    Cancellation-free: one root from ``-(b + sign(b) sqrt(disc)) / 2``, the
    other through Vieta.  A quadratic term negligible against the others
    drops to the linear solve.
    """
    a, b, c = float(a), float(b), float(c)
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return [0.0]
    if abs(a) <= 1e-12 * scale:
        if b == 0.0:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc > -1e-14 * b * b:
            return [-b / (2.0 * a)]
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        return [0.0, 0.0]
    r1, r2 = q / a, c / q
    return sorted((r1, r2))


def zenon_time(x_s, xd_s, x_p, xd_p, w_p, wd_p):
    """Earliest t in [0, 1] at which the scan position meets the vertex.

    Solves ``x_s + t xd_s = (x_p + t xd_p) / (w_p + t wd_p)`` through its
    quadratic numerator.  Raises :class:`NoCatchUp` when no root lies in
    [0, 1]; callers clamp to the nearer endpoint.
    """
    a = xd_s * wd_p
    b = x_s * wd_p + xd_s * w_p - xd_p
    c = x_s * w_p - x_p
    for r in quadratic_roots(a, b, c):
        if -1e-12 <= r <= 1.0 + 1e-12:
            return min(max(r, 0.0), 1.0)
    raise NoCatchUp("scan never meets the vertex in [0, 1]")


def _catch_up_terms(tri, P, scan):
    """Per-vertex (A, B, W0, dW): scan-relative numerators in clip space.

    ``f_j(t) = A + t (B - W0) - t^2 dW`` is ``w (r(x) - t)`` for vertex j.
    """
    a, b, c = scan.coefficients
    h0 = np.concatenate([tri.cam[0], np.ones((3, 1))], axis=1) @ P.T
    h1 = np.concatenate([tri.cam[1], np.ones((3, 1))], axis=1) @ P.T
    lin0 = a * h0[:, 0] + b * h0[:, 1] + c * h0[:, 3]
    lin1 = a * h1[:, 0] + b * h1[:, 1] + c * h1[:, 3]
    return lin0, lin1 - lin0, h0[:, 3], h1[:, 3] - h0[:, 3]


def catch_up_points(tri, cam, scan, near=None):
    """Per-vertex catch-up time and projected position (paper's construction).

    Vertices the scan never meets are clamped to the nearer endpoint.
    """
    P_s, _, near = _projection(cam, near)
    A, B, W0, dW = _catch_up_terms(tri, P_s, scan)
    times, pos = [], []
    for j in range(3):
        try:
            t = zenon_time(0.0, 1.0, A[j], B[j], W0[j], dW[j])
        except NoCatchUp:
            t = 0.0 if A[j] < 0 else 1.0
        v = triangle_at(tri, t)[j]
        h = np.append(v, 1.0) @ P_s.T
        times.append(t)
        pos.append(h[:2] / h[3] if h[3] > 0 else np.array([np.nan, np.nan]))
    return np.array(times), np.array(pos)


def zenon_interval(tri, cam, scan, near=None):
    """Smallest interval holding every time the scan can meet the triangle.

    A pixel at time t is hit only if ``sum_j lambda_j f_j(t) = 0`` for some
    barycentric lambda, so the f_j cannot share a strict sign at t.  The
    feasible set is bracketed by the per-vertex catch-up roots and the frame
    ends.  Returns ``None`` when the scan can never meet the triangle.
    """
    P_s, _, near = _projection(cam, near)
    A, B, W0, dW = _catch_up_terms(tri, P_s, scan)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate([A, B, W0, dW])))))

    def feasible(t):
        f = A + t * (B - W0) - t * t * dW
        return f.min() <= tol and f.max() >= -tol

    roots = []
    for j in range(3):
        for r in quadratic_roots(dW[j], W0[j] - B[j], -A[j]):
            if -1e-12 <= r <= 1.0 + 1e-12:
                roots.append(min(max(r, 0.0), 1.0))
    lo = 0.0 if feasible(0.0) else (min(roots) if roots else None)
    hi = 1.0 if feasible(1.0) else (max(roots) if roots else None)
    if lo is None or hi is None:
        return None
    return max(0.0, lo - T_PAD), min(1.0, hi + T_PAD)


def bound_zenon(tri, cam, scan, size=None, guard_px=1.0, near=None):
    """Hull over the catch-up interval, cut to the matching scan-time slab.

    Pixel times are clamped to [0, 1], so display points the scan reaches
    before 0 or after 1 see the frame-end footprint; those regions are
    added even when the scan never meets the triangle inside the frame.
    """
    P_s, P_e, near = _projection(cam, near)
    iv = zenon_interval(tri, cam, scan, near)
    if scan.is_static:
        if iv is None:
            return BoundPoly.empty("zenon")
        pts = _footprint(tri, iv[0], iv[1], P_s, P_e, near)
        if len(pts) == 0:
            return BoundPoly.empty("zenon")
        return apply_guard(BoundPoly(convex_hull_2d(pts), iv, 0.0, "zenon"), size, guard_px)
    a, b, c = scan.coefficients
    parts = []
    t0, t1 = (np.inf, -np.inf) if iv is None else iv
    if iv is not None:
        pts = _footprint(tri, iv[0], iv[1], P_s, P_e, near)
        if len(pts):
            poly = convex_hull_2d(pts)
            if len(poly) >= 3:
                poly = clip_halfplane(poly, a, b, iv[1] - c)
                poly = clip_halfplane(poly, -a, -b, c - iv[0])
            parts.append(poly)
    for te, sgn in ((0.0, 1.0), (1.0, -1.0)):
        end = _footprint(tri, te, te, P_s, P_e, near)
        if len(end) == 0:
            continue
        r = scan.time(end)
        if (sgn > 0 and r.min() <= 0.0) or (sgn < 0 and r.max() >= 1.0):
            h = convex_hull_2d(end)
            if len(h) >= 3:
                h = clip_halfplane(h, sgn * a, sgn * b, sgn * (te - c))
            parts.append(h)
            t0, t1 = min(t0, te), max(t1, te)
    parts = [p for p in parts if len(p)]
    if not parts:
        return BoundPoly.empty("zenon")
    poly = convex_hull_2d(np.concatenate(parts))
    if len(poly) == 0:
        return BoundPoly.empty("zenon")
    return apply_guard(BoundPoly(poly, (t0, t1), 0.0, "zenon"), size, guard_px)


# --- foveation bounds -------------------------------------------------------

def _outward_normals(a, b):
    e = b - a
    n = np.stack([e[:, 1], -e[:, 0]], axis=1)
    ln = np.linalg.norm(n, axis=1, keepdims=True)
    return np.where(ln > 0, n / np.where(ln > 0, ln, 1.0), 0.0)


def edge_displacement(fmap, a, b, chord_a, chord_b, tol=1e-3, max_iter=64, check=None, coarse=32):
    """Max outward offset of the mapped edge a->b from the chord.

    The mapped curve is ``display_to_buffer(a + s (b - a))``; the offset is
    measured along the chord's outward (right-hand) normal.  A coarse scan
    of ``coarse + 1`` samples, plus geometrically spaced samples around the
    point nearest the fovea, brackets the maximum (the offset is S-shaped
    and cusped for edges passing close to the fovea), then a ternary search, vectorised
    over edges, refines it until the bracket covers less than ``tol`` NDC.
    With ``check`` (default: ``PRAST_DEBUG``) unimodality inside the bracket
    is probed and violators fall back to a 256-sample exhaustive max.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    ca = np.asarray(chord_a, dtype=np.float64).reshape(-1, 2)
    cb = np.asarray(chord_b, dtype=np.float64).reshape(-1, 2)
    n = _outward_normals(ca, cb)

    def delta(s):
        s = s[..., None]
        curve = display_to_buffer(fmap, a + s * (b - a))
        return np.sum((curve - (ca + s * (cb - ca))) * n, axis=-1)

    m = len(a)
    # the inverse map is steepest at the fovea, so the offset can peak in a
    # cusp there; sample geometrically around the edge point nearest to it
    e = b - a
    ee = np.sum(e * e, axis=1)
    near = np.clip(np.sum((np.asarray(fmap.fovea) - a) * e, axis=1) / np.where(ee > 0, ee, 1.0), 0.0, 1.0)
    steps = 2.0 ** -np.arange(5, 31)
    local = np.concatenate([[0.0], steps, -steps])
    grid = np.concatenate([np.broadcast_to(np.linspace(0.0, 1.0, coarse + 1)[:, None], (coarse + 1, m)),
                           np.clip(near[None, :] + local[:, None], 0.0, 1.0)])
    grid = np.sort(grid, axis=0)
    vals = delta(grid)
    k = np.argmax(vals, axis=0)
    cols = np.arange(m)
    lo = grid[np.maximum(k - 1, 0), cols]
    hi = grid[np.minimum(k + 1, len(grid) - 1), cols]
    length = np.maximum(np.linalg.norm(cb - ca, axis=1), np.linalg.norm(b - a, axis=1))
    for _ in range(max_iter):
        live = (hi - lo) * length >= tol
        if not np.any(live):
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        up = delta(m1) < delta(m2)
        lo = np.where(live & up, m1, lo)
        hi = np.where(live & ~up, m2, hi)
    best = np.maximum(delta(0.5 * (lo + hi)), vals.max(axis=0))
    if DEBUG if check is None else check:
        dense = np.linspace(0.0, 1.0, 256)
        dv = delta(np.broadcast_to(dense[:, None], (256, m)).copy()).max(axis=0)
        bad = dv > best + tol
        best = np.where(bad, dv, best)
    return best


def _displaced_pair(fmap, a, b, method, tol):
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    ma = display_to_buffer(fmap, a)
    mb = display_to_buffer(fmap, b)
    ca, cb = (ma, mb) if method == "recursive" else (a, b)
    n = _outward_normals(ca, cb)
    dmax = np.maximum(edge_displacement(fmap, a, b, ca, cb, tol), 0.0)
    da = np.sum((ma - ca) * n, axis=1)
    db = np.sum((mb - cb) * n, axis=1)
    pa = ma + (dmax - da)[:, None] * n
    pb = mb + (dmax - db)[:, None] * n
    return pa, pb, dmax


def bound_foveated_simple(edge, fmap, tol=1e-3):
    """Displaced edge pair bounding the mapped edge, offset from the original edge.

    ``edge`` is ((x0, y0), (x1, y1)) in display NDC, oriented so that the
    primitive lies on its left.  Returns (pair, delta_max).
    """
    e = np.asarray(edge, dtype=np.float64)
    pa, pb, d = _displaced_pair(fmap, e[0], e[1], "simple", tol)
    return np.stack([pa[0], pb[0]]), float(d[0])


def bound_foveated_recursive(edge, fmap, tol=1e-3):
    """As :func:`bound_foveated_simple` but offset from the mapped chord."""
    e = np.asarray(edge, dtype=np.float64)
    pa, pb, d = _displaced_pair(fmap, e[0], e[1], "recursive", tol)
    return np.stack([pa[0], pb[0]]), float(d[0])


def display_extent(fmap):
    """Bounding box (lo, hi) of every display point a buffer pixel can see."""
    s = np.linspace(-1.0, 1.0, 257)
    edge = np.concatenate([
        np.stack([s, -np.ones_like(s)], 1), np.stack([s, np.ones_like(s)], 1),
        np.stack([-np.ones_like(s), s], 1), np.stack([np.ones_like(s), s], 1),
    ])
    pts = foveate_to_display(fmap, edge)
    pad = 1e-6
    return pts.min(axis=0) - pad, pts.max(axis=0) + pad


def foveate_polygon(poly, fmap, method="recursive", tol=1e-3):
    """Convex buffer-space polygon containing the mapped display polygon."""
    poly = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    if fmap is None or fmap.is_identity or len(poly) == 0:
        return poly
    if len(poly) == 1:
        return display_to_buffer(fmap, poly)
    a = poly
    b = np.roll(poly, -1, axis=0)
    pa, pb, _ = _displaced_pair(fmap, a, b, method, tol)
    return convex_hull_2d(np.concatenate([pa, pb]))


def _static_scan():
    return ScanAxis.none()


def bound_foveated_triangle(tri, cam, fmap, method="recursive", size=None, guard_px=1.0, near=None):
    """Six-vertex foveated bound of the triangle as seen at t = 0."""
    base = bound_zenon(tri, cam, _static_scan(), None, 0.0, near)
    if base.is_empty:
        return BoundPoly.empty(f"fov-{method}")
    tol = _tol(size)
    poly = foveate_polygon(base.vertices, fmap, method, tol)
    return apply_guard(BoundPoly(poly, base.t_range, 0.0, f"fov-{method}"), size, guard_px)


def bound_joint(tri, cam, fmap, scan, size=None, guard_px=1.0, near=None):
    """Zenon bound in display space, then the recursive foveation bound."""
    base = bound_zenon(tri, cam, scan, None, 0.0, near)
    if base.is_empty:
        return BoundPoly.empty("joint")
    poly = foveate_polygon(base.vertices, fmap, "recursive", _tol(size))
    return apply_guard(BoundPoly(poly, base.t_range, 0.0, "joint"), size, guard_px)


def _tol(size):
    # half a buffer pixel, in NDC
    if size is None:
        return 1e-3
    return 0.5 * 2.0 / max(size)


def compute_bound(method, tri, camera, scan=None, fmap=None, size=None, guard_px=1.0):
    """Bound a space-time triangle with any method, in buffer NDC.

    Display-space shapes are clipped to the region the buffer can see, taken
    into the buffer by the recursive (or simple) edge bound when foveated,
    and grown by the pixel guard.
    """
    scan = scan or ScanAxis.none()
    foveated = fmap is not None and not fmap.is_identity
    if method == "trivial":
        return BoundPoly(np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]), (0.0, 1.0), 0.0, method)
    if method == "quad":
        base = bound_quad(tri, camera, None, 0.0)
    elif method == "hull":
        base = bound_hull(tri, camera, None, 0.0)
    elif method == "adaptive":
        base = bound_adaptive(tri, camera, scan, None, 0.0)
    elif method in ("zenon", "fov-simple", "fov-recursive", "joint"):
        base = bound_zenon(tri, camera, scan, None, 0.0)
    else:
        raise ValueError(f"unknown bound method {method!r}")
    if base.is_empty:
        return BoundPoly.empty(method)
    if foveated:
        lo, hi = display_extent(fmap)
    else:
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    poly = clip_box(base.vertices, lo, hi) if len(base.vertices) >= 3 else base.vertices
    if len(poly) == 0:
        return BoundPoly.empty(method)
    if foveated:
        edge_method = "simple" if method == "fov-simple" else "recursive"
        poly = foveate_polygon(poly, fmap, edge_method, _tol(size))
        if method == "quad":
            lo2, hi2 = poly.min(axis=0), poly.max(axis=0)
            poly = np.array([[lo2[0], lo2[1]], [hi2[0], lo2[1]], [hi2[0], hi2[1]], [lo2[0], hi2[1]]])
        if len(poly) >= 3:
            poly = clip_box(poly, np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        if len(poly) == 0:
            return BoundPoly.empty(method)
    return apply_guard(BoundPoly(poly, base.t_range, 0.0, method), size, guard_px)
