"""Camera-space geometry shared by the rasterizer and the ray-tracing oracle.

Conventions: right-handed camera space looking down -z, NDC in (-1, 1)^2 with
+y up, image rows stored top to bottom.  Pixel (i, j) has its centre at
NDC ((i + 0.5) / W * 2 - 1, 1 - (j + 0.5) / H * 2).
"""
import math
from dataclasses import dataclass

import numpy as np

from ._backend import njit
from .errors import NonPositiveW

# relative thresholds for the ray/triangle test, see ray_triangle_terms
PARALLEL_EPS2 = 1e-20
DEGENERATE_EPS2 = 1e-24


@dataclass(frozen=True)
class Camera:
    """Pinhole intrinsics.  ``fov_y`` is in degrees."""

    fov_y: float = 60.0
    aspect: float = 1.0
    near: float = 0.05

    @property
    def tan_half(self):
        ty = math.tan(math.radians(self.fov_y) * 0.5)
        return self.aspect * ty, ty

    def projection(self):
        """OpenGL-style projection with an infinite far plane."""
        tx, ty = self.tan_half
        P = np.zeros((4, 4))
        P[0, 0] = 1.0 / tx
        P[1, 1] = 1.0 / ty
        P[2, 2] = -1.0
        P[2, 3] = -2.0 * self.near
        P[3, 2] = -1.0
        return P


@dataclass
class TimeVaryingTransform:
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=np.float64)
        self.end = np.asarray(self.end, dtype=np.float64)
        if self.start.shape != (4, 4) or self.end.shape != (4, 4):
            raise ValueError("transforms must be 4x4")

    @classmethod
    def static(cls, m):
        m = np.asarray(m, dtype=np.float64)
        return cls(m, m.copy())

    def at(self, t):
        return interpolate_transform(self, t)


def interpolate_transform(x, t):
    """Entry-wise linear blend of start and end.

    Exact at t = 0, at t = 1 and for equal endpoints.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if t == 1.0:
        return x.end.copy()
    return x.start + t * (x.end - x.start)


@dataclass
class SpaceTimeTriangle:
    """A triangle moving linearly over one frame interval.

    ``cam[i, j]`` is the camera-space position of vertex ``j`` at frame start
    (``i = 0``) or end (``i = 1``).  ``world`` and ``normals`` carry the
    matching world-space payload used for shading.
    """

    cam: np.ndarray
    world: np.ndarray = None
    normals: np.ndarray = None
    material: int = 0
    prim_id: int = 0

    def __post_init__(self):
        self.cam = np.asarray(self.cam, dtype=np.float64).reshape(2, 3, 3)
        if self.world is None:
            self.world = self.cam.copy()
        if self.normals is None:
            self.normals = np.zeros((2, 3, 3))

    @classmethod
    def static(cls, verts, **kw):
        v = np.asarray(verts, dtype=np.float64).reshape(3, 3)
        return cls(np.stack([v, v]), **kw)

    @property
    def is_static(self):
        return np.array_equal(self.cam[0], self.cam[1])


def triangle_at(tri, t):
    """Camera-space vertex positions (3, 3) at time ``t``."""
    return (1.0 - t) * tri.cam[0] + t * tri.cam[1]


def to_homogeneous(p):
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] == 3:
        p = np.concatenate([p, np.ones(p.shape[:-1] + (1,))], axis=-1)
    return p


def project(point, transform):
    """Transform a camera-space point and divide by w.

    ``point`` may be 3D or homogeneous 4D, or an (..., 3|4) array.
    """
    h = to_homogeneous(point) @ np.asarray(transform, dtype=np.float64).T
    w = h[..., 3]
    if np.any(w <= 0.0):
        raise NonPositiveW("point projects with w <= 0; split at the near plane first")
    return h[..., :2] / w[..., None]


@dataclass
class Ray:
    origin: np.ndarray
    direction: np.ndarray
    time: float = 0.0

    def sample(self, s):
        return self.origin + s * self.direction


@dataclass
class Hit:
    depth: float
    barycentrics: tuple
    prim_id: int = -1


def ray_directions(ndc_x, ndc_y, camera):
    """Unit pinhole ray directions through NDC points (any matching shapes)."""
    tx, ty = camera.tan_half
    dx = np.asarray(ndc_x, dtype=np.float64) * tx
    dy = np.asarray(ndc_y, dtype=np.float64) * ty
    dz = -np.ones_like(dx)
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + 1.0)
    return np.stack([dx * inv, dy * inv, dz * inv], axis=-1)


def pixel_ray(pixel, camera, time=0.0):
    d = ray_directions(pixel[0], pixel[1], camera)
    return Ray(np.zeros(3), d, time)


def pixel_centers(width, height):
    """NDC coordinates of all pixel centres as two (H, W) arrays."""
    x = (np.arange(width) + 0.5) / width * 2.0 - 1.0
    y = 1.0 - (np.arange(height) + 0.5) / height * 2.0
    return np.meshgrid(x, y)


def ndc_to_pixel(p, width, height):
    p = np.asarray(p, dtype=np.float64)
    return np.stack([(p[..., 0] + 1.0) * 0.5 * width, (1.0 - p[..., 1]) * 0.5 * height], axis=-1)


def pixel_to_ndc(p, width, height):
    p = np.asarray(p, dtype=np.float64)
    return np.stack([p[..., 0] / width * 2.0 - 1.0, 1.0 - p[..., 1] / height * 2.0], axis=-1)


@njit(error_model="numpy")
def ray_triangle_terms(dx, dy, dz, ax, ay, az, bx, by, bz, cx, cy, cz, near):
    """Moller-Trumbore for a ray from the camera-space origin.

    Written branch-free so the same source runs on numba scalars and on
    numpy arrays; both rasterizer and oracle go through here.  Returns
    ``(hit, depth, u, v)`` where barycentrics are ``(1 - u - v, u, v)`` and
    ``depth`` is the camera-space -z of the hit.  Edges count as inside.
    """
    e1x = bx - ax
    e1y = by - ay
    e1z = bz - az
    e2x = cx - ax
    e2y = cy - ay
    e2z = cz - az
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    nx = e1y * e2z - e1z * e2y
    ny = e1z * e2x - e1x * e2z
    nz = e1x * e2y - e1y * e2x
    nn = nx * nx + ny * ny + nz * nz
    ee = (e1x * e1x + e1y * e1y + e1z * e1z) * (e2x * e2x + e2y * e2y + e2z * e2z)
    ok = (det * det > PARALLEL_EPS2 * nn) & (nn > DEGENERATE_EPS2 * ee)
    tx = -ax
    ty = -ay
    tz = -az
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    u = (tx * px + ty * py + tz * pz) / det
    v = (dx * qx + dy * qy + dz * qz) / det
    t = (e2x * qx + e2y * qy + e2z * qz) / det
    depth = t * (-dz)
    hit = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (depth >= near)
    return hit, depth, u, v


def intersect(ray, tri, near=0.0, prim_id=-1):
    """Intersect a ray (origin must be the camera centre) with 3 positions.

    Returns a :class:`Hit` or ``None``.
    """
    if np.any(ray.origin != 0.0):
        o = np.asarray(ray.origin, dtype=np.float64)
        tri = np.asarray(tri, dtype=np.float64) - o
    v = np.asarray(tri, dtype=np.float64).reshape(3, 3)
    d = np.asarray(ray.direction, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        hit, depth, u, w = ray_triangle_terms(
            float(d[0]), float(d[1]), float(d[2]),
            float(v[0, 0]), float(v[0, 1]), float(v[0, 2]),
            float(v[1, 0]), float(v[1, 1]), float(v[1, 2]),
            float(v[2, 0]), float(v[2, 1]), float(v[2, 2]),
            float(near),
        )
    if not hit:
        return None
    return Hit(float(depth), (1.0 - u - w, float(u), float(w)), prim_id)


# --- rigid transforms -------------------------------------------------------

def quat_to_matrix(q):
    """Rotation matrix from a (w, x, y, z) quaternion (normalised here)."""
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def trs_matrix(translation=(0, 0, 0), rotation=(1, 0, 0, 0), scale=(1, 1, 1)):
    s = np.broadcast_to(np.asarray(scale, dtype=np.float64), (3,))
    M = np.eye(4)
    M[:3, :3] = quat_to_matrix(rotation) * s[None, :]
    M[:3, 3] = translation
    return M


def axis_angle_quat(axis, degrees):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    h = math.radians(degrees) * 0.5
    return np.concatenate([[math.cos(h)], math.sin(h) * axis])


def quat_mul(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def normal_matrix(m):
    return np.linalg.inv(np.asarray(m)[:3, :3]).T
