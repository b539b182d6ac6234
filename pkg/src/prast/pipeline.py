"""The perceptual rasterizer: bound, intersect, z-resolve, deferred shade.

All four modes share one path.  Every buffer pixel gets a display position
(through the foveation map, if any), a ray through it, and a time (from the
rolling scan at the display position, if any).  Each primitive is bounded
in buffer space and only the pixels inside its bound are ray cast.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bounds import METHODS, ScanAxis, compute_bound, display_extent, near_plane_split
from .errors import ConfigError, ConfigMismatch
from .foveation import FoveationMap, foveate_to_display, unfoveate_gather, unfoveate_mip
from .geometry import ndc_to_pixel, pixel_centers, ray_directions
from .metrics import STEStats

MODES = ("common", "foveated", "rolling", "joint")
DEFAULT_BOUND = {"common": "zenon", "foveated": "fov-recursive", "rolling": "zenon", "joint": "joint"}


@dataclass
class RenderConfig:
    mode: str = "common"
    bound: str = None
    width: int = 256
    height: int = 256
    guard_px: float = 1.0
    fmap: FoveationMap = None
    scan: ScanAxis = None
    unfoveate: str = None  # None, "mip" or "gather"
    rolling_shading: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.bound is None:
            self.bound = DEFAULT_BOUND[self.mode]
        if self.bound not in METHODS:
            raise ConfigError(f"unknown bound {self.bound!r}; expected one of {METHODS}")
        if int(self.width) <= 0 or int(self.height) <= 0:
            raise ConfigError("resolution must be positive")
        self.width, self.height = int(self.width), int(self.height)
        if self.guard_px < 0:
            raise ConfigError("guard must be non-negative")
        if self.mode in ("rolling", "joint") and self.scan is None:
            raise ConfigMismatch(f"{self.mode} mode needs a scan axis")
        if self.mode in ("foveated", "joint") and self.fmap is None:
            raise ConfigMismatch(f"{self.mode} mode needs a foveation map")
        if self.unfoveate not in (None, "mip", "gather"):
            raise ConfigError(f"unknown unfoveation {self.unfoveate!r}")
        if isinstance(self.scan, (tuple, list)):
            self.scan = ScanAxis(tuple(float(c) for c in self.scan))

    @property
    def size(self):
        return self.width, self.height

    @property
    def active_fmap(self):
        return self.fmap if self.mode in ("foveated", "joint") else None

    @property
    def active_scan(self):
        return self.scan if self.mode in ("rolling", "joint") else None

    @classmethod
    def for_scene(cls, scene, mode="common", **kw):
        """Config whose foveation and scan default to the scene's blocks."""
        if mode in ("foveated", "joint") and kw.get("fmap") is None:
            kw["fmap"] = FoveationMap.from_config(scene.foveation or {"alpha": 2.0})
        if mode in ("rolling", "joint") and kw.get("scan") is None:
            kw["scan"] = ScanAxis(tuple(scene.scan) if scene.scan is not None else (1.0, 0.0))
        return cls(mode, **kw)


@dataclass
class PixelSamples:
    display: np.ndarray  # (H, W, 2) display NDC each buffer pixel looks through
    dirs: np.ndarray  # (H * W, 3)
    times: np.ndarray  # (H * W,)


def pixel_time(pixel, config):
    """Sample time of a buffer pixel centre given in NDC."""
    pixel = np.asarray(pixel, dtype=np.float64)
    scan = config.active_scan
    if scan is None:
        return np.zeros(pixel.shape[:-1]) if pixel.ndim > 1 else 0.0
    fmap = config.active_fmap
    disp = foveate_to_display(fmap, pixel) if fmap is not None else pixel
    return np.clip(scan.time(disp), 0.0, 1.0)


def pixel_samples(config, camera):
    X, Y = pixel_centers(config.width, config.height)
    ndc = np.stack([X, Y], axis=-1)
    fmap = config.active_fmap
    disp = foveate_to_display(fmap, ndc) if fmap is not None else ndc
    dirs = ray_directions(disp[..., 0], disp[..., 1], camera).reshape(-1, 3)
    t = pixel_time(ndc, config).reshape(-1)
    return PixelSamples(disp, np.ascontiguousarray(dirs), np.ascontiguousarray(t))


@dataclass
class GBuffer:
    depth: np.ndarray
    prim_id: np.ndarray
    bary: np.ndarray
    normal: np.ndarray
    material: np.ndarray
    pixel_time: np.ndarray
    position: np.ndarray = None
    display: np.ndarray = field(default=None, repr=False)

    @property
    def shape(self):
        return self.depth.shape

    @property
    def coverage(self):
        return self.prim_id >= 0

    CHANNELS = ("depth", "prim_id", "bary", "normal", "material", "pixel_time")

    def channels(self):
        return {k: getattr(self, k) for k in self.CHANNELS}

    def identical(self, other):
        """Bitwise equality of the geometric channels."""
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in self.CHANNELS)


def resolve_gbuffer(depth, prim, bu, bv, samples, prims, shape):
    """Assemble a G-buffer from kernel output and derive the shading payload."""
    h, w = shape
    bary = np.stack([1.0 - bu - bv, bu, bv], axis=-1)
    bary[prim < 0] = 0.0
    normal = np.zeros((h * w, 3))
    position = np.zeros((h * w, 3))
    material = np.full(h * w, -1, dtype=np.int64)
    hit = np.nonzero(prim >= 0)[0]
    if len(hit):
        n = prim[hit]
        t = samples.times[hit][:, None, None]
        b = bary[hit][:, :, None]
        wv = (1.0 - t) * prims.world[n, 0] + t * prims.world[n, 1]
        nv = (1.0 - t) * prims.normals[n, 0] + t * prims.normals[n, 1]
        position[hit] = np.sum(b * wv, axis=1)
        nn = np.sum(b * nv, axis=1)
        ln = np.linalg.norm(nn, axis=-1, keepdims=True)
        normal[hit] = np.where(ln > 0, nn / np.where(ln > 0, ln, 1.0), 0.0)
        material[hit] = prims.material[n]
    return GBuffer(depth.reshape(h, w), prim.reshape(h, w), bary.reshape(h, w, 3),
                   normal.reshape(h, w, 3), material.reshape(h, w),
                   samples.times.reshape(h, w).copy(), position.reshape(h, w, 3), samples.display)


def bound_primitives(prims, camera, config):
    """Pixel-space bound polygons (one per primitive) for the config's method."""
    fmap = config.active_fmap
    scan = config.active_scan
    extent = (1.0, 1.0)
    if fmap is not None and not fmap.is_identity:
        lo, hi = display_extent(fmap)
        extent = tuple(np.maximum(np.abs(lo), np.abs(hi)))
    polys = []
    for i in range(len(prims)):
        tri = prims.triangle(i)
        if near_plane_split(tri, camera.near, camera, extent).status == "culled":
            polys.append(np.zeros((0, 2)))
            continue
        b = compute_bound(config.bound, tri, camera, scan, fmap, config.size, config.guard_px)
        polys.append(ndc_to_pixel(b.vertices, config.width, config.height) if not b.is_empty
                     else np.zeros((0, 2)))
    return polys


def rasterize(scene, config, prims=None):
    """Bounded per-pixel ray casting.  Returns ``(GBuffer, STEStats)``."""
    prims = scene.primitives() if prims is None else prims
    camera = scene.camera
    samples = pixel_samples(config, camera)
    polys = bound_primitives(prims, camera, config)
    planes, nplanes, rows = kernels.pack_bounds(polys, config.height)
    cam0 = np.ascontiguousarray(prims.cam[:, 0])
    cam1 = np.ascontiguousarray(prims.cam[:, 1])
    depth, prim, bu, bv, tested, passed = kernels.rasterize_bounded(
        samples.dirs, samples.times, config.width, config.height, cam0, cam1,
        planes, nplanes, rows, camera.near)
    gbuf = resolve_gbuffer(depth, prim, bu, bv, samples, prims, (config.height, config.width))
    return gbuf, STEStats(np.arange(len(prims)), tested, passed, config.bound)


def _normalize(v):
    ln = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(ln > 0, v / np.where(ln > 0, ln, 1.0), 0.0)


def shade(gbuf, scene, config=None, rolling_shading=None):
    """Blinn-Phong with eye and lights blended to each pixel's time.

    With ``rolling_shading`` off every pixel is lit as at t = 0.  Returns a
    linear float RGB image; empty pixels get the scene's clear colour.
    """
    if rolling_shading is None:
        rolling_shading = True if config is None else config.rolling_shading
    h, w = gbuf.shape
    img = np.empty((h, w, 3))
    img[:] = np.asarray(scene.clear_color, dtype=np.float64)
    hit = gbuf.coverage
    if not np.any(hit):
        return img
    t = gbuf.pixel_time[hit][:, None] if rolling_shading else np.zeros((int(hit.sum()), 1))
    pos = gbuf.position[hit]
    nrm = gbuf.normal[hit]
    mats = gbuf.material[hit]
    albedo = np.array([m.albedo for m in scene.materials], dtype=np.float64)[mats]
    ks = np.array([m.specular for m in scene.materials], dtype=np.float64)[mats][:, None]
    shin = np.array([m.shininess for m in scene.materials], dtype=np.float64)[mats][:, None]
    e0 = np.linalg.inv(scene.view.start)[:3, 3]
    e1 = np.linalg.inv(scene.view.end)[:3, 3]
    eye = (1.0 - t) * e0 + t * e1
    V = _normalize(eye - pos)
    facing = np.sum(nrm * V, axis=-1, keepdims=True)
    N = np.where(facing < 0.0, -nrm, nrm)
    col = scene.ambient * albedo
    for light in scene.lights:
        lp = (1.0 - t) * light.start + t * light.end
        L = _normalize(lp - pos)
        ndl = np.sum(N * L, axis=-1, keepdims=True)
        diff = np.maximum(ndl, 0.0)
        H = _normalize(L + V)
        ndh = np.maximum(np.sum(N * H, axis=-1, keepdims=True), 0.0)
        spec = np.where(ndl > 0.0, ndh ** shin, 0.0)
        col = col + light.intensity * (albedo * diff + ks * spec)
    img[hit] = col
    return img


@dataclass
class RenderResult:
    image: np.ndarray  # display image (unfoveated when requested)
    buffer: np.ndarray  # shaded buffer before unfoveation
    gbuffer: GBuffer
    stats: STEStats


def finish(gbuf, scene, config):
    buf = shade(gbuf, scene, config)
    img = buf
    fmap = config.active_fmap
    if fmap is not None and config.unfoveate:
        f = unfoveate_mip if config.unfoveate == "mip" else unfoveate_gather
        img = f(buf, fmap, config.size)
    return buf, img


def render(scene, config):
    gbuf, stats = rasterize(scene, config)
    buf, img = finish(gbuf, scene, config)
    return RenderResult(img, buf, gbuf, stats)
