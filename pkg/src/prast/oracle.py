"""Brute-force reference: every pixel's ray against every primitive.

Shares the pixel samples, intersection routine and tie-break with the
rasterizer, so for sound bounds the two agree bit for bit.
"""
import numpy as np

from . import kernels
from .pipeline import RenderResult, finish, pixel_samples, resolve_gbuffer
from .metrics import STEStats


def trace(scene, config, prims=None):
    """G-buffer of the nearest hit per pixel, no bounds, no acceleration."""
    prims = scene.primitives() if prims is None else prims
    camera = scene.camera
    samples = pixel_samples(config, camera)
    depth, prim, bu, bv = kernels.trace_all(
        samples.dirs, samples.times, np.ascontiguousarray(prims.cam[:, 0]),
        np.ascontiguousarray(prims.cam[:, 1]), camera.near)
    return resolve_gbuffer(depth, prim, bu, bv, samples, prims, (config.height, config.width))


def render(scene, config):
    gbuf = trace(scene, config)
    buf, img = finish(gbuf, scene, config)
    n = int(gbuf.prim_id.max()) + 1 if gbuf.prim_id.size else 0
    empty = np.zeros(n, dtype=np.int64)
    return RenderResult(img, buf, gbuf, STEStats(np.arange(n), empty, empty, "oracle"))


def coverage_mask(tri, config, camera):
    """(H, W) boolean: pixels whose ray hits ``tri`` at their own time."""
    samples = pixel_samples(config, camera)
    m = kernels.coverage_masks(samples.dirs, samples.times, tri.cam[0][None].copy(),
                               tri.cam[1][None].copy(), camera.near)
    return m[0].reshape(config.height, config.width)


def coverage_set(tri, config, camera):
    """Set of (column, row) pixels hit by the triangle, ignoring occlusion."""
    rows, cols = np.nonzero(coverage_mask(tri, config, camera))
    return set(zip(cols.tolist(), rows.tolist()))
