"""Perceptual rasterization: foveated, rolling and joint image formation."""
from ._backend import BACKEND
from .bounds import BoundPoly, ScanAxis, compute_bound, convex_hull_2d
from .foveation import FoveationMap, LensModel, compose_lens
from .geometry import Camera, SpaceTimeTriangle, TimeVaryingTransform
from .metrics import STEStats, foveal_ssim, masked_ssim
from .pipeline import GBuffer, RenderConfig, rasterize, render, shade
from .scene import Scene, load_scene

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundPoly", "Camera", "FoveationMap", "GBuffer", "LensModel", "RenderConfig",
    "STEStats", "ScanAxis", "Scene", "SpaceTimeTriangle", "TimeVaryingTransform", "compose_lens",
    "compute_bound", "convex_hull_2d", "foveal_ssim", "load_scene", "masked_ssim", "rasterize",
    "render", "shade",
]
